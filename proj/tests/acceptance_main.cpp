// Acceptance suite: one criterion per function, one PASS/FAIL line each.
// Exit code is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "metric_reference.hpp"
#include "oracle_support.hpp"
#include "test_support.hpp"
#include "ugg/ugg.hpp"

namespace {

namespace fs = std::filesystem;

struct Outcome {
    bool pass = true;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(double v) {
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%.3g", v);
    return buffer;
}

// ---------------------------------------------------------------
// 1. Closed-form updates match the numeric minimizer of the exact
//    KL objective, per coordinate, on full graphs.
// ---------------------------------------------------------------
Outcome criterion_coordinate_optimality() {
    const auto start = std::chrono::steady_clock::now();
    ugg::Rng rng(2024);
    double worst = 0.0;
    const int instances = 100;
    for (int run = 0; run < instances; ++run) {
        const int n = 2 + static_cast<int>(rng.below(2));
        const int c = 2 + static_cast<int>(rng.below(2));
        const ugg::ProblemInstance instance = ugg_test::random_instance(rng, n, c, 0.3);
        ugg::UggConfig config;
        config.temp_gallery = rng.uniform(0.5, 3.0);
        config.temp_tracklet = rng.uniform(0.5, 3.0);
        config.alpha_positive = rng.uniform(0.0, 3.0);
        config.alpha_negative = rng.uniform(0.0, 2.0);
        config.iterations = 1;
        config.cannot_link_masks_positive = false;
        config.update_semantics = ugg::UpdateSemantics::kBidirectional;
        const ugg::Graph graph = ugg::build_graph(instance, config);
        const ugg::JointTable table = ugg::enumerate_joint(instance, config, graph);
        const ugg::BeliefState state = ugg_test::random_state(rng, instance, graph);

        const ugg::Matrix closed_nodes = ugg::update_sample_nodes(state, instance, config, graph);
        for (int i = 0; i < n; ++i) {
            const auto numeric = ugg_test::simplex_minimize(c, [&](const std::vector<double>& q) {
                ugg::BeliefState candidate = state;
                for (int l = 0; l < c; ++l)
                    candidate.node_beliefs(static_cast<std::size_t>(l),
                                           static_cast<std::size_t>(i)) =
                        q[static_cast<std::size_t>(l)];
                return ugg::kl_to_exact(candidate, table);
            });
            for (int l = 0; l < c; ++l)
                worst = std::max(worst, std::abs(closed_nodes(static_cast<std::size_t>(l),
                                                              static_cast<std::size_t>(i)) -
                                                 numeric[static_cast<std::size_t>(l)]));
        }

        const std::vector<double> closed_gates =
            ugg::update_positive_gates(state, instance, config, graph);
        for (int i = 0; i < n; ++i) {
            const int deg = graph.out_degree(i);
            if (deg == 0) continue;
            const int base = graph.edge_offset[static_cast<std::size_t>(i)];
            const auto numeric =
                ugg_test::simplex_minimize(deg, [&](const std::vector<double>& block) {
                    ugg::BeliefState candidate = state;
                    for (int p = 0; p < deg; ++p)
                        candidate.positive_gate_probs[static_cast<std::size_t>(base + p)] =
                            block[static_cast<std::size_t>(p)];
                    return ugg::kl_to_exact(candidate, table);
                });
            for (int p = 0; p < deg; ++p)
                worst = std::max(worst,
                                 std::abs(closed_gates[static_cast<std::size_t>(base + p)] -
                                          numeric[static_cast<std::size_t>(p)]));
        }
    }
    const double elapsed = seconds_since(start);
    return {worst < 1e-6 && elapsed < 60.0,
            "worst coordinate gap " + fmt(worst) + " over " + std::to_string(instances) +
                " instances, " + fmt(elapsed) + "s"};
}

// ---------------------------------------------------------------
// 2. Analytic gradients vs central finite differences.
// ---------------------------------------------------------------
Outcome criterion_gradients() {
    const auto start = std::chrono::steady_clock::now();
    ugg::Rng rng(4040);
    double worst_shallow = 0.0;  // K <= 2
    double worst_deep = 0.0;     // K == 4
    const int instances = 56;
    const int ks[] = {0, 1, 2, 4};
    for (int run = 0; run < instances; ++run) {
        const int n = 2 + static_cast<int>(rng.below(4));
        const int c = 2 + static_cast<int>(rng.below(3));
        const ugg::ProblemInstance instance = ugg_test::random_instance(rng, n, c, 0.25);
        ugg::UggConfig config = ugg_test::random_config(rng);
        config.iterations = ks[run % 4];
        config.gate_mode = (run % 2 == 0) ? ugg::GateMode::kAdaptiveGates
                                          : ugg::GateMode::kFixedGates;
        config.update_semantics = (run % 3 == 0) ? ugg::UpdateSemantics::kBidirectional
                                                 : ugg::UpdateSemantics::kOutgoingOnly;

        ugg::Labels labels = ugg::Labels::none(n);
        std::vector<int> ids(static_cast<std::size_t>(n));
        ugg::Matrix pair(static_cast<std::size_t>(n), static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i)
            ids[static_cast<std::size_t>(i)] =
                static_cast<int>(rng.below(static_cast<std::uint64_t>(c)));
        for (int i = 0; i < n; ++i) {
            if (rng.bernoulli(0.8)) labels.class_label[static_cast<std::size_t>(i)] =
                ids[static_cast<std::size_t>(i)];
            for (int j = 0; j < n; ++j)
                pair(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) =
                    ids[static_cast<std::size_t>(i)] == ids[static_cast<std::size_t>(j)] ? 1.0
                                                                                         : 0.0;
        }
        labels.pair_label = pair;

        const ugg::FiniteDifferenceReport report =
            ugg::finite_difference_check(instance, config, ugg::LossConfig{}, labels, 1e-5);
        if (config.iterations == 4)
            worst_deep = std::max(worst_deep, report.max_rel());
        else
            worst_shallow = std::max(worst_shallow, report.max_rel());
    }
    const double elapsed = seconds_since(start);
    return {worst_shallow < 1e-5 && worst_deep < 1e-4 && elapsed < 120.0,
            "K<=2 worst " + fmt(worst_shallow) + ", K=4 worst " + fmt(worst_deep) + ", " +
                std::to_string(instances) + " instances, " + fmt(elapsed) + "s"};
}

// ---------------------------------------------------------------
// 3. Degeneracy identities.
// ---------------------------------------------------------------
Outcome criterion_degeneracy() {
    ugg::Rng rng(9090);
    double worst = 0.0;
    bool rank_equal = true;

    for (int run = 0; run < 10; ++run) {
        const int n = 2 + static_cast<int>(rng.below(6));
        const int c = 2 + static_cast<int>(rng.below(4));
        const ugg::ProblemInstance instance = ugg_test::random_instance(rng, n, c);
        ugg::UggConfig config = ugg_test::random_config(rng);
        config.alpha_positive = 0.0;
        config.alpha_negative = 0.0;
        const ugg::Graph graph = ugg::build_graph(instance, config);
        const ugg::BeliefState init = ugg::init_state(instance, config, graph);
        for (int k : {0, 1, 4}) {
            config.iterations = k;
            worst = std::max(worst, max_abs_diff(ugg::run_inference(instance, config).refined_sim,
                                                 init.node_beliefs));
        }

        ugg::UggConfig with_messages = ugg_test::random_config(rng);
        with_messages.iterations = 0;
        const ugg::Graph graph2 = ugg::build_graph(instance, with_messages);
        worst = std::max(worst,
                         max_abs_diff(ugg::run_inference(instance, with_messages).refined_sim,
                                      ugg::init_state(instance, with_messages, graph2).node_beliefs));
    }

    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        ugg::ScenarioParams params;
        params.seed = seed;
        params.num_tracklets = 16;
        params.num_galleries = 5;
        const ugg::Scenario scenario = ugg::generate(params);
        ugg::UggConfig base;
        const ugg::UggConfig face =
            ugg::apply_ablation_flags(base, ugg::AblationFlags::parse({}));
        const ugg::Matrix refined = ugg::run_inference(scenario.instance, face).refined_sim;
        const ugg::Matrix& raw = scenario.instance.gallery_tracklet_sim;
        for (std::size_t i = 0; i < refined.cols(); ++i) {
            std::vector<double> raw_col(raw.rows()), ref_col(refined.rows());
            for (std::size_t l = 0; l < raw.rows(); ++l) {
                raw_col[l] = raw(l, i);
                ref_col[l] = refined(l, i);
            }
            rank_equal = rank_equal && ugg::detail::ranked_indices(raw_col) ==
                                           ugg::detail::ranked_indices(ref_col);
        }
    }
    return {worst <= 1e-12 && rank_equal,
            "max deviation " + fmt(worst) + ", rank equality " +
                (rank_equal ? "exact" : "violated")};
}

// ---------------------------------------------------------------
// 4. Structural invariants on every round, permutation equivariance.
// ---------------------------------------------------------------
Outcome criterion_invariants() {
    ugg::Rng rng(5551);
    int rounds_checked = 0;
    for (int run = 0; run < 40; ++run) {
        const int n = 2 + static_cast<int>(rng.below(6));
        const int c = 2 + static_cast<int>(rng.below(4));
        const ugg::ProblemInstance instance = ugg_test::random_instance(rng, n, c);
        ugg::UggConfig config = ugg_test::random_config(rng);
        config.iterations = 1 + static_cast<int>(rng.below(4));
        config.gate_mode = rng.bernoulli(0.5) ? ugg::GateMode::kAdaptiveGates
                                              : ugg::GateMode::kFixedGates;
        config.update_semantics = rng.bernoulli(0.5) ? ugg::UpdateSemantics::kOutgoingOnly
                                                     : ugg::UpdateSemantics::kBidirectional;
        if (rng.bernoulli(0.3))
            config.neighborhood_policy =
                ugg::NeighborhoodPolicy::top_k(1 + static_cast<int>(rng.below(3)));
        else if (rng.bernoulli(0.3))
            config.neighborhood_policy = ugg::NeighborhoodPolicy::threshold(rng.uniform(-0.5, 0.9));
        const ugg::Graph graph = ugg::build_graph(instance, config);
        const ugg::InferenceResult result = ugg::run_inference(instance, config, graph, true);
        for (const ugg::BeliefState& state : result.trace) {
            const auto violation = ugg::state_invariant_violation(state, instance, graph);
            if (violation.has_value()) return {false, *violation};
            ++rounds_checked;
        }
    }

    double worst_perm = 0.0;
    for (int run = 0; run < 10; ++run) {
        const int n = 3 + static_cast<int>(rng.below(4));
        const int c = 2 + static_cast<int>(rng.below(4));
        const ugg::ProblemInstance instance = ugg_test::random_instance(rng, n, c);
        ugg::UggConfig config = ugg_test::random_config(rng);
        config.iterations = 1 + static_cast<int>(rng.below(3));

        std::vector<int> tperm(static_cast<std::size_t>(n)), gperm(static_cast<std::size_t>(c));
        for (int i = 0; i < n; ++i) tperm[static_cast<std::size_t>(i)] = i;
        for (int l = 0; l < c; ++l) gperm[static_cast<std::size_t>(l)] = l;
        for (int i = n - 1; i > 0; --i)
            std::swap(tperm[static_cast<std::size_t>(i)],
                      tperm[rng.below(static_cast<std::uint64_t>(i + 1))]);
        for (int l = c - 1; l > 0; --l)
            std::swap(gperm[static_cast<std::size_t>(l)],
                      gperm[rng.below(static_cast<std::uint64_t>(l + 1))]);

        ugg::ProblemInstance permuted = ugg_test::zero_instance(c, n);
        for (int l = 0; l < c; ++l)
            for (int i = 0; i < n; ++i)
                permuted.gallery_tracklet_sim(
                    static_cast<std::size_t>(gperm[static_cast<std::size_t>(l)]),
                    static_cast<std::size_t>(tperm[static_cast<std::size_t>(i)])) =
                    instance.gallery_tracklet_sim(static_cast<std::size_t>(l),
                                                  static_cast<std::size_t>(i));
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const auto pi = static_cast<std::size_t>(tperm[static_cast<std::size_t>(i)]);
                const auto pj = static_cast<std::size_t>(tperm[static_cast<std::size_t>(j)]);
                permuted.tracklet_tracklet_sim(pi, pj) = instance.tracklet_tracklet_sim(
                    static_cast<std::size_t>(i), static_cast<std::size_t>(j));
                permuted.cannot_link(pi, pj) = instance.cannot_link(static_cast<std::size_t>(i),
                                                                    static_cast<std::size_t>(j));
            }
        const ugg::Matrix base = ugg::run_inference(instance, config).refined_sim;
        const ugg::Matrix perm = ugg::run_inference(permuted, config).refined_sim;
        for (int l = 0; l < c; ++l)
            for (int i = 0; i < n; ++i)
                worst_perm = std::max(
                    worst_perm,
                    std::abs(base(static_cast<std::size_t>(l), static_cast<std::size_t>(i)) -
                             perm(static_cast<std::size_t>(gperm[static_cast<std::size_t>(l)]),
                                  static_cast<std::size_t>(tperm[static_cast<std::size_t>(i)]))));
    }
    return {worst_perm <= 1e-12,
            std::to_string(rounds_checked) + " rounds clean, permutation gap " + fmt(worst_perm)};
}

// ---------------------------------------------------------------
// 5. Gate monotonicity, 1000 randomized cases, zero violations.
// ---------------------------------------------------------------
Outcome criterion_gate_monotonicity() {
    ugg::Rng rng(7777);
    int checked = 0;
    int violations = 0;
    while (checked < 1000) {
        const int n = 3 + static_cast<int>(rng.below(4));
        const int c = 2 + static_cast<int>(rng.below(3));
        ugg::ProblemInstance instance = ugg_test::random_instance(rng, n, c, 0.0);
        ugg::UggConfig config;
        config.temp_gallery = rng.uniform(0.5, 2.5);
        config.temp_tracklet = rng.uniform(0.5, 2.5);
        config.alpha_positive = rng.uniform(0.1, 5.0);
        config.alpha_negative = 0.0;
        config.cannot_link_masks_positive = false;
        const ugg::Graph graph = ugg::build_graph(instance, config);
        const ugg::BeliefState state = ugg_test::random_state(rng, instance, graph);

        const int i = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
        const int deg = graph.out_degree(i);
        const int p = static_cast<int>(rng.below(static_cast<std::uint64_t>(deg)));
        int q = static_cast<int>(rng.below(static_cast<std::uint64_t>(deg)));
        if (p == q) continue;
        const int j = graph.neighbors[static_cast<std::size_t>(i)][static_cast<std::size_t>(p)];
        const int k = graph.neighbors[static_cast<std::size_t>(i)][static_cast<std::size_t>(q)];
        // Equalize the two similarities so only the belief overlaps differ.
        const double s = instance.tracklet_tracklet_sim(static_cast<std::size_t>(i),
                                                        static_cast<std::size_t>(j));
        instance.tracklet_tracklet_sim(static_cast<std::size_t>(i), static_cast<std::size_t>(k)) = s;
        instance.tracklet_tracklet_sim(static_cast<std::size_t>(k), static_cast<std::size_t>(i)) = s;

        double overlap_j = 0.0, overlap_k = 0.0;
        for (int l = 0; l < c; ++l) {
            overlap_j += state.node_beliefs(static_cast<std::size_t>(l), static_cast<std::size_t>(i)) *
                         state.node_beliefs(static_cast<std::size_t>(l), static_cast<std::size_t>(j));
            overlap_k += state.node_beliefs(static_cast<std::size_t>(l), static_cast<std::size_t>(i)) *
                         state.node_beliefs(static_cast<std::size_t>(l), static_cast<std::size_t>(k));
        }
        if (std::abs(overlap_j - overlap_k) < 1e-9) continue;

        const std::vector<double> updated =
            ugg::update_positive_gates(state, instance, config, graph);
        const double pi_j = updated[static_cast<std::size_t>(graph.edge_index(i, p))];
        const double pi_k = updated[static_cast<std::size_t>(graph.edge_index(i, q))];
        const bool ordered = overlap_j > overlap_k ? pi_j > pi_k : pi_k > pi_j;
        if (!ordered) ++violations;
        ++checked;
    }
    return {violations == 0,
            std::to_string(violations) + " violations in " + std::to_string(checked) + " cases"};
}

// ---------------------------------------------------------------
// 6. Synthetic ablation direction on the desk profile.
// ---------------------------------------------------------------
Outcome criterion_ablation_direction() {
    const auto start = std::chrono::steady_clock::now();
    std::vector<ugg::Scenario> scenarios;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        ugg::ScenarioParams params;  // desk profile defaults
        params.seed = seed;
        scenarios.push_back(ugg::generate(params));
    }
    const std::vector<ugg::AblationFlags> flags = ugg::standard_ablation_flags();
    const std::vector<ugg::AblationRow> rows =
        ugg::run_ablation(scenarios, ugg::synthetic_benchmark_config(), flags, {1});

    std::vector<double> rank1;
    std::string detail;
    for (const ugg::AblationRow& row : rows) {
        rank1.push_back(row.mean_report.topk_accuracy.at(1));
        detail += row.flags.name() + "=" + fmt(rank1.back()) + " ";
    }
    const double face = rank1[0];
    const double pg = rank1[1];
    const double full = rank1.back();
    bool pass = face < pg;
    for (double v : rank1) pass = pass && full >= v;
    pass = pass && (full - face >= 0.05);
    const double elapsed = seconds_since(start);
    pass = pass && elapsed < 300.0;
    return {pass, detail + fmt(elapsed) + "s"};
}

// ---------------------------------------------------------------
// 7. Ranking metrics equal the brute-force referee exactly.
// ---------------------------------------------------------------
Outcome criterion_metric_oracles() {
    ugg::Rng rng(6161);
    int compared = 0;
    for (int run = 0; run < 250 && compared < 200; ++run) {
        const int n = 2 + static_cast<int>(rng.below(7));
        const int c = 2 + static_cast<int>(rng.below(4));
        ugg::Matrix scores(static_cast<std::size_t>(c), static_cast<std::size_t>(n));
        for (double& v : scores.data())
            v = rng.bernoulli(0.25) ? 0.0 : rng.uniform(-1.0, 1.0);  // deliberate ties
        std::vector<int> truth(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i)
            truth[static_cast<std::size_t>(i)] =
                static_cast<int>(rng.below(static_cast<std::uint64_t>(c)));
        const auto relevance = ugg::relevance_from_true_identity(truth, c);
        bool any = false;
        for (const auto& r : relevance) any = any || !r.empty();
        if (!any) continue;

        if (ugg::mean_average_precision(scores, relevance) !=
            ugg_test::reference_map(scores, relevance))
            return {false, "mAP mismatch"};
        for (int k = 1; k <= n; ++k)
            if (ugg::recall_at_k(scores, relevance, k) !=
                ugg_test::reference_recall(scores, relevance, k))
                return {false, "recall mismatch at k=" + std::to_string(k)};
        for (int k = 1; k <= c; ++k)
            if (ugg::topk_accuracy(scores, truth, k) != ugg_test::reference_topk(scores, truth, k))
                return {false, "topk mismatch at k=" + std::to_string(k)};
        ++compared;
    }
    return {compared >= 200, std::to_string(compared) + " instances, exact equality"};
}

// ---------------------------------------------------------------
// 8. Determinism and I/O round trips.
// ---------------------------------------------------------------
Outcome criterion_determinism_io() {
    const fs::path root = fs::temp_directory_path() / "ugg_acceptance_io";
    fs::remove_all(root);
    fs::create_directories(root);
    const auto slurp = [](const fs::path& path) {
        std::ifstream in(path, std::ios::binary);
        std::stringstream buffer;
        buffer << in.rdbuf();
        return buffer.str();
    };

    ugg::JobConfig job;
    ugg::ScenarioParams params;
    params.seed = 20240801;
    params.num_tracklets = 18;
    params.num_galleries = 5;
    job.scenario = params;
    job.emit_trace = true;
    job.emit_plots = true;
    job.ugg.iterations = 3;

    job.output_dir = (root / "a").string();
    const ugg::RunJobResult first = ugg::run_job(job);
    job.output_dir = (root / "b").string();
    const ugg::RunJobResult second = ugg::run_job(job);
    bool identical = first.written_files.size() == second.written_files.size();
    for (std::size_t i = 0; identical && i < first.written_files.size(); ++i)
        identical = slurp(first.written_files[i]) == slurp(second.written_files[i]);
    if (!identical) {
        fs::remove_all(root);
        return {false, "repeated runs differ"};
    }

    ugg::Rng rng(8181);
    for (int round = 0; round < 50; ++round) {
        ugg::Matrix m(1 + rng.below(6), 1 + rng.below(6));
        for (double& v : m.data())
            v = rng.uniform(-1.0, 1.0) * std::pow(10.0, rng.uniform(-30.0, 30.0));
        if (round == 0) {
            m(0, 0) = 1e308;
            m.data().back() = 5e-324;
        }
        const std::string path = (root / "roundtrip.mat").string();
        ugg::write_matrix(path, m);
        const ugg::Matrix back = ugg::read_matrix(path);
        if (!(back == m)) {
            fs::remove_all(root);
            return {false, "matrix round-trip not bit-exact"};
        }
    }

    const std::vector<ugg::BeliefState> trace =
        ugg::parse_trace(slurp(root / "a" / "trace.json"));
    const ugg::InferenceResult direct = ugg::run_inference(
        ugg::generate(params).instance, job.ugg, true);
    bool trace_exact = trace.size() == direct.trace.size();
    for (std::size_t t = 0; trace_exact && t < trace.size(); ++t)
        trace_exact = trace[t].node_beliefs == direct.trace[t].node_beliefs &&
                      trace[t].positive_gate_probs == direct.trace[t].positive_gate_probs;
    if (!trace_exact) {
        fs::remove_all(root);
        return {false, "trace JSON round-trip lost precision"};
    }

    const std::string report_json = slurp(root / "a" / "report.json");
    const ugg::RankingReport parsed = ugg::parse_ranking_report(report_json);
    const bool canonical = ugg::ranking_report_to_json(parsed) == report_json;
    fs::remove_all(root);
    if (!canonical) return {false, "report JSON canonical form not a fixed point"};
    return {true, "byte-identical runs; matrix/trace round-trips bit-exact; report canonical"};
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria = {
        {"coordinate-optimality oracle", criterion_coordinate_optimality},
        {"gradient correctness vs finite differences", criterion_gradients},
        {"degeneracy identities", criterion_degeneracy},
        {"structural invariants and equivariance", criterion_invariants},
        {"gate monotonicity", criterion_gate_monotonicity},
        {"synthetic ablation direction", criterion_ablation_direction},
        {"metric oracles", criterion_metric_oracles},
        {"determinism and I/O round trips", criterion_determinism_io},
    };

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome outcome;
        try {
            outcome = criteria[i].run();
        } catch (const std::exception& e) {
            outcome = {false, std::string("exception: ") + e.what()};
        }
        if (!outcome.pass) ++failures;
        std::cout << (outcome.pass ? "[PASS]" : "[FAIL]") << " criterion " << (i + 1) << ": "
                  << criteria[i].name << " — " << outcome.detail << "\n";
    }
    if (failures == 0)
        std::cout << "all " << criteria.size() << " acceptance criteria passed\n";
    else
        std::cout << failures << " acceptance criteria failed\n";
    return failures;
}
