// Command-line front end: infer / synth / eval / ablate / gradcheck.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "ugg/ugg.hpp"

namespace {

struct UggConfigCli {
    std::optional<double> temp_gallery, temp_tracklet, alpha_positive, alpha_negative;
    std::optional<int> iterations;
    std::optional<std::string> policy, gate_mode, semantics;
    std::optional<bool> mask_cannot_link;

    void attach(CLI::App& app) {
        app.add_option("--temp-gallery", temp_gallery, "unary temperature (> 0)");
        app.add_option("--temp-tracklet", temp_tracklet, "gate temperature (> 0)");
        app.add_option("--alpha-positive", alpha_positive, "positive message weight (>= 0)");
        app.add_option("--alpha-negative", alpha_negative, "negative message weight (>= 0)");
        app.add_option("--iterations", iterations, "message-passing rounds (>= 0)");
        app.add_option("--policy", policy, "full | top_k:<k> | threshold:<tau>");
        app.add_option("--gate-mode", gate_mode, "fixed_gates | adaptive_gates");
        app.add_option("--semantics", semantics, "outgoing_only | bidirectional");
        app.add_option("--mask-cannot-link", mask_cannot_link,
                       "force positive gates closed on cannot-link edges");
    }

    void apply(ugg::UggConfig& config) const {
        if (temp_gallery) config.temp_gallery = *temp_gallery;
        if (temp_tracklet) config.temp_tracklet = *temp_tracklet;
        if (alpha_positive) config.alpha_positive = *alpha_positive;
        if (alpha_negative) config.alpha_negative = *alpha_negative;
        if (iterations) config.iterations = *iterations;
        if (policy) config.neighborhood_policy = ugg::parse_policy_string(*policy);
        if (gate_mode) config.gate_mode = ugg::parse_gate_mode(*gate_mode);
        if (semantics) config.update_semantics = ugg::parse_update_semantics(*semantics);
        if (mask_cannot_link) config.cannot_link_masks_positive = *mask_cannot_link;
        ugg::validate_config(config);
    }
};

struct ScenarioCli {
    std::optional<int> num_galleries, num_tracklets;
    std::optional<std::uint64_t> seed;
    std::optional<double> low_quality_fraction, face_signal, face_noise_sigma;
    std::optional<double> body_same_mean, body_diff_mean, confound_rate, cooccurrence_rate;

    void attach(CLI::App& app) {
        app.add_option("--num-galleries", num_galleries, "gallery subjects (>= 2)");
        app.add_option("--num-tracklets", num_tracklets, "tracklets (>= 1)");
        app.add_option("--seed", seed, "generator seed");
        app.add_option("--low-quality-fraction", low_quality_fraction,
                       "fraction of tracklets without face signal");
        app.add_option("--face-signal", face_signal, "true-gallery margin for high quality");
        app.add_option("--face-noise-sigma", face_noise_sigma, "gaussian noise on face sims");
        app.add_option("--body-same-mean", body_same_mean, "body sim mean, same identity");
        app.add_option("--body-diff-mean", body_diff_mean, "body sim mean, different identity");
        app.add_option("--confound-rate", confound_rate,
                       "rate of misleading same-level body sims");
        app.add_option("--cooccurrence-rate", cooccurrence_rate,
                       "cannot-link rate among different-identity pairs");
    }

    void apply(ugg::ScenarioParams& params) const {
        if (num_galleries) params.num_galleries = *num_galleries;
        if (num_tracklets) params.num_tracklets = *num_tracklets;
        if (seed) params.seed = *seed;
        if (low_quality_fraction) params.low_quality_fraction = *low_quality_fraction;
        if (face_signal) params.face_signal = *face_signal;
        if (face_noise_sigma) params.face_noise_sigma = *face_noise_sigma;
        if (body_same_mean) params.body_same_identity_mean = *body_same_mean;
        if (body_diff_mean) params.body_diff_identity_mean = *body_diff_mean;
        if (confound_rate) params.confound_rate = *confound_rate;
        if (cooccurrence_rate) params.cooccurrence_rate = *cooccurrence_rate;
        ugg::validate_scenario_params(params);
    }
};

std::vector<ugg::AblationFlags> parse_flag_sets(const std::string& text) {
    // "PG;PGcl,NG;PGcl,NG,aG" — semicolon-separated sets, empty set = FACE.
    std::vector<ugg::AblationFlags> sets;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t end = text.find(';', start);
        const std::string piece =
            text.substr(start, end == std::string::npos ? std::string::npos : end - start);
        std::vector<std::string> names;
        std::size_t it = 0;
        while (it <= piece.size() && !piece.empty()) {
            const std::size_t comma = piece.find(',', it);
            const std::string name =
                piece.substr(it, comma == std::string::npos ? std::string::npos : comma - it);
            if (!name.empty()) names.push_back(name);
            if (comma == std::string::npos) break;
            it = comma + 1;
        }
        sets.push_back(ugg::AblationFlags::parse(names));
        if (end == std::string::npos) break;
        start = end + 1;
    }
    return sets;
}

int run_infer(const std::optional<std::string>& config_path,
              const std::optional<std::string>& gallery, const std::optional<std::string>& tracklet,
              const std::optional<std::string>& cannot_link,
              const std::optional<std::string>& true_identity, const UggConfigCli& ugg_cli,
              const std::optional<std::string>& out, bool emit_trace, bool emit_plots,
              const std::vector<int>& ks) {
    ugg::JobConfig job;
    if (config_path) job = ugg::load_job_config(*config_path);
    if (gallery || tracklet) {
        ugg::MatrixInputs inputs;
        if (job.inputs) inputs = *job.inputs;
        if (gallery) inputs.gallery_sim = *gallery;
        if (tracklet) inputs.tracklet_sim = *tracklet;
        if (cannot_link) inputs.cannot_link = cannot_link;
        if (true_identity) inputs.true_identity = true_identity;
        job.inputs = inputs;
        job.scenario.reset();
    }
    ugg_cli.apply(job.ugg);
    if (out) job.output_dir = *out;
    if (emit_trace) job.emit_trace = true;
    if (emit_plots) job.emit_plots = true;
    if (!ks.empty()) job.ranking_ks = ks;

    const ugg::RunJobResult result = ugg::run_job(job);
    for (const std::string& path : result.written_files) std::cout << path << "\n";
    return 0;
}

int run_gradcheck(std::uint64_t seed, int count, int max_tracklets, int max_galleries,
                  const UggConfigCli& ugg_cli, double step, double tolerance) {
    ugg::Rng rng(seed);
    double worst = 0.0;
    for (int run = 0; run < count; ++run) {
        const int n = 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(
                              std::max(1, max_tracklets - 1))));
        const int c = 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(
                              std::max(1, max_galleries - 1))));
        ugg::ProblemInstance instance;
        instance.num_galleries = c;
        instance.num_tracklets = n;
        instance.gallery_tracklet_sim = ugg::Matrix(static_cast<std::size_t>(c),
                                                    static_cast<std::size_t>(n));
        for (double& v : instance.gallery_tracklet_sim.data()) v = rng.uniform(-1.0, 1.0);
        instance.tracklet_tracklet_sim = ugg::Matrix(static_cast<std::size_t>(n),
                                                     static_cast<std::size_t>(n));
        instance.cannot_link = ugg::Matrix(static_cast<std::size_t>(n),
                                           static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                const double s = rng.uniform(-1.0, 1.0);
                instance.tracklet_tracklet_sim(static_cast<std::size_t>(i),
                                               static_cast<std::size_t>(j)) = s;
                instance.tracklet_tracklet_sim(static_cast<std::size_t>(j),
                                               static_cast<std::size_t>(i)) = s;
                if (rng.bernoulli(0.25)) {
                    instance.cannot_link(static_cast<std::size_t>(i),
                                         static_cast<std::size_t>(j)) = 1.0;
                    instance.cannot_link(static_cast<std::size_t>(j),
                                         static_cast<std::size_t>(i)) = 1.0;
                }
            }

        ugg::UggConfig config;
        config.temp_gallery = rng.uniform(0.5, 2.5);
        config.temp_tracklet = rng.uniform(0.5, 2.5);
        config.alpha_positive = rng.uniform(0.5, 3.0);
        config.alpha_negative = rng.uniform(0.0, 2.0);
        config.iterations = static_cast<int>(rng.below(5));
        config.cannot_link_masks_positive = rng.bernoulli(0.5);
        ugg_cli.apply(config);

        ugg::Labels labels = ugg::Labels::none(n);
        std::vector<int> ids(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i)
            ids[static_cast<std::size_t>(i)] = static_cast<int>(rng.below(
                static_cast<std::uint64_t>(c)));
        ugg::Matrix pair(static_cast<std::size_t>(n), static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                pair(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) =
                    ids[static_cast<std::size_t>(i)] == ids[static_cast<std::size_t>(j)] ? 1.0
                                                                                         : 0.0;
        for (int i = 0; i < n; ++i)
            if (rng.bernoulli(0.75)) labels.class_label[static_cast<std::size_t>(i)] =
                ids[static_cast<std::size_t>(i)];
        labels.pair_label = pair;

        const ugg::FiniteDifferenceReport report =
            ugg::finite_difference_check(instance, config, ugg::LossConfig{}, labels, step);
        worst = std::max(worst, report.max_rel());
        std::cout << "instance " << run << ": N=" << n << " C=" << c
                  << " K=" << config.iterations << " max_rel=" << report.max_rel() << "\n";
    }
    std::cout << "worst relative error over " << count << " instances: " << worst << "\n";
    if (worst > tolerance) {
        std::cerr << "gradcheck failed: " << worst << " > " << tolerance << "\n";
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"uncertainty-gated graph identity refinement"};
    app.require_subcommand(1);

    // ---- infer ----
    auto* infer = app.add_subcommand("infer", "refine gallery-to-tracklet similarities");
    std::optional<std::string> config_path, gallery, tracklet, cannot_link, true_identity, out;
    bool emit_trace = false, emit_plots = false;
    std::vector<int> ks;
    UggConfigCli infer_ugg;
    infer->add_option("--config", config_path, "job config JSON");
    infer->add_option("--gallery-sim", gallery, "C x N matrix file");
    infer->add_option("--tracklet-sim", tracklet, "N x N matrix file");
    infer->add_option("--cannot-link", cannot_link, "N x N binary matrix file");
    infer->add_option("--true-identity", true_identity, "1 x N identity matrix file");
    infer->add_option("--out", out, "output directory");
    infer->add_flag("--emit-trace", emit_trace, "write per-round trace.json");
    infer->add_flag("--emit-plots", emit_plots, "write SVG plots");
    infer->add_option("--ks", ks, "ranking cutoffs for the report");
    infer_ugg.attach(*infer);

    // ---- synth ----
    auto* synth = app.add_subcommand("synth", "generate a synthetic scenario");
    ScenarioCli synth_params;
    std::string synth_out = "out";
    synth_params.attach(*synth);
    synth->add_option("--out", synth_out, "output directory");

    // ---- eval ----
    auto* eval = app.add_subcommand("eval", "score a similarity matrix against ground truth");
    std::string eval_scores, eval_truth, eval_out = "out";
    std::vector<int> eval_ks{1, 3, 5};
    eval->add_option("--scores", eval_scores, "C x N score matrix file")->required();
    eval->add_option("--true-identity", eval_truth, "1 x N identity matrix file")->required();
    eval->add_option("--ks", eval_ks, "ranking cutoffs");
    eval->add_option("--out", eval_out, "output directory");

    // ---- ablate ----
    auto* ablate = app.add_subcommand("ablate", "sweep feature configurations over seeds");
    ScenarioCli ablate_params;
    UggConfigCli ablate_ugg;
    std::optional<std::string> ablate_config;
    std::string ablate_out = "out";
    std::string ablate_flag_sets;
    int num_seeds = 20;
    std::uint64_t base_seed = 1;
    bool ablate_plots = false;
    ablate->add_option("--config", ablate_config, "job config JSON with an ablation section");
    ablate_params.attach(*ablate);
    ablate_ugg.attach(*ablate);
    ablate->add_option("--flag-sets", ablate_flag_sets,
                       "semicolon-separated flag sets, e.g. ';PG;PGcl,NG,aG'");
    ablate->add_option("--num-seeds", num_seeds, "scenarios per configuration");
    ablate->add_option("--base-seed", base_seed, "seed of the first scenario");
    ablate->add_option("--out", ablate_out, "output directory");
    ablate->add_flag("--emit-plots", ablate_plots, "write SVG plot");

    // ---- gradcheck ----
    auto* gradcheck = app.add_subcommand("gradcheck",
                                         "verify analytic gradients against central differences");
    std::uint64_t gc_seed = 7;
    int gc_count = 20, gc_max_n = 5, gc_max_c = 4;
    double gc_step = 1e-5, gc_tolerance = 1e-4;
    UggConfigCli gc_ugg;
    gradcheck->add_option("--seed", gc_seed, "RNG seed");
    gradcheck->add_option("--count", gc_count, "number of random instances");
    gradcheck->add_option("--max-tracklets", gc_max_n, "largest N");
    gradcheck->add_option("--max-galleries", gc_max_c, "largest C");
    gradcheck->add_option("--step", gc_step, "central-difference step");
    gradcheck->add_option("--tolerance", gc_tolerance, "max relative error accepted");
    gc_ugg.attach(*gradcheck);

    CLI11_PARSE(app, argc, argv);

    try {
        if (infer->parsed())
            return run_infer(config_path, gallery, tracklet, cannot_link, true_identity,
                             infer_ugg, out, emit_trace, emit_plots, ks);

        if (synth->parsed()) {
            ugg::ScenarioParams params;
            synth_params.apply(params);
            const ugg::Scenario scenario = ugg::generate(params);
            for (const std::string& path : ugg::write_scenario_files(scenario, synth_out))
                std::cout << path << "\n";
            return 0;
        }

        if (eval->parsed()) {
            const ugg::Matrix scores = ugg::read_matrix(eval_scores);
            const std::vector<int> truth = ugg::detail::identities_from_matrix(
                ugg::read_matrix(eval_truth), static_cast<int>(scores.rows()), eval_truth);
            const ugg::RankingReport report = ugg::make_ranking_report(scores, truth, eval_ks);
            std::filesystem::create_directories(eval_out);
            ugg::write_text_file(eval_out + "/report.json", ugg::ranking_report_to_json(report));
            ugg::write_text_file(eval_out + "/report.tsv", ugg::ranking_reports_to_tsv({report}));
            std::cout << eval_out << "/report.json\n" << eval_out << "/report.tsv\n";
            return 0;
        }

        if (ablate->parsed()) {
            ugg::JobConfig job;
            job.ugg = ugg::synthetic_benchmark_config();
            if (ablate_config) job = ugg::load_job_config(*ablate_config);
            if (!job.ablation) job.ablation = ugg::AblationJob{};
            ugg::ScenarioParams params = job.scenario.value_or(ugg::ScenarioParams{});
            ablate_params.apply(params);
            ablate_ugg.apply(job.ugg);
            if (!ablate_flag_sets.empty())
                job.ablation->flag_sets = parse_flag_sets(ablate_flag_sets);
            if (ablate->count("--num-seeds") > 0) job.ablation->num_seeds = num_seeds;
            if (ablate->count("--base-seed") > 0) job.ablation->base_seed = base_seed;
            if (ablate->count("--out") > 0 || job.output_dir.empty())
                job.output_dir = ablate_out;

            std::vector<ugg::Scenario> scenarios;
            for (int s = 0; s < job.ablation->num_seeds; ++s) {
                ugg::ScenarioParams seeded = params;
                seeded.seed = job.ablation->base_seed + static_cast<std::uint64_t>(s);
                scenarios.push_back(ugg::generate(seeded));
            }
            const std::vector<ugg::AblationRow> rows =
                ugg::run_ablation(scenarios, job.ugg, job.ablation->flag_sets, job.ranking_ks);

            std::filesystem::create_directories(job.output_dir);
            ugg::write_text_file(job.output_dir + "/ablation.json",
                                 ugg::ablation_rows_to_json(rows));
            ugg::write_text_file(job.output_dir + "/ablation.tsv",
                                 ugg::ablation_rows_to_tsv(rows));
            std::cout << job.output_dir << "/ablation.json\n"
                      << job.output_dir << "/ablation.tsv\n";
            if (ablate_plots || job.emit_plots) {
                ugg::PlotSeries series{"mean top-1 accuracy", {}};
                for (const ugg::AblationRow& row : rows)
                    series.values.push_back(row.mean_report.topk_accuracy.begin()->second);
                ugg::write_text_file(job.output_dir + "/ablation_top1.svg",
                                     ugg::svg_line_plot("configuration sweep",
                                                        "configuration index", "top-1 accuracy",
                                                        {series}));
                std::cout << job.output_dir << "/ablation_top1.svg\n";
            }
            for (const ugg::AblationRow& row : rows)
                std::cout << row.flags.name() << "\ttop1="
                          << row.mean_report.topk_accuracy.begin()->second << "\n";
            return 0;
        }

        if (gradcheck->parsed())
            return run_gradcheck(gc_seed, gc_count, gc_max_n, gc_max_c, gc_ugg, gc_step,
                                 gc_tolerance);
    } catch (const ugg::Error& e) {
        std::cerr << "error [" << ugg::error_code_name(e.code()) << "] " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error " << e.what() << "\n";
        return 2;
    }
    return 0;
}
