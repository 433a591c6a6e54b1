#include <catch2/catch_amalgamated.hpp>

#include <algorithm>

#include "test_support.hpp"
#include "ugg/ablation.hpp"
#include "ugg/metrics.hpp"
#include "ugg/synth.hpp"

using Catch::Approx;
using ugg::ErrorCode;
using ugg_test::error_code_of;

#include "metric_reference.hpp"

using ugg_test::reference_map;
using ugg_test::reference_recall;
using ugg_test::reference_topk;

TEST_CASE("average precision: two relevant at ranks 1 and 3 of 4") {
    ugg::Matrix scores(1, 4);
    scores(0, 0) = 0.9;
    scores(0, 1) = 0.8;
    scores(0, 2) = 0.7;
    scores(0, 3) = 0.1;
    const double map = ugg::mean_average_precision(scores, {{0, 2}});
    REQUIRE(map == Approx((1.0 + 2.0 / 3.0) / 2.0).epsilon(1e-15));
    REQUIRE(map == Approx(5.0 / 6.0).epsilon(1e-15));
}

TEST_CASE("perfect rankings score 1.0 everywhere") {
    ugg::Rng rng(151);
    const ugg::ScenarioParams params = [] {
        ugg::ScenarioParams p;
        p.seed = 8;
        p.low_quality_fraction = 0.0;
        p.face_noise_sigma = 0.0;
        p.confound_rate = 0.0;
        return p;
    }();
    const ugg::Scenario scenario = ugg::generate(params);
    const ugg::Matrix& scores = scenario.instance.gallery_tracklet_sim;
    const auto relevance = ugg::relevance_from_true_identity(scenario.true_identity, 10);
    REQUIRE(ugg::mean_average_precision(scores, relevance) == 1.0);
    REQUIRE(ugg::recall_at_k(scores, relevance, 1) == 1.0);
    REQUIRE(ugg::topk_accuracy(scores, scenario.true_identity, 1) == 1.0);
}

TEST_CASE("all-equal scores fall back to index order") {
    const ugg::Matrix scores(1, 5, 0.25);
    for (int idx = 0; idx < 5; ++idx) {
        const double map = ugg::mean_average_precision(scores, {{idx}});
        REQUIRE(map == Approx(1.0 / (idx + 1)).epsilon(1e-15));
    }
}

TEST_CASE("recall at k >= N is total for galleries with relevant items") {
    ugg::Rng rng(157);
    const ugg::ProblemInstance instance = ugg_test::random_instance(rng, 6, 4);
    const std::vector<std::vector<int>> relevance = {{0, 3}, {}, {1}, {2, 4, 5}};
    REQUIRE(ugg::recall_at_k(instance.gallery_tracklet_sim, relevance, 6) == 1.0);
    REQUIRE(ugg::recall_at_k(instance.gallery_tracklet_sim, relevance, 99) == 1.0);
}

TEST_CASE("topk accuracy at k = C is total") {
    ugg::Rng rng(163);
    const ugg::ProblemInstance instance = ugg_test::random_instance(rng, 6, 4);
    const std::vector<int> truth = {0, 1, 2, 3, 0, 1};
    REQUIRE(ugg::topk_accuracy(instance.gallery_tracklet_sim, truth, 4) == 1.0);
}

TEST_CASE("metrics equal the brute-force referee on random instances") {
    ugg::Rng rng(167);
    for (int round = 0; round < 40; ++round) {
        const int n = 2 + static_cast<int>(rng.below(7));
        const int c = 2 + static_cast<int>(rng.below(4));
        ugg::Matrix scores(static_cast<std::size_t>(c), static_cast<std::size_t>(n));
        for (double& v : scores.data())
            v = rng.bernoulli(0.3) ? 0.5 : rng.uniform(-1.0, 1.0);  // force ties sometimes
        std::vector<int> truth(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i)
            truth[static_cast<std::size_t>(i)] = static_cast<int>(rng.below(
                static_cast<std::uint64_t>(c)));
        const auto relevance = ugg::relevance_from_true_identity(truth, c);

        bool any_relevant = false;
        for (const auto& r : relevance) any_relevant = any_relevant || !r.empty();
        if (!any_relevant) continue;

        REQUIRE(ugg::mean_average_precision(scores, relevance) ==
                reference_map(scores, relevance));
        for (int k : {1, 2, 4})
            REQUIRE(ugg::recall_at_k(scores, relevance, k) ==
                    reference_recall(scores, relevance, k));
        for (int k : {1, 2, 3})
            REQUIRE(ugg::topk_accuracy(scores, truth, k) == reference_topk(scores, truth, k));
    }
}

TEST_CASE("recall and topk accuracy never decrease in k") {
    ugg::Rng rng(173);
    const ugg::ProblemInstance instance = ugg_test::random_instance(rng, 7, 5);
    std::vector<int> truth(7);
    for (int i = 0; i < 7; ++i)
        truth[static_cast<std::size_t>(i)] = static_cast<int>(rng.below(5));
    const auto relevance = ugg::relevance_from_true_identity(truth, 5);
    double prev_recall = 0.0, prev_top = 0.0;
    for (int k = 1; k <= 7; ++k) {
        const double r = ugg::recall_at_k(instance.gallery_tracklet_sim, relevance, k);
        REQUIRE(r >= prev_recall);
        prev_recall = r;
    }
    for (int k = 1; k <= 5; ++k) {
        const double t = ugg::topk_accuracy(instance.gallery_tracklet_sim, truth, k);
        REQUIRE(t >= prev_top);
        prev_top = t;
    }
}

TEST_CASE("mean average precision only sees ranks") {
    ugg::Rng rng(179);
    ugg::Matrix scores(4, 6);
    for (double& v : scores.data()) v = rng.uniform(-1.0, 1.0);
    std::vector<int> truth = {0, 1, 2, 3, 1, 2};
    const auto relevance = ugg::relevance_from_true_identity(truth, 4);

    ugg::Matrix transformed = scores;
    for (double& v : transformed.data()) v = std::exp(3.0 * v) + 1.0;  // strictly increasing
    REQUIRE(ugg::mean_average_precision(scores, relevance) ==
            ugg::mean_average_precision(transformed, relevance));
}

TEST_CASE("no relevant items anywhere is an error") {
    const ugg::Matrix scores(2, 3, 0.5);
    REQUIRE(error_code_of([&] { ugg::mean_average_precision(scores, {{}, {}}); }) ==
            ErrorCode::kNoRelevantItemsAnywhere);
}

TEST_CASE("ablation flags map onto the configuration") {
    ugg::UggConfig base;
    base.alpha_positive = 7.0;
    base.alpha_negative = 3.0;

    const ugg::AblationFlags face = ugg::AblationFlags::parse({});
    const ugg::UggConfig face_cfg = ugg::apply_ablation_flags(base, face);
    REQUIRE(face_cfg.alpha_positive == 0.0);
    REQUIRE(face_cfg.alpha_negative == 0.0);
    REQUIRE(face_cfg.gate_mode == ugg::GateMode::kFixedGates);
    REQUIRE(face.name() == "FACE");

    const ugg::AblationFlags full = ugg::AblationFlags::parse({"PGcl", "NG", "aG"});
    const ugg::UggConfig full_cfg = ugg::apply_ablation_flags(base, full);
    REQUIRE(full_cfg.alpha_positive == 7.0);
    REQUIRE(full_cfg.alpha_negative == 3.0);
    REQUIRE(full_cfg.cannot_link_masks_positive);
    REQUIRE(full_cfg.gate_mode == ugg::GateMode::kAdaptiveGates);
    REQUIRE(full.pg);  // PGcl implies PG
    REQUIRE(full.name() == "PGcl+NG+aG");

    REQUIRE(error_code_of([] { ugg::AblationFlags::parse({"XX"}); }) ==
            ErrorCode::kInvalidParams);
}

TEST_CASE("empty-flag ablation ranks every column exactly like the raw scores") {
    ugg::ScenarioParams params;
    params.seed = 21;
    params.num_tracklets = 12;
    params.num_galleries = 4;
    const ugg::Scenario scenario = ugg::generate(params);
    ugg::UggConfig base;
    base.iterations = 4;

    const ugg::UggConfig face_cfg =
        ugg::apply_ablation_flags(base, ugg::AblationFlags::parse({}));
    const ugg::Matrix refined = ugg::run_inference(scenario.instance, face_cfg).refined_sim;
    const ugg::Matrix& raw = scenario.instance.gallery_tracklet_sim;

    for (std::size_t i = 0; i < refined.cols(); ++i) {
        std::vector<double> raw_col(raw.rows()), refined_col(refined.rows());
        for (std::size_t l = 0; l < raw.rows(); ++l) {
            raw_col[l] = raw(l, i);
            refined_col[l] = refined(l, i);
        }
        REQUIRE(ugg::detail::ranked_indices(raw_col) == ugg::detail::ranked_indices(refined_col));
    }
    for (int k : {1, 2, 3, 4})
        REQUIRE(ugg::topk_accuracy(refined, scenario.true_identity, k) ==
                ugg::topk_accuracy(raw, scenario.true_identity, k));
}

TEST_CASE("run_ablation aggregates per-scenario reports") {
    std::vector<ugg::Scenario> scenarios;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        ugg::ScenarioParams params;
        params.seed = seed;
        params.num_tracklets = 12;
        params.num_galleries = 4;
        scenarios.push_back(ugg::generate(params));
    }
    const std::vector<ugg::AblationFlags> flags = {ugg::AblationFlags::parse({}),
                                                   ugg::AblationFlags::parse({"PG", "aG"})};
    const std::vector<ugg::AblationRow> rows =
        ugg::run_ablation(scenarios, ugg::UggConfig{}, flags, {1, 3});
    REQUIRE(rows.size() == 2);
    REQUIRE(rows[0].per_scenario.size() == 3);
    double mean_top1 = 0.0;
    for (const ugg::RankingReport& r : rows[1].per_scenario)
        mean_top1 += r.topk_accuracy.at(1) / 3.0;
    REQUIRE(rows[1].mean_report.topk_accuracy.at(1) == Approx(mean_top1).margin(1e-12));
}

TEST_CASE("desk-profile benchmark regression") {
    // Frozen mean top-1 accuracies for the default generator profile,
    // seeds 1..20, under synthetic_benchmark_config(). Guards both the
    // generator stream and the inference pipeline against silent drift.
    std::vector<ugg::Scenario> scenarios;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        ugg::ScenarioParams params;
        params.seed = seed;
        scenarios.push_back(ugg::generate(params));
    }
    const std::vector<ugg::AblationRow> rows = ugg::run_ablation(
        scenarios, ugg::synthetic_benchmark_config(), ugg::standard_ablation_flags(), {1});

    const std::vector<std::pair<std::string, double>> expected = {
        {"FACE", 0.48625000000000002},    {"PG", 0.53375000000000006},
        {"PGcl", 0.55125000000000002},    {"PGcl+NG", 0.59999999999999987},
        {"PG+aG", 0.54249999999999998},   {"PGcl+aG", 0.56499999999999995},
        {"PGcl+NG+aG", 0.60875000000000001},
    };
    REQUIRE(rows.size() == expected.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        REQUIRE(rows[i].flags.name() == expected[i].first);
        REQUIRE(rows[i].mean_report.topk_accuracy.at(1) ==
                Approx(expected[i].second).margin(1e-12));
    }

    // The headline ordering: baseline < fixed gates <= +negative gates <
    // fully adaptive; the full model beats the baseline by >= 5 points.
    const double face = rows[0].mean_report.topk_accuracy.at(1);
    const double pg = rows[1].mean_report.topk_accuracy.at(1);
    const double pgcl_ng = rows[3].mean_report.topk_accuracy.at(1);
    const double full = rows[6].mean_report.topk_accuracy.at(1);
    REQUIRE(face < pg);
    REQUIRE(pg <= pgcl_ng);
    REQUIRE(pgcl_ng < full);
    REQUIRE(full - face >= 0.05);
}

TEST_CASE("NG without any cannot-link data is rejected") {
    ugg::ScenarioParams params;
    params.seed = 2;
    params.cooccurrence_rate = 0.0;
    params.num_tracklets = 8;
    const std::vector<ugg::Scenario> scenarios = {ugg::generate(params)};
    const std::vector<ugg::AblationFlags> flags = {ugg::AblationFlags::parse({"PGcl", "NG"})};
    REQUIRE(error_code_of([&] {
                ugg::run_ablation(scenarios, ugg::UggConfig{}, flags, {1});
            }) == ErrorCode::kNgRequestedWithoutCannotLinks);
}
