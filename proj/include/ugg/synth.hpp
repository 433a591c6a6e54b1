#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "ugg/errors.hpp"
#include "ugg/model.hpp"
#include "ugg/rng.hpp"

namespace ugg {

// ============================================================
// Synthetic scenario generation
// ============================================================

// Desk-scale stand-in for a real gallery/tracklet identification workload:
// a known fraction of tracklets has near-uninformative face similarity,
// body similarity follows identity-conditional means with a controllable
// rate of misleading same-level connections between different identities,
// and co-occurrence cannot-links are sampled among different-identity
// pairs only.
struct ScenarioParams {
    int num_galleries = 10;
    int num_tracklets = 40;
    std::uint64_t seed = 0;
    double low_quality_fraction = 0.5;  // tracklets whose face signal is removed
    double face_signal = 2.0;           // margin of the true gallery for high quality
    double face_noise_sigma = 0.5;      // Gaussian noise on every face similarity
    double body_same_identity_mean = 0.6;
    double body_diff_identity_mean = 0.0;
    double confound_rate = 0.15;        // diff-identity pair gets the same-identity mean
    double cooccurrence_rate = 0.2;     // diff-identity pair gets a cannot-link
};

enum class TrackletQuality { kHigh, kLow };

struct Scenario {
    ScenarioParams params;
    ProblemInstance instance;
    std::vector<int> true_identity;        // per tracklet, 0-based gallery id
    std::vector<TrackletQuality> quality;  // per tracklet
};

inline void validate_scenario_params(const ScenarioParams& params) {
    using detail::require;
    require(params.num_galleries >= 2, ErrorCode::kInvalidParams, "need at least 2 galleries");
    require(params.num_tracklets >= 1, ErrorCode::kInvalidParams, "need at least 1 tracklet");
    const auto rate_ok = [](double r) { return r >= 0.0 && r <= 1.0; };
    require(rate_ok(params.low_quality_fraction) && rate_ok(params.confound_rate) &&
                rate_ok(params.cooccurrence_rate),
            ErrorCode::kInvalidParams, "rates must lie in [0, 1]");
    require(params.face_signal >= 0.0 && params.face_noise_sigma >= 0.0,
            ErrorCode::kInvalidParams, "face_signal and face_noise_sigma must be >= 0");
}

// Deterministic per seed: one xoshiro256++ stream drives identity sampling,
// the low-quality subset (exactly round(fraction * N) tracklets, chosen by
// partial Fisher-Yates), face noise, confound flips and cannot-link draws,
// in that order. Similarities are clamped to [-1, 1]. Cannot-links are
// sampled among different-identity pairs only, so the generated matrix
// never contradicts the ground truth.
inline Scenario generate(const ScenarioParams& params) {
    validate_scenario_params(params);
    const int c = params.num_galleries;
    const int n = params.num_tracklets;
    Rng rng(params.seed);

    Scenario scenario;
    scenario.params = params;
    scenario.true_identity.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        scenario.true_identity[static_cast<std::size_t>(i)] =
            static_cast<int>(rng.below(static_cast<std::uint64_t>(c)));

    const int num_low = static_cast<int>(
        std::llround(params.low_quality_fraction * static_cast<double>(n)));
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    for (int i = 0; i < num_low; ++i) {
        const int pick = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - i)));
        std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(pick)]);
    }
    scenario.quality.assign(static_cast<std::size_t>(n), TrackletQuality::kHigh);
    for (int i = 0; i < num_low; ++i)
        scenario.quality[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] =
            TrackletQuality::kLow;

    const auto clamp_sim = [](double v) { return std::min(1.0, std::max(-1.0, v)); };

    Matrix face(static_cast<std::size_t>(c), static_cast<std::size_t>(n));
    for (int l = 0; l < c; ++l)
        for (int i = 0; i < n; ++i) {
            const bool hit = scenario.true_identity[static_cast<std::size_t>(i)] == l &&
                             scenario.quality[static_cast<std::size_t>(i)] == TrackletQuality::kHigh;
            const double value = (hit ? params.face_signal : 0.0) +
                                 params.face_noise_sigma * rng.normal();
            face(static_cast<std::size_t>(l), static_cast<std::size_t>(i)) = clamp_sim(value);
        }

    Matrix body(static_cast<std::size_t>(n), static_cast<std::size_t>(n));
    Matrix links(static_cast<std::size_t>(n), static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        body(static_cast<std::size_t>(i), static_cast<std::size_t>(i)) = 1.0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const bool same = scenario.true_identity[static_cast<std::size_t>(i)] ==
                              scenario.true_identity[static_cast<std::size_t>(j)];
            double mean = same ? params.body_same_identity_mean : params.body_diff_identity_mean;
            if (!same && rng.bernoulli(params.confound_rate))
                mean = params.body_same_identity_mean;  // misleading connection
            const double value = clamp_sim(mean);
            body(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = value;
            body(static_cast<std::size_t>(j), static_cast<std::size_t>(i)) = value;
            if (!same && rng.bernoulli(params.cooccurrence_rate)) {
                links(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = 1.0;
                links(static_cast<std::size_t>(j), static_cast<std::size_t>(i)) = 1.0;
            }
        }

    scenario.instance.gallery_tracklet_sim = std::move(face);
    scenario.instance.tracklet_tracklet_sim = std::move(body);
    scenario.instance.cannot_link = std::move(links);
    scenario.instance.num_galleries = c;
    scenario.instance.num_tracklets = n;
    scenario.instance = validate_instance(std::move(scenario.instance));
    return scenario;
}

// Binary same-identity matrix derived from the ground truth (diagonal 1).
inline Matrix scenario_pair_labels(const Scenario& scenario) {
    const auto n = static_cast<std::size_t>(scenario.instance.num_tracklets);
    Matrix pair(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            pair(i, j) = scenario.true_identity[i] == scenario.true_identity[j] ? 1.0 : 0.0;
    return pair;
}

}  // namespace ugg
