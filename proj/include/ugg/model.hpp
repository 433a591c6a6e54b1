#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ugg/errors.hpp"
#include "ugg/matrix.hpp"

namespace ugg {

// ============================================================
// Problem instance
// ============================================================

// One identification problem: C enrolled gallery subjects against N probe
// tracklets. Similarities are unitless (typically cosine, in [-1, 1]).
// cannot_link(i, j) == 1 is a hard prior that tracklets i and j carry
// different identities. Indices are 0-based throughout.
struct ProblemInstance {
    Matrix gallery_tracklet_sim;   // C x N
    Matrix tracklet_tracklet_sim;  // N x N, symmetric
    Matrix cannot_link;            // N x N, binary, symmetric, zero diagonal
    int num_galleries = 0;         // C > 0
    int num_tracklets = 0;         // N > 0
};

// Checks every instance invariant and returns the instance unchanged.
// Nothing is repaired silently: an asymmetric matrix is an error, not a
// request for symmetrization. Idempotent.
inline ProblemInstance validate_instance(ProblemInstance raw) {
    using detail::require;
    const auto C = static_cast<std::size_t>(raw.num_galleries);
    const auto N = static_cast<std::size_t>(raw.num_tracklets);
    require(raw.num_galleries > 0 && raw.num_tracklets > 0, ErrorCode::kDimensionMismatch,
            "num_galleries and num_tracklets must be positive");
    require(raw.gallery_tracklet_sim.rows() == C && raw.gallery_tracklet_sim.cols() == N,
            ErrorCode::kDimensionMismatch, "gallery_tracklet_sim must be C x N");
    require(raw.tracklet_tracklet_sim.rows() == N && raw.tracklet_tracklet_sim.cols() == N,
            ErrorCode::kDimensionMismatch, "tracklet_tracklet_sim must be N x N");
    require(raw.cannot_link.rows() == N && raw.cannot_link.cols() == N,
            ErrorCode::kDimensionMismatch, "cannot_link must be N x N");

    require(raw.gallery_tracklet_sim.all_finite() && raw.tracklet_tracklet_sim.all_finite() &&
                raw.cannot_link.all_finite(),
            ErrorCode::kNonFiniteEntry, "all matrix entries must be finite");

    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = i + 1; j < N; ++j)
            require(raw.tracklet_tracklet_sim(i, j) == raw.tracklet_tracklet_sim(j, i),
                    ErrorCode::kNonSymmetric,
                    "tracklet_tracklet_sim asymmetric at (" + std::to_string(i) + ", " +
                        std::to_string(j) + ")");

    for (std::size_t i = 0; i < N; ++i) {
        require(raw.cannot_link(i, i) == 0.0, ErrorCode::kCannotLinkSelfLoop,
                "cannot_link diagonal must be zero at " + std::to_string(i));
        for (std::size_t j = 0; j < N; ++j) {
            const double v = raw.cannot_link(i, j);
            require(v == 0.0 || v == 1.0, ErrorCode::kNonBinaryCannotLink,
                    "cannot_link entries must be 0 or 1 at (" + std::to_string(i) + ", " +
                        std::to_string(j) + ")");
            require(v == raw.cannot_link(j, i), ErrorCode::kNonSymmetric,
                    "cannot_link asymmetric at (" + std::to_string(i) + ", " +
                        std::to_string(j) + ")");
        }
    }
    return raw;
}

// ============================================================
// Configuration
// ============================================================

enum class NeighborhoodPolicyKind { kFull, kTopK, kThreshold };

// How tracklet neighborhoods are formed from the similarity graph.
// full keeps every other node; top_k keeps the k most similar per source
// row (ties to the lower index); threshold keeps similarities >= tau.
struct NeighborhoodPolicy {
    NeighborhoodPolicyKind kind = NeighborhoodPolicyKind::kFull;
    int k = 0;
    double tau = 0.0;

    static NeighborhoodPolicy full() { return {}; }
    static NeighborhoodPolicy top_k(int k) {
        return {NeighborhoodPolicyKind::kTopK, k, 0.0};
    }
    static NeighborhoodPolicy threshold(double tau) {
        return {NeighborhoodPolicyKind::kThreshold, 0, tau};
    }
};

enum class GateMode {
    kFixedGates,     // positive gates frozen at their round-0 value
    kAdaptiveGates,  // positive gates re-estimated every round
};

// Which gate messages enter the node update.
//   kOutgoingOnly:  node i collects q_j weighted by its own outgoing gates
//                   pi_{i->j} only.
//   kBidirectional: additionally collects through incoming gates pi_{j->i}
//                   from every j whose neighborhood contains i. This is the
//                   exact coordinate update of the factorized KL objective
//                   (the enumeration oracle validates this mode).
enum class UpdateSemantics { kOutgoingOnly, kBidirectional };

struct UggConfig {
    double temp_gallery = 15.0;    // unary temperature on gallery similarities, > 0
    double temp_tracklet = 15.0;   // gate temperature on tracklet similarities, > 0
    double alpha_positive = 10.0;  // weight of agreement messages, >= 0
    double alpha_negative = 2.0;   // weight of repulsion messages, >= 0
    int iterations = 4;            // K >= 0 message-passing rounds
    NeighborhoodPolicy neighborhood_policy = NeighborhoodPolicy::full();
    GateMode gate_mode = GateMode::kAdaptiveGates;
    // Force positive gates closed on cannot-link edges (removed from the
    // gate softmax support, remaining entries renormalized).
    bool cannot_link_masks_positive = true;
    UpdateSemantics update_semantics = UpdateSemantics::kOutgoingOnly;
};

inline void validate_config(const UggConfig& config) {
    using detail::require;
    require(config.temp_gallery > 0.0 && config.temp_tracklet > 0.0,
            ErrorCode::kInvalidConfig, "temperatures must be strictly positive");
    require(config.alpha_positive >= 0.0 && config.alpha_negative >= 0.0,
            ErrorCode::kInvalidConfig, "penalties must be non-negative");
    require(config.iterations >= 0, ErrorCode::kInvalidConfig,
            "iterations must be >= 0");
    if (config.neighborhood_policy.kind == NeighborhoodPolicyKind::kTopK)
        require(config.neighborhood_policy.k > 0, ErrorCode::kInvalidConfig,
                "top_k neighborhood needs k > 0");
}

// ============================================================
// Training labels
// ============================================================

// Partial ground truth for training. class_label[i], when present, is the
// 0-based gallery identity of tracklet i; the labeled set is exactly the
// set of tracklets with a class label. pair_label, when present, is an
// N x N binary matrix; entry (i, j) says whether tracklets i and j share
// an identity.
struct Labels {
    std::vector<std::optional<int>> class_label;  // size N
    std::optional<Matrix> pair_label;             // N x N when present

    std::vector<int> labeled_set() const {
        std::vector<int> out;
        for (std::size_t i = 0; i < class_label.size(); ++i)
            if (class_label[i].has_value()) out.push_back(static_cast<int>(i));
        return out;
    }

    static Labels none(int num_tracklets) {
        Labels labels;
        labels.class_label.resize(static_cast<std::size_t>(num_tracklets));
        return labels;
    }

    static Labels all_labeled(const std::vector<int>& identities) {
        Labels labels;
        labels.class_label.reserve(identities.size());
        for (int id : identities) labels.class_label.emplace_back(id);
        return labels;
    }
};

}  // namespace ugg
