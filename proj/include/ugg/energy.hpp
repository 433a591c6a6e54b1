#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "ugg/errors.hpp"
#include "ugg/graph.hpp"
#include "ugg/model.hpp"
#include "ugg/numeric.hpp"

namespace ugg {

inline constexpr double kInfiniteEnergy = std::numeric_limits<double>::infinity();

// ============================================================
// Potentials
// ============================================================

// A full configuration of the random field: one label per node plus one
// positive and one negative gate bit per directed edge. Gate vectors are
// indexed like Graph::directed_edges.
struct Assignment {
    std::vector<int> labels;                  // x_i in {0..C-1}
    std::vector<std::uint8_t> positive_gates; // y^p per directed edge
    std::vector<std::uint8_t> negative_gates; // y^n per directed edge
};

// Unary penalty on assigning gallery l to node i: -T_g * s_li. Strong
// gallery evidence makes the penalty low.
inline double sample_unary(const ProblemInstance& instance, const UggConfig& config,
                           int node, int label) {
    detail::require(node >= 0 && node < instance.num_tracklets && label >= 0 &&
                        label < instance.num_galleries,
                    ErrorCode::kIndexOutOfRange, "sample_unary index");
    return -config.temp_gallery *
           instance.gallery_tracklet_sim(static_cast<std::size_t>(label),
                                         static_cast<std::size_t>(node));
}

// Gate unaries on directed edge (i, j). Positive: -T_t * s_ij when the gate
// is open, 0 when closed. Negative: 0 when the gate agrees with the
// cannot-link bit, +infinity otherwise (a genuine infinity, never a finite
// sentinel).
inline std::pair<double, double> gate_unaries(const ProblemInstance& instance,
                                              const UggConfig& config, int i, int j,
                                              bool positive_open, bool negative_open) {
    detail::require(i >= 0 && i < instance.num_tracklets && j >= 0 &&
                        j < instance.num_tracklets,
                    ErrorCode::kIndexOutOfRange, "gate_unaries index");
    const double positive =
        positive_open ? -config.temp_tracklet *
                            instance.tracklet_tracklet_sim(static_cast<std::size_t>(i),
                                                           static_cast<std::size_t>(j))
                      : 0.0;
    const bool link =
        instance.cannot_link(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) != 0.0;
    const double negative = (negative_open == link) ? 0.0 : kInfiniteEnergy;
    return {positive, negative};
}

// Triplet penalties: an open positive gate charges alpha_p when the labels
// disagree; an open negative gate charges alpha_n when they agree.
inline std::pair<double, double> triplet_terms(const UggConfig& config, int label_i,
                                               int label_j, bool positive_open,
                                               bool negative_open) {
    const double positive = (positive_open && label_i != label_j) ? config.alpha_positive : 0.0;
    const double negative = (negative_open && label_i == label_j) ? config.alpha_negative : 0.0;
    return {positive, negative};
}

// Total energy: node unaries plus, for every directed edge (i, j in N(i)),
// both gate unaries and both triplet terms. +infinity whenever any negative
// gate disagrees with its cannot-link bit.
inline double total_energy(const ProblemInstance& instance, const UggConfig& config,
                           const Graph& graph, const Assignment& assignment) {
    detail::require(assignment.labels.size() ==
                            static_cast<std::size_t>(instance.num_tracklets) &&
                        assignment.positive_gates.size() == graph.directed_edges.size() &&
                        assignment.negative_gates.size() == graph.directed_edges.size(),
                    ErrorCode::kIndexOutOfRange, "assignment does not match graph");
    double energy = 0.0;
    for (int i = 0; i < instance.num_tracklets; ++i)
        energy += sample_unary(instance, config, i, assignment.labels[static_cast<std::size_t>(i)]);
    for (std::size_t e = 0; e < graph.directed_edges.size(); ++e) {
        const auto [i, j] = graph.directed_edges[e];
        const bool yp = assignment.positive_gates[e] != 0;
        const bool yn = assignment.negative_gates[e] != 0;
        const auto [gu_p, gu_n] = gate_unaries(instance, config, i, j, yp, yn);
        if (gu_n == kInfiniteEnergy) return kInfiniteEnergy;
        const auto [tt_p, tt_n] = triplet_terms(config, assignment.labels[static_cast<std::size_t>(i)],
                                                assignment.labels[static_cast<std::size_t>(j)], yp, yn);
        energy += gu_p + gu_n + tt_p + tt_n;
    }
    return energy;
}

// ============================================================
// Exact joint enumeration (tiny-instance oracle)
// ============================================================

// The exact Gibbs distribution over all label assignments and positive-gate
// configurations, with negative gates pinned to the cannot-link matrix
// (configurations of infinite energy carry zero mass and are excluded by
// construction). Entry order: label ranks (node 0 most significant) major,
// gate bitmasks (bit e = positive gate of directed_edges[e]) minor, so
// index_of gives O(1) lookup. All arithmetic stays in the log domain.
struct JointTable {
    int num_galleries = 0;
    Graph graph;
    std::vector<Assignment> support;
    std::vector<double> log_weights;  // -E per entry
    double log_normalizer = 0.0;

    std::size_t index_of(const std::vector<int>& labels, std::uint64_t gate_bits) const {
        std::size_t rank = 0;
        for (int label : labels)
            rank = rank * static_cast<std::size_t>(num_galleries) + static_cast<std::size_t>(label);
        return (rank << graph.directed_edges.size()) | gate_bits;
    }

    double log_prob(std::size_t index) const { return log_weights[index] - log_normalizer; }
};

inline JointTable enumerate_joint(const ProblemInstance& instance, const UggConfig& config,
                                  const Graph& graph) {
    const int n = instance.num_tracklets;
    const int c = instance.num_galleries;
    const std::size_t num_edges = graph.directed_edges.size();

    double log_states = n * std::log2(static_cast<double>(c)) + static_cast<double>(num_edges);
    detail::require(log_states <= 20.0, ErrorCode::kInstanceTooLarge,
                    "joint enumeration needs C^N * 2^edges <= 2^20");

    std::size_t num_label_configs = 1;
    for (int i = 0; i < n; ++i) num_label_configs *= static_cast<std::size_t>(c);
    const std::size_t num_gate_configs = std::size_t{1} << num_edges;

    JointTable table;
    table.num_galleries = c;
    table.graph = graph;
    table.support.reserve(num_label_configs * num_gate_configs);
    table.log_weights.reserve(num_label_configs * num_gate_configs);

    std::vector<std::uint8_t> pinned_negative(num_edges);
    for (std::size_t e = 0; e < num_edges; ++e) {
        const auto [i, j] = graph.directed_edges[e];
        pinned_negative[e] = instance.cannot_link(static_cast<std::size_t>(i),
                                                  static_cast<std::size_t>(j)) != 0.0;
    }

    std::vector<int> labels(static_cast<std::size_t>(n), 0);
    for (std::size_t rank = 0; rank < num_label_configs; ++rank) {
        std::size_t rest = rank;
        for (int i = n - 1; i >= 0; --i) {
            labels[static_cast<std::size_t>(i)] = static_cast<int>(rest % static_cast<std::size_t>(c));
            rest /= static_cast<std::size_t>(c);
        }
        for (std::uint64_t bits = 0; bits < num_gate_configs; ++bits) {
            Assignment assignment;
            assignment.labels = labels;
            assignment.positive_gates.resize(num_edges);
            for (std::size_t e = 0; e < num_edges; ++e)
                assignment.positive_gates[e] = (bits >> e) & 1u;
            assignment.negative_gates = pinned_negative;
            const double energy = total_energy(instance, config, graph, assignment);
            table.support.push_back(std::move(assignment));
            table.log_weights.push_back(-energy);
        }
    }
    table.log_normalizer = log_sum_exp(table.log_weights);
    detail::require(std::isfinite(table.log_normalizer), ErrorCode::kInstanceTooLarge,
                    "joint table normalizer must be finite");
    return table;
}

// ============================================================
// KL divergence to the exact joint
// ============================================================

namespace detail {

// D(Q || P) where Q factorizes as: independent node marginals q_i, one
// categorical block per source node over its outgoing positive gates
// (exactly one open; the block normalization sum_j pi_{i->j} = 1 makes the
// open-gate marginals a distribution over N(i)), and negative gates pinned
// to the cannot-link bits. The sum runs over Q's support inside the table's
// state space.
inline double kl_divergence(const Matrix& node_beliefs,
                            const std::vector<double>& positive_gate_probs,
                            const JointTable& table) {
    const Graph& graph = table.graph;
    const int n = graph.num_nodes;
    const int c = table.num_galleries;
    require(node_beliefs.rows() == static_cast<std::size_t>(c) &&
                node_beliefs.cols() == static_cast<std::size_t>(n) &&
                positive_gate_probs.size() == graph.directed_edges.size(),
            ErrorCode::kDimensionMismatch, "beliefs do not match joint table");

    // Nodes with outgoing edges contribute one categorical gate block each.
    std::vector<int> gated_nodes;
    for (int i = 0; i < n; ++i)
        if (graph.out_degree(i) > 0) gated_nodes.push_back(i);

    double kl = 0.0;
    std::vector<int> labels(static_cast<std::size_t>(n), 0);
    std::vector<int> choice(gated_nodes.size(), 0);

    for (;;) {  // odometer over label configurations
        double q_labels = 1.0;
        for (int i = 0; i < n; ++i)
            q_labels *= node_beliefs(static_cast<std::size_t>(labels[static_cast<std::size_t>(i)]),
                                     static_cast<std::size_t>(i));

        std::fill(choice.begin(), choice.end(), 0);
        for (;;) {  // odometer over one-open-gate choices per block
            double q = q_labels;
            std::uint64_t bits = 0;
            for (std::size_t b = 0; b < gated_nodes.size(); ++b) {
                const int i = gated_nodes[b];
                const int e = graph.edge_index(i, choice[b]);
                q *= positive_gate_probs[static_cast<std::size_t>(e)];
                bits |= std::uint64_t{1} << e;
            }
            if (q > 0.0) {
                const double log_p = table.log_prob(table.index_of(labels, bits));
                kl += q * (safe_log(q) - log_p);
            }
            std::size_t b = 0;
            for (; b < gated_nodes.size(); ++b) {
                if (++choice[b] < graph.out_degree(gated_nodes[b])) break;
                choice[b] = 0;
            }
            if (b == gated_nodes.size()) break;
        }

        int i = n - 1;
        for (; i >= 0; --i) {
            if (++labels[static_cast<std::size_t>(i)] < c) break;
            labels[static_cast<std::size_t>(i)] = 0;
        }
        if (i < 0) break;
    }
    return kl;
}

}  // namespace detail

}  // namespace ugg
