#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ugg/energy.hpp"
#include "ugg/graph.hpp"
#include "ugg/model.hpp"
#include "ugg/numeric.hpp"

namespace ugg {

// ============================================================
// Belief state
// ============================================================

// Variational state after `iteration` rounds. Column i of node_beliefs is
// q_i, the identity distribution of tracklet i over the C galleries.
// positive_gate_probs[e] is pi_{i->j} for directed_edges[e]; for every
// source node the probabilities over its (unmasked) neighbors sum to 1.
// negative_gate_probs[e] equals the cannot-link bit of the edge and never
// changes during inference.
struct BeliefState {
    Matrix node_beliefs;                    // C x N
    std::vector<double> positive_gate_probs;
    std::vector<double> negative_gate_probs;
    int iteration = 0;
};

namespace detail {

// Gate softmax for one source node over its outgoing edges, restricted to
// the unmasked support; masked entries are written as exact zeros. An empty
// support leaves the whole block zero (node i then sends no positive mass).
inline void gate_block_softmax(std::span<const double> logits,
                               std::span<const std::uint8_t> masked,
                               std::span<double> out) {
    double hi = -kInfiniteEnergy;
    for (std::size_t p = 0; p < logits.size(); ++p)
        if (!masked[p]) hi = std::max(hi, logits[p]);
    if (hi == -kInfiniteEnergy) {  // empty support
        for (std::size_t p = 0; p < logits.size(); ++p) out[p] = 0.0;
        return;
    }
    double total = 0.0;
    for (std::size_t p = 0; p < logits.size(); ++p) {
        out[p] = masked[p] ? 0.0 : std::exp(logits[p] - hi);
        total += out[p];
    }
    for (std::size_t p = 0; p < logits.size(); ++p) out[p] /= total;
}

inline std::vector<std::uint8_t> gate_mask(const ProblemInstance& instance,
                                           const UggConfig& config, const Graph& graph) {
    std::vector<std::uint8_t> masked(graph.directed_edges.size(), 0);
    if (!config.cannot_link_masks_positive) return masked;
    for (std::size_t e = 0; e < graph.directed_edges.size(); ++e) {
        const auto [i, j] = graph.directed_edges[e];
        masked[e] = instance.cannot_link(static_cast<std::size_t>(i),
                                         static_cast<std::size_t>(j)) != 0.0;
    }
    return masked;
}

}  // namespace detail

// ============================================================
// Updates
// ============================================================

// Round-0 state: q_i = softmax(T_g * S[:, i]); pi_{i->j} = softmax over
// N(i) of T_t * s_ij (cannot-link edges dropped from the support when
// masking is on); negative gates pinned to the cannot-link bits.
inline BeliefState init_state(const ProblemInstance& instance, const UggConfig& config,
                              const Graph& graph) {
    const int n = instance.num_tracklets;
    const int c = instance.num_galleries;

    BeliefState state;
    state.iteration = 0;
    state.node_beliefs = Matrix(static_cast<std::size_t>(c), static_cast<std::size_t>(n));

    std::vector<double> logits(static_cast<std::size_t>(c));
    std::vector<double> probs(static_cast<std::size_t>(c));
    for (int i = 0; i < n; ++i) {
        for (int l = 0; l < c; ++l)
            logits[static_cast<std::size_t>(l)] =
                config.temp_gallery * instance.gallery_tracklet_sim(static_cast<std::size_t>(l),
                                                                    static_cast<std::size_t>(i));
        softmax_into(logits, probs);
        for (int l = 0; l < c; ++l)
            state.node_beliefs(static_cast<std::size_t>(l), static_cast<std::size_t>(i)) =
                probs[static_cast<std::size_t>(l)];
    }

    const std::vector<std::uint8_t> masked = detail::gate_mask(instance, config, graph);
    state.positive_gate_probs.assign(graph.directed_edges.size(), 0.0);
    state.negative_gate_probs.assign(graph.directed_edges.size(), 0.0);
    for (std::size_t e = 0; e < graph.directed_edges.size(); ++e) {
        const auto [i, j] = graph.directed_edges[e];
        state.negative_gate_probs[e] = instance.cannot_link(static_cast<std::size_t>(i),
                                                            static_cast<std::size_t>(j));
    }
    std::vector<double> gate_logits;
    for (int i = 0; i < n; ++i) {
        const int deg = graph.out_degree(i);
        if (deg == 0) continue;
        const int base = graph.edge_offset[static_cast<std::size_t>(i)];
        gate_logits.resize(static_cast<std::size_t>(deg));
        for (int p = 0; p < deg; ++p) {
            const int j = graph.neighbors[static_cast<std::size_t>(i)][static_cast<std::size_t>(p)];
            gate_logits[static_cast<std::size_t>(p)] =
                config.temp_tracklet * instance.tracklet_tracklet_sim(static_cast<std::size_t>(i),
                                                                      static_cast<std::size_t>(j));
        }
        detail::gate_block_softmax(
            gate_logits,
            std::span<const std::uint8_t>(masked.data() + base, static_cast<std::size_t>(deg)),
            std::span<double>(state.positive_gate_probs.data() + base,
                              static_cast<std::size_t>(deg)));
    }
    return state;
}

// One Jacobi round of the positive-gate update, reading only the previous
// state: logits over j in N(i) are T_t * s_ij + alpha_p * (q_i . q_j),
// softmax-normalized within the (unmasked) neighborhood.
inline std::vector<double> update_positive_gates(const BeliefState& state,
                                                 const ProblemInstance& instance,
                                                 const UggConfig& config, const Graph& graph) {
    const int n = instance.num_tracklets;
    const int c = instance.num_galleries;
    const std::vector<std::uint8_t> masked = detail::gate_mask(instance, config, graph);

    std::vector<double> next(graph.directed_edges.size(), 0.0);
    std::vector<double> gate_logits;
    for (int i = 0; i < n; ++i) {
        const int deg = graph.out_degree(i);
        if (deg == 0) continue;
        const int base = graph.edge_offset[static_cast<std::size_t>(i)];
        gate_logits.resize(static_cast<std::size_t>(deg));
        for (int p = 0; p < deg; ++p) {
            const int j = graph.neighbors[static_cast<std::size_t>(i)][static_cast<std::size_t>(p)];
            double overlap = 0.0;
            for (int l = 0; l < c; ++l)
                overlap += state.node_beliefs(static_cast<std::size_t>(l), static_cast<std::size_t>(i)) *
                           state.node_beliefs(static_cast<std::size_t>(l), static_cast<std::size_t>(j));
            gate_logits[static_cast<std::size_t>(p)] =
                config.temp_tracklet * instance.tracklet_tracklet_sim(static_cast<std::size_t>(i),
                                                                      static_cast<std::size_t>(j)) +
                config.alpha_positive * overlap;
        }
        detail::gate_block_softmax(
            gate_logits,
            std::span<const std::uint8_t>(masked.data() + base, static_cast<std::size_t>(deg)),
            std::span<double>(next.data() + base, static_cast<std::size_t>(deg)));
    }
    return next;
}

// One Jacobi round of the node update, reading only the previous state.
// Logits for node i over label l:
//   T_g * s_li
//   + alpha_p * sum_{j in N(i)} pi_{i->j} q_j(l)
//   - alpha_n * sum_{j in N(i)} pin_{i->j} q_j(l)
// and, under kBidirectional semantics, the same two sums over incoming
// edges j -> i (the exact coordinate update of the factorized KL).
inline Matrix update_sample_nodes(const BeliefState& state, const ProblemInstance& instance,
                                  const UggConfig& config, const Graph& graph) {
    const int n = instance.num_tracklets;
    const int c = instance.num_galleries;
    Matrix next(static_cast<std::size_t>(c), static_cast<std::size_t>(n));

    std::vector<double> logits(static_cast<std::size_t>(c));
    std::vector<double> probs(static_cast<std::size_t>(c));
    for (int i = 0; i < n; ++i) {
        for (int l = 0; l < c; ++l)
            logits[static_cast<std::size_t>(l)] =
                config.temp_gallery * instance.gallery_tracklet_sim(static_cast<std::size_t>(l),
                                                                    static_cast<std::size_t>(i));
        const int base = graph.edge_offset[static_cast<std::size_t>(i)];
        const auto& nbrs = graph.neighbors[static_cast<std::size_t>(i)];
        for (std::size_t p = 0; p < nbrs.size(); ++p) {
            const int j = nbrs[p];
            const std::size_t e = static_cast<std::size_t>(base) + p;
            const double w = config.alpha_positive * state.positive_gate_probs[e] -
                             config.alpha_negative * state.negative_gate_probs[e];
            if (w == 0.0) continue;
            for (int l = 0; l < c; ++l)
                logits[static_cast<std::size_t>(l)] +=
                    w * state.node_beliefs(static_cast<std::size_t>(l), static_cast<std::size_t>(j));
        }
        if (config.update_semantics == UpdateSemantics::kBidirectional) {
            for (const auto& [j, e] : graph.incoming[static_cast<std::size_t>(i)]) {
                const double w =
                    config.alpha_positive * state.positive_gate_probs[static_cast<std::size_t>(e)] -
                    config.alpha_negative * state.negative_gate_probs[static_cast<std::size_t>(e)];
                if (w == 0.0) continue;
                for (int l = 0; l < c; ++l)
                    logits[static_cast<std::size_t>(l)] +=
                        w * state.node_beliefs(static_cast<std::size_t>(l), static_cast<std::size_t>(j));
            }
        }
        softmax_into(logits, probs);
        for (int l = 0; l < c; ++l)
            next(static_cast<std::size_t>(l), static_cast<std::size_t>(i)) =
                probs[static_cast<std::size_t>(l)];
    }
    return next;
}

// ============================================================
// Full inference
// ============================================================

struct InferenceResult {
    Matrix refined_sim;  // C x N; column i = q_i after K rounds
    BeliefState final_state;
    std::vector<BeliefState> trace;  // round 0..K when recorded, else empty
};

// Runs init_state followed by K rounds of {gate update (adaptive mode
// only), node update}; both updates in a round read the round-(t-1)
// snapshot. K = 0 returns the initialization. Pure and deterministic.
inline InferenceResult run_inference(const ProblemInstance& instance, const UggConfig& config,
                                     const Graph& graph, bool record_trace = false) {
    validate_config(config);
    InferenceResult result;
    BeliefState state = init_state(instance, config, graph);
    if (record_trace) result.trace.push_back(state);

    for (int round = 1; round <= config.iterations; ++round) {
        BeliefState next;
        next.iteration = round;
        next.negative_gate_probs = state.negative_gate_probs;
        next.positive_gate_probs = (config.gate_mode == GateMode::kAdaptiveGates)
                                       ? update_positive_gates(state, instance, config, graph)
                                       : state.positive_gate_probs;
        next.node_beliefs = update_sample_nodes(state, instance, config, graph);
        state = std::move(next);
        if (record_trace) result.trace.push_back(state);
    }

    result.refined_sim = state.node_beliefs;
    result.final_state = std::move(state);
    return result;
}

inline InferenceResult run_inference(const ProblemInstance& instance, const UggConfig& config,
                                     bool record_trace = false) {
    const ProblemInstance validated = validate_instance(instance);
    const Graph graph = build_graph(validated, config);
    return run_inference(validated, config, graph, record_trace);
}

// ============================================================
// Diagnostics
// ============================================================

// D(Q || P) between a belief state and an exact joint table. Q treats each
// source node's outgoing positive gates as one categorical block (matching
// the per-neighborhood normalization of the gate update); negative gates
// are deterministic. Non-negative; zero iff Q equals P on its support.
inline double kl_to_exact(const BeliefState& beliefs, const JointTable& table) {
    return detail::kl_divergence(beliefs.node_beliefs, beliefs.positive_gate_probs, table);
}

// Returns a description of the first violated structural invariant, or
// nullopt if the state is sound: beliefs on the simplex (sum 1 within
// 1e-9, entries in (0,1)), gate blocks normalized within 1e-9 (all-masked
// blocks must be exactly zero), negative gates equal to the cannot-link
// bits exactly.
inline std::optional<std::string> state_invariant_violation(const BeliefState& state,
                                                            const ProblemInstance& instance,
                                                            const Graph& graph) {
    const int n = instance.num_tracklets;
    const int c = instance.num_galleries;
    for (int i = 0; i < n; ++i) {
        double total = 0.0;
        for (int l = 0; l < c; ++l) {
            const double q =
                state.node_beliefs(static_cast<std::size_t>(l), static_cast<std::size_t>(i));
            if (!(q > 0.0 && q < 1.0) && !(c == 1 && q == 1.0))
                return "node belief outside (0,1) at node " + std::to_string(i);
            total += q;
        }
        if (std::abs(total - 1.0) > 1e-9)
            return "node beliefs of node " + std::to_string(i) + " sum to " +
                   std::to_string(total);
    }
    for (int i = 0; i < n; ++i) {
        const int deg = graph.out_degree(i);
        if (deg == 0) continue;
        const int base = graph.edge_offset[static_cast<std::size_t>(i)];
        double total = 0.0;
        bool any_positive = false;
        for (int p = 0; p < deg; ++p) {
            const double v = state.positive_gate_probs[static_cast<std::size_t>(base + p)];
            if (v < 0.0 || v > 1.0)
                return "gate probability outside [0,1] at source " + std::to_string(i);
            any_positive = any_positive || v > 0.0;
            total += v;
        }
        if (any_positive && std::abs(total - 1.0) > 1e-9)
            return "gate block of node " + std::to_string(i) + " sums to " + std::to_string(total);
        if (!any_positive && total != 0.0)
            return "empty-support gate block of node " + std::to_string(i) + " not zero";
    }
    for (std::size_t e = 0; e < graph.directed_edges.size(); ++e) {
        const auto [i, j] = graph.directed_edges[e];
        if (state.negative_gate_probs[e] !=
            instance.cannot_link(static_cast<std::size_t>(i), static_cast<std::size_t>(j)))
            return "negative gate differs from cannot-link on edge " + std::to_string(e);
    }
    return std::nullopt;
}

}  // namespace ugg
