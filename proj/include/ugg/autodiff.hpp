#pragma once

#include <cmath>
#include <vector>

#include "ugg/inference.hpp"
#include "ugg/model.hpp"
#include "ugg/numeric.hpp"

namespace ugg {

// ============================================================
// Loss
// ============================================================

// Map from a tracklet similarity (typically cosine, in [-1, 1]) to the
// probability fed into the pairwise binary cross-entropy. kLogistic is
// 1 / (1 + exp(-s)); kAffineClamp is (s + 1) / 2 clamped to
// [1e-6, 1 - 1e-6] (zero slope outside the clamp).
enum class PairLink { kLogistic, kAffineClamp };

inline constexpr double kAffineClampEps = 1e-6;

struct LossConfig {
    double pair_weight = 0.1;  // lambda, >= 0
    PairLink pair_link = PairLink::kLogistic;
    // Reserved weight: accepted by configs and carried through for
    // compatibility, applied to no term of the loss.
    double lambda_f = 0.1;
};

inline void validate_loss_config(const LossConfig& config) {
    detail::require(std::isfinite(config.pair_weight) && config.pair_weight >= 0.0,
                    ErrorCode::kInvalidConfig, "pair_weight must be finite and non-negative");
}

struct LossResult {
    double value = 0.0;
    // Set when the labeled set is empty: no supervision, loss pinned to 0.
    bool unsupervised_no_loss = false;
};

namespace detail {

inline double pair_probability(double sim, PairLink link) {
    switch (link) {
        case PairLink::kLogistic:
            return 1.0 / (1.0 + std::exp(-sim));
        case PairLink::kAffineClamp: {
            const double p = 0.5 * (sim + 1.0);
            return std::min(std::max(p, kAffineClampEps), 1.0 - kAffineClampEps);
        }
    }
    return 0.5;
}

// d BCE(link(s), z) / d s.
inline double pair_loss_slope(double sim, double target, PairLink link) {
    switch (link) {
        case PairLink::kLogistic: {
            const double p = 1.0 / (1.0 + std::exp(-sim));
            return p - target;
        }
        case PairLink::kAffineClamp: {
            const double raw = 0.5 * (sim + 1.0);
            if (raw <= kAffineClampEps || raw >= 1.0 - kAffineClampEps) return 0.0;
            return 0.5 * (raw - target) / (raw * (1.0 - raw));
        }
    }
    return 0.0;
}

inline double binary_cross_entropy(double p, double target) {
    return -(target * safe_log(p) + (1.0 - target) * safe_log(1.0 - p));
}

inline void check_labels(const Labels& labels, const ProblemInstance& instance) {
    require(labels.class_label.size() == static_cast<std::size_t>(instance.num_tracklets),
            ErrorCode::kDimensionMismatch, "class_label must have one entry per tracklet");
    for (const auto& label : labels.class_label)
        if (label.has_value())
            require(*label >= 0 && *label < instance.num_galleries, ErrorCode::kLabelOutOfRange,
                    "class label outside gallery range");
    if (labels.pair_label.has_value())
        require(labels.pair_label->rows() == static_cast<std::size_t>(instance.num_tracklets) &&
                    labels.pair_label->cols() == static_cast<std::size_t>(instance.num_tracklets),
                ErrorCode::kDimensionMismatch, "pair_label must be N x N");
}

}  // namespace detail

// Training loss over refined similarity columns (each a probability vector):
//   (1/N) sum_{i in S} -log q_i(z_i)
//   + lambda / N^2 sum_{i != j, both in S} BCE(link(s_ij), z_ij)
// The pair term is active only when pair labels are present; the diagonal
// is skipped (z_ii is undefined). An empty labeled set yields value 0 with
// unsupervised_no_loss set.
inline LossResult loss(const Matrix& refined_sim, const ProblemInstance& instance,
                       const Labels& labels, const LossConfig& loss_config) {
    validate_loss_config(loss_config);
    detail::check_labels(labels, instance);
    detail::require(refined_sim.rows() == static_cast<std::size_t>(instance.num_galleries) &&
                        refined_sim.cols() == static_cast<std::size_t>(instance.num_tracklets),
                    ErrorCode::kDimensionMismatch, "refined_sim must be C x N");

    const std::vector<int> labeled = labels.labeled_set();
    if (labeled.empty()) return {0.0, true};

    const double n = static_cast<double>(instance.num_tracklets);
    double value = 0.0;
    for (int i : labeled) {
        const int z = *labels.class_label[static_cast<std::size_t>(i)];
        value -= safe_log(refined_sim(static_cast<std::size_t>(z), static_cast<std::size_t>(i)));
    }
    value /= n;

    if (loss_config.pair_weight > 0.0 && labels.pair_label.has_value()) {
        const Matrix& pair = *labels.pair_label;
        double pair_term = 0.0;
        for (int i : labeled) {
            for (int j : labeled) {
                if (i == j) continue;
                const double s = instance.tracklet_tracklet_sim(static_cast<std::size_t>(i),
                                                                static_cast<std::size_t>(j));
                const double p = detail::pair_probability(s, loss_config.pair_link);
                pair_term += detail::binary_cross_entropy(
                    p, pair(static_cast<std::size_t>(i), static_cast<std::size_t>(j)));
            }
        }
        value += loss_config.pair_weight * pair_term / (n * n);
    }
    return {value, false};
}

// ============================================================
// Reverse-mode gradients through the unrolled iterations
// ============================================================

struct GradientBundle {
    double d_temp_gallery = 0.0;
    double d_temp_tracklet = 0.0;
    Matrix d_gallery_sim;   // C x N
    Matrix d_tracklet_sim;  // N x N, per stored entry (directions independent)
};

struct BackwardResult {
    LossResult loss;
    GradientBundle gradients;
    Matrix refined_sim;  // identical to run_inference output
};

// Analytic gradients of loss() with respect to both temperatures and both
// input similarity matrices, by reverse accumulation through all K unrolled
// rounds (including the gate-update path when gates are adaptive; gradients
// are not stopped at the belief inner products). The graph is treated as
// fixed: neighborhoods are built once and do not re-form under
// perturbation. Matrix entries are differentiated as stored, so the two
// directions of an edge map to their own entries of d_tracklet_sim.
inline BackwardResult backward(const ProblemInstance& instance, const UggConfig& config,
                               const LossConfig& loss_config, const Labels& labels,
                               const Graph& graph) {
    validate_config(config);
    const int n = instance.num_tracklets;
    const int c = instance.num_galleries;
    const int k = config.iterations;
    const bool adaptive = config.gate_mode == GateMode::kAdaptiveGates;
    const bool bidirectional = config.update_semantics == UpdateSemantics::kBidirectional;

    // Forward, recording every round; shares the inference code path.
    InferenceResult forward = run_inference(instance, config, graph, /*record_trace=*/true);
    const std::vector<BeliefState>& trace = forward.trace;

    BackwardResult result;
    result.loss = loss(forward.refined_sim, instance, labels, loss_config);
    result.refined_sim = forward.refined_sim;
    result.gradients.d_gallery_sim =
        Matrix(static_cast<std::size_t>(c), static_cast<std::size_t>(n));
    result.gradients.d_tracklet_sim =
        Matrix(static_cast<std::size_t>(n), static_cast<std::size_t>(n));
    GradientBundle& grads = result.gradients;

    const std::vector<int> labeled = labels.labeled_set();
    const double dn = static_cast<double>(n);

    // Pair term touches tracklet_tracklet_sim directly.
    if (!labeled.empty() && loss_config.pair_weight > 0.0 && labels.pair_label.has_value()) {
        const Matrix& pair = *labels.pair_label;
        const double scale = loss_config.pair_weight / (dn * dn);
        for (int i : labeled)
            for (int j : labeled) {
                if (i == j) continue;
                const double s = instance.tracklet_tracklet_sim(static_cast<std::size_t>(i),
                                                                static_cast<std::size_t>(j));
                grads.d_tracklet_sim(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) +=
                    scale * detail::pair_loss_slope(
                                s, pair(static_cast<std::size_t>(i), static_cast<std::size_t>(j)),
                                loss_config.pair_link);
            }
    }
    if (labeled.empty()) return result;  // no classification path either

    // Adjoints of node beliefs per round (C x N each) and of gate blocks.
    std::vector<Matrix> q_bar(static_cast<std::size_t>(k) + 1,
                              Matrix(static_cast<std::size_t>(c), static_cast<std::size_t>(n)));
    // pi_bar[t] pairs with trace[t].positive_gate_probs. In fixed-gate mode
    // every round aliases round 0, so all contributions accumulate there.
    std::vector<std::vector<double>> pi_bar(
        static_cast<std::size_t>(k) + 1,
        std::vector<double>(graph.directed_edges.size(), 0.0));

    // Cross-entropy seed at the output round.
    for (int i : labeled) {
        const int z = *labels.class_label[static_cast<std::size_t>(i)];
        const double q = forward.refined_sim(static_cast<std::size_t>(z), static_cast<std::size_t>(i));
        q_bar[static_cast<std::size_t>(k)](static_cast<std::size_t>(z), static_cast<std::size_t>(i)) -=
            1.0 / (dn * std::max(q, kProbFloor));
    }

    std::vector<double> logit_bar(static_cast<std::size_t>(c));
    std::vector<double> q_col(static_cast<std::size_t>(c));
    std::vector<double> qb_col(static_cast<std::size_t>(c));

    auto node_round_backward = [&](int t) {
        const Matrix& q_t = trace[static_cast<std::size_t>(t)].node_beliefs;
        const Matrix& q_prev = trace[static_cast<std::size_t>(t) - 1].node_beliefs;
        const std::vector<double>& pi_prev =
            trace[static_cast<std::size_t>(t) - 1].positive_gate_probs;
        const std::vector<double>& pin = trace[0].negative_gate_probs;
        std::vector<double>& pi_prev_bar =
            adaptive ? pi_bar[static_cast<std::size_t>(t) - 1] : pi_bar[0];
        Matrix& q_prev_bar = q_bar[static_cast<std::size_t>(t) - 1];

        for (int i = 0; i < n; ++i) {
            for (int l = 0; l < c; ++l) {
                q_col[static_cast<std::size_t>(l)] =
                    q_t(static_cast<std::size_t>(l), static_cast<std::size_t>(i));
                qb_col[static_cast<std::size_t>(l)] =
                    q_bar[static_cast<std::size_t>(t)](static_cast<std::size_t>(l),
                                                       static_cast<std::size_t>(i));
                logit_bar[static_cast<std::size_t>(l)] = 0.0;
            }
            softmax_backward_accum(q_col, qb_col, logit_bar);

            for (int l = 0; l < c; ++l) {
                const double g = logit_bar[static_cast<std::size_t>(l)];
                if (g == 0.0) continue;
                const double s = instance.gallery_tracklet_sim(static_cast<std::size_t>(l),
                                                               static_cast<std::size_t>(i));
                grads.d_gallery_sim(static_cast<std::size_t>(l), static_cast<std::size_t>(i)) +=
                    config.temp_gallery * g;
                grads.d_temp_gallery += g * s;
            }

            auto message_backward = [&](int j, std::size_t e) {
                double g_dot_qj = 0.0;
                for (int l = 0; l < c; ++l)
                    g_dot_qj += logit_bar[static_cast<std::size_t>(l)] *
                                q_prev(static_cast<std::size_t>(l), static_cast<std::size_t>(j));
                pi_prev_bar[e] += config.alpha_positive * g_dot_qj;
                const double w = config.alpha_positive * pi_prev[e] -
                                 config.alpha_negative * pin[e];
                if (w != 0.0)
                    for (int l = 0; l < c; ++l)
                        q_prev_bar(static_cast<std::size_t>(l), static_cast<std::size_t>(j)) +=
                            w * logit_bar[static_cast<std::size_t>(l)];
            };

            const int base = graph.edge_offset[static_cast<std::size_t>(i)];
            const auto& nbrs = graph.neighbors[static_cast<std::size_t>(i)];
            for (std::size_t p = 0; p < nbrs.size(); ++p)
                message_backward(nbrs[p], static_cast<std::size_t>(base) + p);
            if (bidirectional)
                for (const auto& [j, e] : graph.incoming[static_cast<std::size_t>(i)])
                    message_backward(j, static_cast<std::size_t>(e));
        }
    };

    auto gate_round_backward = [&](int t) {
        // Adaptive gate update at round t: logits over N(i) were
        // T_t * s_ij + alpha_p * (q_{t-1,i} . q_{t-1,j}).
        const std::vector<double>& pi_t = trace[static_cast<std::size_t>(t)].positive_gate_probs;
        const std::vector<double>& pb = pi_bar[static_cast<std::size_t>(t)];
        const Matrix& q_prev = trace[static_cast<std::size_t>(t) - 1].node_beliefs;
        Matrix& q_prev_bar = q_bar[static_cast<std::size_t>(t) - 1];

        std::vector<double> u_bar;
        for (int i = 0; i < n; ++i) {
            const int deg = graph.out_degree(i);
            if (deg == 0) continue;
            const int base = graph.edge_offset[static_cast<std::size_t>(i)];
            // Masked entries hold pi = 0 and therefore get zero adjoint.
            double dot = 0.0;
            for (int p = 0; p < deg; ++p)
                dot += pb[static_cast<std::size_t>(base + p)] * pi_t[static_cast<std::size_t>(base + p)];
            u_bar.assign(static_cast<std::size_t>(deg), 0.0);
            bool any = false;
            for (int p = 0; p < deg; ++p) {
                const double u = pi_t[static_cast<std::size_t>(base + p)] *
                                 (pb[static_cast<std::size_t>(base + p)] - dot);
                u_bar[static_cast<std::size_t>(p)] = u;
                any = any || u != 0.0;
            }
            if (!any) continue;
            for (int p = 0; p < deg; ++p) {
                const double u = u_bar[static_cast<std::size_t>(p)];
                if (u == 0.0) continue;
                const int j = graph.neighbors[static_cast<std::size_t>(i)][static_cast<std::size_t>(p)];
                const double s = instance.tracklet_tracklet_sim(static_cast<std::size_t>(i),
                                                                static_cast<std::size_t>(j));
                grads.d_tracklet_sim(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) +=
                    config.temp_tracklet * u;
                grads.d_temp_tracklet += u * s;
                for (int l = 0; l < c; ++l) {
                    const double qi =
                        q_prev(static_cast<std::size_t>(l), static_cast<std::size_t>(i));
                    const double qj =
                        q_prev(static_cast<std::size_t>(l), static_cast<std::size_t>(j));
                    q_prev_bar(static_cast<std::size_t>(l), static_cast<std::size_t>(i)) +=
                        config.alpha_positive * u * qj;
                    q_prev_bar(static_cast<std::size_t>(l), static_cast<std::size_t>(j)) +=
                        config.alpha_positive * u * qi;
                }
            }
        }
    };

    for (int t = k; t >= 1; --t) {
        node_round_backward(t);
        if (adaptive) gate_round_backward(t);
    }

    // Round 0: unary softmax for beliefs, similarity-only softmax for gates.
    const Matrix& q0 = trace[0].node_beliefs;
    for (int i = 0; i < n; ++i) {
        for (int l = 0; l < c; ++l) {
            q_col[static_cast<std::size_t>(l)] =
                q0(static_cast<std::size_t>(l), static_cast<std::size_t>(i));
            qb_col[static_cast<std::size_t>(l)] =
                q_bar[0](static_cast<std::size_t>(l), static_cast<std::size_t>(i));
            logit_bar[static_cast<std::size_t>(l)] = 0.0;
        }
        softmax_backward_accum(q_col, qb_col, logit_bar);
        for (int l = 0; l < c; ++l) {
            const double g = logit_bar[static_cast<std::size_t>(l)];
            if (g == 0.0) continue;
            grads.d_gallery_sim(static_cast<std::size_t>(l), static_cast<std::size_t>(i)) +=
                config.temp_gallery * g;
            grads.d_temp_gallery +=
                g * instance.gallery_tracklet_sim(static_cast<std::size_t>(l),
                                                  static_cast<std::size_t>(i));
        }
    }
    const std::vector<double>& pi0 = trace[0].positive_gate_probs;
    for (int i = 0; i < n; ++i) {
        const int deg = graph.out_degree(i);
        if (deg == 0) continue;
        const int base = graph.edge_offset[static_cast<std::size_t>(i)];
        double dot = 0.0;
        for (int p = 0; p < deg; ++p)
            dot += pi_bar[0][static_cast<std::size_t>(base + p)] *
                   pi0[static_cast<std::size_t>(base + p)];
        for (int p = 0; p < deg; ++p) {
            const double u = pi0[static_cast<std::size_t>(base + p)] *
                             (pi_bar[0][static_cast<std::size_t>(base + p)] - dot);
            if (u == 0.0) continue;
            const int j = graph.neighbors[static_cast<std::size_t>(i)][static_cast<std::size_t>(p)];
            grads.d_tracklet_sim(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) +=
                config.temp_tracklet * u;
            grads.d_temp_tracklet +=
                u * instance.tracklet_tracklet_sim(static_cast<std::size_t>(i),
                                                   static_cast<std::size_t>(j));
        }
    }

    return result;
}

inline BackwardResult backward(const ProblemInstance& instance, const UggConfig& config,
                               const LossConfig& loss_config, const Labels& labels) {
    const ProblemInstance validated = validate_instance(instance);
    const Graph graph = build_graph(validated, config);
    return backward(validated, config, loss_config, labels, graph);
}

// ============================================================
// Finite-difference verification
// ============================================================

struct FiniteDifferenceReport {
    double temp_gallery_rel = 0.0;
    double temp_tracklet_rel = 0.0;
    double gallery_sim_rel = 0.0;
    double tracklet_sim_rel = 0.0;

    double max_rel() const {
        return std::max(std::max(temp_gallery_rel, temp_tracklet_rel),
                        std::max(gallery_sim_rel, tracklet_sim_rel));
    }
};

namespace detail {

// Coordinates where both sides sit below 1e-8 in magnitude count as
// matching zeros; elsewhere plain relative error. This keeps structurally
// zero gradients from being judged against central-difference roundoff.
inline double fd_relative_error(double analytic, double numeric) {
    const double denom = std::max(std::abs(analytic), std::abs(numeric));
    if (denom <= 1e-8) return 0.0;
    return std::abs(analytic - numeric) / denom;
}

}  // namespace detail

// Central-difference check of backward(): perturbs each temperature and
// every stored matrix entry by +-step and reports the worst relative error
// per parameter block. The graph is built once from the unperturbed
// instance and held fixed, mirroring the convention of backward().
inline FiniteDifferenceReport finite_difference_check(const ProblemInstance& instance,
                                                      const UggConfig& config,
                                                      const LossConfig& loss_config,
                                                      const Labels& labels, double step) {
    detail::require(step > 0.0, ErrorCode::kInvalidParams, "step must be positive");
    const ProblemInstance validated = validate_instance(instance);
    const Graph graph = build_graph(validated, config);
    const BackwardResult analytic = backward(validated, config, loss_config, labels, graph);

    const auto loss_at = [&](const ProblemInstance& inst, const UggConfig& cfg) {
        const InferenceResult fwd = run_inference(inst, cfg, graph);
        return loss(fwd.refined_sim, inst, labels, loss_config).value;
    };
    const auto central = [&](auto&& apply) {
        ProblemInstance plus = validated;
        UggConfig cfg_plus = config;
        apply(plus, cfg_plus, step);
        ProblemInstance minus = validated;
        UggConfig cfg_minus = config;
        apply(minus, cfg_minus, -step);
        return (loss_at(plus, cfg_plus) - loss_at(minus, cfg_minus)) / (2.0 * step);
    };

    FiniteDifferenceReport report;
    report.temp_gallery_rel = detail::fd_relative_error(
        analytic.gradients.d_temp_gallery,
        central([](ProblemInstance&, UggConfig& cfg, double h) { cfg.temp_gallery += h; }));
    report.temp_tracklet_rel = detail::fd_relative_error(
        analytic.gradients.d_temp_tracklet,
        central([](ProblemInstance&, UggConfig& cfg, double h) { cfg.temp_tracklet += h; }));

    for (std::size_t r = 0; r < validated.gallery_tracklet_sim.rows(); ++r)
        for (std::size_t col = 0; col < validated.gallery_tracklet_sim.cols(); ++col) {
            const double numeric = central([&](ProblemInstance& inst, UggConfig&, double h) {
                inst.gallery_tracklet_sim(r, col) += h;
            });
            report.gallery_sim_rel =
                std::max(report.gallery_sim_rel,
                         detail::fd_relative_error(
                             analytic.gradients.d_gallery_sim(r, col), numeric));
        }
    for (std::size_t r = 0; r < validated.tracklet_tracklet_sim.rows(); ++r)
        for (std::size_t col = 0; col < validated.tracklet_tracklet_sim.cols(); ++col) {
            const double numeric = central([&](ProblemInstance& inst, UggConfig&, double h) {
                inst.tracklet_tracklet_sim(r, col) += h;
            });
            report.tracklet_sim_rel =
                std::max(report.tracklet_sim_rel,
                         detail::fd_relative_error(
                             analytic.gradients.d_tracklet_sim(r, col), numeric));
        }
    return report;
}

}  // namespace ugg
