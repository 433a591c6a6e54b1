#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace ugg {

// Probabilities are floored at this value before any logarithm.
inline constexpr double kProbFloor = 1e-300;

inline double safe_log(double p) { return std::log(std::max(p, kProbFloor)); }

// Numerically stable softmax (max subtraction). Writes into `out`, which
// must have the same length as `logits`. Empty input is a no-op.
inline void softmax_into(std::span<const double> logits, std::span<double> out) {
    const std::size_t n = logits.size();
    if (n == 0) return;
    double hi = logits[0];
    for (std::size_t i = 1; i < n; ++i) hi = std::max(hi, logits[i]);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = std::exp(logits[i] - hi);
        total += out[i];
    }
    for (std::size_t i = 0; i < n; ++i) out[i] /= total;
}

inline std::vector<double> softmax(std::span<const double> logits) {
    std::vector<double> out(logits.size());
    softmax_into(logits, out);
    return out;
}

inline double log_sum_exp(std::span<const double> values) {
    if (values.empty()) return -std::numeric_limits<double>::infinity();
    double hi = values[0];
    for (double v : values) hi = std::max(hi, v);
    if (!std::isfinite(hi)) return hi;
    double total = 0.0;
    for (double v : values) total += std::exp(v - hi);
    return hi + std::log(total);
}

// Adjoint of y = softmax(z): z_bar = y .* (y_bar - <y_bar, y>).
// `y` and `y_bar` alias-free; result added into `z_bar` (accumulating).
inline void softmax_backward_accum(std::span<const double> y,
                                   std::span<const double> y_bar,
                                   std::span<double> z_bar) {
    double dot = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) dot += y_bar[i] * y[i];
    for (std::size_t i = 0; i < y.size(); ++i) z_bar[i] += y[i] * (y_bar[i] - dot);
}

}  // namespace ugg
