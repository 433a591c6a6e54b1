#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <vector>

#include "ugg/errors.hpp"
#include "ugg/matrix.hpp"

namespace ugg {

// ============================================================
// Ranking metrics
// ============================================================
//
// Conventions shared by every metric here:
//   - ranking is by descending score, ties broken toward the lower index
//     (stable and deterministic);
//   - galleries with no relevant tracklet are excluded from gallery-side
//     averages (mAP, recall);
//   - tracklet-side metrics rank galleries within each column.

struct RankingReport {
    double mean_average_precision = 0.0;
    std::map<int, double> recall_at_k;
    std::map<int, double> topk_accuracy;
    // AP per gallery; nullopt for galleries with no relevant tracklet.
    std::vector<std::optional<double>> per_query_average_precision;
};

namespace detail {

// Indices 0..n-1 ordered by descending value, ties toward the lower index.
inline std::vector<int> ranked_indices(const std::vector<double>& values) {
    std::vector<int> order(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const double va = values[static_cast<std::size_t>(a)];
        const double vb = values[static_cast<std::size_t>(b)];
        if (va != vb) return va > vb;
        return a < b;
    });
    return order;
}

inline std::vector<double> matrix_row(const Matrix& m, std::size_t r) {
    std::vector<double> row(m.cols());
    for (std::size_t c = 0; c < m.cols(); ++c) row[c] = m(r, c);
    return row;
}

inline std::vector<double> matrix_col(const Matrix& m, std::size_t c) {
    std::vector<double> col(m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r) col[r] = m(r, c);
    return col;
}

}  // namespace detail

// Average precision for one gallery row: mean, over the relevant tracklets,
// of precision at each one's rank. nullopt when the gallery has no
// relevant tracklet.
inline std::optional<double> average_precision(const std::vector<double>& scores,
                                               const std::vector<int>& relevant) {
    if (relevant.empty()) return std::nullopt;
    std::vector<char> is_relevant(scores.size(), 0);
    for (int t : relevant) {
        detail::require(t >= 0 && static_cast<std::size_t>(t) < scores.size(),
                        ErrorCode::kIndexOutOfRange, "relevant tracklet index out of range");
        is_relevant[static_cast<std::size_t>(t)] = 1;
    }
    const std::vector<int> order = detail::ranked_indices(scores);
    double hits = 0.0;
    double precision_sum = 0.0;
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        if (is_relevant[static_cast<std::size_t>(order[rank])]) {
            hits += 1.0;
            precision_sum += hits / static_cast<double>(rank + 1);
        }
    }
    return precision_sum / static_cast<double>(relevant.size());
}

// Mean AP over galleries that have at least one relevant tracklet.
// relevance[l] is the set of tracklets belonging to gallery l.
inline double mean_average_precision(const Matrix& scores,
                                     const std::vector<std::vector<int>>& relevance) {
    detail::require(relevance.size() == scores.rows(), ErrorCode::kDimensionMismatch,
                    "relevance must list one set per gallery");
    double total = 0.0;
    int included = 0;
    for (std::size_t l = 0; l < scores.rows(); ++l) {
        const auto ap = average_precision(detail::matrix_row(scores, l), relevance[l]);
        if (ap.has_value()) {
            total += *ap;
            ++included;
        }
    }
    detail::require(included > 0, ErrorCode::kNoRelevantItemsAnywhere,
                    "no gallery has a relevant tracklet");
    return total / static_cast<double>(included);
}

// Fraction of galleries (with >= 1 relevant tracklet) whose top-k ranked
// tracklets contain a relevant one. 0 when no gallery qualifies.
inline double recall_at_k(const Matrix& scores, const std::vector<std::vector<int>>& relevance,
                          int k) {
    detail::require(k >= 1, ErrorCode::kInvalidParams, "k must be >= 1");
    detail::require(relevance.size() == scores.rows(), ErrorCode::kDimensionMismatch,
                    "relevance must list one set per gallery");
    int included = 0;
    int hits = 0;
    for (std::size_t l = 0; l < scores.rows(); ++l) {
        if (relevance[l].empty()) continue;
        ++included;
        std::vector<char> is_relevant(scores.cols(), 0);
        for (int t : relevance[l]) is_relevant[static_cast<std::size_t>(t)] = 1;
        const std::vector<int> order = detail::ranked_indices(detail::matrix_row(scores, l));
        const auto depth = std::min<std::size_t>(static_cast<std::size_t>(k), order.size());
        for (std::size_t rank = 0; rank < depth; ++rank) {
            if (is_relevant[static_cast<std::size_t>(order[rank])]) {
                ++hits;
                break;
            }
        }
    }
    return included == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(included);
}

// Fraction of tracklets whose true gallery appears among the k top-scoring
// galleries of their column.
inline double topk_accuracy(const Matrix& scores, const std::vector<int>& true_identity, int k) {
    detail::require(k >= 1, ErrorCode::kInvalidParams, "k must be >= 1");
    detail::require(true_identity.size() == scores.cols(), ErrorCode::kDimensionMismatch,
                    "true_identity must have one entry per tracklet");
    int hits = 0;
    for (std::size_t i = 0; i < scores.cols(); ++i) {
        const int truth = true_identity[i];
        detail::require(truth >= 0 && static_cast<std::size_t>(truth) < scores.rows(),
                        ErrorCode::kLabelOutOfRange, "true identity outside gallery range");
        const std::vector<int> order = detail::ranked_indices(detail::matrix_col(scores, i));
        const auto depth = std::min<std::size_t>(static_cast<std::size_t>(k), order.size());
        for (std::size_t rank = 0; rank < depth; ++rank)
            if (order[rank] == truth) {
                ++hits;
                break;
            }
    }
    return scores.cols() == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(scores.cols());
}

// relevance[l] = tracklets whose true identity is l, ascending.
inline std::vector<std::vector<int>> relevance_from_true_identity(
    const std::vector<int>& true_identity, int num_galleries) {
    std::vector<std::vector<int>> relevance(static_cast<std::size_t>(num_galleries));
    for (std::size_t i = 0; i < true_identity.size(); ++i) {
        const int l = true_identity[i];
        detail::require(l >= 0 && l < num_galleries, ErrorCode::kLabelOutOfRange,
                        "true identity outside gallery range");
        relevance[static_cast<std::size_t>(l)].push_back(static_cast<int>(i));
    }
    return relevance;
}

inline RankingReport make_ranking_report(const Matrix& scores,
                                         const std::vector<int>& true_identity,
                                         const std::vector<int>& ks) {
    const auto relevance =
        relevance_from_true_identity(true_identity, static_cast<int>(scores.rows()));
    RankingReport report;
    report.mean_average_precision = mean_average_precision(scores, relevance);
    report.per_query_average_precision.resize(scores.rows());
    for (std::size_t l = 0; l < scores.rows(); ++l)
        report.per_query_average_precision[l] =
            average_precision(detail::matrix_row(scores, l), relevance[l]);
    for (int k : ks) {
        report.recall_at_k[k] = recall_at_k(scores, relevance, k);
        report.topk_accuracy[k] = topk_accuracy(scores, true_identity, k);
    }
    return report;
}

}  // namespace ugg
