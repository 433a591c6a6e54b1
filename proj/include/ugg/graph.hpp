#pragma once

#include <algorithm>
#include <numeric>
#include <utility>
#include <vector>

#include "ugg/errors.hpp"
#include "ugg/model.hpp"

namespace ugg {

// Directed neighborhood structure over tracklet nodes. neighbors[i] is
// N(i), ascending, never containing i. directed_edges lists (i, j) for
// every i and j in N(i), grouped by source node; edge_offset[i] is the
// first edge of source i (size N + 1). incoming[i] holds (j, edge index
// of j->i) for every j with i in N(j), ascending in j; top_k graphs may
// be asymmetric, so incoming is not derivable from neighbors[i] alone.
struct Graph {
    int num_nodes = 0;
    std::vector<std::vector<int>> neighbors;
    std::vector<std::pair<int, int>> directed_edges;
    std::vector<int> edge_offset;
    std::vector<std::vector<std::pair<int, int>>> incoming;

    int out_degree(int i) const {
        return edge_offset[static_cast<std::size_t>(i) + 1] - edge_offset[i];
    }

    // Index into directed_edges / gate arrays for the p-th neighbor of i.
    int edge_index(int i, int p) const { return edge_offset[i] + p; }
};

// Builds neighbor lists according to config.neighborhood_policy.
//   full:         N(i) = all nodes except i.
//   top_k(k):     the k largest tracklet similarities per source row,
//                 ties broken toward the lower index; may be asymmetric.
//   threshold(t): { j != i : s_ij >= t }.
// Deterministic: identical inputs give identical lists including order
// (neighbor lists are ascending by index).
inline Graph build_graph(const ProblemInstance& instance, const UggConfig& config) {
    const int n = instance.num_tracklets;
    detail::require(n > 0, ErrorCode::kEmptyGraph, "graph needs at least one node");

    const Matrix& sim = instance.tracklet_tracklet_sim;
    const NeighborhoodPolicy& policy = config.neighborhood_policy;

    Graph graph;
    graph.num_nodes = n;
    graph.neighbors.resize(static_cast<std::size_t>(n));

    for (int i = 0; i < n; ++i) {
        std::vector<int>& nbrs = graph.neighbors[static_cast<std::size_t>(i)];
        switch (policy.kind) {
            case NeighborhoodPolicyKind::kFull:
                for (int j = 0; j < n; ++j)
                    if (j != i) nbrs.push_back(j);
                break;
            case NeighborhoodPolicyKind::kTopK: {
                std::vector<int> order;
                for (int j = 0; j < n; ++j)
                    if (j != i) order.push_back(j);
                std::sort(order.begin(), order.end(), [&](int a, int b) {
                    const double sa = sim(static_cast<std::size_t>(i), static_cast<std::size_t>(a));
                    const double sb = sim(static_cast<std::size_t>(i), static_cast<std::size_t>(b));
                    if (sa != sb) return sa > sb;
                    return a < b;  // tie: lower index wins
                });
                const auto keep = std::min<std::size_t>(order.size(),
                                                        static_cast<std::size_t>(policy.k));
                nbrs.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep));
                std::sort(nbrs.begin(), nbrs.end());
                break;
            }
            case NeighborhoodPolicyKind::kThreshold:
                for (int j = 0; j < n; ++j)
                    if (j != i &&
                        sim(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) >= policy.tau)
                        nbrs.push_back(j);
                break;
        }
    }

    graph.edge_offset.assign(static_cast<std::size_t>(n) + 1, 0);
    for (int i = 0; i < n; ++i) {
        graph.edge_offset[static_cast<std::size_t>(i) + 1] =
            graph.edge_offset[static_cast<std::size_t>(i)] +
            static_cast<int>(graph.neighbors[static_cast<std::size_t>(i)].size());
        for (int j : graph.neighbors[static_cast<std::size_t>(i)])
            graph.directed_edges.emplace_back(i, j);
    }

    graph.incoming.resize(static_cast<std::size_t>(n));
    for (int e = 0; e < static_cast<int>(graph.directed_edges.size()); ++e) {
        const auto [src, dst] = graph.directed_edges[static_cast<std::size_t>(e)];
        graph.incoming[static_cast<std::size_t>(dst)].emplace_back(src, e);
    }

    return graph;
}

}  // namespace ugg
