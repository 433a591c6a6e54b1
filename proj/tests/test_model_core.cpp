#include <catch2/catch_amalgamated.hpp>

#include "test_support.hpp"
#include "ugg/graph.hpp"
#include "ugg/model.hpp"

using ugg::ErrorCode;
using ugg_test::error_code_of;
using ugg_test::zero_instance;

TEST_CASE("validate_instance accepts the degenerate all-zero instance") {
    const ugg::ProblemInstance instance = ugg::validate_instance(zero_instance(2, 2));
    REQUIRE(instance.num_galleries == 2);
    REQUIRE(instance.num_tracklets == 2);
}

TEST_CASE("validate_instance rejects each invariant violation with its code") {
    SECTION("asymmetric cannot_link") {
        ugg::ProblemInstance bad = zero_instance(2, 2);
        bad.cannot_link(0, 1) = 1.0;
        REQUIRE(error_code_of([&] { ugg::validate_instance(bad); }) == ErrorCode::kNonSymmetric);
    }
    SECTION("non-finite tracklet similarity") {
        ugg::ProblemInstance bad = zero_instance(2, 3);
        bad.tracklet_tracklet_sim(1, 2) = std::numeric_limits<double>::quiet_NaN();
        bad.tracklet_tracklet_sim(2, 1) = std::numeric_limits<double>::quiet_NaN();
        REQUIRE(error_code_of([&] { ugg::validate_instance(bad); }) ==
                ErrorCode::kNonFiniteEntry);
    }
    SECTION("non-binary cannot_link") {
        ugg::ProblemInstance bad = zero_instance(2, 2);
        bad.cannot_link(0, 1) = 0.5;
        bad.cannot_link(1, 0) = 0.5;
        REQUIRE(error_code_of([&] { ugg::validate_instance(bad); }) ==
                ErrorCode::kNonBinaryCannotLink);
    }
    SECTION("cannot_link self loop") {
        ugg::ProblemInstance bad = zero_instance(2, 2);
        bad.cannot_link(1, 1) = 1.0;
        REQUIRE(error_code_of([&] { ugg::validate_instance(bad); }) ==
                ErrorCode::kCannotLinkSelfLoop);
    }
    SECTION("asymmetric tracklet similarity") {
        ugg::ProblemInstance bad = zero_instance(2, 2);
        bad.tracklet_tracklet_sim(0, 1) = 0.25;
        REQUIRE(error_code_of([&] { ugg::validate_instance(bad); }) == ErrorCode::kNonSymmetric);
    }
    SECTION("dimension mismatch") {
        ugg::ProblemInstance bad = zero_instance(2, 2);
        bad.gallery_tracklet_sim = ugg::Matrix(2, 3);
        REQUIRE(error_code_of([&] { ugg::validate_instance(bad); }) ==
                ErrorCode::kDimensionMismatch);
    }
}

TEST_CASE("validate_instance is idempotent") {
    ugg::Rng rng(11);
    const ugg::ProblemInstance instance = ugg_test::random_instance(rng, 4, 3);
    const ugg::ProblemInstance once = ugg::validate_instance(instance);
    const ugg::ProblemInstance twice = ugg::validate_instance(once);
    REQUIRE(once.gallery_tracklet_sim == twice.gallery_tracklet_sim);
    REQUIRE(once.tracklet_tracklet_sim == twice.tracklet_tracklet_sim);
    REQUIRE(once.cannot_link == twice.cannot_link);
}

TEST_CASE("build_graph full policy connects everything but self") {
    const ugg::ProblemInstance instance = zero_instance(2, 3);
    ugg::UggConfig config;
    const ugg::Graph graph = ugg::build_graph(instance, config);
    REQUIRE(graph.neighbors[0] == std::vector<int>{1, 2});
    REQUIRE(graph.neighbors[1] == std::vector<int>{0, 2});
    REQUIRE(graph.neighbors[2] == std::vector<int>{0, 1});
    REQUIRE(graph.directed_edges.size() == 6);
}

TEST_CASE("build_graph top_k keeps the largest similarity") {
    ugg::ProblemInstance instance = zero_instance(2, 3);
    instance.tracklet_tracklet_sim(0, 1) = 0.9;
    instance.tracklet_tracklet_sim(1, 0) = 0.9;
    instance.tracklet_tracklet_sim(0, 2) = 0.1;
    instance.tracklet_tracklet_sim(2, 0) = 0.1;
    ugg::UggConfig config;
    config.neighborhood_policy = ugg::NeighborhoodPolicy::top_k(1);
    const ugg::Graph graph = ugg::build_graph(instance, config);
    REQUIRE(graph.neighbors[0] == std::vector<int>{1});
}

TEST_CASE("build_graph top_k ties go to the lower index") {
    ugg::ProblemInstance instance = zero_instance(2, 3);
    instance.tracklet_tracklet_sim(0, 1) = 0.5;
    instance.tracklet_tracklet_sim(1, 0) = 0.5;
    instance.tracklet_tracklet_sim(0, 2) = 0.5;
    instance.tracklet_tracklet_sim(2, 0) = 0.5;
    ugg::UggConfig config;
    config.neighborhood_policy = ugg::NeighborhoodPolicy::top_k(1);
    const ugg::Graph graph = ugg::build_graph(instance, config);
    REQUIRE(graph.neighbors[0] == std::vector<int>{1});
}

TEST_CASE("build_graph threshold keeps similarities at or above tau") {
    ugg::ProblemInstance instance = zero_instance(2, 3);
    instance.tracklet_tracklet_sim(0, 1) = 0.7;
    instance.tracklet_tracklet_sim(1, 0) = 0.7;
    instance.tracklet_tracklet_sim(1, 2) = 0.3;
    instance.tracklet_tracklet_sim(2, 1) = 0.3;
    ugg::UggConfig config;
    config.neighborhood_policy = ugg::NeighborhoodPolicy::threshold(0.5);
    const ugg::Graph graph = ugg::build_graph(instance, config);
    REQUIRE(graph.neighbors[0] == std::vector<int>{1});
    REQUIRE(graph.neighbors[1] == std::vector<int>{0});
    REQUIRE(graph.neighbors[2].empty());
}

TEST_CASE("build_graph is deterministic and full neighborhoods have size N-1") {
    ugg::Rng rng(5);
    for (int n : {1, 2, 5, 8}) {
        const ugg::ProblemInstance instance = ugg_test::random_instance(rng, n, 3);
        ugg::UggConfig config;
        const ugg::Graph a = ugg::build_graph(instance, config);
        const ugg::Graph b = ugg::build_graph(instance, config);
        REQUIRE(a.neighbors == b.neighbors);
        REQUIRE(a.directed_edges == b.directed_edges);
        for (int i = 0; i < n; ++i)
            REQUIRE(static_cast<int>(a.neighbors[static_cast<std::size_t>(i)].size()) == n - 1);
    }
}

TEST_CASE("build_graph rejects an empty node set") {
    ugg::ProblemInstance empty;
    empty.num_tracklets = 0;
    REQUIRE(error_code_of([&] { ugg::build_graph(empty, ugg::UggConfig{}); }) ==
            ErrorCode::kEmptyGraph);
}

TEST_CASE("full and threshold graphs are symmetric") {
    ugg::Rng rng(29);
    const ugg::ProblemInstance instance = ugg_test::random_instance(rng, 6, 3);
    for (const auto policy : {ugg::NeighborhoodPolicy::full(),
                              ugg::NeighborhoodPolicy::threshold(0.1),
                              ugg::NeighborhoodPolicy::threshold(-0.4)}) {
        ugg::UggConfig config;
        config.neighborhood_policy = policy;
        const ugg::Graph graph = ugg::build_graph(instance, config);
        for (const auto& [i, j] : graph.directed_edges) {
            const auto& back = graph.neighbors[static_cast<std::size_t>(j)];
            REQUIRE(std::find(back.begin(), back.end(), i) != back.end());
        }
    }
}

TEST_CASE("validate_config rejects out-of-range fields") {
    ugg::UggConfig config;
    config.temp_gallery = 0.0;
    REQUIRE(error_code_of([&] { ugg::validate_config(config); }) == ErrorCode::kInvalidConfig);
    config = {};
    config.alpha_positive = -1.0;
    REQUIRE(error_code_of([&] { ugg::validate_config(config); }) == ErrorCode::kInvalidConfig);
    config = {};
    config.iterations = -1;
    REQUIRE(error_code_of([&] { ugg::validate_config(config); }) == ErrorCode::kInvalidConfig);
    config = {};
    config.neighborhood_policy = ugg::NeighborhoodPolicy::top_k(0);
    REQUIRE(error_code_of([&] { ugg::validate_config(config); }) == ErrorCode::kInvalidConfig);
}

TEST_CASE("incoming edge lists invert the outgoing lists") {
    ugg::Rng rng(17);
    const ugg::ProblemInstance instance = ugg_test::random_instance(rng, 5, 3);
    ugg::UggConfig config;
    config.neighborhood_policy = ugg::NeighborhoodPolicy::top_k(2);
    const ugg::Graph graph = ugg::build_graph(instance, config);
    std::size_t total_incoming = 0;
    for (int i = 0; i < graph.num_nodes; ++i) {
        for (const auto& [j, e] : graph.incoming[static_cast<std::size_t>(i)]) {
            REQUIRE(graph.directed_edges[static_cast<std::size_t>(e)] == std::make_pair(j, i));
            ++total_incoming;
        }
    }
    REQUIRE(total_incoming == graph.directed_edges.size());
}
