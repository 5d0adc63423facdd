#include <algorithm>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "graphtsne/error.hpp"
#include "graphtsne/graph.hpp"
#include "oracles.hpp"

using namespace gtsne;

TEST_CASE("Graph symmetrizes and drops self-loops and duplicates") {
  const Graph g(4, std::vector<Edge>{{0, 1}, {1, 0}, {2, 2}, {3, 1}, {1, 3}, {0, 1}});
  CHECK(g.num_nodes() == 4);
  CHECK(g.num_edges() == 2);
  CHECK(g.self_loops_dropped() == 1);
  CHECK(g.duplicates_dropped() == 3);
  CHECK(g.degree(1) == 2);
  CHECK(g.degree(2) == 0);
  const auto n1 = g.neighbors(1);
  CHECK(std::vector<NodeId>(n1.begin(), n1.end()) == std::vector<NodeId>{0, 3});
  const auto e = g.edges();
  CHECK(std::vector<Edge>(e.begin(), e.end()) == std::vector<Edge>{{0, 1}, {1, 3}});

  CHECK(Graph(5, {}).num_edges() == 0);
  CHECK_THROWS_AS(Graph(3, std::vector<Edge>{{0, 3}}), ArgumentError);
  CHECK_THROWS_AS(Graph(3, std::vector<Edge>{{-1, 2}}), ArgumentError);
}

TEST_CASE("bfs_shortest_paths examples") {
  const Graph path(3, std::vector<Edge>{{0, 1}, {1, 2}});
  const DistanceMatrix d = all_pairs_shortest_paths(path);
  CHECK(d(0, 2) == 2.0);
  CHECK(d(2, 0) == 2.0);
  CHECK(d(1, 1) == 0.0);

  const Graph apart(2, {});
  const DistanceMatrix u = all_pairs_shortest_paths(apart);
  CHECK(is_unreachable(u(0, 1)));
  CHECK_FALSE(u.reachable(1, 0));

  const std::vector<NodeId> src{0};
  const std::vector<NodeId> dst{2, 1};
  const DistanceMatrix capped = bfs_shortest_paths(path, src, dst, 1);
  CHECK(is_unreachable(capped(0, 0)));
  CHECK(capped(0, 1) == 1.0);
  CHECK_THROWS_AS(bfs_shortest_paths(path, std::vector<NodeId>{3}, dst), ArgumentError);
}

TEST_CASE("bfs_shortest_paths matches Floyd-Warshall") {
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    const std::size_t n = 10 + 8 * seed;  // up to 106 nodes
    const auto edges = fixtures::random_edges(n, 2.5 / n, seed);
    const Graph g(n, edges);
    const DistanceMatrix d = all_pairs_shortest_paths(g);
    const Matrix fw = oracle::floyd_warshall(n, edges);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        CHECK(d(i, j) == fw(i, j));
        CHECK(d(i, j) == d(j, i));
      }
    for (std::size_t i = 0; i < n; ++i) CHECK(d(i, i) == 0.0);

    std::vector<NodeId> sources, targets;
    for (NodeId v = 0; v < static_cast<NodeId>(n); v += 3) sources.push_back(v);
    for (NodeId v = static_cast<NodeId>(n) - 1; v >= 0; v -= 4) targets.push_back(v);
    const DistanceMatrix part = bfs_shortest_paths(g, sources, targets);
    for (std::size_t s = 0; s < sources.size(); ++s)
      for (std::size_t t = 0; t < targets.size(); ++t) CHECK(part(s, t) == fw(sources[s], targets[t]));
  }
}

TEST_CASE("knn_graph") {
  Matrix line(3, 1);
  line(0, 0) = 0, line(1, 0) = 1, line(2, 0) = 10;
  CHECK(knn_graph(line, 1) == std::vector<Edge>{{0, 1}, {1, 0}, {2, 1}});

  Matrix dup(3, 2);
  dup(0, 0) = 5, dup(1, 0) = 5, dup(2, 0) = 5;  // all coincide
  CHECK(knn_graph(dup, 1) == std::vector<Edge>{{0, 1}, {1, 0}, {2, 0}});

  const Matrix x = fixtures::random_matrix(50, 5, 3);
  const auto k5 = knn_graph(x, 5);
  CHECK(std::set<Edge>(k5.begin(), k5.end()) == oracle::knn_pairs(x, 5));
  std::vector<int> out_degree(50, 0);
  for (const auto& [i, j] : k5) {
    ++out_degree[i];
    CHECK(i != j);
  }
  CHECK(std::all_of(out_degree.begin(), out_degree.end(), [](int d) { return d == 5; }));

  CHECK_THROWS_AS(knn_graph(x, 50), ArgumentError);
}

TEST_CASE("neighbor_subsample") {
  SUBCASE("dense graph keeps the receptive field within the fan-out product") {
    std::vector<Edge> edges;
    for (NodeId i = 0; i < 300; ++i)
      for (NodeId j = i + 1; j < 300; ++j)
        if ((i * 7 + j * 13) % 5 != 0) edges.emplace_back(i, j);
    const Graph g(300, edges);
    const std::vector<NodeId> batch{0, 50, 100, 150, 299};
    const std::vector<std::size_t> d{10, 15};
    const SubsampledBatch sb = neighbor_subsample(g, batch, d, 11);
    CHECK(sb.depth() == 2);
    for (std::size_t b = 0; b < batch.size(); ++b) {
      CHECK(sb.receptive_field(b).size() <= 150);
      CHECK(sb.dependency_closure(b).size() <= 1 + 10 + 150);
    }
    CHECK(sb.frontier_sizes[0] == 5);
    CHECK(sb.frontier_sizes[0] <= sb.frontier_sizes[1]);
    CHECK(sb.frontier_sizes[1] <= sb.frontier_sizes[2]);
    CHECK(sb.frontier_sizes[2] == sb.nodes.size());
    for (std::size_t t = 0; t < sb.depth(); ++t)
      for (std::size_t v = 0; v < sb.frontier_sizes[t]; ++v)
        CHECK(sb.sampled[t].offsets[v + 1] - sb.sampled[t].offsets[v] == std::min<std::size_t>(d[t], g.degree(sb.nodes[v])));
  }

  SUBCASE("undersized neighborhoods keep every neighbor") {
    const Graph g(5, std::vector<Edge>{{0, 1}, {0, 2}, {0, 3}});
    const std::vector<NodeId> batch{0};
    const std::vector<std::size_t> d{10};
    const SubsampledBatch sb = neighbor_subsample(g, batch, d, 1);
    const auto& blk = sb.sampled[0];
    std::set<NodeId> kept;
    for (std::size_t k = blk.offsets[0]; k < blk.offsets[1]; ++k) kept.insert(sb.nodes[blk.neighbors[k]]);
    CHECK(kept == std::set<NodeId>{1, 2, 3});
  }

  SUBCASE("sampling is deterministic for a fixed seed") {
    const Graph g(80, fixtures::random_edges(80, 0.2, 5));
    const std::vector<NodeId> batch{1, 2, 3, 40};
    const std::vector<std::size_t> d{3, 4};
    const SubsampledBatch a = neighbor_subsample(g, batch, d, 99);
    const SubsampledBatch b = neighbor_subsample(g, batch, d, 99);
    CHECK(a.nodes == b.nodes);
    CHECK(a.sampled[1].neighbors == b.sampled[1].neighbors);
    const SubsampledBatch c = neighbor_subsample(g, batch, d, 100);
    CHECK((c.nodes != a.nodes || c.sampled[0].neighbors != a.sampled[0].neighbors));
  }

  SUBCASE("sampled neighbors are real graph neighbors") {
    const Graph g(60, fixtures::random_edges(60, 0.15, 8));
    const std::vector<NodeId> batch{5, 9, 30};
    const std::vector<std::size_t> d{2, 3};
    const SubsampledBatch sb = neighbor_subsample(g, batch, d, 4);
    for (std::size_t t = 0; t < sb.depth(); ++t)
      for (std::size_t v = 0; v < sb.frontier_sizes[t]; ++v)
        for (std::size_t k = sb.sampled[t].offsets[v]; k < sb.sampled[t].offsets[v + 1]; ++k) {
          const auto nbrs = g.neighbors(sb.nodes[v]);
          CHECK(std::binary_search(nbrs.begin(), nbrs.end(), sb.nodes[sb.sampled[t].neighbors[k]]));
        }
  }

  SUBCASE("invalid batches are rejected") {
    const Graph g(5, std::vector<Edge>{{0, 1}});
    const std::vector<std::size_t> d{2};
    CHECK_THROWS_AS(neighbor_subsample(g, std::vector<NodeId>{1, 1}, d, 0), ArgumentError);
    CHECK_THROWS_AS(neighbor_subsample(g, std::vector<NodeId>{7}, d, 0), ArgumentError);
  }
}

TEST_CASE("LabeledDataset validation") {
  LabeledDataset ok{Graph(3, {}), Matrix(3, 2), std::vector<int>{0, 1, 0}};
  CHECK_NOTHROW(ok.validate());
  LabeledDataset rows{Graph(3, {}), Matrix(4, 2), {}};
  CHECK_THROWS_AS(rows.validate(), ArgumentError);
  LabeledDataset labels{Graph(3, {}), Matrix(3, 2), std::vector<int>{0, 1}};
  CHECK_THROWS_AS(labels.validate(), ArgumentError);
}
