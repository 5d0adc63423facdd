#include "graphtsne/graph.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <string>

#include "graphtsne/error.hpp"
#include "graphtsne/kernels.hpp"

namespace gtsne {

Graph::Graph(std::size_t num_nodes, std::span<const Edge> edges) : num_nodes_(num_nodes) {
  std::vector<Edge> canonical;
  canonical.reserve(edges.size());
  for (auto [a, b] : edges) {
    if (a < 0 || b < 0 || static_cast<std::size_t>(a) >= num_nodes ||
        static_cast<std::size_t>(b) >= num_nodes) {
      throw ArgumentError("edge (" + std::to_string(a) + ", " + std::to_string(b) +
                          ") has an endpoint outside [0, " + std::to_string(num_nodes) + ")");
    }
    if (a == b) {
      ++self_loops_dropped_;
      continue;
    }
    canonical.emplace_back(std::min(a, b), std::max(a, b));
  }
  std::sort(canonical.begin(), canonical.end());
  const auto last = std::unique(canonical.begin(), canonical.end());
  duplicates_dropped_ = static_cast<std::size_t>(canonical.end() - last);
  canonical.erase(last, canonical.end());
  edges_ = std::move(canonical);

  std::vector<std::size_t> degree(num_nodes, 0);
  for (auto [a, b] : edges_) {
    ++degree[a];
    ++degree[b];
  }
  offsets_.assign(num_nodes + 1, 0);
  for (std::size_t v = 0; v < num_nodes; ++v) offsets_[v + 1] = offsets_[v] + degree[v];
  targets_.resize(offsets_.back());
  std::vector<std::size_t> cursor(offsets_.begin(), offsets_.end() - 1);
  for (auto [a, b] : edges_) {
    targets_[cursor[a]++] = b;
    targets_[cursor[b]++] = a;
  }
  for (std::size_t v = 0; v < num_nodes; ++v)
    std::sort(targets_.begin() + static_cast<std::ptrdiff_t>(offsets_[v]),
              targets_.begin() + static_cast<std::ptrdiff_t>(offsets_[v + 1]));
}

void LabeledDataset::validate() const {
  if (features.rows() != graph.num_nodes())
    throw ArgumentError("feature matrix has " + std::to_string(features.rows()) +
                        " rows but the graph has " + std::to_string(graph.num_nodes()) + " nodes");
  if (labels && labels->size() != graph.num_nodes())
    throw ArgumentError("label count " + std::to_string(labels->size()) +
                        " does not match node count " + std::to_string(graph.num_nodes()));
}

DistanceMatrix bfs_shortest_paths(const Graph& g, std::span<const NodeId> sources,
                                  std::span<const NodeId> targets, int hop_cap) {
  auto in_range = [&](NodeId v) {
    return v >= 0 && static_cast<std::size_t>(v) < g.num_nodes();
  };
  if (!std::all_of(sources.begin(), sources.end(), in_range) ||
      !std::all_of(targets.begin(), targets.end(), in_range))
    throw ArgumentError("bfs_shortest_paths: node id out of range");
  Matrix out;
  kernels::bfs_distances(g.offsets(), g.targets(), sources, targets, hop_cap, out);
  return DistanceMatrix(std::move(out));
}

DistanceMatrix all_pairs_shortest_paths(const Graph& g) {
  std::vector<NodeId> all(g.num_nodes());
  std::iota(all.begin(), all.end(), NodeId{0});
  return bfs_shortest_paths(g, all, all);
}

std::vector<Edge> knn_graph(const FeatureMatrix& x, std::size_t k) {
  if (k >= x.rows())
    throw ArgumentError("knn_graph: k = " + std::to_string(k) + " must be smaller than N = " +
                        std::to_string(x.rows()));
  std::vector<NodeId> idx(x.rows() * k);
  kernels::knn_indices(x, k, idx);
  std::vector<Edge> out;
  out.reserve(idx.size());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t r = 0; r < k; ++r) out.emplace_back(static_cast<NodeId>(i), idx[i * k + r]);
  return out;
}

SubsampledBatch neighbor_subsample(const Graph& g, std::span<const NodeId> batch_nodes,
                                   std::span<const std::size_t> fanouts, std::uint64_t seed) {
  SubsampledBatch batch;
  std::vector<NodeId> local(g.num_nodes(), -1);
  for (NodeId v : batch_nodes) {
    if (v < 0 || static_cast<std::size_t>(v) >= g.num_nodes())
      throw ArgumentError("neighbor_subsample: batch node out of range");
    if (local[v] >= 0) throw ArgumentError("neighbor_subsample: duplicate batch node");
    local[v] = static_cast<NodeId>(batch.nodes.size());
    batch.nodes.push_back(v);
  }
  batch.frontier_sizes.push_back(batch.nodes.size());

  std::mt19937_64 rng(seed);
  std::vector<NodeId> pool;
  for (std::size_t fanout : fanouts) {
    const std::size_t current = batch.nodes.size();
    SubsampledBatch::Block block;
    block.offsets.reserve(current + 1);
    block.offsets.push_back(0);
    for (std::size_t u = 0; u < current; ++u) {
      const auto nbrs = g.neighbors(batch.nodes[u]);
      pool.assign(nbrs.begin(), nbrs.end());
      const std::size_t take = std::min(fanout, pool.size());
      // Partial Fisher-Yates: the first `take` slots become a uniform sample.
      for (std::size_t s = 0; s < take; ++s) {
        std::uniform_int_distribution<std::size_t> pick(s, pool.size() - 1);
        std::swap(pool[s], pool[pick(rng)]);
      }
      std::sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take));
      for (std::size_t s = 0; s < take; ++s) {
        const NodeId v = pool[s];
        if (local[v] < 0) {
          local[v] = static_cast<NodeId>(batch.nodes.size());
          batch.nodes.push_back(v);
        }
        block.neighbors.push_back(local[v]);
      }
      block.offsets.push_back(block.neighbors.size());
    }
    batch.sampled.push_back(std::move(block));
    batch.frontier_sizes.push_back(batch.nodes.size());
  }
  return batch;
}

std::vector<NodeId> SubsampledBatch::receptive_field(std::size_t b) const {
  std::vector<NodeId> level{static_cast<NodeId>(b)};
  for (const Block& block : sampled) {
    std::vector<NodeId> next;
    for (NodeId u : level)
      next.insert(next.end(), block.neighbors.begin() + static_cast<std::ptrdiff_t>(block.offsets[u]),
                  block.neighbors.begin() + static_cast<std::ptrdiff_t>(block.offsets[u + 1]));
    std::sort(next.begin(), next.end());
    next.erase(std::unique(next.begin(), next.end()), next.end());
    level = std::move(next);
  }
  return level;
}

std::vector<NodeId> SubsampledBatch::dependency_closure(std::size_t b) const {
  std::vector<NodeId> all{static_cast<NodeId>(b)};
  std::vector<NodeId> level = all;
  for (const Block& block : sampled) {
    std::vector<NodeId> next;
    for (NodeId u : level)
      next.insert(next.end(), block.neighbors.begin() + static_cast<std::ptrdiff_t>(block.offsets[u]),
                  block.neighbors.begin() + static_cast<std::ptrdiff_t>(block.offsets[u + 1]));
    // Residual connections keep the node itself in play at the next depth.
    next.insert(next.end(), level.begin(), level.end());
    std::sort(next.begin(), next.end());
    next.erase(std::unique(next.begin(), next.end()), next.end());
    all.insert(all.end(), next.begin(), next.end());
    level = std::move(next);
  }
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  return all;
}

}  // namespace gtsne
