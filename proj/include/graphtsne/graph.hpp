#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "graphtsne/matrix.hpp"
#include "graphtsne/types.hpp"

namespace gtsne {

using Edge = std::pair<NodeId, NodeId>;

/// Undirected simple graph in CSR form.
///
/// Construction symmetrizes the input pairs, drops self-loops and duplicate
/// edges (both counted), and sorts every adjacency list.
class Graph {
 public:
  Graph() = default;
  Graph(std::size_t num_nodes, std::span<const Edge> edges);

  std::size_t num_nodes() const noexcept { return num_nodes_; }
  // Undirected edge count, each edge once.
  std::size_t num_edges() const noexcept { return edges_.size(); }

  std::span<const NodeId> neighbors(NodeId v) const {
    return {targets_.data() + offsets_[v], offsets_[v + 1] - offsets_[v]};
  }
  std::size_t degree(NodeId v) const { return offsets_[v + 1] - offsets_[v]; }

  // Canonical edges (i < j), sorted.
  std::span<const Edge> edges() const noexcept { return edges_; }
  std::span<const std::size_t> offsets() const noexcept { return offsets_; }
  std::span<const NodeId> targets() const noexcept { return targets_; }

  std::size_t self_loops_dropped() const noexcept { return self_loops_dropped_; }
  std::size_t duplicates_dropped() const noexcept { return duplicates_dropped_; }

 private:
  std::size_t num_nodes_ = 0;
  std::vector<std::size_t> offsets_{0};
  std::vector<NodeId> targets_;
  std::vector<Edge> edges_;
  std::size_t self_loops_dropped_ = 0;
  std::size_t duplicates_dropped_ = 0;
};

struct LabeledDataset {
  Graph graph;
  FeatureMatrix features;
  std::optional<std::vector<int>> labels;

  std::size_t num_nodes() const noexcept { return graph.num_nodes(); }
  // Throws ArgumentError when feature rows or label count disagree with the graph.
  void validate() const;
};

/// Dense nonnegative distances between a row set and a column set.
/// Unreachable graph pairs hold kUnreachable.
class DistanceMatrix {
 public:
  DistanceMatrix() = default;
  explicit DistanceMatrix(Matrix values) : values_(std::move(values)) {}

  std::size_t rows() const noexcept { return values_.rows(); }
  std::size_t cols() const noexcept { return values_.cols(); }
  bool square() const noexcept { return rows() == cols(); }

  double operator()(std::size_t i, std::size_t j) const { return values_(i, j); }
  std::span<const double> row(std::size_t i) const { return values_.row(i); }
  bool reachable(std::size_t i, std::size_t j) const { return !is_unreachable(values_(i, j)); }

  const Matrix& values() const noexcept { return values_; }
  Matrix& values() noexcept { return values_; }

 private:
  Matrix values_;
};

/// Shortest-path hop counts for sources x targets. hop_cap < 0 means no cap;
/// pairs farther than the cap are reported unreachable.
DistanceMatrix bfs_shortest_paths(const Graph& g, std::span<const NodeId> sources,
                                  std::span<const NodeId> targets, int hop_cap = -1);

/// All-pairs hop distances (N x N).
DistanceMatrix all_pairs_shortest_paths(const Graph& g);

/// Directed kNN pairs (i, j): j among the k nearest rows of x to row i by
/// squared Euclidean distance, self excluded, ties to the smaller index.
/// Sorted by i, then by rank.
std::vector<Edge> knn_graph(const FeatureMatrix& x, std::size_t k);

/// Layered neighbor expansion of a mini-batch.
///
/// frontiers[0] holds the batch nodes. Step t samples at most fanouts[t]
/// neighbors (without replacement) of every node in frontiers[t];
/// frontiers[t + 1] is frontiers[t] followed by the newly reached nodes, so
/// every frontier is a prefix of the next one and a node's local index is the
/// same at every depth. sampled[t] stores the sampled neighbors of
/// frontiers[t] in CSR form over local indices.
struct SubsampledBatch {
  struct Block {
    std::vector<std::size_t> offsets;  // frontier_size(t) + 1 entries
    std::vector<NodeId> neighbors;     // local indices
  };

  std::vector<NodeId> nodes;                // local -> global, size of the deepest frontier
  std::vector<std::size_t> frontier_sizes;  // frontier_sizes[t] = |frontiers[t]|
  std::vector<Block> sampled;               // one block per expansion step

  std::size_t batch_size() const { return frontier_sizes.front(); }
  std::size_t depth() const { return sampled.size(); }
  std::span<const NodeId> frontier(std::size_t t) const {
    return {nodes.data(), frontier_sizes[t]};
  }

  // Local ids reachable from batch member b by sampled paths of exactly
  // depth() hops. Its size is bounded by the product of the fan-outs.
  std::vector<NodeId> receptive_field(std::size_t b) const;
  // Local ids whose features can influence b's output: b plus every node
  // reached by a sampled path of length 1..depth().
  std::vector<NodeId> dependency_closure(std::size_t b) const;
};

SubsampledBatch neighbor_subsample(const Graph& g, std::span<const NodeId> batch_nodes,
                                   std::span<const std::size_t> fanouts, std::uint64_t seed);

}  // namespace gtsne
