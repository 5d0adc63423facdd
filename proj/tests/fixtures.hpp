#pragma once

// Synthetic inputs shared by the unit tests, the acceptance suite and bench/.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "graphtsne/graph.hpp"
#include "graphtsne/matrix.hpp"

namespace fixtures {

using gtsne::Edge;
using gtsne::Matrix;
using gtsne::NodeId;

inline Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed,
                            double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(rows, cols);
  for (double& v : m.values()) v = u(rng);
  return m;
}

// Erdos-Renyi G(n, p) edge list.
inline std::vector<Edge> random_edges(std::size_t n, double p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(p);
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (coin(rng)) edges.emplace_back(static_cast<NodeId>(i), static_cast<NodeId>(j));
  return edges;
}

struct SbmSpec {
  std::vector<std::size_t> block_sizes{30, 30, 30};
  double p_in = 0.1;
  double p_out = 0.005;
  std::size_t feature_dim = 16;
  double separation = 3.0;  // distance scale between block means
  double noise = 1.0;
};

// Stochastic block model with Gaussian features centered on per-block means.
inline gtsne::LabeledDataset make_sbm(const SbmSpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<int> labels;
  for (std::size_t b = 0; b < spec.block_sizes.size(); ++b)
    labels.insert(labels.end(), spec.block_sizes[b], static_cast<int>(b));
  const std::size_t n = labels.size();

  std::vector<Edge> edges;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (u(rng) < (labels[i] == labels[j] ? spec.p_in : spec.p_out))
        edges.emplace_back(static_cast<NodeId>(i), static_cast<NodeId>(j));

  std::normal_distribution<double> g(0.0, 1.0);
  Matrix means(spec.block_sizes.size(), spec.feature_dim);
  for (double& v : means.values()) v = spec.separation * g(rng) / std::sqrt(2.0);
  Matrix x(n, spec.feature_dim);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < spec.feature_dim; ++c)
      x(i, c) = means(labels[i], c) + spec.noise * g(rng);

  gtsne::LabeledDataset data{gtsne::Graph(n, edges), std::move(x), std::move(labels)};
  return data;
}

// Citation-network stand-in with Cora's shape: 2708 nodes in 7 classes,
// 5429 undirected edges (80% within a class) and 1433 sparse binary
// features drawn mostly from a per-class vocabulary.
inline gtsne::LabeledDataset make_cora_like(std::uint64_t seed) {
  const std::vector<std::size_t> sizes{351, 217, 418, 818, 426, 298, 180};
  constexpr std::size_t kEdges = 5429, kWords = 1433, kPerNode = 18, kTopic = 200;
  std::mt19937_64 rng(seed);
  std::vector<int> labels;
  std::vector<std::vector<NodeId>> members(sizes.size());
  for (std::size_t c = 0; c < sizes.size(); ++c)
    for (std::size_t k = 0; k < sizes[c]; ++k) {
      members[c].push_back(static_cast<NodeId>(labels.size()));
      labels.push_back(static_cast<int>(c));
    }
  const std::size_t n = labels.size();
  std::uniform_int_distribution<std::size_t> any(0, n - 1);
  std::uniform_real_distribution<double> u(0.0, 1.0);

  std::set<Edge> edges;
  while (edges.size() < kEdges) {
    const NodeId a = static_cast<NodeId>(any(rng));
    NodeId b = static_cast<NodeId>(any(rng));
    if (u(rng) < 0.8) {
      const auto& same = members[labels[a]];
      b = same[rng() % same.size()];
    }
    if (a == b) continue;
    edges.insert({std::min(a, b), std::max(a, b)});
  }

  Matrix x(n, kWords);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t w = 0; w < kPerNode; ++w) {
      const std::size_t word = u(rng) < 0.6 ? (labels[i] * kTopic + rng() % kTopic) % kWords : rng() % kWords;
      x(i, word) = 1.0;
    }
  return {gtsne::Graph(n, std::vector<Edge>(edges.begin(), edges.end())), std::move(x), std::move(labels)};
}

// Writes `contents` to a fresh file under the system temp directory.
inline std::filesystem::path temp_file(const std::string& name, const std::string& contents) {
  const auto dir = std::filesystem::temp_directory_path() / "graphtsne_tests";
  std::filesystem::create_directories(dir);
  const auto path = dir / name;
  std::ofstream(path, std::ios::binary) << contents;
  return path;
}

}  // namespace fixtures
