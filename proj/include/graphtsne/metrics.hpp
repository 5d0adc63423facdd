#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "graphtsne/graph.hpp"
#include "graphtsne/matrix.hpp"
#include "graphtsne/trainer.hpp"

namespace gtsne {

/// Venna-Kaski trustworthiness of the map with respect to feature-space
/// k-neighborhoods. Ranks of intruders are taken in the feature space.
/// Requires 1 <= k, 3k + 1 < 2N and k < N.
double feature_trustworthiness(const FeatureMatrix& x, const Embedding& y, std::size_t k);

/// Mean Jaccard similarity between r-hop graph neighborhoods and the
/// same-sized map neighborhoods (self excluded). Nodes with an empty r-hop
/// neighborhood count as 1.
double graph_trustworthiness(const Graph& g, const Embedding& y, int r);

/// Translate to zero mean and scale to unit mean squared norm. A map with all
/// points coincident is returned centered but unscaled.
Embedding standardize(const Embedding& y);

struct DistanceMetrics {
  double p_graph = 0.0;    // mean squared map length of graph edges
  double p_feature = 0.0;  // mean squared map length of kNN pairs
};

/// P_G and P_X on the standardized map.
DistanceMetrics distance_metrics(const Graph& g, std::span<const Edge> knn, const Embedding& y);

/// Mean accuracy of a 1-NN classifier in the map over a seeded k-fold split.
double knn_1_accuracy(const Embedding& y, std::span<const int> labels, std::size_t folds,
                      std::uint64_t seed = 0);

struct MetricOptions {
  std::size_t knn_k = 10;
  std::vector<std::size_t> trust_ks{6, 12, 18};
  std::vector<int> trust_rs{1, 2};
  std::size_t folds = 10;
  std::uint64_t seed = 0;
};

struct MetricsReport {
  double alpha = 0.0;
  std::map<std::size_t, double> t_feature;
  std::map<int, double> t_graph;
  double p_graph = 0.0;
  double p_feature = 0.0;
  double combined = 0.0;
  std::optional<double> knn_accuracy;
  double runtime_seconds = 0.0;
};

/// Full metric suite for a layout. `knn` is the feature kNN graph with
/// opts.knn_k neighbors; pass empty to have it computed.
MetricsReport evaluate_layout(const LabeledDataset& data, const Embedding& y,
                              const MetricOptions& opts, std::span<const Edge> knn = {});

// Flat JSON object; schema in docs/formats.md.
std::string to_json(const MetricsReport& report);
std::string to_json(std::span<const MetricsReport> reports);

struct SweepResult {
  std::vector<MetricsReport> reports;  // grid order
  std::size_t best_index = 0;
  double alpha_star = 0.0;
  Embedding best_layout;
};

/// Index of the smallest combined distance, ties toward the smaller alpha.
std::size_t select_alpha_star(std::span<const MetricsReport> reports);

/// Trains one model per alpha (same seed-derived init), evaluates each and
/// selects alpha* = argmin of P_G + P_X.
SweepResult alpha_sweep(const LabeledDataset& data, const TrainConfig& cfg,
                        std::span<const double> grid, const MetricOptions& opts = {},
                        const TrainHooks& hooks = {});

}  // namespace gtsne
