#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "graphtsne/affinity.hpp"
#include "graphtsne/gcn.hpp"
#include "graphtsne/graph.hpp"

namespace gtsne {

enum class TrainMode { FullBatch, MiniBatch };

struct TrainConfig {
  double alpha = 0.5;  // weight of the graph clustering loss
  double perplexity = 30.0;
  std::size_t epochs = 360;
  std::size_t hidden_dim = 128;
  std::size_t num_layers = 2;
  std::size_t batch_count = 1000;
  std::vector<std::size_t> fanouts{10, 15};
  double lr = 0.00075;
  double lr_decay = 1.25;
  int patience = 5;
  int hop_cap = 20;  // mini-batch graph distances only
  std::uint64_t seed = 0;
  TrainMode mode = TrainMode::FullBatch;

  // Small graphs (<= 10000 nodes): full batch, 128 hidden, 360 epochs.
  // Larger graphs: mini-batch, 256 hidden, 5 epochs, 1000 batches.
  static TrainConfig preset_for(std::size_t num_nodes);
  static constexpr std::size_t kSmallGraphLimit = 10000;

  void validate() const;  // throws ArgumentError
};

// key = value lines, '#' comments. Keys: alpha, perplexity, epochs, hidden_dim,
// num_layers, batch_count, fanouts (comma list), lr, lr_decay, patience,
// hop_cap, seed, mode (full|minibatch).
void apply_config_value(TrainConfig& cfg, const std::string& key, const std::string& value);
void apply_config_file(TrainConfig& cfg, const std::filesystem::path& path);
std::string to_string(TrainMode mode);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double composite = 0.0;
  double graph_loss = 0.0;    // NaN when the graph term was not evaluated
  double feature_loss = 0.0;  // NaN when the feature term was not evaluated
  double lr = 0.0;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  double final_lr = 0.0;
  double wall_seconds = 0.0;
  std::size_t skipped_batches = 0;
};

struct TrainResult {
  GcnModel model;
  TrainReport report;
};

struct BatchStep;

struct TrainHooks {
  std::function<void(const EpochRecord&)> on_epoch;
  std::function<void(const std::string&)> on_warning;
  // Mini-batch mode: called after each batch gradient, before the update.
  std::function<void(std::size_t epoch, const BatchStep&)> on_batch;
};

struct CompositeLoss {
  double composite = 0.0;
  double graph_loss = 0.0;
  double feature_loss = 0.0;
  Matrix grad;
};

/// alpha * KL(P_graph || Q) + (1 - alpha) * KL(P_feat || Q) and its gradient,
/// with Q computed once from y.
CompositeLoss composite_loss_and_grad(const AffinityMatrix& p_graph, const AffinityMatrix& p_feat,
                                      const Matrix& y, double alpha);

TrainResult train_full_batch(const LabeledDataset& data, const TrainConfig& cfg,
                             const TrainHooks& hooks = {});
TrainResult train_minibatch(const LabeledDataset& data, const TrainConfig& cfg,
                            const TrainHooks& hooks = {});
// Dispatches on cfg.mode.
TrainResult train(const LabeledDataset& data, const TrainConfig& cfg, const TrainHooks& hooks = {});

/// Loss and parameter gradients for one neighbor-subsampled batch.
struct BatchStep {
  SubsampledBatch batch;
  PropagationPlan plan;
  CompositeLoss loss;
  GcnGradients grads;
};

/// Builds the batch, runs a train-mode forward and backward. Throws
/// EmptyAffinityError when the batch has no usable affinities.
BatchStep minibatch_gradient(GcnModel& model, const LabeledDataset& data,
                             std::span<const NodeId> batch_nodes, const TrainConfig& cfg,
                             std::uint64_t sample_seed);

/// Eval-mode forward over the whole graph: N x 2 coordinates.
Embedding embed(const GcnModel& model, const LabeledDataset& data);

}  // namespace gtsne
