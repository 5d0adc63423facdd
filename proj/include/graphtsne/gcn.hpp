#pragma once

// Residual gated graph convolutional network with exact manual backprop.
//
// One gated layer maps node states h (rows) to
//
//   eta_ij  = sigmoid(A h_i + B h_j)                       (edge gate)
//   z_i     = U h_i + (1/|n(i)|) sum_{j in n(i)} eta_ij * (V h_j)
//   h'_i    = ReLU(BatchNorm(z_i)) + h_i
//
// with biases on A, B, U, V. Nodes without neighbors aggregate to zero.
// A linear input projection (features -> hidden) precedes the stack and a
// linear output projection (hidden -> 2) follows it.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "graphtsne/graph.hpp"
#include "graphtsne/matrix.hpp"

namespace gtsne {

struct Linear {
  Matrix weight;  // in x out
  Matrix bias;    // 1 x out
};

struct BatchNorm {
  Matrix gamma;
  Matrix beta;
  Matrix running_mean;
  Matrix running_var;

  static constexpr double kEpsilon = 1e-5;
  static constexpr double kMomentum = 0.1;
};

struct GatedLayer {
  Linear gate_self;      // A
  Linear gate_neighbor;  // B
  Linear self;           // U
  Linear message;        // V
  BatchNorm norm;
};

struct GcnModel {
  static constexpr std::size_t kOutputDim = 2;

  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  Linear input_proj;
  std::vector<GatedLayer> layers;
  Linear output_proj;

  // Calls f(name, tensor) for every trainable tensor in a fixed order.
  template <typename F>
  void visit_parameters(F&& f) {
    visit_linear("input_proj", input_proj, f);
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const std::string p = "layers." + std::to_string(l) + ".";
      visit_linear(p + "gate_self", layers[l].gate_self, f);
      visit_linear(p + "gate_neighbor", layers[l].gate_neighbor, f);
      visit_linear(p + "self", layers[l].self, f);
      visit_linear(p + "message", layers[l].message, f);
      f(p + "norm.gamma", layers[l].norm.gamma);
      f(p + "norm.beta", layers[l].norm.beta);
    }
    visit_linear("output_proj", output_proj, f);
  }
  template <typename F>
  void visit_parameters(F&& f) const {
    const_cast<GcnModel*>(this)->visit_parameters(
        [&](const std::string& name, Matrix& m) { f(name, static_cast<const Matrix&>(m)); });
  }

  // Non-trainable state (batch-norm running statistics).
  template <typename F>
  void visit_buffers(F&& f) {
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const std::string p = "layers." + std::to_string(l) + ".norm.";
      f(p + "running_mean", layers[l].norm.running_mean);
      f(p + "running_var", layers[l].norm.running_var);
    }
  }
  template <typename F>
  void visit_buffers(F&& f) const {
    const_cast<GcnModel*>(this)->visit_buffers(
        [&](const std::string& name, Matrix& m) { f(name, static_cast<const Matrix&>(m)); });
  }

  std::size_t parameter_count() const;
  // Same shapes, every tensor zero. Used as the gradient container.
  GcnModel zeros_like() const;
  bool all_finite() const;

  friend bool operator==(const GcnModel&, const GcnModel&);

 private:
  template <typename F>
  static void visit_linear(const std::string& name, Linear& lin, F& f) {
    f(name + ".weight", lin.weight);
    f(name + ".bias", lin.bias);
  }
};

// Gradient of a scalar objective with respect to every trainable tensor,
// laid out like the model. Running-stat buffers are unused.
using GcnGradients = GcnModel;

/// Xavier-uniform weights, zero biases, unit batch-norm scale.
GcnModel init_model(std::size_t input_dim, std::size_t hidden_dim, std::uint64_t seed,
                    std::size_t num_layers = 2);

/// Which nodes each layer computes and whom they aggregate from.
///
/// Local node ids index rows of the feature matrix passed to forward().
/// Layer l reads states of its first input rows and produces states for its
/// first `outputs` nodes; its output set is a prefix of its input set, and
/// every neighbor index is below the layer's input row count.
struct PropagationPlan {
  struct Layer {
    std::size_t outputs = 0;
    std::vector<std::size_t> offsets;  // outputs + 1
    std::vector<NodeId> neighbors;     // local ids
  };

  std::size_t num_nodes = 0;
  std::vector<NodeId> global_ids;  // local -> global; empty means identity
  std::vector<Layer> layers;

  std::size_t output_count() const { return layers.empty() ? num_nodes : layers.back().outputs; }

  static PropagationPlan full_graph(const Graph& g, std::size_t num_layers);
  // The last layer aggregates over the first sampled block, the first layer
  // over the deepest one.
  static PropagationPlan from_batch(const SubsampledBatch& batch);
};

enum class Mode { Train, Eval };

struct LayerTrace {
  Matrix input;        // h^l, one row per input node
  Matrix message;      // V h_j + b, per input node
  Matrix gates;        // eta per edge (CSR order)
  Matrix normalized;   // batch-norm x-hat, per output node
  Matrix activation;   // batch-norm output before ReLU, per output node
  std::vector<double> inv_std;
};

struct ForwardTrace {
  Mode mode = Mode::Eval;
  // Non-owning; must outlive the trace for backward().
  const PropagationPlan* plan = nullptr;
  const Matrix* features = nullptr;
  std::vector<LayerTrace> layers;
  Matrix last_hidden;  // h^L for output nodes
  Matrix y;            // output_count x 2
};

/// Runs the network. Train mode normalizes with batch statistics and updates
/// running statistics; eval mode uses the running statistics only.
ForwardTrace forward(GcnModel& model, const PropagationPlan& plan, const Matrix& features,
                     Mode mode);

/// Eval-mode forward without a trace.
Matrix predict(const GcnModel& model, const PropagationPlan& plan, const Matrix& features);

/// Gradients of sum_i <grad_y_i, y_i> for a train-mode trace.
GcnGradients backward(const GcnModel& model, const ForwardTrace& trace, const Matrix& grad_y);

struct AdamState {
  double lr = 0.00075;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t step = 0;
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;

  // Plateau scheduler.
  int patience = 5;
  double decay_factor = 1.25;
  double best_loss = std::numeric_limits<double>::infinity();
  int stale_epochs = 0;
};

AdamState init_adam(const GcnModel& model, double lr);

void adam_step(AdamState& state, GcnModel& model, const GcnGradients& grads);

/// Divides the learning rate by decay_factor after `patience` consecutive
/// epochs without a strict improvement of the best loss. Returns true on decay.
bool maybe_decay_lr(AdamState& state, double epoch_loss);

// Text checkpoint, magic "GTSNE1"; layout described in docs/formats.md.
void save_checkpoint(const std::filesystem::path& path, const GcnModel& model);
GcnModel load_checkpoint(const std::filesystem::path& path);

}  // namespace gtsne
