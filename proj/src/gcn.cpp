#include "graphtsne/gcn.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "graphtsne/error.hpp"
#include "graphtsne/kernels.hpp"

namespace gtsne {

namespace {

using Index = std::ptrdiff_t;

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

Linear make_linear(std::size_t in, std::size_t out, std::mt19937_64& rng) {
  Linear lin{Matrix(in, out), Matrix(1, out)};
  const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& w : lin.weight.values()) w = dist(rng);
  return lin;
}

BatchNorm make_norm(std::size_t width) {
  return {Matrix(1, width, 1.0), Matrix(1, width, 0.0), Matrix(1, width, 0.0), Matrix(1, width, 1.0)};
}

std::span<const double> bias_of(const Linear& lin) { return lin.bias.values(); }

// Edges of a layer grouped by neighbor (source) node, for deterministic scatter.
struct ReverseIndex {
  std::vector<std::size_t> offsets;  // per input row
  std::vector<std::size_t> edges;    // edge ids
};

ReverseIndex reverse_index(const PropagationPlan::Layer& layer, std::size_t input_rows) {
  ReverseIndex rev;
  rev.offsets.assign(input_rows + 1, 0);
  for (NodeId j : layer.neighbors) ++rev.offsets[j + 1];
  for (std::size_t r = 0; r < input_rows; ++r) rev.offsets[r + 1] += rev.offsets[r];
  rev.edges.resize(layer.neighbors.size());
  std::vector<std::size_t> cursor(rev.offsets.begin(), rev.offsets.end() - 1);
  for (std::size_t e = 0; e < layer.neighbors.size(); ++e) rev.edges[cursor[layer.neighbors[e]]++] = e;
  return rev;
}

void check_plan(const GcnModel& model, const PropagationPlan& plan, const Matrix& features) {
  if (features.cols() != model.input_dim)
    throw ArgumentError("forward: feature dimension " + std::to_string(features.cols()) +
                        " does not match model input dimension " + std::to_string(model.input_dim));
  if (features.rows() != plan.num_nodes)
    throw ArgumentError("forward: feature rows do not match the propagation plan");
  if (plan.layers.size() != model.layers.size())
    throw ArgumentError("forward: plan has " + std::to_string(plan.layers.size()) +
                        " layers, model has " + std::to_string(model.layers.size()));
  std::size_t rows = plan.num_nodes;
  for (const auto& layer : plan.layers) {
    if (layer.outputs > rows || layer.offsets.size() != layer.outputs + 1)
      throw ArgumentError("forward: malformed propagation plan");
    for (NodeId j : layer.neighbors)
      if (j < 0 || static_cast<std::size_t>(j) >= rows)
        throw ArgumentError("forward: plan neighbor outside the layer's input rows");
    rows = layer.outputs;
  }
}

// One gated layer. `trace` receives what backward needs when non-null;
// `norm_update` receives running-stat updates in train mode when non-null.
Matrix layer_forward(const GatedLayer& layer, const PropagationPlan::Layer& plan, const Matrix& h,
                     Mode mode, BatchNorm* norm_update, LayerTrace* trace) {
  const std::size_t outputs = plan.outputs;
  const std::size_t rows = h.rows();
  const std::size_t width = h.cols();

  Matrix z, gate_self, gate_nbr, message;
  kernels::linear(h, outputs, layer.self.weight, bias_of(layer.self), z);
  kernels::linear(h, outputs, layer.gate_self.weight, bias_of(layer.gate_self), gate_self);
  kernels::linear(h, rows, layer.gate_neighbor.weight, bias_of(layer.gate_neighbor), gate_nbr);
  kernels::linear(h, rows, layer.message.weight, bias_of(layer.message), message);

  Matrix gates(plan.neighbors.size(), width);
#pragma omp parallel for schedule(dynamic, 32)
  for (Index i = 0; i < static_cast<Index>(outputs); ++i) {
    const std::size_t begin = plan.offsets[i], end = plan.offsets[i + 1];
    if (begin == end) continue;
    const double inv_deg = 1.0 / static_cast<double>(end - begin);
    double* zi = z.data() + i * width;
    const double* ai = gate_self.data() + i * width;
    for (std::size_t e = begin; e < end; ++e) {
      const NodeId j = plan.neighbors[e];
      const double* bj = gate_nbr.data() + j * width;
      const double* vj = message.data() + j * width;
      double* eta = gates.data() + e * width;
      for (std::size_t c = 0; c < width; ++c) {
        eta[c] = sigmoid(ai[c] + bj[c]);
        zi[c] += inv_deg * eta[c] * vj[c];
      }
    }
  }

  // Batch norm over the output rows, then ReLU and the residual.
  std::vector<double> mean(width, 0.0), inv_std(width, 0.0);
  if (mode == Mode::Train) {
    std::vector<double> var(width, 0.0);
    for (std::size_t i = 0; i < outputs; ++i)
      for (std::size_t c = 0; c < width; ++c) mean[c] += z(i, c);
    for (double& m : mean) m /= static_cast<double>(outputs);
    for (std::size_t i = 0; i < outputs; ++i)
      for (std::size_t c = 0; c < width; ++c) {
        const double d = z(i, c) - mean[c];
        var[c] += d * d;
      }
    for (std::size_t c = 0; c < width; ++c) {
      var[c] /= static_cast<double>(outputs);
      inv_std[c] = 1.0 / std::sqrt(var[c] + BatchNorm::kEpsilon);
    }
    if (norm_update) {
      const double unbias = outputs > 1 ? static_cast<double>(outputs) / (outputs - 1) : 1.0;
      const double m = BatchNorm::kMomentum;
      for (std::size_t c = 0; c < width; ++c) {
        norm_update->running_mean(0, c) = (1 - m) * norm_update->running_mean(0, c) + m * mean[c];
        norm_update->running_var(0, c) =
            (1 - m) * norm_update->running_var(0, c) + m * var[c] * unbias;
      }
    }
  } else {
    for (std::size_t c = 0; c < width; ++c) {
      mean[c] = layer.norm.running_mean(0, c);
      inv_std[c] = 1.0 / std::sqrt(layer.norm.running_var(0, c) + BatchNorm::kEpsilon);
    }
  }

  Matrix out(outputs, width);
  Matrix normalized, activation;
  if (trace) {
    normalized.resize(outputs, width);
    activation.resize(outputs, width);
  }
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < static_cast<Index>(outputs); ++i) {
    for (std::size_t c = 0; c < width; ++c) {
      const double xhat = (z(i, c) - mean[c]) * inv_std[c];
      const double act = layer.norm.gamma(0, c) * xhat + layer.norm.beta(0, c);
      out(i, c) = std::max(act, 0.0) + h(i, c);
      if (trace) {
        normalized(i, c) = xhat;
        activation(i, c) = act;
      }
    }
  }

  if (trace) {
    trace->input = h;
    trace->message = std::move(message);
    trace->gates = std::move(gates);
    trace->normalized = std::move(normalized);
    trace->activation = std::move(activation);
    trace->inv_std = std::move(inv_std);
  }
  return out;
}

// Returns the gradient with respect to the layer input and accumulates
// parameter gradients into `grad`.
Matrix layer_backward(const GatedLayer& layer, const PropagationPlan::Layer& plan,
                      const LayerTrace& t, const Matrix& grad_out, GatedLayer& grad) {
  const std::size_t outputs = plan.outputs;
  const std::size_t rows = t.input.rows();
  const std::size_t width = t.input.cols();
  const Matrix& h = t.input;

  Matrix grad_h(rows, width);
  // Residual path and ReLU.
  Matrix grad_act(outputs, width);
  for (std::size_t i = 0; i < outputs; ++i)
    for (std::size_t c = 0; c < width; ++c) {
      grad_h(i, c) = grad_out(i, c);
      grad_act(i, c) = t.activation(i, c) > 0.0 ? grad_out(i, c) : 0.0;
    }

  // Batch norm (train-mode statistics).
  std::vector<double> sum_dxhat(width, 0.0), sum_dxhat_xhat(width, 0.0);
  for (std::size_t i = 0; i < outputs; ++i)
    for (std::size_t c = 0; c < width; ++c) {
      const double g = grad_act(i, c);
      grad.norm.gamma(0, c) += g * t.normalized(i, c);
      grad.norm.beta(0, c) += g;
      const double dxhat = g * layer.norm.gamma(0, c);
      sum_dxhat[c] += dxhat;
      sum_dxhat_xhat[c] += dxhat * t.normalized(i, c);
    }
  Matrix grad_z(outputs, width);
  const double inv_m = 1.0 / static_cast<double>(outputs);
  for (std::size_t i = 0; i < outputs; ++i)
    for (std::size_t c = 0; c < width; ++c) {
      const double dxhat = grad_act(i, c) * layer.norm.gamma(0, c);
      grad_z(i, c) = t.inv_std[c] * inv_m *
                     (static_cast<double>(outputs) * dxhat - sum_dxhat[c] -
                      t.normalized(i, c) * sum_dxhat_xhat[c]);
    }

  // Self term U.
  kernels::matmul_tn_acc(h, grad_z, outputs, grad.self.weight);
  kernels::column_sums_acc(grad_z, outputs, grad.self.bias.values());
  kernels::matmul_nt_acc(grad_z, outputs, layer.self.weight, grad_h);

  // Gated aggregation: per-edge gradients, then gathered per neighbor node.
  const std::size_t num_edges = plan.neighbors.size();
  Matrix grad_gate_self(outputs, width);
  Matrix grad_gate_edge(num_edges, width);
  Matrix grad_message_edge(num_edges, width);
#pragma omp parallel for schedule(dynamic, 32)
  for (Index i = 0; i < static_cast<Index>(outputs); ++i) {
    const std::size_t begin = plan.offsets[i], end = plan.offsets[i + 1];
    if (begin == end) continue;
    const double inv_deg = 1.0 / static_cast<double>(end - begin);
    const double* dz = grad_z.data() + i * width;
    double* da = grad_gate_self.data() + i * width;
    for (std::size_t e = begin; e < end; ++e) {
      const NodeId j = plan.neighbors[e];
      const double* vj = t.message.data() + j * width;
      const double* eta = t.gates.data() + e * width;
      double* dg = grad_gate_edge.data() + e * width;
      double* dv = grad_message_edge.data() + e * width;
      for (std::size_t c = 0; c < width; ++c) {
        const double scaled = dz[c] * inv_deg;
        dg[c] = scaled * vj[c] * eta[c] * (1.0 - eta[c]);
        dv[c] = scaled * eta[c];
        da[c] += dg[c];
      }
    }
  }

  const ReverseIndex rev = reverse_index(plan, rows);
  Matrix grad_gate_nbr(rows, width);
  Matrix grad_message(rows, width);
#pragma omp parallel for schedule(dynamic, 64)
  for (Index j = 0; j < static_cast<Index>(rows); ++j) {
    double* db = grad_gate_nbr.data() + j * width;
    double* dv = grad_message.data() + j * width;
    for (std::size_t k = rev.offsets[j]; k < rev.offsets[j + 1]; ++k) {
      const std::size_t e = rev.edges[k];
      const double* dg_e = grad_gate_edge.data() + e * width;
      const double* dv_e = grad_message_edge.data() + e * width;
      for (std::size_t c = 0; c < width; ++c) {
        db[c] += dg_e[c];
        dv[c] += dv_e[c];
      }
    }
  }

  kernels::matmul_tn_acc(h, grad_gate_self, outputs, grad.gate_self.weight);
  kernels::column_sums_acc(grad_gate_self, outputs, grad.gate_self.bias.values());
  kernels::matmul_nt_acc(grad_gate_self, outputs, layer.gate_self.weight, grad_h);

  kernels::matmul_tn_acc(h, grad_gate_nbr, rows, grad.gate_neighbor.weight);
  kernels::column_sums_acc(grad_gate_nbr, rows, grad.gate_neighbor.bias.values());
  kernels::matmul_nt_acc(grad_gate_nbr, rows, layer.gate_neighbor.weight, grad_h);

  kernels::matmul_tn_acc(h, grad_message, rows, grad.message.weight);
  kernels::column_sums_acc(grad_message, rows, grad.message.bias.values());
  kernels::matmul_nt_acc(grad_message, rows, layer.message.weight, grad_h);

  return grad_h;
}

ForwardTrace run_forward(const GcnModel& model, GcnModel* stats_target, const PropagationPlan& plan,
                         const Matrix& features, Mode mode, bool keep_trace) {
  check_plan(model, plan, features);
  ForwardTrace trace;
  trace.mode = mode;
  trace.plan = &plan;
  trace.features = &features;
  if (keep_trace) trace.layers.resize(model.layers.size());

  Matrix h;
  kernels::linear(features, plan.num_nodes, model.input_proj.weight, bias_of(model.input_proj), h);
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    BatchNorm* update = (stats_target && mode == Mode::Train) ? &stats_target->layers[l].norm : nullptr;
    h = layer_forward(model.layers[l], plan.layers[l], h, mode, update,
                      keep_trace ? &trace.layers[l] : nullptr);
  }
  kernels::linear(h, plan.output_count(), model.output_proj.weight, bias_of(model.output_proj),
                  trace.y);
  if (keep_trace) trace.last_hidden = std::move(h);
  return trace;
}

}  // namespace

std::size_t GcnModel::parameter_count() const {
  std::size_t total = 0;
  visit_parameters([&](const std::string&, const Matrix& m) { total += m.size(); });
  return total;
}

GcnModel GcnModel::zeros_like() const {
  GcnModel z = *this;
  z.visit_parameters([](const std::string&, Matrix& m) { m.fill(0.0); });
  z.visit_buffers([](const std::string&, Matrix& m) { m.fill(0.0); });
  return z;
}

bool GcnModel::all_finite() const {
  bool ok = true;
  visit_parameters([&](const std::string&, const Matrix& m) { ok = ok && m.all_finite(); });
  return ok;
}

bool operator==(const GcnModel& a, const GcnModel& b) {
  if (a.input_dim != b.input_dim || a.hidden_dim != b.hidden_dim || a.layers.size() != b.layers.size())
    return false;
  std::vector<const Matrix*> lhs, rhs;
  auto& ma = const_cast<GcnModel&>(a);
  auto& mb = const_cast<GcnModel&>(b);
  ma.visit_parameters([&](const std::string&, Matrix& m) { lhs.push_back(&m); });
  ma.visit_buffers([&](const std::string&, Matrix& m) { lhs.push_back(&m); });
  mb.visit_parameters([&](const std::string&, Matrix& m) { rhs.push_back(&m); });
  mb.visit_buffers([&](const std::string&, Matrix& m) { rhs.push_back(&m); });
  for (std::size_t i = 0; i < lhs.size(); ++i)
    if (!(*lhs[i] == *rhs[i])) return false;
  return true;
}

GcnModel init_model(std::size_t input_dim, std::size_t hidden_dim, std::uint64_t seed,
                    std::size_t num_layers) {
  if (input_dim == 0 || hidden_dim == 0) throw ArgumentError("init_model: dimensions must be >= 1");
  std::mt19937_64 rng(seed);
  GcnModel model;
  model.input_dim = input_dim;
  model.hidden_dim = hidden_dim;
  model.input_proj = make_linear(input_dim, hidden_dim, rng);
  for (std::size_t l = 0; l < num_layers; ++l) {
    GatedLayer layer;
    layer.gate_self = make_linear(hidden_dim, hidden_dim, rng);
    layer.gate_neighbor = make_linear(hidden_dim, hidden_dim, rng);
    layer.self = make_linear(hidden_dim, hidden_dim, rng);
    layer.message = make_linear(hidden_dim, hidden_dim, rng);
    layer.norm = make_norm(hidden_dim);
    model.layers.push_back(std::move(layer));
  }
  model.output_proj = make_linear(hidden_dim, GcnModel::kOutputDim, rng);
  return model;
}

PropagationPlan PropagationPlan::full_graph(const Graph& g, std::size_t num_layers) {
  PropagationPlan plan;
  plan.num_nodes = g.num_nodes();
  Layer layer;
  layer.outputs = g.num_nodes();
  layer.offsets.assign(g.offsets().begin(), g.offsets().end());
  layer.neighbors.assign(g.targets().begin(), g.targets().end());
  plan.layers.assign(num_layers, layer);
  return plan;
}

PropagationPlan PropagationPlan::from_batch(const SubsampledBatch& batch) {
  PropagationPlan plan;
  plan.num_nodes = batch.nodes.size();
  plan.global_ids = batch.nodes;
  const std::size_t depth = batch.depth();
  for (std::size_t l = 0; l < depth; ++l) {
    const std::size_t t = depth - 1 - l;
    Layer layer;
    layer.outputs = batch.frontier_sizes[t];
    layer.offsets = batch.sampled[t].offsets;
    layer.neighbors = batch.sampled[t].neighbors;
    plan.layers.push_back(std::move(layer));
  }
  return plan;
}

ForwardTrace forward(GcnModel& model, const PropagationPlan& plan, const Matrix& features, Mode mode) {
  return run_forward(model, &model, plan, features, mode, /*keep_trace=*/true);
}

Matrix predict(const GcnModel& model, const PropagationPlan& plan, const Matrix& features) {
  return std::move(run_forward(model, nullptr, plan, features, Mode::Eval, false).y);
}

GcnGradients backward(const GcnModel& model, const ForwardTrace& trace, const Matrix& grad_y) {
  if (trace.mode != Mode::Train)
    throw ArgumentError("backward: trace must come from a train-mode forward");
  if (!trace.plan || !trace.features || trace.layers.size() != model.layers.size())
    throw ArgumentError("backward: trace does not match the model");
  if (!grad_y.same_shape(trace.y)) throw ArgumentError("backward: grad_y shape mismatch");

  GcnGradients grads = model.zeros_like();
  const PropagationPlan& plan = *trace.plan;

  kernels::matmul_tn_acc(trace.last_hidden, grad_y, grad_y.rows(), grads.output_proj.weight);
  kernels::column_sums_acc(grad_y, grad_y.rows(), grads.output_proj.bias.values());
  Matrix grad_h(trace.last_hidden.rows(), model.hidden_dim);
  kernels::matmul_nt_acc(grad_y, grad_y.rows(), model.output_proj.weight, grad_h);

  for (std::size_t l = model.layers.size(); l-- > 0;)
    grad_h = layer_backward(model.layers[l], plan.layers[l], trace.layers[l], grad_h, grads.layers[l]);

  kernels::matmul_tn_acc(*trace.features, grad_h, plan.num_nodes, grads.input_proj.weight);
  kernels::column_sums_acc(grad_h, plan.num_nodes, grads.input_proj.bias.values());
  return grads;
}

AdamState init_adam(const GcnModel& model, double lr) {
  if (!(lr > 0.0)) throw ArgumentError("init_adam: learning rate must be positive");
  AdamState state;
  state.lr = lr;
  model.visit_parameters([&](const std::string&, const Matrix& m) {
    state.first_moment.emplace_back(m.rows(), m.cols());
    state.second_moment.emplace_back(m.rows(), m.cols());
  });
  return state;
}

void adam_step(AdamState& state, GcnModel& model, const GcnGradients& grads) {
  std::vector<Matrix*> params;
  std::vector<const Matrix*> gs;
  model.visit_parameters([&](const std::string&, Matrix& m) { params.push_back(&m); });
  grads.visit_parameters([&](const std::string&, const Matrix& m) { gs.push_back(&m); });
  if (params.size() != gs.size() || params.size() != state.first_moment.size())
    throw ArgumentError("adam_step: gradient layout does not match the model");

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correct1 = 1.0 - std::pow(state.beta1, t);
  const double correct2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t p = 0; p < params.size(); ++p) {
    if (!params[p]->same_shape(*gs[p])) throw ArgumentError("adam_step: gradient shape mismatch");
    auto w = params[p]->values();
    auto g = gs[p]->values();
    auto m = state.first_moment[p].values();
    auto v = state.second_moment[p].values();
    for (std::size_t k = 0; k < w.size(); ++k) {
      m[k] = state.beta1 * m[k] + (1.0 - state.beta1) * g[k];
      v[k] = state.beta2 * v[k] + (1.0 - state.beta2) * g[k] * g[k];
      const double m_hat = m[k] / correct1;
      const double v_hat = v[k] / correct2;
      w[k] -= state.lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

bool maybe_decay_lr(AdamState& state, double epoch_loss) {
  if (epoch_loss < state.best_loss) {
    state.best_loss = epoch_loss;
    state.stale_epochs = 0;
    return false;
  }
  if (++state.stale_epochs < state.patience) return false;
  state.lr /= state.decay_factor;
  state.stale_epochs = 0;
  return true;
}

}  // namespace gtsne
