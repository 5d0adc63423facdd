#include "graphtsne/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>

#include "graphtsne/error.hpp"
#include "graphtsne/kernels.hpp"

namespace gtsne {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_alpha(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw ArgumentError("alpha must lie in [0, 1], got " + std::to_string(alpha));
}

// Either affinity may be absent when its weight is zero.
CompositeLoss composite_impl(const Matrix* p_graph, const Matrix* p_feat, const Matrix& y,
                             double alpha) {
  check_alpha(alpha);
  if (alpha > 0.0 && !p_graph) throw ArgumentError("composite loss: graph affinities required");
  if (alpha < 1.0 && !p_feat) throw ArgumentError("composite loss: feature affinities required");
  for (const Matrix* p : {p_graph, p_feat})
    if (p && (p->rows() != y.rows() || p->cols() != y.rows()))
      throw ArgumentError("composite loss: affinity size does not match y");

  Matrix w;
  const double z = kernels::student_t_weights(y, w);
  CompositeLoss out;
  out.graph_loss = p_graph ? kernels::kl_divergence(*p_graph, w, z) : kNaN;
  out.feature_loss = p_feat ? kernels::kl_divergence(*p_feat, w, z) : kNaN;
  out.composite = (alpha > 0.0 ? alpha * out.graph_loss : 0.0) +
                  (alpha < 1.0 ? (1.0 - alpha) * out.feature_loss : 0.0);

  // Q enters both KL gradients with total weight alpha + (1 - alpha) = 1, so
  // the blended gradient is the t-SNE gradient of the blended P.
  if (alpha == 0.0) {
    kernels::tsne_gradient(*p_feat, w, z, y, out.grad);
  } else if (alpha == 1.0) {
    kernels::tsne_gradient(*p_graph, w, z, y, out.grad);
  } else {
    Matrix mixed(y.rows(), y.rows());
    auto dst = mixed.values();
    auto pg = p_graph->values();
    auto pf = p_feat->values();
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] = alpha * pg[k] + (1.0 - alpha) * pf[k];
    kernels::tsne_gradient(mixed, w, z, y, out.grad);
  }
  return out;
}

bool all_zero_off_diagonal(const DistanceMatrix& d) {
  for (std::size_t i = 0; i < d.rows(); ++i)
    for (std::size_t j = 0; j < d.cols(); ++j)
      if (i != j && d(i, j) != 0.0) return false;
  return true;
}

struct Affinities {
  std::optional<AffinityMatrix> graph;
  std::optional<AffinityMatrix> feature;
};

// Builds both affinities when possible. A failure is fatal only for a term
// with nonzero weight.
Affinities build_affinities(const DistanceMatrix& d_graph, const DistanceMatrix& d_feat,
                            const TrainConfig& cfg) {
  Affinities a;
  try {
    a.graph = joint_p(d_graph, cfg.perplexity);
  } catch (const EmptyAffinityError&) {
    if (cfg.alpha > 0.0)
      throw EmptyAffinityError("graph affinities are empty: no pair of nodes is connected");
  }
  if (all_zero_off_diagonal(d_feat)) {
    if (cfg.alpha < 1.0)
      throw EmptyAffinityError(
          "feature affinities are degenerate: all feature vectors are identical");
  } else {
    a.feature = joint_p(d_feat, cfg.perplexity);
  }
  return a;
}

CompositeLoss composite_from(const Affinities& a, const Matrix& y, double alpha) {
  return composite_impl(a.graph ? &a.graph->p : nullptr, a.feature ? &a.feature->p : nullptr, y,
                        alpha);
}

Matrix gather_rows(const Matrix& x, std::span<const NodeId> ids) {
  Matrix out(ids.size(), x.cols());
  for (std::size_t r = 0; r < ids.size(); ++r) {
    const auto src = x.row(ids[r]);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

void check_inputs(const LabeledDataset& data, const TrainConfig& cfg) {
  cfg.validate();
  data.validate();
  if (data.num_nodes() < 3) throw TrainingError("need at least 3 nodes to train");
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

TrainConfig TrainConfig::preset_for(std::size_t num_nodes) {
  TrainConfig cfg;
  if (num_nodes > kSmallGraphLimit) {
    cfg.mode = TrainMode::MiniBatch;
    cfg.hidden_dim = 256;
    cfg.epochs = 5;
    cfg.batch_count = 1000;
  }
  return cfg;
}

void TrainConfig::validate() const {
  check_alpha(alpha);
  if (!(perplexity >= 2.0)) throw ArgumentError("perplexity must be >= 2");
  if (hidden_dim == 0) throw ArgumentError("hidden_dim must be >= 1");
  if (!(lr > 0.0)) throw ArgumentError("lr must be positive");
  if (!(lr_decay >= 1.0)) throw ArgumentError("lr_decay must be >= 1");
  if (patience < 1) throw ArgumentError("patience must be >= 1");
  if (mode == TrainMode::MiniBatch) {
    if (batch_count == 0) throw ArgumentError("batch_count must be >= 1");
    if (fanouts.size() != num_layers)
      throw ArgumentError("fanouts needs one entry per layer (" + std::to_string(num_layers) + ")");
  }
}

std::string to_string(TrainMode mode) { return mode == TrainMode::FullBatch ? "full" : "minibatch"; }

void apply_config_value(TrainConfig& cfg, const std::string& key, const std::string& value) {
  auto as_double = [&] {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(value, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != value.size())
      throw ArgumentError("config key '" + key + "' expects a number, got '" + value + "'");
    return v;
  };
  auto as_count = [&] {
    const double v = as_double();
    if (v < 0 || v != std::floor(v))
      throw ArgumentError("config key '" + key + "' expects a nonnegative integer");
    return static_cast<std::size_t>(v);
  };
  if (key == "alpha") cfg.alpha = as_double();
  else if (key == "perplexity") cfg.perplexity = as_double();
  else if (key == "epochs") cfg.epochs = as_count();
  else if (key == "hidden_dim") cfg.hidden_dim = as_count();
  else if (key == "num_layers") cfg.num_layers = as_count();
  else if (key == "batch_count") cfg.batch_count = as_count();
  else if (key == "lr") cfg.lr = as_double();
  else if (key == "lr_decay") cfg.lr_decay = as_double();
  else if (key == "patience") cfg.patience = static_cast<int>(as_count());
  else if (key == "hop_cap") cfg.hop_cap = static_cast<int>(as_double());
  else if (key == "seed") cfg.seed = as_count();
  else if (key == "mode") {
    if (value == "full") cfg.mode = TrainMode::FullBatch;
    else if (value == "minibatch") cfg.mode = TrainMode::MiniBatch;
    else throw ArgumentError("mode must be 'full' or 'minibatch', got '" + value + "'");
  } else if (key == "fanouts") {
    cfg.fanouts.clear();
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
      std::size_t used = 0;
      unsigned long v = 0;
      try {
        v = std::stoul(item, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != item.size())
        throw ArgumentError("fanouts expects a comma list of integers, got '" + value + "'");
      cfg.fanouts.push_back(v);
    }
  } else {
    throw ArgumentError("unknown config key '" + key + "'");
  }
}

void apply_config_file(TrainConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return std::string();
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw MalformedInput(path.string(), line_no, "expected key = value");
    try {
      apply_config_value(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ArgumentError& e) {
      throw MalformedInput(path.string(), line_no, e.what());
    }
  }
}

CompositeLoss composite_loss_and_grad(const AffinityMatrix& p_graph, const AffinityMatrix& p_feat,
                                      const Matrix& y, double alpha) {
  return composite_impl(&p_graph.p, &p_feat.p, y, alpha);
}

TrainResult train_full_batch(const LabeledDataset& data, const TrainConfig& cfg,
                             const TrainHooks& hooks) {
  check_inputs(data, cfg);
  const auto t0 = std::chrono::steady_clock::now();

  Affinities affinities;
  try {
    affinities = build_affinities(all_pairs_shortest_paths(data.graph),
                                  pairwise_sq_euclidean(data.features), cfg);
  } catch (const EmptyAffinityError& e) {
    throw TrainingError(e.what());
  }

  TrainResult result{init_model(data.features.cols(), cfg.hidden_dim, cfg.seed, cfg.num_layers), {}};
  GcnModel& model = result.model;
  AdamState adam = init_adam(model, cfg.lr);
  adam.patience = cfg.patience;
  adam.decay_factor = cfg.lr_decay;
  const PropagationPlan plan = PropagationPlan::full_graph(data.graph, cfg.num_layers);

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const ForwardTrace trace = forward(model, plan, data.features, Mode::Train);
    const CompositeLoss loss = composite_from(affinities, trace.y, cfg.alpha);
    if (!std::isfinite(loss.composite))
      throw TrainingError("loss became non-finite at epoch " + std::to_string(epoch));
    adam_step(adam, model, backward(model, trace, loss.grad));

    EpochRecord rec{epoch, loss.composite, loss.graph_loss, loss.feature_loss, adam.lr};
    result.report.epochs.push_back(rec);
    if (hooks.on_epoch) hooks.on_epoch(rec);
    maybe_decay_lr(adam, loss.composite);
  }
  result.report.final_lr = adam.lr;
  result.report.wall_seconds = seconds_since(t0);
  return result;
}

BatchStep minibatch_gradient(GcnModel& model, const LabeledDataset& data,
                             std::span<const NodeId> batch_nodes, const TrainConfig& cfg,
                             std::uint64_t sample_seed) {
  BatchStep step;
  step.batch = neighbor_subsample(data.graph, batch_nodes, cfg.fanouts, sample_seed);
  step.plan = PropagationPlan::from_batch(step.batch);
  const Matrix x_local = gather_rows(data.features, step.plan.global_ids);

  const Matrix x_batch = gather_rows(data.features, batch_nodes);
  const Affinities affinities = build_affinities(
      bfs_shortest_paths(data.graph, batch_nodes, batch_nodes, cfg.hop_cap),
      pairwise_sq_euclidean(x_batch), cfg);

  const ForwardTrace trace = forward(model, step.plan, x_local, Mode::Train);
  step.loss = composite_from(affinities, trace.y, cfg.alpha);
  step.grads = backward(model, trace, step.loss.grad);
  return step;
}

TrainResult train_minibatch(const LabeledDataset& data, const TrainConfig& cfg,
                            const TrainHooks& hooks) {
  check_inputs(data, cfg);
  if (cfg.fanouts.size() != cfg.num_layers)
    throw ArgumentError("fanouts needs one entry per layer");
  const auto t0 = std::chrono::steady_clock::now();

  TrainResult result{init_model(data.features.cols(), cfg.hidden_dim, cfg.seed, cfg.num_layers), {}};
  GcnModel& model = result.model;
  AdamState adam = init_adam(model, cfg.lr);
  adam.patience = cfg.patience;
  adam.decay_factor = cfg.lr_decay;

  const std::size_t n = data.num_nodes();
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<NodeId> order(n);
  auto warn = [&](const std::string& msg) {
    if (hooks.on_warning) hooks.on_warning(msg);
  };

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), NodeId{0});
    std::shuffle(order.begin(), order.end(), rng);
    double sum_ct = 0.0, sum_cg = 0.0, sum_cx = 0.0;
    std::size_t used = 0;
    for (std::size_t b = 0; b < cfg.batch_count; ++b) {
      const std::size_t begin = b * n / cfg.batch_count;
      const std::size_t end = (b + 1) * n / cfg.batch_count;
      const std::uint64_t sample_seed = rng();
      if (end - begin < 3) {
        ++result.report.skipped_batches;
        warn("epoch " + std::to_string(epoch) + ": skipped batch " + std::to_string(b) + " with " +
             std::to_string(end - begin) + " node(s)");
        continue;
      }
      const std::span<const NodeId> nodes(order.data() + begin, end - begin);
      BatchStep step;
      try {
        step = minibatch_gradient(model, data, nodes, cfg, sample_seed);
      } catch (const EmptyAffinityError& e) {
        ++result.report.skipped_batches;
        warn("epoch " + std::to_string(epoch) + ": skipped batch " + std::to_string(b) + ": " + e.what());
        continue;
      }
      if (!std::isfinite(step.loss.composite))
        throw TrainingError("loss became non-finite at epoch " + std::to_string(epoch));
      if (hooks.on_batch) hooks.on_batch(epoch, step);
      adam_step(adam, model, step.grads);
      sum_ct += step.loss.composite;
      sum_cg += step.loss.graph_loss;
      sum_cx += step.loss.feature_loss;
      ++used;
    }
    if (used == 0) throw TrainingError("epoch " + std::to_string(epoch) + " had no usable batches");
    const double m = static_cast<double>(used);
    EpochRecord rec{epoch, sum_ct / m, sum_cg / m, sum_cx / m, adam.lr};
    result.report.epochs.push_back(rec);
    if (hooks.on_epoch) hooks.on_epoch(rec);
    maybe_decay_lr(adam, rec.composite);
  }
  result.report.final_lr = adam.lr;
  result.report.wall_seconds = seconds_since(t0);
  return result;
}

TrainResult train(const LabeledDataset& data, const TrainConfig& cfg, const TrainHooks& hooks) {
  return cfg.mode == TrainMode::FullBatch ? train_full_batch(data, cfg, hooks)
                                          : train_minibatch(data, cfg, hooks);
}

Embedding embed(const GcnModel& model, const LabeledDataset& data) {
  data.validate();
  if (data.features.cols() != model.input_dim)
    throw ArgumentError("embed: features have " + std::to_string(data.features.cols()) +
                        " columns, model expects " + std::to_string(model.input_dim));
  const PropagationPlan plan = PropagationPlan::full_graph(data.graph, model.layers.size());
  return predict(model, plan, data.features);
}

}  // namespace gtsne
