#include "graphtsne/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "graphtsne/error.hpp"
#include "graphtsne/io.hpp"
#include "graphtsne/kernels.hpp"
#include "graphtsne/metrics.hpp"
#include "graphtsne/svg.hpp"
#include "graphtsne/trainer.hpp"
#include "json.hpp"

namespace gtsne::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

struct InputFlags {
  std::string edges;
  std::string features;
  std::string labels;
  std::size_t num_nodes = 0;
  CLI::Option* num_nodes_opt = nullptr;
};

struct TrainFlags {
  std::string config;
  double alpha = 0.5;
  std::uint64_t seed = 0;
  std::string mode;
  std::size_t epochs = 0;
  double perplexity = 30.0;
  std::size_t hidden = 0;
  double lr = 0.0;
  std::size_t batches = 0;
  std::string fanouts;
  std::map<std::string, CLI::Option*> given;
};

struct MetricFlags {
  std::size_t knn_k = 10;
  std::string t_ks = "6,12,18";
  std::string t_rs = "1,2";
  std::size_t folds = 10;
};

// Thrown for flag values that parse but are semantically invalid.
struct FlagError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

template <typename T>
std::vector<T> parse_list(const std::string& text, const char* flag) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::istringstream is(item);
    T v{};
    if (!(is >> v) || !(is >> std::ws).eof())
      throw FlagError(std::string(flag) + ": cannot parse '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw FlagError(std::string(flag) + ": empty list");
  return out;
}

void add_input_flags(CLI::App* cmd, InputFlags& f, bool with_features_required = true) {
  cmd->add_option("--edges", f.edges, "Edge list file")->required();
  auto* feat = cmd->add_option("--features", f.features, "Feature CSV file");
  if (with_features_required) feat->required();
  cmd->add_option("--labels", f.labels, "Label CSV file (one class id per line)");
  f.num_nodes_opt = cmd->add_option("--num-nodes", f.num_nodes, "Node count (defaults to feature rows)");
}

void add_train_flags(CLI::App* cmd, TrainFlags& f) {
  f.given["config"] = cmd->add_option("--config", f.config, "key = value config file");
  f.given["alpha"] = cmd->add_option("--alpha", f.alpha, "Graph loss weight in [0, 1]");
  f.given["seed"] = cmd->add_option("--seed", f.seed, "RNG seed");
  f.given["mode"] = cmd->add_option("--mode", f.mode, "full | minibatch");
  f.given["epochs"] = cmd->add_option("--epochs", f.epochs, "Training epochs");
  f.given["perplexity"] = cmd->add_option("--perplexity", f.perplexity, "t-SNE perplexity");
  f.given["hidden_dim"] = cmd->add_option("--hidden", f.hidden, "Hidden units per layer");
  f.given["lr"] = cmd->add_option("--lr", f.lr, "Adam learning rate");
  f.given["batch_count"] = cmd->add_option("--batches", f.batches, "Mini-batches per epoch");
  f.given["fanouts"] = cmd->add_option("--fanouts", f.fanouts, "Per-layer fan-outs, e.g. 10,15");
}

void add_metric_flags(CLI::App* cmd, MetricFlags& f) {
  cmd->add_option("--knn-k", f.knn_k, "k of the feature kNN graph used by P_X");
  cmd->add_option("--t-ks", f.t_ks, "Comma list of k for feature trustworthiness");
  cmd->add_option("--t-rs", f.t_rs, "Comma list of r for graph trustworthiness");
  cmd->add_option("--folds", f.folds, "Folds for 1-NN accuracy");
}

LabeledDataset load_dataset(const InputFlags& f) {
  LabeledDataset data;
  data.features = load_features_csv(f.features);
  const std::size_t n = data.features.rows();
  if (f.num_nodes_opt->count() > 0 && f.num_nodes != n)
    throw MalformedInput(f.features, 0,
                         "has " + std::to_string(n) + " rows but --num-nodes is " +
                             std::to_string(f.num_nodes));
  data.graph = load_edge_list(f.edges, n);
  if (!f.labels.empty()) {
    auto labels = load_labels_csv(f.labels);
    if (labels.size() != n)
      throw MalformedInput(f.labels, labels.size(),
                           "has " + std::to_string(labels.size()) + " labels, expected " +
                               std::to_string(n));
    data.labels = std::move(labels);
  }
  return data;
}

TrainConfig resolve_config(const TrainFlags& f, std::size_t num_nodes) {
  TrainConfig cfg = TrainConfig::preset_for(num_nodes);
  auto given = [&](const char* key) { return f.given.at(key)->count() > 0; };
  if (given("config")) apply_config_file(cfg, f.config);
  try {
    if (given("alpha")) cfg.alpha = f.alpha;
    if (given("seed")) cfg.seed = f.seed;
    if (given("mode")) apply_config_value(cfg, "mode", f.mode);
    if (given("epochs")) cfg.epochs = f.epochs;
    if (given("perplexity")) cfg.perplexity = f.perplexity;
    if (given("hidden_dim")) cfg.hidden_dim = f.hidden;
    if (given("lr")) cfg.lr = f.lr;
    if (given("batch_count")) cfg.batch_count = f.batches;
    if (given("fanouts")) apply_config_value(cfg, "fanouts", f.fanouts);
    cfg.validate();
  } catch (const ArgumentError& e) {
    throw FlagError(e.what());
  }
  return cfg;
}

MetricOptions resolve_metrics(const MetricFlags& f, std::uint64_t seed) {
  MetricOptions opts;
  opts.knn_k = f.knn_k;
  opts.trust_ks = parse_list<std::size_t>(f.t_ks, "--t-ks");
  opts.trust_rs = parse_list<int>(f.t_rs, "--t-rs");
  opts.folds = f.folds;
  opts.seed = seed;
  return opts;
}

json config_json(const TrainConfig& cfg) {
  return json{{"alpha", cfg.alpha},           {"perplexity", cfg.perplexity},
              {"epochs", cfg.epochs},         {"hidden_dim", cfg.hidden_dim},
              {"num_layers", cfg.num_layers}, {"batch_count", cfg.batch_count},
              {"fanouts", cfg.fanouts},       {"lr", cfg.lr},
              {"lr_decay", cfg.lr_decay},     {"patience", cfg.patience},
              {"hop_cap", cfg.hop_cap},       {"seed", cfg.seed},
              {"mode", to_string(cfg.mode)}};
}

json train_report_json(const TrainReport& r) {
  json epochs = json::array();
  for (const auto& e : r.epochs)
    epochs.push_back({{"epoch", e.epoch},
                      {"composite", e.composite},
                      {"graph_loss", e.graph_loss},
                      {"feature_loss", e.feature_loss},
                      {"lr", e.lr}});
  return json{{"epochs", epochs},
              {"final_lr", r.final_lr},
              {"wall_seconds", r.wall_seconds},
              {"skipped_batches", r.skipped_batches}};
}

json manifest_base(const std::string& command, int argc, const char* const* argv,
                   const InputFlags& in, const std::string& started) {
  json m;
  m["tool"] = "graphtsne";
  m["version"] = GRAPHTSNE_VERSION;
  m["command"] = command;
  json args = json::array();
  for (int i = 0; i < argc; ++i) args.push_back(argv[i]);
  m["argv"] = args;
  m["inputs"] = {{"edges", in.edges}, {"features", in.features}, {"labels", in.labels}};
  m["started_at"] = started;
  return m;
}

void write_layout_outputs(const fs::path& dir, const Embedding& y, const LabeledDataset& data) {
  write_layout_csv(dir / "layout.csv", y);
  const std::span<const int> labels =
      data.labels ? std::span<const int>(*data.labels) : std::span<const int>();
  write_file_atomic(dir / "layout.svg", render_svg(y, data.graph, labels));
}

TrainHooks progress_hooks(std::ostream& err, std::size_t epochs, bool quiet) {
  TrainHooks hooks;
  hooks.on_warning = [&err](const std::string& msg) { err << "warning: " << msg << "\n"; };
  if (!quiet) {
    const std::size_t every = std::max<std::size_t>(1, epochs / 10);
    hooks.on_epoch = [&err, every, epochs](const EpochRecord& r) {
      if (r.epoch % every == 0 || r.epoch == 1 || r.epoch == epochs) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "epoch %4zu  C_T %.6f  C_G %.6f  C_X %.6f  lr %.3g\n",
                      r.epoch, r.composite, r.graph_loss, r.feature_loss, r.lr);
        err << buf;
      }
    };
  }
  return hooks;
}

std::string summary_table(const SweepResult& sweep) {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-7s %-10s %-10s %-10s %-10s\n", "alpha", "P_G", "P_X",
                "P_G+P_X", "1-NN");
  out += buf;
  for (std::size_t i = 0; i < sweep.reports.size(); ++i) {
    const auto& r = sweep.reports[i];
    std::string acc = "-";
    if (r.knn_accuracy) {
      std::snprintf(buf, sizeof buf, "%.4f", *r.knn_accuracy);
      acc = buf;
    }
    std::snprintf(buf, sizeof buf, "%-7.3f %-10.5f %-10.5f %-10.5f %-10s%s\n", r.alpha, r.p_graph,
                  r.p_feature, r.combined, acc.c_str(), i == sweep.best_index ? "  <- alpha*" : "");
    out += buf;
  }
  return out;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  if (const char* env = std::getenv("GRAPHTSNE_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) kernels::set_thread_count(n);
  }

  CLI::App app{"Graph layouts from a gated GCN trained on a composite t-SNE loss", "graphtsne"};
  app.require_subcommand(1);

  InputFlags fit_in, sweep_in, eval_in;
  TrainFlags fit_train, sweep_train;
  MetricFlags sweep_metrics, eval_metrics;
  std::string fit_out, sweep_out, eval_out = ".", layout_path, grid_text = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1";
  bool quiet = false, save_model = false;

  auto* fit = app.add_subcommand("fit", "Train a model and write layout.csv, layout.svg, manifest.json");
  add_input_flags(fit, fit_in);
  add_train_flags(fit, fit_train);
  fit->add_option("--out-dir", fit_out, "Output directory")->required();
  fit->add_flag("--save-model", save_model, "Also write model.gtsne");
  fit->add_flag("--quiet", quiet, "No per-epoch progress");

  auto* sweep = app.add_subcommand("sweep", "Train over a grid of alpha and select alpha*");
  add_input_flags(sweep, sweep_in);
  add_train_flags(sweep, sweep_train);
  add_metric_flags(sweep, sweep_metrics);
  sweep->add_option("--grid", grid_text, "Comma list of alpha values");
  sweep->add_option("--out-dir", sweep_out, "Output directory")->required();
  sweep->add_flag("--quiet", quiet, "No per-epoch progress");

  auto* evaluate = app.add_subcommand("evaluate", "Compute the metric suite for a layout");
  add_input_flags(evaluate, eval_in);
  add_metric_flags(evaluate, eval_metrics);
  evaluate->add_option("--layout", layout_path, "Layout CSV (node_id,x,y)")->required();
  evaluate->add_option("--out-dir", eval_out, "Output directory for metrics.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kInvalidFlags;
  }

  const std::string started = utc_now();
  // Stage markers decide the exit code for exceptions of shared types.
  enum class Stage { Load, Configure, Train, Write } stage = Stage::Load;
  try {
    if (fit->parsed()) {
      LabeledDataset data = load_dataset(fit_in);
      stage = Stage::Configure;
      const TrainConfig cfg = resolve_config(fit_train, data.num_nodes());
      const fs::path dir = fit_out;
      fs::create_directories(dir);
      stage = Stage::Train;
      const TrainResult result = train(data, cfg, progress_hooks(err, cfg.epochs, quiet));
      const Embedding y = embed(result.model, data);
      stage = Stage::Write;
      write_layout_outputs(dir, y, data);
      write_file_atomic(dir / "train_report.json", train_report_json(result.report).dump(2) + "\n");
      json outputs = json::array({"layout.csv", "layout.svg", "train_report.json"});
      if (save_model) {
        save_checkpoint(dir / "model.gtsne", result.model);
        outputs.push_back("model.gtsne");
      }
      json m = manifest_base("fit", argc, argv, fit_in, started);
      m["inputs"]["config"] = fit_train.config;
      m["config"] = config_json(cfg);
      m["seed"] = cfg.seed;
      m["outputs"] = outputs;
      m["finished_at"] = utc_now();
      write_file_atomic(dir / "manifest.json", m.dump(2) + "\n");
      out << "wrote " << (dir / "layout.csv").string() << " (" << y.rows() << " nodes)\n";
      return kOk;
    }

    if (sweep->parsed()) {
      LabeledDataset data = load_dataset(sweep_in);
      stage = Stage::Configure;
      const TrainConfig cfg = resolve_config(sweep_train, data.num_nodes());
      const MetricOptions opts = resolve_metrics(sweep_metrics, cfg.seed);
      const std::vector<double> grid = parse_list<double>(grid_text, "--grid");
      for (double a : grid)
        if (!(a >= 0.0 && a <= 1.0)) throw FlagError("--grid: alpha " + std::to_string(a) + " outside [0, 1]");
      const fs::path dir = sweep_out;
      fs::create_directories(dir);
      stage = Stage::Train;
      const SweepResult result = alpha_sweep(data, cfg, grid, opts, progress_hooks(err, cfg.epochs, quiet));
      stage = Stage::Write;
      write_file_atomic(dir / "sweep.json", to_json(result.reports));
      write_file_atomic(dir / "summary.txt", summary_table(result));
      write_layout_outputs(dir, result.best_layout, data);
      json m = manifest_base("sweep", argc, argv, sweep_in, started);
      m["inputs"]["config"] = sweep_train.config;
      m["config"] = config_json(cfg);
      m["grid"] = grid;
      m["seed"] = cfg.seed;
      m["alpha_star"] = result.alpha_star;
      m["outputs"] = json::array({"sweep.json", "summary.txt", "layout.csv", "layout.svg"});
      m["finished_at"] = utc_now();
      write_file_atomic(dir / "manifest.json", m.dump(2) + "\n");
      out << summary_table(result);
      char buf[64];
      std::snprintf(buf, sizeof buf, "alpha* = %g\n", result.alpha_star);
      out << buf;
      return kOk;
    }

    if (evaluate->parsed()) {
      LabeledDataset data = load_dataset(eval_in);
      stage = Stage::Configure;
      const MetricOptions opts = resolve_metrics(eval_metrics, 0);
      stage = Stage::Load;
      const Embedding y = read_layout_csv(layout_path, data.num_nodes());
      stage = Stage::Configure;
      MetricsReport report = evaluate_layout(data, y, opts);
      report.alpha = std::numeric_limits<double>::quiet_NaN();
      stage = Stage::Write;
      const fs::path dir = eval_out;
      fs::create_directories(dir);
      write_file_atomic(dir / "metrics.json", to_json(report));
      json m = manifest_base("evaluate", argc, argv, eval_in, started);
      m["inputs"]["layout"] = layout_path;
      m["outputs"] = json::array({"metrics.json"});
      m["finished_at"] = utc_now();
      write_file_atomic(dir / "manifest.json", m.dump(2) + "\n");
      out << to_json(report);
      return kOk;
    }
  } catch (const MalformedInput& e) {
    err << "error: " << e.what() << "\n";
    return kMalformedInput;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kMalformedInput;
  } catch (const FlagError& e) {
    err << "error: " << e.what() << "\n";
    return kInvalidFlags;
  } catch (const TrainingError& e) {
    err << "error: training failed: " << e.what() << "\n";
    return kTrainingFailure;
  } catch (const ArgumentError& e) {
    err << "error: " << e.what() << "\n";
    if (stage == Stage::Train) return kTrainingFailure;
    return stage == Stage::Configure ? kInvalidFlags : kMalformedInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return stage == Stage::Train ? kTrainingFailure : kMalformedInput;
  }
  return kInvalidFlags;
}

}  // namespace gtsne::cli
