#include "graphtsne/metrics.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include "graphtsne/error.hpp"
#include "json.hpp"

namespace gtsne {

namespace {

using Index = std::ptrdiff_t;

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) {
    const double d = a[c] - b[c];
    s += d * d;
  }
  return s;
}

struct Ranked {
  double dist;
  NodeId id;
  bool operator<(const Ranked& o) const { return dist != o.dist ? dist < o.dist : id < o.id; }
};

// Distances from point i to every other point (self excluded), unsorted.
void distances_from(const Matrix& pts, std::size_t i, std::vector<Ranked>& out) {
  out.clear();
  for (std::size_t j = 0; j < pts.rows(); ++j)
    if (j != i) out.push_back({sq_dist(pts.row(i), pts.row(j)), static_cast<NodeId>(j)});
}

// Moves the k nearest to the front, in rank order.
void select_nearest(std::vector<Ranked>& cand, std::size_t k) {
  k = std::min(k, cand.size());
  std::partial_sort(cand.begin(), cand.begin() + static_cast<Index>(k), cand.end());
}

void check_layout(const Embedding& y, std::size_t n) {
  if (y.rows() != n) throw ArgumentError("layout has " + std::to_string(y.rows()) +
                                         " rows, expected " + std::to_string(n));
}

std::vector<double> feature_trustworthiness_multi(const FeatureMatrix& x, const Embedding& y,
                                                  std::span<const std::size_t> ks) {
  const std::size_t n = x.rows();
  check_layout(y, n);
  std::size_t k_max = 0;
  for (std::size_t k : ks) {
    if (k == 0 || k >= n || 3 * k + 1 >= 2 * n)
      throw ArgumentError("feature_trustworthiness: k = " + std::to_string(k) +
                          " is invalid for N = " + std::to_string(n));
    k_max = std::max(k_max, k);
  }

  // penalty(i, m) for each k index m.
  Matrix penalty(n, ks.size());
#pragma omp parallel
  {
    std::vector<Ranked> fx, fy;
    std::vector<char> in_feature(n, 0);
#pragma omp for schedule(dynamic, 16)
    for (Index i = 0; i < static_cast<Index>(n); ++i) {
      distances_from(x, i, fx);
      const std::vector<Ranked> all_fx = fx;  // unsorted, for rank counting
      select_nearest(fx, k_max);
      distances_from(y, i, fy);
      select_nearest(fy, k_max);
      for (std::size_t m = 0; m < ks.size(); ++m) {
        const std::size_t k = ks[m];
        for (std::size_t r = 0; r < k; ++r) in_feature[fx[r].id] = 1;
        double total = 0.0;
        for (std::size_t r = 0; r < k; ++r) {
          const NodeId j = fy[r].id;
          if (in_feature[j]) continue;
          // Feature-space rank of j: 1 + number of points strictly before it.
          const Ranked key{sq_dist(x.row(i), x.row(j)), j};
          std::size_t rank = 1;
          for (const Ranked& c : all_fx)
            if (c < key) ++rank;
          total += static_cast<double>(rank) - static_cast<double>(k);
        }
        for (std::size_t r = 0; r < k; ++r) in_feature[fx[r].id] = 0;
        penalty(i, m) = total;
      }
    }
  }

  std::vector<double> out;
  const double nn = static_cast<double>(n);
  for (std::size_t m = 0; m < ks.size(); ++m) {
    const double k = static_cast<double>(ks[m]);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += penalty(i, m);
    out.push_back(1.0 - 2.0 / (nn * k * (2.0 * nn - 3.0 * k - 1.0)) * total);
  }
  return out;
}

}  // namespace

double feature_trustworthiness(const FeatureMatrix& x, const Embedding& y, std::size_t k) {
  const std::size_t ks[] = {k};
  return feature_trustworthiness_multi(x, y, ks).front();
}

double graph_trustworthiness(const Graph& g, const Embedding& y, int r) {
  if (r < 1) throw ArgumentError("graph_trustworthiness: r must be >= 1");
  const std::size_t n = g.num_nodes();
  check_layout(y, n);
  std::vector<double> jaccard(n, 1.0);
#pragma omp parallel
  {
    std::vector<int> hops(n, -1);
    std::vector<NodeId> queue;
    std::vector<char> in_graph(n, 0);
    std::vector<Ranked> fy;
#pragma omp for schedule(dynamic, 16)
    for (Index i = 0; i < static_cast<Index>(n); ++i) {
      queue.assign(1, static_cast<NodeId>(i));
      hops[i] = 0;
      for (std::size_t head = 0; head < queue.size(); ++head) {
        const NodeId u = queue[head];
        if (hops[u] >= r) continue;
        for (NodeId v : g.neighbors(u))
          if (hops[v] < 0) {
            hops[v] = hops[u] + 1;
            queue.push_back(v);
          }
      }
      const std::size_t k = queue.size() - 1;  // self excluded
      if (k > 0) {
        for (std::size_t q = 1; q < queue.size(); ++q) in_graph[queue[q]] = 1;
        distances_from(y, i, fy);
        std::nth_element(fy.begin(), fy.begin() + static_cast<Index>(k - 1), fy.end());
        std::size_t common = 0;
        for (std::size_t q = 0; q < k; ++q) common += in_graph[fy[q].id];
        jaccard[i] = static_cast<double>(common) / static_cast<double>(2 * k - common);
        for (std::size_t q = 1; q < queue.size(); ++q) in_graph[queue[q]] = 0;
      }
      for (NodeId v : queue) hops[v] = -1;
    }
  }
  double total = 0.0;
  for (double v : jaccard) total += v;
  return n == 0 ? 1.0 : total / static_cast<double>(n);
}

Embedding standardize(const Embedding& y) {
  Embedding out = y;
  const std::size_t n = y.rows();
  if (n == 0) return out;
  for (std::size_t c = 0; c < y.cols(); ++c) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += y(i, c);
    mean /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) out(i, c) -= mean;
  }
  double ms = 0.0;
  for (double v : out.values()) ms += v * v;
  ms /= static_cast<double>(n);
  if (ms > 0.0) {
    const double scale = 1.0 / std::sqrt(ms);
    for (double& v : out.values()) v *= scale;
  }
  return out;
}

DistanceMetrics distance_metrics(const Graph& g, std::span<const Edge> knn, const Embedding& y) {
  check_layout(y, g.num_nodes());
  if (g.num_edges() == 0) throw ArgumentError("distance_metrics: graph has no edges");
  if (knn.empty()) throw ArgumentError("distance_metrics: kNN graph is empty");
  const Embedding s = standardize(y);
  DistanceMetrics out;
  double total = 0.0;
  for (auto [i, j] : g.edges()) total += sq_dist(s.row(i), s.row(j));
  out.p_graph = total / static_cast<double>(g.num_edges());
  total = 0.0;
  for (auto [i, j] : knn) total += sq_dist(s.row(i), s.row(j));
  out.p_feature = total / static_cast<double>(knn.size());
  return out;
}

double knn_1_accuracy(const Embedding& y, std::span<const int> labels, std::size_t folds,
                      std::uint64_t seed) {
  const std::size_t n = y.rows();
  if (labels.size() != n) throw ArgumentError("knn_1_accuracy: label count mismatch");
  if (folds < 2) throw ArgumentError("knn_1_accuracy: need at least 2 folds");
  if (n < folds) throw ArgumentError("knn_1_accuracy: fewer points than folds");

  std::vector<NodeId> perm(n);
  std::iota(perm.begin(), perm.end(), NodeId{0});
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::size_t> fold_of(n);
  for (std::size_t f = 0; f < folds; ++f)
    for (std::size_t p = f * n / folds; p < (f + 1) * n / folds; ++p) fold_of[perm[p]] = f;

  std::vector<char> correct(n, 0);
#pragma omp parallel for schedule(dynamic, 32)
  for (Index i = 0; i < static_cast<Index>(n); ++i) {
    Ranked best{std::numeric_limits<double>::infinity(), -1};
    for (std::size_t j = 0; j < n; ++j) {
      if (fold_of[j] == fold_of[i]) continue;
      const Ranked cand{sq_dist(y.row(i), y.row(j)), static_cast<NodeId>(j)};
      if (cand < best) best = cand;
    }
    correct[i] = best.id >= 0 && labels[best.id] == labels[i];
  }
  std::vector<double> hits(folds, 0.0), sizes(folds, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    hits[fold_of[i]] += correct[i];
    sizes[fold_of[i]] += 1.0;
  }
  double acc = 0.0;
  for (std::size_t f = 0; f < folds; ++f) acc += hits[f] / sizes[f];
  return acc / static_cast<double>(folds);
}

MetricsReport evaluate_layout(const LabeledDataset& data, const Embedding& y,
                              const MetricOptions& opts, std::span<const Edge> knn) {
  const auto t0 = std::chrono::steady_clock::now();
  data.validate();
  check_layout(y, data.num_nodes());
  std::vector<Edge> computed;
  if (knn.empty()) {
    computed = knn_graph(data.features, opts.knn_k);
    knn = computed;
  }
  MetricsReport report;
  const auto tx = feature_trustworthiness_multi(data.features, y, opts.trust_ks);
  for (std::size_t m = 0; m < opts.trust_ks.size(); ++m) report.t_feature[opts.trust_ks[m]] = tx[m];
  for (int r : opts.trust_rs) report.t_graph[r] = graph_trustworthiness(data.graph, y, r);
  const DistanceMetrics d = distance_metrics(data.graph, knn, y);
  report.p_graph = d.p_graph;
  report.p_feature = d.p_feature;
  report.combined = d.p_graph + d.p_feature;
  if (data.labels) report.knn_accuracy = knn_1_accuracy(y, *data.labels, opts.folds, opts.seed);
  report.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

namespace {

nlohmann::ordered_json report_json(const MetricsReport& r) {
  nlohmann::ordered_json j;
  j["alpha"] = r.alpha;
  for (const auto& [k, v] : r.t_feature) j["t_feature_k" + std::to_string(k)] = v;
  for (const auto& [rad, v] : r.t_graph) j["t_graph_r" + std::to_string(rad)] = v;
  j["p_graph"] = r.p_graph;
  j["p_feature"] = r.p_feature;
  j["combined"] = r.combined;
  j["knn_accuracy"] = r.knn_accuracy ? nlohmann::ordered_json(*r.knn_accuracy) : nullptr;
  j["runtime_seconds"] = r.runtime_seconds;
  return j;
}

}  // namespace

std::string to_json(const MetricsReport& report) { return report_json(report).dump(2) + "\n"; }

std::string to_json(std::span<const MetricsReport> reports) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& r : reports) arr.push_back(report_json(r));
  return arr.dump(2) + "\n";
}

std::size_t select_alpha_star(std::span<const MetricsReport> reports) {
  if (reports.empty()) throw ArgumentError("select_alpha_star: no reports");
  std::size_t best = 0;
  auto key = [](double v) { return std::isnan(v) ? std::numeric_limits<double>::infinity() : v; };
  for (std::size_t i = 1; i < reports.size(); ++i) {
    const double a = key(reports[i].combined), b = key(reports[best].combined);
    if (a < b || (a == b && reports[i].alpha < reports[best].alpha)) best = i;
  }
  return best;
}

SweepResult alpha_sweep(const LabeledDataset& data, const TrainConfig& cfg,
                        std::span<const double> grid, const MetricOptions& opts,
                        const TrainHooks& hooks) {
  if (grid.empty()) throw ArgumentError("alpha_sweep: empty grid");
  for (double a : grid)
    if (!(a >= 0.0 && a <= 1.0))
      throw ArgumentError("alpha_sweep: grid value " + std::to_string(a) + " outside [0, 1]");

  const std::vector<Edge> knn = knn_graph(data.features, opts.knn_k);
  SweepResult result;
  std::vector<Embedding> layouts;
  for (double alpha : grid) {
    const auto t0 = std::chrono::steady_clock::now();
    TrainConfig run = cfg;
    run.alpha = alpha;
    Embedding y;
    try {
      y = embed(train(data, run, hooks).model, data);
    } catch (const std::exception& e) {
      throw TrainingError("alpha = " + std::to_string(alpha) + ": " + e.what());
    }
    MetricsReport report = evaluate_layout(data, y, opts, knn);
    report.alpha = alpha;
    report.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.reports.push_back(std::move(report));
    layouts.push_back(std::move(y));
  }
  result.best_index = select_alpha_star(result.reports);
  result.alpha_star = result.reports[result.best_index].alpha;
  result.best_layout = std::move(layouts[result.best_index]);
  return result;
}

}  // namespace gtsne
