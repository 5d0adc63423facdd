#include <omp.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "graphtsne/error.hpp"
#include "graphtsne/kernels.hpp"

namespace gtsne::kernels {

namespace {

using Index = std::ptrdiff_t;  // OpenMP loop variables must be signed

double sq_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double diff = a[k] - b[k];
    s += diff * diff;
  }
  return s;
}

}  // namespace

int thread_count() { return omp_get_max_threads(); }

void set_thread_count(int n) {
  if (n > 0) omp_set_num_threads(n);
}

void linear(const Matrix& a, std::size_t rows, const Matrix& w, std::span<const double> bias,
            Matrix& out) {
  if (a.cols() != w.rows()) throw ArgumentError("linear: inner dimension mismatch");
  if (!bias.empty() && bias.size() != w.cols()) throw ArgumentError("linear: bias size mismatch");
  out.resize(rows, w.cols());
  const std::size_t inner = a.cols();
  const std::size_t width = w.cols();
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < static_cast<Index>(rows); ++i) {
    double* dst = out.data() + i * width;
    const double* src = a.data() + i * inner;
    for (std::size_t k = 0; k < inner; ++k) {
      const double aik = src[k];
      if (aik == 0.0) continue;  // bag-of-words features are mostly zero
      const double* wk = w.data() + k * width;
      for (std::size_t j = 0; j < width; ++j) dst[j] += aik * wk[j];
    }
    if (!bias.empty())
      for (std::size_t j = 0; j < width; ++j) dst[j] += bias[j];
  }
}

void matmul_tn_acc(const Matrix& a, const Matrix& b, std::size_t rows, Matrix& out) {
  const std::size_t width = b.cols();
#pragma omp parallel
  {
    std::vector<double> acc(width);
#pragma omp for schedule(dynamic, 8)
    for (Index k = 0; k < static_cast<Index>(a.cols()); ++k) {
      std::fill(acc.begin(), acc.end(), 0.0);
      for (std::size_t i = 0; i < rows; ++i) {
        const double aik = a(i, k);
        if (aik == 0.0) continue;
        const double* bi = b.data() + i * width;
        for (std::size_t j = 0; j < width; ++j) acc[j] += aik * bi[j];
      }
      double* dst = out.data() + k * width;
      for (std::size_t j = 0; j < width; ++j) dst[j] += acc[j];
    }
  }
}

void matmul_nt_acc(const Matrix& a, std::size_t rows, const Matrix& w, Matrix& out) {
  const std::size_t inner = a.cols();
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < static_cast<Index>(rows); ++i) {
    const double* ai = a.data() + i * inner;
    for (std::size_t j = 0; j < w.rows(); ++j) {
      const double* wj = w.data() + j * inner;
      double s = 0.0;
      for (std::size_t k = 0; k < inner; ++k) s += ai[k] * wj[k];
      out(i, j) += s;
    }
  }
}

void column_sums_acc(const Matrix& a, std::size_t rows, std::span<double> out) {
  std::vector<double> acc(a.cols(), 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* src = a.data() + r * a.cols();
    for (std::size_t c = 0; c < a.cols(); ++c) acc[c] += src[c];
  }
  for (std::size_t c = 0; c < a.cols(); ++c) out[c] += acc[c];
}

Matrix pairwise_sq_euclidean(const Matrix& x) {
  const std::size_t n = x.rows();
  Matrix d(n, n);
#pragma omp parallel for schedule(dynamic, 16)
  for (Index i = 0; i < static_cast<Index>(n); ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double s = sq_distance(x.row(i), x.row(j));
      d(i, j) = s;
      d(j, i) = s;
    }
  }
  return d;
}

double student_t_weights(const Matrix& y, Matrix& w) {
  const std::size_t n = y.rows();
  w.resize(n, n);
  std::vector<double> row_sums(n, 0.0);
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < static_cast<Index>(n); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (static_cast<std::size_t>(i) == j) continue;
      const double v = 1.0 / (1.0 + sq_distance(y.row(i), y.row(j)));
      w(i, j) = v;
      row += v;
    }
    row_sums[i] = row;
  }
  double z = 0.0;
  for (double r : row_sums) z += r;
  return z;
}

double kl_divergence(const Matrix& p, const Matrix& w, double z) {
  const std::size_t n = p.rows();
  std::vector<double> row_sums(n, 0.0);
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < static_cast<Index>(n); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < p.cols(); ++j) {
      const double pij = p(i, j);
      if (static_cast<std::size_t>(i) == j || pij <= 0.0) continue;
      row += pij * std::log(pij * z / w(i, j));
    }
    row_sums[i] = row;
  }
  double total = 0.0;
  for (double r : row_sums) total += r;
  return total;
}

void tsne_gradient(const Matrix& p, const Matrix& w, double z, const Matrix& y, Matrix& grad) {
  const std::size_t n = y.rows();
  const std::size_t dims = y.cols();
  grad.resize(n, dims);
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < static_cast<Index>(n); ++i) {
    double* g = grad.data() + i * dims;
    for (std::size_t j = 0; j < n; ++j) {
      if (static_cast<std::size_t>(i) == j) continue;
      const double coeff = 4.0 * (p(i, j) - w(i, j) / z) * w(i, j);
      for (std::size_t c = 0; c < dims; ++c) g[c] += coeff * (y(i, c) - y(j, c));
    }
  }
}

void bfs_distances(std::span<const std::size_t> offsets, std::span<const NodeId> adjacency,
                   std::span<const NodeId> sources, std::span<const NodeId> targets, int hop_cap,
                   Matrix& out) {
  const std::size_t n = offsets.empty() ? 0 : offsets.size() - 1;
  out.resize(sources.size(), targets.size());
  out.fill(kUnreachable);

  // Column of the first occurrence of each target node; duplicates copied afterwards.
  std::vector<Index> target_col(n, -1);
  std::size_t distinct_targets = 0;
  for (std::size_t t = 0; t < targets.size(); ++t) {
    if (target_col[targets[t]] < 0) {
      target_col[targets[t]] = static_cast<Index>(t);
      ++distinct_targets;
    }
  }

#pragma omp parallel
  {
    std::vector<int> dist(n, -1);
    std::vector<NodeId> frontier;
    frontier.reserve(n);
#pragma omp for schedule(dynamic, 1)
    for (Index s = 0; s < static_cast<Index>(sources.size()); ++s) {
      frontier.clear();
      const NodeId src = sources[s];
      dist[src] = 0;
      frontier.push_back(src);
      std::size_t found = 0;
      double* row = out.data() + s * targets.size();
      // frontier doubles as the FIFO queue; head walks forward through it.
      for (std::size_t head = 0; head < frontier.size(); ++head) {
        const NodeId u = frontier[head];
        const int du = dist[u];
        if (target_col[u] >= 0) {
          row[target_col[u]] = du;
          if (++found == distinct_targets) break;
        }
        if (hop_cap >= 0 && du >= hop_cap) continue;
        for (std::size_t e = offsets[u]; e < offsets[u + 1]; ++e) {
          const NodeId v = adjacency[e];
          if (dist[v] < 0) {
            dist[v] = du + 1;
            frontier.push_back(v);
          }
        }
      }
      for (NodeId v : frontier) dist[v] = -1;
    }
  }

  for (std::size_t t = 0; t < targets.size(); ++t) {
    const auto first = static_cast<std::size_t>(target_col[targets[t]]);
    if (first == t) continue;
    for (std::size_t s = 0; s < sources.size(); ++s) out(s, t) = out(s, first);
  }
}

void knn_indices(const Matrix& x, std::size_t k, std::span<NodeId> out) {
  const std::size_t n = x.rows();
  if (k >= n) throw ArgumentError("knn: k must be smaller than the number of points");
#pragma omp parallel
  {
    std::vector<std::pair<double, NodeId>> cand;
    cand.reserve(n);
#pragma omp for schedule(dynamic, 16)
    for (Index i = 0; i < static_cast<Index>(n); ++i) {
      cand.clear();
      for (std::size_t j = 0; j < n; ++j) {
        if (j == static_cast<std::size_t>(i)) continue;
        cand.emplace_back(sq_distance(x.row(i), x.row(j)), static_cast<NodeId>(j));
      }
      std::partial_sort(cand.begin(), cand.begin() + static_cast<Index>(k), cand.end());
      for (std::size_t r = 0; r < k; ++r) out[i * k + r] = cand[r].second;
    }
  }
}

}  // namespace gtsne::kernels
