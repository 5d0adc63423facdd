// Reference kernels: straightforward single-threaded loops, kept for testing
// the OpenMP kernels and as the baseline in bench/.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <vector>

#include "graphtsne/error.hpp"
#include "graphtsne/kernels.hpp"

namespace gtsne::kernels::serial {

void linear(const Matrix& a, std::size_t rows, const Matrix& w, std::span<const double> bias,
            Matrix& out) {
  if (a.cols() != w.rows()) throw ArgumentError("linear: inner dimension mismatch");
  out.resize(rows, w.cols());
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < w.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * w(k, j);
      out(i, j) = bias.empty() ? s : s + bias[j];
    }
  }
}

void matmul_tn_acc(const Matrix& a, const Matrix& b, std::size_t rows, Matrix& out) {
  for (std::size_t k = 0; k < a.cols(); ++k)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < rows; ++i) s += a(i, k) * b(i, j);
      out(k, j) += s;
    }
}

void matmul_nt_acc(const Matrix& a, std::size_t rows, const Matrix& w, Matrix& out) {
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < w.rows(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * w(j, k);
      out(i, j) += s;
    }
}

void column_sums_acc(const Matrix& a, std::size_t rows, std::span<double> out) {
  for (std::size_t c = 0; c < a.cols(); ++c) {
    double s = 0.0;
    for (std::size_t r = 0; r < rows; ++r) s += a(r, c);
    out[c] += s;
  }
}

Matrix pairwise_sq_euclidean(const Matrix& x) {
  const std::size_t n = x.rows();
  Matrix d(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < x.cols(); ++k) {
        const double diff = x(i, k) - x(j, k);
        s += diff * diff;
      }
      d(i, j) = s;
      d(j, i) = s;
    }
  return d;
}

double student_t_weights(const Matrix& y, Matrix& w) {
  const std::size_t n = y.rows();
  w.resize(n, n);
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      double d2 = 0.0;
      for (std::size_t c = 0; c < y.cols(); ++c) {
        const double diff = y(i, c) - y(j, c);
        d2 += diff * diff;
      }
      w(i, j) = 1.0 / (1.0 + d2);
      row += w(i, j);
    }
    z += row;
  }
  return z;
}

double kl_divergence(const Matrix& p, const Matrix& w, double z) {
  double total = 0.0;
  for (std::size_t i = 0; i < p.rows(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < p.cols(); ++j) {
      const double pij = p(i, j);
      if (i == j || pij <= 0.0) continue;
      row += pij * std::log(pij * z / w(i, j));
    }
    total += row;
  }
  return total;
}

void tsne_gradient(const Matrix& p, const Matrix& w, double z, const Matrix& y, Matrix& grad) {
  grad.resize(y.rows(), y.cols());
  for (std::size_t i = 0; i < y.rows(); ++i)
    for (std::size_t j = 0; j < y.rows(); ++j) {
      if (i == j) continue;
      const double coeff = 4.0 * (p(i, j) - w(i, j) / z) * w(i, j);
      for (std::size_t c = 0; c < y.cols(); ++c) grad(i, c) += coeff * (y(i, c) - y(j, c));
    }
}

void bfs_distances(std::span<const std::size_t> offsets, std::span<const NodeId> adjacency,
                   std::span<const NodeId> sources, std::span<const NodeId> targets, int hop_cap,
                   Matrix& out) {
  const std::size_t n = offsets.empty() ? 0 : offsets.size() - 1;
  out.resize(sources.size(), targets.size());
  std::vector<int> dist(n);
  for (std::size_t s = 0; s < sources.size(); ++s) {
    std::fill(dist.begin(), dist.end(), -1);
    std::queue<NodeId> queue;
    dist[sources[s]] = 0;
    queue.push(sources[s]);
    while (!queue.empty()) {
      const NodeId u = queue.front();
      queue.pop();
      for (std::size_t e = offsets[u]; e < offsets[u + 1]; ++e) {
        const NodeId v = adjacency[e];
        if (dist[v] < 0) {
          dist[v] = dist[u] + 1;
          queue.push(v);
        }
      }
    }
    for (std::size_t t = 0; t < targets.size(); ++t) {
      const int d = dist[targets[t]];
      out(s, t) = (d < 0 || (hop_cap >= 0 && d > hop_cap)) ? kUnreachable : static_cast<double>(d);
    }
  }
}

void knn_indices(const Matrix& x, std::size_t k, std::span<NodeId> out) {
  const std::size_t n = x.rows();
  if (k >= n) throw ArgumentError("knn: k must be smaller than the number of points");
  const Matrix d = pairwise_sq_euclidean(x);
  std::vector<NodeId> order(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::iota(order.begin(), order.end(), NodeId{0});
    std::sort(order.begin(), order.end(), [&](NodeId a, NodeId b) {
      if (d(i, a) != d(i, b)) return d(i, a) < d(i, b);
      return a < b;
    });
    std::size_t taken = 0;
    for (NodeId j : order) {
      if (static_cast<std::size_t>(j) == i) continue;
      if (taken == k) break;
      out[i * k + taken++] = j;
    }
  }
}

}  // namespace gtsne::kernels::serial
