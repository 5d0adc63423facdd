#pragma once

// Data-parallel numeric kernels. Every kernel in gtsne::kernels has a
// single-threaded twin in gtsne::kernels::serial with the same signature.
// The OpenMP versions partition work by output row and reduce in a fixed
// order, so both produce bit-identical results for any thread count.

#include <cstddef>
#include <span>

#include "graphtsne/matrix.hpp"
#include "graphtsne/types.hpp"

namespace gtsne::kernels {

// out = a[0:rows] * w + bias (bias may be empty). out is resized to rows x w.cols().
void linear(const Matrix& a, std::size_t rows, const Matrix& w, std::span<const double> bias,
            Matrix& out);

// out += a[0:rows]^T * b[0:rows]
void matmul_tn_acc(const Matrix& a, const Matrix& b, std::size_t rows, Matrix& out);

// out[0:rows] += a[0:rows] * w^T
void matmul_nt_acc(const Matrix& a, std::size_t rows, const Matrix& w, Matrix& out);

// out[c] += sum over r < rows of a(r, c)
void column_sums_acc(const Matrix& a, std::size_t rows, std::span<double> out);

// D(i, j) = ||x_i - x_j||^2, computed once per unordered pair and mirrored.
Matrix pairwise_sq_euclidean(const Matrix& x);

// w(i, j) = 1 / (1 + ||y_i - y_j||^2), w(i, i) = 0. Returns Z = sum of w.
double student_t_weights(const Matrix& y, Matrix& w);

// sum over p(i, j) > 0 of p log(p / q) with q = w / z.
double kl_divergence(const Matrix& p, const Matrix& w, double z);

// grad_i = 4 sum_j (p_ij - w_ij / z) w_ij (y_i - y_j). grad is resized to y's shape.
void tsne_gradient(const Matrix& p, const Matrix& w, double z, const Matrix& y, Matrix& grad);

// Hop distances from each source to each target over a CSR adjacency.
// out(s, t) is kUnreachable when no path of length <= hop_cap exists
// (hop_cap < 0 means uncapped). Each BFS stops once every target is settled.
void bfs_distances(std::span<const std::size_t> offsets, std::span<const NodeId> adjacency,
                   std::span<const NodeId> sources, std::span<const NodeId> targets, int hop_cap,
                   Matrix& out);

// For each row i, the k nearest other rows by squared Euclidean distance,
// nearest first, ties by smaller index. out has x.rows() * k entries.
void knn_indices(const Matrix& x, std::size_t k, std::span<NodeId> out);

namespace serial {

void linear(const Matrix& a, std::size_t rows, const Matrix& w, std::span<const double> bias,
            Matrix& out);
void matmul_tn_acc(const Matrix& a, const Matrix& b, std::size_t rows, Matrix& out);
void matmul_nt_acc(const Matrix& a, std::size_t rows, const Matrix& w, Matrix& out);
void column_sums_acc(const Matrix& a, std::size_t rows, std::span<double> out);
Matrix pairwise_sq_euclidean(const Matrix& x);
double student_t_weights(const Matrix& y, Matrix& w);
double kl_divergence(const Matrix& p, const Matrix& w, double z);
void tsne_gradient(const Matrix& p, const Matrix& w, double z, const Matrix& y, Matrix& grad);
void bfs_distances(std::span<const std::size_t> offsets, std::span<const NodeId> adjacency,
                   std::span<const NodeId> sources, std::span<const NodeId> targets, int hop_cap,
                   Matrix& out);
void knn_indices(const Matrix& x, std::size_t k, std::span<NodeId> out);

}  // namespace serial

// Threads used by the OpenMP kernels (honors GRAPHTSNE_THREADS via set_thread_count).
int thread_count();
void set_thread_count(int n);

}  // namespace gtsne::kernels
