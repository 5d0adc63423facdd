#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "graphtsne/graph.hpp"
#include "graphtsne/matrix.hpp"

namespace gtsne {

struct RowCalibration {
  double sigma = 0.0;
  std::vector<double> conditional;  // p_{j|i}, sums to 1 unless degenerate
  double perplexity = 0.0;          // achieved 2^H
  int iterations = 0;
  bool bound_hit = false;   // search ended against the sigma bounds
  bool degenerate = false;  // no finite entries; conditional is all zero
};

// Bandwidth search limits and stopping rule.
struct CalibrationOptions {
  double sigma_min = 1e-20;
  double sigma_max = 1e20;
  int max_iterations = 60;
  double tolerance = 1e-4;  // on |2^H - target|
};

/// Finds sigma so the Gaussian conditional over `dist_row` has perplexity
/// `target_perplexity`. Unreachable entries get probability exactly zero.
/// `skip` (if < size) is treated as the row's self entry and ignored.
RowCalibration calibrate_row(std::span<const double> dist_row, double target_perplexity,
                             const CalibrationOptions& opts = {},
                             std::size_t skip = static_cast<std::size_t>(-1));

/// Symmetric joint probabilities p_ij for t-SNE.
struct AffinityMatrix {
  Matrix p;
  std::vector<double> sigmas;
  double perplexity = 0.0;
  std::size_t degenerate_rows = 0;
  std::size_t bound_hits = 0;

  std::size_t size() const noexcept { return p.rows(); }
};

DistanceMatrix pairwise_sq_euclidean(const Matrix& x);

/// p_ij = (p_{j|i} + p_{i|j}) / (2B), renormalized to sum to 1.
/// Throws EmptyAffinityError when every row is degenerate.
AffinityMatrix joint_p(const DistanceMatrix& d, double target_perplexity,
                       const CalibrationOptions& opts = {});

struct MapAffinity {
  Matrix q;
  double z = 0.0;
};

/// q_ij = w_ij / Z with w_ij = 1 / (1 + ||y_i - y_j||^2).
MapAffinity studentt_q(const Matrix& y);

struct KlResult {
  double loss = 0.0;
  Matrix grad;  // same shape as y
};

/// KL(P || Q) and its gradient with respect to the map coordinates.
KlResult kl_loss_and_grad(const AffinityMatrix& p, const Matrix& y);

}  // namespace gtsne
