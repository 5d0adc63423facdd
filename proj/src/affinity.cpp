#include "graphtsne/affinity.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <string>

#include "graphtsne/error.hpp"
#include "graphtsne/kernels.hpp"

namespace gtsne {

namespace {

// Fills `out` with the normalized Gaussian conditional for bandwidth sigma and
// returns its entropy in bits. d_min shifts the exponent for stability.
double gaussian_conditional(std::span<const double> row, std::size_t skip, double d_min,
                            double sigma, std::span<double> out) {
  const double inv = 1.0 / (2.0 * sigma * sigma);
  double total = 0.0;
  for (std::size_t j = 0; j < row.size(); ++j) {
    if (j == skip || is_unreachable(row[j])) {
      out[j] = 0.0;
      continue;
    }
    out[j] = std::exp(-(row[j] - d_min) * inv);
    total += out[j];
  }
  double entropy = 0.0;
  for (std::size_t j = 0; j < row.size(); ++j) {
    if (out[j] <= 0.0) continue;
    out[j] /= total;
    if (out[j] > 0.0) entropy -= out[j] * std::log2(out[j]);
  }
  return entropy;
}

}  // namespace

RowCalibration calibrate_row(std::span<const double> dist_row, double target_perplexity,
                             const CalibrationOptions& opts, std::size_t skip) {
  RowCalibration result;
  result.conditional.assign(dist_row.size(), 0.0);

  double d_min = kUnreachable;
  for (std::size_t j = 0; j < dist_row.size(); ++j) {
    if (j == skip) continue;
    const double d = dist_row[j];
    if (std::isnan(d) || d < 0.0) throw ArgumentError("calibrate_row: distances must be nonnegative");
    if (!is_unreachable(d)) d_min = std::min(d_min, d);
  }
  if (is_unreachable(d_min)) {
    result.degenerate = true;
    return result;
  }

  // Perplexity grows monotonically with sigma; bisect on log(sigma).
  double lo = std::log(opts.sigma_min);
  double hi = std::log(opts.sigma_max);
  double log_sigma = 0.0;
  bool converged = false;
  for (int it = 0; it < opts.max_iterations; ++it) {
    result.iterations = it + 1;
    const double sigma = std::exp(log_sigma);
    const double entropy = gaussian_conditional(dist_row, skip, d_min, sigma, result.conditional);
    result.sigma = sigma;
    result.perplexity = std::exp2(entropy);
    const double err = result.perplexity - target_perplexity;
    if (std::abs(err) <= opts.tolerance) {
      converged = true;
      break;
    }
    if (err > 0.0)
      hi = log_sigma;
    else
      lo = log_sigma;
    log_sigma = 0.5 * (lo + hi);
  }
  if (!converged) {
    const double margin = 1e-6 * (std::log(opts.sigma_max) - std::log(opts.sigma_min));
    result.bound_hit = (log_sigma - std::log(opts.sigma_min) < margin) ||
                       (std::log(opts.sigma_max) - log_sigma < margin);
  }
  return result;
}

DistanceMatrix pairwise_sq_euclidean(const Matrix& x) {
  return DistanceMatrix(kernels::pairwise_sq_euclidean(x));
}

AffinityMatrix joint_p(const DistanceMatrix& d, double target_perplexity,
                       const CalibrationOptions& opts) {
  if (!d.square()) throw ArgumentError("joint_p: distance matrix must be square");
  const std::size_t n = d.rows();
  AffinityMatrix result;
  result.perplexity = target_perplexity;
  result.sigmas.assign(n, 0.0);
  Matrix cond(n, n);
  std::vector<char> degenerate(n, 0), bound(n, 0);
  std::vector<std::string> errors(n);

#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    try {
      RowCalibration row = calibrate_row(d.row(i), target_perplexity, opts, i);
      result.sigmas[i] = row.sigma;
      degenerate[i] = row.degenerate;
      bound[i] = row.bound_hit;
      std::copy(row.conditional.begin(), row.conditional.end(), cond.row(i).begin());
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  for (const auto& e : errors)
    if (!e.empty()) throw ArgumentError(e);

  result.degenerate_rows = static_cast<std::size_t>(std::count(degenerate.begin(), degenerate.end(), 1));
  result.bound_hits = static_cast<std::size_t>(std::count(bound.begin(), bound.end(), 1));
  if (n == 0 || result.degenerate_rows == n)
    throw EmptyAffinityError("joint_p: every row has only unreachable neighbors");

  result.p.resize(n, n);
  const double scale = 1.0 / (2.0 * static_cast<double>(n));
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double v = (cond(i, j) + cond(j, i)) * scale;
      result.p(i, j) = v;
      total += v;
    }
  if (total <= 0.0) throw EmptyAffinityError("joint_p: affinities sum to zero");
  for (double& v : result.p.values()) v /= total;
  return result;
}

MapAffinity studentt_q(const Matrix& y) {
  if (y.rows() < 2) throw ArgumentError("studentt_q: need at least two points");
  MapAffinity out;
  out.z = kernels::student_t_weights(y, out.q);
  for (double& v : out.q.values()) v /= out.z;
  return out;
}

KlResult kl_loss_and_grad(const AffinityMatrix& p, const Matrix& y) {
  if (p.size() != y.rows()) throw ArgumentError("kl_loss_and_grad: P and y sizes differ");
  Matrix w;
  const double z = kernels::student_t_weights(y, w);
  KlResult out;
  out.loss = kernels::kl_divergence(p.p, w, z);
  kernels::tsne_gradient(p.p, w, z, y, out.grad);
  return out;
}

}  // namespace gtsne
