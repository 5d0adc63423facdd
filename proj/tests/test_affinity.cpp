#include <cmath>
#include <numeric>

#include "doctest.h"
#include "fixtures.hpp"
#include "graphtsne/affinity.hpp"
#include "graphtsne/error.hpp"
#include "oracles.hpp"

using namespace gtsne;

namespace {

double perplexity_of(const std::vector<double>& p) {
  double h = 0.0;
  for (double v : p)
    if (v > 0) h -= v * std::log2(v);
  return std::exp2(h);
}

double sum(const Matrix& m) { return std::accumulate(m.values().begin(), m.values().end(), 0.0); }

}  // namespace

TEST_CASE("pairwise_sq_euclidean") {
  Matrix same(4, 3);
  same.fill(2.5);
  const DistanceMatrix z = pairwise_sq_euclidean(same);
  for (double v : z.values().values()) CHECK(v == 0.0);

  Matrix tri(2, 2);
  tri(1, 0) = 3, tri(1, 1) = 4;
  CHECK(pairwise_sq_euclidean(tri)(0, 1) == 25.0);

  const Matrix x = fixtures::random_matrix(40, 7, 1);
  const DistanceMatrix d = pairwise_sq_euclidean(x);
  const Matrix ref = oracle::naive_sq_dist(x);
  for (std::size_t i = 0; i < 40; ++i) {
    CHECK(d(i, i) == 0.0);
    for (std::size_t j = 0; j < 40; ++j) {
      CHECK(std::abs(d(i, j) - ref(i, j)) <= 1e-10);
      CHECK(d(i, j) == d(j, i));
    }
  }
}

TEST_CASE("calibrate_row") {
  SUBCASE("equal distances give a uniform conditional") {
    const std::vector<double> row(29, 4.0);
    const RowCalibration c = calibrate_row(row, 10.0);
    for (double v : c.conditional) CHECK(v == doctest::Approx(1.0 / 29).epsilon(1e-12));
    CHECK(c.perplexity == doctest::Approx(29.0).epsilon(1e-9));
  }
  SUBCASE("random row reaches the target perplexity") {
    const Matrix r = fixtures::random_matrix(1, 100, 3, 0.0, 10.0);
    const std::vector<double> row(r.values().begin(), r.values().end());
    const RowCalibration c = calibrate_row(row, 30.0);
    CHECK(std::abs(perplexity_of(c.conditional) - 30.0) <= 1e-3);
    CHECK(std::abs(c.perplexity - 30.0) <= 1e-3);
    CHECK_FALSE(c.bound_hit);
    CHECK(std::accumulate(c.conditional.begin(), c.conditional.end(), 0.0) == doctest::Approx(1.0));
  }
  SUBCASE("single finite entry is an indicator and hits the bound") {
    std::vector<double> row(10, kUnreachable);
    row[4] = 2.0;
    const RowCalibration c = calibrate_row(row, 5.0);
    CHECK(c.conditional[4] == 1.0);
    CHECK(c.perplexity == doctest::Approx(1.0));
    CHECK(c.bound_hit);
    CHECK_FALSE(c.degenerate);
  }
  SUBCASE("all entries unreachable is degenerate") {
    const std::vector<double> row(6, kUnreachable);
    const RowCalibration c = calibrate_row(row, 3.0);
    CHECK(c.degenerate);
    for (double v : c.conditional) CHECK(v == 0.0);
  }
  SUBCASE("unreachable entries get zero probability and skip excludes self") {
    std::vector<double> row{0.0, 1.0, kUnreachable, 2.0, 3.0};
    const RowCalibration c = calibrate_row(row, 2.0, {}, 0);
    CHECK(c.conditional[0] == 0.0);
    CHECK(c.conditional[2] == 0.0);
    CHECK(std::abs(c.perplexity - 2.0) <= 1e-3);
  }
  SUBCASE("negative distances are rejected") {
    const std::vector<double> row{1.0, -0.5, 2.0};
    CHECK_THROWS_AS(calibrate_row(row, 2.0), ArgumentError);
  }
}

TEST_CASE("joint_p examples") {
  Matrix two(2, 2);
  two(0, 1) = two(1, 0) = 7.3;
  const AffinityMatrix p2 = joint_p(DistanceMatrix(two), 2.0);
  CHECK(p2.p(0, 1) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(p2.p(1, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(p2.p(0, 0) == 0.0);

  Matrix three(3, 3);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) three(i, j) = i == j ? 0.0 : 1.5;
  const AffinityMatrix p3 = joint_p(DistanceMatrix(three), 2.0);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      if (i != j) CHECK(p3.p(i, j) == doctest::Approx(1.0 / 6).epsilon(1e-12));

  Matrix none(3, 3);
  none.fill(kUnreachable);
  for (std::size_t i = 0; i < 3; ++i) none(i, i) = 0.0;
  CHECK_THROWS_AS(joint_p(DistanceMatrix(none), 2.0), EmptyAffinityError);

  CHECK_THROWS_AS(joint_p(DistanceMatrix(Matrix(3, 4)), 2.0), ArgumentError);
}

TEST_CASE("joint_p matches the direct formula at the returned bandwidths") {
  const Matrix x = fixtures::random_matrix(20, 4, 7);
  const DistanceMatrix d = pairwise_sq_euclidean(x);
  const AffinityMatrix p = joint_p(d, 5.0);
  const Matrix ref = oracle::joint_from_sigmas(oracle::naive_sq_dist(x), p.sigmas);
  for (std::size_t k = 0; k < ref.size(); ++k) CHECK(std::abs(p.p.values()[k] - ref.values()[k]) <= 1e-10);
}

TEST_CASE("joint_p with unreachable pairs") {
  const Graph g(6, std::vector<Edge>{{0, 1}, {1, 2}, {3, 4}});  // node 5 isolated
  const DistanceMatrix d = all_pairs_shortest_paths(g);
  const AffinityMatrix p = joint_p(d, 2.0);
  CHECK(p.degenerate_rows == 1);
  CHECK(p.p(0, 3) == 0.0);
  for (std::size_t j = 0; j < 6; ++j) CHECK(p.p(5, j) == 0.0);
  CHECK(std::abs(sum(p.p) - 1.0) <= 1e-9);
}

TEST_CASE("affinity invariants over random instances") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t b = 3 + rng() % 48;
    const double target = 2.0 + static_cast<double>(rng() % 100) / 100.0 * (static_cast<double>(b) - 4.0);
    const Matrix x = fixtures::random_matrix(b, 3, rng());
    const AffinityMatrix p = joint_p(pairwise_sq_euclidean(x), std::max(2.0, target));
    CHECK(std::abs(sum(p.p) - 1.0) <= 1e-9);
    for (std::size_t i = 0; i < b; ++i) {
      CHECK(p.p(i, i) == 0.0);
      for (std::size_t j = 0; j < b; ++j) {
        CHECK(p.p(i, j) >= 0.0);
        CHECK(p.p(i, j) == p.p(j, i));
      }
    }
    const MapAffinity q = studentt_q(fixtures::random_matrix(b, 2, rng(), -5, 5));
    CHECK(std::abs(sum(q.q) - 1.0) <= 1e-9);
  }
}

TEST_CASE("joint_p is invariant to scaling the distances") {
  const Matrix x = fixtures::random_matrix(30, 5, 12);
  const DistanceMatrix d = pairwise_sq_euclidean(x);
  const AffinityMatrix base = joint_p(d, 8.0);
  for (double scale : {1e-3, 0.5, 7.0, 1e4}) {
    Matrix scaled = d.values();
    for (double& v : scaled.values()) v *= scale;
    const AffinityMatrix p = joint_p(DistanceMatrix(scaled), 8.0);
    for (std::size_t k = 0; k < base.p.size(); ++k)
      CHECK(std::abs(p.p.values()[k] - base.p.values()[k]) <= 1e-6);
  }
}

TEST_CASE("studentt_q") {
  Matrix two(2, 2);
  two(1, 0) = 4.0;
  CHECK(studentt_q(two).q(0, 1) == doctest::Approx(0.5).epsilon(1e-15));

  Matrix tri(3, 2);
  tri(1, 0) = 1.0;
  tri(2, 0) = 0.5, tri(2, 1) = std::sqrt(3.0) / 2;
  const MapAffinity q3 = studentt_q(tri);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      if (i != j) CHECK(q3.q(i, j) == doctest::Approx(1.0 / 6).epsilon(1e-12));

  const Matrix y = fixtures::random_matrix(25, 2, 13, -4, 4);
  const MapAffinity q = studentt_q(y);
  const Matrix ref = oracle::student_t_q(y);
  for (std::size_t k = 0; k < ref.size(); ++k) {
    CHECK(std::abs(q.q.values()[k] - ref.values()[k]) <= 1e-12);
    if (k % 26 != 0) CHECK(q.q.values()[k] > 0.0);
  }
  CHECK_THROWS_AS(studentt_q(Matrix(1, 2)), ArgumentError);
}

TEST_CASE("kl_loss_and_grad") {
  SUBCASE("matched two-point distributions") {
    Matrix two(2, 2);
    two(0, 1) = two(1, 0) = 3.0;
    const AffinityMatrix p = joint_p(DistanceMatrix(two), 2.0);
    Matrix y(2, 2);
    y(1, 0) = 2.0, y(1, 1) = -1.0;
    const KlResult r = kl_loss_and_grad(p, y);
    CHECK(std::abs(r.loss) <= 1e-15);
    for (double v : r.grad.values()) CHECK(std::abs(v) <= 1e-15);
  }

  SUBCASE("attraction when p exceeds q") {
    const Matrix x = fixtures::random_matrix(6, 3, 2);
    AffinityMatrix p = joint_p(pairwise_sq_euclidean(x), 2.0);
    Matrix y = fixtures::random_matrix(6, 2, 3, -0.1, 0.1);
    y(0, 0) = -50.0;
    y(1, 0) = 50.0;
    const KlResult r = kl_loss_and_grad(p, y);
    CHECK(r.grad(0, 0) < 0.0);  // descent moves point 0 toward +x
    CHECK(r.grad(1, 0) > 0.0);
  }

  SUBCASE("gradient matches central finite differences") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const Matrix x = fixtures::random_matrix(10, 4, seed);
      const AffinityMatrix p = joint_p(pairwise_sq_euclidean(x), 3.0);
      Matrix y = fixtures::random_matrix(10, 2, seed + 100, -2, 2);
      const KlResult r = kl_loss_and_grad(p, y);
      CHECK(std::abs(r.loss - oracle::kl(p.p, y)) <= 1e-12);
      CHECK(r.loss >= 0.0);
      const double h = 1e-6;
      for (std::size_t k = 0; k < y.size(); ++k) {
        const double saved = y.values()[k];
        y.values()[k] = saved + h;
        const double up = oracle::kl(p.p, y);
        y.values()[k] = saved - h;
        const double down = oracle::kl(p.p, y);
        y.values()[k] = saved;
        const double fd = (up - down) / (2 * h);
        const double a = r.grad.values()[k];
        CHECK(std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-6}) <= 1e-6);
      }
    }
  }

  CHECK_THROWS_AS(kl_loss_and_grad(joint_p(DistanceMatrix(Matrix(3, 3)), 2.0), Matrix(4, 2)),
                  ArgumentError);
}
