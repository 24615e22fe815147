#include <doctest.h>

#include <cmath>
#include <limits>
#include <numeric>
#include <algorithm>

#include "stackbench/errors.hpp"
#include "stackbench/nnls.hpp"
#include "stackbench/rng.hpp"

using namespace stackbench;

namespace {

// Brute-force scan of the 3-simplex on a regular grid.
double grid_rss(const Matrix& z, const std::vector<double>& y, double step) {
  const int steps = static_cast<int>(std::lround(1.0 / step));
  double best = std::numeric_limits<double>::infinity();
  for (int a = 0; a <= steps; ++a) {
    for (int b = 0; a + b <= steps; ++b) {
      const std::vector<double> w{a * step, b * step, (steps - a - b) * step};
      best = std::min(best, combination_rss(z, y, w));
    }
  }
  return best;
}

}  // namespace

TEST_SUITE("ensembles") {

TEST_CASE("a column equal to the target takes all the weight") {
  SeededRng rng(1);
  Matrix z(20, 3);
  std::vector<double> y(20);
  for (std::size_t i = 0; i < 20; ++i) {
    y[i] = rng.uniform();
    z(i, 0) = rng.uniform();
    z(i, 1) = y[i];
    z(i, 2) = rng.uniform();
  }
  const auto w = nnls_solve(z, y).weights;
  CHECK(w[1] == doctest::Approx(1.0));
  CHECK(w[0] == doctest::Approx(0.0));
  CHECK(w[2] == doctest::Approx(0.0));
}

TEST_CASE("two-column closed form") {
  // y = 0.3 a + 0.7 b exactly with a, b linearly independent.
  Matrix z(4, 2);
  const double a[] = {1, 0, 2, 1}, b[] = {0, 1, 1, 3};
  std::vector<double> y(4);
  for (std::size_t i = 0; i < 4; ++i) {
    z(i, 0) = a[i];
    z(i, 1) = b[i];
    y[i] = 0.3 * a[i] + 0.7 * b[i];
  }
  const auto fit = simplex_least_squares(z, y);
  CHECK(fit.weights[0] == doctest::Approx(0.3));
  CHECK(fit.weights[1] == doctest::Approx(0.7));
  CHECK(fit.rss == doctest::Approx(0.0));
  CHECK(fit.kkt_residual < 1e-10);
}

TEST_CASE("solver beats the simplex grid and stays feasible") {
  SeededRng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix z(30, 3);
    std::vector<double> y(30);
    for (std::size_t i = 0; i < 30; ++i) {
      y[i] = rng.uniform() < 0.5 ? 0.0 : 1.0;
      for (auto& v : z.row(i)) v = std::clamp(y[i] + rng.normal() * (0.3 + 0.2 * trial / 20.0), 0.0, 1.0);
    }
    const auto w = nnls_solve(z, y).weights;
    double sum = 0.0;
    for (double v : w) {
      CHECK(v >= 0.0);
      sum += v;
    }
    CHECK(std::abs(sum - 1.0) <= 1e-12);
    CHECK(combination_rss(z, y, w) <= grid_rss(z, y, 0.01) + 1e-6);
  }
}

TEST_CASE("never worse than any single column") {
  SeededRng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t l = 2 + static_cast<std::size_t>(rng.below(6));
    Matrix z(40, l);
    std::vector<double> y(40);
    for (std::size_t i = 0; i < 40; ++i) {
      y[i] = rng.uniform() < 0.4 ? 1.0 : 0.0;
      for (auto& v : z.row(i)) v = rng.uniform();
    }
    const auto fit = simplex_least_squares(z, y);
    for (std::size_t j = 0; j < l; ++j) {
      std::vector<double> e(l, 0.0);
      e[j] = 1.0;
      CHECK(fit.rss <= combination_rss(z, y, e) + 1e-9);
    }
    CHECK(fit.kkt_residual < 1e-10);
  }
}

TEST_CASE("duplicate columns split without changing the fit") {
  SeededRng rng(4);
  Matrix z(25, 3);
  std::vector<double> y(25);
  for (std::size_t i = 0; i < 25; ++i) {
    y[i] = rng.uniform();
    z(i, 0) = rng.uniform();
    z(i, 1) = z(i, 0);
    z(i, 2) = rng.uniform();
  }
  const auto fit = simplex_least_squares(z, y);
  Matrix single(25, 2);
  for (std::size_t i = 0; i < 25; ++i) {
    single(i, 0) = z(i, 0);
    single(i, 1) = z(i, 2);
  }
  const auto ref = simplex_least_squares(single, y);
  CHECK(fit.rss == doctest::Approx(ref.rss).epsilon(1e-10));
  CHECK(fit.weights[0] + fit.weights[1] == doctest::Approx(ref.weights[0]).epsilon(1e-9));
}

TEST_CASE("bad input is rejected") {
  Matrix z(3, 2, 0.5);
  CHECK_THROWS_AS(nnls_solve(z, std::vector<double>{1.0, 0.0}), InvalidArgument);
  z(0, 0) = std::nan("");
  CHECK_THROWS_AS(nnls_solve(z, std::vector<double>{1.0, 0.0, 1.0}), InvalidArgument);
}

}
