#include "stackbench/nnls.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

#include "stackbench/errors.hpp"
#include "stackbench/simd.hpp"

namespace stackbench {
namespace {

constexpr double kKktTolerance = 1e-10;

// Minimizes w'Gw - 2c'w over {w_P : sum = 1} on the passive set P via the
// bordered KKT system. Rank-deficient G (duplicate columns) is handled by a
// complete orthogonal decomposition, which returns the minimum-norm solution.
Eigen::VectorXd solve_equality(const Eigen::MatrixXd& g, const Eigen::VectorXd& c,
                               const std::vector<Eigen::Index>& passive) {
  const auto k = static_cast<Eigen::Index>(passive.size());
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(k + 1, k + 1);
  Eigen::VectorXd rhs(k + 1);
  for (Eigen::Index a = 0; a < k; ++a) {
    for (Eigen::Index b = 0; b < k; ++b) kkt(a, b) = g(passive[static_cast<std::size_t>(a)], passive[static_cast<std::size_t>(b)]);
    kkt(a, k) = 1.0;
    kkt(k, a) = 1.0;
    rhs(a) = c(passive[static_cast<std::size_t>(a)]);
  }
  rhs(k) = 1.0;
  return kkt.completeOrthogonalDecomposition().solve(rhs).head(k);
}

}  // namespace

double combination_rss(const Matrix& z, std::span<const double> y, std::span<const double> w) {
  if (z.rows() != y.size() || z.cols() != w.size()) throw InvalidArgument("combination_rss: shape mismatch");
  double rss = 0.0;
  for (std::size_t i = 0; i < z.rows(); ++i) {
    const double r = y[i] - simd::dot(z.row(i), w);
    rss += r * r;
  }
  return rss;
}

SimplexFit simplex_least_squares(const Matrix& z, std::span<const double> y) {
  const std::size_t n = z.rows(), l = z.cols();
  if (l == 0) throw InvalidArgument("nnls: Z has no columns");
  if (n != y.size()) throw InvalidArgument("nnls: Z rows and y length differ");
  if (!z.all_finite() || !std::all_of(y.begin(), y.end(), [](double v) { return std::isfinite(v); })) {
    throw InvalidArgument("nnls: non-finite entries");
  }

  const auto L = static_cast<Eigen::Index>(l);
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(L, L);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(L);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = z.row(i);
    for (Eigen::Index a = 0; a < L; ++a) {
      const double za = row[static_cast<std::size_t>(a)];
      c(a) += za * y[i];
      for (Eigen::Index b = a; b < L; ++b) g(a, b) += za * row[static_cast<std::size_t>(b)];
    }
  }
  g.triangularView<Eigen::StrictlyLower>() = g.transpose();
  const double yy = simd::dot(y, y);
  const double scale = std::max({1.0, g.diagonal().maxCoeff(), std::abs(c.maxCoeff())});

  // Start at the best single column (a vertex of the simplex).
  Eigen::Index start = 0;
  double start_obj = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < L; ++j) {
    const double obj = g(j, j) - 2.0 * c(j);
    if (obj < start_obj) {
      start_obj = obj;
      start = j;
    }
  }
  Eigen::VectorXd w = Eigen::VectorXd::Zero(L);
  w(start) = 1.0;
  std::vector<bool> in_passive(l, false);
  in_passive[static_cast<std::size_t>(start)] = true;

  SimplexFit fit;
  const int max_iter = 30 * static_cast<int>(l) + 30;
  double kkt = 0.0;
  for (; fit.iterations < max_iter; ++fit.iterations) {
    // Multipliers: grad = Gw - c; nu = -grad_j on P; lambda_j = grad_j + nu off P.
    const Eigen::VectorXd grad = g * w - c;
    double nu = 0.0;
    std::size_t np = 0;
    for (std::size_t j = 0; j < l; ++j) {
      if (in_passive[j]) {
        nu -= grad(static_cast<Eigen::Index>(j));
        ++np;
      }
    }
    nu /= static_cast<double>(np);
    kkt = 0.0;
    Eigen::Index enter = -1;
    double most_negative = -kKktTolerance * scale;
    for (std::size_t j = 0; j < l; ++j) {
      const double lambda = grad(static_cast<Eigen::Index>(j)) + nu;
      if (in_passive[j]) {
        kkt = std::max(kkt, std::abs(lambda) / scale);
      } else {
        kkt = std::max(kkt, std::max(0.0, -lambda) / scale);
        if (lambda < most_negative) {
          most_negative = lambda;
          enter = static_cast<Eigen::Index>(j);
        }
      }
    }
    if (enter < 0 && kkt <= kKktTolerance) break;
    if (enter >= 0) in_passive[static_cast<std::size_t>(enter)] = true;

    // Inner loop: move toward the equality-constrained optimum on P, dropping
    // variables that would turn negative.
    for (int guard = 0; guard <= static_cast<int>(l); ++guard) {
      std::vector<Eigen::Index> passive;
      for (std::size_t j = 0; j < l; ++j) {
        if (in_passive[j]) passive.push_back(static_cast<Eigen::Index>(j));
      }
      const Eigen::VectorXd sub = solve_equality(g, c, passive);
      double alpha = 1.0;
      std::size_t blocking = l;
      for (std::size_t a = 0; a < passive.size(); ++a) {
        const double target = sub(static_cast<Eigen::Index>(a));
        if (target <= 0.0) {
          const double cur = w(passive[a]);
          const double t = cur / (cur - target);
          if (t < alpha) {
            alpha = t;
            blocking = a;
          }
        }
      }
      for (std::size_t a = 0; a < passive.size(); ++a) {
        const Eigen::Index j = passive[a];
        w(j) += alpha * (sub(static_cast<Eigen::Index>(a)) - w(j));
      }
      if (blocking == l) break;
      for (std::size_t a = 0; a < passive.size(); ++a) {
        const Eigen::Index j = passive[a];
        if (a == blocking || w(j) <= 1e-15) {
          w(j) = 0.0;
          in_passive[static_cast<std::size_t>(j)] = false;
        }
      }
      // Renormalize the survivors against drift.
      const double total = w.sum();
      if (total > 0.0) w /= total;
    }
  }

  for (Eigen::Index j = 0; j < L; ++j) w(j) = std::max(0.0, w(j));
  const double total = w.sum();
  if (total > 0.0) {
    w /= total;
  } else {
    w.setConstant(1.0 / static_cast<double>(l));
  }
  fit.weights.assign(w.data(), w.data() + L);
  fit.rss = std::max(0.0, yy - 2.0 * c.dot(w) + w.dot(g * w));
  fit.kkt_residual = kkt;
  return fit;
}

MetaWeights nnls_solve(const Matrix& z, std::span<const double> y) {
  return {simplex_least_squares(z, y).weights};
}

}  // namespace stackbench
