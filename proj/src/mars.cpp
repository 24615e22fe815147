#include "stackbench/mars.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "stackbench/errors.hpp"
#include "stackbench/simd.hpp"

namespace stackbench {

double BasisTerm::evaluate(std::span<const double> row) const noexcept {
  double v = 1.0;
  for (const auto& f : factors) {
    v *= hinge(row[f.feature], f.knot, f.direction);
    if (v == 0.0) break;
  }
  return v;
}

double mars_gcv(double rss, std::size_t n, std::size_t terms, double penalty) noexcept {
  const double dn = static_cast<double>(n);
  const double c = static_cast<double>(terms) + penalty * (static_cast<double>(terms) - 1.0) / 2.0;
  if (c >= dn) return std::numeric_limits<double>::infinity();
  const double d = 1.0 - c / dn;
  return rss / dn / (d * d);
}

MarsModel::MarsModel(std::vector<BasisTerm> terms, std::vector<double> coefficients,
                     std::size_t feature_count, MarsLink link)
    : terms_(std::move(terms)), coef_(std::move(coefficients)), p_(feature_count), link_(link) {
  if (terms_.size() != coef_.size() || terms_.empty()) {
    throw InvalidArgument("mars: term and coefficient counts differ");
  }
}

double MarsModel::raw(std::span<const double> row) const noexcept {
  double s = 0.0;
  for (std::size_t j = 0; j < terms_.size(); ++j) s += coef_[j] * terms_[j].evaluate(row);
  return s;
}

Probabilities MarsModel::predict_rows(const Matrix& x) const {
  Probabilities out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double r = raw(x.row(i));
    out[i] = link_ == MarsLink::logit ? 1.0 / (1.0 + std::exp(-r)) : std::clamp(r, 0.0, 1.0);
  }
  return out;
}

nlohmann::json MarsModel::parameters() const {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& t : terms_) {
    nlohmann::json factors = nlohmann::json::array();
    for (const auto& f : t.factors) {
      factors.push_back({{"feature", f.feature}, {"knot", f.knot}, {"direction", f.direction}});
    }
    terms.push_back(factors);
  }
  return {{"terms", terms}, {"coefficients", coef_}, {"link", link_ == MarsLink::logit ? "logit" : "identity"}};
}

std::shared_ptr<const MarsModel> MarsModel::from_parameters(const nlohmann::json& params,
                                                            std::size_t feature_count) {
  std::vector<BasisTerm> terms;
  for (const auto& t : params.at("terms")) {
    BasisTerm term;
    for (const auto& f : t) {
      HingeFactor h{f.at("feature").get<std::size_t>(), f.at("knot").get<double>(),
                    f.at("direction").get<int>()};
      if (h.feature >= feature_count || (h.direction != 1 && h.direction != -1)) {
        throw LoadError("mars: malformed hinge factor");
      }
      term.factors.push_back(h);
    }
    terms.push_back(std::move(term));
  }
  const auto link = params.value("link", std::string("logit"));
  if (link != "logit" && link != "identity") throw LoadError("mars: unknown link '" + link + "'");
  return std::make_shared<MarsModel>(std::move(terms),
                                     params.at("coefficients").get<std::vector<double>>(),
                                     feature_count, link == "logit" ? MarsLink::logit : MarsLink::identity);
}

namespace {

// Rows that must lie strictly on each side of a knot.
constexpr std::size_t kEndspan = 5;
// Forward pass stops once a pair improves R^2 by less than this.
constexpr double kForwardThreshold = 1e-3;

class MarsForward {
 public:
  MarsForward(const Dataset& data, const MarsSpec& spec)
      : x_(data.features()), y_(data.targets()), spec_(spec), n_(data.rows()), p_(data.cols()) {
    order_.resize(p_);
    for (std::size_t f = 0; f < p_; ++f) {
      auto& ord = order_[f];
      ord.resize(n_);
      std::iota(ord.begin(), ord.end(), std::size_t{0});
      std::stable_sort(ord.begin(), ord.end(),
                       [&](std::size_t a, std::size_t b) { return x_(a, f) > x_(b, f); });
    }
    terms_.push_back(BasisTerm{});
    columns_.push_back(std::vector<double>(n_, 1.0));
    residual_ = y_;
    add_to_basis(columns_.back());
    const double mean = std::accumulate(y_.begin(), y_.end(), 0.0) / static_cast<double>(n_);
    for (double v : y_) tss_ += (v - mean) * (v - mean);
  }

  void run() {
    while (terms_.size() + 2 <= static_cast<std::size_t>(spec_.max_terms)) {
      const Candidate best = search();
      if (best.parent < 0 || !(best.gain > kForwardThreshold * tss_)) break;
      const BasisTerm parent = terms_[static_cast<std::size_t>(best.parent)];
      for (int dir : {1, -1}) {
        BasisTerm t = parent;
        t.factors.push_back({best.feature, best.knot, dir});
        std::vector<double> col(n_);
        for (std::size_t i = 0; i < n_; ++i) col[i] = t.evaluate(x_.row(i));
        terms_.push_back(std::move(t));
        add_to_basis(col);
        columns_.push_back(std::move(col));
      }
    }
  }

  const std::vector<BasisTerm>& terms() const noexcept { return terms_; }
  const std::vector<std::vector<double>>& columns() const noexcept { return columns_; }

 private:
  struct Candidate {
    int parent = -1;
    std::size_t feature = 0;
    double knot = 0.0;
    double gain = 0.0;
  };

  // Gram-Schmidt (applied twice) against the orthonormal basis; returns the
  // unit vector or an empty vector when v lies in the current span.
  std::vector<double> orthonormalize(std::vector<double> v) const {
    const double norm0 = simd::dot(v, v);
    if (!(norm0 > 0.0)) return {};
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& q : basis_) simd::axpy(-simd::dot(q, v), q, v);
    }
    const double norm = simd::dot(v, v);
    if (!(norm > 1e-10 * norm0)) return {};
    const double inv = 1.0 / std::sqrt(norm);
    for (double& e : v) e *= inv;
    return v;
  }

  void add_to_basis(const std::vector<double>& column) {
    auto q = orthonormalize(column);
    if (q.empty()) return;
    simd::axpy(-simd::dot(q, residual_), q, residual_);
    basis_.push_back(std::move(q));
  }

  Candidate search() const {
    Candidate best;
    const std::size_t k_basis = basis_.size();
    std::vector<double> s_qbx(k_basis + 1), s_qb(k_basis + 1);
    std::vector<std::size_t> live;
    live.reserve(n_);
    for (std::size_t m = 0; m < terms_.size(); ++m) {
      const BasisTerm& parent = terms_[m];
      if (parent.degree() >= static_cast<std::size_t>(spec_.max_degree)) continue;
      const auto& b = columns_[m];
      for (std::size_t v = 0; v < p_; ++v) {
        if (std::any_of(parent.factors.begin(), parent.factors.end(),
                        [v](const HingeFactor& f) { return f.feature == v; })) {
          continue;
        }
        live.clear();
        for (auto i : order_[v]) {
          if (b[i] > 0.0) live.push_back(i);
        }
        if (live.size() < 2 * kEndspan + 1) continue;

        // span{B, B(x-t)+, B(t-x)+} = span{B, Bx, B(x-t)+}: score the linear
        // part once, then sweep knots for the hinge part.
        std::vector<double> u(n_);
        for (std::size_t i = 0; i < n_; ++i) u[i] = b[i] * x_(i, v);
        const auto uq = orthonormalize(std::move(u));
        double linear_gain = 0.0;
        std::vector<double> r = residual_;
        if (!uq.empty()) {
          const double ru = simd::dot(r, uq);
          linear_gain = ru * ru;
          simd::axpy(-ru, uq, r);
        }
        const std::size_t kq = k_basis + (uq.empty() ? 0 : 1);
        const auto qcol = [&](std::size_t j) -> const std::vector<double>& {
          return j < k_basis ? basis_[j] : uq;
        };

        std::fill(s_qbx.begin(), s_qbx.end(), 0.0);
        std::fill(s_qb.begin(), s_qb.end(), 0.0);
        double s_rbx = 0.0, s_rb = 0.0, s_bbxx = 0.0, s_bbx = 0.0, s_bb = 0.0;
        std::size_t above = 0;
        for (std::size_t pos = 0; pos < live.size();) {
          const double t = x_(live[pos], v);
          std::size_t end = pos;
          while (end < live.size() && x_(live[end], v) == t) ++end;
          const std::size_t below = live.size() - end;
          if (above >= kEndspan && below >= kEndspan) {
            const double cc = s_bbxx - 2.0 * t * s_bbx + t * t * s_bb;
            double proj = 0.0;
            for (std::size_t j = 0; j < kq; ++j) {
              const double qc = s_qbx[j] - t * s_qb[j];
              proj += qc * qc;
            }
            const double den = cc - proj;
            if (cc > 0.0 && den > 1e-8 * cc) {
              const double rc = s_rbx - t * s_rb;
              const double gain = linear_gain + rc * rc / den;
              if (gain > best.gain) best = {static_cast<int>(m), v, t, gain};
            }
          }
          for (std::size_t q = pos; q < end; ++q) {
            const std::size_t i = live[q];
            const double bi = b[i], xi = x_(i, v), bx = bi * xi;
            for (std::size_t j = 0; j < kq; ++j) {
              const double qi = qcol(j)[i];
              s_qbx[j] += qi * bx;
              s_qb[j] += qi * bi;
            }
            s_rbx += r[i] * bx;
            s_rb += r[i] * bi;
            s_bbxx += bx * bx;
            s_bbx += bi * bx;
            s_bb += bi * bi;
          }
          above += end - pos;
          pos = end;
        }
      }
    }
    return best;
  }

  const Matrix& x_;
  std::vector<double> y_;
  const MarsSpec& spec_;
  std::size_t n_;
  std::size_t p_;
  double tss_ = 0.0;
  std::vector<std::vector<std::size_t>> order_;  // descending x per feature
  std::vector<BasisTerm> terms_;
  std::vector<std::vector<double>> columns_;
  std::vector<std::vector<double>> basis_;  // orthonormal span of columns_
  std::vector<double> residual_;
};

struct SubsetFit {
  std::vector<double> coef;
  double rss = 0.0;
};

class GramSolver {
 public:
  GramSolver(const std::vector<std::vector<double>>& columns, std::span<const double> y) {
    const std::size_t m = columns.size();
    gram_.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    xty_.resize(static_cast<Eigen::Index>(m));
    for (std::size_t a = 0; a < m; ++a) {
      xty_(static_cast<Eigen::Index>(a)) = simd::dot(columns[a], y);
      for (std::size_t b = a; b < m; ++b) {
        const double g = simd::dot(columns[a], columns[b]);
        gram_(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = g;
        gram_(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = g;
      }
    }
    yy_ = simd::dot(y, y);
    ridge_ = 1e-10 * std::max(1.0, gram_.diagonal().maxCoeff());
  }

  SubsetFit solve(std::span<const std::size_t> subset) const {
    const auto k = static_cast<Eigen::Index>(subset.size());
    Eigen::MatrixXd g(k, k);
    Eigen::VectorXd c(k);
    for (Eigen::Index a = 0; a < k; ++a) {
      const auto ia = static_cast<Eigen::Index>(subset[static_cast<std::size_t>(a)]);
      c(a) = xty_(ia);
      for (Eigen::Index b = 0; b < k; ++b) {
        g(a, b) = gram_(ia, static_cast<Eigen::Index>(subset[static_cast<std::size_t>(b)]));
      }
    }
    Eigen::MatrixXd reg = g;
    reg.diagonal().array() += ridge_;
    const Eigen::VectorXd w = reg.ldlt().solve(c);
    SubsetFit fit;
    fit.coef.assign(w.data(), w.data() + k);
    fit.rss = std::max(0.0, yy_ - 2.0 * w.dot(c) + w.dot(g * w));
    return fit;
  }

 private:
  Eigen::MatrixXd gram_;
  Eigen::VectorXd xty_;
  double yy_ = 0.0;
  double ridge_ = 0.0;
};

// Newton-Raphson logistic regression on the selected columns; a small ridge
// on the non-intercept terms keeps separable data finite.
std::vector<double> logistic_refit(const std::vector<std::vector<double>>& columns,
                                   std::span<const std::size_t> subset, std::span<const double> y,
                                   std::vector<double> start) {
  const auto n = static_cast<Eigen::Index>(y.size());
  const auto k = static_cast<Eigen::Index>(subset.size());
  Eigen::MatrixXd a(n, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const auto& col = columns[subset[static_cast<std::size_t>(j)]];
    for (Eigen::Index i = 0; i < n; ++i) a(i, j) = col[static_cast<std::size_t>(i)];
  }
  const Eigen::Map<const Eigen::VectorXd> t(y.data(), n);
  constexpr double kRidge = 1e-4;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(k);
  // Start from the least-squares fit mapped to the logit scale around 0.5.
  for (Eigen::Index j = 0; j < k; ++j) beta(j) = 4.0 * start[static_cast<std::size_t>(j)];
  beta(0) -= 2.0;
  const auto objective = [&](const Eigen::VectorXd& b) {
    const Eigen::VectorXd eta = a * b;
    double loss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double e = eta(i);
      loss += (e > 0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e))) - t(i) * e;
    }
    return loss + 0.5 * kRidge * b.tail(k - 1).squaredNorm();
  };
  double current = objective(beta);
  for (int iter = 0; iter < 50; ++iter) {
    const Eigen::VectorXd eta = a * beta;
    Eigen::VectorXd p(n), w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      p(i) = 1.0 / (1.0 + std::exp(-eta(i)));
      w(i) = std::max(p(i) * (1.0 - p(i)), 1e-10);
    }
    Eigen::VectorXd grad = a.transpose() * (p - t);
    Eigen::MatrixXd hess = a.transpose() * w.asDiagonal() * a;
    for (Eigen::Index j = 1; j < k; ++j) {
      grad(j) += kRidge * beta(j);
      hess(j, j) += kRidge;
    }
    hess.diagonal().array() += 1e-12;
    const Eigen::VectorXd step = hess.ldlt().solve(grad);
    double scale = 1.0;
    Eigen::VectorXd next = beta - step;
    double value = objective(next);
    for (int h = 0; h < 30 && !(value <= current); ++h) {
      scale *= 0.5;
      next = beta - scale * step;
      value = objective(next);
    }
    if (!(value <= current) || !next.allFinite()) break;
    const bool done = (current - value) < 1e-12 * (1.0 + std::abs(current));
    beta = next;
    current = value;
    if (done) break;
  }
  return {beta.data(), beta.data() + k};
}

}  // namespace

std::shared_ptr<const MarsModel> mars_fit(const Dataset& data, const MarsSpec& spec) {
  if (data.empty()) throw FitError("mars", "no training rows");
  MarsForward forward(data, spec);
  forward.run();

  const auto y = data.targets();
  const GramSolver solver(forward.columns(), y);
  std::vector<std::size_t> current(forward.terms().size());
  std::iota(current.begin(), current.end(), std::size_t{0});

  std::vector<std::size_t> best_subset = current;
  double best_gcv = mars_gcv(solver.solve(current).rss, data.rows(), current.size(), spec.gcv_penalty);
  while (current.size() > 1) {
    std::size_t drop = 0;
    double drop_rss = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> trial;
    for (std::size_t j = 1; j < current.size(); ++j) {  // the intercept stays
      trial = current;
      trial.erase(trial.begin() + static_cast<std::ptrdiff_t>(j));
      const double rss = solver.solve(trial).rss;
      if (rss < drop_rss) {
        drop_rss = rss;
        drop = j;
      }
    }
    current.erase(current.begin() + static_cast<std::ptrdiff_t>(drop));
    const double gcv = mars_gcv(drop_rss, data.rows(), current.size(), spec.gcv_penalty);
    if (gcv < best_gcv) {
      best_gcv = gcv;
      best_subset = current;
    }
  }

  auto coef = solver.solve(best_subset).coef;
  if (spec.link == MarsLink::logit) coef = logistic_refit(forward.columns(), best_subset, y, coef);
  std::vector<BasisTerm> terms;
  for (auto j : best_subset) terms.push_back(forward.terms()[j]);
  return std::make_shared<MarsModel>(std::move(terms), std::move(coef), data.cols(), spec.link);
}

}  // namespace stackbench
