#pragma once

#include <memory>
#include <span>
#include <vector>

#include "stackbench/dataset.hpp"
#include "stackbench/learner_spec.hpp"
#include "stackbench/model.hpp"

namespace stackbench {

/// max(0, x - knot) for direction +1, max(0, knot - x) for direction -1.
inline double hinge(double x, double knot, int direction) noexcept {
  const double v = direction > 0 ? x - knot : knot - x;
  return v > 0.0 ? v : 0.0;
}

struct HingeFactor {
  std::size_t feature = 0;
  double knot = 0.0;
  int direction = 1;
};

/// Product of hinge factors; the empty product is the intercept.
struct BasisTerm {
  std::vector<HingeFactor> factors;

  double evaluate(std::span<const double> row) const noexcept;
  std::size_t degree() const noexcept { return factors.size(); }
};

/// Generalized cross-validation criterion used by the backward pass:
/// (rss / n) / (1 - C / n)^2 with C = terms + penalty * (terms - 1) / 2.
double mars_gcv(double rss, std::size_t n, std::size_t terms, double penalty) noexcept;

class MarsModel final : public Model {
 public:
  MarsModel(std::vector<BasisTerm> terms, std::vector<double> coefficients,
            std::size_t feature_count, MarsLink link = MarsLink::logit);

  std::string_view family() const noexcept override { return "mars"; }
  std::size_t feature_count() const noexcept override { return p_; }
  /// sigmoid(raw) for the logit link, raw clipped to [0,1] for identity.
  Probabilities predict_rows(const Matrix& x) const override;
  nlohmann::json parameters() const override;
  static std::shared_ptr<const MarsModel> from_parameters(const nlohmann::json& params,
                                                          std::size_t feature_count);

  const std::vector<BasisTerm>& terms() const noexcept { return terms_; }
  const std::vector<double>& coefficients() const noexcept { return coef_; }
  MarsLink link() const noexcept { return link_; }
  /// Unclipped linear predictor.
  double raw(std::span<const double> row) const noexcept;

 private:
  std::vector<BasisTerm> terms_;
  std::vector<double> coef_;
  std::size_t p_;
  MarsLink link_;
};

/// Forward pass adds mirrored hinge pairs (knots at observed values) by
/// greatest residual-sum-of-squares reduction; backward pass drops terms one
/// at a time and keeps the subset with the lowest GCV. With the logit link the
/// surviving basis is refit by penalized IRLS logistic regression.
std::shared_ptr<const MarsModel> mars_fit(const Dataset& data, const MarsSpec& spec);

}  // namespace stackbench
