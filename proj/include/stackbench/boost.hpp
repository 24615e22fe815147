#pragma once

#include <memory>
#include <vector>

#include "stackbench/dataset.hpp"
#include "stackbench/learner_spec.hpp"
#include "stackbench/model.hpp"
#include "stackbench/tree.hpp"

namespace stackbench {

/// Componentwise linear base: intercept + slope * x[feature].
struct LinearTerm {
  std::size_t feature = 0;
  double intercept = 0.0;
  double slope = 0.0;
};

/// Mean logistic loss of scores F against 0/1 labels.
double logistic_loss(std::span<const double> scores, std::span<const int> labels);

/// Gradient boosting on the logistic loss. F_0 is the log-odds of the base
/// rate; round m adds step_m * h_m where h_m fits the negative gradient
/// y - sigmoid(F). step_m starts at the shrinkage and is halved until the
/// training loss does not increase (0 if no halving helps), which makes the
/// training loss non-increasing round by round.
class BoostModel final : public Model {
 public:
  BoostModel(BoostBase base, double f0, std::vector<RegressionTree> trees,
             std::vector<LinearTerm> linear, std::vector<double> steps,
             std::vector<double> training_loss, std::size_t feature_count);

  std::string_view family() const noexcept override { return "boost"; }
  std::size_t feature_count() const noexcept override { return p_; }
  Probabilities predict_rows(const Matrix& x) const override;
  nlohmann::json parameters() const override;
  static std::shared_ptr<const BoostModel> from_parameters(const nlohmann::json& params,
                                                           std::size_t feature_count);

  double initial_score() const noexcept { return f0_; }
  std::size_t rounds() const noexcept { return steps_.size(); }
  const std::vector<double>& steps() const noexcept { return steps_; }
  /// Training loss after 0, 1, ..., rounds() rounds.
  const std::vector<double>& training_loss() const noexcept { return training_loss_; }
  double score(std::span<const double> row) const noexcept;

 private:
  BoostBase base_;
  double f0_;
  std::vector<RegressionTree> trees_;
  std::vector<LinearTerm> linear_;
  std::vector<double> steps_;
  std::vector<double> training_loss_;
  std::size_t p_;
};

std::shared_ptr<const BoostModel> boost_fit(const Dataset& data, const BoostSpec& spec);

}  // namespace stackbench
