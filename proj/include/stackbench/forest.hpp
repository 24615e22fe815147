#pragma once

#include <memory>
#include <vector>

#include "stackbench/dataset.hpp"
#include "stackbench/learner_spec.hpp"
#include "stackbench/model.hpp"
#include "stackbench/tree.hpp"

namespace stackbench {

/// Random forest of Gini trees; predicts the mean of leaf class proportions.
class ForestModel final : public Model {
 public:
  ForestModel(std::vector<RegressionTree> trees, std::size_t feature_count);

  std::string_view family() const noexcept override { return "random_forest"; }
  std::size_t feature_count() const noexcept override { return p_; }
  Probabilities predict_rows(const Matrix& x) const override;
  nlohmann::json parameters() const override;
  static std::shared_ptr<const ForestModel> from_parameters(const nlohmann::json& params,
                                                            std::size_t feature_count);

  const std::vector<RegressionTree>& trees() const noexcept { return trees_; }

 private:
  std::vector<RegressionTree> trees_;
  std::size_t p_;
};

std::shared_ptr<const ForestModel> fit_forest(const RandomForestSpec& spec, const Dataset& data,
                                              std::uint64_t seed);

/// A single unpruned classification tree on every row and every feature.
RegressionTree fit_cart_tree(const Dataset& data, int min_leaf, int max_depth = 0);

}  // namespace stackbench
