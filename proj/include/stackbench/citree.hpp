#pragma once

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "stackbench/dataset.hpp"
#include "stackbench/learner_spec.hpp"
#include "stackbench/model.hpp"
#include "stackbench/rng.hpp"
#include "stackbench/tree.hpp"

namespace stackbench {

/// Monte-Carlo permutation p-values, one per feature, for the absolute Pearson
/// correlation between the feature and the labels over `rows`:
/// p = (1 + #{permuted stat >= observed}) / (1 + n_permutations).
/// Constant features get p = 1. All features share the same label permutations.
std::vector<double> permutation_pvalues(const Matrix& x, std::span<const int> labels,
                                        std::span<const std::size_t> rows, int n_permutations,
                                        SeededRng& rng);

struct CiSplit {
  std::size_t feature = 0;
  double cut = 0.0;          // x <= cut goes left
  double adjusted_p = 1.0;   // Bonferroni over all features
};

/// Node split of a conditional inference tree: the feature with the smallest
/// Bonferroni-adjusted p-value, cut where the two-sample statistic
/// (n_l n_r / n)(mean_l - mean_r)^2 is largest. No split when the smallest
/// adjusted p-value exceeds alpha or the node is below min_node rows.
std::optional<CiSplit> citree_split(const Matrix& x, std::span<const int> labels,
                                    std::span<const std::size_t> rows, const CiTreeSpec& spec,
                                    SeededRng& rng);

/// Smallest child a ctree split may create.
int citree_min_bucket(const CiTreeSpec& spec) noexcept;

class CiTreeModel final : public Model {
 public:
  CiTreeModel(RegressionTree tree, std::size_t feature_count);

  std::string_view family() const noexcept override { return "ctree"; }
  std::size_t feature_count() const noexcept override { return p_; }
  Probabilities predict_rows(const Matrix& x) const override;
  nlohmann::json parameters() const override;
  static std::shared_ptr<const CiTreeModel> from_parameters(const nlohmann::json& params,
                                                            std::size_t feature_count);

  const RegressionTree& tree() const noexcept { return tree_; }

 private:
  RegressionTree tree_;
  std::size_t p_;
};

std::shared_ptr<const CiTreeModel> fit_citree(const CiTreeSpec& spec, const Dataset& data,
                                              std::uint64_t seed);

}  // namespace stackbench
