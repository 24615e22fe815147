#include "stackbench/forest.hpp"

#include <cmath>

#include "stackbench/errors.hpp"
#include "stackbench/split.hpp"

namespace stackbench {

ForestModel::ForestModel(std::vector<RegressionTree> trees, std::size_t feature_count)
    : trees_(std::move(trees)), p_(feature_count) {
  if (trees_.empty()) throw InvalidArgument("random_forest: no trees");
}

Probabilities ForestModel::predict_rows(const Matrix& x) const {
  Probabilities out(x.rows(), 0.0);
  const double scale = 1.0 / static_cast<double>(trees_.size());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto row = x.row(i);
    double s = 0.0;
    for (const auto& t : trees_) s += t.predict(row);
    out[i] = s * scale;
  }
  return out;
}

nlohmann::json ForestModel::parameters() const {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : trees_) trees.push_back(t.to_json());
  return {{"trees", trees}};
}

std::shared_ptr<const ForestModel> ForestModel::from_parameters(const nlohmann::json& params,
                                                                std::size_t feature_count) {
  std::vector<RegressionTree> trees;
  for (const auto& t : params.at("trees")) trees.push_back(RegressionTree::from_json(t, feature_count));
  return std::make_shared<ForestModel>(std::move(trees), feature_count);
}

std::shared_ptr<const ForestModel> fit_forest(const RandomForestSpec& spec, const Dataset& data,
                                              std::uint64_t seed) {
  const std::size_t p = data.cols();
  TreeGrowParams params;
  params.max_depth = spec.max_depth;
  params.min_leaf = spec.min_leaf;
  params.mtry = spec.mtry > 0 ? spec.mtry
                              : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(p))));

  const ColumnIndex columns(data.features());
  const auto targets = data.targets();
  const SeededRng master(seed);
  std::vector<RegressionTree> trees;
  trees.reserve(static_cast<std::size_t>(spec.n_trees));
  std::vector<std::uint32_t> rows;
  for (int t = 0; t < spec.n_trees; ++t) {
    // Each tree owns a stream keyed by its index, so trees could be grown in any order.
    SeededRng rng = master.child(static_cast<std::uint64_t>(t));
    const auto sample = subsample_rows(data.rows(), spec.bootstrap_fraction, rng);
    rows.assign(sample.begin(), sample.end());
    trees.push_back(grow_tree(columns, rows, targets, params, rng));
  }
  return std::make_shared<ForestModel>(std::move(trees), p);
}

RegressionTree fit_cart_tree(const Dataset& data, int min_leaf, int max_depth) {
  const ColumnIndex columns(data.features());
  const auto targets = data.targets();
  std::vector<std::uint32_t> rows(data.rows());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = static_cast<std::uint32_t>(i);
  TreeGrowParams params;
  params.min_leaf = min_leaf;
  params.max_depth = max_depth;
  SeededRng unused(0);
  return grow_tree(columns, rows, targets, params, unused);
}

}  // namespace stackbench
