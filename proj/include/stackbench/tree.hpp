#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <json.hpp>

#include "stackbench/matrix.hpp"
#include "stackbench/rng.hpp"

namespace stackbench {

/// One node of a binary tree; rows with x[feature] <= threshold go left.
struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;

  bool is_leaf() const noexcept { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

/// Flat tree with node 0 as root. Used by forests, boosting and ctree.
class RegressionTree {
 public:
  RegressionTree() = default;
  explicit RegressionTree(std::vector<TreeNode> nodes);

  double predict(std::span<const double> row) const noexcept;
  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
  std::size_t leaf_count() const noexcept;
  std::size_t depth() const noexcept;

  nlohmann::json to_json() const;
  static RegressionTree from_json(const nlohmann::json& doc, std::size_t feature_count);

  friend bool operator==(const RegressionTree&, const RegressionTree&) = default;

 private:
  std::vector<TreeNode> nodes_;
};

/// Column-major copy of a feature matrix plus each column's row order.
/// Built once and shared by every tree grown on the same rows.
class ColumnIndex {
 public:
  explicit ColumnIndex(const Matrix& x);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return columns_.size(); }
  std::span<const double> column(std::size_t f) const noexcept { return columns_[f]; }
  std::span<const std::uint32_t> order(std::size_t f) const noexcept { return order_[f]; }

 private:
  std::size_t rows_ = 0;
  std::vector<std::vector<double>> columns_;
  std::vector<std::vector<std::uint32_t>> order_;
};

struct TreeGrowParams {
  int max_depth = 0;  // 0 is unlimited
  int min_leaf = 1;
  int mtry = 0;       // features tried per node; 0 or >= p tries all, in column order
};

/// Leaf value from the rows that reach the leaf; defaults to their mean target.
using LeafValueFn = std::function<double(std::span<const std::uint32_t> rows)>;

/// Greedy least-squares tree on `targets` over the given distinct rows.
/// For 0/1 targets the squared-error gain is exactly twice the weighted Gini
/// decrease, so the same routine grows classification trees. Ties between
/// candidate splits keep the first found (feature order, then ascending cut).
RegressionTree grow_tree(const ColumnIndex& columns, std::span<const std::uint32_t> rows,
                         std::span<const double> targets, const TreeGrowParams& params,
                         SeededRng& rng, const LeafValueFn& leaf_value = {});

}  // namespace stackbench
