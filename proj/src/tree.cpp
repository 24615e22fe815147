#include "stackbench/tree.hpp"

#include <algorithm>
#include <numeric>

#include "stackbench/errors.hpp"

namespace stackbench {

RegressionTree::RegressionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw InvalidArgument("RegressionTree: no nodes");
}

double RegressionTree::predict(std::span<const double> row) const noexcept {
  std::size_t id = 0;
  while (!nodes_[id].is_leaf()) {
    const TreeNode& n = nodes_[id];
    id = static_cast<std::size_t>(row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left
                                                                                          : n.right);
  }
  return nodes_[id].value;
}

std::size_t RegressionTree::leaf_count() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

std::size_t RegressionTree::depth() const noexcept {
  std::vector<std::size_t> d(nodes_.size(), 0);
  std::size_t deepest = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    deepest = std::max(deepest, d[i]);
    if (!nodes_[i].is_leaf()) {
      d[static_cast<std::size_t>(nodes_[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes_[i].right)] = d[i] + 1;
    }
  }
  return deepest;
}

nlohmann::json RegressionTree::to_json() const {
  // Parallel arrays keep large forests compact.
  nlohmann::json feature = nlohmann::json::array(), threshold = nlohmann::json::array(),
                 left = nlohmann::json::array(), right = nlohmann::json::array(),
                 value = nlohmann::json::array();
  for (const auto& n : nodes_) {
    feature.push_back(n.feature);
    threshold.push_back(n.threshold);
    left.push_back(n.left);
    right.push_back(n.right);
    value.push_back(n.value);
  }
  return {{"feature", feature}, {"threshold", threshold}, {"left", left}, {"right", right},
          {"value", value}};
}

RegressionTree RegressionTree::from_json(const nlohmann::json& doc, std::size_t feature_count) {
  const auto& f = doc.at("feature");
  const std::size_t n = f.size();
  std::vector<TreeNode> nodes(n);
  for (std::size_t i = 0; i < n; ++i) {
    TreeNode& node = nodes[i];
    node.feature = f[i].get<int>();
    node.threshold = doc.at("threshold")[i].get<double>();
    node.left = doc.at("left")[i].get<int>();
    node.right = doc.at("right")[i].get<int>();
    node.value = doc.at("value")[i].get<double>();
    if (!node.is_leaf()) {
      const auto ok = [n, i](int c) { return c > static_cast<int>(i) && c < static_cast<int>(n); };
      if (static_cast<std::size_t>(node.feature) >= feature_count || !ok(node.left) ||
          !ok(node.right)) {
        throw LoadError("tree node " + std::to_string(i) + " is malformed");
      }
    }
  }
  return RegressionTree(std::move(nodes));
}

ColumnIndex::ColumnIndex(const Matrix& x) : rows_(x.rows()) {
  columns_.resize(x.cols());
  order_.resize(x.cols());
  for (std::size_t f = 0; f < x.cols(); ++f) {
    columns_[f] = x.column(f);
    auto& ord = order_[f];
    ord.resize(rows_);
    std::iota(ord.begin(), ord.end(), std::uint32_t{0});
    const auto& col = columns_[f];
    std::stable_sort(ord.begin(), ord.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return col[a] < col[b]; });
  }
}

namespace {

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

class TreeGrower {
 public:
  TreeGrower(const ColumnIndex& columns, std::span<const std::uint32_t> rows,
             std::span<const double> targets, const TreeGrowParams& params, SeededRng& rng,
             const LeafValueFn& leaf_value)
      : cols_(columns),
        targets_(targets),
        params_(params),
        rng_(rng),
        leaf_value_(leaf_value),
        p_(columns.cols()),
        m_(rows.size()),
        sorted_(p_ * m_),
        go_left_(columns.rows(), 0),
        scratch_(m_) {
    std::vector<char> in_sample(columns.rows(), 0);
    for (auto r : rows) in_sample[r] = 1;
    for (std::size_t f = 0; f < p_; ++f) {
      std::uint32_t* out = sorted_.data() + f * m_;
      for (auto r : columns.order(f)) {
        if (in_sample[r]) *out++ = r;
      }
    }
    features_.resize(p_);
    std::iota(features_.begin(), features_.end(), 0);
    mtry_ = params.mtry <= 0 ? p_ : std::min<std::size_t>(p_, static_cast<std::size_t>(params.mtry));
  }

  RegressionTree grow() {
    if (m_ == 0) throw InvalidArgument("grow_tree: no rows");
    build(0, m_, 0);
    return RegressionTree(std::move(nodes_));
  }

 private:
  std::span<const std::uint32_t> segment(std::size_t f, std::size_t b, std::size_t e) const {
    return {sorted_.data() + f * m_ + b, e - b};
  }

  double leaf(std::size_t b, std::size_t e) const {
    const auto rows = segment(0, b, e);
    if (leaf_value_) return leaf_value_(rows);
    double s = 0.0;
    for (auto r : rows) s += targets_[r];
    return s / static_cast<double>(rows.size());
  }

  int build(std::size_t b, std::size_t e, int depth) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back({});
    const SplitChoice choice = best_split(b, e, depth);
    if (choice.feature < 0) {
      nodes_[static_cast<std::size_t>(id)].value = leaf(b, e);
      return id;
    }
    const std::size_t mid = partition(b, e, choice);
    const int left = build(b, mid, depth + 1);
    const int right = build(mid, e, depth + 1);
    TreeNode& node = nodes_[static_cast<std::size_t>(id)];
    node.feature = choice.feature;
    node.threshold = choice.threshold;
    node.left = left;
    node.right = right;
    return id;
  }

  SplitChoice best_split(std::size_t b, std::size_t e, int depth) {
    const std::size_t m = e - b;
    const auto min_leaf = static_cast<std::size_t>(std::max(1, params_.min_leaf));
    SplitChoice best;
    if (params_.max_depth > 0 && depth >= params_.max_depth) return best;
    if (m < 2 * min_leaf) return best;

    double sum = 0.0, sum_sq = 0.0;
    for (auto r : segment(0, b, e)) {
      sum += targets_[r];
      sum_sq += targets_[r] * targets_[r];
    }
    const double dm = static_cast<double>(m);
    const double sse = sum_sq - sum * sum / dm;
    if (!(sse > 1e-12 * (sum_sq + 1e-300))) return best;  // pure node
    best.gain = 1e-12 * sse;

    if (mtry_ < p_) {
      for (std::size_t i = 0; i < mtry_; ++i) {
        const auto j = i + static_cast<std::size_t>(rng_.below(p_ - i));
        std::swap(features_[i], features_[j]);
      }
    }
    const double base = sum * sum / dm;
    for (std::size_t fi = 0; fi < mtry_; ++fi) {
      const auto f = static_cast<std::size_t>(features_[fi]);
      const auto rows = segment(f, b, e);
      const auto col = cols_.column(f);
      double left_sum = 0.0;
      for (std::size_t i = 0; i + min_leaf < m; ++i) {
        left_sum += targets_[rows[i]];
        const std::size_t n_left = i + 1;
        if (n_left < min_leaf) continue;
        const double here = col[rows[i]];
        const double next = col[rows[i + 1]];
        if (here == next) continue;
        const double right_sum = sum - left_sum;
        const double gain = left_sum * left_sum / static_cast<double>(n_left) +
                            right_sum * right_sum / static_cast<double>(m - n_left) - base;
        if (gain > best.gain) {
          double cut = here + 0.5 * (next - here);
          if (!(cut < next)) cut = here;
          best = {static_cast<int>(f), cut, gain};
        }
      }
    }
    return best;
  }

  std::size_t partition(std::size_t b, std::size_t e, const SplitChoice& choice) {
    const auto col = cols_.column(static_cast<std::size_t>(choice.feature));
    std::size_t n_left = 0;
    for (auto r : segment(0, b, e)) {
      go_left_[r] = col[r] <= choice.threshold;
      n_left += go_left_[r];
    }
    for (std::size_t f = 0; f < p_; ++f) {
      std::uint32_t* base = sorted_.data() + f * m_;
      std::size_t l = b, rcount = 0;
      for (std::size_t i = b; i < e; ++i) {
        const std::uint32_t r = base[i];
        if (go_left_[r]) {
          base[l++] = r;
        } else {
          scratch_[rcount++] = r;
        }
      }
      std::copy_n(scratch_.begin(), rcount, base + l);
    }
    return b + n_left;
  }

  const ColumnIndex& cols_;
  std::span<const double> targets_;
  const TreeGrowParams& params_;
  SeededRng& rng_;
  const LeafValueFn& leaf_value_;
  std::size_t p_;
  std::size_t m_;
  std::size_t mtry_ = 0;
  std::vector<std::uint32_t> sorted_;
  std::vector<char> go_left_;
  std::vector<std::uint32_t> scratch_;
  std::vector<int> features_;
  std::vector<TreeNode> nodes_;
};

}  // namespace

RegressionTree grow_tree(const ColumnIndex& columns, std::span<const std::uint32_t> rows,
                         std::span<const double> targets, const TreeGrowParams& params,
                         SeededRng& rng, const LeafValueFn& leaf_value) {
  if (targets.size() != columns.rows()) throw InvalidArgument("grow_tree: target length mismatch");
  return TreeGrower(columns, rows, targets, params, rng, leaf_value).grow();
}

}  // namespace stackbench
