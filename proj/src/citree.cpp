#include "stackbench/citree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "stackbench/errors.hpp"
#include "stackbench/simd.hpp"

namespace stackbench {
namespace {

struct AssociationScan {
  std::vector<double> p_values;
  std::vector<double> abs_correlation;
};

AssociationScan scan_associations(const Matrix& x, std::span<const int> labels,
                                  std::span<const std::size_t> rows, int n_permutations,
                                  SeededRng& rng) {
  const std::size_t m = rows.size();
  const std::size_t p = x.cols();
  AssociationScan out{std::vector<double>(p, 1.0), std::vector<double>(p, 0.0)};
  if (m < 2) return out;

  std::size_t n_pos = 0;
  for (auto r : rows) n_pos += static_cast<std::size_t>(labels[r]);
  if (n_pos == 0 || n_pos == m) return out;

  // Row-major centered block; with 0/1 labels, sum_i xc_i (y_i - ybar) = sum over positives of xc_i.
  Matrix centered(m, p);
  std::vector<double> mean(p, 0.0);
  for (std::size_t i = 0; i < m; ++i) simd::axpy(1.0, x.row(rows[i]), mean);
  for (double& v : mean) v /= static_cast<double>(m);
  std::vector<double> ss(p, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    auto dst = centered.row(i);
    const auto src = x.row(rows[i]);
    for (std::size_t f = 0; f < p; ++f) {
      dst[f] = src[f] - mean[f];
      ss[f] += dst[f] * dst[f];
    }
  }

  // Sum over the smaller class; since centered columns sum to zero, the
  // absolute value is the same for either class.
  const bool use_pos = n_pos <= m - n_pos;
  const std::size_t k = use_pos ? n_pos : m - n_pos;
  std::vector<double> observed(p, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    if ((labels[rows[i]] == 1) == use_pos) simd::axpy(1.0, centered.row(i), observed);
  }

  const double n_neg = static_cast<double>(m - n_pos);
  const double y_ss = static_cast<double>(n_pos) * n_neg / static_cast<double>(m);
  std::vector<bool> constant(p);
  std::vector<double> tol(p);
  for (std::size_t f = 0; f < p; ++f) {
    double scale = 0.0;
    for (std::size_t i = 0; i < m; ++i) scale = std::max(scale, std::abs(x(rows[i], f)));
    constant[f] = ss[f] <= 1e-24 * std::max(1.0, scale * scale) * static_cast<double>(m);
    observed[f] = std::abs(observed[f]);
    tol[f] = 1e-10 * (std::sqrt(ss[f] * static_cast<double>(m)) + 1e-300);
    if (!constant[f]) out.abs_correlation[f] = observed[f] / std::sqrt(ss[f] * y_ss);
  }

  std::vector<std::size_t> perm(m);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::vector<std::size_t> exceed(p, 0);
  std::vector<double> acc(p);
  for (int b = 0; b < n_permutations; ++b) {
    // A uniform label permutation puts the smaller class on a uniform k-subset.
    for (std::size_t i = 0; i < k; ++i) {
      const auto j = i + static_cast<std::size_t>(rng.below(m - i));
      std::swap(perm[i], perm[j]);
    }
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t i = 0; i < k; ++i) simd::axpy(1.0, centered.row(perm[i]), acc);
    for (std::size_t f = 0; f < p; ++f) {
      if (std::abs(acc[f]) >= observed[f] - tol[f]) ++exceed[f];
    }
  }
  for (std::size_t f = 0; f < p; ++f) {
    out.p_values[f] = constant[f] ? 1.0
                                  : (1.0 + static_cast<double>(exceed[f])) /
                                        (1.0 + static_cast<double>(n_permutations));
  }
  return out;
}

}  // namespace

std::vector<double> permutation_pvalues(const Matrix& x, std::span<const int> labels,
                                        std::span<const std::size_t> rows, int n_permutations,
                                        SeededRng& rng) {
  if (n_permutations < 1) throw InvalidArgument("permutation_pvalues: need >= 1 permutation");
  return scan_associations(x, labels, rows, n_permutations, rng).p_values;
}

int citree_min_bucket(const CiTreeSpec& spec) noexcept {
  return std::max(1, static_cast<int>(std::lround(spec.min_node / 3.0)));
}

std::optional<CiSplit> citree_split(const Matrix& x, std::span<const int> labels,
                                    std::span<const std::size_t> rows, const CiTreeSpec& spec,
                                    SeededRng& rng) {
  const std::size_t m = rows.size();
  if (m < static_cast<std::size_t>(spec.min_node) || x.cols() == 0) return std::nullopt;

  const auto scan = scan_associations(x, labels, rows, spec.n_permutations, rng);
  const double n_tests = static_cast<double>(x.cols());
  std::size_t best = 0;
  for (std::size_t f = 1; f < x.cols(); ++f) {
    const double pf = scan.p_values[f], pb = scan.p_values[best];
    if (pf < pb || (pf == pb && scan.abs_correlation[f] > scan.abs_correlation[best])) best = f;
  }
  const double adjusted = std::min(1.0, scan.p_values[best] * n_tests);
  if (adjusted > spec.alpha) return std::nullopt;

  std::vector<std::size_t> order(rows.begin(), rows.end());
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return x(a, best) < x(b, best); });
  double total = 0.0;
  for (auto r : order) total += labels[r];
  const auto min_bucket = static_cast<std::size_t>(citree_min_bucket(spec));
  const double dm = static_cast<double>(m);
  double best_stat = -1.0, best_cut = 0.0;
  double left = 0.0;
  for (std::size_t i = 0; i + 1 < m; ++i) {
    left += labels[order[i]];
    const std::size_t nl = i + 1, nr = m - nl;
    const double here = x(order[i], best), next = x(order[i + 1], best);
    if (nl < min_bucket || nr < min_bucket || here == next) continue;
    const double diff = left / static_cast<double>(nl) - (total - left) / static_cast<double>(nr);
    const double stat = static_cast<double>(nl) * static_cast<double>(nr) / dm * diff * diff;
    if (stat > best_stat) {
      best_stat = stat;
      best_cut = here + 0.5 * (next - here);
      if (!(best_cut < next)) best_cut = here;
    }
  }
  if (best_stat < 0.0) return std::nullopt;
  return CiSplit{best, best_cut, adjusted};
}

CiTreeModel::CiTreeModel(RegressionTree tree, std::size_t feature_count)
    : tree_(std::move(tree)), p_(feature_count) {}

Probabilities CiTreeModel::predict_rows(const Matrix& x) const {
  Probabilities out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) out[i] = tree_.predict(x.row(i));
  return out;
}

nlohmann::json CiTreeModel::parameters() const { return {{"tree", tree_.to_json()}}; }

std::shared_ptr<const CiTreeModel> CiTreeModel::from_parameters(const nlohmann::json& params,
                                                                std::size_t feature_count) {
  return std::make_shared<CiTreeModel>(RegressionTree::from_json(params.at("tree"), feature_count),
                                       feature_count);
}

namespace {

class CiTreeGrower {
 public:
  CiTreeGrower(const Dataset& data, const CiTreeSpec& spec, std::uint64_t seed)
      : data_(data), spec_(spec), master_(seed) {}

  RegressionTree grow() {
    std::vector<std::size_t> rows(data_.rows());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    build(rows);
    return RegressionTree(std::move(nodes_));
  }

 private:
  int build(const std::vector<std::size_t>& rows) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back({});
    SeededRng rng = master_.child(static_cast<std::uint64_t>(id));
    const auto split = citree_split(data_.features(), data_.labels(), rows, spec_, rng);
    if (!split) {
      double s = 0.0;
      for (auto r : rows) s += data_.labels()[r];
      nodes_[static_cast<std::size_t>(id)].value = s / static_cast<double>(rows.size());
      return id;
    }
    std::vector<std::size_t> left, right;
    for (auto r : rows) {
      (data_.features()(r, split->feature) <= split->cut ? left : right).push_back(r);
    }
    const int l = build(left);
    const int r = build(right);
    TreeNode& node = nodes_[static_cast<std::size_t>(id)];
    node.feature = static_cast<int>(split->feature);
    node.threshold = split->cut;
    node.left = l;
    node.right = r;
    return id;
  }

  const Dataset& data_;
  const CiTreeSpec& spec_;
  SeededRng master_;
  std::vector<TreeNode> nodes_;
};

}  // namespace

std::shared_ptr<const CiTreeModel> fit_citree(const CiTreeSpec& spec, const Dataset& data,
                                              std::uint64_t seed) {
  return std::make_shared<CiTreeModel>(CiTreeGrower(data, spec, seed).grow(), data.cols());
}

}  // namespace stackbench
