#include "stackbench/boost.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

#include "stackbench/errors.hpp"

namespace stackbench {
namespace {

constexpr int kTreeMinLeaf = 5;
constexpr double kMaxLeafValue = 10.0;
constexpr int kMaxHalvings = 40;

double softplus(double z) noexcept { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double sigmoid(double z) noexcept {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

double logistic_loss(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size() || scores.empty()) {
    throw InvalidArgument("logistic_loss: length mismatch or empty input");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) s += softplus(scores[i]) - labels[i] * scores[i];
  return s / static_cast<double>(scores.size());
}

BoostModel::BoostModel(BoostBase base, double f0, std::vector<RegressionTree> trees,
                       std::vector<LinearTerm> linear, std::vector<double> steps,
                       std::vector<double> training_loss, std::size_t feature_count)
    : base_(base),
      f0_(f0),
      trees_(std::move(trees)),
      linear_(std::move(linear)),
      steps_(std::move(steps)),
      training_loss_(std::move(training_loss)),
      p_(feature_count) {
  const std::size_t terms = base_ == BoostBase::tree ? trees_.size() : linear_.size();
  if (terms != steps_.size()) throw InvalidArgument("boost: step count does not match base learners");
}

double BoostModel::score(std::span<const double> row) const noexcept {
  double f = f0_;
  if (base_ == BoostBase::tree) {
    for (std::size_t m = 0; m < trees_.size(); ++m) f += steps_[m] * trees_[m].predict(row);
  } else {
    for (std::size_t m = 0; m < linear_.size(); ++m) {
      const auto& t = linear_[m];
      f += steps_[m] * (t.intercept + t.slope * row[t.feature]);
    }
  }
  return f;
}

Probabilities BoostModel::predict_rows(const Matrix& x) const {
  Probabilities out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) out[i] = sigmoid(score(x.row(i)));
  return out;
}

nlohmann::json BoostModel::parameters() const {
  nlohmann::json doc{{"base", base_ == BoostBase::tree ? "tree" : "linear"},
                     {"f0", f0_},
                     {"steps", steps_},
                     {"training_loss", training_loss_}};
  nlohmann::json learners = nlohmann::json::array();
  if (base_ == BoostBase::tree) {
    for (const auto& t : trees_) learners.push_back(t.to_json());
  } else {
    for (const auto& t : linear_) {
      learners.push_back({{"feature", t.feature}, {"intercept", t.intercept}, {"slope", t.slope}});
    }
  }
  doc["learners"] = learners;
  return doc;
}

std::shared_ptr<const BoostModel> BoostModel::from_parameters(const nlohmann::json& params,
                                                              std::size_t feature_count) {
  const auto base = params.at("base").get<std::string>() == "tree" ? BoostBase::tree : BoostBase::linear;
  std::vector<RegressionTree> trees;
  std::vector<LinearTerm> linear;
  for (const auto& l : params.at("learners")) {
    if (base == BoostBase::tree) {
      trees.push_back(RegressionTree::from_json(l, feature_count));
    } else {
      LinearTerm t{l.at("feature").get<std::size_t>(), l.at("intercept").get<double>(),
                   l.at("slope").get<double>()};
      if (t.feature >= feature_count) throw LoadError("boost: linear term feature out of range");
      linear.push_back(t);
    }
  }
  return std::make_shared<BoostModel>(base, params.at("f0").get<double>(), std::move(trees),
                                      std::move(linear), params.at("steps").get<std::vector<double>>(),
                                      params.at("training_loss").get<std::vector<double>>(),
                                      feature_count);
}

std::shared_ptr<const BoostModel> boost_fit(const Dataset& data, const BoostSpec& spec) {
  if (data.empty()) throw FitError("boost", "no training rows");
  if (!data.has_both_classes()) throw FitError("boost", "training labels contain a single class");

  const std::size_t n = data.rows();
  const auto& labels = data.labels();
  const double base_rate = static_cast<double>(data.count_positive()) / static_cast<double>(n);
  const double f0 = std::log(base_rate / (1.0 - base_rate));

  std::vector<double> scores(n, f0), trial(n), residual(n), hess(n), update(n);
  std::vector<double> history{logistic_loss(scores, labels)};
  std::vector<RegressionTree> trees;
  std::vector<LinearTerm> linear;
  std::vector<double> steps;

  std::optional<ColumnIndex> columns;
  std::vector<std::uint32_t> all_rows(n);
  std::iota(all_rows.begin(), all_rows.end(), std::uint32_t{0});
  std::vector<double> col_mean(data.cols()), col_ss(data.cols());
  if (spec.base == BoostBase::tree) {
    columns.emplace(data.features());
  } else {
    for (std::size_t j = 0; j < data.cols(); ++j) {
      const auto c = data.features().column(j);
      col_mean[j] = std::accumulate(c.begin(), c.end(), 0.0) / static_cast<double>(n);
      for (double v : c) col_ss[j] += (v - col_mean[j]) * (v - col_mean[j]);
    }
  }

  TreeGrowParams tree_params;
  tree_params.max_depth = spec.max_depth;
  tree_params.min_leaf = kTreeMinLeaf;
  SeededRng unused(0);  // mtry covers every feature, so the tree draws nothing

  for (int round = 0; round < spec.n_rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      const double p = sigmoid(scores[i]);
      residual[i] = labels[i] - p;
      hess[i] = p * (1.0 - p);
    }

    if (spec.base == BoostBase::tree) {
      // One Newton step per leaf: sum(residual) / sum(p(1-p)).
      const LeafValueFn newton = [&](std::span<const std::uint32_t> rows) {
        double g = 0.0, h = 0.0;
        for (auto r : rows) {
          g += residual[r];
          h += hess[r];
        }
        const double v = h > 1e-12 ? g / h : 0.0;
        return std::clamp(v, -kMaxLeafValue, kMaxLeafValue);
      };
      auto tree = grow_tree(*columns, all_rows, residual, tree_params, unused, newton);
      for (std::size_t i = 0; i < n; ++i) update[i] = tree.predict(data.features().row(i));
      trees.push_back(std::move(tree));
    } else {
      LinearTerm best;
      double best_reduction = -1.0;
      const double r_mean = std::accumulate(residual.begin(), residual.end(), 0.0) / static_cast<double>(n);
      for (std::size_t j = 0; j < data.cols(); ++j) {
        if (!(col_ss[j] > 0.0)) continue;
        double sxr = 0.0;
        for (std::size_t i = 0; i < n; ++i) sxr += (data.features()(i, j) - col_mean[j]) * residual[i];
        const double reduction = sxr * sxr / col_ss[j];
        if (reduction > best_reduction) {
          best_reduction = reduction;
          const double slope = sxr / col_ss[j];
          best = {j, r_mean - slope * col_mean[j], slope};
        }
      }
      if (best_reduction < 0.0) best = {0, r_mean, 0.0};
      for (std::size_t i = 0; i < n; ++i) {
        update[i] = best.intercept + best.slope * data.features()(i, best.feature);
      }
      linear.push_back(best);
    }

    // Backtrack from the shrinkage until the loss does not go up.
    double step = spec.shrinkage;
    double loss = history.back();
    bool accepted = false;
    for (int h = 0; h <= kMaxHalvings; ++h, step *= 0.5) {
      for (std::size_t i = 0; i < n; ++i) trial[i] = scores[i] + step * update[i];
      const double l = logistic_loss(trial, labels);
      if (l <= history.back()) {
        loss = l;
        accepted = true;
        break;
      }
    }
    if (accepted) {
      scores.swap(trial);
    } else {
      step = 0.0;
    }
    steps.push_back(step);
    history.push_back(loss);
  }
  return std::make_shared<BoostModel>(spec.base, f0, std::move(trees), std::move(linear),
                                      std::move(steps), std::move(history), data.cols());
}

}  // namespace stackbench
