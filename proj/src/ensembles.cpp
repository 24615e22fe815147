#include "stackbench/ensembles.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <set>
#include <string>

#include "stackbench/errors.hpp"
#include "stackbench/learners.hpp"
#include "stackbench/rng.hpp"
#include "stackbench/split.hpp"

namespace stackbench {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double clip01(double v) { return std::isnan(v) ? 0.5 : std::clamp(v, 0.0, 1.0); }

double logit_clipped(double p) {
  constexpr double kEps = 1e-6;
  const double q = std::clamp(p, kEps, 1.0 - kEps);
  return std::log(q / (1.0 - q));
}

std::string meta_name(MetaLearner m) { return m == MetaLearner::nnls ? "nnls" : "logistic"; }

MetaLearner meta_from_name(const std::string& s) {
  if (s == "nnls") return MetaLearner::nnls;
  if (s == "logistic") return MetaLearner::logistic;
  throw InvalidSpec("superlearner: meta must be 'nnls' or 'logistic'");
}

void check_keys(const nlohmann::json& doc, const std::string& where, const std::set<std::string>& allowed) {
  for (const auto& [key, value] : doc.items()) {
    if (!allowed.contains(key)) throw InvalidSpec(where + ": unknown field '" + key + "'");
  }
}

Matrix layer_input(const Matrix& outputs, const Matrix& original, bool passthrough) {
  return passthrough ? outputs.hconcat(original) : outputs;
}

Dataset with_features(Matrix x, const Dataset& data) { return Dataset(std::move(x), data.labels()); }

}  // namespace

// ---------------------------------------------------------------- specs

void validate(const SuperlearnerSpec& spec) {
  if (spec.base_specs.empty()) throw InvalidSpec("superlearner: base_specs must be non-empty");
  if (spec.folds < 2) throw InvalidSpec("superlearner: folds must be >= 2");
  for (const auto& s : spec.base_specs) validate(s);
}

void validate(const CascadeSpec& spec) {
  if (spec.layers.empty()) throw InvalidSpec("cascade: layers must be non-empty");
  for (std::size_t l = 0; l < spec.layers.size(); ++l) {
    if (spec.layers[l].empty()) throw InvalidSpec("cascade: layer " + std::to_string(l + 1) + " is empty");
    for (const auto& m : spec.layers[l]) {
      if (!(m.bootstrap_fraction > 0.0 && m.bootstrap_fraction <= 1.0)) {
        throw InvalidSpec("cascade: bootstrap_fraction must be in (0,1]");
      }
      validate(m.spec);
    }
  }
  if (spec.layer_features == LayerFeatures::out_of_fold && spec.feature_folds < 2) {
    throw InvalidSpec("cascade: feature_folds must be >= 2");
  }
}

void validate(const AlgorithmSpec& spec) {
  std::visit([](const auto& s) { validate(s); }, spec);
}

std::string algorithm_family(const AlgorithmSpec& spec) {
  if (const auto* l = std::get_if<LearnerSpec>(&spec)) return std::string(family_name(*l));
  return std::holds_alternative<SuperlearnerSpec>(spec) ? "superlearner" : "cascade";
}

nlohmann::json to_json(const SuperlearnerSpec& spec) {
  nlohmann::json base = nlohmann::json::array();
  for (const auto& s : spec.base_specs) base.push_back(to_json(s));
  return {{"kind", "superlearner"}, {"base_learners", base}, {"folds", spec.folds}, {"meta", meta_name(spec.meta)}};
}

nlohmann::json to_json(const CascadeSpec& spec) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& layer : spec.layers) {
    nlohmann::json members = nlohmann::json::array();
    for (const auto& m : layer) {
      members.push_back({{"learner", to_json(m.spec)}, {"bootstrap_fraction", m.bootstrap_fraction}});
    }
    layers.push_back(members);
  }
  return {{"kind", "cascade"},
          {"layers", layers},
          {"passthrough", spec.passthrough},
          {"layer_features", spec.layer_features == LayerFeatures::in_sample ? "in_sample" : "out_of_fold"},
          {"feature_folds", spec.feature_folds}};
}

nlohmann::json to_json(const AlgorithmSpec& spec) {
  return std::visit([](const auto& s) { return to_json(s); }, spec);
}

AlgorithmSpec algorithm_spec_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw InvalidSpec("algorithm spec must be a JSON object");
  if (!doc.contains("kind")) return learner_spec_from_json(doc);
  AlgorithmSpec out;
  try {
    const auto kind = doc.at("kind").get<std::string>();
    if (kind == "superlearner") {
      check_keys(doc, kind, {"kind", "base_learners", "folds", "meta"});
      SuperlearnerSpec s;
      for (const auto& b : doc.at("base_learners")) s.base_specs.push_back(learner_spec_from_json(b));
      s.folds = doc.value("folds", s.folds);
      if (doc.contains("meta")) s.meta = meta_from_name(doc.at("meta").get<std::string>());
      out = s;
    } else if (kind == "cascade") {
      check_keys(doc, kind, {"kind", "layers", "passthrough", "layer_features", "feature_folds"});
      CascadeSpec s;
      for (const auto& layer : doc.at("layers")) {
        std::vector<CascadeMember> members;
        for (const auto& m : layer) {
          check_keys(m, "cascade member", {"learner", "bootstrap_fraction"});
          members.push_back({learner_spec_from_json(m.at("learner")), m.value("bootstrap_fraction", 1.0)});
        }
        s.layers.push_back(std::move(members));
      }
      s.passthrough = doc.value("passthrough", s.passthrough);
      if (doc.contains("layer_features")) {
        const auto f = doc.at("layer_features").get<std::string>();
        if (f == "in_sample") s.layer_features = LayerFeatures::in_sample;
        else if (f == "out_of_fold") s.layer_features = LayerFeatures::out_of_fold;
        else throw InvalidSpec("cascade: layer_features must be 'in_sample' or 'out_of_fold'");
      }
      s.feature_folds = doc.value("feature_folds", s.feature_folds);
      out = s;
    } else {
      throw InvalidSpec("unknown algorithm kind '" + kind + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidSpec(std::string("algorithm spec: ") + e.what());
  }
  validate(out);
  return out;
}

// ---------------------------------------------------------------- superlearner

SuperlearnerModel::SuperlearnerModel(MetaLearner meta, std::vector<FittedModel> members,
                                     std::vector<double> coefficients, std::size_t feature_count)
    : meta_(meta), members_(std::move(members)), coef_(std::move(coefficients)), p_(feature_count) {
  if (members_.empty()) throw InvalidArgument("superlearner: no members");
  const std::size_t expected = meta_ == MetaLearner::nnls ? members_.size() : members_.size() + 1;
  if (coef_.size() != expected) throw InvalidArgument("superlearner: coefficient count mismatch");
  for (const auto& m : members_) {
    if (m.feature_count() != p_) throw InvalidArgument("superlearner: member feature count mismatch");
  }
}

Matrix SuperlearnerModel::base_predictions(const Matrix& x) const {
  Matrix z(x.rows(), members_.size());
  for (std::size_t j = 0; j < members_.size(); ++j) {
    const auto p = members_[j].model().predict_rows(x);
    for (std::size_t i = 0; i < x.rows(); ++i) z(i, j) = p[i];
  }
  return z;
}

Probabilities SuperlearnerModel::combine(const Matrix& z) const {
  if (z.cols() != members_.size()) throw InvalidArgument("superlearner: prediction matrix width mismatch");
  Probabilities out(z.rows());
  for (std::size_t i = 0; i < z.rows(); ++i) {
    const auto row = z.row(i);
    if (meta_ == MetaLearner::nnls) {
      double s = 0.0;
      for (std::size_t j = 0; j < row.size(); ++j) s += coef_[j] * row[j];
      out[i] = clip01(s);
    } else {
      double eta = coef_[0];
      for (std::size_t j = 0; j < row.size(); ++j) eta += coef_[j + 1] * logit_clipped(row[j]);
      out[i] = clip01(1.0 / (1.0 + std::exp(-eta)));
    }
  }
  return out;
}

Probabilities SuperlearnerModel::predict_rows(const Matrix& x) const { return combine(base_predictions(x)); }

nlohmann::json SuperlearnerModel::parameters() const {
  nlohmann::json members = nlohmann::json::array();
  for (const auto& m : members_) members.push_back(save_model(m));
  return {{"meta", meta_name(meta_)}, {"coefficients", coef_}, {"members", members}};
}

std::shared_ptr<const SuperlearnerModel> SuperlearnerModel::from_parameters(const nlohmann::json& params,
                                                                            std::size_t feature_count) {
  std::vector<FittedModel> members;
  for (const auto& doc : params.at("members")) members.push_back(load_model(doc));
  try {
    return std::make_shared<const SuperlearnerModel>(meta_from_name(params.at("meta").get<std::string>()),
                                                     std::move(members),
                                                     params.at("coefficients").get<std::vector<double>>(),
                                                     feature_count);
  } catch (const InvalidArgument& e) {
    throw LoadError(std::string("model document: ") + e.what());
  }
}

std::uint64_t superlearner_member_seed(std::uint64_t seed, const LearnerSpec& spec, std::size_t fold) {
  if (fold == kRefitFold) return seed;
  return derive_seed(seed, fingerprint(spec), fold);
}

std::vector<double> fit_logistic_meta(const Matrix& z, std::span<const double> y) {
  const auto n = static_cast<Eigen::Index>(z.rows());
  const auto k = static_cast<Eigen::Index>(z.cols()) + 1;
  if (z.rows() != y.size() || z.rows() == 0) throw InvalidArgument("logistic meta: shape mismatch");
  Eigen::MatrixXd a(n, k);
  Eigen::VectorXd t(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    a(i, 0) = 1.0;
    for (Eigen::Index j = 1; j < k; ++j) {
      a(i, j) = logit_clipped(z(static_cast<std::size_t>(i), static_cast<std::size_t>(j - 1)));
    }
    t(i) = y[static_cast<std::size_t>(i)];
  }
  // Newton-Raphson with a small ridge on the slopes for separable data.
  constexpr double kRidge = 1e-6;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(k);
  for (int iter = 0; iter < 100; ++iter) {
    const Eigen::VectorXd eta = a * beta;
    Eigen::VectorXd p(n), w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      p(i) = 1.0 / (1.0 + std::exp(-eta(i)));
      w(i) = std::max(p(i) * (1.0 - p(i)), 1e-12);
    }
    Eigen::VectorXd grad = a.transpose() * (p - t);
    Eigen::MatrixXd hess = a.transpose() * w.asDiagonal() * a;
    for (Eigen::Index j = 1; j < k; ++j) {
      grad(j) += kRidge * beta(j);
      hess(j, j) += kRidge;
    }
    const Eigen::VectorXd step = hess.ldlt().solve(grad);
    beta -= step;
    if (!beta.allFinite()) throw FitError("superlearner", "logistic meta-learner diverged");
    if (step.lpNorm<Eigen::Infinity>() < 1e-10) break;
  }
  return {beta.data(), beta.data() + k};
}

SuperlearnerFit fit_superlearner_detailed(const SuperlearnerSpec& spec, const Dataset& data, std::uint64_t seed) {
  validate(spec);
  const auto start = Clock::now();
  const std::size_t n = data.rows();
  const auto folds = static_cast<std::size_t>(spec.folds);
  const std::size_t positives = data.count_positive();
  if (n < folds) throw FitError("superlearner", "fewer training rows than folds");
  if (std::min(positives, n - positives) < folds) {
    throw FitError("superlearner", "each class needs at least " + std::to_string(folds) +
                                       " rows so that every fold holds both classes");
  }

  SeededRng fold_rng = SeededRng(seed).child(hash_key("folds"));
  SuperlearnerFit out;
  out.fold_of_row = stratified_folds(data.labels(), folds, fold_rng);
  const std::size_t width = spec.base_specs.size();
  out.cv_predictions = Matrix(n, width);

  for (std::size_t v = 0; v < folds; ++v) {
    std::vector<std::size_t> train, held;
    for (std::size_t i = 0; i < n; ++i) (out.fold_of_row[i] == v ? held : train).push_back(i);
    const Dataset fold_train = data.subset(train);
    const Matrix fold_test = data.features().select_rows(held);
    // Equal specs get equal seeds, so their fits are shared.
    std::map<std::uint64_t, Probabilities> cache;
    for (std::size_t j = 0; j < width; ++j) {
      const auto& base = spec.base_specs[j];
      const auto key = fingerprint(base);
      auto it = cache.find(key);
      if (it == cache.end()) {
        const auto model = fit(base, fold_train, superlearner_member_seed(seed, base, v));
        it = cache.emplace(key, model.predict(fold_test)).first;
      }
      for (std::size_t r = 0; r < held.size(); ++r) out.cv_predictions(held[r], j) = it->second[r];
    }
  }

  const auto y = data.targets();
  std::vector<double> coef = spec.meta == MetaLearner::nnls ? nnls_solve(out.cv_predictions, y).weights
                                                            : fit_logistic_meta(out.cv_predictions, y);

  std::map<std::uint64_t, FittedModel> refits;
  std::vector<FittedModel> members;
  for (const auto& base : spec.base_specs) {
    const auto key = fingerprint(base);
    auto it = refits.find(key);
    if (it == refits.end()) {
      it = refits.emplace(key, fit(base, data, superlearner_member_seed(seed, base, kRefitFold))).first;
    }
    members.push_back(it->second);
  }
  auto model = std::make_shared<const SuperlearnerModel>(spec.meta, std::move(members), std::move(coef), data.cols());
  out.model = FittedModel(std::move(model), to_json(spec), seed, seconds_since(start));
  return out;
}

FittedModel fit_superlearner(const SuperlearnerSpec& spec, const Dataset& data, std::uint64_t seed) {
  return fit_superlearner_detailed(spec, data, seed).model;
}

// ---------------------------------------------------------------- cascade

CascadeModel::CascadeModel(std::vector<std::vector<FittedModel>> layers, bool passthrough,
                           std::size_t feature_count)
    : layers_(std::move(layers)), passthrough_(passthrough), p_(feature_count) {
  if (layers_.empty()) throw InvalidArgument("cascade: no layers");
  std::size_t input = p_;
  for (const auto& layer : layers_) {
    if (layer.empty()) throw InvalidArgument("cascade: empty layer");
    for (const auto& m : layer) {
      if (m.feature_count() != input) throw InvalidArgument("cascade: member input width mismatch");
    }
    input = layer.size() + (passthrough_ ? p_ : 0);
  }
}

std::vector<Matrix> CascadeModel::layer_outputs(const Matrix& x) const {
  std::vector<Matrix> outputs;
  Matrix input = x;
  for (const auto& layer : layers_) {
    Matrix out(x.rows(), layer.size());
    for (std::size_t j = 0; j < layer.size(); ++j) {
      const auto p = layer[j].model().predict_rows(input);
      for (std::size_t i = 0; i < x.rows(); ++i) out(i, j) = p[i];
    }
    input = layer_input(out, x, passthrough_);
    outputs.push_back(std::move(out));
  }
  return outputs;
}

Probabilities CascadeModel::predict_rows(const Matrix& x) const {
  const auto outputs = layer_outputs(x);
  const Matrix& last = outputs.back();
  Probabilities out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double s = 0.0;
    for (double v : last.row(i)) s += v;
    out[i] = clip01(s / static_cast<double>(last.cols()));
  }
  return out;
}

nlohmann::json CascadeModel::parameters() const {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& layer : layers_) {
    nlohmann::json members = nlohmann::json::array();
    for (const auto& m : layer) members.push_back(save_model(m));
    layers.push_back(members);
  }
  return {{"passthrough", passthrough_}, {"layers", layers}};
}

std::shared_ptr<const CascadeModel> CascadeModel::from_parameters(const nlohmann::json& params,
                                                                  std::size_t feature_count) {
  std::vector<std::vector<FittedModel>> layers;
  for (const auto& layer : params.at("layers")) {
    std::vector<FittedModel> members;
    for (const auto& doc : layer) members.push_back(load_model(doc));
    layers.push_back(std::move(members));
  }
  try {
    return std::make_shared<const CascadeModel>(std::move(layers), params.at("passthrough").get<bool>(),
                                                feature_count);
  } catch (const InvalidArgument& e) {
    throw LoadError(std::string("model document: ") + e.what());
  }
}

std::uint64_t cascade_member_seed(std::uint64_t seed, std::size_t layer, std::size_t index) {
  if (layer == 0 && index == 0) return seed;
  return derive_seed(seed, hash_key("cascade"), layer, index);
}

CascadeFit fit_cascade_detailed(const CascadeSpec& spec, const Dataset& data, std::uint64_t seed) {
  validate(spec);
  const auto start = Clock::now();
  const std::size_t n = data.rows();
  if (n == 0) throw FitError("cascade", "empty training data");

  CascadeFit out;
  std::vector<std::vector<FittedModel>> layers;
  Matrix input = data.features();
  for (std::size_t l = 0; l < spec.layers.size(); ++l) {
    const auto& members = spec.layers[l];
    const Dataset layer_data = with_features(input, data);
    Matrix outputs(n, members.size());
    std::vector<FittedModel> fitted;
    std::vector<std::vector<std::size_t>> rows_used;
    for (std::size_t j = 0; j < members.size(); ++j) {
      const auto member_seed = cascade_member_seed(seed, l, j);
      const SeededRng member_rng(member_seed);
      SeededRng sub_rng = member_rng.child(hash_key("subsample"));
      const auto rows = subsample_rows(n, members[j].bootstrap_fraction, sub_rng);
      auto model = fit(members[j].spec, layer_data.subset(rows), member_seed);

      Probabilities train_pred;
      if (spec.layer_features == LayerFeatures::in_sample) {
        train_pred = model.predict(input);
      } else {
        train_pred.assign(n, 0.0);
        SeededRng fold_rng = member_rng.child(hash_key("feature_folds"));
        const auto k = static_cast<std::size_t>(spec.feature_folds);
        const auto fold_of = stratified_folds(data.labels(), k, fold_rng);
        for (std::size_t v = 0; v < k; ++v) {
          std::vector<std::size_t> train, held;
          for (std::size_t i = 0; i < n; ++i) (fold_of[i] == v ? held : train).push_back(i);
          if (held.empty()) continue;
          SeededRng fold_sub = member_rng.child(derive_seed(hash_key("fold_subsample"), v));
          const auto picked = subsample_rows(train.size(), members[j].bootstrap_fraction, fold_sub);
          std::vector<std::size_t> fold_rows;
          fold_rows.reserve(picked.size());
          for (auto r : picked) fold_rows.push_back(train[r]);
          const auto fold_model = fit(members[j].spec, layer_data.subset(fold_rows), derive_seed(member_seed, v));
          const auto pred = fold_model.predict(input.select_rows(held));
          for (std::size_t r = 0; r < held.size(); ++r) train_pred[held[r]] = pred[r];
        }
      }
      for (std::size_t i = 0; i < n; ++i) outputs(i, j) = train_pred[i];
      fitted.push_back(std::move(model));
      rows_used.push_back(rows);
    }
    input = layer_input(outputs, data.features(), spec.passthrough);
    out.training_outputs.push_back(std::move(outputs));
    out.member_rows.push_back(std::move(rows_used));
    layers.push_back(std::move(fitted));
  }
  auto model = std::make_shared<const CascadeModel>(std::move(layers), spec.passthrough, data.cols());
  out.model = FittedModel(std::move(model), to_json(spec), seed, seconds_since(start));
  return out;
}

FittedModel fit_cascade(const CascadeSpec& spec, const Dataset& data, std::uint64_t seed) {
  return fit_cascade_detailed(spec, data, seed).model;
}

FittedModel fit_algorithm(const AlgorithmSpec& spec, const Dataset& data, std::uint64_t seed) {
  if (const auto* l = std::get_if<LearnerSpec>(&spec)) return fit(*l, data, seed);
  if (const auto* s = std::get_if<SuperlearnerSpec>(&spec)) return fit_superlearner(*s, data, seed);
  return fit_cascade(std::get<CascadeSpec>(spec), data, seed);
}

// ---------------------------------------------------------------- presets

SuperlearnerSpec preset_superlearner() {
  SuperlearnerSpec s;
  s.base_specs = {RandomForestSpec{}, RandomFernsSpec{}, KnnSpec{5, KnnBackend::kdtree},
                  MarsSpec{},         CiTreeSpec{},      BoostSpec{}};
  return s;
}

SuperlearnerSpec preset_fast_superlearner() {
  SuperlearnerSpec s;
  s.base_specs = {MarsSpec{}, CiTreeSpec{}};
  return s;
}

CascadeSpec preset_mixed_deep() {
  CascadeSpec s;
  s.layers = {
      {{RandomForestSpec{}, 0.5}, {RandomForestSpec{}, 0.8}, {CiTreeSpec{}, 1.0}, {RandomFernsSpec{}, 1.0}},
      {{MarsSpec{}, 1.0}, {CiTreeSpec{}, 1.0}},
      {{BoostSpec{}, 1.0}},
  };
  return s;
}

CascadeSpec preset_deep_knn() {
  constexpr double kFraction = 0.632;
  CascadeSpec s;
  for (std::size_t width : {10U, 10U, 5U}) {
    s.layers.emplace_back(width, CascadeMember{KnnSpec{5, KnnBackend::kdtree}, kFraction});
  }
  return s;
}

SuperlearnerSpec preset_knn_superlearner() {
  SuperlearnerSpec s;
  for (int k : {2, 5, 10, 25}) s.base_specs.push_back(KnnSpec{k, KnnBackend::kdtree});
  return s;
}

LearnerSpec preset_knn5() { return KnnSpec{5, KnnBackend::kdtree}; }

LearnerSpec preset_dnn_mirror() {
  MlpSpec s;
  s.hidden_sizes = {4, 2, 1};
  return s;
}

LearnerSpec preset_dnn_tuned() {
  MlpSpec s;
  s.hidden_sizes = {13, 5, 3, 1};
  return s;
}

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"superlearner", "fast-superlearner", "mixed-deep", "deep-knn",
                                              "knn-superlearner", "knn5", "dnn-mirror", "dnn-tuned"};
  return names;
}

bool is_preset(std::string_view name) {
  const auto& names = preset_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

AlgorithmSpec preset(std::string_view name) {
  if (name == "superlearner") return preset_superlearner();
  if (name == "fast-superlearner") return preset_fast_superlearner();
  if (name == "mixed-deep") return preset_mixed_deep();
  if (name == "deep-knn") return preset_deep_knn();
  if (name == "knn-superlearner") return preset_knn_superlearner();
  if (name == "knn5") return preset_knn5();
  if (name == "dnn-mirror") return preset_dnn_mirror();
  if (name == "dnn-tuned") return preset_dnn_tuned();
  throw InvalidSpec("unknown preset '" + std::string(name) + "'");
}

}  // namespace stackbench
