#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "stackbench/dataset.hpp"
#include "stackbench/learner_spec.hpp"
#include "stackbench/matrix.hpp"
#include "stackbench/model.hpp"
#include "stackbench/nnls.hpp"

namespace stackbench {

enum class MetaLearner { nnls, logistic };

struct SuperlearnerSpec {
  std::vector<LearnerSpec> base_specs;
  int folds = 10;
  MetaLearner meta = MetaLearner::nnls;
};

struct CascadeMember {
  LearnerSpec spec;
  double bootstrap_fraction = 1.0;
};

/// How training rows get their layer outputs: predictions of the layer's own
/// models (in_sample) or cross-fitted predictions (out_of_fold).
enum class LayerFeatures { in_sample, out_of_fold };

struct CascadeSpec {
  std::vector<std::vector<CascadeMember>> layers;
  bool passthrough = true;
  LayerFeatures layer_features = LayerFeatures::in_sample;
  int feature_folds = 5;  // out_of_fold only
};

using AlgorithmSpec = std::variant<LearnerSpec, SuperlearnerSpec, CascadeSpec>;

void validate(const SuperlearnerSpec& spec);
void validate(const CascadeSpec& spec);
void validate(const AlgorithmSpec& spec);

/// "superlearner", "cascade", or the learner family.
std::string algorithm_family(const AlgorithmSpec& spec);

nlohmann::json to_json(const SuperlearnerSpec& spec);
nlohmann::json to_json(const CascadeSpec& spec);
nlohmann::json to_json(const AlgorithmSpec& spec);
/// {"kind": "superlearner"|"cascade", ...} or a bare learner document.
AlgorithmSpec algorithm_spec_from_json(const nlohmann::json& doc);

class SuperlearnerModel final : public Model {
 public:
  SuperlearnerModel(MetaLearner meta, std::vector<FittedModel> members, std::vector<double> coefficients,
                    std::size_t feature_count);

  std::string_view family() const noexcept override { return "superlearner"; }
  std::size_t feature_count() const noexcept override { return p_; }
  Probabilities predict_rows(const Matrix& x) const override;
  nlohmann::json parameters() const override;
  static std::shared_ptr<const SuperlearnerModel> from_parameters(const nlohmann::json& params,
                                                                  std::size_t feature_count);

  MetaLearner meta() const noexcept { return meta_; }
  const std::vector<FittedModel>& members() const noexcept { return members_; }
  /// Simplex weights for nnls; intercept followed by logit slopes for logistic.
  const std::vector<double>& coefficients() const noexcept { return coef_; }
  MetaWeights weights() const { return {meta_ == MetaLearner::nnls ? coef_ : std::vector<double>{}}; }
  /// n x L predictions of the refit members.
  Matrix base_predictions(const Matrix& x) const;
  /// Meta-combination of an n x L prediction matrix.
  Probabilities combine(const Matrix& z) const;

 private:
  MetaLearner meta_;
  std::vector<FittedModel> members_;
  std::vector<double> coef_;
  std::size_t p_;
};

class CascadeModel final : public Model {
 public:
  CascadeModel(std::vector<std::vector<FittedModel>> layers, bool passthrough, std::size_t feature_count);

  std::string_view family() const noexcept override { return "cascade"; }
  std::size_t feature_count() const noexcept override { return p_; }
  Probabilities predict_rows(const Matrix& x) const override;
  nlohmann::json parameters() const override;
  static std::shared_ptr<const CascadeModel> from_parameters(const nlohmann::json& params,
                                                             std::size_t feature_count);

  const std::vector<std::vector<FittedModel>>& layers() const noexcept { return layers_; }
  bool passthrough() const noexcept { return passthrough_; }
  /// Output of every layer (before passthrough concatenation) for x.
  std::vector<Matrix> layer_outputs(const Matrix& x) const;

 private:
  std::vector<std::vector<FittedModel>> layers_;
  bool passthrough_;
  std::size_t p_;
};

inline constexpr std::size_t kRefitFold = std::numeric_limits<std::size_t>::max();

/// Seed of one base learner fit: the ensemble seed itself for the refit on all
/// rows, else keyed by the spec's fingerprint and the held-out fold, so equal
/// specs get equal seeds wherever they sit in the list.
std::uint64_t superlearner_member_seed(std::uint64_t seed, const LearnerSpec& spec, std::size_t fold);

/// Member (layer, index) seed; (0, 0) uses the cascade seed itself.
std::uint64_t cascade_member_seed(std::uint64_t seed, std::size_t layer, std::size_t index);

struct SuperlearnerFit {
  FittedModel model;
  std::vector<std::size_t> fold_of_row;
  Matrix cv_predictions;  // Z, n x L
};

SuperlearnerFit fit_superlearner_detailed(const SuperlearnerSpec& spec, const Dataset& data, std::uint64_t seed);
FittedModel fit_superlearner(const SuperlearnerSpec& spec, const Dataset& data, std::uint64_t seed);

struct CascadeFit {
  FittedModel model;
  /// Rows of the layer input each member was trained on.
  std::vector<std::vector<std::vector<std::size_t>>> member_rows;
  /// Training-side layer outputs fed forward (before passthrough).
  std::vector<Matrix> training_outputs;
};

CascadeFit fit_cascade_detailed(const CascadeSpec& spec, const Dataset& data, std::uint64_t seed);
FittedModel fit_cascade(const CascadeSpec& spec, const Dataset& data, std::uint64_t seed);

/// Any algorithm; fit_seconds is the wall-clock time of the whole fit.
FittedModel fit_algorithm(const AlgorithmSpec& spec, const Dataset& data, std::uint64_t seed);

/// Logistic meta-learner on logit(Z): intercept then one slope per column.
std::vector<double> fit_logistic_meta(const Matrix& z, std::span<const double> y);

SuperlearnerSpec preset_superlearner();
SuperlearnerSpec preset_fast_superlearner();
CascadeSpec preset_mixed_deep();
CascadeSpec preset_deep_knn();
SuperlearnerSpec preset_knn_superlearner();
LearnerSpec preset_knn5();
LearnerSpec preset_dnn_mirror();
LearnerSpec preset_dnn_tuned();

/// superlearner, fast-superlearner, mixed-deep, deep-knn, knn-superlearner,
/// knn5, dnn-mirror, dnn-tuned.
const std::vector<std::string>& preset_names();
bool is_preset(std::string_view name);
/// Throws InvalidSpec for unknown names.
AlgorithmSpec preset(std::string_view name);

}  // namespace stackbench
