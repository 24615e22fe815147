#include "stackbench/model.hpp"

#include <string>

#include "stackbench/boost.hpp"
#include "stackbench/citree.hpp"
#include "stackbench/ensembles.hpp"
#include "stackbench/errors.hpp"
#include "stackbench/ferns.hpp"
#include "stackbench/forest.hpp"
#include "stackbench/knn.hpp"
#include "stackbench/mars.hpp"
#include "stackbench/mlp.hpp"

namespace stackbench {
namespace {

constexpr const char* kFormat = "stackbench-model";

std::shared_ptr<const Model> load_family(const std::string& family, const nlohmann::json& spec,
                                         const nlohmann::json& params, std::size_t p) {
  if (family == "knn") return KnnModel::from_parameters(spec, params);
  if (family == "random_forest") return ForestModel::from_parameters(params, p);
  if (family == "random_ferns") return FernsModel::from_parameters(params, p);
  if (family == "ctree") return CiTreeModel::from_parameters(params, p);
  if (family == "mars") return MarsModel::from_parameters(params, p);
  if (family == "boost") return BoostModel::from_parameters(params, p);
  if (family == "mlp") return MlpModel::from_parameters(params, p);
  if (family == "superlearner") return SuperlearnerModel::from_parameters(params, p);
  if (family == "cascade") return CascadeModel::from_parameters(params, p);
  throw LoadError("model document: unknown family '" + family + "'");
}

}  // namespace

FittedModel::FittedModel(std::shared_ptr<const Model> model, nlohmann::json spec, std::uint64_t seed,
                         double fit_seconds)
    : model_(std::move(model)), spec_(std::move(spec)), seed_(seed), fit_seconds_(fit_seconds) {
  if (!model_) throw InvalidArgument("FittedModel: null model");
}

Probabilities FittedModel::predict(const Matrix& x) const {
  if (!model_) throw InvalidArgument("predict: empty model");
  if (x.cols() != model_->feature_count()) {
    throw InvalidArgument("predict: model expects " + std::to_string(model_->feature_count()) +
                          " features, got " + std::to_string(x.cols()));
  }
  if (!x.all_finite()) throw InvalidArgument("predict: non-finite feature value");
  return model_->predict_rows(x);
}

nlohmann::json save_model(const FittedModel& model) {
  if (!model) throw InvalidArgument("save_model: empty model");
  nlohmann::json doc;
  doc["format"] = kFormat;
  doc["version"] = kModelFormatVersion;
  doc["family"] = std::string(model.family());
  doc["seed"] = model.seed();
  doc["spec"] = model.spec();
  doc["feature_count"] = model.feature_count();
  doc["fit_seconds"] = model.fit_seconds();
  doc["parameters"] = model.model().parameters();
  return doc;
}

FittedModel load_model(const nlohmann::json& doc) {
  try {
    if (!doc.is_object()) throw LoadError("model document: not an object");
    if (!doc.contains("version")) throw LoadError("model document: missing version");
    if (doc.value("format", std::string()) != kFormat) throw LoadError("model document: wrong format tag");
    const int version = doc.at("version").get<int>();
    if (version != kModelFormatVersion) {
      throw LoadError("model document: unsupported version " + std::to_string(version));
    }
    const auto family = doc.at("family").get<std::string>();
    const auto p = doc.at("feature_count").get<std::size_t>();
    auto model = load_family(family, doc.at("spec"), doc.at("parameters"), p);
    if (model->feature_count() != p) throw LoadError("model document: feature_count disagrees with parameters");
    return FittedModel(std::move(model), doc.at("spec"), doc.at("seed").get<std::uint64_t>(),
                       doc.value("fit_seconds", 0.0));
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("model document: ") + e.what());
  }
}

}  // namespace stackbench
