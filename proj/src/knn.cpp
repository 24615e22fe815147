#include "stackbench/knn.hpp"

#include "stackbench/errors.hpp"

namespace stackbench {

KnnModel::KnnModel(KnnSpec spec, Matrix train_x, std::vector<int> train_y)
    : spec_(spec), train_x_(std::move(train_x)), train_y_(std::move(train_y)) {
  if (spec_.k < 1) throw InvalidSpec("knn: k must be positive");
  if (train_x_.rows() < static_cast<std::size_t>(spec_.k)) {
    throw FitError("knn", "k=" + std::to_string(spec_.k) + " exceeds the " +
                              std::to_string(train_x_.rows()) + " training rows");
  }
  if (spec_.backend == KnnBackend::kdtree) tree_ = std::make_unique<KdTree>(train_x_);
}

Probabilities KnnModel::predict_rows(const Matrix& x) const {
  const auto k = static_cast<std::size_t>(spec_.k);
  Probabilities out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto nn = tree_ ? tree_->query(x.row(i), k) : brute_force_neighbors(train_x_, x.row(i), k);
    std::size_t positives = 0;
    for (const auto& n : nn) positives += static_cast<std::size_t>(train_y_[n.index]);
    out[i] = static_cast<double>(positives) / static_cast<double>(k);
  }
  return out;
}

nlohmann::json KnnModel::parameters() const {
  return {{"rows", train_x_.rows()}, {"x", train_x_.values()}, {"y", train_y_}};
}

std::shared_ptr<const KnnModel> KnnModel::from_parameters(const nlohmann::json& spec,
                                                          const nlohmann::json& params) {
  const auto s = std::get<KnnSpec>(learner_spec_from_json(spec));
  const auto rows = params.at("rows").get<std::size_t>();
  auto values = params.at("x").get<std::vector<double>>();
  if (rows == 0 || values.size() % rows != 0) throw LoadError("knn: malformed training matrix");
  const std::size_t cols = values.size() / rows;
  return std::make_shared<KnnModel>(s, Matrix(rows, cols, std::move(values)),
                                    params.at("y").get<std::vector<int>>());
}

std::shared_ptr<const KnnModel> fit_knn(const KnnSpec& spec, const Dataset& data) {
  return std::make_shared<KnnModel>(spec, data.features(), data.labels());
}

}  // namespace stackbench
