#pragma once

#include <memory>
#include <vector>

#include "stackbench/kdtree.hpp"
#include "stackbench/learner_spec.hpp"
#include "stackbench/model.hpp"

namespace stackbench {

/// KNN regression on 0/1 labels: the mean label of the k nearest training
/// rows (Euclidean, ties broken by lower row index).
class KnnModel final : public Model {
 public:
  KnnModel(KnnSpec spec, Matrix train_x, std::vector<int> train_y);

  std::string_view family() const noexcept override { return "knn"; }
  std::size_t feature_count() const noexcept override { return train_x_.cols(); }
  Probabilities predict_rows(const Matrix& x) const override;
  nlohmann::json parameters() const override;
  static std::shared_ptr<const KnnModel> from_parameters(const nlohmann::json& spec,
                                                         const nlohmann::json& params);

  const KnnSpec& spec() const noexcept { return spec_; }
  const KdTree* tree() const noexcept { return tree_.get(); }

 private:
  KnnSpec spec_;
  Matrix train_x_;
  std::vector<int> train_y_;
  std::unique_ptr<KdTree> tree_;
};

std::shared_ptr<const KnnModel> fit_knn(const KnnSpec& spec, const Dataset& data);

}  // namespace stackbench
