#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>

#include <json.hpp>

#include "stackbench/dataset.hpp"
#include "stackbench/matrix.hpp"

namespace stackbench {

inline constexpr int kModelFormatVersion = 1;

/// Trained parameters of one model family. Implementations are immutable
/// after construction; predict is const and reentrant.
class Model {
 public:
  virtual ~Model() = default;
  virtual std::string_view family() const noexcept = 0;
  virtual std::size_t feature_count() const noexcept = 0;
  /// Rows already checked to have feature_count() columns.
  virtual Probabilities predict_rows(const Matrix& x) const = 0;
  /// Learned parameters only; the envelope is written by save_model.
  virtual nlohmann::json parameters() const = 0;
};

/// A trained model plus the metadata needed to reproduce it.
class FittedModel {
 public:
  FittedModel() = default;
  FittedModel(std::shared_ptr<const Model> model, nlohmann::json spec, std::uint64_t seed,
              double fit_seconds = 0.0);

  const Model& model() const { return *model_; }
  std::shared_ptr<const Model> shared() const noexcept { return model_; }
  std::string_view family() const noexcept { return model_->family(); }
  std::size_t feature_count() const noexcept { return model_->feature_count(); }
  const nlohmann::json& spec() const noexcept { return spec_; }
  std::uint64_t seed() const noexcept { return seed_; }
  double fit_seconds() const noexcept { return fit_seconds_; }
  void set_fit_seconds(double s) noexcept { fit_seconds_ = s; }
  explicit operator bool() const noexcept { return model_ != nullptr; }

  /// Throws InvalidArgument on a column-count mismatch.
  Probabilities predict(const Matrix& x) const;

  /// Downcast for family-specific inspection (nullptr if the family differs).
  template <class T>
  const T* as() const noexcept {
    return dynamic_cast<const T*>(model_.get());
  }

 private:
  std::shared_ptr<const Model> model_;
  nlohmann::json spec_;
  std::uint64_t seed_ = 0;
  double fit_seconds_ = 0.0;
};

/// Versioned document: {format, version, family, seed, spec, feature_count, parameters}.
nlohmann::json save_model(const FittedModel& model);
FittedModel load_model(const nlohmann::json& doc);

}  // namespace stackbench
