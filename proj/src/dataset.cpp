#include "stackbench/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "stackbench/errors.hpp"

namespace stackbench {

void check_probabilities(std::span<const double> probs) {
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = probs[i];
    if (!(p >= 0.0 && p <= 1.0)) {
      throw InvalidArgument("probability at row " + std::to_string(i) + " outside [0,1]");
    }
  }
}

std::vector<std::string> default_feature_names(std::size_t p) {
  std::vector<std::string> names;
  names.reserve(p);
  for (std::size_t j = 0; j < p; ++j) names.push_back("x" + std::to_string(j + 1));
  return names;
}

Dataset::Dataset(Matrix features, std::vector<int> labels, std::vector<std::string> feature_names)
    : features_(std::move(features)), labels_(std::move(labels)), names_(std::move(feature_names)) {
  if (features_.rows() != labels_.size()) {
    throw InvalidArgument("Dataset: feature rows (" + std::to_string(features_.rows()) +
                          ") != label count (" + std::to_string(labels_.size()) + ")");
  }
  if (names_.empty()) names_ = default_feature_names(features_.cols());
  if (names_.size() != features_.cols()) {
    throw InvalidArgument("Dataset: feature name count does not match column count");
  }
  const auto& v = features_.values();
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (!std::isfinite(v[k])) {
      throw InvalidArgument("Dataset: non-finite feature at row " +
                            std::to_string(k / features_.cols()) + ", column " +
                            std::to_string(k % features_.cols()));
    }
  }
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] != 0 && labels_[i] != 1) {
      throw InvalidArgument("Dataset: label at row " + std::to_string(i) + " is not 0 or 1");
    }
  }
}

Dataset::Dataset(Matrix features, std::vector<int> labels)
    : Dataset(std::move(features), std::move(labels), {}) {}

std::size_t Dataset::count_positive() const noexcept {
  return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), 1));
}

bool Dataset::has_both_classes() const noexcept {
  const auto pos = count_positive();
  return pos > 0 && pos < labels_.size();
}

std::vector<double> Dataset::targets() const {
  return {labels_.begin(), labels_.end()};
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  std::vector<int> labels(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) labels[i] = labels_.at(rows[i]);
  return Dataset(features_.select_rows(rows), std::move(labels), names_);
}

}  // namespace stackbench
