#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "stackbench/matrix.hpp"

namespace stackbench {

/// Class-1 probabilities, one per scored row, each in [0,1].
using Probabilities = std::vector<double>;

/// Throws InvalidArgument unless every value is a finite number in [0,1].
void check_probabilities(std::span<const double> probs);

/// n x p real features with binary labels. Construction validates every
/// invariant; a Dataset that exists is always well formed.
class Dataset {
 public:
  Dataset() = default;
  Dataset(Matrix features, std::vector<int> labels, std::vector<std::string> feature_names);
  /// Feature names default to x1..xp.
  Dataset(Matrix features, std::vector<int> labels);

  const Matrix& features() const noexcept { return features_; }
  const std::vector<int>& labels() const noexcept { return labels_; }
  const std::vector<std::string>& feature_names() const noexcept { return names_; }

  std::size_t rows() const noexcept { return features_.rows(); }
  std::size_t cols() const noexcept { return features_.cols(); }
  bool empty() const noexcept { return labels_.empty(); }

  std::size_t count_positive() const noexcept;
  bool has_both_classes() const noexcept;
  /// Labels as 0.0/1.0 regression targets.
  std::vector<double> targets() const;

  Dataset subset(std::span<const std::size_t> rows) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  Matrix features_;
  std::vector<int> labels_;
  std::vector<std::string> names_;
};

std::vector<std::string> default_feature_names(std::size_t p);

}  // namespace stackbench
