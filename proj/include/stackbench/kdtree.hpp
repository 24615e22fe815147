#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "stackbench/matrix.hpp"

namespace stackbench {

struct Neighbor {
  std::size_t index = 0;
  double distance = 0.0;  // Euclidean

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Axis-aligned k-d tree over the rows of a matrix. Splits on the axis of
/// widest spread at the median; leaves hold up to `leaf_size` rows.
/// Query results are ordered by (distance, row index), identical to an
/// exhaustive scan with the same ordering.
class KdTree {
 public:
  KdTree() = default;
  explicit KdTree(Matrix points, std::size_t leaf_size = 16);

  std::size_t size() const noexcept { return points_.rows(); }
  std::size_t dimension() const noexcept { return points_.cols(); }
  const Matrix& points() const noexcept { return points_; }

  /// The k nearest rows; k must be in [1, size()].
  std::vector<Neighbor> query(std::span<const double> point, std::size_t k) const;

  /// Row indices bucket by bucket, in leaf order. Every row appears once.
  std::vector<std::vector<std::size_t>> leaves() const;

 private:
  struct Node {
    std::size_t begin = 0;
    std::size_t end = 0;
    int axis = -1;  // -1 marks a leaf
    double split = 0.0;
    int left = -1;
    int right = -1;
  };

  int build(std::size_t begin, std::size_t end);

  Matrix points_;
  std::vector<std::size_t> index_;
  std::vector<Node> nodes_;
  std::size_t leaf_size_ = 16;
};

/// Exhaustive scan with the same ordering and distance kernel as KdTree.
std::vector<Neighbor> brute_force_neighbors(const Matrix& points, std::span<const double> point,
                                            std::size_t k);

}  // namespace stackbench
