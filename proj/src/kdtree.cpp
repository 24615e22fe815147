#include "stackbench/kdtree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "stackbench/errors.hpp"
#include "stackbench/simd.hpp"

namespace stackbench {
namespace {

// (squared distance, row) ordered lexicographically; the heap keeps the worst on top.
using Candidate = std::pair<double, std::size_t>;

class NeighborHeap {
 public:
  explicit NeighborHeap(std::size_t k) : k_(k) { items_.reserve(k + 1); }

  bool full() const noexcept { return items_.size() == k_; }
  double worst() const noexcept { return items_.front().first; }

  void offer(double d2, std::size_t row) {
    const Candidate c{d2, row};
    if (!full()) {
      items_.push_back(c);
      std::push_heap(items_.begin(), items_.end());
    } else if (c < items_.front()) {
      std::pop_heap(items_.begin(), items_.end());
      items_.back() = c;
      std::push_heap(items_.begin(), items_.end());
    }
  }

  std::vector<Neighbor> sorted() && {
    std::sort_heap(items_.begin(), items_.end());
    std::vector<Neighbor> out;
    out.reserve(items_.size());
    for (const auto& [d2, row] : items_) out.push_back({row, std::sqrt(d2)});
    return out;
  }

 private:
  std::size_t k_;
  std::vector<Candidate> items_;
};

void check_query(std::size_t n, std::size_t dim, std::span<const double> point, std::size_t k) {
  if (point.size() != dim) throw InvalidArgument("knn query: dimension mismatch");
  if (k == 0 || k > n) {
    throw InvalidArgument("knn query: k=" + std::to_string(k) + " must lie in [1, " +
                          std::to_string(n) + "]");
  }
}

}  // namespace

KdTree::KdTree(Matrix points, std::size_t leaf_size)
    : points_(std::move(points)), leaf_size_(std::max<std::size_t>(1, leaf_size)) {
  index_.resize(points_.rows());
  std::iota(index_.begin(), index_.end(), std::size_t{0});
  if (!index_.empty()) build(0, index_.size());
}

int KdTree::build(std::size_t begin, std::size_t end) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back({begin, end});
  if (end - begin <= leaf_size_) return id;

  int axis = -1;
  double widest = 0.0;
  for (std::size_t d = 0; d < points_.cols(); ++d) {
    double lo = points_(index_[begin], d);
    double hi = lo;
    for (std::size_t i = begin + 1; i < end; ++i) {
      const double v = points_(index_[i], d);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (hi - lo > widest) {
      widest = hi - lo;
      axis = static_cast<int>(d);
    }
  }
  if (axis < 0) return id;  // all points coincide

  const std::size_t mid = begin + (end - begin) / 2;
  const auto a = static_cast<std::size_t>(axis);
  std::nth_element(index_.begin() + static_cast<std::ptrdiff_t>(begin),
                   index_.begin() + static_cast<std::ptrdiff_t>(mid),
                   index_.begin() + static_cast<std::ptrdiff_t>(end),
                   [&](std::size_t l, std::size_t r) {
                     const double vl = points_(l, a), vr = points_(r, a);
                     return vl < vr || (vl == vr && l < r);
                   });
  const double split = points_(index_[mid], a);
  const int left = build(begin, mid);
  const int right = build(mid, end);
  Node& node = nodes_[static_cast<std::size_t>(id)];
  node.axis = axis;
  node.split = split;
  node.left = left;
  node.right = right;
  return id;
}

std::vector<Neighbor> KdTree::query(std::span<const double> point, std::size_t k) const {
  check_query(size(), dimension(), point, k);
  NeighborHeap heap(k);

  // Explicit stack of (node, lower bound on squared distance to its region).
  std::vector<std::pair<int, double>> stack;
  stack.emplace_back(0, 0.0);
  while (!stack.empty()) {
    const auto [id, bound] = stack.back();
    stack.pop_back();
    // Ties must still be visited: an equal distance with a lower row index wins.
    if (heap.full() && bound > heap.worst()) continue;
    const Node& node = nodes_[static_cast<std::size_t>(id)];
    if (node.axis < 0) {
      for (std::size_t i = node.begin; i < node.end; ++i) {
        const std::size_t row = index_[i];
        heap.offer(simd::squared_distance(points_.row(row), point), row);
      }
      continue;
    }
    const double diff = point[static_cast<std::size_t>(node.axis)] - node.split;
    const int near = diff <= 0.0 ? node.left : node.right;
    const int far = diff <= 0.0 ? node.right : node.left;
    // Far side first on the stack so the near side is searched first.
    stack.emplace_back(far, std::max(bound, diff * diff));
    stack.emplace_back(near, bound);
  }
  return std::move(heap).sorted();
}

std::vector<std::vector<std::size_t>> KdTree::leaves() const {
  std::vector<std::vector<std::size_t>> out;
  for (const Node& node : nodes_) {
    if (node.axis < 0) {
      out.emplace_back(index_.begin() + static_cast<std::ptrdiff_t>(node.begin),
                       index_.begin() + static_cast<std::ptrdiff_t>(node.end));
    }
  }
  return out;
}

std::vector<Neighbor> brute_force_neighbors(const Matrix& points, std::span<const double> point,
                                            std::size_t k) {
  check_query(points.rows(), points.cols(), point, k);
  NeighborHeap heap(k);
  for (std::size_t row = 0; row < points.rows(); ++row) {
    heap.offer(simd::squared_distance(points.row(row), point), row);
  }
  return std::move(heap).sorted();
}

}  // namespace stackbench
