#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "stackbench/knn.hpp"
#include "stackbench/kdtree.hpp"
#include "stackbench/learners.hpp"
#include "stackbench/rng.hpp"

using namespace stackbench;

namespace {

Matrix random_points(SeededRng& rng, std::size_t n, std::size_t p) {
  Matrix m(n, p);
  for (auto& v : m.values()) v = rng.uniform(-1.0, 1.0);
  return m;
}

// Plain sort over all rows, independent of the library's scan.
std::vector<std::size_t> oracle(const Matrix& pts, std::span<const double> q, std::size_t k) {
  std::vector<std::pair<double, std::size_t>> d;
  for (std::size_t i = 0; i < pts.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < pts.cols(); ++j) s += (pts(i, j) - q[j]) * (pts(i, j) - q[j]);
    d.emplace_back(s, i);
  }
  std::sort(d.begin(), d.end());
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back(d[i].second);
  return out;
}

}  // namespace

TEST_SUITE("learners") {

TEST_CASE("kd-tree agrees with brute force") {
  SeededRng rng(21);
  const auto pts = random_points(rng, 600, 4);
  const KdTree tree(pts, 8);
  for (int q = 0; q < 200; ++q) {
    std::vector<double> point(4);
    for (auto& v : point) v = rng.uniform(-1.2, 1.2);
    for (std::size_t k : {1u, 5u, 25u}) {
      const auto got = tree.query(point, k);
      CHECK(got == brute_force_neighbors(pts, point, k));
      std::vector<std::size_t> idx;
      for (const auto& n : got) idx.push_back(n.index);
      CHECK(idx == oracle(pts, point, k));
      CHECK(std::is_sorted(got.begin(), got.end(),
                           [](const Neighbor& a, const Neighbor& b) { return a.distance < b.distance; }));
    }
  }
}

TEST_CASE("kd-tree ties break by row index") {
  Matrix pts(6, 1, 1.0);
  const KdTree tree(pts, 2);
  const std::vector<double> q{1.0};
  const auto got = tree.query(q, 3);
  REQUIRE(got.size() == 3);
  CHECK(got[0].index == 0);
  CHECK(got[1].index == 1);
  CHECK(got[2].index == 2);
}

TEST_CASE("kd-tree leaves partition the rows") {
  SeededRng rng(3);
  const KdTree tree(random_points(rng, 257, 3), 10);
  std::set<std::size_t> seen;
  std::size_t total = 0;
  for (const auto& leaf : tree.leaves()) {
    CHECK(leaf.size() <= 10);
    total += leaf.size();
    seen.insert(leaf.begin(), leaf.end());
  }
  CHECK(total == 257);
  CHECK(seen.size() == 257);
}

TEST_CASE("knn predicts the neighbor label mean") {
  Matrix x(4, 1);
  x(0, 0) = 0.0;
  x(1, 0) = 1.0;
  x(2, 0) = 2.0;
  x(3, 0) = 10.0;
  const Dataset d(x, {0, 1, 1, 0});
  for (auto backend : {KnnBackend::kdtree, KnnBackend::brute}) {
    const auto m = fit(KnnSpec{3, backend}, d, 0);
    Matrix q(1, 1);
    q(0, 0) = 1.1;
    CHECK(m.predict(q)[0] == doctest::Approx(2.0 / 3.0));
    q(0, 0) = 100.0;
    CHECK(m.predict(q)[0] == doctest::Approx(2.0 / 3.0));
    q(0, 0) = -100.0;
    CHECK(m.predict(q)[0] == doctest::Approx(2.0 / 3.0));
  }
}

TEST_CASE("knn backends give identical predictions") {
  SeededRng rng(5);
  const auto x = random_points(rng, 300, 5);
  std::vector<int> y(300);
  for (std::size_t i = 0; i < 300; ++i) y[i] = x(i, 0) + x(i, 1) > 0 ? 1 : 0;
  const Dataset d(x, y);
  const auto q = random_points(rng, 100, 5);
  const auto a = fit(KnnSpec{7, KnnBackend::kdtree}, d, 0).predict(q);
  const auto b = fit(KnnSpec{7, KnnBackend::brute}, d, 0).predict(q);
  CHECK(a == b);
}

}
