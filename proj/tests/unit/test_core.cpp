#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <set>

#include "stackbench/dataset.hpp"
#include "stackbench/errors.hpp"
#include "stackbench/io.hpp"
#include "stackbench/metrics.hpp"
#include "stackbench/rng.hpp"
#include "stackbench/split.hpp"

using namespace stackbench;

namespace {

std::vector<int> class_block(std::size_t zeros, std::size_t ones) {
  std::vector<int> y(zeros, 0);
  y.insert(y.end(), ones, 1);
  return y;
}

// Pairwise Mann-Whitney count, the definition itself.
double pairwise_auc(const std::vector<double>& p, const std::vector<int>& y) {
  double hits = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t j = 0; j < p.size(); ++j) {
      if (y[i] == 1 && y[j] == 0) {
        pairs += 1.0;
        hits += p[i] > p[j] ? 1.0 : (p[i] == p[j] ? 0.5 : 0.0);
      }
    }
  }
  return hits / pairs;
}

}  // namespace

TEST_SUITE("core") {

TEST_CASE("dataset rejects broken invariants") {
  CHECK_THROWS_AS(Dataset(Matrix(3, 2), {0, 1}), InvalidArgument);
  CHECK_THROWS_AS(Dataset(Matrix(2, 2), {0, 2}), InvalidArgument);
  Matrix bad(2, 1);
  bad(1, 0) = std::nan("");
  CHECK_THROWS_AS(Dataset(bad, {0, 1}), InvalidArgument);
  CHECK_THROWS_AS(Dataset(Matrix(2, 2), {0, 1}, {"a"}), InvalidArgument);

  const Dataset d(Matrix(2, 3), {0, 1});
  CHECK(d.feature_names() == std::vector<std::string>{"x1", "x2", "x3"});
  CHECK(d.count_positive() == 1);
  CHECK(d.has_both_classes());
}

TEST_CASE("probabilities outside [0,1] are rejected") {
  CHECK_NOTHROW(check_probabilities(std::vector<double>{0.0, 0.5, 1.0}));
  CHECK_THROWS_AS(check_probabilities(std::vector<double>{1.1}), InvalidArgument);
  CHECK_THROWS_AS(check_probabilities(std::vector<double>{std::nan("")}), InvalidArgument);
}

TEST_CASE("seeded streams repeat and children are independent of consumption") {
  SeededRng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  SeededRng c(42);
  const auto before = c.child(7).next_u64();
  for (int i = 0; i < 10; ++i) c.uniform();
  CHECK(c.child(7).next_u64() == before);
  CHECK(SeededRng(1).next_u64() != SeededRng(2).next_u64());
  CHECK(derive_seed(1, 2, 3) == derive_seed(derive_seed(1, 2), 3));
  CHECK(hash_key("a") != hash_key("b"));
}

TEST_CASE("uniform, normal and bounded draws have the right shape") {
  SeededRng rng(3);
  double sum = 0.0, sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(std::abs(sq / n - 1.0) < 0.02);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) ++counts[rng.below(7)];
  for (int c : counts) CHECK(std::abs(c - 10000) < 400);
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.uniform();
    CHECK((u >= 0.0 && u < 1.0));
  }
}

TEST_CASE("split sizes and determinism") {
  SeededRng r1(1), r2(1);
  const auto s1 = split(10, 0.7, r1);
  const auto s2 = split(10, 0.7, r2);
  CHECK(s1.train_indices.size() == 7);
  CHECK(s1.test_indices.size() == 3);
  CHECK(s1.train_indices == s2.train_indices);
  CHECK(s1.test_indices == s2.test_indices);
  std::set<std::size_t> all(s1.train_indices.begin(), s1.train_indices.end());
  all.insert(s1.test_indices.begin(), s1.test_indices.end());
  CHECK(all.size() == 10);

  SeededRng r3(99);
  CHECK(split(1000, 0.7, r3).train_indices.size() == 700);
  CHECK_THROWS_AS(split(1, 0.5, r3), InvalidArgument);
  CHECK_THROWS_AS(split(10, 1.0, r3), InvalidArgument);
  CHECK_THROWS_AS(split(10, 0.0, r3), InvalidArgument);
}

TEST_CASE("stratified split keeps per-class counts") {
  SeededRng rng(5);
  auto y = class_block(50, 50);
  auto s = stratified_split(y, 0.2, rng);
  auto ones = std::count_if(s.train_indices.begin(), s.train_indices.end(), [&](auto i) { return y[i] == 1; });
  CHECK(s.train_indices.size() == 20);
  CHECK(ones == 10);

  y = class_block(80, 20);
  s = stratified_split(y, 0.2, rng);
  ones = std::count_if(s.train_indices.begin(), s.train_indices.end(), [&](auto i) { return y[i] == 1; });
  CHECK(ones == 4);
  CHECK(s.train_indices.size() - static_cast<std::size_t>(ones) == 16);

  CHECK_THROWS_AS(stratified_split(std::vector<int>(10, 1), 0.5, rng), InvalidArgument);
}

TEST_CASE("stratified folds put both classes in every fold") {
  SeededRng rng(8);
  const auto y = class_block(37, 23);
  const auto folds = stratified_folds(y, 10, rng);
  for (std::size_t v = 0; v < 10; ++v) {
    int pos = 0, neg = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (folds[i] == v) (y[i] ? pos : neg)++;
    }
    CHECK(pos >= 2);
    CHECK(neg >= 3);
  }
}

TEST_CASE("subsample rows without replacement") {
  SeededRng rng(2);
  const auto rows = subsample_rows(100, 0.632, rng);
  CHECK(rows.size() == 63);
  CHECK(std::is_sorted(rows.begin(), rows.end()));
  CHECK(std::adjacent_find(rows.begin(), rows.end()) == rows.end());
  std::vector<std::size_t> all(10);
  std::iota(all.begin(), all.end(), std::size_t{0});
  CHECK(subsample_rows(10, 1.0, rng) == all);
}

TEST_CASE("accuracy examples") {
  CHECK(accuracy(std::vector<double>{0.9, 0.1}, std::vector<int>{1, 0}) == 1.0);
  CHECK(accuracy(std::vector<double>{0.9, 0.1}, std::vector<int>{0, 1}) == 0.0);
  CHECK(accuracy(std::vector<double>{0.9, 0.4, 0.6}, std::vector<int>{1, 0, 0}) == doctest::Approx(2.0 / 3.0));
  CHECK_THROWS_AS(accuracy(std::vector<double>{0.9}, std::vector<int>{1, 0}), InvalidArgument);
}

TEST_CASE("auc examples and pairwise oracle") {
  CHECK(auc(std::vector<double>{0.1, 0.2, 0.8, 0.9}, std::vector<int>{0, 0, 1, 1}) == 1.0);
  CHECK(auc(std::vector<double>{0.5, 0.5, 0.5, 0.5}, std::vector<int>{0, 1, 0, 1}) == 0.5);
  CHECK(auc(std::vector<double>{0.1, 0.4, 0.35, 0.8}, std::vector<int>{0, 0, 1, 1}) == doctest::Approx(0.75));
  CHECK_THROWS_AS(auc(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1}), UndefinedMetric);

  SeededRng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> p(60);
    std::vector<int> y(60);
    for (std::size_t i = 0; i < p.size(); ++i) {
      p[i] = std::round(rng.uniform() * 10.0) / 10.0;  // coarse, so ties occur
      y[i] = i % 3 == 0 ? 1 : 0;
    }
    const double a = auc(p, y);
    CHECK(a == doctest::Approx(pairwise_auc(p, y)).epsilon(1e-12));
    std::vector<double> flipped(p.size());
    std::transform(p.begin(), p.end(), flipped.begin(), [](double v) { return 1.0 - v; });
    CHECK(std::abs(a + auc(flipped, y) - 1.0) < 1e-12);
  }
}

TEST_CASE("confusion rates") {
  auto r = confusion_rates(std::vector<double>{0.9, 0.1}, std::vector<int>{1, 0});
  CHECK(r.fnr == 0.0);
  CHECK(r.fpr == 0.0);
  r = confusion_rates(std::vector<double>{0.9, 0.9, 0.9}, std::vector<int>{1, 0, 0});
  CHECK(r.fnr == 0.0);
  CHECK(r.fpr == 1.0);
  r = confusion_rates(std::vector<double>{0.9, 0.2, 0.7, 0.4}, std::vector<int>{1, 1, 0, 0});
  CHECK(r.fnr == 0.5);
  CHECK(r.fpr == 0.5);
  CHECK_THROWS_AS(confusion_rates(std::vector<double>{0.9}, std::vector<int>{1}), UndefinedMetric);

  const auto rep = evaluate(std::vector<double>{0.9, 0.8}, std::vector<int>{1, 1}, 0.25);
  CHECK(rep.accuracy == 1.0);
  CHECK(std::isnan(rep.auc));
  CHECK(std::isnan(rep.fpr));
  CHECK(rep.fit_seconds == 0.25);
}

TEST_CASE("accuracy is unchanged by a threshold-preserving monotone map") {
  SeededRng rng(4);
  std::vector<double> p(200), q(200);
  std::vector<int> y(200);
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = rng.uniform();
    y[i] = rng.uniform() < p[i] ? 1 : 0;
    // Odd power around 0.5 keeps the side of the threshold.
    const double c = p[i] - 0.5;
    q[i] = 0.5 + 4.0 * c * c * c;
  }
  CHECK(accuracy(p, y) == accuracy(q, y));
}

TEST_CASE("csv parsing, diagnostics and round trip") {
  const auto d = parse_dataset_csv("x1,x2,y\n1,2,0\n3,4,1\n5,6,0\n");
  CHECK(d.rows() == 3);
  CHECK(d.cols() == 2);
  CHECK(d.labels() == std::vector<int>{0, 1, 0});
  CHECK(d.features()(2, 1) == 6.0);

  CHECK_THROWS_AS(parse_dataset_csv("x1,y\n1,2\n"), LoadError);
  CHECK_THROWS_AS(parse_dataset_csv("x1,z\n1,0\n"), LoadError);
  CHECK_THROWS_AS(parse_dataset_csv(""), LoadError);
  try {
    parse_dataset_csv("x1,y\n1,0\nabc,1\n");
    FAIL("expected a load error");
  } catch (const LoadError& e) {
    const std::string what = e.what();
    CHECK(what.find("x1") != std::string::npos);
    CHECK(what.find("row 2") != std::string::npos);
  }

  SeededRng rng(9);
  Matrix x(20, 3);
  std::vector<int> y(20);
  for (std::size_t i = 0; i < 20; ++i) {
    for (auto& v : x.row(i)) v = rng.normal() * 1e3;
    y[i] = static_cast<int>(i % 2);
  }
  const Dataset original(x, y);
  CHECK(parse_dataset_csv(dataset_to_csv(original)) == original);
}

TEST_CASE("atomic write replaces the file in one step") {
  const auto dir = std::filesystem::temp_directory_path() / "stackbench_core_io";
  std::filesystem::create_directories(dir);
  const auto path = dir / "out.txt";
  write_file_atomic(path, "first");
  write_file_atomic(path, "second");
  CHECK(read_file(path) == "second");
  CHECK_FALSE(std::filesystem::exists(path.string() + ".tmp"));
  CHECK_THROWS_AS(write_file_atomic(dir / "missing" / "x.txt", "x"), IoError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("format_double round-trips") {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 0.0}) CHECK(std::stod(format_double(v)) == v);
}

}
