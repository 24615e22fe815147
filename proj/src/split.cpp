#include "stackbench/split.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "stackbench/errors.hpp"

namespace stackbench {
namespace {

std::size_t rounded_count(double fraction, std::size_t n) {
  return static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
}

void check_fraction(double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw InvalidArgument("train_fraction must lie strictly between 0 and 1");
  }
}

}  // namespace

TrainTestSplit split(std::size_t n, double train_fraction, SeededRng& rng) {
  if (n < 2) throw InvalidArgument("split: need at least 2 rows");
  check_fraction(train_fraction);
  const std::size_t n_train = rounded_count(train_fraction, n);
  if (n_train == 0 || n_train == n) {
    throw InvalidArgument("split: fraction leaves one side empty");
  }
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(perm));

  TrainTestSplit out;
  out.train_fraction = train_fraction;
  out.train_indices.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  out.test_indices.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
  std::sort(out.train_indices.begin(), out.train_indices.end());
  std::sort(out.test_indices.begin(), out.test_indices.end());
  return out;
}

TrainTestSplit stratified_split(std::span<const int> labels, double train_fraction,
                                SeededRng& rng) {
  check_fraction(train_fraction);
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw InvalidArgument("stratified_split: non-binary label");
    by_class[labels[i]].push_back(i);
  }
  if (by_class[0].empty() || by_class[1].empty()) {
    throw InvalidArgument("stratified_split: both classes must be present");
  }
  TrainTestSplit out;
  out.train_fraction = train_fraction;
  for (auto& rows : by_class) {
    rng.shuffle(std::span<std::size_t>(rows));
    const std::size_t take = rounded_count(train_fraction, rows.size());
    out.train_indices.insert(out.train_indices.end(), rows.begin(),
                             rows.begin() + static_cast<std::ptrdiff_t>(take));
    out.test_indices.insert(out.test_indices.end(),
                            rows.begin() + static_cast<std::ptrdiff_t>(take), rows.end());
  }
  if (out.train_indices.empty() || out.test_indices.empty()) {
    throw InvalidArgument("stratified_split: fraction leaves one side empty");
  }
  std::sort(out.train_indices.begin(), out.train_indices.end());
  std::sort(out.test_indices.begin(), out.test_indices.end());
  return out;
}

std::vector<std::size_t> stratified_folds(std::span<const int> labels, std::size_t folds,
                                          SeededRng& rng) {
  if (folds < 2) throw InvalidArgument("stratified_folds: need at least 2 folds");
  if (folds > labels.size()) throw InvalidArgument("stratified_folds: more folds than rows");
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i] == 1].push_back(i);

  std::vector<std::size_t> fold_of(labels.size());
  // Class 1 continues dealing where class 0 stopped so fold sizes stay balanced.
  std::size_t next = 0;
  for (auto& rows : by_class) {
    rng.shuffle(std::span<std::size_t>(rows));
    for (std::size_t row : rows) {
      fold_of[row] = next;
      next = (next + 1) % folds;
    }
  }
  return fold_of;
}

std::vector<std::size_t> subsample_rows(std::size_t n, double fraction, SeededRng& rng) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw InvalidArgument("subsample fraction must lie in (0,1]");
  }
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  if (fraction == 1.0 || n == 0) return rows;
  const std::size_t take = std::max<std::size_t>(1, rounded_count(fraction, n));
  // Partial Fisher-Yates: the first `take` slots become a uniform sample.
  for (std::size_t i = 0; i < take; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(rows[i], rows[j]);
  }
  rows.resize(take);
  std::sort(rows.begin(), rows.end());
  return rows;
}

}  // namespace stackbench
