#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "stackbench/rng.hpp"

namespace stackbench {

struct TrainTestSplit {
  std::vector<std::size_t> train_indices;  // ascending
  std::vector<std::size_t> test_indices;   // ascending
  double train_fraction = 0.0;
};

/// Uniformly random split with |train| = round(train_fraction * n).
TrainTestSplit split(std::size_t n, double train_fraction, SeededRng& rng);

/// Per-class split: each class contributes round(train_fraction * n_class)
/// rows to train. Both classes must be present.
TrainTestSplit stratified_split(std::span<const int> labels, double train_fraction,
                                SeededRng& rng);

/// Fold id in [0, folds) per row; each class is shuffled and dealt
/// round-robin, so every fold holds both classes once min class count >= folds.
std::vector<std::size_t> stratified_folds(std::span<const int> labels, std::size_t folds,
                                          SeededRng& rng);

/// round(fraction * n) distinct rows drawn without replacement, ascending.
/// fraction == 1 returns 0..n-1.
std::vector<std::size_t> subsample_rows(std::size_t n, double fraction, SeededRng& rng);

}  // namespace stackbench
