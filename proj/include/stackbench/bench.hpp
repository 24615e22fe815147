#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "stackbench/dataset.hpp"
#include "stackbench/ensembles.hpp"
#include "stackbench/learner_spec.hpp"
#include "stackbench/metrics.hpp"
#include "stackbench/simgen.hpp"

namespace stackbench {

inline constexpr int kPlanVersion = 1;

struct NamedAlgorithm {
  std::string name;
  AlgorithmSpec spec;
  /// Grid-tune this MLP once per (condition, n) before the cells run.
  bool tune = false;
};

/// Preset by name; "dnn-tuned" comes back with tune = true.
NamedAlgorithm named_preset(std::string_view name);

struct BenchPlan {
  std::vector<SimCondition> conditions;
  std::vector<std::size_t> sizes;
  int replications = 10;
  std::vector<NamedAlgorithm> algorithms;
  double train_fraction = 0.7;
  std::uint64_t master_seed = 0;
  std::optional<int> thread_count;
  /// Wall-clock fit times make output bytes depend on the machine; off by
  /// default so results files are reproducible.
  bool record_timing = false;
  /// Cells with n >= heavy_min_size run only heavy_algorithms; the rest
  /// emit rows tagged "skipped".
  std::optional<std::size_t> heavy_min_size;
  std::vector<std::string> heavy_algorithms;
};

/// Throws InvalidSpec on any violated invariant.
void validate(const BenchPlan& plan);
nlohmann::json to_json(const BenchPlan& plan);
BenchPlan bench_plan_from_json(const nlohmann::json& doc);

/// All nine conditions, sizes 500..10000, 10 replications, every preset;
/// n >= 5000 trimmed to the cheaper algorithms.
BenchPlan desk_plan(std::uint64_t master_seed);

struct ResultRow {
  SimCondition condition;
  std::size_t n = 0;
  int replication = 0;
  std::string algorithm;
  std::uint64_t cell_seed = 0;
  MetricReport metrics;
  std::string error;  // empty on success
};

/// Stable key of a condition: its catalog position, or a hash of its id and
/// flip rate for conditions outside the catalog.
std::uint64_t condition_key(const SimCondition& c);
std::uint64_t cell_seed(std::uint64_t master_seed, const SimCondition& c, std::size_t n, int replication);
std::uint64_t algorithm_seed(std::uint64_t cell_seed, std::string_view algorithm);

/// The generated dataset and train/test split every algorithm in a cell sees.
struct Cell {
  Dataset train;
  Dataset test;
};
Cell make_cell(const SimCondition& c, std::size_t n, double train_fraction, std::uint64_t cell_seed);

/// Rows in canonical (condition, size, replication, algorithm) order, at any
/// thread count. Fit failures become rows with NaN metrics and an error tag.
std::vector<ResultRow> run(const BenchPlan& plan);

std::string results_csv(const std::vector<ResultRow>& rows);
std::vector<ResultRow> parse_results_csv(std::string_view text);

struct MetricSummary {
  double mean = 0.0;
  double sd = 0.0;  // sample sd; NaN with fewer than two values
};

struct SummaryRow {
  SimCondition condition;
  std::size_t n = 0;
  std::string algorithm;
  int replications = 0;  // rows without an error tag
  int errors = 0;
  MetricSummary accuracy, auc, fnr, fpr, fit_seconds;
};

/// Per (condition, n, algorithm) in order of first appearance. Error rows are
/// counted but excluded from the means.
std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows);
std::string summary_csv(const std::vector<SummaryRow>& rows);

/// One panel per condition: mean accuracy against n on a log axis.
std::string plot_svg(const std::vector<SummaryRow>& summary);
void emit_plot(const std::vector<SummaryRow>& summary, const std::filesystem::path& path);

/// lr {0.01, 0.1} x momentum {0, 0.9} x batch {16, 64} x epochs {50, 200},
/// nested in that order, other fields from `base`.
std::vector<MlpSpec> default_dnn_grid(const MlpSpec& base);

/// Random restarts averaged into each grid member's validation score.
inline constexpr int kTuneRestarts = 3;

struct TuneResult {
  MlpSpec best;
  std::size_t best_index = 0;
  std::vector<double> validation_accuracy;  // mean over restarts; NaN on fit failure
  Dataset fit_part;
  Dataset validation_part;
};

/// Fits each grid member kTuneRestarts times on the 80% part of a stratified
/// 80/20 split of `train`; highest mean validation accuracy wins, first in
/// grid order on ties.
TuneResult tune_mlp(const std::vector<MlpSpec>& grid, const Dataset& train, std::uint64_t seed);

/// Generates (condition, n), keeps its training share and tunes on it.
TuneResult tune_dnn(const std::vector<MlpSpec>& grid, const SimCondition& c, std::size_t n, std::uint64_t seed,
                    double train_fraction = 0.7);

}  // namespace stackbench
