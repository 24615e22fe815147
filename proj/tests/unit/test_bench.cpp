#include <doctest.h>

#include <cmath>

#include "stackbench/bench.hpp"
#include "stackbench/errors.hpp"
#include "stackbench/learners.hpp"
#include "stackbench/metrics.hpp"
#include "stackbench/rng.hpp"

using namespace stackbench;

namespace {

BenchPlan small_plan() {
  BenchPlan plan;
  plan.conditions = {condition_from_id("linear-low"), condition_from_id("mixed-high-mis")};
  plan.sizes = {120, 200};
  plan.replications = 2;
  plan.algorithms = {named_preset("knn5"), named_preset("fast-superlearner")};
  plan.algorithms[1].spec = [] {
    auto s = preset_fast_superlearner();
    s.folds = 5;
    return s;
  }();
  plan.master_seed = 99;
  return plan;
}

ResultRow row(const char* algo, std::size_t n, int rep, double acc, std::string error = "") {
  ResultRow r;
  r.condition = condition_from_id("linear-low");
  r.n = n;
  r.replication = rep;
  r.algorithm = algo;
  r.metrics.accuracy = acc;
  r.metrics.auc = acc;
  r.metrics.fnr = 1.0 - acc;
  r.metrics.fpr = 1.0 - acc;
  r.error = std::move(error);
  return r;
}

std::size_t count(const std::string& text, const std::string& what) {
  std::size_t c = 0;
  for (auto pos = text.find(what); pos != std::string::npos; pos = text.find(what, pos + 1)) ++c;
  return c;
}

}  // namespace

TEST_SUITE("bench") {

TEST_CASE("one row per cell and algorithm, in canonical order") {
  auto plan = small_plan();
  plan.thread_count = 1;
  const auto rows = run(plan);
  REQUIRE(rows.size() == 2 * 2 * 2 * 2);
  std::size_t k = 0;
  for (const auto& c : plan.conditions) {
    for (auto n : plan.sizes) {
      for (int r = 0; r < plan.replications; ++r) {
        for (const auto& a : plan.algorithms) {
          CHECK(rows[k].condition == c);
          CHECK(rows[k].n == n);
          CHECK(rows[k].replication == r);
          CHECK(rows[k].algorithm == a.name);
          CHECK(rows[k].cell_seed == cell_seed(plan.master_seed, c, n, r));
          CHECK(rows[k].error.empty());
          CHECK(std::isnan(rows[k].metrics.fit_seconds));
          ++k;
        }
      }
    }
  }
}

TEST_CASE("results do not depend on the thread count") {
  auto plan = small_plan();
  plan.thread_count = 1;
  const auto one = results_csv(run(plan));
  plan.thread_count = 4;
  CHECK(results_csv(run(plan)) == one);
}

TEST_CASE("cells share data across algorithms and differ across replications") {
  const auto c = condition_from_id("nonlinear-high");
  const auto a = make_cell(c, 300, 0.7, cell_seed(1, c, 300, 0));
  const auto b = make_cell(c, 300, 0.7, cell_seed(1, c, 300, 0));
  CHECK(a.train == b.train);
  CHECK(a.train.rows() == 210);
  CHECK(a.test.rows() == 90);
  CHECK_FALSE(make_cell(c, 300, 0.7, cell_seed(1, c, 300, 1)).train == a.train);
  CHECK(algorithm_seed(5, "knn5") != algorithm_seed(5, "deep-knn"));
  CHECK(condition_key(condition_catalog()[4]) == 4);
}

TEST_CASE("results csv round trip") {
  auto plan = small_plan();
  plan.sizes = {120};
  plan.replications = 1;
  const auto rows = run(plan);
  const auto text = results_csv(rows);
  CHECK(text.rfind("condition,relationship,noise,misclassification_rate,n,replication,algorithm,cell_seed,"
                   "accuracy,auc,fnr,fpr,fit_seconds,error\n", 0) == 0);
  CHECK(results_csv(parse_results_csv(text)) == text);
  CHECK_THROWS_AS(parse_results_csv("bad header\n"), LoadError);
}

TEST_CASE("summaries: mean, sample sd, and error rows") {
  const std::vector<ResultRow> rows{row("a", 100, 0, 0.8), row("a", 100, 1, 0.9), row("a", 100, 2, 0.7),
                                    row("b", 100, 0, 0.6), row("b", 100, 1, std::nan(""), "fit: boom")};
  const auto s = summarize(rows);
  REQUIRE(s.size() == 2);
  CHECK(s[0].algorithm == "a");
  CHECK(s[0].replications == 3);
  CHECK(s[0].accuracy.mean == doctest::Approx(0.8));
  CHECK(s[0].accuracy.sd == doctest::Approx(0.1));
  CHECK(s[1].replications == 1);
  CHECK(s[1].errors == 1);
  CHECK(s[1].accuracy.mean == doctest::Approx(0.6));
  CHECK(std::isnan(s[1].accuracy.sd));
  const auto csv = summary_csv(s);
  CHECK(csv.find("accuracy_mean") != std::string::npos);
  CHECK(csv.find("NA") != std::string::npos);
}

TEST_CASE("plot has one panel per condition and is deterministic") {
  std::vector<ResultRow> rows;
  for (const auto& c : condition_catalog()) {
    for (std::size_t n : {500u, 1000u, 2500u}) {
      for (const char* algo : {"knn5", "superlearner"}) {
        auto r = row(algo, n, 0, 0.6 + 0.1 * std::log10(static_cast<double>(n)) / 4.0);
        r.condition = c;
        rows.push_back(r);
      }
    }
  }
  const auto summary = summarize(rows);
  const auto svg = plot_svg(summary);
  CHECK(svg == plot_svg(summary));
  CHECK(svg.rfind("<svg", 0) == 0);
  for (const auto& c : condition_catalog()) CHECK(count(svg, "font-weight=\"bold\">" + condition_id(c) + "<") == 1);
  CHECK(count(svg, "<g>") == 9);
}

TEST_CASE("plans validate and round-trip") {
  const auto plan = small_plan();
  const auto back = bench_plan_from_json(to_json(plan));
  CHECK(to_json(back) == to_json(plan));
  auto doc = to_json(plan);
  doc.erase("version");
  CHECK_THROWS_AS(bench_plan_from_json(doc), InvalidSpec);
  doc = to_json(plan);
  doc["bogus"] = 1;
  CHECK_THROWS_AS(bench_plan_from_json(doc), InvalidSpec);
  doc = nlohmann::json{{"version", 1}, {"conditions", {"linear-low"}}, {"sizes", {100}}, {"algorithms", {"knn5", "dnn-tuned"}}};
  const auto parsed = bench_plan_from_json(doc);
  CHECK(parsed.algorithms[1].tune);
  CHECK(parsed.replications == 10);
  auto dup = small_plan();
  dup.algorithms.push_back(dup.algorithms[0]);
  CHECK_THROWS_AS(validate(dup), InvalidSpec);
}

TEST_CASE("desk plan shape") {
  const auto p = desk_plan(0);
  CHECK(p.conditions.size() == 9);
  CHECK(p.sizes == std::vector<std::size_t>{500, 1000, 2500, 5000, 10000});
  CHECK(p.replications == 10);
  CHECK(p.algorithms.size() == 8);
  CHECK(p.heavy_min_size.value() == 5000);
  CHECK_NOTHROW(validate(p));
}

TEST_CASE("heavy sizes skip the trimmed algorithms") {
  auto plan = small_plan();
  plan.sizes = {120, 200};
  plan.replications = 1;
  plan.conditions.resize(1);
  plan.heavy_min_size = 200;
  plan.heavy_algorithms = {"knn5"};
  const auto rows = run(plan);
  REQUIRE(rows.size() == 4);
  CHECK(rows[1].error.empty());
  CHECK(rows[3].error == "skipped");
  CHECK(std::isnan(rows[3].metrics.accuracy));
}

TEST_CASE("tuning picks the best validation accuracy, first on ties") {
  MlpSpec base;
  base.hidden_sizes = {3, 1};
  const auto grid = default_dnn_grid(base);
  REQUIRE(grid.size() == 16);
  CHECK(grid[0].learning_rate == 0.01);
  CHECK(grid[0].momentum == 0.0);
  CHECK(grid[0].batch_size == 16);
  CHECK(grid[0].epochs == 50);
  CHECK(grid[1].epochs == 200);
  CHECK(grid[15].learning_rate == 0.1);
  for (const auto& g : grid) CHECK(g.hidden_sizes == base.hidden_sizes);

  std::vector<MlpSpec> small(grid.begin(), grid.begin() + 4);
  for (auto& g : small) g.epochs = 5;
  const auto train = generate(condition_from_id("linear-low"), 200, 3);
  const auto t = tune_mlp(small, train, 7);
  REQUIRE(t.validation_accuracy.size() == 4);
  CHECK(t.fit_part.rows() == 160);
  CHECK(t.validation_part.rows() == 40);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(t.validation_accuracy[i] <= t.validation_accuracy[t.best_index]);
    if (i < t.best_index) CHECK(t.validation_accuracy[i] < t.validation_accuracy[t.best_index]);
    double mean = 0.0;
    for (int r = 0; r < kTuneRestarts; ++r) {
      const auto m = fit(LearnerSpec(small[i]), t.fit_part, derive_seed(7, hash_key("fit"), r));
      mean += accuracy(m.predict(t.validation_part.features()), t.validation_part.labels()) / kTuneRestarts;
    }
    CHECK(mean == t.validation_accuracy[i]);
  }
  CHECK(t.best.learning_rate == small[t.best_index].learning_rate);
}

}
