// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
// STACKBENCH_ACCEPTANCE_FULL=1 runs the determinism check on the full desk plan.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "stackbench/bench.hpp"
#include "stackbench/boost.hpp"
#include "stackbench/ensembles.hpp"
#include "stackbench/kdtree.hpp"
#include "stackbench/learners.hpp"
#include "stackbench/metrics.hpp"
#include "stackbench/mlp.hpp"
#include "stackbench/nnls.hpp"
#include "stackbench/rng.hpp"
#include "stackbench/simgen.hpp"

using namespace stackbench;

namespace {

constexpr std::uint64_t kMaster = 20240601;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

/// Mean test accuracy per (condition id, n, algorithm) over error-free rows.
std::map<std::string, double> mean_accuracy(const std::vector<ResultRow>& rows) {
  std::map<std::string, double> out;
  for (const auto& s : summarize(rows)) {
    out[condition_id(s.condition) + "/" + std::to_string(s.n) + "/" + s.algorithm] = s.accuracy.mean;
  }
  return out;
}

int errors_in(const std::vector<ResultRow>& rows) {
  return static_cast<int>(std::count_if(rows.begin(), rows.end(), [](const ResultRow& r) { return !r.error.empty(); }));
}

BenchPlan base_plan(std::vector<SimCondition> conditions, std::vector<std::size_t> sizes) {
  BenchPlan plan;
  plan.conditions = std::move(conditions);
  plan.sizes = std::move(sizes);
  plan.replications = 10;
  plan.master_seed = kMaster;
  plan.thread_count = 1;
  return plan;
}

Outcome oracle_dominance() {
  auto plan = base_plan(condition_catalog(), {2500});
  plan.algorithms.push_back(named_preset("superlearner"));
  const std::vector<std::string> names{"random_forest", "random_ferns", "knn", "mars", "ctree", "boost"};
  const auto bases = preset_superlearner().base_specs;
  for (std::size_t i = 0; i < bases.size(); ++i) plan.algorithms.push_back({names[i], bases[i], false});
  const auto rows = run(plan);
  const auto acc = mean_accuracy(rows);
  double worst_margin = std::numeric_limits<double>::infinity();
  std::string worst;
  for (const auto& c : plan.conditions) {
    const std::string key = condition_id(c) + "/2500/";
    double best = 0.0;
    for (const auto& n : names) best = std::max(best, acc.at(key + n));
    const double margin = acc.at(key + "superlearner") - best;
    if (margin < worst_margin) worst_margin = margin, worst = condition_id(c);
  }
  return {worst_margin >= -0.02 && errors_in(rows) == 0,
          "superlearner minus best base, worst " + fmt("%+.4f", worst_margin) + " on " + worst +
              " (errors " + std::to_string(errors_in(rows)) + ")"};
}

Outcome small_sample_trend() {
  auto plan = base_plan({condition_from_id("nonlinear-high-mis")}, {500, 1000});
  plan.algorithms = {named_preset("superlearner"), named_preset("dnn-tuned")};
  const auto rows = run(plan);
  const auto acc = mean_accuracy(rows);
  int wins = 0;
  double worst = std::numeric_limits<double>::infinity();
  std::string detail;
  for (std::size_t n : plan.sizes) {
    const std::string key = "nonlinear-high-mis/" + std::to_string(n) + "/";
    const double d = acc.at(key + "superlearner") - acc.at(key + "dnn-tuned");
    wins += d > 0.0 ? 1 : 0;
    worst = std::min(worst, d);
    detail += "n=" + std::to_string(n) + " sl " + fmt("%.4f", acc.at(key + "superlearner")) + " vs dnn " +
              fmt("%.4f", acc.at(key + "dnn-tuned")) + "; ";
  }
  return {wins >= 1 && worst >= -0.01 && errors_in(rows) == 0, detail};
}

Outcome linear_trend() {
  const auto c = condition_from_id("linear-low");
  auto plan = base_plan({c}, {10000});
  plan.algorithms = {named_preset("dnn-tuned")};
  const auto rows = run(plan);
  const double dnn = mean_accuracy(rows).at("linear-low/10000/dnn-tuned");
  const double bayes = bayes_accuracy(c, 1000000, kMaster);
  return {std::abs(dnn - bayes) <= 0.03 && errors_in(rows) == 0,
          "dnn-tuned " + fmt("%.4f", dnn) + ", bayes " + fmt("%.4f", bayes)};
}

Outcome knn_formulations() {
  auto plan = base_plan({condition_from_id("nonlinear-low")}, {1000});
  plan.algorithms = {named_preset("knn-superlearner"), named_preset("knn5"), named_preset("deep-knn")};
  const auto rows = run(plan);
  const auto acc = mean_accuracy(rows);
  const double sl = acc.at("nonlinear-low/1000/knn-superlearner");
  const double k5 = acc.at("nonlinear-low/1000/knn5");
  const double deep = acc.at("nonlinear-low/1000/deep-knn");
  return {sl >= k5 + 0.01 && sl >= deep - 0.005 && errors_in(rows) == 0,
          "knn-superlearner " + fmt("%.4f", sl) + ", knn5 " + fmt("%.4f", k5) + ", deep-knn " + fmt("%.4f", deep)};
}

Outcome kdtree_exact() {
  SeededRng rng(derive_seed(kMaster, hash_key("kdtree")));
  Matrix pts(1000, 13);
  for (auto& v : pts.values()) v = rng.normal();
  const KdTree tree(pts);
  int mismatches = 0;
  for (int q = 0; q < 1000; ++q) {
    std::vector<double> point(13);
    for (auto& v : point) v = rng.normal();
    for (std::size_t k : {1u, 5u, 25u}) {
      // Oracle: full sort of squared distances.
      std::vector<std::pair<double, std::size_t>> all;
      for (std::size_t i = 0; i < pts.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < 13; ++j) s += (pts(i, j) - point[j]) * (pts(i, j) - point[j]);
        all.emplace_back(s, i);
      }
      std::sort(all.begin(), all.end());
      std::vector<std::size_t> want, got;
      for (std::size_t i = 0; i < k; ++i) want.push_back(all[i].second);
      for (const auto& n : tree.query(point, k)) got.push_back(n.index);
      std::sort(want.begin(), want.end());
      std::sort(got.begin(), got.end());
      mismatches += want == got ? 0 : 1;
    }
  }
  return {mismatches == 0, std::to_string(mismatches) + " mismatching neighbor sets of 3000"};
}

Outcome nnls_optimality() {
  SeededRng rng(derive_seed(kMaster, hash_key("nnls")));
  double worst_gap = -1.0, worst_sum = 0.0;
  bool nonneg = true;
  for (int t = 0; t < 20; ++t) {
    Matrix z(30, 3);
    std::vector<double> y(30);
    for (std::size_t i = 0; i < 30; ++i) {
      y[i] = rng.uniform() < 0.5 ? 0.0 : 1.0;
      for (auto& v : z.row(i)) v = std::clamp(y[i] + 0.5 * rng.normal(), 0.0, 1.0);
    }
    const auto w = nnls_solve(z, y).weights;
    double grid = std::numeric_limits<double>::infinity();
    for (int a = 0; a <= 100; ++a) {
      for (int b = 0; a + b <= 100; ++b) {
        const std::vector<double> g{a / 100.0, b / 100.0, (100 - a - b) / 100.0};
        grid = std::min(grid, combination_rss(z, y, g));
      }
    }
    worst_gap = std::max(worst_gap, combination_rss(z, y, w) - grid);
    double sum = 0.0;
    for (double v : w) {
      nonneg = nonneg && v >= 0.0;
      sum += v;
    }
    worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
  }
  return {worst_gap <= 1e-6 && nonneg && worst_sum <= 1e-12,
          "max rss excess over grid " + fmt("%.3g", worst_gap) + ", max |sum-1| " + fmt("%.3g", worst_sum)};
}

Outcome mlp_gradient() {
  SeededRng rng(derive_seed(kMaster, hash_key("gradient")));
  MlpNetwork net(13, std::vector<int>{5, 3});
  net.initialize(rng);
  Matrix x(8, 13);
  for (auto& v : x.values()) v = rng.normal();
  std::vector<double> y(8);
  for (auto& v : y) v = rng.uniform() < 0.5 ? 0.0 : 1.0;
  std::vector<double> grad;
  net.loss(x, y, &grad);
  auto params = net.parameters();
  double worst = 0.0;
  const double h = 1e-5;
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double keep = params[k];
    params[k] = keep + h;
    net.set_parameters(params);
    const double up = net.loss(x, y, nullptr);
    params[k] = keep - h;
    net.set_parameters(params);
    const double down = net.loss(x, y, nullptr);
    params[k] = keep;
    const double fd = (up - down) / (2.0 * h);
    worst = std::max(worst, std::abs(fd - grad[k]) / std::max(1e-8, std::abs(fd) + std::abs(grad[k])));
  }
  return {worst < 1e-4, "max relative error " + fmt("%.3g", worst) + " over " + std::to_string(params.size()) +
                            " parameters"};
}

Outcome boosting_monotone() {
  int violations = 0, rounds = 0;
  for (const auto& c : condition_catalog()) {
    const auto d = generate(c, 500, derive_seed(kMaster, hash_key("boost"), condition_key(c)));
    const auto m = fit(BoostSpec{}, d, kMaster);
    const auto& loss = m.as<BoostModel>()->training_loss();
    for (std::size_t r = 1; r < loss.size(); ++r, ++rounds) violations += loss[r] > loss[r - 1] ? 1 : 0;
  }
  return {violations == 0, std::to_string(violations) + " increases over " + std::to_string(rounds) + " rounds"};
}

Outcome flip_fidelity() {
  const double rate = GeneratorParams{}.default_flip_rate, n = 10000.0;
  // Exact 99% binomial acceptance region by cumulative probabilities.
  std::vector<double> pmf(10001);
  for (int k = 0; k <= 10000; ++k) {
    pmf[k] = std::exp(std::lgamma(n + 1) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1) + k * std::log(rate) +
                      (n - k) * std::log1p(-rate));
  }
  int lo = 0, hi = 10000;
  for (double c = 0.0; c + pmf[lo] <= 0.005; ++lo) c += pmf[lo];
  for (double c = 0.0; c + pmf[hi] <= 0.005; --hi) c += pmf[hi];
  // Flip draws do not depend on the relationship, so one condition covers all three.
  const auto c = condition_from_id("mixed-high-mis");
  const auto flips = [&](std::uint64_t seed) {
    return static_cast<int>(generate_with_trace(c, 10000, seed).flipped.size());
  };
  int outside = 0;
  for (std::uint64_t s = 0; s < 20; ++s) outside += flips(s) < lo || flips(s) > hi ? 1 : 0;
  // Calibration: over many seeds about 1% should fall outside.
  int wide = 0;
  const int calibration = 1000;
  for (std::uint64_t s = 1000; s < 1000 + calibration; ++s) {
    const int k = flips(s);
    wide += k < lo || k > hi ? 1 : 0;
  }
  const double rate_outside = static_cast<double>(wide) / calibration;
  return {outside == 0 && rate_outside <= 0.02,
          std::to_string(outside) + " of 20 seeds outside [" + std::to_string(lo) + ", " + std::to_string(hi) +
              "] flips; " + fmt("%.1f", 100.0 * rate_outside) + "% outside over 1000 further seeds"};
}

Outcome determinism() {
  BenchPlan plan = desk_plan(kMaster);
  const bool full = std::getenv("STACKBENCH_ACCEPTANCE_FULL") != nullptr &&
                    std::string(std::getenv("STACKBENCH_ACCEPTANCE_FULL")) == "1";
  if (!full) {
    plan.sizes = {500, 1000};
    plan.replications = 2;
  }
  plan.thread_count = 1;
  const auto one = results_csv(run(plan));
  plan.thread_count = 8;
  const auto eight = results_csv(run(plan));
  const auto rows = std::count(one.begin(), one.end(), '\n') - 1;
  return {one == eight, std::string(full ? "full" : "reduced") + " desk plan, " + std::to_string(rows) +
                            " rows, " + (one == eight ? "identical" : "different") + " bytes at 1 and 8 threads"};
}

Outcome fast_economy() {
  const auto c = condition_from_id("mixed-high");
  double t_full = 0.0, t_fast = 0.0, a_full = 0.0, a_fast = 0.0;
  const int reps = 3;
  for (int r = 0; r < reps; ++r) {
    const auto seed = cell_seed(kMaster, c, 10000, r);
    const auto cell = make_cell(c, 10000, 0.7, seed);
    const auto full = fit_algorithm(preset_superlearner(), cell.train, algorithm_seed(seed, "superlearner"));
    const auto fast = fit_algorithm(preset_fast_superlearner(), cell.train, algorithm_seed(seed, "fast-superlearner"));
    t_full += full.fit_seconds();
    t_fast += fast.fit_seconds();
    a_full += accuracy(full.predict(cell.test.features()), cell.test.labels()) / reps;
    a_fast += accuracy(fast.predict(cell.test.features()), cell.test.labels()) / reps;
  }
  return {t_fast < 0.5 * t_full && std::abs(a_fast - a_full) <= 0.02,
          "fit time " + fmt("%.1f", t_fast) + " s vs " + fmt("%.1f", t_full) + " s, accuracy " + fmt("%.4f", a_fast) +
              " vs " + fmt("%.4f", a_full)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"superlearner within 0.02 of its best base learner on all 9 conditions at n=2500", oracle_dominance},
      {"superlearner beats tuned DNN on nonlinear-high-mis at small n", small_sample_trend},
      {"tuned DNN within 0.03 of Bayes accuracy on linear-low at n=10000", linear_trend},
      {"KNN superlearner vs single and deep KNN on nonlinear-low at n=1000", knn_formulations},
      {"kd-tree neighbor sets equal brute force", kdtree_exact},
      {"simplex least squares at least as good as a 0.01 grid", nnls_optimality},
      {"13-5-3-1 backprop matches central differences", mlp_gradient},
      {"boosting training loss non-increasing on all conditions", boosting_monotone},
      {"flip counts inside the 99% binomial interval", flip_fidelity},
      {"bench results byte-identical at 1 and 8 threads", determinism},
      {"fast superlearner under half the fit time at equal accuracy", fast_economy},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failures += o.pass ? 0 : 1;
    std::printf("%s criterion %zu: %s (%s) [%.0f s]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
