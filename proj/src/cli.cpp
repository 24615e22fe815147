#include "stackbench/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <thread>

#include "stackbench/bench.hpp"
#include "stackbench/ensembles.hpp"
#include "stackbench/errors.hpp"
#include "stackbench/io.hpp"
#include "stackbench/model.hpp"
#include "stackbench/rng.hpp"
#include "stackbench/simgen.hpp"

namespace stackbench {
namespace {

namespace fs = std::filesystem;

/// Input problems detected before any work starts.
struct PathError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require_input(const std::string& flag, const std::string& path) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) throw PathError(flag + ": no such file '" + path + "'");
}

void require_output(const std::string& flag, const std::string& path) {
  const fs::path p(path);
  if (p.filename().empty()) throw PathError(flag + ": not a file path '" + path + "'");
  const fs::path parent = p.parent_path().empty() ? fs::path(".") : p.parent_path();
  std::error_code ec;
  if (!fs::is_directory(parent, ec)) throw PathError(flag + ": directory does not exist '" + parent.string() + "'");
  if (fs::is_directory(p, ec)) throw PathError(flag + ": is a directory '" + path + "'");
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("STACKBENCH_SEED"); env != nullptr && *env != '\0') {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(env, &used);
      if (used == std::char_traits<char>::length(env)) return v;
    } catch (const std::exception&) {
    }
    throw InvalidArgument("STACKBENCH_SEED is not an unsigned integer");
  }
  return 0;
}

nlohmann::json read_json(const std::string& path) {
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw LoadError(path + ": " + e.what());
  }
}

struct SimulateArgs {
  std::string condition, out;
  std::size_t n = 0;
  std::optional<std::uint64_t> seed;
};

struct FitArgs {
  std::string algo, data, label = "y", model_out;
  std::optional<std::uint64_t> seed;
};

struct PredictArgs {
  std::string model, data, out, label = "y";
};

struct BenchArgs {
  std::string config, out, summary_out;
  std::optional<int> threads;
};

struct ReportArgs {
  std::string results, summary_out, plot_out;
};

void do_simulate(const SimulateArgs& a, std::ostream& out) {
  const SimCondition cond = condition_from_id(a.condition);
  require_output("--out", a.out);
  const auto seed = resolve_seed(a.seed);
  const auto sim = generate_with_trace(cond, a.n, seed);
  nlohmann::json meta{{"generator_version", kGeneratorVersion},
                      {"condition", condition_id(cond)},
                      {"misclassification_rate", cond.misclassification_rate ? nlohmann::json(*cond.misclassification_rate)
                                                                              : nlohmann::json(nullptr)},
                      {"n", a.n},
                      {"seed", seed},
                      {"flipped_count", sim.flipped.size()}};
  write_file_atomic(a.out, dataset_to_csv(sim.data));
  write_file_atomic(a.out + ".meta.json", meta.dump(2) + "\n");
  out << "wrote " << a.n << " rows to " << a.out << "\n";
}

void do_fit(const FitArgs& a, std::ostream& out) {
  const bool named = is_preset(a.algo);
  if (!named) require_input("--algo", a.algo);
  require_input("--data", a.data);
  require_output("--model-out", a.model_out);
  const auto seed = resolve_seed(a.seed);
  const AlgorithmSpec spec = named ? preset(a.algo) : algorithm_spec_from_json(read_json(a.algo));
  const Dataset data = load_csv(a.data, a.label);
  FittedModel model;
  if (named && a.algo == "dnn-tuned") {
    const auto base = std::get<MlpSpec>(std::get<LearnerSpec>(spec));
    const auto tuned = tune_mlp(default_dnn_grid(base), data, derive_seed(seed, hash_key("tune")));
    model = fit_algorithm(LearnerSpec(tuned.best), data, seed);
  } else {
    model = fit_algorithm(spec, data, seed);
  }
  write_file_atomic(a.model_out, save_model(model).dump() + "\n");
  out << "fitted " << model.family() << " on " << data.rows() << " rows -> " << a.model_out << "\n";
}

void do_predict(const PredictArgs& a, std::ostream& out) {
  require_input("--model", a.model);
  require_input("--data", a.data);
  require_output("--out", a.out);
  const FittedModel model = load_model(read_json(a.model));
  const Matrix x = load_feature_csv(a.data, a.label);
  const auto probs = model.predict(x);
  std::string text = "probability\n";
  for (double p : probs) text += format_double(p) + "\n";
  write_file_atomic(a.out, text);
  out << "scored " << probs.size() << " rows -> " << a.out << "\n";
}

void do_bench(const BenchArgs& a, std::ostream& out) {
  require_input("--config", a.config);
  require_output("--out", a.out);
  if (!a.summary_out.empty()) require_output("--summary-out", a.summary_out);
  BenchPlan plan = bench_plan_from_json(read_json(a.config));
  if (a.threads) plan.thread_count = *a.threads;
  if (!plan.thread_count) plan.thread_count = static_cast<int>(std::max(1U, std::thread::hardware_concurrency()));
  const auto rows = run(plan);
  write_file_atomic(a.out, results_csv(rows));
  if (!a.summary_out.empty()) write_file_atomic(a.summary_out, summary_csv(summarize(rows)));
  const auto failed = std::count_if(rows.begin(), rows.end(), [](const ResultRow& r) {
    return !r.error.empty() && r.error != "skipped";
  });
  out << "wrote " << rows.size() << " rows (" << failed << " failed fits) -> " << a.out << "\n";
}

void do_report(const ReportArgs& a, std::ostream& out) {
  require_input("--results", a.results);
  require_output("--summary-out", a.summary_out);
  require_output("--plot-out", a.plot_out);
  const auto rows = parse_results_csv(read_file(a.results));
  if (rows.empty()) throw LoadError(a.results + ": no result rows");
  const auto summary = summarize(rows);
  write_file_atomic(a.summary_out, summary_csv(summary));
  emit_plot(summary, a.plot_out);
  out << "summarized " << rows.size() << " rows into " << summary.size() << " groups\n";
}

}  // namespace

std::string version_text() {
  return "stackbench " + std::string("1.0.0") + " (model format " + std::to_string(kModelFormatVersion) +
         ", plan schema " + std::to_string(kPlanVersion) + ", generator " + std::to_string(kGeneratorVersion) + ")";
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Superlearner and deep-cascade benchmarks on simulated classification data", "stackbench"};
  app.set_version_flag("--version", version_text());
  app.require_subcommand(1, 1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Generate one simulated dataset as CSV");
  simulate->add_option("--condition", sim.condition, "Condition id, e.g. mixed-high-mis")->required();
  simulate->add_option("--n", sim.n, "Number of rows")->required()->check(CLI::Range(10, 100000000));
  simulate->add_option("--seed", sim.seed, "Seed (default: STACKBENCH_SEED, else 0)");
  simulate->add_option("--out", sim.out, "Output CSV")->required();

  FitArgs fa;
  auto* fitc = app.add_subcommand("fit", "Fit a preset or spec document to a CSV dataset");
  fitc->add_option("--algo", fa.algo, "Preset name or path to a JSON spec")->required();
  fitc->add_option("--data", fa.data, "Training CSV")->required();
  fitc->add_option("--label", fa.label, "Label column name");
  fitc->add_option("--seed", fa.seed, "Seed (default: STACKBENCH_SEED, else 0)");
  fitc->add_option("--model-out", fa.model_out, "Output model document")->required();

  PredictArgs pa;
  auto* predictc = app.add_subcommand("predict", "Score a CSV with a saved model");
  predictc->add_option("--model", pa.model, "Model document")->required();
  predictc->add_option("--data", pa.data, "Feature CSV (a label column is ignored)")->required();
  predictc->add_option("--label", pa.label, "Label column to drop if present");
  predictc->add_option("--out", pa.out, "Output CSV of probabilities")->required();

  BenchArgs ba;
  auto* benchc = app.add_subcommand("bench", "Run a benchmark plan");
  benchc->add_option("--config", ba.config, "Plan JSON")->required();
  benchc->add_option("--out", ba.out, "Results CSV")->required();
  benchc->add_option("--summary-out", ba.summary_out, "Optional summary CSV");
  benchc->add_option("--threads", ba.threads, "Worker threads (default: plan, else logical cores)")
      ->check(CLI::PositiveNumber);

  ReportArgs ra;
  auto* reportc = app.add_subcommand("report", "Summarize a results CSV and plot it");
  reportc->add_option("--results", ra.results, "Results CSV")->required();
  reportc->add_option("--summary-out", ra.summary_out, "Summary CSV")->required();
  reportc->add_option("--plot-out", ra.plot_out, "SVG plot")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return kExitOk;
    }
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (simulate->parsed()) do_simulate(sim, out);
    else if (fitc->parsed()) do_fit(fa, out);
    else if (predictc->parsed()) do_predict(pa, out);
    else if (benchc->parsed()) do_bench(ba, out);
    else if (reportc->parsed()) do_report(ra, out);
    return kExitOk;
  } catch (const InvalidSpec& e) {
    err << "error: " << e.what() << "\n";
  } catch (const FitError& e) {
    err << "fit error (" << e.family() << "): " << e.what() << "\n";
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
  }
  return kExitData;
}

}  // namespace stackbench
