#include "stackbench/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include "stackbench/errors.hpp"
#include "stackbench/io.hpp"
#include "stackbench/learners.hpp"
#include "stackbench/rng.hpp"
#include "stackbench/split.hpp"

namespace stackbench {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr const char* kSkipped = "skipped";

const char* const kResultsHeader =
    "condition,relationship,noise,misclassification_rate,n,replication,algorithm,cell_seed,accuracy,auc,fnr,fpr,"
    "fit_seconds,error";

std::string num(double v) { return std::isnan(v) ? "NA" : format_double(v); }

std::string sanitize(std::string s) {
  for (char& ch : s) {
    if (ch == ',' || ch == '\n' || ch == '\r' || ch == '"') ch = ';';
  }
  return s.empty() ? "error" : s;
}

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn) {
  threads = std::max(1U, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

SimCondition condition_from_json(const nlohmann::json& doc) {
  if (doc.is_string()) return condition_from_id(doc.get<std::string>());
  SimCondition c;
  const auto rel = doc.at("relationship").get<std::string>();
  if (rel == "linear") c.relationship = Relationship::linear;
  else if (rel == "nonlinear") c.relationship = Relationship::nonlinear;
  else if (rel == "mixed") c.relationship = Relationship::mixed;
  else throw InvalidSpec("plan: unknown relationship '" + rel + "'");
  const auto noise = doc.at("noise").get<std::string>();
  if (noise == "low") c.noise = NoiseLevel::low;
  else if (noise == "high") c.noise = NoiseLevel::high;
  else throw InvalidSpec("plan: unknown noise level '" + noise + "'");
  if (doc.contains("misclassification_rate") && !doc.at("misclassification_rate").is_null()) {
    c.misclassification_rate = doc.at("misclassification_rate").get<double>();
  }
  try {
    validate(c);
  } catch (const InvalidArgument& e) {
    throw InvalidSpec(std::string("plan: ") + e.what());
  }
  return c;
}

nlohmann::json condition_to_json(const SimCondition& c) {
  nlohmann::json doc{{"relationship", relationship_name(c.relationship)}, {"noise", noise_name(c.noise)}};
  doc["misclassification_rate"] =
      c.misclassification_rate ? nlohmann::json(*c.misclassification_rate) : nlohmann::json(nullptr);
  return doc;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.emplace_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_num(const std::string& s, std::size_t line) {
  if (s == "NA") return kNaN;
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw LoadError("results line " + std::to_string(line) + ": bad number '" + s + "'");
  }
}

MetricSummary summarize_values(const std::vector<double>& values) {
  std::vector<double> v;
  for (double x : values) {
    if (!std::isnan(x)) v.push_back(x);
  }
  if (v.empty()) return {kNaN, kNaN};
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  if (v.size() < 2) return {mean, kNaN};
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

std::string fixed(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------- plans

NamedAlgorithm named_preset(std::string_view name) {
  return {std::string(name), preset(name), name == "dnn-tuned"};
}

void validate(const BenchPlan& plan) {
  if (plan.conditions.empty()) throw InvalidSpec("plan: conditions must be non-empty");
  for (const auto& c : plan.conditions) {
    try {
      validate(c);
    } catch (const InvalidArgument& e) {
      throw InvalidSpec(std::string("plan: ") + e.what());
    }
  }
  if (plan.sizes.empty()) throw InvalidSpec("plan: sizes must be non-empty");
  for (std::size_t i = 0; i < plan.sizes.size(); ++i) {
    if (plan.sizes[i] < 10) throw InvalidSpec("plan: sizes must be >= 10");
    if (i > 0 && plan.sizes[i] <= plan.sizes[i - 1]) throw InvalidSpec("plan: sizes must be strictly ascending");
  }
  if (plan.replications < 1) throw InvalidSpec("plan: replications must be >= 1");
  if (plan.algorithms.empty()) throw InvalidSpec("plan: algorithms must be non-empty");
  std::set<std::string> names;
  for (const auto& a : plan.algorithms) {
    if (a.name.empty()) throw InvalidSpec("plan: algorithm names must be non-empty");
    if (!names.insert(a.name).second) throw InvalidSpec("plan: duplicate algorithm name '" + a.name + "'");
    validate(a.spec);
    if (a.tune) {
      const auto* l = std::get_if<LearnerSpec>(&a.spec);
      if (l == nullptr || !std::holds_alternative<MlpSpec>(*l)) {
        throw InvalidSpec("plan: only mlp algorithms can be tuned ('" + a.name + "')");
      }
    }
  }
  if (!(plan.train_fraction > 0.0 && plan.train_fraction < 1.0)) {
    throw InvalidSpec("plan: train_fraction must be in (0,1)");
  }
  if (plan.thread_count && *plan.thread_count < 1) throw InvalidSpec("plan: thread_count must be >= 1");
  for (const auto& h : plan.heavy_algorithms) {
    if (!names.contains(h)) throw InvalidSpec("plan: heavy algorithm '" + h + "' is not in the plan");
  }
}

nlohmann::json to_json(const BenchPlan& plan) {
  nlohmann::json doc;
  doc["version"] = kPlanVersion;
  doc["conditions"] = nlohmann::json::array();
  for (const auto& c : plan.conditions) doc["conditions"].push_back(condition_to_json(c));
  doc["sizes"] = plan.sizes;
  doc["replications"] = plan.replications;
  doc["algorithms"] = nlohmann::json::array();
  for (const auto& a : plan.algorithms) {
    doc["algorithms"].push_back({{"name", a.name}, {"spec", to_json(a.spec)}, {"tune", a.tune}});
  }
  doc["train_fraction"] = plan.train_fraction;
  doc["master_seed"] = plan.master_seed;
  if (plan.thread_count) doc["thread_count"] = *plan.thread_count;
  doc["record_timing"] = plan.record_timing;
  if (plan.heavy_min_size) {
    doc["heavy"] = {{"min_size", *plan.heavy_min_size}, {"algorithms", plan.heavy_algorithms}};
  }
  return doc;
}

BenchPlan bench_plan_from_json(const nlohmann::json& doc) {
  BenchPlan plan;
  try {
    if (!doc.is_object()) throw InvalidSpec("plan: not a JSON object");
    if (!doc.contains("version")) throw InvalidSpec("plan: missing version");
    if (doc.at("version").get<int>() != kPlanVersion) throw InvalidSpec("plan: unsupported version");
    static const std::set<std::string> allowed{"version",     "conditions",    "sizes",         "replications",
                                               "algorithms",  "train_fraction", "master_seed",  "thread_count",
                                               "record_timing", "heavy"};
    for (const auto& [key, value] : doc.items()) {
      if (!allowed.contains(key)) throw InvalidSpec("plan: unknown field '" + key + "'");
    }
    for (const auto& c : doc.at("conditions")) plan.conditions.push_back(condition_from_json(c));
    plan.sizes = doc.at("sizes").get<std::vector<std::size_t>>();
    plan.replications = doc.value("replications", plan.replications);
    for (const auto& a : doc.at("algorithms")) {
      if (a.is_string()) {
        plan.algorithms.push_back(named_preset(a.get<std::string>()));
        continue;
      }
      NamedAlgorithm named;
      named.name = a.at("name").get<std::string>();
      if (a.contains("spec")) {
        named.spec = algorithm_spec_from_json(a.at("spec"));
        named.tune = a.value("tune", false);
      } else {
        named = named_preset(named.name);
        named.tune = a.value("tune", named.tune);
      }
      plan.algorithms.push_back(std::move(named));
    }
    plan.train_fraction = doc.value("train_fraction", plan.train_fraction);
    plan.master_seed = doc.value("master_seed", plan.master_seed);
    if (doc.contains("thread_count")) plan.thread_count = doc.at("thread_count").get<int>();
    plan.record_timing = doc.value("record_timing", plan.record_timing);
    if (doc.contains("heavy")) {
      const auto& h = doc.at("heavy");
      plan.heavy_min_size = h.at("min_size").get<std::size_t>();
      plan.heavy_algorithms = h.at("algorithms").get<std::vector<std::string>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidSpec(std::string("plan: ") + e.what());
  }
  validate(plan);
  return plan;
}

BenchPlan desk_plan(std::uint64_t master_seed) {
  BenchPlan plan;
  plan.conditions = condition_catalog();
  plan.sizes = {500, 1000, 2500, 5000, 10000};
  plan.replications = 10;
  for (const auto& name : preset_names()) plan.algorithms.push_back(named_preset(name));
  plan.master_seed = master_seed;
  plan.heavy_min_size = 5000;
  plan.heavy_algorithms = {"fast-superlearner", "knn5", "knn-superlearner", "dnn-mirror", "dnn-tuned"};
  return plan;
}

// ---------------------------------------------------------------- cells

std::uint64_t condition_key(const SimCondition& c) {
  const auto catalog = condition_catalog();
  for (std::size_t i = 0; i < catalog.size(); ++i) {
    if (catalog[i] == c) return i;
  }
  return hash_key(condition_id(c) + ":" + format_double(c.misclassification_rate.value_or(0.0)));
}

std::uint64_t cell_seed(std::uint64_t master_seed, const SimCondition& c, std::size_t n, int replication) {
  return derive_seed(master_seed, condition_key(c), n, static_cast<std::uint64_t>(replication));
}

std::uint64_t algorithm_seed(std::uint64_t cell, std::string_view algorithm) {
  return derive_seed(cell, hash_key(algorithm));
}

Cell make_cell(const SimCondition& c, std::size_t n, double train_fraction, std::uint64_t cell) {
  const Dataset data = generate(c, n, derive_seed(cell, hash_key("data")));
  SeededRng rng(derive_seed(cell, hash_key("split")));
  const auto parts = stratified_split(data.labels(), train_fraction, rng);
  return {data.subset(parts.train_indices), data.subset(parts.test_indices)};
}

std::vector<ResultRow> run(const BenchPlan& plan) {
  validate(plan);
  const unsigned threads = plan.thread_count ? static_cast<unsigned>(*plan.thread_count)
                                             : std::max(1U, std::thread::hardware_concurrency());
  const std::set<std::string> heavy(plan.heavy_algorithms.begin(), plan.heavy_algorithms.end());
  const auto skipped = [&](const NamedAlgorithm& a, std::size_t n) {
    return plan.heavy_min_size && n >= *plan.heavy_min_size && !heavy.contains(a.name);
  };

  // Tuned specs per (algorithm, condition, size), computed up front so every
  // replication of a cell uses the same network shape and knobs.
  struct TuneTask {
    std::size_t algo, cond, size;
  };
  std::vector<TuneTask> tasks;
  for (std::size_t a = 0; a < plan.algorithms.size(); ++a) {
    if (!plan.algorithms[a].tune) continue;
    for (std::size_t c = 0; c < plan.conditions.size(); ++c) {
      for (std::size_t s = 0; s < plan.sizes.size(); ++s) {
        if (!skipped(plan.algorithms[a], plan.sizes[s])) tasks.push_back({a, c, s});
      }
    }
  }
  std::vector<std::optional<AlgorithmSpec>> tuned(tasks.size());
  std::map<std::tuple<std::size_t, std::size_t, std::size_t>, std::size_t> tuned_index;
  for (std::size_t t = 0; t < tasks.size(); ++t) tuned_index[{tasks[t].algo, tasks[t].cond, tasks[t].size}] = t;
  parallel_for(tasks.size(), threads, [&](std::size_t t) {
    const auto& task = tasks[t];
    const auto& algo = plan.algorithms[task.algo];
    const auto& base = std::get<MlpSpec>(std::get<LearnerSpec>(algo.spec));
    const auto& cond = plan.conditions[task.cond];
    const std::size_t n = plan.sizes[task.size];
    const auto seed = derive_seed(plan.master_seed, hash_key("tune"), condition_key(cond), n, hash_key(algo.name));
    try {
      tuned[t] = LearnerSpec(tune_dnn(default_dnn_grid(base), cond, n, seed, plan.train_fraction).best);
    } catch (const std::exception&) {
      tuned[t] = algo.spec;
    }
  });

  struct CellTask {
    std::size_t cond, size;
    int rep;
  };
  std::vector<CellTask> cells;
  for (std::size_t c = 0; c < plan.conditions.size(); ++c) {
    for (std::size_t s = 0; s < plan.sizes.size(); ++s) {
      for (int r = 0; r < plan.replications; ++r) cells.push_back({c, s, r});
    }
  }
  const std::size_t width = plan.algorithms.size();
  std::vector<ResultRow> rows(cells.size() * width);
  parallel_for(cells.size(), threads, [&](std::size_t i) {
    const auto& task = cells[i];
    const auto& cond = plan.conditions[task.cond];
    const std::size_t n = plan.sizes[task.size];
    const auto seed = cell_seed(plan.master_seed, cond, n, task.rep);
    std::optional<Cell> cell;
    std::string cell_error;
    try {
      cell = make_cell(cond, n, plan.train_fraction, seed);
    } catch (const std::exception& e) {
      cell_error = sanitize(e.what());
    }
    for (std::size_t a = 0; a < width; ++a) {
      const auto& algo = plan.algorithms[a];
      ResultRow& row = rows[i * width + a];
      row.condition = cond;
      row.n = n;
      row.replication = task.rep;
      row.algorithm = algo.name;
      row.cell_seed = seed;
      row.metrics = {kNaN, kNaN, kNaN, kNaN, kNaN};
      if (skipped(algo, n)) {
        row.error = kSkipped;
        continue;
      }
      if (!cell) {
        row.error = cell_error;
        continue;
      }
      try {
        const AlgorithmSpec& spec = algo.tune ? *tuned[tuned_index.at({a, task.cond, task.size})] : algo.spec;
        const auto model = fit_algorithm(spec, cell->train, algorithm_seed(seed, algo.name));
        const auto probs = model.predict(cell->test.features());
        row.metrics = evaluate(probs, cell->test.labels(), plan.record_timing ? model.fit_seconds() : kNaN);
      } catch (const std::exception& e) {
        row.error = sanitize(e.what());
      }
    }
  });
  return rows;
}

// ---------------------------------------------------------------- files

std::string results_csv(const std::vector<ResultRow>& rows) {
  std::string out = kResultsHeader;
  out += '\n';
  for (const auto& r : rows) {
    const auto& c = r.condition;
    out += condition_id(c) + ',' + std::string(relationship_name(c.relationship)) + ',' +
           std::string(noise_name(c.noise)) + ',' + num(c.misclassification_rate.value_or(kNaN)) + ',' +
           std::to_string(r.n) + ',' + std::to_string(r.replication) + ',' + r.algorithm + ',' +
           std::to_string(r.cell_seed) + ',' + num(r.metrics.accuracy) + ',' + num(r.metrics.auc) + ',' +
           num(r.metrics.fnr) + ',' + num(r.metrics.fpr) + ',' + num(r.metrics.fit_seconds) + ',' + r.error + '\n';
  }
  return out;
}

std::vector<ResultRow> parse_results_csv(std::string_view text) {
  std::vector<ResultRow> rows;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool header = true;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (header) {
      if (line != kResultsHeader) throw LoadError("results: unexpected header");
      header = false;
      continue;
    }
    const auto f = split_csv_line(line);
    if (f.size() != 14) throw LoadError("results line " + std::to_string(line_no) + ": expected 14 fields");
    ResultRow r;
    try {
      r.condition = condition_from_id(f[0]);
    } catch (const InvalidArgument& e) {
      throw LoadError("results line " + std::to_string(line_no) + ": " + e.what());
    }
    const double rate = parse_num(f[3], line_no);
    if (!std::isnan(rate)) r.condition.misclassification_rate = rate;
    r.n = static_cast<std::size_t>(parse_num(f[4], line_no));
    r.replication = static_cast<int>(parse_num(f[5], line_no));
    r.algorithm = f[6];
    try {
      r.cell_seed = std::stoull(f[7]);
    } catch (const std::exception&) {
      throw LoadError("results line " + std::to_string(line_no) + ": bad cell seed");
    }
    r.metrics = {parse_num(f[8], line_no), parse_num(f[9], line_no), parse_num(f[10], line_no),
                 parse_num(f[11], line_no), parse_num(f[12], line_no)};
    r.error = f[13];
    rows.push_back(std::move(r));
  }
  if (header) throw LoadError("results: empty file");
  return rows;
}

std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows) {
  struct Acc {
    SummaryRow row;
    std::vector<double> acc, auc, fnr, fpr, secs;
  };
  std::vector<Acc> groups;
  std::map<std::tuple<std::string, double, std::size_t, std::string>, std::size_t> index;
  for (const auto& r : rows) {
    const auto key = std::make_tuple(condition_id(r.condition), r.condition.misclassification_rate.value_or(-1.0),
                                     r.n, r.algorithm);
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, groups.size()).first;
      Acc g;
      g.row.condition = r.condition;
      g.row.n = r.n;
      g.row.algorithm = r.algorithm;
      groups.push_back(std::move(g));
    }
    Acc& g = groups[it->second];
    if (!r.error.empty()) {
      ++g.row.errors;
      continue;
    }
    ++g.row.replications;
    g.acc.push_back(r.metrics.accuracy);
    g.auc.push_back(r.metrics.auc);
    g.fnr.push_back(r.metrics.fnr);
    g.fpr.push_back(r.metrics.fpr);
    g.secs.push_back(r.metrics.fit_seconds);
  }
  std::vector<SummaryRow> out;
  for (auto& g : groups) {
    g.row.accuracy = summarize_values(g.acc);
    g.row.auc = summarize_values(g.auc);
    g.row.fnr = summarize_values(g.fnr);
    g.row.fpr = summarize_values(g.fpr);
    g.row.fit_seconds = summarize_values(g.secs);
    out.push_back(g.row);
  }
  return out;
}

std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::string out =
      "condition,relationship,noise,misclassification_rate,n,algorithm,replications,errors,accuracy_mean,"
      "accuracy_sd,auc_mean,auc_sd,fnr_mean,fnr_sd,fpr_mean,fpr_sd,fit_seconds_mean,fit_seconds_sd\n";
  for (const auto& r : rows) {
    const auto& c = r.condition;
    out += condition_id(c) + ',' + std::string(relationship_name(c.relationship)) + ',' +
           std::string(noise_name(c.noise)) + ',' + num(c.misclassification_rate.value_or(kNaN)) + ',' +
           std::to_string(r.n) + ',' + r.algorithm + ',' + std::to_string(r.replications) + ',' +
           std::to_string(r.errors);
    for (const auto* m : {&r.accuracy, &r.auc, &r.fnr, &r.fpr, &r.fit_seconds}) {
      out += ',' + num(m->mean) + ',' + num(m->sd);
    }
    out += '\n';
  }
  return out;
}

std::string plot_svg(const std::vector<SummaryRow>& summary) {
  if (summary.empty()) throw InvalidArgument("plot: empty summary");
  std::vector<std::string> panels, algorithms;
  for (const auto& r : summary) {
    const auto id = condition_id(r.condition);
    if (std::find(panels.begin(), panels.end(), id) == panels.end()) panels.push_back(id);
    if (std::find(algorithms.begin(), algorithms.end(), r.algorithm) == algorithms.end()) {
      algorithms.push_back(r.algorithm);
    }
  }
  static const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                         "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  constexpr double kPanelW = 320, kPanelH = 240, kLeft = 50, kRight = 15, kTop = 30, kBottom = 40;
  const std::size_t cols = std::min<std::size_t>(3, panels.size());
  const std::size_t grid_rows = (panels.size() + cols - 1) / cols;
  const double legend_h = 20.0 * static_cast<double>(algorithms.size()) + 20.0;
  const double width = kPanelW * static_cast<double>(cols);
  const double height = kPanelH * static_cast<double>(grid_rows) + legend_h;

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fixed(width, 0) << "\" height=\""
      << fixed(height, 0) << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t p = 0; p < panels.size(); ++p) {
    const double ox = kPanelW * static_cast<double>(p % cols);
    const double oy = kPanelH * static_cast<double>(p / cols);
    std::vector<const SummaryRow*> rows;
    for (const auto& r : summary) {
      if (condition_id(r.condition) == panels[p] && !std::isnan(r.accuracy.mean)) rows.push_back(&r);
    }
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto* r : rows) {
      const double lx = std::log10(static_cast<double>(std::max<std::size_t>(r->n, 1)));
      xmin = std::min(xmin, lx);
      xmax = std::max(xmax, lx);
      ymin = std::min(ymin, r->accuracy.mean);
      ymax = std::max(ymax, r->accuracy.mean);
    }
    if (rows.empty()) {
      xmin = 2.0, xmax = 4.0, ymin = 0.5, ymax = 1.0;
    }
    if (xmax - xmin < 1e-9) xmin -= 0.1, xmax += 0.1;
    if (ymax - ymin < 1e-9) ymin -= 0.05, ymax += 0.05;
    const double pad = 0.05 * (ymax - ymin);
    ymin -= pad;
    ymax += pad;
    const double pw = kPanelW - kLeft - kRight, ph = kPanelH - kTop - kBottom;
    const auto sx = [&](double lx) { return ox + kLeft + (lx - xmin) / (xmax - xmin) * pw; };
    const auto sy = [&](double y) { return oy + kTop + (ymax - y) / (ymax - ymin) * ph; };

    svg << "<g>\n<text x=\"" << fixed(ox + kLeft + pw / 2) << "\" y=\"" << fixed(oy + 18)
        << "\" text-anchor=\"middle\" font-weight=\"bold\">" << xml_escape(panels[p]) << "</text>\n";
    svg << "<rect x=\"" << fixed(ox + kLeft) << "\" y=\"" << fixed(oy + kTop) << "\" width=\"" << fixed(pw)
        << "\" height=\"" << fixed(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 4; ++t) {
      const double y = ymin + (ymax - ymin) * t / 4.0;
      svg << "<text x=\"" << fixed(ox + kLeft - 4) << "\" y=\"" << fixed(sy(y) + 4)
          << "\" text-anchor=\"end\">" << fixed(y, 3) << "</text>\n";
    }
    std::set<std::size_t> sizes;
    for (const auto* r : rows) sizes.insert(r->n);
    for (auto n : sizes) {
      const double x = sx(std::log10(static_cast<double>(n)));
      svg << "<text x=\"" << fixed(x) << "\" y=\"" << fixed(oy + kTop + ph + 14) << "\" text-anchor=\"middle\">"
          << n << "</text>\n";
    }
    svg << "<text x=\"" << fixed(ox + kLeft + pw / 2) << "\" y=\"" << fixed(oy + kPanelH - 8)
        << "\" text-anchor=\"middle\">n (log scale)</text>\n";
    for (std::size_t a = 0; a < algorithms.size(); ++a) {
      std::vector<const SummaryRow*> series;
      for (const auto* r : rows) {
        if (r->algorithm == algorithms[a]) series.push_back(r);
      }
      std::sort(series.begin(), series.end(), [](const auto* l, const auto* r) { return l->n < r->n; });
      if (series.empty()) continue;
      const char* color = kPalette[a % std::size(kPalette)];
      svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t i = 0; i < series.size(); ++i) {
        svg << (i ? " " : "") << fixed(sx(std::log10(static_cast<double>(series[i]->n)))) << ','
            << fixed(sy(series[i]->accuracy.mean));
      }
      svg << "\"/>\n";
      for (const auto* r : series) {
        svg << "<circle cx=\"" << fixed(sx(std::log10(static_cast<double>(r->n)))) << "\" cy=\""
            << fixed(sy(r->accuracy.mean)) << "\" r=\"2.5\" fill=\"" << color << "\"/>\n";
      }
    }
    svg << "</g>\n";
  }
  const double ly = kPanelH * static_cast<double>(grid_rows) + 10;
  for (std::size_t a = 0; a < algorithms.size(); ++a) {
    const double y = ly + 20.0 * static_cast<double>(a);
    const char* color = kPalette[a % std::size(kPalette)];
    svg << "<line x1=\"20\" y1=\"" << fixed(y + 6) << "\" x2=\"45\" y2=\"" << fixed(y + 6) << "\" stroke=\""
        << color << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"52\" y=\"" << fixed(y + 10) << "\">" << xml_escape(algorithms[a]) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

void emit_plot(const std::vector<SummaryRow>& summary, const std::filesystem::path& path) {
  write_file_atomic(path, plot_svg(summary));
}

// ---------------------------------------------------------------- tuning

std::vector<MlpSpec> default_dnn_grid(const MlpSpec& base) {
  std::vector<MlpSpec> grid;
  for (double lr : {0.01, 0.1}) {
    for (double momentum : {0.0, 0.9}) {
      for (int batch : {16, 64}) {
        for (int epochs : {50, 200}) {
          MlpSpec s = base;
          s.learning_rate = lr;
          s.momentum = momentum;
          s.batch_size = batch;
          s.epochs = epochs;
          grid.push_back(s);
        }
      }
    }
  }
  return grid;
}

TuneResult tune_mlp(const std::vector<MlpSpec>& grid, const Dataset& train, std::uint64_t seed) {
  if (grid.empty()) throw InvalidArgument("tune: empty grid");
  SeededRng rng(derive_seed(seed, hash_key("validation")));
  const auto parts = stratified_split(train.labels(), 0.8, rng);
  TuneResult out;
  out.fit_part = train.subset(parts.train_indices);
  out.validation_part = train.subset(parts.test_indices);
  double best = -1.0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    double acc = 0.0;
    try {
      for (int r = 0; r < kTuneRestarts; ++r) {
        const auto model = fit(LearnerSpec(grid[g]), out.fit_part, derive_seed(seed, hash_key("fit"), r));
        acc += accuracy(model.predict(out.validation_part.features()), out.validation_part.labels()) / kTuneRestarts;
      }
    } catch (const FitError&) {
      acc = kNaN;
    }
    out.validation_accuracy.push_back(acc);
    if (!std::isnan(acc) && acc > best) {
      best = acc;
      out.best_index = g;
    }
  }
  out.best = grid[out.best_index];
  return out;
}

TuneResult tune_dnn(const std::vector<MlpSpec>& grid, const SimCondition& c, std::size_t n, std::uint64_t seed,
                    double train_fraction) {
  const Cell cell = make_cell(c, n, train_fraction, seed);
  return tune_mlp(grid, cell.train, seed);
}

}  // namespace stackbench
