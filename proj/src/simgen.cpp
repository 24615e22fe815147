#include "stackbench/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "stackbench/errors.hpp"
#include "stackbench/rng.hpp"

namespace stackbench {
namespace {

const GeneratorParams kParams{};

}  // namespace

void validate(const SimCondition& c) {
  if (!c.misclassification_rate) return;
  if (c.noise != NoiseLevel::high) throw InvalidArgument("misclassification requires high noise");
  const double r = *c.misclassification_rate;
  if (!(r >= 0.05 && r <= 0.10)) throw InvalidArgument("misclassification rate must lie in [0.05, 0.10]");
}

std::string_view relationship_name(Relationship r) noexcept {
  switch (r) {
    case Relationship::linear: return "linear";
    case Relationship::nonlinear: return "nonlinear";
    case Relationship::mixed: return "mixed";
  }
  return "linear";
}

std::string_view noise_name(NoiseLevel n) noexcept { return n == NoiseLevel::low ? "low" : "high"; }

std::string condition_id(const SimCondition& c) {
  std::string id = std::string(relationship_name(c.relationship)) + "-" + std::string(noise_name(c.noise));
  if (c.misclassification_rate) id += "-mis";
  return id;
}

SimCondition condition_from_id(std::string_view id) {
  for (const auto& c : condition_catalog()) {
    if (condition_id(c) == id) return c;
  }
  throw InvalidArgument("unknown condition '" + std::string(id) + "'");
}

std::vector<SimCondition> condition_catalog() {
  std::vector<SimCondition> out;
  for (auto r : {Relationship::linear, Relationship::nonlinear, Relationship::mixed}) {
    out.push_back({r, NoiseLevel::low, std::nullopt});
    out.push_back({r, NoiseLevel::high, std::nullopt});
    out.push_back({r, NoiseLevel::high, kParams.default_flip_rate});
  }
  return out;
}

double signal(Relationship r, std::span<const double> x) {
  if (x.size() < 4) throw InvalidArgument("signal: need four predictors");
  switch (r) {
    case Relationship::linear:
      return 1.5 * x[0] - 2.0 * x[1] + x[2] + 0.5 * x[3];
    case Relationship::nonlinear:
      return 2.0 * std::sin(2.0 * x[0]) + (x[1] * x[1] - 1.0) + 1.5 * x[2] * x[3];
    case Relationship::mixed:
      return 1.5 * x[0] - 2.0 * x[1] + 2.0 * std::sin(2.0 * x[2]) + (x[3] * x[3] - 1.0);
  }
  return 0.0;
}

double noise_sigma(NoiseLevel level) { return level == NoiseLevel::low ? kParams.sigma_low : kParams.sigma_high; }

Simulation generate_with_trace(const SimCondition& c, std::size_t n, std::uint64_t seed) {
  validate(c);
  if (n < 10) throw InvalidArgument("generate: n must be >= 10");
  const std::size_t p = kSimFeatures;
  const double sigma = noise_sigma(c.noise);
  SeededRng rng(seed);
  Matrix x(n, p);
  std::vector<int> y(n);
  Simulation out;
  for (std::size_t i = 0; i < n; ++i) {
    auto row = x.row(i);
    for (auto& v : row) v = rng.normal();
    const double s = signal(c.relationship, row) + sigma * rng.normal();
    int label = s > 0.0 ? 1 : 0;
    if (c.misclassification_rate && rng.uniform() < *c.misclassification_rate) {
      label = 1 - label;
      out.flipped.push_back(i);
    }
    y[i] = label;
  }
  out.data = Dataset(std::move(x), std::move(y));
  return out;
}

Dataset generate(const SimCondition& c, std::size_t n, std::uint64_t seed) {
  return generate_with_trace(c, n, seed).data;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double bayes_accuracy(const SimCondition& c, std::size_t n_mc, std::uint64_t seed) {
  validate(c);
  if (n_mc == 0) throw InvalidArgument("bayes_accuracy: n_mc must be positive");
  const double sigma = noise_sigma(c.noise);
  SeededRng rng(seed);
  double x[4];
  double total = 0.0;
  for (std::size_t i = 0; i < n_mc; ++i) {
    for (double& v : x) v = rng.normal();
    total += normal_cdf(std::abs(signal(c.relationship, x)) / sigma);
  }
  const double a = total / static_cast<double>(n_mc);
  const double r = c.misclassification_rate.value_or(0.0);
  return (1.0 - r) * a + r * (1.0 - a);
}

}  // namespace stackbench
