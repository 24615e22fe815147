#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stackbench/dataset.hpp"

namespace stackbench {

enum class Relationship { linear, nonlinear, mixed };
enum class NoiseLevel { low, high };

struct SimCondition {
  Relationship relationship = Relationship::linear;
  NoiseLevel noise = NoiseLevel::low;
  /// Label flip probability; high noise only, within [0.05, 0.10].
  std::optional<double> misclassification_rate;

  friend bool operator==(const SimCondition&, const SimCondition&) = default;
};

struct GeneratorParams {
  int n_true = 4;
  int n_noise = 9;
  double sigma_low = 0.5;
  double sigma_high = 2.0;
  double default_flip_rate = 0.075;
};

inline constexpr int kGeneratorVersion = 1;
inline constexpr std::size_t kSimFeatures = 13;

void validate(const SimCondition& c);

std::string_view relationship_name(Relationship r) noexcept;
std::string_view noise_name(NoiseLevel n) noexcept;

/// "linear-low", "nonlinear-high", "mixed-high-mis", ...
std::string condition_id(const SimCondition& c);
/// Inverse of condition_id; "-mis" takes the default flip rate.
SimCondition condition_from_id(std::string_view id);

/// The nine study conditions: each relationship at low noise, high noise,
/// and high noise with label flips.
std::vector<SimCondition> condition_catalog();

/// eta(x1..x4); x must hold at least four values.
double signal(Relationship r, std::span<const double> x);
double noise_sigma(NoiseLevel level);

struct Simulation {
  Dataset data;
  std::vector<std::size_t> flipped;  // ascending row indices
};

/// Deterministic in (condition, n, seed); n >= 10.
Simulation generate_with_trace(const SimCondition& c, std::size_t n, std::uint64_t seed);
Dataset generate(const SimCondition& c, std::size_t n, std::uint64_t seed);

/// Phi(z), the standard normal CDF.
double normal_cdf(double z);

/// Monte-Carlo accuracy of 1{eta(x) > 0} under the generating model,
/// including the flip adjustment (1-r)a + r(1-a).
double bayes_accuracy(const SimCondition& c, std::size_t n_mc, std::uint64_t seed);

}  // namespace stackbench
