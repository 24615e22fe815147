#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "stackbench/dataset.hpp"
#include "stackbench/learner_spec.hpp"
#include "stackbench/model.hpp"

namespace stackbench {

struct FernTest {
  std::size_t feature = 0;
  double threshold = 0.0;
};

/// D-bit code of `point` under one fern; the first test is the most
/// significant bit and a bit is set iff point[feature] > threshold.
std::uint32_t fern_bin_index(std::span<const double> point, std::span<const FernTest> fern);

/// Laplace-smoothed class-1 posterior of a bin: (pos + 1) / (pos + neg + 2).
double fern_bin_posterior(std::uint32_t positives, std::uint32_t negatives) noexcept;

/// Random ferns: each fern indexes a smoothed posterior table; the ensemble
/// adds per-class log posteriors across ferns and renormalizes.
class FernsModel final : public Model {
 public:
  struct Fern {
    std::vector<FernTest> tests;
    std::vector<double> log_pos;  // per bin, log P(y=1 | bin)
    std::vector<double> log_neg;  // per bin, log P(y=0 | bin)
  };

  FernsModel(std::vector<Fern> ferns, std::size_t feature_count);

  std::string_view family() const noexcept override { return "random_ferns"; }
  std::size_t feature_count() const noexcept override { return p_; }
  Probabilities predict_rows(const Matrix& x) const override;
  nlohmann::json parameters() const override;
  static std::shared_ptr<const FernsModel> from_parameters(const nlohmann::json& params,
                                                           std::size_t feature_count);

  const std::vector<Fern>& ferns() const noexcept { return ferns_; }

 private:
  std::vector<Fern> ferns_;
  std::size_t p_;
};

std::shared_ptr<const FernsModel> fit_ferns(const RandomFernsSpec& spec, const Dataset& data,
                                            std::uint64_t seed);

}  // namespace stackbench
