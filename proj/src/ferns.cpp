#include "stackbench/ferns.hpp"

#include <algorithm>
#include <cmath>

#include "stackbench/errors.hpp"
#include "stackbench/rng.hpp"

namespace stackbench {

std::uint32_t fern_bin_index(std::span<const double> point, std::span<const FernTest> fern) {
  if (fern.empty()) throw InvalidArgument("fern_bin_index: fern depth must be >= 1");
  std::uint32_t code = 0;
  for (const auto& test : fern) {
    if (test.feature >= point.size()) {
      throw InvalidArgument("fern_bin_index: feature index " + std::to_string(test.feature) +
                            " out of range");
    }
    code = (code << 1) | (point[test.feature] > test.threshold ? 1U : 0U);
  }
  return code;
}

double fern_bin_posterior(std::uint32_t positives, std::uint32_t negatives) noexcept {
  return (static_cast<double>(positives) + 1.0) /
         (static_cast<double>(positives) + static_cast<double>(negatives) + 2.0);
}

FernsModel::FernsModel(std::vector<Fern> ferns, std::size_t feature_count)
    : ferns_(std::move(ferns)), p_(feature_count) {
  if (ferns_.empty()) throw InvalidArgument("random_ferns: no ferns");
}

Probabilities FernsModel::predict_rows(const Matrix& x) const {
  Probabilities out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double log_pos = 0.0, log_neg = 0.0;
    for (const auto& fern : ferns_) {
      const auto bin = fern_bin_index(x.row(i), fern.tests);
      log_pos += fern.log_pos[bin];
      log_neg += fern.log_neg[bin];
    }
    // Logistic form of exp(lp) / (exp(lp) + exp(ln)); stable for large sums.
    out[i] = 1.0 / (1.0 + std::exp(log_neg - log_pos));
  }
  return out;
}

nlohmann::json FernsModel::parameters() const {
  nlohmann::json ferns = nlohmann::json::array();
  for (const auto& f : ferns_) {
    nlohmann::json features = nlohmann::json::array(), thresholds = nlohmann::json::array();
    for (const auto& t : f.tests) {
      features.push_back(t.feature);
      thresholds.push_back(t.threshold);
    }
    ferns.push_back({{"features", features}, {"thresholds", thresholds},
                     {"log_pos", f.log_pos}, {"log_neg", f.log_neg}});
  }
  return {{"ferns", ferns}};
}

std::shared_ptr<const FernsModel> FernsModel::from_parameters(const nlohmann::json& params,
                                                              std::size_t feature_count) {
  std::vector<Fern> ferns;
  for (const auto& doc : params.at("ferns")) {
    Fern f;
    const auto features = doc.at("features").get<std::vector<std::size_t>>();
    const auto thresholds = doc.at("thresholds").get<std::vector<double>>();
    if (features.size() != thresholds.size() || features.empty()) {
      throw LoadError("random_ferns: malformed fern");
    }
    for (std::size_t d = 0; d < features.size(); ++d) {
      if (features[d] >= feature_count) throw LoadError("random_ferns: feature out of range");
      f.tests.push_back({features[d], thresholds[d]});
    }
    f.log_pos = doc.at("log_pos").get<std::vector<double>>();
    f.log_neg = doc.at("log_neg").get<std::vector<double>>();
    const std::size_t bins = std::size_t{1} << f.tests.size();
    if (f.log_pos.size() != bins || f.log_neg.size() != bins) {
      throw LoadError("random_ferns: posterior table size mismatch");
    }
    ferns.push_back(std::move(f));
  }
  return std::make_shared<FernsModel>(std::move(ferns), feature_count);
}

std::shared_ptr<const FernsModel> fit_ferns(const RandomFernsSpec& spec, const Dataset& data,
                                            std::uint64_t seed) {
  const std::size_t p = data.cols();
  if (p == 0) throw FitError("random_ferns", "no features");
  std::vector<double> lo(p), hi(p);
  for (std::size_t j = 0; j < p; ++j) {
    const auto col = data.features().column(j);
    const auto [mn, mx] = std::minmax_element(col.begin(), col.end());
    lo[j] = *mn;
    hi[j] = *mx;
  }

  const auto depth = static_cast<std::size_t>(spec.fern_depth);
  const std::size_t bins = std::size_t{1} << depth;
  const SeededRng master(seed);
  std::vector<FernsModel::Fern> ferns;
  ferns.reserve(static_cast<std::size_t>(spec.n_ferns));
  std::vector<std::uint32_t> pos(bins), neg(bins);
  for (int fi = 0; fi < spec.n_ferns; ++fi) {
    SeededRng rng = master.child(static_cast<std::uint64_t>(fi));
    FernsModel::Fern fern;
    for (std::size_t d = 0; d < depth; ++d) {
      const auto f = static_cast<std::size_t>(rng.below(p));
      fern.tests.push_back({f, rng.uniform(lo[f], hi[f])});
    }
    std::fill(pos.begin(), pos.end(), 0U);
    std::fill(neg.begin(), neg.end(), 0U);
    for (std::size_t i = 0; i < data.rows(); ++i) {
      const auto bin = fern_bin_index(data.features().row(i), fern.tests);
      (data.labels()[i] ? pos : neg)[bin]++;
    }
    fern.log_pos.resize(bins);
    fern.log_neg.resize(bins);
    for (std::size_t b = 0; b < bins; ++b) {
      const double post = fern_bin_posterior(pos[b], neg[b]);
      fern.log_pos[b] = std::log(post);
      fern.log_neg[b] = std::log1p(-post);
    }
    ferns.push_back(std::move(fern));
  }
  return std::make_shared<FernsModel>(std::move(ferns), p);
}

}  // namespace stackbench
