#include "stackbench/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "stackbench/errors.hpp"

namespace stackbench {
namespace {

void check_lengths(std::span<const double> probs, std::span<const int> labels) {
  if (probs.size() != labels.size()) {
    throw InvalidArgument("metric: probabilities and labels differ in length");
  }
}

struct Counts {
  std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
};

Counts confusion(std::span<const double> probs, std::span<const int> labels, double threshold) {
  Counts c;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const bool predicted = probs[i] >= threshold;
    if (labels[i] == 1) {
      predicted ? ++c.tp : ++c.fn;
    } else {
      predicted ? ++c.fp : ++c.tn;
    }
  }
  return c;
}

}  // namespace

double accuracy(std::span<const double> probs, std::span<const int> labels, double threshold) {
  check_lengths(probs, labels);
  if (probs.empty()) throw InvalidArgument("accuracy: no rows");
  const Counts c = confusion(probs, labels, threshold);
  return static_cast<double>(c.tp + c.tn) / static_cast<double>(probs.size());
}

double auc(std::span<const double> probs, std::span<const int> labels) {
  check_lengths(probs, labels);
  const std::size_t n = probs.size();
  const auto n_pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw UndefinedMetric("auc: both classes must be present");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return probs[a] < probs[b]; });

  // Sum of positive-class midranks (1-based) over tie groups.
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && probs[order[j]] == probs[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) rank_sum += midrank;
    }
    i = j;
  }
  const double dp = static_cast<double>(n_pos);
  const double u = rank_sum - dp * (dp + 1.0) / 2.0;
  return u / (dp * static_cast<double>(n_neg));
}

ConfusionRates confusion_rates(std::span<const double> probs, std::span<const int> labels,
                               double threshold) {
  check_lengths(probs, labels);
  const Counts c = confusion(probs, labels, threshold);
  if (c.fn + c.tp == 0) throw UndefinedMetric("fnr: no positive labels");
  if (c.fp + c.tn == 0) throw UndefinedMetric("fpr: no negative labels");
  return {static_cast<double>(c.fn) / static_cast<double>(c.fn + c.tp),
          static_cast<double>(c.fp) / static_cast<double>(c.fp + c.tn)};
}

MetricReport evaluate(std::span<const double> probs, std::span<const int> labels,
                      double fit_seconds, double threshold) {
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  MetricReport r;
  r.accuracy = accuracy(probs, labels, threshold);
  const Counts c = confusion(probs, labels, threshold);
  r.fnr = c.fn + c.tp ? static_cast<double>(c.fn) / static_cast<double>(c.fn + c.tp) : nan;
  r.fpr = c.fp + c.tn ? static_cast<double>(c.fp) / static_cast<double>(c.fp + c.tn) : nan;
  r.auc = (c.fn + c.tp) && (c.fp + c.tn) ? auc(probs, labels) : nan;
  r.fit_seconds = fit_seconds;
  return r;
}

}  // namespace stackbench
