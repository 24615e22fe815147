#pragma once

#include <span>

namespace stackbench {

inline constexpr double kDefaultThreshold = 0.5;

struct ConfusionRates {
  double fnr = 0.0;
  double fpr = 0.0;
};

/// Test-set scores for one fitted model. Undefined rates are NaN.
struct MetricReport {
  double accuracy = 0.0;
  double auc = 0.0;
  double fnr = 0.0;
  double fpr = 0.0;
  double fit_seconds = 0.0;
};

/// Fraction of rows where (prob >= threshold) agrees with the label.
double accuracy(std::span<const double> probs, std::span<const int> labels,
                double threshold = kDefaultThreshold);

/// Mann-Whitney AUC, ties count one half. Throws UndefinedMetric unless both
/// classes are present.
double auc(std::span<const double> probs, std::span<const int> labels);

/// FNR = FN/(FN+TP), FPR = FP/(FP+TN). Throws UndefinedMetric when the
/// denominator class is absent.
ConfusionRates confusion_rates(std::span<const double> probs, std::span<const int> labels,
                               double threshold = kDefaultThreshold);

/// All four metrics; undefined ones become NaN instead of throwing.
MetricReport evaluate(std::span<const double> probs, std::span<const int> labels,
                      double fit_seconds, double threshold = kDefaultThreshold);

}  // namespace stackbench
