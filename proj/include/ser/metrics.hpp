#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ser/errors.hpp"

// Multiclass evaluation statistics: confusion matrix, one-vs-rest per-class
// measures (accuracy, F1, error rate, ISCI, OP, sensitivity, specificity,
// precision, Youden index), Cohen's kappa and the overall micro/macro summary.
// Everything is exposed in fractional scale; percentage rendering is a display
// concern of the report writers.

namespace ser::metrics {

struct ConfusionMatrix {
  size_t n = 0;
  std::vector<int64_t> counts;  // rows = true class, columns = predicted class

  explicit ConfusionMatrix(size_t n_classes = 7) : n(n_classes), counts(n_classes * n_classes, 0) {}

  int64_t& at(size_t true_class, size_t predicted) { return counts[true_class * n + predicted]; }
  int64_t at(size_t true_class, size_t predicted) const { return counts[true_class * n + predicted]; }

  int64_t total() const {
    int64_t t = 0;
    for (int64_t c : counts) t += c;
    return t;
  }
  int64_t trace() const {
    int64_t t = 0;
    for (size_t i = 0; i < n; ++i) t += at(i, i);
    return t;
  }
  int64_t row_sum(size_t c) const {
    int64_t t = 0;
    for (size_t j = 0; j < n; ++j) t += at(c, j);
    return t;
  }
  int64_t col_sum(size_t c) const {
    int64_t t = 0;
    for (size_t i = 0; i < n; ++i) t += at(i, c);
    return t;
  }
};

ConfusionMatrix build_confusion(std::span<const int> true_labels,
                                std::span<const int> predicted_labels, size_t n_classes = 7);

struct ClassStats {
  double accuracy = 0;
  double f1 = 0;
  double error_rate = 0;
  double isci = 0;  // individual classification success index: precision + sensitivity - 1
  double op = 0;    // optimized precision: accuracy - |spec - sens| / (spec + sens)
  double sensitivity = 0;
  double specificity = 0;
  double precision = 0;
  double youden = 0;  // sensitivity + specificity - 1
};

/// One-vs-rest counts for a class.
struct Contingency {
  int64_t tp = 0, fp = 0, fn = 0, tn = 0;
};

Contingency one_vs_rest(const ConfusionMatrix& cm, size_t c);

/// Per-class statistics; throws when the class has zero support.
ClassStats per_class_stats(const ConfusionMatrix& cm, size_t c);

/// Statistics straight from one-vs-rest counts (support must be positive).
ClassStats stats_from_contingency(const Contingency& counts);

/// Youden index in fractional scale. Inputs must lie in [0, 1].
double youden(double sensitivity, double specificity);

/// Cohen's kappa: (p_o - p_e) / (1 - p_e). Requires p_e < 1.
double kappa(double p_o, double p_e);

/// Expected agreement from the confusion marginals: sum of row_frac * col_frac.
double expected_agreement(const ConfusionMatrix& cm);

struct OverallSummary {
  double accuracy_micro = 0;  // trace / total
  double accuracy_macro = 0;  // mean of per-class one-vs-rest accuracies
  double precision_micro = 0;
  double recall_micro = 0;
  double f1_micro = 0;
  double specificity_macro = 0;
  double kappa = 0;
};

/// Micro precision == micro recall == micro F1 == micro accuracy for
/// single-label multiclass; kappa uses the marginal expected agreement.
OverallSummary overall_summary(const ConfusionMatrix& cm);

/// Human-readable report: per-class statistics table plus the overall block.
std::string render_report_text(const ConfusionMatrix& cm,
                               const std::vector<std::string>& class_names);

/// Machine-readable key-value records, one "key<TAB>value" per line.
std::string render_report_kv(const ConfusionMatrix& cm,
                             const std::vector<std::string>& class_names);

}  // namespace ser::metrics
