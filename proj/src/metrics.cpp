#include "ser/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace ser::metrics {

ConfusionMatrix build_confusion(std::span<const int> true_labels,
                                std::span<const int> predicted_labels, size_t n_classes) {
  if (true_labels.empty()) throw ValueError("build_confusion: empty label sequences");
  if (true_labels.size() != predicted_labels.size()) {
    throw ValueError("build_confusion: " + std::to_string(true_labels.size()) + " true vs " +
                     std::to_string(predicted_labels.size()) + " predicted labels");
  }
  ConfusionMatrix cm(n_classes);
  for (size_t i = 0; i < true_labels.size(); ++i) {
    const int t = true_labels[i], p = predicted_labels[i];
    if (t < 0 || p < 0 || t >= static_cast<int>(n_classes) || p >= static_cast<int>(n_classes)) {
      throw ValueError("build_confusion: label out of range at index " + std::to_string(i));
    }
    cm.at(static_cast<size_t>(t), static_cast<size_t>(p)) += 1;
  }
  return cm;
}

Contingency one_vs_rest(const ConfusionMatrix& cm, size_t c) {
  Contingency k;
  k.tp = cm.at(c, c);
  k.fn = cm.row_sum(c) - k.tp;
  k.fp = cm.col_sum(c) - k.tp;
  k.tn = cm.total() - k.tp - k.fn - k.fp;
  return k;
}

ClassStats stats_from_contingency(const Contingency& k) {
  const int64_t support = k.tp + k.fn;
  if (support <= 0) throw ValueError("per-class statistics need positive support");
  const double total = static_cast<double>(k.tp + k.fp + k.fn + k.tn);

  ClassStats s;
  s.sensitivity = static_cast<double>(k.tp) / static_cast<double>(support);
  s.specificity = (k.tn + k.fp) > 0
                      ? static_cast<double>(k.tn) / static_cast<double>(k.tn + k.fp)
                      : 0.0;
  s.precision = (k.tp + k.fp) > 0
                    ? static_cast<double>(k.tp) / static_cast<double>(k.tp + k.fp)
                    : 0.0;
  s.accuracy = static_cast<double>(k.tp + k.tn) / total;
  s.error_rate = 1.0 - s.accuracy;
  s.f1 = (s.precision + s.sensitivity) > 0
             ? 2.0 * s.precision * s.sensitivity / (s.precision + s.sensitivity)
             : 0.0;
  s.isci = s.precision + s.sensitivity - 1.0;
  const double balance = s.specificity + s.sensitivity;
  s.op = balance > 0 ? s.accuracy - std::abs(s.specificity - s.sensitivity) / balance : s.accuracy;
  s.youden = s.sensitivity + s.specificity - 1.0;
  return s;
}

ClassStats per_class_stats(const ConfusionMatrix& cm, size_t c) {
  if (c >= cm.n) throw ValueError("per_class_stats: class " + std::to_string(c) + " out of range");
  return stats_from_contingency(one_vs_rest(cm, c));
}

double youden(double sensitivity, double specificity) {
  if (sensitivity < 0 || sensitivity > 1 || specificity < 0 || specificity > 1) {
    throw ValueError("youden: sensitivity and specificity must lie in [0, 1]");
  }
  return sensitivity + specificity - 1.0;
}

double kappa(double p_o, double p_e) {
  if (p_o < 0 || p_o > 1 || p_e < 0 || p_e > 1) {
    throw ValueError("kappa: p_o and p_e must lie in [0, 1]");
  }
  if (p_e >= 1.0) throw ValueError("kappa: expected agreement p_e must be < 1");
  return (p_o - p_e) / (1.0 - p_e);
}

double expected_agreement(const ConfusionMatrix& cm) {
  const double total = static_cast<double>(cm.total());
  double p_e = 0;
  for (size_t c = 0; c < cm.n; ++c) {
    p_e += (static_cast<double>(cm.row_sum(c)) / total) *
           (static_cast<double>(cm.col_sum(c)) / total);
  }
  return p_e;
}

OverallSummary overall_summary(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw ValueError("overall_summary: empty confusion matrix");
  OverallSummary s;
  s.accuracy_micro = static_cast<double>(cm.trace()) / static_cast<double>(cm.total());
  s.precision_micro = s.accuracy_micro;
  s.recall_micro = s.accuracy_micro;
  s.f1_micro = s.accuracy_micro;
  double acc_sum = 0, spec_sum = 0;
  for (size_t c = 0; c < cm.n; ++c) {
    const ClassStats cs = per_class_stats(cm, c);
    acc_sum += cs.accuracy;
    spec_sum += cs.specificity;
  }
  s.accuracy_macro = acc_sum / static_cast<double>(cm.n);
  s.specificity_macro = spec_sum / static_cast<double>(cm.n);
  s.kappa = kappa(s.accuracy_micro, expected_agreement(cm));
  return s;
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.5f", v);
  return buf;
}

std::string fmt_pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f%%", v * 100.0);
  return buf;
}

}  // namespace

std::string render_report_text(const ConfusionMatrix& cm,
                               const std::vector<std::string>& class_names) {
  std::ostringstream out;
  std::vector<ClassStats> stats;
  for (size_t c = 0; c < cm.n; ++c) stats.push_back(per_class_stats(cm, c));

  auto row = [&](const std::string& name, auto getter, bool pct) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%-12s", name.c_str());
    out << buf;
    for (const auto& s : stats) {
      std::snprintf(buf, sizeof(buf), " %12s", pct ? fmt_pct(getter(s)).c_str() : fmt(getter(s)).c_str());
      out << buf;
    }
    out << "\n";
  };

  out << "Per-class statistics\n";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%-12s", "");
  out << buf;
  for (const auto& name : class_names) {
    std::snprintf(buf, sizeof(buf), " %12s", name.c_str());
    out << buf;
  }
  out << "\n";
  row("accuracy", [](const ClassStats& s) { return s.accuracy; }, true);
  row("f1", [](const ClassStats& s) { return s.f1; }, false);
  row("error_rate", [](const ClassStats& s) { return s.error_rate; }, false);
  row("isci", [](const ClassStats& s) { return s.isci; }, false);
  row("op", [](const ClassStats& s) { return s.op; }, false);
  row("sensitivity", [](const ClassStats& s) { return s.sensitivity; }, false);
  row("specificity", [](const ClassStats& s) { return s.specificity; }, false);
  row("precision", [](const ClassStats& s) { return s.precision; }, false);
  row("youden", [](const ClassStats& s) { return s.youden; }, false);

  const OverallSummary o = overall_summary(cm);
  out << "\nOverall results\n";
  out << "accuracy          " << fmt_pct(o.accuracy_micro) << "\n";
  out << "accuracy_macro    " << fmt_pct(o.accuracy_macro) << "\n";
  out << "precision         " << fmt(o.precision_micro) << "\n";
  out << "recall            " << fmt(o.recall_micro) << "\n";
  out << "f1                " << fmt(o.f1_micro) << "\n";
  out << "specificity       " << fmt(o.specificity_macro) << "\n";
  out << "kappa             " << fmt(o.kappa) << "\n";
  out << "samples           " << cm.total() << "\n";
  return out.str();
}

std::string render_report_kv(const ConfusionMatrix& cm,
                             const std::vector<std::string>& class_names) {
  std::ostringstream out;
  char buf[64];
  auto kv = [&](const std::string& key, double v) {
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    out << key << "\t" << buf << "\n";
  };
  for (size_t c = 0; c < cm.n; ++c) {
    const ClassStats s = per_class_stats(cm, c);
    const std::string& name = class_names.at(c);
    kv("class." + name + ".accuracy", s.accuracy);
    kv("class." + name + ".f1", s.f1);
    kv("class." + name + ".error_rate", s.error_rate);
    kv("class." + name + ".isci", s.isci);
    kv("class." + name + ".op", s.op);
    kv("class." + name + ".sensitivity", s.sensitivity);
    kv("class." + name + ".specificity", s.specificity);
    kv("class." + name + ".precision", s.precision);
    kv("class." + name + ".youden", s.youden);
  }
  const OverallSummary o = overall_summary(cm);
  kv("overall.accuracy_micro", o.accuracy_micro);
  kv("overall.accuracy_macro", o.accuracy_macro);
  kv("overall.precision_micro", o.precision_micro);
  kv("overall.recall_micro", o.recall_micro);
  kv("overall.f1_micro", o.f1_micro);
  kv("overall.specificity_macro", o.specificity_macro);
  kv("overall.kappa", o.kappa);
  out << "overall.samples\t" << cm.total() << "\n";
  for (size_t t = 0; t < cm.n; ++t) {
    for (size_t p = 0; p < cm.n; ++p) {
      out << "confusion." << t << "." << p << "\t" << cm.at(t, p) << "\n";
    }
  }
  return out.str();
}

}  // namespace ser::metrics
