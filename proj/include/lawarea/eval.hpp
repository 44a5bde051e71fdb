#pragma once

#include <Eigen/Core>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "lawarea/corpus.hpp"

namespace lawarea {

/// counts(true, predicted).
struct ConfusionMatrix {
  Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic> counts;

  long total() const { return counts.sum(); }
  long trace() const { return counts.trace(); }
  bool operator==(const ConfusionMatrix& other) const { return counts == other.counts; }
};

struct ClassMetrics {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  long support = 0;

  bool operator==(const ClassMetrics&) const = default;
};

/// All pairwise metrics throw Error(LengthMismatch) on unequal or empty inputs.
double accuracy(std::span<const ClassId> preds, std::span<const ClassId> labels);
ConfusionMatrix confusion(std::span<const ClassId> preds, std::span<const ClassId> labels, int num_classes);
std::vector<ClassMetrics> per_class_metrics(const ConfusionMatrix& cm);
/// Unweighted mean over all num_classes classes; a class absent from both
/// preds and labels contributes 0 and emits a warning.
double macro_f1(std::span<const ClassId> preds, std::span<const ClassId> labels, int num_classes);
/// Fraction whose label is among the first k entries of its ranked list.
/// Throws Error(KTooLarge) when a list is shorter than k.
double top_k_accuracy(const std::vector<std::vector<ClassId>>& ranked, std::span<const ClassId> labels, std::size_t k);

/// Classes ordered by descending probability, ties by class id.
std::vector<std::vector<ClassId>> rank_rows(const Eigen::MatrixXd& proba);

inline constexpr int kReportVersion = 1;

struct EvaluationReport {
  std::string classifier;
  std::string feature;
  std::string sampling;
  std::vector<std::string> class_codes;  // schema order
  long documents = 0;
  double accuracy = 0;
  double macro_f1 = 0;
  std::vector<ClassMetrics> per_class;
  std::map<int, double> top_k_accuracy;
  ConfusionMatrix confusion;

  bool operator==(const EvaluationReport&) const = default;
};

/// Builds a report from class probabilities (n x C) and true labels; top-k is
/// filled for each requested k that does not exceed C.
EvaluationReport evaluate(const LabelSchema& schema, const Eigen::MatrixXd& proba, std::span<const ClassId> labels,
                          const std::vector<int>& ks = {1, 3, 5});

enum class ReportFormat { Text, Json, Csv, Heatmap };

/// Throws Error(UnsupportedFormat).
ReportFormat parse_report_format(std::string_view name);

/// Text and csv accept any number of reports (csv: one row per report); json
/// emits an object for one report and an array otherwise; the heatmap PNG
/// requires exactly one report.
std::string render_report(std::span<const EvaluationReport> reports, ReportFormat format);

EvaluationReport report_from_json(const std::string& json);

/// PNG of the row-normalized confusion matrix with two-decimal cell labels.
std::string render_heatmap_png(const EvaluationReport& report);

}  // namespace lawarea
