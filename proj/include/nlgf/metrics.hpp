#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace nlgf {

// The positive class is "grammatical" throughout. A score counts as a
// positive prediction iff score >= threshold.
struct PRPoint {
  double threshold = 0.0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  bool has_precision() const { return tp + fp > 0; }
  double precision() const;  // 0 when undefined
  double recall() const;
};

// One point per distinct score (ascending threshold) followed by a +inf
// boundary point that predicts nothing positive. Recall is non-increasing
// along the list. Throws InvalidArgument unless both classes are present.
std::vector<PRPoint> pr_curve(std::span<const double> scores, const std::vector<bool>& labels);

struct OperatingPoint {
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  bool attained = false;
};

// Thresholds tried: -inf, the midpoint between each pair of adjacent distinct
// scores, and +inf (where precision is undefined and never eligible). Among
// thresholds whose precision reaches the target the highest recall wins,
// ties to the lower threshold. When none reaches it, the highest precision
// wins, ties to higher recall, then lower threshold, and attained is false.
OperatingPoint operating_point(std::span<const double> scores, const std::vector<bool>& labels,
                               double target_precision);

struct RecallAtPrecision {
  double recall = 0.0;
  double precision_used = 0.0;
  bool attained = false;
};

RecallAtPrecision recall_at_precision(std::span<const double> scores, const std::vector<bool>& labels,
                                      double target_precision);

// Percent with at most one decimal, trailing ".0" dropped: "72.8", "76".
std::string format_percent(double fraction);
// "72.8" when attained, otherwise "recall@precision", e.g. "45.9@80".
std::string format_rap(const RecallAtPrecision& r);

struct ReportRow {
  std::string model;
  std::string train_data;
  std::string test_data;
  RecallAtPrecision result;
};

// Aligned columns Model | Training Data | Test Data | R@P98 | R@P; "-" marks
// the column that does not apply.
void write_report_table(std::ostream& out, const std::vector<ReportRow>& rows, double target_precision);
// JSON array of rows with raw recall/precision and both formatted columns.
std::string report_json(const std::vector<ReportRow>& rows, double target_precision);

}  // namespace nlgf
