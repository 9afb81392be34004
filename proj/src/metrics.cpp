#include "nlgf/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "nlgf/error.hpp"

namespace nlgf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_inputs(std::span<const double> scores, const std::vector<bool>& labels) {
  if (scores.size() != labels.size()) throw InvalidArgument("scores and labels differ in length");
  bool pos = false, neg = false;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i])) throw InvalidArgument("scores must be finite");
    (labels[i] ? pos : neg) = true;
  }
  if (!pos || !neg) throw InvalidArgument("precision/recall need both classes; got a single-class label set");
}

// Indices sorted by descending score.
std::vector<std::size_t> by_score_desc(std::span<const double> scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return idx;
}

double midpoint(double lo, double hi) {
  const double m = lo + (hi - lo) / 2.0;
  return m > lo ? m : hi;
}

}  // namespace

double PRPoint::precision() const {
  return has_precision() ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
}

double PRPoint::recall() const {
  const std::size_t pos = tp + fn;
  return pos ? static_cast<double>(tp) / static_cast<double>(pos) : 0.0;
}

std::vector<PRPoint> pr_curve(std::span<const double> scores, const std::vector<bool>& labels) {
  check_inputs(scores, labels);
  const std::size_t positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), true));
  const std::size_t negatives = labels.size() - positives;
  const auto idx = by_score_desc(scores);

  // Sweep from the top; each block of tied scores becomes one point.
  std::vector<PRPoint> desc;
  PRPoint cur{kInf, 0, 0, negatives, positives};
  desc.push_back(cur);
  for (std::size_t i = 0; i < idx.size();) {
    const double s = scores[idx[i]];
    while (i < idx.size() && scores[idx[i]] == s) {
      if (labels[idx[i]]) {
        ++cur.tp;
        --cur.fn;
      } else {
        ++cur.fp;
        --cur.tn;
      }
      ++i;
    }
    cur.threshold = s;
    desc.push_back(cur);
  }
  std::reverse(desc.begin(), desc.end());
  return desc;
}

OperatingPoint operating_point(std::span<const double> scores, const std::vector<bool>& labels,
                               double target_precision) {
  check_inputs(scores, labels);
  const std::size_t positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), true));
  const auto idx = by_score_desc(scores);

  // Candidates from the top: +inf, then the midpoint below each tie block
  // (the last block is followed by -inf).
  struct Candidate {
    double threshold;
    std::size_t tp, fp;
  };
  std::vector<Candidate> candidates;
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < idx.size();) {
    const double s = scores[idx[i]];
    while (i < idx.size() && scores[idx[i]] == s) {
      (labels[idx[i]] ? tp : fp) += 1;
      ++i;
    }
    const double below = i < idx.size() ? midpoint(scores[idx[i]], s) : -kInf;
    candidates.push_back({below, tp, fp});
  }

  bool attained = false;
  OperatingPoint best{kInf, 0.0, 0.0, false};
  bool have = false;
  for (const auto& c : candidates) {  // thresholds in descending order
    const double p = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
    const double r = static_cast<double>(c.tp) / static_cast<double>(positives);
    const bool ok = p >= target_precision;
    bool take = false;
    if (!have) {
      take = true;
    } else if (ok != attained) {
      take = ok;
    } else if (ok) {
      take = r >= best.recall;  // equal recall: prefer the lower threshold
    } else {
      take = p > best.precision || (p == best.precision && r >= best.recall);
    }
    if (take) {
      best = {c.threshold, p, r, ok};
      attained = ok;
      have = true;
    }
  }
  return best;
}

RecallAtPrecision recall_at_precision(std::span<const double> scores, const std::vector<bool>& labels,
                                      double target_precision) {
  const OperatingPoint op = operating_point(scores, labels, target_precision);
  return {op.recall, op.precision, op.attained};
}

std::string format_percent(double fraction) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(1) << fraction * 100.0;
  std::string out = s.str();
  if (out.size() > 2 && out.compare(out.size() - 2, 2, ".0") == 0) out.resize(out.size() - 2);
  return out;
}

std::string format_rap(const RecallAtPrecision& r) {
  if (r.attained) return format_percent(r.recall);
  return format_percent(r.recall) + "@" + format_percent(r.precision_used);
}

void write_report_table(std::ostream& out, const std::vector<ReportRow>& rows, double target_precision) {
  const std::string rp_header = "R@P" + format_percent(target_precision);
  std::vector<std::array<std::string, 5>> cells;
  cells.push_back({"Model", "Training Data", "Test Data", rp_header, "R@P"});
  for (const auto& r : rows) {
    cells.push_back({r.model, r.train_data, r.test_data, r.result.attained ? format_rap(r.result) : "-",
                     r.result.attained ? "-" : format_rap(r.result)});
  }
  std::array<std::size_t, 5> width{};
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < 5; ++c) width[c] = std::max(width[c], row[c].size());
  }
  out << "# positive class: grammatical\n";
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < 5; ++c) {
      out << std::left << std::setw(static_cast<int>(width[c])) << row[c] << (c + 1 < 5 ? "  " : "\n");
    }
  }
}

std::string report_json(const std::vector<ReportRow>& rows, double target_precision) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json j;
    j["model"] = r.model;
    j["train_data"] = r.train_data;
    j["test_data"] = r.test_data;
    j["target_precision"] = target_precision;
    j["recall"] = r.result.recall;
    j["precision"] = r.result.precision_used;
    j["attained"] = r.result.attained;
    j["r_at_p_target"] = r.result.attained ? format_rap(r.result) : "-";
    j["r_at_p"] = r.result.attained ? "-" : format_rap(r.result);
    arr.push_back(j);
  }
  return arr.dump(1);
}

}  // namespace nlgf
