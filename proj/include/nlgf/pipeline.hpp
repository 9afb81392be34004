#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nlgf/corpus.hpp"
#include "nlgf/delex.hpp"
#include "nlgf/ngram_lm.hpp"

namespace nlgf {

inline constexpr std::string_view kDefaultFallback = "Here's your weather forecast";

enum class ScorerKind { Gbdt, Cnn };
std::string_view to_string(ScorerKind kind);
ScorerKind parse_scorer_kind(std::string_view name);

struct FilterQuality {
  double precision = 0.0;
  double recall = 0.0;
  bool attained = false;
};

// A response passes iff its score >= threshold.
struct CalibratedFilter {
  ScorerKind scorer = ScorerKind::Cnn;
  std::string model_path;
  double threshold = 0.0;
  double target_precision = 0.98;
  FilterQuality achieved;  // on the calibration split
};

// Same operating point as recall_at_precision; throws InvalidArgument on a
// single-class label set or non-finite scores.
CalibratedFilter calibrate(std::span<const double> scores, const std::vector<bool>& labels,
                           double target_precision = 0.98);

// Indices of the scores that pass, in input order.
std::vector<std::size_t> filter_candidates(std::span<const double> scores, double threshold);

// JSON; infinite thresholds are written as the strings "inf" / "-inf".
void write_filter(std::ostream& out, const CalibratedFilter& filter);
CalibratedFilter read_filter(std::istream& in);
void save_filter(const std::filesystem::path& path, const CalibratedFilter& filter);
CalibratedFilter load_filter(const std::filesystem::path& path);

struct PipelineCandidate {
  std::string text;
  TokenSequence ranker_tokens;  // delexicalized tokens the LM scores
  double filter_score = 0.0;
  std::optional<bool> grammatical;
  std::optional<bool> semantically_correct;
};

struct ScenarioCandidates {
  std::string scenario_id;
  std::vector<PipelineCandidate> candidates;
};

struct ScenarioChoice {
  std::string scenario_id;
  std::optional<std::size_t> index;  // empty when the fallback was used
  std::string text;
};

struct PipelineResult {
  std::vector<ScenarioChoice> choices;
  std::size_t scenarios = 0;
  std::size_t fallbacks = 0;
  std::size_t ungrammatical_chosen = 0;
  std::size_t semantic_labeled_chosen = 0;
  std::size_t semantically_incorrect_chosen = 0;
  // Over scenarios with a non-fallback choice.
  double ungrammatical_top_rate = 0.0;
  // Over all scenarios, fallbacks counted as acceptable.
  double ungrammatical_top_rate_all = 0.0;
  std::optional<double> semantically_incorrect_top_rate;
  double fallback_rate = 0.0;
};

struct PipelineOptions {
  std::optional<double> filter_threshold;  // absent: rank only
  std::string fallback = std::string(kDefaultFallback);
  bool length_normalize = true;
};

// Filters each scenario's candidates (when a threshold is set), picks the
// LM-best survivor (ties to the earlier candidate) or the fallback, and
// aggregates the gold labels of the choices.
PipelineResult run_pipeline(const std::vector<ScenarioCandidates>& scenarios, const NGramModel& ranker,
                            const PipelineOptions& options = {});

// Groups the responses of one split by scenario, delexicalizing each for the
// ranker. scores runs parallel to corpus.split(split) (empty: all zero).
std::vector<ScenarioCandidates> group_candidates(const Corpus& corpus, Split split,
                                                 std::span<const double> scores = {});

std::string pipeline_result_json(const PipelineResult& result, std::string_view mode, bool with_choices);
void write_pipeline_table(std::ostream& out, const PipelineResult& result, std::string_view mode);

}  // namespace nlgf
