#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nlgf {

enum class Goal { InformCurrentCondition, InformForecast };

// Integer values are the one-hot positions used by the classifiers.
enum class GeneratorSource : int { IR = 0, GenLSTM = 1, SCLSTMDelex = 2, SCLSTMLex = 3 };
inline constexpr std::size_t kNumSources = 4;
inline constexpr std::array<GeneratorSource, kNumSources> kAllSources = {
    GeneratorSource::IR, GeneratorSource::GenLSTM, GeneratorSource::SCLSTMDelex,
    GeneratorSource::SCLSTMLex};

enum class Split { Train, Eval, Test };
inline constexpr std::size_t kNumSplits = 3;

enum class Provenance { ReleasedDataset, Synthetic, HumanReference };

enum class CorpusFormat { Jsonl, Tsv };

std::string_view to_string(Goal goal);
std::string_view to_string(GeneratorSource source);
std::string_view to_string(Split split);
std::string_view to_string(Provenance provenance);

// Parsers throw DataError on unknown names.
Goal parse_goal(std::string_view name);
GeneratorSource parse_source(std::string_view name);
Split parse_split(std::string_view name);
CorpusFormat parse_format(std::string_view name);

inline std::size_t source_index(GeneratorSource s) { return static_cast<std::size_t>(s); }
inline std::size_t split_index(Split s) { return static_cast<std::size_t>(s); }

struct Scenario {
  std::string id;
  Goal goal = Goal::InformCurrentCondition;
  std::map<std::string, std::string> args;

  // Empty string when the argument is absent.
  const std::string& arg(const std::string& name) const;

  bool operator==(const Scenario&) const = default;
};

struct LabeledResponse {
  std::string scenario_id;
  std::string text;
  GeneratorSource source = GeneratorSource::IR;
  bool grammatical = true;
  std::optional<bool> semantically_correct;
  Split split = Split::Train;

  bool operator==(const LabeledResponse&) const = default;
};

class Corpus {
 public:
  Corpus() = default;
  // Validates that scenario ids are unique and every response resolves.
  Corpus(std::vector<Scenario> scenarios, std::vector<LabeledResponse> responses,
         Provenance provenance);

  const std::vector<Scenario>& scenarios() const { return scenarios_; }
  const std::vector<LabeledResponse>& responses() const { return responses_; }
  Provenance provenance() const { return provenance_; }

  const Scenario& scenario(const std::string& id) const;
  bool empty() const { return responses_.empty(); }

  // Responses of one split, in corpus order.
  std::vector<LabeledResponse> split(Split s) const;

  // Responses grouped by scenario id, scenarios in first-appearance order.
  std::vector<std::pair<std::string, std::vector<LabeledResponse>>> by_scenario(
      std::optional<Split> only = std::nullopt) const;

 private:
  std::vector<Scenario> scenarios_;
  std::vector<LabeledResponse> responses_;
  Provenance provenance_ = Provenance::Synthetic;
  std::map<std::string, std::size_t> scenario_index_;
};

// Rows are validated individually; the first bad row aborts the load with a
// DataError naming its line number.
Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format,
                   Provenance provenance = Provenance::ReleasedDataset);
Corpus read_corpus(std::istream& in, CorpusFormat format,
                   Provenance provenance = Provenance::ReleasedDataset,
                   const std::string& origin = "<stream>");

// Canonical key order; byte-identical for identical corpora.
void write_corpus(std::ostream& out, const Corpus& corpus, CorpusFormat format);
void save_corpus(const std::filesystem::path& path, const Corpus& corpus, CorpusFormat format);

// Scenario-only JSONL ({"id", "goal", "args"} per line), used by the synth command.
std::vector<Scenario> load_scenarios(const std::filesystem::path& path);
void write_scenarios(std::ostream& out, const std::vector<Scenario>& scenarios);

struct ClassCounts {
  std::size_t grammatical = 0;
  std::size_t ungrammatical = 0;
  bool operator==(const ClassCounts&) const = default;
};

struct CorpusStats {
  std::size_t num_responses = 0;
  std::size_t num_scenarios = 0;
  ClassCounts total;
  std::array<std::array<ClassCounts, kNumSplits>, kNumSources> by_source_split{};
  std::size_t semantically_correct = 0;
  std::size_t semantically_incorrect = 0;
  std::size_t total_tokens = 0;
  double avg_tokens = 0.0;
  std::size_t vocab_size = 0;
  std::size_t scenarios_without_grammatical = 0;
  // Over scenarios that have at least one response.
  double zero_grammatical_rate = 0.0;
};

CorpusStats corpus_stats(const Corpus& corpus);

std::size_t levenshtein(std::string_view a, std::string_view b);

// Greedy, first occurrence wins: a candidate is dropped when it is within
// edit distance 1 of any already retained text. Input order is preserved.
std::vector<std::string> dedup_candidates(const std::vector<std::string>& candidates);

// Applies dedup_candidates within each scenario (same source or not).
Corpus dedup_corpus(const Corpus& corpus);

// Two-step balancing of a training split. Step one equalizes the classes of
// each source; step two raises every source to the largest source total.
// Originals keep their order; sampled duplicates are appended afterwards.
std::vector<LabeledResponse> upsample_balance(const std::vector<LabeledResponse>& train,
                                              std::uint64_t seed);

// The same balancing over parallel (source, label) columns; returns row
// indices into the input, originals first. Used for featurized rows.
std::vector<std::size_t> upsample_indices(const std::vector<GeneratorSource>& sources,
                                          const std::vector<bool>& labels, std::uint64_t seed);

}  // namespace nlgf
