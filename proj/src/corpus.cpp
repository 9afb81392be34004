#include "nlgf/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>
#include <unordered_set>

#include <json.hpp>

#include "nlgf/error.hpp"
#include "nlgf/rng.hpp"

namespace nlgf {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

const std::string kEmpty;

std::string row_error(const std::string& origin, std::size_t line, const std::string& what) {
  return origin + ": row " + std::to_string(line) + ": " + what;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return fields;
}

bool parse_flag(const json& value, const char* field) {
  if (value.is_boolean()) return value.get<bool>();
  if (value.is_number_integer()) {
    const auto v = value.get<long long>();
    if (v == 0 || v == 1) return v == 1;
  }
  throw DataError(std::string("field '") + field + "' must be 0 or 1");
}

bool parse_flag_text(const std::string& value, const char* field) {
  if (value == "1" || value == "true") return true;
  if (value == "0" || value == "false") return false;
  throw DataError(std::string("field '") + field + "' must be 0 or 1, got '" + value + "'");
}

const json& require(const json& row, const char* field) {
  auto it = row.find(field);
  if (it == row.end()) throw DataError(std::string("missing field '") + field + "'");
  return *it;
}

std::string require_string(const json& row, const char* field) {
  const json& v = require(row, field);
  if (!v.is_string()) throw DataError(std::string("field '") + field + "' must be a string");
  return v.get<std::string>();
}

std::map<std::string, std::string> parse_args(const json& value) {
  if (!value.is_object()) throw DataError("field 'args' must be an object");
  std::map<std::string, std::string> args;
  for (auto it = value.begin(); it != value.end(); ++it) {
    if (it.key().empty()) throw DataError("argument names must be nonempty");
    if (it.value().is_string()) {
      args[it.key()] = it.value().get<std::string>();
    } else if (it.value().is_number()) {
      args[it.key()] = it.value().dump();
    } else {
      throw DataError("argument '" + it.key() + "' must be a string");
    }
  }
  return args;
}

struct RowParts {
  Scenario scenario;
  LabeledResponse response;
};

RowParts parse_json_row(const json& row) {
  if (!row.is_object()) throw DataError("row is not a JSON object");
  RowParts parts;
  parts.scenario.id = require_string(row, "scenario_id");
  parts.scenario.goal = parse_goal(require_string(row, "goal"));
  parts.scenario.args = parse_args(require(row, "args"));
  parts.response.scenario_id = parts.scenario.id;
  parts.response.text = require_string(row, "text");
  parts.response.source = parse_source(require_string(row, "source"));
  parts.response.grammatical = parse_flag(require(row, "grammatical"), "grammatical");
  const json& sem = require(row, "semantically_correct");
  if (!sem.is_null()) parts.response.semantically_correct = parse_flag(sem, "semantically_correct");
  parts.response.split = parse_split(require_string(row, "split"));
  return parts;
}

const std::vector<std::string> kColumns = {"scenario_id", "goal",
                                           "args",        "text",
                                           "source",      "grammatical",
                                           "semantically_correct", "split"};

RowParts parse_tsv_row(const std::vector<std::string>& fields,
                       const std::map<std::string, std::size_t>& columns) {
  auto field = [&](const std::string& name) -> const std::string& {
    auto it = columns.find(name);
    if (it == columns.end() || it->second >= fields.size()) {
      throw DataError("missing field '" + name + "'");
    }
    return fields[it->second];
  };
  RowParts parts;
  parts.scenario.id = field("scenario_id");
  parts.scenario.goal = parse_goal(field("goal"));
  json args;
  try {
    args = json::parse(field("args"));
  } catch (const json::parse_error&) {
    throw DataError("field 'args' is not valid JSON");
  }
  parts.scenario.args = parse_args(args);
  parts.response.scenario_id = parts.scenario.id;
  parts.response.text = field("text");
  parts.response.source = parse_source(field("source"));
  parts.response.grammatical = parse_flag_text(field("grammatical"), "grammatical");
  const std::string& sem = field("semantically_correct");
  if (!sem.empty() && sem != "null") {
    parts.response.semantically_correct = parse_flag_text(sem, "semantically_correct");
  }
  parts.response.split = parse_split(field("split"));
  return parts;
}

ordered_json args_json(const Scenario& s) {
  ordered_json args = ordered_json::object();
  for (const auto& [k, v] : s.args) args[k] = v;
  return args;
}

std::vector<std::string> whitespace_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    const std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) out.emplace_back(text.substr(start, i - start));
  }
  return out;
}

}  // namespace

std::string_view to_string(Goal goal) {
  switch (goal) {
    case Goal::InformCurrentCondition: return "inform_current_condition";
    case Goal::InformForecast: return "inform_forecast";
  }
  return "?";
}

std::string_view to_string(GeneratorSource source) {
  switch (source) {
    case GeneratorSource::IR: return "IR";
    case GeneratorSource::GenLSTM: return "GenLSTM";
    case GeneratorSource::SCLSTMDelex: return "SCLSTMDelex";
    case GeneratorSource::SCLSTMLex: return "SCLSTMLex";
  }
  return "?";
}

std::string_view to_string(Split split) {
  switch (split) {
    case Split::Train: return "train";
    case Split::Eval: return "eval";
    case Split::Test: return "test";
  }
  return "?";
}

std::string_view to_string(Provenance provenance) {
  switch (provenance) {
    case Provenance::ReleasedDataset: return "released_dataset";
    case Provenance::Synthetic: return "synthetic";
    case Provenance::HumanReference: return "human_reference";
  }
  return "?";
}

Goal parse_goal(std::string_view name) {
  if (name == "inform_current_condition") return Goal::InformCurrentCondition;
  if (name == "inform_forecast") return Goal::InformForecast;
  throw DataError("unknown goal '" + std::string(name) + "'");
}

GeneratorSource parse_source(std::string_view name) {
  // Canonical names first, then the display names used in published tables.
  static const std::map<std::string, GeneratorSource, std::less<>> names = {
      {"IR", GeneratorSource::IR},
      {"GenLSTM", GeneratorSource::GenLSTM},
      {"SCLSTMDelex", GeneratorSource::SCLSTMDelex},
      {"SCLSTMLex", GeneratorSource::SCLSTMLex},
      {"Gen LSTM", GeneratorSource::GenLSTM},
      {"genLSTM", GeneratorSource::GenLSTM},
      {"SC-LSTM Delex", GeneratorSource::SCLSTMDelex},
      {"sc-LSTM Delex", GeneratorSource::SCLSTMDelex},
      {"sc-LSTM delex", GeneratorSource::SCLSTMDelex},
      {"SC-LSTM Lex", GeneratorSource::SCLSTMLex},
      {"sc-LSTM Lex", GeneratorSource::SCLSTMLex},
      {"sc-LSTM lex", GeneratorSource::SCLSTMLex},
  };
  auto it = names.find(name);
  if (it == names.end()) throw DataError("unknown source '" + std::string(name) + "'");
  return it->second;
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::Train;
  if (name == "eval") return Split::Eval;
  if (name == "test") return Split::Test;
  throw DataError("unknown split '" + std::string(name) + "'");
}

CorpusFormat parse_format(std::string_view name) {
  if (name == "jsonl") return CorpusFormat::Jsonl;
  if (name == "tsv") return CorpusFormat::Tsv;
  throw DataError("unknown format '" + std::string(name) + "'");
}

const std::string& Scenario::arg(const std::string& name) const {
  auto it = args.find(name);
  return it == args.end() ? kEmpty : it->second;
}

Corpus::Corpus(std::vector<Scenario> scenarios, std::vector<LabeledResponse> responses,
               Provenance provenance)
    : scenarios_(std::move(scenarios)),
      responses_(std::move(responses)),
      provenance_(provenance) {
  for (std::size_t i = 0; i < scenarios_.size(); ++i) {
    if (!scenario_index_.emplace(scenarios_[i].id, i).second) {
      throw DataError("duplicate scenario id '" + scenarios_[i].id + "'");
    }
  }
  for (const auto& r : responses_) {
    if (!scenario_index_.count(r.scenario_id)) {
      throw DataError("response references unknown scenario '" + r.scenario_id + "'");
    }
    if (r.text.empty()) throw DataError("empty response text in scenario '" + r.scenario_id + "'");
  }
}

const Scenario& Corpus::scenario(const std::string& id) const {
  auto it = scenario_index_.find(id);
  if (it == scenario_index_.end()) throw DataError("unknown scenario '" + id + "'");
  return scenarios_[it->second];
}

std::vector<LabeledResponse> Corpus::split(Split s) const {
  std::vector<LabeledResponse> out;
  for (const auto& r : responses_) {
    if (r.split == s) out.push_back(r);
  }
  return out;
}

std::vector<std::pair<std::string, std::vector<LabeledResponse>>> Corpus::by_scenario(
    std::optional<Split> only) const {
  std::vector<std::pair<std::string, std::vector<LabeledResponse>>> groups;
  std::map<std::string, std::size_t> slot;
  for (const auto& r : responses_) {
    if (only && r.split != *only) continue;
    auto [it, inserted] = slot.emplace(r.scenario_id, groups.size());
    if (inserted) groups.emplace_back(r.scenario_id, std::vector<LabeledResponse>{});
    groups[it->second].second.push_back(r);
  }
  return groups;
}

Corpus read_corpus(std::istream& in, CorpusFormat format, Provenance provenance,
                   const std::string& origin) {
  std::vector<Scenario> scenarios;
  std::map<std::string, std::size_t> scenario_slot;
  std::vector<LabeledResponse> responses;
  std::set<std::tuple<std::string, std::string, GeneratorSource>> seen;
  std::map<std::string, std::size_t> columns;

  std::string line;
  std::size_t line_no = 0;
  bool header_done = format == CorpusFormat::Jsonl;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header_done) {
      const auto names = split_tabs(line);
      for (std::size_t i = 0; i < names.size(); ++i) columns[names[i]] = i;
      for (const auto& c : kColumns) {
        if (!columns.count(c)) {
          throw DataError(row_error(origin, line_no, "TSV header lacks column '" + c + "'"));
        }
      }
      header_done = true;
      continue;
    }
    RowParts parts;
    try {
      if (format == CorpusFormat::Jsonl) {
        json row;
        try {
          row = json::parse(line);
        } catch (const json::parse_error& e) {
          throw DataError(std::string("invalid JSON: ") + e.what());
        }
        parts = parse_json_row(row);
      } else {
        parts = parse_tsv_row(split_tabs(line), columns);
      }
      if (parts.response.text.empty()) throw DataError("field 'text' is empty");
      if (parts.scenario.id.empty()) throw DataError("field 'scenario_id' is empty");
      auto [it, inserted] = scenario_slot.emplace(parts.scenario.id, scenarios.size());
      if (inserted) {
        scenarios.push_back(parts.scenario);
      } else if (!(scenarios[it->second] == parts.scenario)) {
        throw DataError("scenario '" + parts.scenario.id +
                        "' redefined with a different goal or arguments");
      }
      if (!seen.emplace(parts.response.scenario_id, parts.response.text, parts.response.source)
               .second) {
        throw DataError("duplicate (scenario_id, text, source) triple");
      }
    } catch (const DataError& e) {
      throw DataError(row_error(origin, line_no, e.what()));
    }
    responses.push_back(std::move(parts.response));
  }
  if (!header_done) throw DataError(origin + ": missing TSV header row");
  return Corpus(std::move(scenarios), std::move(responses), provenance);
}

Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format,
                   Provenance provenance) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus file '" + path.string() + "'");
  return read_corpus(in, format, provenance, path.string());
}

void write_corpus(std::ostream& out, const Corpus& corpus, CorpusFormat format) {
  if (format == CorpusFormat::Tsv) {
    for (std::size_t i = 0; i < kColumns.size(); ++i) out << (i ? "\t" : "") << kColumns[i];
    out << '\n';
  }
  for (const auto& r : corpus.responses()) {
    const Scenario& s = corpus.scenario(r.scenario_id);
    if (format == CorpusFormat::Jsonl) {
      ordered_json row;
      row["scenario_id"] = r.scenario_id;
      row["goal"] = to_string(s.goal);
      row["args"] = args_json(s);
      row["text"] = r.text;
      row["source"] = to_string(r.source);
      row["grammatical"] = r.grammatical ? 1 : 0;
      row["semantically_correct"] =
          r.semantically_correct ? ordered_json(*r.semantically_correct ? 1 : 0) : ordered_json();
      row["split"] = to_string(r.split);
      out << row.dump() << '\n';
    } else {
      if (r.text.find('\t') != std::string::npos) {
        throw DataError("response text contains a tab; cannot write TSV");
      }
      out << r.scenario_id << '\t' << to_string(s.goal) << '\t' << args_json(s).dump() << '\t'
          << r.text << '\t' << to_string(r.source) << '\t' << (r.grammatical ? 1 : 0) << '\t'
          << (r.semantically_correct ? (*r.semantically_correct ? "1" : "0") : "null") << '\t'
          << to_string(r.split) << '\n';
    }
  }
}

void save_corpus(const std::filesystem::path& path, const Corpus& corpus, CorpusFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  write_corpus(out, corpus, format);
}

std::vector<Scenario> load_scenarios(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open scenario file '" + path.string() + "'");
  std::vector<Scenario> out;
  std::set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    try {
      json row;
      try {
        row = json::parse(line);
      } catch (const json::parse_error& e) {
        throw DataError(std::string("invalid JSON: ") + e.what());
      }
      Scenario s;
      s.id = require_string(row, "id");
      s.goal = parse_goal(require_string(row, "goal"));
      s.args = parse_args(require(row, "args"));
      if (!ids.insert(s.id).second) throw DataError("duplicate scenario id '" + s.id + "'");
      out.push_back(std::move(s));
    } catch (const DataError& e) {
      throw DataError(row_error(path.string(), line_no, e.what()));
    }
  }
  return out;
}

void write_scenarios(std::ostream& out, const std::vector<Scenario>& scenarios) {
  for (const auto& s : scenarios) {
    ordered_json row;
    row["id"] = s.id;
    row["goal"] = to_string(s.goal);
    row["args"] = args_json(s);
    out << row.dump() << '\n';
  }
}

CorpusStats corpus_stats(const Corpus& corpus) {
  CorpusStats st;
  st.num_responses = corpus.responses().size();
  std::unordered_set<std::string> vocab;
  std::map<std::string, bool> has_grammatical;
  for (const auto& r : corpus.responses()) {
    auto& cell = st.by_source_split[source_index(r.source)][split_index(r.split)];
    if (r.grammatical) {
      ++st.total.grammatical;
      ++cell.grammatical;
    } else {
      ++st.total.ungrammatical;
      ++cell.ungrammatical;
    }
    if (r.semantically_correct) {
      ++(*r.semantically_correct ? st.semantically_correct : st.semantically_incorrect);
    }
    for (auto& tok : whitespace_tokens(r.text)) {
      ++st.total_tokens;
      std::transform(tok.begin(), tok.end(), tok.begin(),
                     [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
      vocab.insert(std::move(tok));
    }
    bool& flag = has_grammatical[r.scenario_id];
    flag = flag || r.grammatical;
  }
  st.num_scenarios = has_grammatical.size();
  st.vocab_size = vocab.size();
  if (st.num_responses > 0) {
    st.avg_tokens = static_cast<double>(st.total_tokens) / static_cast<double>(st.num_responses);
  }
  for (const auto& [id, any] : has_grammatical) {
    if (!any) ++st.scenarios_without_grammatical;
  }
  if (st.num_scenarios > 0) {
    st.zero_grammatical_rate = static_cast<double>(st.scenarios_without_grammatical) /
                               static_cast<double>(st.num_scenarios);
  }
  return st;
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

namespace {

bool within_one_edit(std::string_view a, std::string_view b) {
  const std::size_t la = a.size(), lb = b.size();
  if ((la > lb ? la - lb : lb - la) > 1) return false;
  return levenshtein(a, b) <= 1;
}

}  // namespace

std::vector<std::string> dedup_candidates(const std::vector<std::string>& candidates) {
  std::vector<std::string> kept;
  for (const auto& c : candidates) {
    const bool near = std::any_of(kept.begin(), kept.end(),
                                  [&](const std::string& k) { return within_one_edit(c, k); });
    if (!near) kept.push_back(c);
  }
  return kept;
}

Corpus dedup_corpus(const Corpus& corpus) {
  std::map<std::string, std::vector<std::string>> kept;
  std::vector<LabeledResponse> out;
  for (const auto& r : corpus.responses()) {
    auto& pool = kept[r.scenario_id];
    const bool near = std::any_of(pool.begin(), pool.end(),
                                  [&](const std::string& k) { return within_one_edit(r.text, k); });
    if (near) continue;
    pool.push_back(r.text);
    out.push_back(r);
  }
  return Corpus(corpus.scenarios(), std::move(out), corpus.provenance());
}

std::vector<std::size_t> upsample_indices(const std::vector<GeneratorSource>& sources,
                                          const std::vector<bool>& labels, std::uint64_t seed) {
  if (sources.size() != labels.size()) throw InvalidArgument("sources and labels differ in length");
  // members[source][class] -> row indices, class 1 = grammatical
  std::array<std::array<std::vector<std::size_t>, 2>, kNumSources> members;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    members[source_index(sources[i])][labels[i] ? 1 : 0].push_back(i);
  }
  std::size_t per_class_target = 0;
  for (std::size_t s = 0; s < kNumSources; ++s) {
    const auto& m = members[s];
    if (m[0].empty() && m[1].empty()) continue;
    if (m[0].empty() || m[1].empty()) {
      throw DataError(std::string("source ") + std::string(to_string(kAllSources[s])) +
                      " has no " + (m[0].empty() ? "ungrammatical" : "grammatical") +
                      " training examples; cannot balance");
    }
    per_class_target = std::max({per_class_target, m[0].size(), m[1].size()});
  }

  Rng rng(seed);
  std::vector<std::size_t> out(sources.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = i;
  for (std::size_t s = 0; s < kNumSources; ++s) {
    const auto& m = members[s];
    if (m[0].empty()) continue;
    // Step one: minority class up to the majority class of this source.
    const std::size_t majority = std::max(m[0].size(), m[1].size());
    for (int cls = 0; cls < 2; ++cls) {
      for (std::size_t k = m[cls].size(); k < majority; ++k) {
        out.push_back(m[cls][rng.index(m[cls].size())]);
      }
    }
    // Step two: both classes up to the largest source's class size.
    for (int cls = 0; cls < 2; ++cls) {
      for (std::size_t k = majority; k < per_class_target; ++k) {
        out.push_back(m[cls][rng.index(m[cls].size())]);
      }
    }
  }
  return out;
}

std::vector<LabeledResponse> upsample_balance(const std::vector<LabeledResponse>& train,
                                              std::uint64_t seed) {
  std::vector<GeneratorSource> sources;
  std::vector<bool> labels;
  for (const auto& r : train) {
    if (r.split != Split::Train) {
      throw InvalidArgument("upsample_balance accepts train-split responses only");
    }
    sources.push_back(r.source);
    labels.push_back(r.grammatical);
  }
  std::vector<LabeledResponse> out;
  for (std::size_t i : upsample_indices(sources, labels, seed)) out.push_back(train[i]);
  return out;
}

}  // namespace nlgf
