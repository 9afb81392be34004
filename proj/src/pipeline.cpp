#include "nlgf/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>

#include <json.hpp>

#include "nlgf/error.hpp"
#include "nlgf/metrics.hpp"

namespace nlgf {

using nlohmann::ordered_json;

namespace {

ordered_json number_or_inf(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double read_number_or_inf(const ordered_json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw DataError("filter file: bad threshold '" + s + "'");
  }
  return j.get<double>();
}

double rate(std::size_t num, std::size_t den) {
  return den ? static_cast<double>(num) / static_cast<double>(den) : 0.0;
}

}  // namespace

std::string_view to_string(ScorerKind kind) { return kind == ScorerKind::Gbdt ? "gbdt" : "cnn"; }

ScorerKind parse_scorer_kind(std::string_view name) {
  if (name == "gbdt") return ScorerKind::Gbdt;
  if (name == "cnn") return ScorerKind::Cnn;
  throw DataError("unknown scorer kind '" + std::string(name) + "'");
}

CalibratedFilter calibrate(std::span<const double> scores, const std::vector<bool>& labels,
                           double target_precision) {
  if (!(target_precision > 0.0 && target_precision <= 1.0)) {
    throw InvalidArgument("target precision must be in (0, 1]");
  }
  const OperatingPoint op = operating_point(scores, labels, target_precision);
  CalibratedFilter f;
  f.threshold = op.threshold;
  f.target_precision = target_precision;
  f.achieved = {op.precision, op.recall, op.attained};
  return f;
}

std::vector<std::size_t> filter_candidates(std::span<const double> scores, double threshold) {
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] >= threshold) kept.push_back(i);
  }
  return kept;
}

void write_filter(std::ostream& out, const CalibratedFilter& filter) {
  ordered_json j;
  j["version"] = 1;
  j["scorer"] = to_string(filter.scorer);
  j["model_path"] = filter.model_path;
  j["threshold"] = number_or_inf(filter.threshold);
  j["target_precision"] = filter.target_precision;
  j["achieved"] = {{"precision", filter.achieved.precision},
                   {"recall", filter.achieved.recall},
                   {"attained_target", filter.achieved.attained}};
  out << j.dump(1) << '\n';
}

CalibratedFilter read_filter(std::istream& in) {
  try {
    const auto j = ordered_json::parse(in);
    CalibratedFilter f;
    f.scorer = parse_scorer_kind(j.at("scorer").get<std::string>());
    f.model_path = j.value("model_path", std::string{});
    f.threshold = read_number_or_inf(j.at("threshold"));
    f.target_precision = j.at("target_precision").get<double>();
    const auto& a = j.at("achieved");
    f.achieved = {a.at("precision").get<double>(), a.at("recall").get<double>(),
                  a.at("attained_target").get<bool>()};
    return f;
  } catch (const ordered_json::exception& e) {
    throw DataError(std::string("filter file: ") + e.what());
  }
}

void save_filter(const std::filesystem::path& path, const CalibratedFilter& filter) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  write_filter(out, filter);
}

CalibratedFilter load_filter(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open filter file '" + path.string() + "'");
  return read_filter(in);
}

PipelineResult run_pipeline(const std::vector<ScenarioCandidates>& scenarios, const NGramModel& ranker,
                            const PipelineOptions& options) {
  if (scenarios.empty()) throw InvalidArgument("pipeline needs at least one scenario");
  PipelineResult r;
  r.scenarios = scenarios.size();
  for (const auto& sc : scenarios) {
    if (sc.candidates.empty()) {
      throw InvalidArgument("scenario '" + sc.scenario_id + "' has no candidates");
    }
    std::vector<std::size_t> pool;
    if (options.filter_threshold) {
      std::vector<double> scores;
      for (const auto& c : sc.candidates) scores.push_back(c.filter_score);
      pool = filter_candidates(scores, *options.filter_threshold);
    } else {
      for (std::size_t i = 0; i < sc.candidates.size(); ++i) pool.push_back(i);
    }
    ScenarioChoice choice{sc.scenario_id, std::nullopt, options.fallback};
    if (pool.empty()) {
      ++r.fallbacks;
    } else {
      std::vector<TokenSequence> tokens;
      for (std::size_t i : pool) tokens.push_back(sc.candidates[i].ranker_tokens);
      const std::size_t best = pool[lm_rank(ranker, tokens, options.length_normalize).front()];
      const PipelineCandidate& c = sc.candidates[best];
      choice.index = best;
      choice.text = c.text;
      if (c.grammatical && !*c.grammatical) ++r.ungrammatical_chosen;
      if (c.semantically_correct) {
        ++r.semantic_labeled_chosen;
        if (!*c.semantically_correct) ++r.semantically_incorrect_chosen;
      }
    }
    r.choices.push_back(std::move(choice));
  }
  const std::size_t chosen = r.scenarios - r.fallbacks;
  r.ungrammatical_top_rate = rate(r.ungrammatical_chosen, chosen);
  r.ungrammatical_top_rate_all = rate(r.ungrammatical_chosen, r.scenarios);
  if (r.semantic_labeled_chosen > 0) {
    r.semantically_incorrect_top_rate = rate(r.semantically_incorrect_chosen, r.semantic_labeled_chosen);
  }
  r.fallback_rate = rate(r.fallbacks, r.scenarios);
  return r;
}

std::vector<ScenarioCandidates> group_candidates(const Corpus& corpus, Split split,
                                                 std::span<const double> scores) {
  const auto rows = corpus.split(split);
  if (!scores.empty() && scores.size() != rows.size()) {
    throw InvalidArgument("score count does not match the split's response count");
  }
  std::vector<ScenarioCandidates> out;
  std::map<std::string, std::size_t> slot;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const LabeledResponse& r = rows[i];
    auto [it, fresh] = slot.emplace(r.scenario_id, out.size());
    if (fresh) out.push_back({r.scenario_id, {}});
    PipelineCandidate c;
    c.text = r.text;
    c.ranker_tokens = delexicalize(tokenize(r.text), corpus.scenario(r.scenario_id));
    c.filter_score = scores.empty() ? 0.0 : scores[i];
    c.grammatical = r.grammatical;
    c.semantically_correct = r.semantically_correct;
    out[it->second].candidates.push_back(std::move(c));
  }
  return out;
}

std::string pipeline_result_json(const PipelineResult& result, std::string_view mode, bool with_choices) {
  ordered_json j;
  j["mode"] = mode;
  j["scenarios"] = result.scenarios;
  j["fallbacks"] = result.fallbacks;
  j["ungrammatical_chosen"] = result.ungrammatical_chosen;
  j["ungrammatical_top_rate"] = result.ungrammatical_top_rate;
  j["ungrammatical_top_rate_incl_fallback"] = result.ungrammatical_top_rate_all;
  if (result.semantically_incorrect_top_rate) {
    j["semantically_incorrect_top_rate"] = *result.semantically_incorrect_top_rate;
  } else {
    j["semantically_incorrect_top_rate"] = nullptr;
  }
  j["fallback_rate"] = result.fallback_rate;
  if (with_choices) {
    ordered_json arr = ordered_json::array();
    for (const auto& c : result.choices) {
      ordered_json e;
      e["scenario_id"] = c.scenario_id;
      e["fallback"] = !c.index.has_value();
      if (c.index) e["candidate"] = *c.index;
      e["text"] = c.text;
      arr.push_back(e);
    }
    j["choices"] = arr;
  }
  return j.dump(1);
}

void write_pipeline_table(std::ostream& out, const PipelineResult& result, std::string_view mode) {
  auto pct = [](double v) { return format_percent(v) + "%"; };
  out << std::left << std::setw(40) << "mode" << mode << '\n'
      << std::setw(40) << "scenarios" << result.scenarios << '\n'
      << std::setw(40) << "ungrammatical top (non-fallback)" << pct(result.ungrammatical_top_rate) << '\n'
      << std::setw(40) << "ungrammatical top (all scenarios)" << pct(result.ungrammatical_top_rate_all) << '\n'
      << std::setw(40) << "semantically incorrect top"
      << (result.semantically_incorrect_top_rate ? pct(*result.semantically_incorrect_top_rate) : "n/a") << '\n'
      << std::setw(40) << "fallback rate" << pct(result.fallback_rate) << '\n';
}

}  // namespace nlgf
