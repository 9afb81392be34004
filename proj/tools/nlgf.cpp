// nlgf: command-line front end for the generate-filter-rank toolkit.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nlgf/cnn.hpp"
#include "nlgf/corpus.hpp"
#include "nlgf/delex.hpp"
#include "nlgf/error.hpp"
#include "nlgf/gbdt.hpp"
#include "nlgf/lm_features.hpp"
#include "nlgf/metrics.hpp"
#include "nlgf/ngram_lm.hpp"
#include "nlgf/pipeline.hpp"
#include "nlgf/synth.hpp"
#include "nlgf/weather_kit.hpp"

using nlohmann::ordered_json;
using namespace nlgf;

namespace {

constexpr int kFeatureFileVersion = 1;
constexpr int kScoreFileVersion = 1;

void log(const std::string& msg) { std::cerr << "[nlgf] " << msg << '\n'; }

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  return in;
}

std::vector<std::string> read_templates(const std::string& path) {
  auto in = open_in(path);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    out.push_back(line);
  }
  if (out.empty()) throw DataError("no templates in '" + path + "'");
  return out;
}

std::optional<Split> parse_split_filter(const std::string& name) {
  if (name == "all") return std::nullopt;
  return parse_split(name);
}

// Reads a JSONL file whose first line is a header object carrying `tag`.
std::pair<ordered_json, std::vector<ordered_json>> read_tagged_jsonl(const std::string& path,
                                                                     const std::string& tag, int version) {
  auto in = open_in(path);
  std::string line;
  std::size_t lineno = 0;
  ordered_json header;
  std::vector<ordered_json> rows;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const ordered_json::parse_error&) {
      throw DataError(path + ":" + std::to_string(lineno) + ": invalid JSON");
    }
    if (header.is_null()) {
      if (!j.contains(tag) || j.at(tag) != version) {
        throw DataError(path + ": missing or unsupported '" + tag + "' header");
      }
      header = std::move(j);
    } else {
      rows.push_back(std::move(j));
    }
  }
  if (header.is_null()) throw DataError(path + ": empty file");
  return {std::move(header), std::move(rows)};
}

struct ScoreRow {
  std::string scenario_id;
  Split split = Split::Test;
  GeneratorSource source = GeneratorSource::IR;
  bool label = false;
  double score = 0.0;
};

std::vector<ScoreRow> read_scores(const std::string& path) {
  auto [header, rows] = read_tagged_jsonl(path, "nlgf_scores", kScoreFileVersion);
  std::vector<ScoreRow> out;
  try {
    for (const auto& j : rows) {
      out.push_back({j.at("scenario_id").get<std::string>(), parse_split(j.at("split").get<std::string>()),
                     parse_source(j.at("source").get<std::string>()), j.at("grammatical").get<bool>(),
                     j.at("score").get<double>()});
    }
  } catch (const ordered_json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
  return out;
}

void write_scores(const std::string& path, const std::vector<LabeledResponse>& rows,
                  const std::vector<double>& scores, const std::string& scorer) {
  auto out = open_out(path);
  ordered_json h;
  h["nlgf_scores"] = kScoreFileVersion;
  h["scorer"] = scorer;
  out << h.dump() << '\n';
  for (std::size_t i = 0; i < rows.size(); ++i) {
    ordered_json j;
    j["scenario_id"] = rows[i].scenario_id;
    j["split"] = to_string(rows[i].split);
    j["source"] = to_string(rows[i].source);
    j["grammatical"] = rows[i].grammatical;
    j["score"] = scores[i];
    out << j.dump() << '\n';
  }
}

struct FeatureRows {
  std::vector<std::string> names;
  bool with_source = false;
  std::vector<ScoreRow> meta;  // score unused
  std::vector<std::vector<double>> values;
};

FeatureRows read_features(const std::string& path) {
  auto [header, rows] = read_tagged_jsonl(path, "nlgf_features", kFeatureFileVersion);
  FeatureRows f;
  try {
    f.names = header.at("feature_names").get<std::vector<std::string>>();
    f.with_source = header.at("with_source").get<bool>();
    for (const auto& j : rows) {
      f.meta.push_back({j.at("scenario_id").get<std::string>(), parse_split(j.at("split").get<std::string>()),
                        parse_source(j.at("source").get<std::string>()), j.at("grammatical").get<bool>(), 0.0});
      f.values.push_back(j.at("features").get<std::vector<double>>());
      if (f.values.back().size() != f.names.size()) throw DataError(path + ": feature row has the wrong width");
    }
  } catch (const ordered_json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
  return f;
}

TokenSequence delex_response(const Corpus& corpus, const LabeledResponse& r, DelexMode mode = DelexMode::Standard) {
  return delexicalize(tokenize(r.text), corpus.scenario(r.scenario_id), mode);
}

std::vector<double> feature_row(const NGramModel& lm, const Corpus& corpus, const LabeledResponse& r,
                                bool with_source) {
  FeatureVector fv = extract_features(sentence_probs(lm, delex_response(corpus, r)));
  if (with_source) fv.source_onehot = source_onehot(r.source);
  return fv.values();
}

std::vector<CnnExample> cnn_examples(const Corpus& corpus, const std::vector<LabeledResponse>& rows) {
  std::vector<CnnExample> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back({delex_response(corpus, r), r.source, r.grammatical});
  return out;
}

// Scores rows of a corpus with a saved filter model of either kind.
std::vector<double> score_rows(ScorerKind kind, const std::string& model_path, const std::string& feature_lm,
                               const Corpus& corpus, const std::vector<LabeledResponse>& rows) {
  std::vector<double> scores;
  if (kind == ScorerKind::Cnn) {
    const CnnModel model = load_cnn(model_path);
    for (const auto& r : rows) scores.push_back(cnn_forward(model, delex_response(corpus, r), r.source));
    return scores;
  }
  if (feature_lm.empty()) throw InvalidArgument("a GBDT filter needs --feature-lm to compute its features");
  const GbdtModel model = load_gbdt(model_path);
  const NGramModel lm = load_lm(feature_lm);
  const bool with_source = model.dimension == kNumLmFeatures + kNumSources;
  for (const auto& r : rows) scores.push_back(gbdt_score(model, feature_row(lm, corpus, r, with_source)));
  return scores;
}

std::string stats_json(const CorpusStats& s) {
  ordered_json j;
  j["responses"] = s.num_responses;
  j["scenarios"] = s.num_scenarios;
  j["grammatical"] = s.total.grammatical;
  j["ungrammatical"] = s.total.ungrammatical;
  j["semantically_correct"] = s.semantically_correct;
  j["semantically_incorrect"] = s.semantically_incorrect;
  j["avg_tokens"] = s.avg_tokens;
  j["vocab_size"] = s.vocab_size;
  j["scenarios_without_grammatical"] = s.scenarios_without_grammatical;
  j["zero_grammatical_rate"] = s.zero_grammatical_rate;
  ordered_json grid;
  for (GeneratorSource src : kAllSources) {
    ordered_json row;
    for (Split sp : {Split::Train, Split::Eval, Split::Test}) {
      const ClassCounts& c = s.by_source_split[source_index(src)][split_index(sp)];
      row[std::string(to_string(sp))] = {{"grammatical", c.grammatical}, {"ungrammatical", c.ungrammatical}};
    }
    grid[std::string(to_string(src))] = row;
  }
  j["by_source_split"] = grid;
  return j.dump(1);
}

void stats_table(std::ostream& out, const CorpusStats& s) {
  out << "responses " << s.num_responses << " (grammatical " << s.total.grammatical << ", ungrammatical "
      << s.total.ungrammatical << "), scenarios " << s.num_scenarios << ", vocab " << s.vocab_size
      << ", avg tokens " << std::fixed << std::setprecision(2) << s.avg_tokens << ", zero-grammatical scenarios "
      << std::setprecision(1) << 100.0 * s.zero_grammatical_rate << "%\n";
  out << std::left << std::setw(14) << "source";
  for (Split sp : {Split::Train, Split::Eval, Split::Test}) out << std::setw(16) << to_string(sp);
  out << "\n";
  for (GeneratorSource src : kAllSources) {
    out << std::setw(14) << to_string(src);
    for (Split sp : {Split::Train, Split::Eval, Split::Test}) {
      const ClassCounts& c = s.by_source_split[source_index(src)][split_index(sp)];
      out << std::setw(16) << (std::to_string(c.grammatical) + "/" + std::to_string(c.ungrammatical));
    }
    out << "\n";
  }
  out << "(cells: grammatical/ungrammatical)\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nlgf: grammaticality filtering and ranking for generated responses"};
  app.require_subcommand(1);
  app.set_config("--config", "", "INI/TOML file supplying option values (flags take precedence)");
  std::uint64_t seed = 0;
  std::string format_name = "jsonl";
  app.add_option("--seed", seed, "Seed for every stochastic step")->capture_default_str();
  app.add_option("--format", format_name, "Corpus file format")
      ->check(CLI::IsMember({"jsonl", "tsv"}))
      ->capture_default_str();

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a labeled synthetic corpus");
  std::string templates_path, scenarios_path, synth_out, references_out, scenarios_out;
  std::size_t num_scenarios = 600, num_reference_scenarios = 400, per_scenario = 4;
  double error_rate = 0.4;
  synth->add_option("--templates", templates_path, "Candidate templates, one per line (default: built-in)");
  synth->add_option("--scenarios", scenarios_path, "Scenario JSONL (default: generate --num-scenarios)");
  synth->add_option("--num-scenarios", num_scenarios)->capture_default_str();
  synth->add_option("--error-rate", error_rate)->capture_default_str();
  synth->add_option("--candidates-per-scenario", per_scenario, "0 keeps every applicable template")
      ->capture_default_str();
  synth->add_option("--references-out", references_out, "Also write a reference corpus for LM training");
  synth->add_option("--num-reference-scenarios", num_reference_scenarios)->capture_default_str();
  synth->add_option("--scenarios-out", scenarios_out, "Write the scenarios used");
  synth->add_option("--out", synth_out)->required();

  // stats
  auto* stats = app.add_subcommand("stats", "Corpus statistics");
  std::string stats_corpus;
  bool stats_human = false;
  stats->add_option("--corpus", stats_corpus)->required();
  stats->add_flag("--table", stats_human, "Print an aligned table instead of JSON");

  // delex
  auto* delex = app.add_subcommand("delex", "Delexicalize a corpus");
  std::string delex_corpus, delex_out, delex_mode = "standard";
  bool delex_dedup = false;
  delex->add_option("--corpus", delex_corpus)->required();
  delex->add_option("--mode", delex_mode)->check(CLI::IsMember({"standard", "full"}))->capture_default_str();
  delex->add_flag("--dedup", delex_dedup, "Drop near-duplicates within each scenario first");
  delex->add_option("--out", delex_out)->required();

  // train-lm
  auto* train_lm_cmd = app.add_subcommand("train-lm", "Train the n-gram ranker on delexicalized references");
  std::string lm_corpus, lm_out, lm_split = "all";
  LmOptions lm_opts;
  lm_opts.order = 7;
  train_lm_cmd->add_option("--corpus", lm_corpus)->required();
  train_lm_cmd->add_option("--split", lm_split)->check(CLI::IsMember({"all", "train", "eval", "test"}))
      ->capture_default_str();
  train_lm_cmd->add_option("--order", lm_opts.order)->capture_default_str();
  train_lm_cmd->add_option("--lambda", lm_opts.lambda)->capture_default_str();
  train_lm_cmd->add_option("--min-count", lm_opts.min_count)->capture_default_str();
  train_lm_cmd->add_option("--out", lm_out)->required();

  // featurize
  auto* featurize = app.add_subcommand("featurize", "LM probability features for every response");
  std::string feat_corpus, feat_lm, feat_out;
  bool feat_source = false;
  featurize->add_option("--corpus", feat_corpus)->required();
  featurize->add_option("--lm", feat_lm)->required();
  featurize->add_flag("--with-source", feat_source, "Append the generator one-hot");
  featurize->add_option("--out", feat_out)->required();

  // train-gbdt
  auto* train_gbdt_cmd = app.add_subcommand("train-gbdt", "Train the LM-feature GBDT classifier");
  std::string gbdt_features, gbdt_out;
  GbdtParams gbdt_params;
  bool gbdt_no_upsample = false;
  train_gbdt_cmd->add_option("--features", gbdt_features)->required();
  train_gbdt_cmd->add_option("--num-trees", gbdt_params.num_trees)->capture_default_str();
  train_gbdt_cmd->add_option("--max-depth", gbdt_params.max_depth)->capture_default_str();
  train_gbdt_cmd->add_option("--learning-rate", gbdt_params.learning_rate)->capture_default_str();
  train_gbdt_cmd->add_option("--min-samples-leaf", gbdt_params.min_samples_leaf)->capture_default_str();
  train_gbdt_cmd->add_option("--subsample", gbdt_params.subsample)->capture_default_str();
  train_gbdt_cmd->add_flag("--no-upsample", gbdt_no_upsample, "Train on the raw class balance");
  train_gbdt_cmd->add_option("--out", gbdt_out)->required();

  // train-cnn
  auto* train_cnn_cmd = app.add_subcommand("train-cnn", "Train the convolutional classifier");
  std::string cnn_corpus, cnn_out, cnn_report;
  CnnParams cnn_params;
  bool cnn_no_upsample = false;
  train_cnn_cmd->add_option("--corpus", cnn_corpus)->required();
  train_cnn_cmd->add_option("--embedding-dim", cnn_params.embedding_dim)->capture_default_str();
  train_cnn_cmd->add_option("--filters", cnn_params.filters, "Filters per width")->capture_default_str();
  train_cnn_cmd->add_option("--widths", cnn_params.widths)->delimiter(',')->capture_default_str();
  train_cnn_cmd->add_option("--dropout", cnn_params.dropout)->capture_default_str();
  train_cnn_cmd->add_option("--learning-rate", cnn_params.learning_rate)->capture_default_str();
  train_cnn_cmd->add_option("--batch-size", cnn_params.batch_size)->capture_default_str();
  train_cnn_cmd->add_option("--epochs", cnn_params.epochs)->capture_default_str();
  train_cnn_cmd->add_flag("--use-source", cnn_params.use_source, "Concatenate the generator one-hot");
  train_cnn_cmd->add_option("--threads", cnn_params.threads, "Does not change results")->capture_default_str();
  train_cnn_cmd->add_flag("--no-upsample", cnn_no_upsample);
  train_cnn_cmd->add_option("--report", cnn_report, "Write the per-epoch training report (JSON)");
  train_cnn_cmd->add_option("--out", cnn_out)->required();

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Score a split and report recall at a target precision");
  std::string eval_scorer = "cnn", eval_model, eval_corpus, eval_features, eval_lm, eval_split = "test",
              eval_scores_out, eval_label;
  double eval_target = 0.98;
  evaluate->add_option("--scorer", eval_scorer)->check(CLI::IsMember({"cnn", "gbdt"}))->capture_default_str();
  evaluate->add_option("--model", eval_model)->required();
  evaluate->add_option("--corpus", eval_corpus, "Corpus (CNN, or GBDT with --feature-lm)");
  evaluate->add_option("--features", eval_features, "Feature file (GBDT)");
  evaluate->add_option("--feature-lm", eval_lm, "LM for computing GBDT features from --corpus");
  evaluate->add_option("--split", eval_split)->check(CLI::IsMember({"all", "train", "eval", "test"}))
      ->capture_default_str();
  evaluate->add_option("--target-precision", eval_target)->capture_default_str();
  evaluate->add_option("--scores-out", eval_scores_out, "Write per-response scores (JSONL)");
  evaluate->add_option("--label", eval_label, "Model name for the report row");

  // calibrate
  auto* calibrate_cmd = app.add_subcommand("calibrate", "Pick the filter threshold for a target precision");
  std::string cal_scores, cal_out, cal_split = "eval", cal_scorer = "cnn", cal_model_path;
  double cal_target = 0.98;
  calibrate_cmd->add_option("--scores", cal_scores)->required();
  calibrate_cmd->add_option("--split", cal_split)->check(CLI::IsMember({"all", "train", "eval", "test"}))
      ->capture_default_str();
  calibrate_cmd->add_option("--target-precision", cal_target)->capture_default_str();
  calibrate_cmd->add_option("--scorer", cal_scorer)->check(CLI::IsMember({"cnn", "gbdt"}))->capture_default_str();
  calibrate_cmd->add_option("--model-path", cal_model_path, "Recorded in the filter file");
  calibrate_cmd->add_option("--out", cal_out)->required();

  // pipeline-eval
  auto* pipe = app.add_subcommand("pipeline-eval", "Compare rank-only and filter-then-rank selection");
  std::string pipe_corpus, pipe_ranker, pipe_filter_model, pipe_threshold, pipe_mode = "filter-rank",
              pipe_split = "test", pipe_feature_lm, pipe_out;
  std::string pipe_fallback(kDefaultFallback);
  bool pipe_choices = false, pipe_raw_scores = false;
  pipe->add_option("--corpus", pipe_corpus)->required();
  pipe->add_option("--ranker-model", pipe_ranker)->required();
  pipe->add_option("--filter-model", pipe_filter_model, "Default: the path recorded in --threshold-file");
  pipe->add_option("--threshold-file", pipe_threshold, "Calibrated filter (JSON)");
  pipe->add_option("--feature-lm", pipe_feature_lm, "LM for GBDT filter features (default: the ranker)");
  pipe->add_option("--fallback-text", pipe_fallback)->capture_default_str();
  pipe->add_option("--mode", pipe_mode)->check(CLI::IsMember({"rank-only", "filter-rank"}))->capture_default_str();
  pipe->add_option("--split", pipe_split)->check(CLI::IsMember({"all", "train", "eval", "test"}))
      ->capture_default_str();
  pipe->add_flag("--raw-ranker-scores", pipe_raw_scores, "Rank by total instead of mean log probability");
  pipe->add_flag("--with-choices", pipe_choices, "Include every scenario's choice in the JSON");
  pipe->add_option("--out", pipe_out, "Also write the JSON report here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  std::cerr << "[nlgf] resolved configuration:\n" << app.config_to_str(true, false);
  const CorpusFormat format = parse_format(format_name);

  try {
    if (*synth) {
      const std::vector<std::string> templates =
          templates_path.empty() ? weather::candidate_templates() : read_templates(templates_path);
      const std::vector<Scenario> scenarios = scenarios_path.empty()
                                                  ? weather::make_scenarios(num_scenarios, seed)
                                                  : load_scenarios(scenarios_path);
      SynthOptions opts;
      opts.error_rate = error_rate;
      opts.profiles = weather::default_profiles();
      opts.seed = seed;
      opts.candidates_per_scenario = per_scenario;
      const Corpus corpus = generate_synthetic_corpus(templates, scenarios, opts);
      save_corpus(synth_out, corpus, format);
      log("wrote " + std::to_string(corpus.responses().size()) + " responses to " + synth_out);
      if (!scenarios_out.empty()) {
        auto out = open_out(scenarios_out);
        write_scenarios(out, scenarios);
      }
      if (!references_out.empty()) {
        const auto ref_scenarios = weather::make_scenarios(num_reference_scenarios, seed + 1, "ref");
        const Corpus refs = realize_references(weather::reference_templates(), ref_scenarios);
        save_corpus(references_out, refs, format);
        log("wrote " + std::to_string(refs.responses().size()) + " references to " + references_out);
      }
    } else if (*stats) {
      const CorpusStats s = corpus_stats(load_corpus(stats_corpus, format));
      if (stats_human) {
        stats_table(std::cout, s);
      } else {
        std::cout << stats_json(s) << '\n';
      }
    } else if (*delex) {
      Corpus corpus = load_corpus(delex_corpus, format);
      if (delex_dedup) corpus = dedup_corpus(corpus);
      const DelexMode mode = delex_mode == "full" ? DelexMode::Full : DelexMode::Standard;
      // Canonical rows with a delex_text field appended.
      std::stringstream canonical;
      write_corpus(canonical, corpus, CorpusFormat::Jsonl);
      auto out = open_out(delex_out);
      std::string line;
      for (const auto& r : corpus.responses()) {
        std::getline(canonical, line);
        ordered_json j = ordered_json::parse(line);
        j["delex_text"] = join_tokens(delex_response(corpus, r, mode));
        out << j.dump() << '\n';
      }
      log("delexicalized " + std::to_string(corpus.responses().size()) + " responses");
    } else if (*train_lm_cmd) {
      const Corpus corpus = load_corpus(lm_corpus, format);
      const auto only = parse_split_filter(lm_split);
      std::vector<TokenSequence> sentences;
      for (const auto& r : corpus.responses()) {
        if (only && r.split != *only) continue;
        if (!r.grammatical) continue;
        sentences.push_back(delex_response(corpus, r));
      }
      const NGramModel lm = train_lm(sentences, lm_opts);
      save_lm(lm_out, lm);
      log("trained order-" + std::to_string(lm.order()) + " LM on " + std::to_string(sentences.size()) +
          " sentences, vocabulary " + std::to_string(lm.vocab_size()));
    } else if (*featurize) {
      const Corpus corpus = load_corpus(feat_corpus, format);
      const NGramModel lm = load_lm(feat_lm);
      auto out = open_out(feat_out);
      ordered_json h;
      h["nlgf_features"] = kFeatureFileVersion;
      h["feature_version"] = kFeatureVersion;
      h["with_source"] = feat_source;
      h["feature_names"] = feature_names(feat_source);
      out << h.dump() << '\n';
      for (const auto& r : corpus.responses()) {
        ordered_json j;
        j["scenario_id"] = r.scenario_id;
        j["split"] = to_string(r.split);
        j["source"] = to_string(r.source);
        j["grammatical"] = r.grammatical;
        j["features"] = feature_row(lm, corpus, r, feat_source);
        out << j.dump() << '\n';
      }
      log("featurized " + std::to_string(corpus.responses().size()) + " responses");
    } else if (*train_gbdt_cmd) {
      const FeatureRows f = read_features(gbdt_features);
      std::vector<std::vector<double>> x, ex;
      std::vector<bool> y, ey;
      std::vector<GeneratorSource> sources;
      for (std::size_t i = 0; i < f.values.size(); ++i) {
        if (f.meta[i].split == Split::Train) {
          x.push_back(f.values[i]);
          y.push_back(f.meta[i].label);
          sources.push_back(f.meta[i].source);
        } else if (f.meta[i].split == Split::Eval) {
          ex.push_back(f.values[i]);
          ey.push_back(f.meta[i].label);
        }
      }
      if (!gbdt_no_upsample) {
        std::vector<std::vector<double>> ux;
        std::vector<bool> uy;
        for (std::size_t i : upsample_indices(sources, y, seed)) {
          ux.push_back(x[i]);
          uy.push_back(y[i]);
        }
        x = std::move(ux);
        y = std::move(uy);
      }
      GbdtTrainOptions opts;
      opts.feature_names = f.names;
      if (!ex.empty()) {
        opts.eval_features = &ex;
        opts.eval_labels = &ey;
      }
      const GbdtModel model = train_gbdt(x, y, gbdt_params, seed, opts);
      save_gbdt(gbdt_out, model);
      std::ostringstream msg;
      msg << "trained " << model.trees.size() << " trees on " << x.size() << " rows; train loss "
          << model.train_loss.front() << " -> " << model.train_loss.back();
      if (!model.eval_loss.empty()) msg << "; eval loss " << model.eval_loss.back();
      log(msg.str());
    } else if (*train_cnn_cmd) {
      const Corpus corpus = load_corpus(cnn_corpus, format);
      std::vector<LabeledResponse> train = corpus.split(Split::Train);
      if (!cnn_no_upsample) train = upsample_balance(train, seed);
      const auto result =
          train_cnn(cnn_examples(corpus, train), cnn_examples(corpus, corpus.split(Split::Eval)), cnn_params, seed);
      save_cnn(cnn_out, result.model);
      const TrainReport& rep = result.report;
      for (std::size_t e = 0; e < rep.train_loss.size(); ++e) {
        std::ostringstream msg;
        msg << "epoch " << e + 1 << " train loss " << rep.train_loss[e];
        if (e < rep.eval_loss.size()) {
          msg << " eval loss " << rep.eval_loss[e] << " P@0.5 " << rep.eval_precision[e] << " R@0.5 "
              << rep.eval_recall[e];
        }
        log(msg.str());
      }
      if (!cnn_report.empty()) {
        ordered_json j;
        j["initial_loss"] = rep.initial_loss;
        j["train_loss"] = rep.train_loss;
        j["eval_loss"] = rep.eval_loss;
        j["eval_precision"] = rep.eval_precision;
        j["eval_recall"] = rep.eval_recall;
        auto out = open_out(cnn_report);
        out << j.dump(1) << '\n';
      }
    } else if (*evaluate) {
      const auto only = parse_split_filter(eval_split);
      const ScorerKind kind = parse_scorer_kind(eval_scorer);
      std::vector<double> scores;
      std::vector<bool> labels;
      std::vector<LabeledResponse> meta;
      if (kind == ScorerKind::Gbdt && !eval_features.empty()) {
        const FeatureRows f = read_features(eval_features);
        const GbdtModel model = load_gbdt(eval_model);
        for (std::size_t i = 0; i < f.values.size(); ++i) {
          if (only && f.meta[i].split != *only) continue;
          scores.push_back(gbdt_score(model, f.values[i]));
          labels.push_back(f.meta[i].label);
          LabeledResponse r;
          r.scenario_id = f.meta[i].scenario_id;
          r.split = f.meta[i].split;
          r.source = f.meta[i].source;
          r.grammatical = f.meta[i].label;
          meta.push_back(r);
        }
      } else {
        if (eval_corpus.empty()) throw InvalidArgument("evaluate needs --corpus (or --features for gbdt)");
        const Corpus corpus = load_corpus(eval_corpus, format);
        for (const auto& r : corpus.responses()) {
          if (!only || r.split == *only) meta.push_back(r);
        }
        scores = score_rows(kind, eval_model, eval_lm, corpus, meta);
        for (const auto& r : meta) labels.push_back(r.grammatical);
      }
      if (!eval_scores_out.empty()) write_scores(eval_scores_out, meta, scores, eval_scorer);
      const std::vector<ReportRow> rows = {
          {eval_label.empty() ? eval_scorer : eval_label, "train", eval_split,
           recall_at_precision(scores, labels, eval_target)}};
      std::cout << report_json(rows, eval_target) << '\n';
      write_report_table(std::cerr, rows, eval_target);
    } else if (*calibrate_cmd) {
      const auto only = parse_split_filter(cal_split);
      std::vector<double> scores;
      std::vector<bool> labels;
      for (const auto& r : read_scores(cal_scores)) {
        if (only && r.split != *only) continue;
        scores.push_back(r.score);
        labels.push_back(r.label);
      }
      CalibratedFilter f = calibrate(scores, labels, cal_target);
      f.scorer = parse_scorer_kind(cal_scorer);
      f.model_path = cal_model_path;
      save_filter(cal_out, f);
      write_filter(std::cout, f);
      if (!f.achieved.attained) log("target precision not attained; using the maximum-precision threshold");
    } else if (*pipe) {
      const Corpus corpus = load_corpus(pipe_corpus, format);
      const NGramModel ranker = load_lm(pipe_ranker);
      const auto only = parse_split_filter(pipe_split);
      std::vector<LabeledResponse> rows;
      for (const auto& r : corpus.responses()) {
        if (!only || r.split == *only) rows.push_back(r);
      }
      PipelineOptions opts;
      opts.fallback = pipe_fallback;
      opts.length_normalize = !pipe_raw_scores;
      std::vector<double> scores(rows.size(), 0.0);
      if (pipe_mode == "filter-rank") {
        if (pipe_threshold.empty()) throw InvalidArgument("filter-rank mode needs --threshold-file");
        const CalibratedFilter f = load_filter(pipe_threshold);
        const std::string model_path = pipe_filter_model.empty() ? f.model_path : pipe_filter_model;
        if (model_path.empty()) throw InvalidArgument("filter-rank mode needs --filter-model");
        scores = score_rows(f.scorer, model_path, pipe_feature_lm.empty() ? pipe_ranker : pipe_feature_lm, corpus,
                            rows);
        opts.filter_threshold = f.threshold;
      }
      // Group in corpus order; scores follow the same rows.
      std::vector<ScenarioCandidates> groups;
      std::map<std::string, std::size_t> slot;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        auto [it, fresh] = slot.emplace(rows[i].scenario_id, groups.size());
        if (fresh) groups.push_back({rows[i].scenario_id, {}});
        PipelineCandidate c;
        c.text = rows[i].text;
        c.ranker_tokens = delex_response(corpus, rows[i]);
        c.filter_score = scores[i];
        c.grammatical = rows[i].grammatical;
        c.semantically_correct = rows[i].semantically_correct;
        groups[it->second].candidates.push_back(std::move(c));
      }
      const PipelineResult result = run_pipeline(groups, ranker, opts);
      const std::string json = pipeline_result_json(result, pipe_mode, pipe_choices);
      std::cout << json << '\n';
      if (!pipe_out.empty()) open_out(pipe_out) << json << '\n';
      write_pipeline_table(std::cerr, result, pipe_mode);
    }
  } catch (const TrainingError& e) {
    std::cerr << "nlgf: training failed: " << e.what() << '\n';
    return 3;
  } catch (const DataError& e) {
    std::cerr << "nlgf: data error: " << e.what() << '\n';
    return 2;
  } catch (const InvalidArgument& e) {
    std::cerr << "nlgf: invalid input: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "nlgf: error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
