#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "nlgf/corpus.hpp"
#include "nlgf/error.hpp"
#include "nlgf/inject.hpp"
#include "nlgf/rng.hpp"
#include "nlgf/synth.hpp"
#include "nlgf/weather_kit.hpp"
#include "support/oracles.hpp"

using namespace nlgf;

namespace {

Scenario make_scenario(const std::string& id) {
  return {id, Goal::InformCurrentCondition, {{"requested_location", "Paris"}, {"temp", "30"}}};
}

LabeledResponse response(const std::string& sid, const std::string& text, GeneratorSource src, bool ok,
                         Split split = Split::Train) {
  LabeledResponse r;
  r.scenario_id = sid;
  r.text = text;
  r.source = src;
  r.grammatical = ok;
  r.split = split;
  return r;
}

std::map<std::pair<GeneratorSource, bool>, std::size_t> class_counts(const std::vector<LabeledResponse>& rs) {
  std::map<std::pair<GeneratorSource, bool>, std::size_t> m;
  for (const auto& r : rs) ++m[{r.source, r.grammatical}];
  return m;
}

std::vector<LabeledResponse> one_source(GeneratorSource src, std::size_t pos, std::size_t neg,
                                        const std::string& tag) {
  std::vector<LabeledResponse> out;
  for (std::size_t i = 0; i < pos; ++i) out.push_back(response("s", tag + "+" + std::to_string(i), src, true));
  for (std::size_t i = 0; i < neg; ++i) out.push_back(response("s", tag + "-" + std::to_string(i), src, false));
  return out;
}

}  // namespace

TEST_SUITE("corpus.load") {
  TEST_CASE("single JSONL row loads with released-dataset provenance") {
    std::istringstream in(
        R"({"scenario_id":"s1","goal":"inform_current_condition","args":{"requested_location":"Paris"},)"
        R"("text":"It's sunny.","source":"IR","grammatical":1,"semantically_correct":null,"split":"train"})"
        "\n");
    const Corpus c = read_corpus(in, CorpusFormat::Jsonl);
    REQUIRE(c.responses().size() == 1);
    CHECK(c.provenance() == Provenance::ReleasedDataset);
    CHECK(c.responses()[0].source == GeneratorSource::IR);
    CHECK(c.responses()[0].grammatical);
    CHECK_FALSE(c.responses()[0].semantically_correct.has_value());
  }

  TEST_CASE("unknown source is rejected with the row number") {
    std::istringstream in(
        R"({"scenario_id":"s1","goal":"inform_current_condition","args":{},"text":"ok","source":"IR","grammatical":1,"semantically_correct":null,"split":"train"})"
        "\n"
        R"({"scenario_id":"s1","goal":"inform_current_condition","args":{},"text":"ok2","source":"LSTM","grammatical":1,"semantically_correct":null,"split":"train"})"
        "\n");
    try {
      read_corpus(in, CorpusFormat::Jsonl, Provenance::ReleasedDataset, "data.jsonl");
      FAIL("expected a DataError");
    } catch (const DataError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("row 2") != std::string::npos);
      CHECK(msg.find("LSTM") != std::string::npos);
    }
  }

  TEST_CASE("duplicate (scenario, text, source) triple is rejected") {
    const std::string row =
        R"({"scenario_id":"s1","goal":"inform_current_condition","args":{},"text":"ok","source":"IR","grammatical":1,"semantically_correct":null,"split":"train"})";
    std::istringstream in(row + "\n" + row + "\n");
    CHECK_THROWS_AS(read_corpus(in, CorpusFormat::Jsonl), DataError);
  }

  TEST_CASE("missing field and missing file are data errors") {
    std::istringstream in(R"({"scenario_id":"s1","goal":"inform_current_condition","args":{},"source":"IR"})"
                          "\n");
    CHECK_THROWS_AS(read_corpus(in, CorpusFormat::Jsonl), DataError);
    CHECK_THROWS_AS(load_corpus("/nonexistent/corpus.jsonl", CorpusFormat::Jsonl), DataError);
  }

  TEST_CASE("display names of sources are accepted as aliases") {
    CHECK(parse_source("SC-LSTM Lex") == GeneratorSource::SCLSTMLex);
    CHECK(parse_source("Gen LSTM") == GeneratorSource::GenLSTM);
    CHECK_THROWS_AS(parse_source("LSTM"), DataError);
  }

  TEST_CASE("JSONL and TSV round trips are lossless") {
    weather::make_scenarios(4, 1);
    SynthOptions o;
    o.profiles = weather::default_profiles();
    o.seed = 3;
    o.candidates_per_scenario = 3;
    const Corpus c = generate_synthetic_corpus(weather::candidate_templates(), weather::make_scenarios(20, 1), o);
    for (CorpusFormat f : {CorpusFormat::Jsonl, CorpusFormat::Tsv}) {
      std::stringstream buf;
      write_corpus(buf, c, f);
      const Corpus back = read_corpus(buf, f, Provenance::Synthetic);
      CHECK(back.responses() == c.responses());
      std::stringstream again;
      write_corpus(again, back, f);
      CHECK(again.str() == buf.str());
    }
  }
}

TEST_SUITE("corpus.stats") {
  TEST_CASE("one of two scenarios without a grammatical candidate gives 50%") {
    const Corpus c({make_scenario("a"), make_scenario("b")},
                   {response("a", "It is fine.", GeneratorSource::IR, true),
                    response("b", "It is is fine.", GeneratorSource::IR, false)},
                   Provenance::Synthetic);
    const CorpusStats s = corpus_stats(c);
    CHECK(s.zero_grammatical_rate == doctest::Approx(0.5));
    CHECK(s.total.grammatical == 1);
    CHECK(s.total.ungrammatical == 1);
    CHECK(s.total_tokens == 7);
    CHECK(s.avg_tokens == doctest::Approx(3.5));
  }

  TEST_CASE("vocabulary is lowercased distinct whitespace tokens") {
    const Corpus c({make_scenario("a")},
                   {response("a", "Sunny sunny SUNNY.", GeneratorSource::IR, true),
                    response("a", "sunny.", GeneratorSource::GenLSTM, true)},
                   Provenance::Synthetic);
    CHECK(corpus_stats(c).vocab_size == 2);  // "sunny", "sunny."
  }

  TEST_CASE("empty corpus gives a zeroed record") {
    const CorpusStats s = corpus_stats(Corpus{});
    CHECK(s.num_responses == 0);
    CHECK(s.avg_tokens == 0.0);
  }

  TEST_CASE("stats of the union equal the sum over splits") {
    SynthOptions o;
    o.profiles = weather::default_profiles();
    o.seed = 11;
    o.candidates_per_scenario = 4;
    const auto scenarios = weather::make_scenarios(60, 2);
    const Corpus c = generate_synthetic_corpus(weather::candidate_templates(), scenarios, o);
    const CorpusStats all = corpus_stats(c);
    std::size_t g = 0, u = 0, n = 0, toks = 0;
    for (Split sp : {Split::Train, Split::Eval, Split::Test}) {
      const Corpus part(c.scenarios(), c.split(sp), Provenance::Synthetic);
      const CorpusStats s = corpus_stats(part);
      g += s.total.grammatical;
      u += s.total.ungrammatical;
      n += s.num_responses;
      toks += s.total_tokens;
      for (std::size_t src = 0; src < kNumSources; ++src) {
        CHECK(s.by_source_split[src][split_index(sp)] == all.by_source_split[src][split_index(sp)]);
      }
    }
    CHECK(g == all.total.grammatical);
    CHECK(u == all.total.ungrammatical);
    CHECK(n == all.num_responses);
    CHECK(toks == all.total_tokens);
  }
}

TEST_SUITE("corpus.dedup") {
  TEST_CASE("examples") {
    CHECK(dedup_candidates({"it's 32 degrees.", "it's 32 degrees"}) == std::vector<std::string>{"it's 32 degrees."});
    CHECK(dedup_candidates({"sunny", "rainy"}) == std::vector<std::string>{"sunny", "rainy"});
    CHECK(dedup_candidates({"a", "b", "c"}) == std::vector<std::string>{"a"});
  }

  TEST_CASE("levenshtein agrees with the dynamic-programming oracle") {
    Rng rng(5);
    const std::string alphabet = "abc ";
    for (int t = 0; t < 2000; ++t) {
      std::string a, b;
      for (std::size_t i = rng.index(7); i > 0; --i) a += alphabet[rng.index(alphabet.size())];
      for (std::size_t i = rng.index(7); i > 0; --i) b += alphabet[rng.index(alphabet.size())];
      REQUIRE(levenshtein(a, b) == oracle::edit_distance(a, b));
    }
  }

  TEST_CASE("retained set is 1-separated and every drop is justified") {
    Rng rng(9);
    for (int t = 0; t < 300; ++t) {
      std::vector<std::string> in;
      for (std::size_t k = 1 + rng.index(12); k > 0; --k) {
        std::string s;
        for (std::size_t i = 1 + rng.index(4); i > 0; --i) s += "ab"[rng.index(2)];
        in.push_back(s);
      }
      const auto out = dedup_candidates(in);
      for (std::size_t i = 0; i < out.size(); ++i) {
        for (std::size_t j = i + 1; j < out.size(); ++j) REQUIRE(oracle::edit_distance(out[i], out[j]) >= 2);
      }
      // Replay greedily: each input is kept iff it is 2 away from all kept so far.
      std::vector<std::string> kept;
      for (const auto& s : in) {
        const bool close = std::any_of(kept.begin(), kept.end(),
                                       [&](const std::string& k) { return oracle::edit_distance(s, k) <= 1; });
        if (!close) kept.push_back(s);
      }
      REQUIRE(out == kept);
    }
  }

  TEST_CASE("dedup_corpus works within a scenario only") {
    const Corpus c({make_scenario("a"), make_scenario("b")},
                   {response("a", "sunny.", GeneratorSource::IR, true),
                    response("a", "sunny", GeneratorSource::GenLSTM, true),
                    response("b", "sunny", GeneratorSource::IR, true)},
                   Provenance::Synthetic);
    const Corpus d = dedup_corpus(c);
    REQUIRE(d.responses().size() == 2);
    CHECK(d.responses()[0].text == "sunny.");
    CHECK(d.responses()[1].scenario_id == "b");
  }
}

TEST_SUITE("corpus.upsample") {
  TEST_CASE("one source 100/40 becomes 100/100") {
    const auto out = upsample_balance(one_source(GeneratorSource::IR, 100, 40, "x"), 1);
    const auto m = class_counts(out);
    CHECK(m.at({GeneratorSource::IR, true}) == 100);
    CHECK(m.at({GeneratorSource::IR, false}) == 100);
  }

  TEST_CASE("two sources of 200 and 120 after step one both reach 200") {
    auto in = one_source(GeneratorSource::IR, 100, 100, "a");
    const auto b = one_source(GeneratorSource::GenLSTM, 60, 40, "b");
    in.insert(in.end(), b.begin(), b.end());
    const auto out = upsample_balance(in, 4);
    const auto m = class_counts(out);
    CHECK(m.at({GeneratorSource::IR, true}) + m.at({GeneratorSource::IR, false}) == 200);
    CHECK(m.at({GeneratorSource::GenLSTM, true}) + m.at({GeneratorSource::GenLSTM, false}) == 200);
    CHECK(m.at({GeneratorSource::GenLSTM, true}) == m.at({GeneratorSource::GenLSTM, false}));
  }

  TEST_CASE("balanced single source is returned unchanged") {
    const auto in = one_source(GeneratorSource::SCLSTMLex, 30, 30, "z");
    CHECK(upsample_balance(in, 8) == in);
  }

  TEST_CASE("only multiplicities change; originals stay first; seed fixes the output") {
    auto in = one_source(GeneratorSource::IR, 50, 13, "a");
    const auto b = one_source(GeneratorSource::SCLSTMDelex, 7, 21, "b");
    in.insert(in.end(), b.begin(), b.end());
    const auto out = upsample_balance(in, 21);
    CHECK(std::equal(in.begin(), in.end(), out.begin()));
    std::set<std::string> before, after;
    for (const auto& r : in) before.insert(r.text);
    for (const auto& r : out) after.insert(r.text);
    CHECK(before == after);
    CHECK(out == upsample_balance(in, 21));
    const auto m = class_counts(out);
    for (GeneratorSource s : {GeneratorSource::IR, GeneratorSource::SCLSTMDelex}) {
      CHECK(m.at({s, true}) == m.at({s, false}));
    }
  }

  TEST_CASE("a source lacking a class is reported, and non-train rows are refused") {
    CHECK_THROWS_AS(upsample_balance(one_source(GeneratorSource::IR, 10, 0, "a"), 1), DataError);
    auto in = one_source(GeneratorSource::IR, 2, 1, "a");
    in[0].split = Split::Eval;
    CHECK_THROWS(upsample_balance(in, 1));
  }
}

TEST_SUITE("corpus.inject") {
  TEST_CASE("paper examples") {
    CHECK(inject_error("It's 30 degrees fahrenheit with cloudy skies and snow showers.",
                       ErrorCategory::RepeatedFunctionWord, 1)
              .text == "It's 30 degrees fahrenheit with cloudy skies with snow showers.");
    CHECK(inject_error("Expect rain with a 61 percent chance.", ErrorCategory::ArticleAgreement, 1).text ==
          "Expect rain with an 61 percent chance.");
    CHECK(inject_error("Expect a temperature of 3 degrees celsius.", ErrorCategory::MissingContextWord, 1).text ==
          "Expect a temperature of 3 celsius.");
    CHECK(inject_error("It will be sunny on June 2.", ErrorCategory::OrdinalError, 1).text ==
          "It will be sunny on June 02th.");
  }

  TEST_CASE("no applicable site signals NotApplicable") {
    CHECK_THROWS_AS(inject_error("Sunny.", ErrorCategory::MissingContextWord, 1), NotApplicable);
    CHECK_THROWS_AS(inject_error("Sunny.", ErrorCategory::RepeatedFunctionWord, 1), NotApplicable);
  }

  TEST_CASE("every injection differs from its input and matches its category's description") {
    const auto scenarios = weather::make_scenarios(40, 6);
    std::size_t applied = 0;
    for (const auto& s : scenarios) {
      for (const auto& t : weather::candidate_templates()) {
        const auto text = realize_template(t, s);
        if (!text) continue;
        for (ErrorCategory cat : kAllErrorCategories) {
          for (std::uint64_t seed = 0; seed < 3; ++seed) {
            try {
              const InjectionResult r = inject_error(*text, cat, seed);
              REQUIRE(r.text != *text);
              REQUIRE(r.category == cat);
              REQUIRE(edit_matches_category(*text, r.text, cat));
              REQUIRE(inject_error(*text, cat, seed).text == r.text);
              ++applied;
            } catch (const NotApplicable&) {
            }
          }
        }
      }
    }
    CHECK(applied > 1000);
  }

  TEST_CASE("category names round trip") {
    for (ErrorCategory c : kAllErrorCategories) {
      CHECK(parse_error_category(to_string(c)) == c);
      CHECK_FALSE(describe(c).empty());
    }
  }
}

TEST_SUITE("corpus.synth") {
  const std::vector<std::string> kTemplates = {
      "In {requested_location}, it's {deg:temp} {temp_scale} with {sky} skies and {precip_summary}.",
      "Right now in {requested_location}, it's {deg:temp} {temp_scale} with {sky} skies.",
      "It's currently {deg:temp} {temp_scale} in {requested_location} with {precip_summary}.",
      "In {requested_location} there is {precip_summary} and it is {deg:temp} {temp_scale}.",
      "Expect a temperature of {deg:temp} {temp_scale} in {requested_location} with {sky} skies.",
      "The temperature in {requested_location} is {deg:temp} {temp_scale}, with {sky} skies and {precip_summary}.",
      "Right now it is {deg:temp} {temp_scale} in {requested_location} and there is {precip_summary}.",
      "There is {precip_summary} in {requested_location}, and it's {deg:temp} {temp_scale} with {sky} skies.",
      "{requested_location} has {sky} skies with {precip_summary} and {deg:temp} {temp_scale}.",
      "It's {deg:temp} {temp_scale} with {sky} skies in {requested_location} and {precip_summary}.",
  };

  std::vector<Scenario> scenarios100() {
    std::vector<Scenario> out;
    const char* skies[] = {"sunny", "cloudy", "overcast", "clear"};
    for (int i = 0; i < 100; ++i) {
      out.push_back({"s" + std::to_string(i),
                     Goal::InformCurrentCondition,
                     {{"requested_location", "Town" + std::to_string(i)},
                      {"temp", std::to_string(10 + i % 70)},
                      {"temp_scale", i % 2 ? "celsius" : "fahrenheit"},
                      {"sky", skies[i % 4]},
                      {"precip_summary", i % 3 ? "light rain" : "snow showers"}}});
    }
    return out;
  }

  SynthOptions options(std::uint64_t seed) {
    SynthOptions o;
    o.error_rate = 0.4;
    o.seed = seed;
    for (auto& p : o.profiles) p.fill(1.0);
    return o;
  }

  TEST_CASE("10 templates x 100 scenarios at rate 0.4 gives exactly 400 errors") {
    const Corpus c = generate_synthetic_corpus(kTemplates, scenarios100(), options(7));
    CHECK(c.responses().size() == 1000);
    const auto bad = std::count_if(c.responses().begin(), c.responses().end(),
                                   [](const LabeledResponse& r) { return !r.grammatical; });
    CHECK(bad == 400);
    CHECK(c.provenance() == Provenance::Synthetic);
  }

  TEST_CASE("same seed gives byte-identical corpora, other seeds differ") {
    auto dump = [&](std::uint64_t seed) {
      std::ostringstream out;
      write_corpus(out, generate_synthetic_corpus(kTemplates, scenarios100(), options(seed)), CorpusFormat::Jsonl);
      return out.str();
    };
    CHECK(dump(7) == dump(7));
    CHECK(dump(7) != dump(8));
  }

  TEST_CASE("splits partition by scenario in 70/15/15 proportion") {
    const Corpus c = generate_synthetic_corpus(kTemplates, scenarios100(), options(3));
    std::map<std::string, std::set<Split>> seen;
    std::map<Split, std::set<std::string>> per_split;
    for (const auto& r : c.responses()) {
      seen[r.scenario_id].insert(r.split);
      per_split[r.split].insert(r.scenario_id);
    }
    for (const auto& [id, splits] : seen) CHECK(splits.size() == 1);
    CHECK(per_split[Split::Train].size() == 70);
    CHECK(per_split[Split::Eval].size() == 15);
    CHECK(per_split[Split::Test].size() == 15);
  }

  TEST_CASE("a zero-weight category never occurs for that source") {
    SynthOptions o = options(13);
    o.profiles[source_index(GeneratorSource::IR)][static_cast<std::size_t>(ErrorCategory::RepeatedFunctionWord)] =
        0.0;
    const auto scenarios = scenarios100();
    const Corpus c = generate_synthetic_corpus(kTemplates, scenarios, o);
    std::size_t ir_bad = 0;
    for (const auto& r : c.responses()) {
      if (r.source != GeneratorSource::IR || r.grammatical) continue;
      ++ir_bad;
      // Recover the clean realization closest to the corrupted text.
      const Scenario& s = c.scenario(r.scenario_id);
      std::string best;
      std::size_t best_d = std::string::npos;
      for (const auto& t : kTemplates) {
        const std::string clean = *realize_template(t, s);
        const std::size_t d = oracle::edit_distance(clean, r.text);
        if (d < best_d) {
          best_d = d;
          best = clean;
        }
      }
      CHECK_FALSE(edit_matches_category(best, r.text, ErrorCategory::RepeatedFunctionWord));
    }
    CHECK(ir_bad > 50);
  }

  TEST_CASE("precondition failures") {
    CHECK_THROWS_AS(generate_synthetic_corpus({"Hello {nowhere}."}, scenarios100(), options(1)), DataError);
    SynthOptions bad = options(1);
    bad.error_rate = 1.0;
    CHECK_THROWS_AS(generate_synthetic_corpus(kTemplates, scenarios100(), bad), InvalidArgument);
    bad = options(1);
    bad.profiles[2].fill(0.0);
    CHECK_THROWS_AS(generate_synthetic_corpus(kTemplates, scenarios100(), bad), InvalidArgument);
  }

  TEST_CASE("template slots agree articles and degree counts") {
    const Scenario s{"x", Goal::InformForecast, {{"c", "80"}, {"d", "1"}, {"e", "61"}}};
    CHECK(*realize_template("{art:c} percent, {art:e} percent, {deg:d}, {deg:c}", s) ==
          "an 80 percent, a 61 percent, 1 degree, 80 degrees");
    CHECK_FALSE(realize_template("{missing}", s).has_value());
  }
}
