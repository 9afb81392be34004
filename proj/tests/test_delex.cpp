#include <doctest.h>

#include <string>

#include "nlgf/delex.hpp"
#include "nlgf/error.hpp"
#include "nlgf/rng.hpp"
#include "nlgf/weather_kit.hpp"
#include "support/oracles.hpp"

using namespace nlgf;

namespace {

Scenario seattle() {
  return {"s1", Goal::InformForecast, {{"requested_location", "Seattle"}, {"date", "Tuesday, May 7th"}}};
}

bool is_numeric_token(const std::string& t) {
  return !t.empty() && std::isdigit(static_cast<unsigned char>(t.front())) &&
         std::isdigit(static_cast<unsigned char>(t.back())) &&
         t.find_first_not_of("0123456789.,") == std::string::npos;
}

}  // namespace

TEST_SUITE("delex.tokenize") {
  TEST_CASE("punctuation is peeled and case kept") {
    CHECK(tokenize("It's 30 degrees, sunny!") == TokenSequence{"It's", "30", "degrees", ",", "sunny", "!"});
    CHECK(tokenize("  spaced\tout  ") == TokenSequence{"spaced", "out"});
    CHECK(tokenize("Done?!") == TokenSequence{"Done", "?", "!"});
    CHECK(tokenize("-5 degrees") == TokenSequence{"-", "5", "degrees"});
    CHECK(tokenize("") == TokenSequence{});
  }

  TEST_CASE("join is the inverse up to spacing") {
    CHECK(join_tokens({"a", "b", "."}) == "a b .");
    CHECK(join_tokens({}) == "");
  }
}

TEST_SUITE("delex.numbers") {
  TEST_CASE("vowel onset examples") {
    CHECK(vowel_onset("80"));
    CHECK(vowel_onset("85"));
    CHECK_FALSE(vowel_onset("61"));
    CHECK(vowel_onset("11"));
    CHECK(vowel_onset("18"));
    CHECK(vowel_onset("8000"));
    CHECK_FALSE(vowel_onset("1"));
    CHECK_FALSE(vowel_onset("100"));
    CHECK(vowel_onset("008"));
    CHECK(leading_number_word("1200") == "one");
  }

  TEST_CASE("vowel onset agrees with the verbalizer oracle on 0..100000") {
    for (std::uint64_t n = 0; n <= 100000; ++n) {
      const std::string s = std::to_string(n);
      REQUIRE_MESSAGE(vowel_onset(s) == oracle::starts_with_vowel_sound(oracle::verbalize(n)), s);
    }
  }

  TEST_CASE("non-numerals are rejected") {
    CHECK_THROWS_AS(vowel_onset(""), InvalidArgument);
    CHECK_THROWS_AS(vowel_onset("8a"), InvalidArgument);
    CHECK_THROWS_AS(vowel_onset("-8"), InvalidArgument);
  }
}

TEST_SUITE("delex.delexicalize") {
  TEST_CASE("worked example") {
    CHECK(delexicalize_text("There is an 80 percent chance of rain in Seattle on Tuesday, May 7th", seattle()) ==
          "There is an __num_vowel__ percent chance of rain in __location__ on __date__");
  }

  TEST_CASE("the numeral 1 has its own placeholder") {
    CHECK(delexicalize_text("It is 1 degree and 21 degrees", seattle()) ==
          "It is __num_one__ degree and __num__ degrees");
  }

  TEST_CASE("fractions and slashed forms are not numerals") {
    CHECK(delexicalize_text("Winds 18/7 today", seattle()) == "Winds 18/7 today");
    CHECK(delexicalize_text("About 2.5 inches", seattle()) == "About __num__ inches");
  }

  TEST_CASE("location matching is case-insensitive and longest first") {
    const Scenario s{"x", Goal::InformCurrentCondition, {{"requested_location", "New York City"}}};
    CHECK(delexicalize_text("Sunny in new york city now", s) == "Sunny in __location__ now");
  }

  TEST_CASE("date patterns without a scenario date") {
    const Scenario s{"x", Goal::InformForecast, {}};
    CHECK(delexicalize_text("Rain on June 2 and 3rd March", s) == "Rain on __date__ and __date__");
    CHECK(delexicalize_text("Rain on Friday 13th", s) == "Rain on __date__");
  }

  TEST_CASE("malformed ordinals survive so that ordinal errors stay visible") {
    const Scenario s{"x", Goal::InformForecast, {}};
    CHECK(delexicalize_text("Rain on June 02th", s) == "Rain on June 02th");
    CHECK(delexicalize_text("Rain on June 2th", s) == "Rain on June 2th");
    CHECK(delexicalize_text("Rain on June 32", s) == "Rain on June __num__");
  }

  TEST_CASE("full mode replaces the remaining argument values") {
    const Scenario s{"x", Goal::InformCurrentCondition,
                     {{"requested_location", "Paris"}, {"sky", "partly cloudy"}, {"temp", "80"}}};
    CHECK(delexicalize_text("Partly cloudy in Paris at 80", s, DelexMode::Full) ==
          "__arg_sky__ in __location__ at __arg_temp__");
    CHECK(delexicalize_text("Partly cloudy in Paris at 80", s) == "Partly cloudy in __location__ at __num_vowel__");
  }

  TEST_CASE("properties over realized weather sentences") {
    const auto scenarios = weather::make_scenarios(60, 4);
    std::size_t checked = 0;
    for (const auto& s : scenarios) {
      for (const auto& t : weather::candidate_templates()) {
        const auto text = realize_template(t, s);
        if (!text) continue;
        const TokenSequence toks = tokenize(*text);
        for (DelexMode mode : {DelexMode::Standard, DelexMode::Full}) {
          const TokenSequence d = delexicalize(toks, s, mode);
          // Idempotent.
          REQUIRE(delexicalize(d, s, mode) == d);
          // Never longer, since every replacement consumes at least one token.
          REQUIRE(d.size() <= toks.size());
          // No numeric residue, no location residue.
          for (const auto& tok : d) REQUIRE_FALSE(is_numeric_token(tok));
          const std::string joined = join_tokens(d);
          const auto loc = s.args.find("requested_location");
          if (loc != s.args.end()) REQUIRE(joined.find(loc->second) == std::string::npos);
        }
        ++checked;
      }
    }
    CHECK(checked > 200);
  }

  TEST_CASE("numeral placeholders are sound token by token") {
    Rng rng(17);
    const Scenario empty{"x", Goal::InformCurrentCondition, {}};
    for (int t = 0; t < 2000; ++t) {
      TokenSequence toks;
      std::vector<std::uint64_t> values;
      for (std::size_t k = 1 + rng.index(6); k > 0; --k) {
        if (rng.uniform() < 0.5) {
          values.push_back(rng.index(1000000));
          toks.push_back(std::to_string(values.back()));
        } else {
          values.push_back(UINT64_MAX);
          toks.push_back("word");
        }
      }
      const TokenSequence d = delexicalize(toks, empty);
      REQUIRE(d.size() == toks.size());
      for (std::size_t i = 0; i < d.size(); ++i) {
        if (values[i] == UINT64_MAX) {
          REQUIRE(d[i] == "word");
        } else if (values[i] == 1) {
          REQUIRE(d[i] == kNumOneToken);
        } else {
          const bool vowel = oracle::starts_with_vowel_sound(oracle::verbalize(values[i]));
          REQUIRE(d[i] == (vowel ? kNumVowelToken : kNumToken));
        }
      }
    }
  }

  TEST_CASE("placeholder recognition") {
    CHECK(is_placeholder("__num__"));
    CHECK(is_placeholder("__arg_sky__"));
    CHECK_FALSE(is_placeholder("____"));
    CHECK_FALSE(is_placeholder("num"));
  }
}
