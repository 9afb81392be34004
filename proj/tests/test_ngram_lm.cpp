#include <doctest.h>

#include <cmath>
#include <sstream>

#include "nlgf/error.hpp"
#include "nlgf/ngram_lm.hpp"
#include "nlgf/rng.hpp"
#include "support/oracles.hpp"

using namespace nlgf;

namespace {

NGramModel lm(const std::vector<std::string>& sentences, int order, double lambda) {
  std::vector<TokenSequence> toks;
  for (const auto& s : sentences) toks.push_back(tokenize(s));
  return train_lm(toks, {order, lambda, 1});
}

double p(const NGramModel& m, const TokenSequence& h, std::string_view w) { return m.prob(h, w); }

// Random corpus over a vocabulary of the given size.
std::vector<TokenSequence> random_corpus(Rng& rng, std::size_t vocab, std::size_t sentences) {
  std::vector<TokenSequence> out;
  for (std::size_t s = 0; s < sentences; ++s) {
    TokenSequence t;
    for (std::size_t k = rng.index(8); k > 0; --k) t.push_back("w" + std::to_string(rng.index(vocab)));
    out.push_back(t);
  }
  return out;
}

}  // namespace

TEST_SUITE("ngram_lm") {
  TEST_CASE("lambda 1 reproduces maximum likelihood") {
    CHECK(p(lm({"a b"}, 2, 1.0), {"a"}, "b") == 1.0);
    CHECK(p(lm({"a b", "a c"}, 2, 1.0), {"a"}, "b") == 0.5);
  }

  TEST_CASE("hand-built count table at lambda 0.5") {
    // Counts for {"a b"}: unigrams a=1, b=1, </s>=1 (N=3); vocabulary {a, b}
    // plus <unk> and </s> gives an add-one denominator of N + V + 2 = 7.
    //   P_0(w) = (c(w)+1)/7,  P_1(w) = 0.5*c(w)/3 + 0.5*P_0(w)
    // c maps to <unk>, unseen after "a": P = 0.5*0 + 0.5*(0.5*0 + 0.5/7).
    const NGramModel m = lm({"a b"}, 2, 0.5);
    CHECK(p(m, {"a"}, "c") == doctest::Approx(1.0 / 28.0).epsilon(1e-12));
    const double p1_b = 0.5 / 3.0 + 0.5 * 2.0 / 7.0;
    CHECK(p(m, {"a"}, "b") == doctest::Approx(0.5 * 1.0 + 0.5 * p1_b).epsilon(1e-12));
    // History "b" was seen (before </s>) but never followed by "a".
    CHECK(p(m, {"b"}, "a") == doctest::Approx(0.5 * p1_b).epsilon(1e-12));
    // A history never seen falls through to P_1.
    CHECK(p(m, {"zzz"}, "a") == doctest::Approx(p1_b).epsilon(1e-12));
  }

  TEST_CASE("sentence probabilities") {
    const NGramModel m = lm({"a b"}, 2, 1.0);
    CHECK(sentence_probs(m, {"a", "b"}).probs == std::vector<double>{1.0, 1.0, 1.0});
    const auto swapped = sentence_probs(m, {"b", "a"}).probs;
    CHECK(std::any_of(swapped.begin(), swapped.end(), [](double x) { return x < 1.0; }));
    const NGramModel seven = lm({"x y z"}, 7, 0.9);
    CHECK(sentence_probs(seven, {"x", "y", "z"}).probs.size() == 4);
    CHECK(sentence_probs(seven, {}).probs.size() == 1);
  }

  TEST_CASE("next-token distributions are normalized on small vocabularies") {
    Rng rng(23);
    for (int order = 2; order <= 7; ++order) {
      for (double lambda : {0.5, 0.9, 1.0}) {
        const std::size_t vocab = 2 + rng.index(49);
        const auto corpus = random_corpus(rng, vocab, 40);
        const NGramModel m = train_lm(corpus, {order, lambda, 1});
        REQUIRE(m.vocab_size() <= 50);
        // Every history actually observed, plus random and all-BOS ones.
        std::vector<TokenSequence> histories = {{}};
        for (const auto& s : corpus) {
          for (std::size_t i = 0; i <= s.size(); ++i) {
            histories.emplace_back(s.begin() + static_cast<std::ptrdiff_t>(i > static_cast<std::size_t>(order - 1)
                                                                                ? i - (order - 1)
                                                                                : 0),
                                   s.begin() + static_cast<std::ptrdiff_t>(i));
          }
        }
        for (int k = 0; k < 20; ++k) {
          TokenSequence h;
          for (int j = 0; j < order - 1; ++j) h.push_back("w" + std::to_string(rng.index(vocab + 3)));
          histories.push_back(h);
        }
        INFO("order=" << order << " lambda=" << lambda << " vocab=" << m.vocab_size());
        CHECK(oracle::normalization_gap(m, histories) <= 1e-9);
      }
    }
  }

  TEST_CASE("probabilities stay in (0, 1] for lambda below one") {
    Rng rng(29);
    const auto corpus = random_corpus(rng, 12, 60);
    const NGramModel m = train_lm(corpus, {5, 0.9, 1});
    for (int t = 0; t < 500; ++t) {
      TokenSequence s;
      for (std::size_t k = rng.index(10); k > 0; --k) s.push_back("w" + std::to_string(rng.index(20)));
      for (double x : sentence_probs(m, s).probs) {
        REQUIRE(x > 0.0);
        REQUIRE(x <= 1.0);
      }
    }
  }

  TEST_CASE("lambda 1 on a closed vocabulary matches counts on seen histories") {
    Rng rng(31);
    const auto corpus = random_corpus(rng, 5, 50);
    const NGramModel m = train_lm(corpus, {3, 1.0, 1});
    for (const auto& s : corpus) {
      TokenSequence padded = {std::string(kBos), std::string(kBos)};
      padded.insert(padded.end(), s.begin(), s.end());
      padded.emplace_back(kEos);
      for (std::size_t i = 2; i < padded.size(); ++i) {
        const TokenSequence tri = {padded[i - 2], padded[i - 1], padded[i]};
        const TokenSequence hist = {padded[i - 2], padded[i - 1]};
        std::uint64_t total = 0;
        for (const auto& w : m.vocabulary()) total += m.count(TokenSequence{hist[0], hist[1], w});
        total += m.count(TokenSequence{hist[0], hist[1], std::string(kEos)});
        const double mle = static_cast<double>(m.count(tri)) / static_cast<double>(total);
        TokenSequence history(padded.begin() + static_cast<std::ptrdiff_t>(i) - 2,
                              padded.begin() + static_cast<std::ptrdiff_t>(i));
        REQUIRE(m.prob(history, padded[i]) == doctest::Approx(mle).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("min_count maps rare tokens to <unk>") {
    const NGramModel m = train_lm({tokenize("a a b"), tokenize("a c")}, {2, 0.9, 2});
    CHECK(m.in_vocabulary("a"));
    CHECK_FALSE(m.in_vocabulary("b"));
    CHECK(m.prob(TokenSequence{"a"}, "b") == m.prob(TokenSequence{"a"}, "zzz"));
  }

  TEST_CASE("ranking") {
    const NGramModel m = lm({"it is sunny in __location__ today", "it is rainy today"}, 3, 0.9);
    const TokenSequence good = tokenize("it is sunny in __location__ today");
    const TokenSequence bad = tokenize("it is is sunny in __location__ today");
    CHECK(lm_rank(m, {bad, good}) == std::vector<std::size_t>{1, 0});
    // The scores behind the order, recomputed from the per-position probabilities.
    auto mean_log = [&](const TokenSequence& t) {
      double s = 0.0;
      const auto probs = sentence_probs(m, t).probs;
      for (double x : probs) s += std::log(x);
      return s / static_cast<double>(probs.size());
    };
    CHECK(lm_score(m, good) == doctest::Approx(mean_log(good)).epsilon(1e-12));
    CHECK(lm_score(m, bad) < lm_score(m, good));
    CHECK(lm_rank(m, {good}) == std::vector<std::size_t>{0});
    CHECK(lm_rank(m, {good, good, bad}) == std::vector<std::size_t>{0, 1, 2});
  }

  TEST_CASE("save and load preserve probabilities and bytes") {
    Rng rng(37);
    const auto corpus = random_corpus(rng, 15, 80);
    const NGramModel m = train_lm(corpus, {4, 0.7, 1});
    std::stringstream buf;
    write_lm(buf, m);
    const std::string bytes = buf.str();
    const NGramModel back = read_lm(buf);
    std::stringstream again;
    write_lm(again, back);
    CHECK(again.str() == bytes);
    CHECK(back.order() == 4);
    CHECK(back.lambda() == 0.7);
    for (int q = 0; q < 100; ++q) {
      TokenSequence h;
      for (int j = 0; j < 3; ++j) h.push_back("w" + std::to_string(rng.index(17)));
      const std::string w = "w" + std::to_string(rng.index(17));
      REQUIRE(back.prob(h, w) == m.prob(h, w));
    }
  }

  TEST_CASE("training is deterministic") {
    Rng a(41), b(41);
    std::stringstream x, y;
    write_lm(x, train_lm(random_corpus(a, 10, 30), {3, 0.9, 1}));
    write_lm(y, train_lm(random_corpus(b, 10, 30), {3, 0.9, 1}));
    CHECK(x.str() == y.str());
  }

  TEST_CASE("precondition failures") {
    CHECK_THROWS_AS(train_lm({}, {}), InvalidArgument);
    CHECK_THROWS_AS(train_lm({{"a"}}, {0, 0.9, 1}), InvalidArgument);
    CHECK_THROWS_AS(train_lm({{"a"}}, {11, 0.9, 1}), InvalidArgument);
    CHECK_THROWS_AS(train_lm({{"a"}}, {3, 0.0, 1}), InvalidArgument);
    CHECK_THROWS_AS(train_lm({{"a"}}, {3, 1.5, 1}), InvalidArgument);
    std::istringstream junk("not a model\n");
    CHECK_THROWS(read_lm(junk));
  }
}
