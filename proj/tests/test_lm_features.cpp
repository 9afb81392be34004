#include <doctest.h>

#include <cmath>
#include <limits>

#include "nlgf/error.hpp"
#include "nlgf/lm_features.hpp"
#include "nlgf/rng.hpp"
#include "support/oracles.hpp"

using namespace nlgf;

namespace {

FeatureVector of(std::vector<double> p) { return extract_features({std::move(p)}); }

}  // namespace

TEST_SUITE("lm_features") {
  TEST_CASE("constant probabilities") {
    const FeatureVector f = of({0.5, 0.5, 0.5, 0.5});
    CHECK(f.geo_mean == doctest::Approx(0.5));
    CHECK(f.arith_mean == 0.5);
    CHECK(f.min_p == 0.5);
    CHECK(f.max_p == 0.5);
    CHECK(f.median == 0.5);
    CHECK(f.std_dev == 0.0);
    CHECK(f.hist[5] == 1.0);
  }

  TEST_CASE("mixed example") {
    const FeatureVector f = of({1.0, 0.25});
    CHECK(f.geo_mean == doctest::Approx(0.5));
    CHECK(f.arith_mean == doctest::Approx(0.625));
    CHECK(f.median == doctest::Approx(0.625));
    CHECK(f.std_dev == doctest::Approx(0.375));
    CHECK(f.hist[2] == 0.5);
    CHECK(f.hist[9] == 0.5);  // 1.0 lands in the closed top bin
  }

  TEST_CASE("single probability and odd-length median") {
    const FeatureVector one = of({0.03});
    CHECK(one.median == 0.03);
    CHECK(one.hist[0] == 1.0);
    CHECK(of({0.9, 0.1, 0.4}).median == 0.4);
  }

  TEST_CASE("bin edges belong to the upper bin") {
    const FeatureVector f = of({0.1, 0.2, 0.3});
    CHECK(f.hist[0] == 0.0);
    CHECK(f.hist[1] == doctest::Approx(1.0 / 3.0));
    CHECK(f.hist[2] == doctest::Approx(1.0 / 3.0));
    CHECK(f.hist[3] == doctest::Approx(1.0 / 3.0));
  }

  TEST_CASE("agreement with the direct oracle on 1000 random inputs") {
    Rng rng(43);
    for (int t = 0; t < 1000; ++t) {
      const auto p = oracle::random_probs(rng, 12);
      const FeatureVector f = of(p);
      const oracle::Features o = oracle::features(p);
      REQUIRE(f.geo_mean == doctest::Approx(o.geo).epsilon(1e-9));
      REQUIRE(f.arith_mean == doctest::Approx(o.arith).epsilon(1e-9));
      REQUIRE(f.min_p == o.min);
      REQUIRE(f.max_p == o.max);
      REQUIRE(f.median == doctest::Approx(o.median).epsilon(1e-9));
      REQUIRE(std::abs(f.std_dev - o.sd) <= 1e-9);
      for (std::size_t k = 0; k < kNumHistBins; ++k) REQUIRE(std::abs(f.hist[k] - o.hist[k]) <= 1e-9);
    }
  }

  TEST_CASE("invariants on 10^4 inputs") {
    Rng rng(47);
    for (int t = 0; t < 10000; ++t) {
      const auto p = oracle::random_probs(rng, 60);
      const FeatureVector f = of(p);
      double mass = 0.0;
      for (double h : f.hist) {
        REQUIRE(h >= 0.0);
        mass += h;
      }
      REQUIRE(std::abs(mass - 1.0) <= 1e-9);
      // min <= geo <= arith <= max, and the median inside the range.
      REQUIRE(f.min_p <= f.geo_mean * (1 + 1e-12));
      REQUIRE(f.geo_mean <= f.arith_mean * (1 + 1e-12));
      REQUIRE(f.arith_mean <= f.max_p);
      REQUIRE(f.min_p <= f.median);
      REQUIRE(f.median <= f.max_p);
      REQUIRE(f.std_dev >= 0.0);
      REQUIRE(f.std_dev <= 0.5 + 1e-12);
      for (double v : f.values()) {
        REQUIRE(v >= 0.0);
        REQUIRE(v <= 1.0);
      }
    }
  }

  TEST_CASE("features do not depend on the order of the probabilities") {
    Rng rng(89);
    for (int t = 0; t < 10000; ++t) {
      auto p = oracle::random_probs(rng, 40);
      const auto a = of(p).values();
      rng.shuffle(p);
      const auto b = of(p).values();
      for (std::size_t k = 0; k < a.size(); ++k) REQUIRE(b[k] == doctest::Approx(a[k]).epsilon(1e-12));
    }
  }

  TEST_CASE("geometric mean survives long low-probability sentences") {
    const FeatureVector f = of(std::vector<double>(2000, 1e-5));
    CHECK(f.geo_mean == doctest::Approx(1e-5).epsilon(1e-9));
  }

  TEST_CASE("source one-hot and names") {
    CHECK(feature_names(false).size() == kNumLmFeatures);
    CHECK(feature_names(true).size() == kNumLmFeatures + kNumSources);
    CHECK(feature_names(false).front() == "geo_mean");
    const auto oh = source_onehot(GeneratorSource::GenLSTM);
    double total = 0.0;
    for (double x : oh) total += x;
    CHECK(total == 1.0);
    FeatureVector f = of({0.5});
    CHECK(f.values().size() == kNumLmFeatures);
    f.source_onehot = oh;
    CHECK(f.values().size() == kNumLmFeatures + kNumSources);
  }

  TEST_CASE("features from a trained model") {
    const NGramModel m = train_lm({tokenize("a b"), tokenize("a c")}, {2, 0.9, 1});
    const FeatureVector f = extract_features(sentence_probs(m, tokenize("a b")));
    CHECK(f.max_p <= 1.0);
    CHECK(f.min_p > 0.0);
  }

  TEST_CASE("invalid input") {
    CHECK_THROWS_AS(of({}), InvalidArgument);
    CHECK_THROWS_AS(of({0.0}), InvalidArgument);
    CHECK_THROWS_AS(of({1.5}), InvalidArgument);
    CHECK_THROWS_AS(of({std::numeric_limits<double>::quiet_NaN()}), InvalidArgument);
  }
}
