#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "nlgf/corpus.hpp"
#include "nlgf/ngram_lm.hpp"

namespace nlgf {

inline constexpr int kFeatureVersion = 1;
inline constexpr std::size_t kNumHistBins = 10;
inline constexpr std::size_t kNumLmFeatures = 6 + kNumHistBins;

// Summary statistics of a sentence's n-gram probability multiset.
struct FeatureVector {
  double geo_mean = 0.0;
  double arith_mean = 0.0;
  double min_p = 0.0;
  double max_p = 0.0;
  double median = 0.0;
  double std_dev = 0.0;  // population
  // hist[k] = fraction of probabilities in [k/10, (k+1)/10); the last bin
  // is closed at 1.0.
  std::array<double, kNumHistBins> hist{};
  std::optional<std::array<double, kNumSources>> source_onehot;

  // Serialized order: geo_mean, arith_mean, min, max, median, std_dev,
  // hist_0..hist_9, then src_IR, src_GenLSTM, src_SCLSTMDelex,
  // src_SCLSTMLex when the one-hot is present.
  std::vector<double> values() const;
};

std::vector<std::string> feature_names(bool with_source);

// Throws InvalidArgument on an empty list or a probability outside (0, 1].
FeatureVector extract_features(const SentenceProbs& probs);

std::array<double, kNumSources> source_onehot(GeneratorSource source);

}  // namespace nlgf
