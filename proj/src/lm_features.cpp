#include "nlgf/lm_features.hpp"

#include <algorithm>
#include <cmath>

#include "nlgf/error.hpp"

namespace nlgf {

std::vector<double> FeatureVector::values() const {
  std::vector<double> v = {geo_mean, arith_mean, min_p, max_p, median, std_dev};
  v.insert(v.end(), hist.begin(), hist.end());
  if (source_onehot) v.insert(v.end(), source_onehot->begin(), source_onehot->end());
  return v;
}

std::vector<std::string> feature_names(bool with_source) {
  std::vector<std::string> names = {"geo_mean", "arith_mean", "min", "max", "median", "std_dev"};
  for (std::size_t k = 0; k < kNumHistBins; ++k) names.push_back("hist_" + std::to_string(k));
  if (with_source) {
    for (GeneratorSource s : kAllSources) names.push_back("src_" + std::string(to_string(s)));
  }
  return names;
}

std::array<double, kNumSources> source_onehot(GeneratorSource source) {
  std::array<double, kNumSources> v{};
  v[source_index(source)] = 1.0;
  return v;
}

FeatureVector extract_features(const SentenceProbs& probs) {
  const std::vector<double>& p = probs.probs;
  if (p.empty()) throw InvalidArgument("cannot extract features from an empty probability list");
  for (double x : p) {
    if (!(x > 0.0 && x <= 1.0)) {
      throw InvalidArgument("n-gram probabilities must lie in (0, 1]");
    }
  }
  const double m = static_cast<double>(p.size());
  FeatureVector f;

  double sum = 0.0, log_sum = 0.0;
  for (double x : p) {
    sum += x;
    log_sum += std::log(x);
  }
  f.arith_mean = sum / m;

  std::vector<double> sorted = p;
  std::sort(sorted.begin(), sorted.end());
  f.min_p = sorted.front();
  f.max_p = sorted.back();
  const std::size_t mid = sorted.size() / 2;
  f.median = sorted.size() % 2 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
  // exp(mean log) can land an ulp outside [min, arith_mean].
  f.geo_mean = std::clamp(std::exp(log_sum / m), f.min_p, f.arith_mean);

  double sq = 0.0;
  for (double x : p) sq += (x - f.arith_mean) * (x - f.arith_mean);
  f.std_dev = std::sqrt(sq / m);

  for (double x : p) {
    std::size_t bin = kNumHistBins - 1;
    for (std::size_t k = 1; k < kNumHistBins; ++k) {
      if (x < static_cast<double>(k) / 10.0) {
        bin = k - 1;
        break;
      }
    }
    f.hist[bin] += 1.0;
  }
  for (double& h : f.hist) h /= m;
  return f;
}

}  // namespace nlgf
