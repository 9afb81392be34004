#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "nlgf/delex.hpp"

namespace nlgf {

inline constexpr std::string_view kBos = "<s>";
inline constexpr std::string_view kEos = "</s>";
inline constexpr std::string_view kUnk = "<unk>";

struct LmOptions {
  int order = 7;
  double lambda = 0.9;
  // Training tokens seen fewer times than this are mapped to <unk>.
  std::size_t min_count = 1;
};

// Per-position probabilities p_1..p_m of one sentence; m = tokens + 1 (EOS).
struct SentenceProbs {
  std::vector<double> probs;
};

// Counting n-gram model with fixed-weight interpolation:
//   P_k(w | h) = lambda * c(h w) / c(h .) + (1 - lambda) * P_{k-1}(w | tail h)
// for k >= 2 when the history h was seen (P_{k-1} alone otherwise). P_1
// interpolates the unigram MLE with P_0, an add-one unigram over
// vocab + <unk> + </s>. At lambda = 1 seen
// histories reproduce maximum-likelihood estimates, so unseen continuations
// get zero; any lambda < 1 keeps every probability in (0, 1].
class NGramModel {
 public:
  NGramModel() = default;

  int order() const { return order_; }
  double lambda() const { return lambda_; }
  std::size_t min_count() const { return min_count_; }
  // Sorted training vocabulary (without markers).
  std::vector<std::string> vocabulary() const;
  std::size_t vocab_size() const { return id_to_token_.size() - kFirstWordId; }
  bool in_vocabulary(std::string_view token) const;

  // P_order(word | history), where history holds the preceding tokens (only
  // the last order-1 are used; missing positions count as BOS). Unknown
  // tokens map to <unk>; word may be kEos.
  double prob(std::span<const std::string> history, std::string_view word) const;

  std::uint64_t count(std::span<const std::string> ngram) const;

  friend NGramModel train_lm(const std::vector<TokenSequence>& sentences, const LmOptions& options);
  friend NGramModel read_lm(std::istream& in);
  friend void write_lm(std::ostream& out, const NGramModel& model);
  friend SentenceProbs sentence_probs(const NGramModel& model, const TokenSequence& tokens);

 private:
  static constexpr std::uint32_t kBosId = 0;
  static constexpr std::uint32_t kEosId = 1;
  static constexpr std::uint32_t kUnkId = 2;
  static constexpr std::uint32_t kFirstWordId = 3;

  std::uint32_t id_of(std::string_view token) const;
  static std::string key(const std::uint32_t* ids, std::size_t n);
  double prob_ids(const std::uint32_t* history_end, std::size_t history_len, std::uint32_t word) const;
  void add_ngram(const std::vector<std::uint32_t>& ids, std::uint64_t count);

  int order_ = 0;
  double lambda_ = 1.0;
  std::size_t min_count_ = 1;
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, std::uint32_t> token_to_id_;
  // k-gram counts keyed by packed ids, and per-history continuation totals.
  std::unordered_map<std::string, std::uint64_t> ngram_counts_;
  std::unordered_map<std::string, std::uint64_t> history_totals_;
  std::uint64_t unigram_total_ = 0;
};

// Pads each sentence with order-1 BOS markers and one EOS and counts every
// k-gram for k = 1..order. Throws InvalidArgument on an empty corpus or
// out-of-range options.
NGramModel train_lm(const std::vector<TokenSequence>& sentences, const LmOptions& options = {});

SentenceProbs sentence_probs(const NGramModel& model, const TokenSequence& tokens);

// Mean log probability per position (or the plain sum when not normalized).
double lm_score(const NGramModel& model, const TokenSequence& tokens, bool length_normalize = true);

// Candidate indices ordered best first by lm_score; ties keep input order.
std::vector<std::size_t> lm_rank(const NGramModel& model, const std::vector<TokenSequence>& candidates,
                                 bool length_normalize = true);

// Versioned text format: a header with order, lambda, min_count and the
// vocabulary, then "count<TAB>k-gram" lines sorted lexicographically.
void write_lm(std::ostream& out, const NGramModel& model);
NGramModel read_lm(std::istream& in);
void save_lm(const std::filesystem::path& path, const NGramModel& model);
NGramModel load_lm(const std::filesystem::path& path);

}  // namespace nlgf
