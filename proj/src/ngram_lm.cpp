#include "nlgf/ngram_lm.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "nlgf/error.hpp"

namespace nlgf {

namespace {

constexpr std::string_view kMagic = "nlgf-ngram-lm";
constexpr int kFormatVersion = 1;

std::string expect_field(std::istream& in, std::string_view name) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("truncated LM file: expected '" + std::string(name) + "'");
  std::istringstream fields(line);
  std::string got, value;
  fields >> got >> value;
  if (got != name) throw DataError("LM file: expected '" + std::string(name) + "', got '" + got + "'");
  return value;
}

}  // namespace

std::string NGramModel::key(const std::uint32_t* ids, std::size_t n) {
  std::string k(n * sizeof(std::uint32_t), '\0');
  std::memcpy(k.data(), ids, k.size());
  return k;
}

std::uint32_t NGramModel::id_of(std::string_view token) const {
  auto it = token_to_id_.find(std::string(token));
  return it == token_to_id_.end() ? kUnkId : it->second;
}

bool NGramModel::in_vocabulary(std::string_view token) const {
  auto it = token_to_id_.find(std::string(token));
  return it != token_to_id_.end() && it->second >= kFirstWordId;
}

std::vector<std::string> NGramModel::vocabulary() const {
  return {id_to_token_.begin() + kFirstWordId, id_to_token_.end()};
}

void NGramModel::add_ngram(const std::vector<std::uint32_t>& ids, std::uint64_t count) {
  ngram_counts_[key(ids.data(), ids.size())] += count;
  if (ids.size() >= 2) {
    history_totals_[key(ids.data(), ids.size() - 1)] += count;
  } else {
    unigram_total_ += count;
  }
}

double NGramModel::prob_ids(const std::uint32_t* history_end, std::size_t history_len,
                            std::uint32_t word) const {
  // history_end points one past the last history id; history_len >= order-1.
  const double support = static_cast<double>(vocab_size() + 2);  // words + <unk> + </s>
  std::vector<std::uint32_t> gram;
  gram.reserve(static_cast<std::size_t>(order_));

  auto count_of = [&](const std::string& k) -> std::uint64_t {
    auto it = ngram_counts_.find(k);
    return it == ngram_counts_.end() ? 0 : it->second;
  };

  const std::uint64_t unigram = count_of(key(&word, 1));
  double p = (static_cast<double>(unigram) + 1.0) /
             (static_cast<double>(unigram_total_) + support);
  p = lambda_ * (static_cast<double>(unigram) / static_cast<double>(unigram_total_)) +
      (1.0 - lambda_) * p;

  for (int k = 2; k <= order_; ++k) {
    const std::size_t h = static_cast<std::size_t>(k - 1);
    if (h > history_len) break;
    gram.assign(history_end - h, history_end);
    auto tot = history_totals_.find(key(gram.data(), gram.size()));
    if (tot == history_totals_.end()) continue;
    gram.push_back(word);
    const double mle = static_cast<double>(count_of(key(gram.data(), gram.size()))) /
                       static_cast<double>(tot->second);
    p = lambda_ * mle + (1.0 - lambda_) * p;
  }
  return p;
}

double NGramModel::prob(std::span<const std::string> history, std::string_view word) const {
  const std::size_t h = static_cast<std::size_t>(order_ - 1);
  std::vector<std::uint32_t> ids(h, kBosId);
  const std::size_t take = std::min(h, history.size());
  for (std::size_t i = 0; i < take; ++i) {
    const std::string& tok = history[history.size() - take + i];
    ids[h - take + i] = tok == kBos ? kBosId : id_of(tok);
  }
  const std::uint32_t w = word == kEos ? kEosId : id_of(word);
  return prob_ids(ids.data() + ids.size(), ids.size(), w);
}

std::uint64_t NGramModel::count(std::span<const std::string> ngram) const {
  std::vector<std::uint32_t> ids;
  for (const auto& t : ngram) ids.push_back(t == kBos ? kBosId : t == kEos ? kEosId : id_of(t));
  auto it = ngram_counts_.find(key(ids.data(), ids.size()));
  return it == ngram_counts_.end() ? 0 : it->second;
}

NGramModel train_lm(const std::vector<TokenSequence>& sentences, const LmOptions& options) {
  if (sentences.empty()) throw InvalidArgument("cannot train a language model on an empty corpus");
  if (options.order < 1 || options.order > 10) throw InvalidArgument("LM order must be in [1, 10]");
  if (!(options.lambda > 0.0 && options.lambda <= 1.0)) {
    throw InvalidArgument("LM lambda must be in (0, 1]");
  }
  std::map<std::string, std::size_t> freq;
  for (const auto& s : sentences) {
    for (const auto& t : s) ++freq[t];
  }

  NGramModel m;
  m.order_ = options.order;
  m.lambda_ = options.lambda;
  m.min_count_ = std::max<std::size_t>(1, options.min_count);
  m.id_to_token_ = {std::string(kBos), std::string(kEos), std::string(kUnk)};
  for (std::uint32_t i = 0; i < m.id_to_token_.size(); ++i) m.token_to_id_[m.id_to_token_[i]] = i;
  for (const auto& [tok, c] : freq) {
    if (c < m.min_count_ || m.token_to_id_.count(tok)) continue;
    m.token_to_id_[tok] = static_cast<std::uint32_t>(m.id_to_token_.size());
    m.id_to_token_.push_back(tok);
  }

  const std::size_t pad = static_cast<std::size_t>(m.order_ - 1);
  std::vector<std::uint32_t> padded, gram;
  for (const auto& s : sentences) {
    padded.assign(pad, NGramModel::kBosId);
    for (const auto& t : s) padded.push_back(m.id_of(t));
    padded.push_back(NGramModel::kEosId);
    for (std::size_t p = pad; p < padded.size(); ++p) {
      for (std::size_t k = 1; k <= static_cast<std::size_t>(m.order_); ++k) {
        gram.assign(padded.begin() + static_cast<std::ptrdiff_t>(p + 1 - k),
                    padded.begin() + static_cast<std::ptrdiff_t>(p + 1));
        m.add_ngram(gram, 1);
      }
    }
  }
  return m;
}

SentenceProbs sentence_probs(const NGramModel& model, const TokenSequence& tokens) {
  const std::size_t pad = static_cast<std::size_t>(model.order_ - 1);
  std::vector<std::uint32_t> padded(pad, NGramModel::kBosId);
  for (const auto& t : tokens) padded.push_back(model.id_of(t));
  padded.push_back(NGramModel::kEosId);
  SentenceProbs out;
  out.probs.reserve(tokens.size() + 1);
  for (std::size_t p = pad; p < padded.size(); ++p) {
    out.probs.push_back(model.prob_ids(padded.data() + p, p, padded[p]));
  }
  return out;
}

double lm_score(const NGramModel& model, const TokenSequence& tokens, bool length_normalize) {
  const SentenceProbs sp = sentence_probs(model, tokens);
  double total = 0.0;
  for (double p : sp.probs) total += std::log(p);
  return length_normalize ? total / static_cast<double>(sp.probs.size()) : total;
}

std::vector<std::size_t> lm_rank(const NGramModel& model, const std::vector<TokenSequence>& candidates,
                                 bool length_normalize) {
  std::vector<double> scores;
  scores.reserve(candidates.size());
  for (const auto& c : candidates) scores.push_back(lm_score(model, c, length_normalize));
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

void write_lm(std::ostream& out, const NGramModel& model) {
  out << kMagic << ' ' << kFormatVersion << '\n';
  out << "order " << model.order_ << '\n';
  out << "lambda " << std::setprecision(17) << model.lambda_ << '\n';
  out << "min_count " << model.min_count_ << '\n';
  out << "vocab " << model.vocab_size() << '\n';
  for (std::size_t i = NGramModel::kFirstWordId; i < model.id_to_token_.size(); ++i) {
    out << model.id_to_token_[i] << '\n';
  }
  std::vector<std::pair<std::string, std::uint64_t>> lines;
  lines.reserve(model.ngram_counts_.size());
  for (const auto& [k, c] : model.ngram_counts_) {
    const std::size_t n = k.size() / sizeof(std::uint32_t);
    std::string text;
    for (std::size_t i = 0; i < n; ++i) {
      std::uint32_t id;
      std::memcpy(&id, k.data() + i * sizeof(std::uint32_t), sizeof(id));
      if (i) text.push_back(' ');
      text += model.id_to_token_[id];
    }
    lines.emplace_back(std::move(text), c);
  }
  std::sort(lines.begin(), lines.end());
  out << "ngrams " << lines.size() << '\n';
  for (const auto& [text, c] : lines) out << c << '\t' << text << '\n';
}

NGramModel read_lm(std::istream& in) {
  const std::string version = expect_field(in, kMagic);
  if (version != std::to_string(kFormatVersion)) {
    throw DataError("unsupported LM format version '" + version + "'");
  }
  NGramModel m;
  try {
    m.order_ = std::stoi(expect_field(in, "order"));
    m.lambda_ = std::stod(expect_field(in, "lambda"));
    m.min_count_ = std::stoul(expect_field(in, "min_count"));
  } catch (const std::logic_error&) {
    throw DataError("LM file: malformed header value");
  }
  if (m.order_ < 1 || m.order_ > 10 || !(m.lambda_ > 0.0 && m.lambda_ <= 1.0)) {
    throw DataError("LM file: header values out of range");
  }
  const std::size_t vocab = std::stoul(expect_field(in, "vocab"));
  m.id_to_token_ = {std::string(kBos), std::string(kEos), std::string(kUnk)};
  for (std::uint32_t i = 0; i < m.id_to_token_.size(); ++i) m.token_to_id_[m.id_to_token_[i]] = i;
  std::string line;
  for (std::size_t i = 0; i < vocab; ++i) {
    if (!std::getline(in, line) || line.empty()) throw DataError("LM file: truncated vocabulary");
    m.token_to_id_[line] = static_cast<std::uint32_t>(m.id_to_token_.size());
    m.id_to_token_.push_back(line);
  }
  const std::size_t n = std::stoul(expect_field(in, "ngrams"));
  std::vector<std::uint32_t> ids;
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::getline(in, line)) throw DataError("LM file: truncated n-gram table");
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos) throw DataError("LM file: malformed n-gram line");
    const std::uint64_t c = std::stoull(line.substr(0, tab));
    ids.clear();
    std::istringstream toks(line.substr(tab + 1));
    std::string t;
    while (toks >> t) {
      auto it = m.token_to_id_.find(t);
      if (it == m.token_to_id_.end()) throw DataError("LM file: n-gram token '" + t + "' not in vocabulary");
      ids.push_back(it->second);
    }
    if (ids.empty() || ids.size() > static_cast<std::size_t>(m.order_) || c == 0) {
      throw DataError("LM file: invalid n-gram entry");
    }
    m.add_ngram(ids, c);
  }
  return m;
}

void save_lm(const std::filesystem::path& path, const NGramModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  write_lm(out, model);
}

NGramModel load_lm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open LM file '" + path.string() + "'");
  return read_lm(in);
}

}  // namespace nlgf
