#include "nlgf/cnn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <thread>

#include <json.hpp>

#include "nlgf/error.hpp"
#include "nlgf/rng.hpp"

namespace nlgf {

namespace {

constexpr char kMagic[8] = {'N', 'L', 'G', 'F', 'C', 'N', 'N', '1'};
constexpr int kFormatVersion = 1;
constexpr double kInitScale = 0.05;
constexpr std::size_t kChunk = 8;  // examples per gradient partial sum
constexpr std::uint64_t kTrainStream = 0x9E3779B97F4A7C15ULL;

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Keeps scores strictly inside (0, 1) where the double sigmoid saturates.
double open_unit(double p) {
  return std::clamp(p, std::numeric_limits<double>::denorm_min(), std::nextafter(1.0, 0.0));
}

double bce(double logit, bool label) {
  const double softplus = logit > 0 ? logit + std::log1p(std::exp(-logit)) : std::log1p(std::exp(logit));
  return softplus - (label ? logit : 0.0);
}

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

struct Trace {
  std::vector<double> x;  // L x d embeddings, row-major
  std::size_t length = 0;
  std::vector<std::size_t> argmax;  // per pooled unit
  std::vector<double> zmax;
  std::vector<double> u;  // dense input
  double logit = 0.0;
  bool near_kink = false;
};

void forward_trace(const CnnModel& m, const std::vector<std::uint32_t>& ids,
                   std::optional<GeneratorSource> source, const double* mask, double kink_margin,
                   Trace& t) {
  const CnnParams& p = m.params();
  const std::vector<double>& th = m.parameters();
  const std::size_t d = p.embedding_dim;
  if (p.use_source && !source) throw InvalidArgument("this CNN model needs the response source");
  t.length = ids.size();
  t.x.resize(t.length * d);
  for (std::size_t i = 0; i < t.length; ++i) {
    std::copy_n(th.data() + m.embedding_offset() + ids[i] * d, d, t.x.data() + i * d);
  }
  const std::size_t pooled = m.pooled_dim();
  t.argmax.assign(pooled, 0);
  t.zmax.assign(pooled, 0.0);
  t.u.assign(m.dense_dim(), 0.0);
  t.near_kink = false;
  for (std::size_t wi = 0; wi < p.widths.size(); ++wi) {
    const std::size_t w = p.widths[wi];
    const std::size_t span = w * d;
    const std::size_t positions = t.length - w + 1;
    for (std::size_t k = 0; k < p.filters; ++k) {
      const double* wk = th.data() + m.conv_weight_offset(wi) + k * span;
      const double b = th[m.conv_bias_offset(wi) + k];
      double best = -std::numeric_limits<double>::infinity();
      double second = best;
      std::size_t at = 0;
      for (std::size_t pos = 0; pos < positions; ++pos) {
        const double z = b + dot(wk, t.x.data() + pos * d, span);
        if (z > best) {
          second = best;
          best = z;
          at = pos;
        } else if (z > second) {
          second = z;
        }
      }
      const std::size_t q = wi * p.filters + k;
      t.argmax[q] = at;
      t.zmax[q] = best;
      if (std::abs(best) < kink_margin || (best > -kink_margin && best - second < kink_margin)) {
        t.near_kink = true;
      }
      const double h = best > 0.0 ? best : 0.0;
      t.u[q] = mask ? h * mask[q] : h;
    }
  }
  if (p.use_source) t.u[pooled + source_index(*source)] = 1.0;
  t.logit = th[m.dense_bias_offset()] + dot(th.data() + m.dense_offset(), t.u.data(), t.u.size());
}

// Adds d(loss)/d(theta) for a traced example; g = dloss/dlogit.
void backward(const CnnModel& m, const std::vector<std::uint32_t>& ids, const Trace& t, const double* mask,
              double g, std::vector<double>& grad) {
  const CnnParams& p = m.params();
  const std::vector<double>& th = m.parameters();
  const std::size_t d = p.embedding_dim;
  const std::size_t dense = m.dense_offset();
  for (std::size_t i = 0; i < t.u.size(); ++i) grad[dense + i] += g * t.u[i];
  grad[m.dense_bias_offset()] += g;
  std::vector<double> dx(t.length * d, 0.0);
  for (std::size_t wi = 0; wi < p.widths.size(); ++wi) {
    const std::size_t span = p.widths[wi] * d;
    for (std::size_t k = 0; k < p.filters; ++k) {
      const std::size_t q = wi * p.filters + k;
      if (!(t.zmax[q] > 0.0)) continue;
      const double dz = g * th[dense + q] * (mask ? mask[q] : 1.0);
      if (dz == 0.0) continue;
      const std::size_t wk = m.conv_weight_offset(wi) + k * span;
      const std::size_t start = t.argmax[q] * d;
      grad[m.conv_bias_offset(wi) + k] += dz;
      for (std::size_t j = 0; j < span; ++j) {
        grad[wk + j] += dz * t.x[start + j];
        dx[start + j] += dz * th[wk + j];
      }
    }
  }
  for (std::size_t i = 0; i < t.length; ++i) {
    if (ids[i] == 0) continue;  // <pad> stays zero
    double* row = grad.data() + m.embedding_offset() + ids[i] * d;
    for (std::size_t c = 0; c < d; ++c) row[c] += dx[i * d + c];
  }
}

// Runs fn(i) for i in [0, n) on up to `threads` workers with a static
// partition; fn must write only to slot i.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += threads) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

void validate_params(const CnnParams& p) {
  if (p.embedding_dim == 0 || p.filters == 0 || p.widths.empty()) {
    throw InvalidArgument("CNN dimensions must be positive");
  }
  for (std::size_t w : p.widths) {
    if (w == 0) throw InvalidArgument("CNN filter widths must be positive");
  }
  if (!(p.dropout >= 0.0 && p.dropout < 1.0)) throw InvalidArgument("dropout must be in [0, 1)");
  if (!(p.learning_rate > 0.0) || !std::isfinite(p.learning_rate)) {
    throw InvalidArgument("learning rate must be positive");
  }
  if (p.batch_size == 0) throw InvalidArgument("batch size must be positive");
}

void put_le(std::ostream& out, std::uint64_t v, int bytes) {
  char buf[8];
  for (int i = 0; i < bytes; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(buf, bytes);
}

std::uint64_t get_le(std::istream& in, int bytes) {
  unsigned char buf[8];
  if (!in.read(reinterpret_cast<char*>(buf), bytes)) throw DataError("CNN model: truncated file");
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

}  // namespace

CnnModel::CnnModel(const CnnParams& params, std::vector<std::string> vocab, std::uint64_t seed)
    : params_(params) {
  validate_params(params_);
  vocab_ = {std::string(kPadToken), std::string(kCnnUnkToken)};
  for (auto& t : vocab) {
    if (t == kPadToken || t == kCnnUnkToken) continue;
    vocab_.push_back(std::move(t));
  }
  layout();
  Rng rng(seed);
  const std::size_t d = params_.embedding_dim;
  auto fill = [&](std::size_t from, std::size_t to) {
    for (std::size_t i = from; i < to; ++i) theta_[i] = rng.uniform(-kInitScale, kInitScale);
  };
  fill(embedding_offset() + d, embedding_offset() + vocab_.size() * d);
  for (std::size_t wi = 0; wi < params_.widths.size(); ++wi) {
    fill(conv_weight_offset(wi), conv_bias_offset(wi));
  }
  fill(dense_offset(), dense_bias_offset());
}

void CnnModel::layout() {
  index_.clear();
  for (std::size_t i = 0; i < vocab_.size(); ++i) {
    if (!index_.emplace(vocab_[i], static_cast<std::uint32_t>(i)).second) {
      throw DataError("CNN vocabulary has duplicate token '" + vocab_[i] + "'");
    }
  }
  const std::size_t d = params_.embedding_dim;
  std::size_t off = vocab_.size() * d;
  conv_w_off_.clear();
  conv_b_off_.clear();
  for (std::size_t w : params_.widths) {
    conv_w_off_.push_back(off);
    off += params_.filters * w * d;
    conv_b_off_.push_back(off);
    off += params_.filters;
  }
  dense_off_ = off;
  off += dense_dim() + 1;
  theta_.assign(off, 0.0);
}

std::size_t CnnModel::token_id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? 1 : it->second;
}

std::vector<std::uint32_t> CnnModel::encode(const TokenSequence& tokens) const {
  std::size_t n = tokens.size();
  while (n > 0 && tokens[n - 1] == kPadToken) --n;
  std::vector<std::uint32_t> ids;
  ids.reserve(n);
  for (std::size_t i = 0; i < n; ++i) ids.push_back(static_cast<std::uint32_t>(token_id(tokens[i])));
  const std::size_t widest = *std::max_element(params_.widths.begin(), params_.widths.end());
  if (ids.size() < widest) ids.resize(widest, 0);
  return ids;
}

double cnn_forward(const CnnModel& model, const TokenSequence& tokens, std::optional<GeneratorSource> source) {
  Trace t;
  forward_trace(model, model.encode(tokens), source, nullptr, 0.0, t);
  return open_unit(sigmoid(t.logit));
}

double cnn_loss_and_gradient(const CnnModel& model, const CnnExample& example, std::vector<double>& grad) {
  if (grad.size() != model.parameters().size()) throw InvalidArgument("gradient buffer has the wrong size");
  const auto ids = model.encode(example.tokens);
  Trace t;
  forward_trace(model, ids, example.source, nullptr, 0.0, t);
  const double g = sigmoid(t.logit) - (example.label ? 1.0 : 0.0);
  backward(model, ids, t, nullptr, g, grad);
  return bce(t.logit, example.label);
}

std::vector<std::string> build_cnn_vocab(const std::vector<CnnExample>& train) {
  std::set<std::string> seen;
  for (const auto& ex : train) {
    for (const auto& tok : ex.tokens) {
      if (tok != kPadToken && tok != kCnnUnkToken) seen.insert(tok);
    }
  }
  return {seen.begin(), seen.end()};
}

CnnTrainResult train_cnn(const std::vector<CnnExample>& train, const std::vector<CnnExample>& eval,
                         const CnnParams& params, std::uint64_t seed) {
  validate_params(params);
  if (train.empty()) throw InvalidArgument("CNN training set is empty");
  const auto positives = std::count_if(train.begin(), train.end(), [](const CnnExample& e) { return e.label; });
  if (positives == 0 || static_cast<std::size_t>(positives) == train.size()) {
    throw InvalidArgument("CNN training needs both classes; got a single-class train set");
  }

  CnnTrainResult result{CnnModel(params, build_cnn_vocab(train), seed), {}};
  CnnModel& model = result.model;
  std::vector<double>& theta = model.parameters();
  const std::size_t n = train.size();
  std::vector<std::vector<std::uint32_t>> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = model.encode(train[i].tokens);
  std::vector<std::vector<std::uint32_t>> eval_ids(eval.size());
  for (std::size_t i = 0; i < eval.size(); ++i) eval_ids[i] = model.encode(eval[i].tokens);

  auto mean_loss = [&](const std::vector<std::vector<std::uint32_t>>& xs, const std::vector<CnnExample>& ex,
                       std::vector<double>* scores) {
    std::vector<double> losses(xs.size());
    if (scores) scores->assign(xs.size(), 0.0);
    parallel_for(xs.size(), params.threads, [&](std::size_t i) {
      Trace t;
      forward_trace(model, xs[i], ex[i].source, nullptr, 0.0, t);
      losses[i] = bce(t.logit, ex[i].label);
      if (scores) (*scores)[i] = open_unit(sigmoid(t.logit));
    });
    double total = 0.0;
    for (double l : losses) total += l;
    return total / static_cast<double>(xs.size());
  };

  result.report.initial_loss = mean_loss(ids, train, nullptr);
  if (!std::isfinite(result.report.initial_loss)) throw TrainingError("CNN initial loss is non-finite");

  Rng rng(seed ^ kTrainStream);
  const std::size_t pooled = model.pooled_dim();
  const double keep = 1.0 - params.dropout;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::vector<double>> partial;
  std::vector<double> masks, losses;

  for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += params.batch_size) {
      const std::size_t bs = std::min(params.batch_size, n - start);
      masks.assign(bs * pooled, 1.0);
      if (params.dropout > 0.0) {
        for (double& m : masks) m = rng.bernoulli(keep) ? 1.0 / keep : 0.0;
      }
      const std::size_t chunks = (bs + kChunk - 1) / kChunk;
      partial.resize(std::max(partial.size(), chunks));
      losses.assign(bs, 0.0);
      parallel_for(chunks, params.threads, [&](std::size_t c) {
        std::vector<double>& grad = partial[c];
        grad.assign(theta.size(), 0.0);
        Trace t;
        for (std::size_t b = c * kChunk; b < std::min(bs, (c + 1) * kChunk); ++b) {
          const std::size_t i = order[start + b];
          const double* mask = masks.data() + b * pooled;
          forward_trace(model, ids[i], train[i].source, mask, 0.0, t);
          losses[b] = bce(t.logit, train[i].label);
          backward(model, ids[i], t, mask, sigmoid(t.logit) - (train[i].label ? 1.0 : 0.0), grad);
        }
      });
      double batch_loss = 0.0;
      for (double l : losses) batch_loss += l;
      if (!std::isfinite(batch_loss)) {
        throw TrainingError("CNN loss became non-finite in epoch " + std::to_string(epoch + 1) +
                            " at example offset " + std::to_string(start) + "; try a lower learning rate");
      }
      epoch_loss += batch_loss;
      const double step = params.learning_rate / static_cast<double>(bs);
      for (std::size_t c = 0; c < chunks; ++c) {
        const std::vector<double>& grad = partial[c];
        for (std::size_t j = 0; j < theta.size(); ++j) theta[j] -= step * grad[j];
      }
    }
    result.report.train_loss.push_back(epoch_loss / static_cast<double>(n));
    if (!eval.empty()) {
      std::vector<double> scores;
      result.report.eval_loss.push_back(mean_loss(eval_ids, eval, &scores));
      std::size_t tp = 0, fp = 0, fn = 0;
      for (std::size_t i = 0; i < eval.size(); ++i) {
        const bool pred = scores[i] >= 0.5;
        if (pred && eval[i].label) ++tp;
        if (pred && !eval[i].label) ++fp;
        if (!pred && eval[i].label) ++fn;
      }
      result.report.eval_precision.push_back(tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0);
      result.report.eval_recall.push_back(tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0);
    }
  }
  return result;
}

GradCheckResult grad_check(const CnnModel& model, const CnnExample& example, double h, double kink_margin) {
  GradCheckResult r;
  const auto ids = model.encode(example.tokens);
  Trace t;
  forward_trace(model, ids, example.source, nullptr, kink_margin, t);
  if (t.near_kink) {
    r.near_kink = true;
    return r;
  }
  std::vector<double> analytic(model.parameters().size(), 0.0);
  backward(model, ids, t, nullptr, sigmoid(t.logit) - (example.label ? 1.0 : 0.0), analytic);

  CnnModel probe = model;
  std::vector<double>& theta = probe.parameters();
  auto loss_at = [&]() {
    Trace pt;
    forward_trace(probe, ids, example.source, nullptr, 0.0, pt);
    return bce(pt.logit, example.label);
  };
  // The <pad> row is a constant, not a trainable parameter.
  for (std::size_t j = model.params().embedding_dim; j < theta.size(); ++j) {
    const double saved = theta[j];
    theta[j] = saved + h;
    const double up = loss_at();
    theta[j] = saved - h;
    const double down = loss_at();
    theta[j] = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double diff = std::abs(analytic[j] - numeric);
    const double denom = std::max({std::abs(analytic[j]), std::abs(numeric), 1e-6});
    r.max_relative_error = std::max(r.max_relative_error, diff / denom);
    r.max_absolute_error = std::max(r.max_absolute_error, diff);
    ++r.parameters_checked;
  }
  return r;
}

void write_cnn(std::ostream& out, const CnnModel& model) {
  const CnnParams& p = model.params();
  nlohmann::ordered_json header;
  header["version"] = kFormatVersion;
  nlohmann::ordered_json hp;
  hp["embedding_dim"] = p.embedding_dim;
  hp["filters"] = p.filters;
  hp["widths"] = p.widths;
  hp["dropout"] = p.dropout;
  hp["learning_rate"] = p.learning_rate;
  hp["batch_size"] = p.batch_size;
  hp["epochs"] = p.epochs;
  hp["use_source"] = p.use_source;
  header["hyperparams"] = hp;
  header["vocab_size"] = model.vocab().size();
  header["dense_dim"] = model.dense_dim();
  header["num_parameters"] = model.parameters().size();
  header["vocab"] = model.vocab();
  const std::string text = header.dump();
  out.write(kMagic, sizeof(kMagic));
  put_le(out, text.size(), 4);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  put_le(out, model.parameters().size(), 8);
  for (double v : model.parameters()) put_le(out, std::bit_cast<std::uint64_t>(v), 8);
  if (!out) throw DataError("failed writing CNN model");
}

CnnModel read_cnn(std::istream& in) {
  char magic[sizeof(kMagic)];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw DataError("not a CNN model file (bad magic)");
  }
  const std::uint64_t len = get_le(in, 4);
  std::string text(len, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(len))) throw DataError("CNN model: truncated header");
  CnnModel m;
  try {
    const auto header = nlohmann::json::parse(text);
    if (header.at("version").get<int>() != kFormatVersion) throw DataError("CNN model: unsupported version");
    const auto& hp = header.at("hyperparams");
    m.params_.embedding_dim = hp.at("embedding_dim").get<std::size_t>();
    m.params_.filters = hp.at("filters").get<std::size_t>();
    m.params_.widths = hp.at("widths").get<std::vector<std::size_t>>();
    m.params_.dropout = hp.at("dropout").get<double>();
    m.params_.learning_rate = hp.at("learning_rate").get<double>();
    m.params_.batch_size = hp.at("batch_size").get<std::size_t>();
    m.params_.epochs = hp.at("epochs").get<std::size_t>();
    m.params_.use_source = hp.at("use_source").get<bool>();
    m.vocab_ = header.at("vocab").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("CNN model: bad header: ") + e.what());
  }
  try {
    validate_params(m.params_);
  } catch (const InvalidArgument& e) {
    throw DataError(std::string("CNN model: ") + e.what());
  }
  if (m.vocab_.size() < 2 || m.vocab_[0] != kPadToken || m.vocab_[1] != kCnnUnkToken) {
    throw DataError("CNN model: vocabulary must start with <pad>, <unk>");
  }
  m.layout();
  const std::uint64_t count = get_le(in, 8);
  if (count != m.theta_.size()) throw DataError("CNN model: parameter count does not match the header shapes");
  for (double& v : m.theta_) {
    v = std::bit_cast<double>(get_le(in, 8));
    if (!std::isfinite(v)) throw DataError("CNN model: non-finite parameter");
  }
  return m;
}

void save_cnn(const std::filesystem::path& path, const CnnModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  write_cnn(out, model);
}

CnnModel load_cnn(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open CNN model '" + path.string() + "'");
  return read_cnn(in);
}

}  // namespace nlgf
