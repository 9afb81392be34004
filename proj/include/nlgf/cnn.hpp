#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "nlgf/corpus.hpp"
#include "nlgf/delex.hpp"

namespace nlgf {

inline constexpr std::string_view kPadToken = "<pad>";
inline constexpr std::string_view kCnnUnkToken = "<unk>";

struct CnnParams {
  std::size_t embedding_dim = 64;
  std::size_t filters = 64;  // per width
  std::vector<std::size_t> widths = {2, 3, 4, 5};
  double dropout = 0.5;
  double learning_rate = 0.5;
  std::size_t batch_size = 64;
  std::size_t epochs = 30;
  bool use_source = false;
  // Worker threads for per-example gradients; results do not depend on it.
  std::size_t threads = 1;
};

struct CnnExample {
  TokenSequence tokens;
  GeneratorSource source = GeneratorSource::IR;
  bool label = false;
};

// Embeddings -> one convolution bank per width (ReLU, max over time) ->
// optional source one-hot -> dense layer -> sigmoid. All parameters live in
// one flat vector; the offsets below index into it.
class CnnModel {
 public:
  CnnModel() = default;
  // Vocabulary indices 0 and 1 are reserved for <pad> and <unk>; the given
  // tokens follow in order. Weights are drawn uniformly from [-0.05, 0.05],
  // biases and the <pad> embedding start at zero.
  CnnModel(const CnnParams& params, std::vector<std::string> vocab, std::uint64_t seed);

  const CnnParams& params() const { return params_; }
  const std::vector<std::string>& vocab() const { return vocab_; }
  std::size_t token_id(std::string_view token) const;

  std::vector<double>& parameters() { return theta_; }
  const std::vector<double>& parameters() const { return theta_; }

  std::size_t embedding_offset() const { return 0; }
  std::size_t conv_weight_offset(std::size_t width_index) const { return conv_w_off_[width_index]; }
  std::size_t conv_bias_offset(std::size_t width_index) const { return conv_b_off_[width_index]; }
  std::size_t dense_offset() const { return dense_off_; }
  std::size_t dense_bias_offset() const { return dense_off_ + dense_dim(); }
  std::size_t pooled_dim() const { return params_.widths.size() * params_.filters; }
  std::size_t dense_dim() const { return pooled_dim() + (params_.use_source ? kNumSources : 0); }

  // Token ids after dropping trailing <pad> tokens and padding sentences
  // shorter than the widest filter up to that width.
  std::vector<std::uint32_t> encode(const TokenSequence& tokens) const;

  friend CnnModel read_cnn(std::istream& in);

 private:
  void layout();

  CnnParams params_;
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, std::uint32_t> index_;
  std::vector<double> theta_;
  std::vector<std::size_t> conv_w_off_;
  std::vector<std::size_t> conv_b_off_;
  std::size_t dense_off_ = 0;
};

// Probability of the grammatical class. Throws InvalidArgument when the
// model uses the source feature and none is given.
double cnn_forward(const CnnModel& model, const TokenSequence& tokens,
                   std::optional<GeneratorSource> source = std::nullopt);

// Binary cross-entropy of one example and its gradient (accumulated into
// grad, which must have the parameter count). Dropout is not applied.
double cnn_loss_and_gradient(const CnnModel& model, const CnnExample& example, std::vector<double>& grad);

struct TrainReport {
  double initial_loss = 0.0;  // mean train loss before the first update
  std::vector<double> train_loss;  // running mean over each epoch's batches
  std::vector<double> eval_loss;
  std::vector<double> eval_precision;  // at score >= 0.5
  std::vector<double> eval_recall;
};

struct CnnTrainResult {
  CnnModel model;
  TrainReport report;
};

// Sorted distinct training tokens.
std::vector<std::string> build_cnn_vocab(const std::vector<CnnExample>& train);

// Mini-batch SGD on binary cross-entropy with seeded init, shuffling and
// dropout on the pooled vector. Throws InvalidArgument on a single-class
// train set and TrainingError when the loss becomes non-finite.
CnnTrainResult train_cnn(const std::vector<CnnExample>& train, const std::vector<CnnExample>& eval,
                         const CnnParams& params, std::uint64_t seed);

struct GradCheckResult {
  double max_relative_error = 0.0;
  double max_absolute_error = 0.0;
  std::size_t parameters_checked = 0;
  // A pooled pre-activation sits within the kink margin of zero, or two
  // positions tie for a max; the comparison is skipped.
  bool near_kink = false;
};

// Central differences (step h) against the analytic gradient for every
// trainable parameter (all but the <pad> row). Relative error is |a - n| / max(|a|, |n|, 1e-6). A kink margin
// of 0 disables the exclusion.
GradCheckResult grad_check(const CnnModel& model, const CnnExample& example, double h = 1e-5,
                           double kink_margin = 1e-7);

// Binary container: "NLGFCNN1", u32 header length, JSON header (hyperparams,
// shapes, vocabulary), u64 parameter count, float64 little-endian values.
void write_cnn(std::ostream& out, const CnnModel& model);
CnnModel read_cnn(std::istream& in);
void save_cnn(const std::filesystem::path& path, const CnnModel& model);
CnnModel load_cnn(const std::filesystem::path& path);

}  // namespace nlgf
