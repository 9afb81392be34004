#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace nlgf {

struct GbdtParams {
  int num_trees = 200;
  int max_depth = 4;
  double learning_rate = 0.1;
  std::size_t min_samples_leaf = 20;
  // Row fraction drawn (seeded, without replacement) for each tree.
  double subsample = 1.0;
};

// Split node when feature >= 0 (rows with value < threshold go left),
// otherwise a leaf holding a log-odds contribution.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
  std::size_t samples = 0;

  bool is_leaf() const { return feature < 0; }
};

struct RegressionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double predict(std::span<const double> x) const;
  std::size_t depth() const;
};

class GbdtModel {
 public:
  GbdtParams params;
  std::vector<std::string> feature_names;
  std::size_t dimension = 0;
  double base_score = 0.0;  // prior log-odds of the positive class
  std::uint64_t seed = 0;
  std::vector<RegressionTree> trees;
  // Mean log-loss before the first tree and after every round.
  std::vector<double> train_loss;
  std::vector<double> eval_loss;

  // base_score + learning_rate * sum of tree outputs.
  double margin(std::span<const double> x) const;
};

struct GbdtTrainOptions {
  std::vector<std::string> feature_names;
  // Optional held-out rows whose loss is tracked per round.
  const std::vector<std::vector<double>>* eval_features = nullptr;
  const std::vector<bool>* eval_labels = nullptr;
  // Accept only features in [0, 1]; every LM feature and the one-hot are.
  bool require_unit_range = true;
};

// Logistic-loss boosting. Each round fits a regression tree to the residuals
// y - p by greedy variance reduction over exact thresholds (midpoints of
// adjacent distinct values; gain ties go to the lowest feature, then the
// lowest threshold) and sets each leaf to the Newton step sum(y-p)/sum(p(1-p)).
// A leaf step that would raise that leaf's loss is halved until it does not.
GbdtModel train_gbdt(const std::vector<std::vector<double>>& features,
                     const std::vector<bool>& labels, const GbdtParams& params,
                     std::uint64_t seed, const GbdtTrainOptions& options = {});

// Probability of the grammatical class; throws InvalidArgument when the
// dimension differs from training.
double gbdt_score(const GbdtModel& model, std::span<const double> features);

double log_loss(double margin, bool label);

// Versioned JSON tree dump with stable key order.
void write_gbdt(std::ostream& out, const GbdtModel& model);
GbdtModel read_gbdt(std::istream& in);
void save_gbdt(const std::filesystem::path& path, const GbdtModel& model);
GbdtModel load_gbdt(const std::filesystem::path& path);

}  // namespace nlgf
