#include "nlgf/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "nlgf/error.hpp"
#include "nlgf/rng.hpp"

namespace nlgf {

using nlohmann::ordered_json;

namespace {

constexpr int kModelVersion = 1;
constexpr double kMinGain = 1e-12;
constexpr double kMinHessian = 1e-12;
constexpr int kMaxHalvings = 60;

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

class TreeBuilder {
 public:
  TreeBuilder(const std::vector<std::vector<double>>& x, const std::vector<double>& residual,
              const std::vector<double>& hessian, const std::vector<double>& margin,
              const std::vector<bool>& labels, const GbdtParams& params)
      : x_(x), residual_(residual), hessian_(hessian), margin_(margin), labels_(labels),
        params_(params) {}

  RegressionTree build(std::vector<std::size_t> rows) {
    tree_ = RegressionTree{};
    grow(std::move(rows), 0);
    return std::move(tree_);
  }

 private:
  struct Best {
    double gain = kMinGain;
    int feature = -1;
    double threshold = 0.0;
  };

  Best find_split(const std::vector<std::size_t>& rows) const {
    Best best;
    const std::size_t n = rows.size();
    const std::size_t min_leaf = std::max<std::size_t>(1, params_.min_samples_leaf);
    if (n < 2 * min_leaf) return best;
    double total = 0.0;
    for (std::size_t r : rows) total += residual_[r];
    const double parent = total * total / static_cast<double>(n);

    std::vector<std::size_t> sorted = rows;
    const std::size_t dims = x_[rows.front()].size();
    for (std::size_t f = 0; f < dims; ++f) {
      std::sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
        if (x_[a][f] != x_[b][f]) return x_[a][f] < x_[b][f];
        return a < b;
      });
      double left_sum = 0.0;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        left_sum += residual_[sorted[i]];
        const double lo = x_[sorted[i]][f];
        const double hi = x_[sorted[i + 1]][f];
        if (lo == hi) continue;
        const std::size_t n_left = i + 1;
        const std::size_t n_right = n - n_left;
        if (n_left < min_leaf || n_right < min_leaf) continue;
        const double right_sum = total - left_sum;
        const double gain = left_sum * left_sum / static_cast<double>(n_left) +
                            right_sum * right_sum / static_cast<double>(n_right) - parent;
        if (gain > best.gain) {
          double threshold = lo + (hi - lo) / 2.0;
          if (!(threshold > lo)) threshold = hi;
          best = {gain, static_cast<int>(f), threshold};
        }
      }
    }
    return best;
  }

  double leaf_loss(const std::vector<std::size_t>& rows, double step) const {
    double loss = 0.0;
    for (std::size_t r : rows) loss += log_loss(margin_[r] + step, labels_[r]);
    return loss;
  }

  double leaf_value(const std::vector<std::size_t>& rows) const {
    double g = 0.0, h = 0.0;
    for (std::size_t r : rows) {
      g += residual_[r];
      h += hessian_[r];
    }
    double value = g / std::max(h, kMinHessian);
    const double before = leaf_loss(rows, 0.0);
    int halvings = 0;
    while (leaf_loss(rows, params_.learning_rate * value) > before) {
      if (++halvings > kMaxHalvings) return 0.0;
      value /= 2.0;
    }
    return value;
  }

  int grow(std::vector<std::size_t> rows, int depth) {
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    tree_.nodes[id].samples = rows.size();
    const Best best = depth < params_.max_depth ? find_split(rows) : Best{};
    if (best.feature < 0) {
      tree_.nodes[id].value = leaf_value(rows);
      return id;
    }
    std::vector<std::size_t> left, right;
    for (std::size_t r : rows) {
      (x_[r][static_cast<std::size_t>(best.feature)] < best.threshold ? left : right).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    tree_.nodes[id].feature = best.feature;
    tree_.nodes[id].threshold = best.threshold;
    const int l = grow(std::move(left), depth + 1);
    const int r = grow(std::move(right), depth + 1);
    tree_.nodes[id].left = l;
    tree_.nodes[id].right = r;
    return id;
  }

  const std::vector<std::vector<double>>& x_;
  const std::vector<double>& residual_;
  const std::vector<double>& hessian_;
  const std::vector<double>& margin_;
  const std::vector<bool>& labels_;
  const GbdtParams& params_;
  RegressionTree tree_;
};

double mean_loss(const std::vector<double>& margin, const std::vector<bool>& labels) {
  double total = 0.0;
  for (std::size_t i = 0; i < margin.size(); ++i) total += log_loss(margin[i], labels[i]);
  return total / static_cast<double>(margin.size());
}

void validate_rows(const std::vector<std::vector<double>>& rows, std::size_t dims, bool unit_range,
                   const char* what) {
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != dims) {
      throw InvalidArgument(std::string(what) + " row " + std::to_string(i) +
                            " has a different feature dimension");
    }
    for (double v : rows[i]) {
      if (!std::isfinite(v) || (unit_range && (v < 0.0 || v > 1.0))) {
        throw InvalidArgument(std::string(what) + " row " + std::to_string(i) +
                              " has a NaN or out-of-range feature value");
      }
    }
  }
}

ordered_json node_json(const RegressionTree& tree, int id) {
  const TreeNode& n = tree.nodes[static_cast<std::size_t>(id)];
  ordered_json j;
  if (n.is_leaf()) {
    j["leaf"] = n.value;
    j["samples"] = n.samples;
  } else {
    j["feature"] = n.feature;
    j["threshold"] = n.threshold;
    j["samples"] = n.samples;
    j["left"] = node_json(tree, n.left);
    j["right"] = node_json(tree, n.right);
  }
  return j;
}

int node_from_json(RegressionTree& tree, const ordered_json& j, std::size_t dims) {
  const int id = static_cast<int>(tree.nodes.size());
  tree.nodes.emplace_back();
  tree.nodes[id].samples = j.value("samples", std::size_t{0});
  if (j.contains("leaf")) {
    tree.nodes[id].value = j.at("leaf").get<double>();
    return id;
  }
  const int feature = j.at("feature").get<int>();
  if (feature < 0 || static_cast<std::size_t>(feature) >= dims) {
    throw DataError("GBDT model: split feature index out of range");
  }
  tree.nodes[id].feature = feature;
  tree.nodes[id].threshold = j.at("threshold").get<double>();
  const int l = node_from_json(tree, j.at("left"), dims);
  const int r = node_from_json(tree, j.at("right"), dims);
  tree.nodes[id].left = l;
  tree.nodes[id].right = r;
  return id;
}

}  // namespace

double log_loss(double margin, bool label) {
  // log(1 + e^m) - y m, computed without overflow.
  const double softplus = margin > 0 ? margin + std::log1p(std::exp(-margin))
                                     : std::log1p(std::exp(margin));
  return softplus - (label ? margin : 0.0);
}

double RegressionTree::predict(std::span<const double> x) const {
  std::size_t id = 0;
  while (!nodes[id].is_leaf()) {
    const TreeNode& n = nodes[id];
    id = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left
                                                                                       : n.right);
  }
  return nodes[id].value;
}

std::size_t RegressionTree::depth() const {
  std::vector<std::pair<int, std::size_t>> stack = {{0, 0}};
  std::size_t deepest = 0;
  while (!stack.empty()) {
    auto [id, d] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, d);
    const TreeNode& n = nodes[static_cast<std::size_t>(id)];
    if (!n.is_leaf()) {
      stack.emplace_back(n.left, d + 1);
      stack.emplace_back(n.right, d + 1);
    }
  }
  return deepest;
}

double GbdtModel::margin(std::span<const double> x) const {
  double sum = 0.0;
  for (const auto& t : trees) sum += t.predict(x);
  return base_score + params.learning_rate * sum;
}

double gbdt_score(const GbdtModel& model, std::span<const double> features) {
  if (features.size() != model.dimension) {
    throw InvalidArgument("feature dimension " + std::to_string(features.size()) +
                          " does not match the model's " + std::to_string(model.dimension));
  }
  // Clamped so that saturated margins still give a score strictly in (0, 1).
  return std::clamp(sigmoid(model.margin(features)), std::numeric_limits<double>::denorm_min(),
                    std::nextafter(1.0, 0.0));
}

GbdtModel train_gbdt(const std::vector<std::vector<double>>& features,
                     const std::vector<bool>& labels, const GbdtParams& params,
                     std::uint64_t seed, const GbdtTrainOptions& options) {
  if (features.size() != labels.size()) throw InvalidArgument("features and labels differ in length");
  if (features.size() < 2) throw InvalidArgument("GBDT training needs at least two examples");
  if (params.num_trees < 0 || params.max_depth < 0 || !(params.learning_rate > 0.0) ||
      !(params.subsample > 0.0 && params.subsample <= 1.0)) {
    throw InvalidArgument("invalid GBDT hyperparameters");
  }
  const std::size_t positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), true));
  if (positives == 0 || positives == labels.size()) {
    throw InvalidArgument("GBDT training needs both classes; got a single-class label set");
  }
  const std::size_t dims = features.front().size();
  if (dims == 0) throw InvalidArgument("GBDT training needs at least one feature");
  validate_rows(features, dims, options.require_unit_range, "training");
  const bool has_eval = options.eval_features && options.eval_labels;
  if (has_eval) {
    if (options.eval_features->size() != options.eval_labels->size()) {
      throw InvalidArgument("eval features and labels differ in length");
    }
    validate_rows(*options.eval_features, dims, options.require_unit_range, "eval");
  }

  GbdtModel model;
  model.params = params;
  model.dimension = dims;
  model.seed = seed;
  model.feature_names = options.feature_names;
  if (model.feature_names.empty()) {
    for (std::size_t f = 0; f < dims; ++f) model.feature_names.push_back("f" + std::to_string(f));
  }
  if (model.feature_names.size() != dims) throw InvalidArgument("feature_names size mismatch");

  const double rate = static_cast<double>(positives) / static_cast<double>(labels.size());
  model.base_score = std::log(rate / (1.0 - rate));

  const std::size_t n = features.size();
  std::vector<double> margin(n, model.base_score), residual(n), hessian(n);
  std::vector<double> eval_margin;
  if (has_eval) eval_margin.assign(options.eval_features->size(), model.base_score);
  model.train_loss.push_back(mean_loss(margin, labels));
  if (has_eval && !eval_margin.empty()) model.eval_loss.push_back(mean_loss(eval_margin, *options.eval_labels));

  Rng rng(seed);
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  const std::size_t sample_size =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(params.subsample * static_cast<double>(n))));

  for (int round = 0; round < params.num_trees; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      const double p = sigmoid(margin[i]);
      residual[i] = (labels[i] ? 1.0 : 0.0) - p;
      hessian[i] = p * (1.0 - p);
    }
    std::vector<std::size_t> rows = all;
    if (sample_size < n) {
      rng.shuffle(rows);
      rows.resize(sample_size);
      std::sort(rows.begin(), rows.end());
    }
    TreeBuilder builder(features, residual, hessian, margin, labels, params);
    RegressionTree tree = builder.build(std::move(rows));
    for (std::size_t i = 0; i < n; ++i) margin[i] += params.learning_rate * tree.predict(features[i]);
    if (has_eval) {
      for (std::size_t i = 0; i < eval_margin.size(); ++i) {
        eval_margin[i] += params.learning_rate * tree.predict((*options.eval_features)[i]);
      }
    }
    const double loss = mean_loss(margin, labels);
    if (!std::isfinite(loss)) throw TrainingError("GBDT training loss became non-finite");
    model.train_loss.push_back(loss);
    if (has_eval && !eval_margin.empty()) model.eval_loss.push_back(mean_loss(eval_margin, *options.eval_labels));
    model.trees.push_back(std::move(tree));
  }
  return model;
}

void write_gbdt(std::ostream& out, const GbdtModel& model) {
  ordered_json j;
  j["version"] = kModelVersion;
  ordered_json hp;
  hp["num_trees"] = model.params.num_trees;
  hp["max_depth"] = model.params.max_depth;
  hp["learning_rate"] = model.params.learning_rate;
  hp["min_samples_leaf"] = model.params.min_samples_leaf;
  hp["subsample"] = model.params.subsample;
  j["hyperparams"] = hp;
  j["feature_names"] = model.feature_names;
  j["seed"] = model.seed;
  j["base_score"] = model.base_score;
  ordered_json trees = ordered_json::array();
  for (const auto& t : model.trees) trees.push_back(node_json(t, 0));
  j["trees"] = trees;
  j["train_loss"] = model.train_loss;
  j["eval_loss"] = model.eval_loss;
  out << j.dump(1) << '\n';
}

GbdtModel read_gbdt(std::istream& in) {
  ordered_json j;
  try {
    j = ordered_json::parse(in);
  } catch (const ordered_json::parse_error& e) {
    throw DataError(std::string("GBDT model: invalid JSON: ") + e.what());
  }
  try {
    if (j.at("version").get<int>() != kModelVersion) throw DataError("GBDT model: unsupported version");
    GbdtModel m;
    const auto& hp = j.at("hyperparams");
    m.params.num_trees = hp.at("num_trees").get<int>();
    m.params.max_depth = hp.at("max_depth").get<int>();
    m.params.learning_rate = hp.at("learning_rate").get<double>();
    m.params.min_samples_leaf = hp.at("min_samples_leaf").get<std::size_t>();
    m.params.subsample = hp.value("subsample", 1.0);
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.dimension = m.feature_names.size();
    m.seed = j.value("seed", std::uint64_t{0});
    m.base_score = j.at("base_score").get<double>();
    for (const auto& t : j.at("trees")) {
      RegressionTree tree;
      node_from_json(tree, t, m.dimension);
      m.trees.push_back(std::move(tree));
    }
    m.train_loss = j.value("train_loss", std::vector<double>{});
    m.eval_loss = j.value("eval_loss", std::vector<double>{});
    return m;
  } catch (const ordered_json::exception& e) {
    throw DataError(std::string("GBDT model: schema error: ") + e.what());
  }
}

void save_gbdt(const std::filesystem::path& path, const GbdtModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  write_gbdt(out, model);
}

GbdtModel load_gbdt(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open GBDT model '" + path.string() + "'");
  return read_gbdt(in);
}

}  // namespace nlgf
