#include "i2pflow/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <thread>

#include "i2pflow/errors.hpp"
#include "i2pflow/io_util.hpp"

namespace i2pflow {

GbtConfig GbtConfig::xgb_like() {
  GbtConfig cfg;
  cfg.n_rounds = 100;
  cfg.learning_rate = 0.1;
  cfg.tree = TreeConfig{.max_depth = 6, .growth = Growth::LevelWise};
  return cfg;
}

GbtConfig GbtConfig::lgbm_like() {
  GbtConfig cfg;
  cfg.n_rounds = 100;
  cfg.learning_rate = 0.05;
  cfg.tree = TreeConfig{.max_depth = kUnbounded, .max_leaves = 31, .growth = Growth::LeafWise};
  return cfg;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

bool parallel_enabled() {
  const char* v = std::getenv("NO_PARALLEL");
  return v == nullptr || v[0] == '\0' || std::string(v) == "0";
}

namespace {

void validate_training_input(const Matrix& X, const std::vector<int>& y) {
  if (X.rows < 2) throw TrainError("training needs at least 2 rows");
  if (y.size() != X.rows) throw SchemaError("labels misaligned with matrix rows");
  bool has0 = false;
  bool has1 = false;
  for (const int v : y) {
    if (v == 0) has0 = true;
    else if (v == 1) has1 = true;
    else throw SchemaError("labels must be 0 or 1");
  }
  if (!has0 || !has1) throw TrainError("single-class input: both classes must be present");
}

template <typename Fn>
void run_indexed(int count, Fn&& fn) {
  const unsigned hw = std::thread::hardware_concurrency();
  const int n_threads = parallel_enabled() ? static_cast<int>(std::min<unsigned>(std::max(1u, hw), static_cast<unsigned>(count))) : 1;
  if (n_threads <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n_threads));
  std::vector<std::thread> workers;
  workers.reserve(static_cast<std::size_t>(n_threads));
  for (int t = 0; t < n_threads; ++t) {
    workers.emplace_back([&, t]() {
      try {
        for (int i = t; i < count; i += n_threads) fn(i);
      } catch (...) {
        errors[static_cast<std::size_t>(t)] = std::current_exception();
      }
    });
  }
  for (auto& th : workers) th.join();
  for (const auto& err : errors) {
    if (err) std::rethrow_exception(err);
  }
}

}  // namespace

ForestModel fit_forest(const Matrix& X, const std::vector<int>& y, const ForestConfig& cfg) {
  validate_training_input(X, y);
  if (cfg.n_trees < 1) throw ConfigError("n_trees must be >= 1");

  std::array<double, 2> cw{1.0, 1.0};
  if (cfg.class_weight_mode == ClassWeightMode::Balanced) {
    std::size_t n0 = 0;
    std::size_t n1 = 0;
    for (const int v : y) (v == 0 ? n0 : n1)++;
    cw = class_weights_from_counts(n0, n1);
  }
  std::vector<double> w(X.rows);
  for (std::size_t i = 0; i < X.rows; ++i) w[i] = cw[static_cast<std::size_t>(y[i])];

  ForestModel model;
  model.config = cfg;
  model.n_features = static_cast<std::uint32_t>(X.cols);
  model.trees.resize(static_cast<std::size_t>(cfg.n_trees));

  const int n = static_cast<int>(X.rows);
  run_indexed(cfg.n_trees, [&](int t) {
    Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(t)));
    std::vector<int> rows(static_cast<std::size_t>(n));
    if (cfg.bootstrap) {
      for (auto& r : rows) r = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(n)));
    } else {
      for (int i = 0; i < n; ++i) rows[static_cast<std::size_t>(i)] = i;
    }
    model.trees[static_cast<std::size_t>(t)] = fit_classification_tree(X, y, w, cfg.tree, rng, std::move(rows));
  });
  return model;
}

double predict_proba_forest(const ForestModel& model, std::span<const double> x) {
  double sum = 0.0;
  for (const auto& tree : model.trees) sum += predict_tree(tree, x);
  return sum / static_cast<double>(model.trees.size());
}

int predict_vote_forest(const ForestModel& model, std::span<const double> x) {
  std::size_t pos = 0;
  for (const auto& tree : model.trees) {
    if (predict_tree(tree, x) > 0.5) ++pos;
  }
  return pos * 2 > model.trees.size() ? 1 : 0;
}

GbtModel fit_gbt(const Matrix& X, const std::vector<int>& y, const GbtConfig& cfg) {
  validate_training_input(X, y);
  if (cfg.n_rounds < 0) throw ConfigError("n_rounds must be >= 0");
  if (cfg.learning_rate <= 0.0) throw ConfigError("learning_rate must be > 0");
  if (cfg.lambda < 0.0) throw ConfigError("lambda must be >= 0");
  if (cfg.scale_pos_weight <= 0.0) throw ConfigError("scale_pos_weight must be > 0");

  const std::size_t n = X.rows;
  std::vector<double> w(n);
  double sum_w_pos = 0.0;
  double sum_w_neg = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = y[i] == 1 ? cfg.scale_pos_weight : 1.0;
    (y[i] == 1 ? sum_w_pos : sum_w_neg) += w[i];
  }

  GbtModel model;
  model.config = cfg;
  model.n_features = static_cast<std::uint32_t>(X.cols);
  model.base_score = std::log(sum_w_pos / sum_w_neg);

  std::vector<double> score(n, model.base_score);
  std::vector<double> grad(n);
  std::vector<double> hess(n);

  const double total_w = sum_w_pos + sum_w_neg;
  const auto loss = [&]() {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double p = std::clamp(sigmoid(score[i]), 1e-15, 1.0 - 1e-15);
      acc -= w[i] * (y[i] == 1 ? std::log(p) : std::log(1.0 - p));
    }
    return acc / total_w;
  };
  model.training_loss.push_back(loss());

  for (int round = 0; round < cfg.n_rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      const double p = sigmoid(score[i]);
      grad[i] = w[i] * (p - static_cast<double>(y[i]));
      hess[i] = w[i] * p * (1.0 - p);
    }
    DecisionTreeModel tree = fit_regression_tree(X, grad, hess, cfg.tree, cfg.lambda);
    for (std::size_t i = 0; i < n; ++i) {
      score[i] += cfg.learning_rate * predict_tree(tree, std::span<const double>(X.row(i), X.cols));
    }
    model.trees.push_back(std::move(tree));
    model.training_loss.push_back(loss());
  }
  return model;
}

double predict_margin_gbt(const GbtModel& model, std::span<const double> x) {
  double margin = model.base_score;
  for (const auto& tree : model.trees) margin += model.config.learning_rate * predict_tree(tree, x);
  return margin;
}

double predict_proba_gbt(const GbtModel& model, std::span<const double> x) {
  if (x.size() != model.n_features) {
    throw SchemaError("predict_proba_gbt: vector has " + std::to_string(x.size()) + " features, model expects " +
                      std::to_string(model.n_features));
  }
  return sigmoid(predict_margin_gbt(model, x));
}

namespace {

std::vector<double> normalized(std::vector<double> scores) {
  double total = 0.0;
  for (const double v : scores) total += v;
  if (total > 0.0) {
    for (double& v : scores) v /= total;
  }
  return scores;
}

}  // namespace

std::vector<double> feature_importance(const ForestModel& model) {
  std::vector<double> scores(model.n_features, 0.0);
  for (const auto& tree : model.trees) {
    if (tree.nodes.empty()) continue;
    const double root_weight = tree.nodes[0].sum_weight;
    if (root_weight <= 0.0) continue;
    for (const auto& node : tree.nodes) {
      if (node.is_leaf()) continue;
      scores[static_cast<std::size_t>(node.feature)] += (node.sum_weight / root_weight) * node.gain;
    }
  }
  for (double& v : scores) v /= static_cast<double>(model.trees.size());
  return normalized(std::move(scores));
}

std::vector<double> feature_importance(const GbtModel& model) {
  std::vector<double> scores(model.n_features, 0.0);
  for (const auto& tree : model.trees) {
    for (const auto& node : tree.nodes) {
      if (node.is_leaf()) continue;
      scores[static_cast<std::size_t>(node.feature)] += node.gain;
    }
  }
  return normalized(std::move(scores));
}

// --- canonical text form ----------------------------------------------------

namespace {

std::string growth_name(Growth g) { return g == Growth::LevelWise ? "level" : "leaf"; }

Growth growth_from(const std::string& s, const std::string& origin) {
  if (s == "level") return Growth::LevelWise;
  if (s == "leaf") return Growth::LeafWise;
  throw ModelFormatError(origin + ": unknown growth `" + s + "`");
}

std::string features_per_split_name(int v) {
  if (v == kFeaturesSqrt) return "sqrt";
  if (v == kFeaturesAll) return "all";
  return std::to_string(v);
}

int features_per_split_from(const std::string& s, const std::string& origin) {
  if (s == "sqrt") return kFeaturesSqrt;
  if (s == "all") return kFeaturesAll;
  const auto v = parse_int(s);
  if (!v || *v < 0) throw ModelFormatError(origin + ": bad features_per_split `" + s + "`");
  return static_cast<int>(*v);
}

void append_tree_config(std::string& out, const TreeConfig& cfg) {
  out += "tree.max_depth = " + std::to_string(cfg.max_depth) + "\n";
  out += "tree.min_samples_split = " + std::to_string(cfg.min_samples_split) + "\n";
  out += "tree.max_leaves = " + std::to_string(cfg.max_leaves) + "\n";
  out += "tree.growth = " + growth_name(cfg.growth) + "\n";
  out += "tree.features_per_split = " + features_per_split_name(cfg.features_per_split) + "\n";
  out += "tree.min_gain = " + format_double(cfg.min_gain) + "\n";
  out += std::string("tree.allow_zero_gain_splits = ") + (cfg.allow_zero_gain_splits ? "true" : "false") + "\n";
}

void append_trees(std::string& out, const std::vector<DecisionTreeModel>& trees) {
  out += "trees = " + std::to_string(trees.size()) + "\n";
  for (std::size_t t = 0; t < trees.size(); ++t) {
    out += "tree " + std::to_string(t) + " nodes " + std::to_string(trees[t].nodes.size()) + "\n";
    for (const auto& node : trees[t].nodes) {
      if (node.is_leaf()) {
        out += "leaf " + format_double(node.value) + " " + std::to_string(node.n_samples) + " " +
               format_double(node.sum_weight) + "\n";
      } else {
        out += "split " + std::to_string(node.feature) + " " + format_double(node.threshold) + " " +
               std::to_string(node.left) + " " + std::to_string(node.right) + " " + format_double(node.gain) +
               " " + std::to_string(node.n_samples) + " " + format_double(node.sum_weight) + "\n";
      }
    }
  }
}

struct LineCursor {
  std::vector<std::string> lines;
  std::size_t pos = 0;
  std::string origin;

  bool done() const { return pos >= lines.size(); }
  std::string next() {
    while (pos < lines.size()) {
      std::string line = trim(lines[pos++]);
      if (!line.empty()) return line;
    }
    throw ModelFormatError(origin + ": unexpected end of model block");
  }
  // Expects `key = value` and returns the value.
  std::string expect_kv(const std::string& key) {
    const std::string line = next();
    const auto eq = line.find('=');
    if (eq == std::string::npos || trim(line.substr(0, eq)) != key) {
      throw ModelFormatError(origin + ": expected `" + key + " = ...`, got `" + line + "`");
    }
    return trim(line.substr(eq + 1));
  }
  long long expect_int(const std::string& key) {
    const auto v = parse_int(expect_kv(key));
    if (!v) throw ModelFormatError(origin + ": bad integer for `" + key + "`");
    return *v;
  }
  double expect_double(const std::string& key) {
    const auto v = parse_double(expect_kv(key));
    if (!v) throw ModelFormatError(origin + ": bad decimal for `" + key + "`");
    return *v;
  }
  bool expect_bool(const std::string& key) {
    const std::string v = expect_kv(key);
    if (v == "true") return true;
    if (v == "false") return false;
    throw ModelFormatError(origin + ": bad boolean for `" + key + "`");
  }
};

TreeConfig parse_tree_config(LineCursor& cur) {
  TreeConfig cfg;
  cfg.max_depth = static_cast<int>(cur.expect_int("tree.max_depth"));
  cfg.min_samples_split = static_cast<int>(cur.expect_int("tree.min_samples_split"));
  cfg.max_leaves = static_cast<int>(cur.expect_int("tree.max_leaves"));
  cfg.growth = growth_from(cur.expect_kv("tree.growth"), cur.origin);
  cfg.features_per_split = features_per_split_from(cur.expect_kv("tree.features_per_split"), cur.origin);
  cfg.min_gain = cur.expect_double("tree.min_gain");
  cfg.allow_zero_gain_splits = cur.expect_bool("tree.allow_zero_gain_splits");
  return cfg;
}

std::vector<DecisionTreeModel> parse_trees(LineCursor& cur, std::uint32_t n_features) {
  const auto count = cur.expect_int("trees");
  if (count < 0) throw ModelFormatError(cur.origin + ": negative tree count");
  std::vector<DecisionTreeModel> trees;
  trees.reserve(static_cast<std::size_t>(count));
  for (long long t = 0; t < count; ++t) {
    const std::string header = cur.next();
    const auto tokens = split(header, ' ');
    if (tokens.size() != 4 || tokens[0] != "tree" || tokens[2] != "nodes") {
      throw ModelFormatError(cur.origin + ": expected `tree <i> nodes <n>`, got `" + header + "`");
    }
    const auto n_nodes = parse_int(tokens[3]);
    if (!n_nodes || *n_nodes < 1) throw ModelFormatError(cur.origin + ": bad node count in `" + header + "`");
    DecisionTreeModel tree;
    tree.n_features = n_features;
    tree.nodes.reserve(static_cast<std::size_t>(*n_nodes));
    for (long long k = 0; k < *n_nodes; ++k) {
      const std::string line = cur.next();
      const auto parts = split(line, ' ');
      TreeNode node;
      if (parts.size() == 4 && parts[0] == "leaf") {
        node.value = *parse_double(parts[1]);
        node.n_samples = *parse_int(parts[2]);
        node.sum_weight = *parse_double(parts[3]);
      } else if (parts.size() == 8 && parts[0] == "split") {
        node.feature = static_cast<std::int32_t>(*parse_int(parts[1]));
        node.threshold = *parse_double(parts[2]);
        node.left = static_cast<std::int32_t>(*parse_int(parts[3]));
        node.right = static_cast<std::int32_t>(*parse_int(parts[4]));
        node.gain = *parse_double(parts[5]);
        node.n_samples = *parse_int(parts[6]);
        node.sum_weight = *parse_double(parts[7]);
        if (node.feature < 0 || static_cast<std::uint32_t>(node.feature) >= n_features) {
          throw ModelFormatError(cur.origin + ": split feature out of range in `" + line + "`");
        }
      } else {
        throw ModelFormatError(cur.origin + ": bad node line `" + line + "`");
      }
      tree.nodes.push_back(node);
    }
    for (const auto& node : tree.nodes) {
      if (node.is_leaf()) continue;
      const auto n = static_cast<std::int64_t>(tree.nodes.size());
      if (node.left < 0 || node.right < 0 || node.left >= n || node.right >= n) {
        throw ModelFormatError(cur.origin + ": child offset out of range");
      }
    }
    trees.push_back(std::move(tree));
  }
  return trees;
}

}  // namespace

std::string model_text(const ForestModel& model) {
  std::string out = "model.kind = forest\n";
  out += "model.features = " + std::to_string(model.n_features) + "\n";
  out += "model.seed = " + std::to_string(model.config.seed) + "\n";
  out += "forest.n_trees = " + std::to_string(model.config.n_trees) + "\n";
  out += std::string("forest.bootstrap = ") + (model.config.bootstrap ? "true" : "false") + "\n";
  out += std::string("forest.class_weight_mode = ") +
         (model.config.class_weight_mode == ClassWeightMode::Balanced ? "balanced" : "none") + "\n";
  append_tree_config(out, model.config.tree);
  append_trees(out, model.trees);
  return out;
}

std::string model_text(const GbtModel& model) {
  std::string out = "model.kind = gbt\n";
  out += "model.features = " + std::to_string(model.n_features) + "\n";
  out += "model.seed = " + std::to_string(model.config.seed) + "\n";
  out += "gbt.n_rounds = " + std::to_string(model.config.n_rounds) + "\n";
  out += "gbt.learning_rate = " + format_double(model.config.learning_rate) + "\n";
  out += "gbt.lambda = " + format_double(model.config.lambda) + "\n";
  out += "gbt.scale_pos_weight = " + format_double(model.config.scale_pos_weight) + "\n";
  out += "gbt.base_score = " + format_double(model.base_score) + "\n";
  std::vector<std::string> losses;
  losses.reserve(model.training_loss.size());
  for (const double v : model.training_loss) losses.push_back(format_double(v));
  out += "gbt.training_loss = " + join(losses, ',') + "\n";
  append_tree_config(out, model.config.tree);
  append_trees(out, model.trees);
  return out;
}

std::string model_text(const EnsembleModel& model) {
  return std::visit([](const auto& m) { return model_text(m); }, model);
}

EnsembleModel parse_model_text(const std::string& text, const std::string& origin) {
  LineCursor cur{split(text, '\n'), 0, origin};
  const std::string kind = cur.expect_kv("model.kind");
  const auto n_features = cur.expect_int("model.features");
  if (n_features < 1) throw ModelFormatError(origin + ": bad model.features");
  const auto nf = static_cast<std::uint32_t>(n_features);
  const auto seed = static_cast<std::uint64_t>(cur.expect_int("model.seed"));

  if (kind == "forest") {
    ForestModel model;
    model.n_features = nf;
    model.config.seed = seed;
    model.config.n_trees = static_cast<int>(cur.expect_int("forest.n_trees"));
    model.config.bootstrap = cur.expect_bool("forest.bootstrap");
    const std::string mode = cur.expect_kv("forest.class_weight_mode");
    if (mode == "balanced") model.config.class_weight_mode = ClassWeightMode::Balanced;
    else if (mode == "none") model.config.class_weight_mode = ClassWeightMode::None;
    else throw ModelFormatError(origin + ": unknown class_weight_mode `" + mode + "`");
    model.config.tree = parse_tree_config(cur);
    model.trees = parse_trees(cur, nf);
    if (model.trees.size() != static_cast<std::size_t>(model.config.n_trees)) {
      throw ModelFormatError(origin + ": tree count does not match forest.n_trees");
    }
    return model;
  }
  if (kind == "gbt") {
    GbtModel model;
    model.n_features = nf;
    model.config.seed = seed;
    model.config.n_rounds = static_cast<int>(cur.expect_int("gbt.n_rounds"));
    model.config.learning_rate = cur.expect_double("gbt.learning_rate");
    model.config.lambda = cur.expect_double("gbt.lambda");
    model.config.scale_pos_weight = cur.expect_double("gbt.scale_pos_weight");
    model.base_score = cur.expect_double("gbt.base_score");
    const std::string losses = cur.expect_kv("gbt.training_loss");
    if (!losses.empty()) {
      for (const auto& item : split(losses, ',')) {
        const auto v = parse_double(trim(item));
        if (!v) throw ModelFormatError(origin + ": bad training_loss entry `" + item + "`");
        model.training_loss.push_back(*v);
      }
    }
    model.config.tree = parse_tree_config(cur);
    model.trees = parse_trees(cur, nf);
    if (model.trees.size() != static_cast<std::size_t>(model.config.n_rounds)) {
      throw ModelFormatError(origin + ": tree count does not match gbt.n_rounds");
    }
    return model;
  }
  throw ModelFormatError(origin + ": unknown model kind `" + kind + "`");
}

double predict_proba(const EnsembleModel& model, std::span<const double> x) {
  if (const auto* forest = std::get_if<ForestModel>(&model)) return predict_proba_forest(*forest, x);
  return predict_proba_gbt(std::get<GbtModel>(model), x);
}

std::uint32_t model_feature_count(const EnsembleModel& model) {
  return std::visit([](const auto& m) { return m.n_features; }, model);
}

std::vector<double> feature_importance(const EnsembleModel& model) {
  return std::visit([](const auto& m) { return feature_importance(m); }, model);
}

}  // namespace i2pflow
