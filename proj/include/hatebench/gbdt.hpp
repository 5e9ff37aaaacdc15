#pragma once

// Two-class gradient-boosted decision trees on the weighted logistic loss.
//
// Each call to gbdt_train makes a seeded stratified split of its input into a
// fit part and a validation part, weights positive fit rows by
// N_neg / N_pos (both counted on the fit part), grows depth-limited trees on
// 255-bin quantised features with Newton leaf values, and stops once the
// validation AUC has not improved for `early_stop_patience` iterations. The
// returned ensemble is truncated to the iteration with the best validation AUC.

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "hatebench/error.hpp"
#include "hatebench/matrix.hpp"
#include "hatebench/metrics.hpp"
#include "hatebench/rng.hpp"

namespace hatebench {

struct GbdtConfig {
  std::size_t max_iterations = 500;
  double learning_rate = 0.05;
  std::size_t max_depth = 8;
  std::size_t early_stop_patience = 30;
  double validation_fraction = 0.2;
  std::uint64_t seed = 0;
  std::size_t histogram_bins = 255;
  std::size_t min_samples_leaf = 20;
  double lambda_l2 = 3.0;

  void validate() const {
    if (max_iterations < 1) throw Error("gbdt: max_iterations must be positive");
    if (!(learning_rate > 0)) throw Error("gbdt: learning_rate must be positive");
    if (max_depth < 1) throw Error("gbdt: max_depth must be positive");
    if (early_stop_patience < 1) throw Error("gbdt: early_stop_patience must be positive");
    if (!(validation_fraction > 0 && validation_fraction < 1)) throw Error("gbdt: validation_fraction must lie in (0, 1)");
    if (histogram_bins < 2 || histogram_bins > 256) throw Error("gbdt: histogram_bins must lie in [2, 256]");
    if (min_samples_leaf < 1) throw Error("gbdt: min_samples_leaf must be positive");
    if (!(lambda_l2 >= 0)) throw Error("gbdt: lambda_l2 must be nonnegative");
  }
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0;  // rows with x[feature] <= threshold go left
  int left = -1;
  int right = -1;
  double value = 0;  // leaf output, learning rate already applied

  bool is_leaf() const { return feature < 0; }
};

struct RegressionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double predict(std::span<const double> x) const {
    int i = 0;
    while (!nodes[static_cast<std::size_t>(i)].is_leaf()) {
      const auto& n = nodes[static_cast<std::size_t>(i)];
      i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(i)].value;
  }

  std::size_t depth() const {
    std::size_t best = 0;
    std::vector<std::pair<int, std::size_t>> stack{{0, 0}};
    while (!stack.empty()) {
      auto [i, d] = stack.back();
      stack.pop_back();
      const auto& n = nodes[static_cast<std::size_t>(i)];
      if (n.is_leaf()) {
        best = std::max(best, d);
      } else {
        stack.push_back({n.left, d + 1});
        stack.push_back({n.right, d + 1});
      }
    }
    return best;
  }
};

struct ValidationRecord {
  std::size_t iteration;  // number of trees in the ensemble
  double auc;
};

struct GbdtModel {
  GbdtConfig config;
  std::size_t feature_count = 0;
  double base_score = 0;
  double scale_pos_weight = 1;
  std::vector<RegressionTree> trees;
  std::size_t best_iteration = 0;
  std::vector<ValidationRecord> validation_history;
  // Weighted log-loss on the fit part after each iteration (index 0 is the
  // base score alone). Covers every grown tree, including those truncated.
  std::vector<double> fit_loss_history;
};

inline double logistic(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow.
inline double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

struct GradientPair {
  std::vector<double> gradients;
  std::vector<double> hessians;
};

// First and second derivatives of w_i * logloss(y_i, logistic(raw_i)) with
// respect to raw_i, where w_i = scale_pos_weight for positives and 1 otherwise.
inline GradientPair logistic_loss_gradients(std::span<const std::uint8_t> y, std::span<const double> raw,
                                            double scale_pos_weight) {
  if (y.size() != raw.size()) throw DimensionError("labels and raw scores differ in length");
  GradientPair out;
  out.gradients.resize(y.size());
  out.hessians.resize(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double w = y[i] == 1 ? scale_pos_weight : 1.0;
    const double p = logistic(raw[i]);
    out.gradients[i] = w * (p - static_cast<double>(y[i]));
    out.hessians[i] = w * p * (1.0 - p);
  }
  return out;
}

// Sum of w_i * logloss over rows.
inline double weighted_log_loss(std::span<const std::uint8_t> y, std::span<const double> raw, double scale_pos_weight) {
  double loss = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    loss += y[i] == 1 ? scale_pos_weight * softplus(-raw[i]) : softplus(raw[i]);
  }
  return loss;
}

namespace detail {

// Per-feature cut points; bin(x) = number of cuts strictly below x, so
// bin(x) <= b  <=>  x <= cuts[b].
struct FeatureBinner {
  std::vector<std::vector<double>> cuts;

  static FeatureBinner fit(const Matrix& x, std::span<const std::size_t> rows, std::size_t max_bins) {
    FeatureBinner b;
    b.cuts.resize(static_cast<std::size_t>(x.cols()));
    std::vector<double> values(rows.size());
    for (Eigen::Index f = 0; f < x.cols(); ++f) {
      for (std::size_t i = 0; i < rows.size(); ++i) values[i] = x(static_cast<Eigen::Index>(rows[i]), f);
      std::sort(values.begin(), values.end());
      std::vector<double> distinct = values;
      distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
      auto& cuts = b.cuts[static_cast<std::size_t>(f)];
      if (distinct.size() <= max_bins) {
        for (std::size_t i = 0; i + 1 < distinct.size(); ++i) {
          double mid = distinct[i] + (distinct[i + 1] - distinct[i]) / 2.0;
          if (!(mid < distinct[i + 1])) mid = distinct[i];
          cuts.push_back(mid);
        }
      } else {
        // Quantile targets, each moved to the widest gap between adjacent
        // sorted values within half a bin of the target.
        const std::size_t n = values.size();
        const double width = static_cast<double>(n) / static_cast<double>(max_bins);
        std::size_t prev = 0;
        for (std::size_t q = 1; q < max_bins; ++q) {
          const double target = width * static_cast<double>(q);
          const auto lo = std::max(prev, static_cast<std::size_t>(std::max(0.0, std::ceil(target - width / 2.0))));
          const auto hi = std::min(n - 1, static_cast<std::size_t>(target + width / 2.0));
          std::size_t best = n;
          double best_gap = 0;
          // gap i sits between values[i - 1] and values[i]
          for (std::size_t i = std::max<std::size_t>(lo, 1); i <= hi; ++i) {
            const double gap = values[i] - values[i - 1];
            if (gap > best_gap) {
              best_gap = gap;
              best = i;
            }
          }
          if (best == n) continue;
          double mid = values[best - 1] + best_gap / 2.0;
          if (!(mid < values[best])) mid = values[best - 1];
          if (cuts.empty() || mid > cuts.back()) cuts.push_back(mid);
          prev = best + 1;
        }
      }
    }
    return b;
  }

  std::uint8_t bin(std::size_t feature, double v) const {
    const auto& c = cuts[feature];
    return static_cast<std::uint8_t>(std::lower_bound(c.begin(), c.end(), v) - c.begin());
  }
};

struct HistBin {
  double g = 0;
  double h = 0;
  std::uint32_t count = 0;
};

struct SplitChoice {
  double gain = 0;
  int feature = -1;
  std::size_t bin = 0;
};

class TreeGrower {
 public:
  TreeGrower(const std::vector<std::uint8_t>& bins, std::size_t n_features, const FeatureBinner& binner,
             const GbdtConfig& config, std::span<const double> g, std::span<const double> h)
      : bins_(bins), d_(n_features), binner_(binner), config_(config), g_(g), h_(h) {
    stride_ = 256;
  }

  // Grows one tree over `rows`; writes each row's leaf value into delta.
  RegressionTree grow(std::vector<std::size_t> rows, std::vector<double>& delta) {
    RegressionTree tree;
    tree.nodes.emplace_back();
    std::vector<HistBin> hist = build_histogram(rows);
    grow_node(tree, 0, rows, std::move(hist), 0, delta);
    return tree;
  }

 private:
  std::vector<HistBin> build_histogram(const std::vector<std::size_t>& rows) const {
    std::vector<HistBin> hist(d_ * stride_);
    for (auto r : rows) {
      const std::uint8_t* row_bins = bins_.data() + r * d_;
      const double gr = g_[r], hr = h_[r];
      for (std::size_t f = 0; f < d_; ++f) {
        HistBin& b = hist[f * stride_ + row_bins[f]];
        b.g += gr;
        b.h += hr;
        ++b.count;
      }
    }
    return hist;
  }

  double leaf_weight(double g, double h) const {
    const double denom = h + config_.lambda_l2;
    return denom > 0 ? -g / denom : 0.0;
  }

  double score(double g, double h) const {
    const double denom = h + config_.lambda_l2;
    return denom > 0 ? g * g / denom : 0.0;
  }

  SplitChoice best_split(const std::vector<HistBin>& hist, double g_total, double h_total,
                         std::size_t n_total) const {
    SplitChoice best;
    const double parent = score(g_total, h_total);
    const std::size_t min_leaf = config_.min_samples_leaf;
    for (std::size_t f = 0; f < d_; ++f) {
      const std::size_t n_bins = binner_.cuts[f].size() + 1;
      if (n_bins < 2) continue;
      double gl = 0, hl = 0;
      std::size_t nl = 0;
      for (std::size_t b = 0; b + 1 < n_bins; ++b) {
        const HistBin& hb = hist[f * stride_ + b];
        gl += hb.g;
        hl += hb.h;
        nl += hb.count;
        if (nl < min_leaf) continue;
        if (n_total - nl < min_leaf) break;
        const double gr = g_total - gl, hr = h_total - hl;
        if (hl + config_.lambda_l2 <= 1e-12 || hr + config_.lambda_l2 <= 1e-12) continue;
        const double gain = score(gl, hl) + score(gr, hr) - parent;
        if (gain > best.gain + 1e-12) best = {gain, static_cast<int>(f), b};
      }
    }
    return best;
  }

  void grow_node(RegressionTree& tree, std::size_t node, std::vector<std::size_t>& rows,
                 std::vector<HistBin> hist, std::size_t depth, std::vector<double>& delta) {
    double g_total = 0, h_total = 0;
    for (auto r : rows) {
      g_total += g_[r];
      h_total += h_[r];
    }
    SplitChoice split;
    if (depth < config_.max_depth && rows.size() >= 2 * config_.min_samples_leaf) {
      split = best_split(hist, g_total, h_total, rows.size());
    }
    if (split.feature < 0) {
      const double value = config_.learning_rate * leaf_weight(g_total, h_total);
      tree.nodes[node].value = value;
      for (auto r : rows) delta[r] = value;
      return;
    }

    const auto f = static_cast<std::size_t>(split.feature);
    std::vector<std::size_t> left, right;
    left.reserve(rows.size());
    right.reserve(rows.size());
    for (auto r : rows) (bins_[r * d_ + f] <= split.bin ? left : right).push_back(r);
    rows.clear();
    rows.shrink_to_fit();

    // Build the smaller child's histogram; the sibling is parent minus it.
    const bool left_small = left.size() <= right.size();
    std::vector<HistBin> small = build_histogram(left_small ? left : right);
    for (std::size_t i = 0; i < hist.size(); ++i) {
      hist[i].g -= small[i].g;
      hist[i].h -= small[i].h;
      hist[i].count -= small[i].count;
    }
    std::vector<HistBin>& left_hist = left_small ? small : hist;
    std::vector<HistBin>& right_hist = left_small ? hist : small;

    const auto left_id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    const auto right_id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    TreeNode& n = tree.nodes[node];
    n.feature = split.feature;
    n.threshold = binner_.cuts[f][split.bin];
    n.left = left_id;
    n.right = right_id;

    grow_node(tree, static_cast<std::size_t>(left_id), left, std::move(left_hist), depth + 1, delta);
    grow_node(tree, static_cast<std::size_t>(right_id), right, std::move(right_hist), depth + 1, delta);
  }

  const std::vector<std::uint8_t>& bins_;
  std::size_t d_;
  const FeatureBinner& binner_;
  const GbdtConfig& config_;
  std::span<const double> g_;
  std::span<const double> h_;
  std::size_t stride_;
};

}  // namespace detail

struct TrainValidationSplit {
  std::vector<std::size_t> fit;
  std::vector<std::size_t> validation;
};

// Seeded split that keeps each class's share in both parts. Index lists are
// returned in ascending order.
inline TrainValidationSplit stratified_split(std::span<const std::uint8_t> y, double validation_fraction,
                                             std::uint64_t seed) {
  TrainValidationSplit out;
  std::mt19937_64 rng(seed);
  for (std::uint8_t cls : {std::uint8_t{0}, std::uint8_t{1}}) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (y[i] == cls) members.push_back(i);
    }
    shuffle(std::span<std::size_t>(members), rng);
    const auto n_val = static_cast<std::size_t>(std::floor(validation_fraction * static_cast<double>(members.size()) + 0.5));
    out.validation.insert(out.validation.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_val));
    out.fit.insert(out.fit.end(), members.begin() + static_cast<std::ptrdiff_t>(n_val), members.end());
  }
  std::sort(out.fit.begin(), out.fit.end());
  std::sort(out.validation.begin(), out.validation.end());
  return out;
}

inline double gbdt_raw_score(const GbdtModel& model, std::span<const double> x) {
  double s = model.base_score;
  for (const auto& t : model.trees) s += t.predict(x);
  return s;
}

inline std::vector<double> gbdt_predict_proba(const GbdtModel& model, const Matrix& x) {
  if (static_cast<std::size_t>(x.cols()) != model.feature_count) {
    throw DimensionError("gbdt: input has " + std::to_string(x.cols()) + " columns, model expects " +
                         std::to_string(model.feature_count));
  }
  std::vector<double> out(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    out[static_cast<std::size_t>(i)] =
        logistic(gbdt_raw_score(model, std::span<const double>(x.row(i).data(), static_cast<std::size_t>(x.cols()))));
  }
  return out;
}

inline GbdtModel gbdt_train(const Matrix& x, std::span<const std::uint8_t> y, const GbdtConfig& config) {
  config.validate();
  const auto n = static_cast<std::size_t>(x.rows());
  const auto d = static_cast<std::size_t>(x.cols());
  if (y.size() != n) throw DimensionError("gbdt: labels and rows differ in length");
  if (n < 10) throw Error("gbdt: need at least 10 rows, got " + std::to_string(n));
  if (d < 1) throw DimensionError("gbdt: need at least one feature");
  std::size_t n_pos = 0;
  for (auto v : y) {
    if (v > 1) throw Error("gbdt: labels must be 0 or 1");
    n_pos += v;
  }
  if (n_pos == 0 || n_pos == n) throw Error("gbdt: labels contain a single class; scale_pos_weight undefined");

  const auto split = stratified_split(y, config.validation_fraction, config.seed);
  std::size_t fit_pos = 0, val_pos = 0;
  for (auto r : split.fit) fit_pos += y[r];
  for (auto r : split.validation) val_pos += y[r];
  const std::size_t fit_neg = split.fit.size() - fit_pos, val_neg = split.validation.size() - val_pos;
  if (fit_pos < 2 || fit_neg < 2 || val_pos < 2 || val_neg < 2) {
    throw Error("gbdt: each class needs at least 2 rows in both the fit and validation parts");
  }

  GbdtModel model;
  model.config = config;
  model.feature_count = d;
  model.scale_pos_weight = static_cast<double>(fit_neg) / static_cast<double>(fit_pos);
  // Weighted positive mass over negative mass.
  model.base_score = std::log(model.scale_pos_weight * static_cast<double>(fit_pos) / static_cast<double>(fit_neg));

  const std::size_t n_fit = split.fit.size();
  const auto binner = detail::FeatureBinner::fit(x, split.fit, config.histogram_bins);
  std::vector<std::uint8_t> bins(n_fit * d);
  for (std::size_t i = 0; i < n_fit; ++i) {
    for (std::size_t f = 0; f < d; ++f) {
      bins[i * d + f] = binner.bin(f, x(static_cast<Eigen::Index>(split.fit[i]), static_cast<Eigen::Index>(f)));
    }
  }
  std::vector<std::uint8_t> y_fit(n_fit), y_val(split.validation.size());
  for (std::size_t i = 0; i < n_fit; ++i) y_fit[i] = y[split.fit[i]];
  for (std::size_t i = 0; i < split.validation.size(); ++i) y_val[i] = y[split.validation[i]];
  const Matrix x_val = select_rows(x, split.validation);

  std::vector<double> raw_fit(n_fit, model.base_score);
  std::vector<double> raw_val(split.validation.size(), model.base_score);
  std::vector<double> delta(n_fit);
  model.fit_loss_history.push_back(weighted_log_loss(y_fit, raw_fit, model.scale_pos_weight));

  double best_auc = -1;
  std::size_t since_best = 0;
  for (std::size_t it = 1; it <= config.max_iterations; ++it) {
    const auto grad = logistic_loss_gradients(y_fit, raw_fit, model.scale_pos_weight);
    detail::TreeGrower grower(bins, d, binner, config, grad.gradients, grad.hessians);
    std::vector<std::size_t> rows(n_fit);
    for (std::size_t i = 0; i < n_fit; ++i) rows[i] = i;
    model.trees.push_back(grower.grow(std::move(rows), delta));
    const RegressionTree& tree = model.trees.back();

    for (std::size_t i = 0; i < n_fit; ++i) raw_fit[i] += delta[i];
    for (std::size_t i = 0; i < raw_val.size(); ++i) {
      raw_val[i] += tree.predict(std::span<const double>(x_val.row(static_cast<Eigen::Index>(i)).data(), d));
    }
    model.fit_loss_history.push_back(weighted_log_loss(y_fit, raw_fit, model.scale_pos_weight));

    const double auc = auc_roc(raw_val, y_val);
    model.validation_history.push_back({it, auc});
    if (auc > best_auc) {
      best_auc = auc;
      model.best_iteration = it;
      since_best = 0;
    } else if (++since_best >= config.early_stop_patience) {
      break;
    }
  }
  model.trees.resize(model.best_iteration);
  return model;
}

inline nlohmann::ordered_json to_json(const GbdtConfig& c) {
  nlohmann::ordered_json j;
  j["max_iterations"] = c.max_iterations;
  j["learning_rate"] = c.learning_rate;
  j["max_depth"] = c.max_depth;
  j["early_stop_patience"] = c.early_stop_patience;
  j["validation_fraction"] = c.validation_fraction;
  j["seed"] = c.seed;
  j["histogram_bins"] = c.histogram_bins;
  j["min_samples_leaf"] = c.min_samples_leaf;
  j["lambda_l2"] = c.lambda_l2;
  return j;
}

// Missing keys keep their defaults.
inline GbdtConfig gbdt_config_from_json(const nlohmann::json& j, GbdtConfig c = {}) {
  c.max_iterations = j.value("max_iterations", c.max_iterations);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.max_depth = j.value("max_depth", c.max_depth);
  c.early_stop_patience = j.value("early_stop_patience", c.early_stop_patience);
  c.validation_fraction = j.value("validation_fraction", c.validation_fraction);
  c.seed = j.value("seed", c.seed);
  c.histogram_bins = j.value("histogram_bins", c.histogram_bins);
  c.min_samples_leaf = j.value("min_samples_leaf", c.min_samples_leaf);
  c.lambda_l2 = j.value("lambda_l2", c.lambda_l2);
  return c;
}

inline nlohmann::ordered_json to_json(const GbdtModel& m) {
  nlohmann::ordered_json j;
  j["model"] = "gbdt";
  j["feature_count"] = m.feature_count;
  j["base_score"] = m.base_score;
  j["scale_pos_weight"] = m.scale_pos_weight;
  j["best_iteration"] = m.best_iteration;
  j["config"] = to_json(m.config);
  auto& hist = j["validation_history"] = nlohmann::ordered_json::array();
  for (const auto& r : m.validation_history) hist.push_back({r.iteration, r.auc});
  auto& trees = j["trees"] = nlohmann::ordered_json::array();
  for (const auto& t : m.trees) {
    auto nodes = nlohmann::ordered_json::array();
    for (const auto& n : t.nodes) {
      nlohmann::ordered_json nj;
      if (n.is_leaf()) {
        nj["leaf"] = n.value;
      } else {
        nj["feature"] = n.feature;
        nj["threshold"] = n.threshold;
        nj["left"] = n.left;
        nj["right"] = n.right;
      }
      nodes.push_back(std::move(nj));
    }
    trees.push_back(std::move(nodes));
  }
  return j;
}

inline GbdtModel gbdt_from_json(const nlohmann::json& j) {
  GbdtModel m;
  try {
    if (j.at("model").get<std::string>() != "gbdt") throw Error("not a GBDT model");
    m.feature_count = j.at("feature_count").get<std::size_t>();
    m.base_score = j.at("base_score").get<double>();
    m.scale_pos_weight = j.at("scale_pos_weight").get<double>();
    m.best_iteration = j.at("best_iteration").get<std::size_t>();
    m.config = gbdt_config_from_json(j.at("config"));
    for (const auto& r : j.at("validation_history")) m.validation_history.push_back({r.at(0), r.at(1)});
    for (const auto& tj : j.at("trees")) {
      RegressionTree t;
      for (const auto& nj : tj) {
        TreeNode n;
        if (nj.contains("leaf")) {
          n.value = nj.at("leaf").get<double>();
        } else {
          n.feature = nj.at("feature").get<int>();
          n.threshold = nj.at("threshold").get<double>();
          n.left = nj.at("left").get<int>();
          n.right = nj.at("right").get<int>();
        }
        t.nodes.push_back(n);
      }
      const auto size = static_cast<int>(t.nodes.size());
      for (const auto& n : t.nodes) {
        if (!n.is_leaf() && (n.left <= 0 || n.left >= size || n.right <= 0 || n.right >= size ||
                             static_cast<std::size_t>(n.feature) >= m.feature_count)) {
          throw Error("GBDT tree references an invalid node or feature");
        }
      }
      if (t.nodes.empty()) throw Error("GBDT tree has no nodes");
      m.trees.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("GBDT model JSON invalid: ") + e.what());
  }
  return m;
}

}  // namespace hatebench
