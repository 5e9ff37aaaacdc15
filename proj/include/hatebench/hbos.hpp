#pragma once

// Histogram-based outlier score: one static equal-width histogram per
// feature, heights scaled so each feature's tallest bin is 1, and
//   score(x) = sum_j log10(1 / height_j(x_j)).
// A score of 0 means every coordinate sits in its feature's densest bin.

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "hatebench/error.hpp"
#include "hatebench/matrix.hpp"

namespace hatebench {

inline constexpr double kHbosHeightFloor = 1e-12;
inline constexpr double kHbosDivisorOriginal = 10000.0;
inline constexpr double kHbosDivisorCompressed = 100.0;

struct HbosConfig {
  std::size_t n_bins = 10;
  double contamination = 0.01;
};

struct FeatureHistogram {
  // b+1 ascending edges; a constant feature has a single bin with equal edges.
  std::vector<double> edges;
  std::vector<double> heights;

  std::size_t bin_of(double v) const {
    const std::size_t bins = heights.size();
    const double lo = edges.front();
    const double hi = edges.back();
    if (bins == 1 || !(v > lo)) return 0;
    if (v >= hi) return bins - 1;
    const auto b = static_cast<std::size_t>((v - lo) / (hi - lo) * static_cast<double>(bins));
    return std::min(b, bins - 1);
  }

  double height_at(double v) const { return heights[bin_of(v)]; }
};

struct HbosModel {
  HbosConfig config;
  std::vector<FeatureHistogram> features;
  double decision_threshold = 0;

  std::size_t feature_count() const { return features.size(); }
};

// Empirical quantile with the "higher" convention: the smallest order
// statistic at or above position q*(n-1).
inline double quantile_higher(std::vector<double> values, double q) {
  if (values.empty()) throw Error("quantile of empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto idx = std::min(values.size() - 1, static_cast<std::size_t>(std::ceil(pos)));
  return values[idx];
}

inline double hbos_raw_score(const HbosModel& model, std::span<const double> x) {
  if (x.size() != model.feature_count()) {
    throw DimensionError("HBOS: row has " + std::to_string(x.size()) + " features, model expects " +
                         std::to_string(model.feature_count()));
  }
  double score = 0;
  for (std::size_t j = 0; j < x.size(); ++j) score -= std::log10(model.features[j].height_at(x[j]));
  return score;
}

inline std::vector<double> hbos_raw_scores(const HbosModel& model, const Matrix& x) {
  if (static_cast<std::size_t>(x.cols()) != model.feature_count()) {
    throw DimensionError("HBOS: input has " + std::to_string(x.cols()) + " columns, model expects " +
                         std::to_string(model.feature_count()));
  }
  std::vector<double> out(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    out[static_cast<std::size_t>(i)] =
        hbos_raw_score(model, std::span<const double>(x.row(i).data(), static_cast<std::size_t>(x.cols())));
  }
  return out;
}

inline HbosModel hbos_fit(const Matrix& x_target, const HbosConfig& config = {}) {
  const auto n = static_cast<std::size_t>(x_target.rows());
  const auto d = static_cast<std::size_t>(x_target.cols());
  if (config.n_bins < 1) throw Error("HBOS n_bins must be positive");
  if (!(config.contamination > 0.0 && config.contamination <= 0.5)) {
    throw Error("HBOS contamination must lie in (0, 0.5]");
  }
  if (n < config.n_bins) {
    throw Error("HBOS needs at least n_bins=" + std::to_string(config.n_bins) + " rows, got " + std::to_string(n));
  }
  if (d < 1) throw DimensionError("HBOS needs at least one feature");

  HbosModel model;
  model.config = config;
  model.features.resize(d);
  for (std::size_t j = 0; j < d; ++j) {
    const auto col = x_target.col(static_cast<Eigen::Index>(j));
    const double lo = col.minCoeff();
    const double hi = col.maxCoeff();
    FeatureHistogram& h = model.features[j];
    if (!(hi > lo)) {
      h.edges = {lo, hi};
      h.heights = {1.0};
      continue;
    }
    const std::size_t bins = config.n_bins;
    h.edges.resize(bins + 1);
    for (std::size_t b = 0; b <= bins; ++b) {
      h.edges[b] = lo + (hi - lo) * static_cast<double>(b) / static_cast<double>(bins);
    }
    h.edges.back() = hi;
    h.heights.assign(bins, 0.0);
    for (Eigen::Index i = 0; i < col.size(); ++i) h.heights[h.bin_of(col(i))] += 1.0;
    const double tallest = *std::max_element(h.heights.begin(), h.heights.end());
    for (double& v : h.heights) v = std::max(v / tallest, kHbosHeightFloor);
  }
  model.decision_threshold = quantile_higher(hbos_raw_scores(model, x_target), 1.0 - config.contamination);
  return model;
}

// Rescales a raw score into [0, 1]: divide by 10000 for original embeddings,
// by 100 for PCA-compressed ones, then clamp.
inline double hbos_probability(double raw, bool compressed) {
  const double scaled = raw / (compressed ? kHbosDivisorCompressed : kHbosDivisorOriginal);
  return std::clamp(scaled, 0.0, 1.0);
}

inline nlohmann::ordered_json to_json(const HbosModel& m) {
  nlohmann::ordered_json j;
  j["model"] = "hbos";
  j["n_bins"] = m.config.n_bins;
  j["contamination"] = m.config.contamination;
  j["decision_threshold"] = m.decision_threshold;
  auto& feats = j["features"] = nlohmann::ordered_json::array();
  for (const auto& f : m.features) {
    nlohmann::ordered_json fj;
    fj["edges"] = f.edges;
    fj["heights"] = f.heights;
    feats.push_back(std::move(fj));
  }
  return j;
}

inline HbosModel hbos_from_json(const nlohmann::json& j) {
  HbosModel m;
  try {
    if (j.at("model").get<std::string>() != "hbos") throw Error("not an HBOS model");
    m.config.n_bins = j.at("n_bins").get<std::size_t>();
    m.config.contamination = j.at("contamination").get<double>();
    m.decision_threshold = j.at("decision_threshold").get<double>();
    for (const auto& fj : j.at("features")) {
      FeatureHistogram f;
      f.edges = fj.at("edges").get<std::vector<double>>();
      f.heights = fj.at("heights").get<std::vector<double>>();
      if (f.heights.empty() || f.edges.size() != f.heights.size() + 1) throw Error("HBOS histogram shape invalid");
      m.features.push_back(std::move(f));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("HBOS model JSON invalid: ") + e.what());
  }
  return m;
}

}  // namespace hatebench
