#pragma once

// Stratified k-fold cross-validation with pooled (micro-averaged) metrics.
//
// Per fold, PCA (optional) and the detector are fitted on the training rows
// only; every row is scored exactly once, by the model of the fold that held
// it out. Metrics are computed once on the pooled scores.

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "hatebench/error.hpp"
#include "hatebench/gbdt.hpp"
#include "hatebench/hbos.hpp"
#include "hatebench/matrix.hpp"
#include "hatebench/metrics.hpp"
#include "hatebench/pca.hpp"
#include "hatebench/rng.hpp"

namespace hatebench {

enum class ModelKind { one_class_hbos, two_class_gbdt };

inline std::string to_string(ModelKind k) { return k == ModelKind::one_class_hbos ? "1c" : "2c"; }

inline ModelKind model_kind_from_string(const std::string& s) {
  if (s == "1c" || s == "one_class_hbos" || s == "hbos") return ModelKind::one_class_hbos;
  if (s == "2c" || s == "two_class_gbdt" || s == "gbdt") return ModelKind::two_class_gbdt;
  throw Error("unknown model kind \"" + s + "\" (expected 1c or 2c)");
}

struct CvConfig {
  std::size_t k_folds = 10;
  std::uint64_t seed = 0;
  ModelKind model_kind = ModelKind::two_class_gbdt;
  bool use_pca = false;
  std::size_t pca_k = 64;
  HbosConfig hbos;
  GbdtConfig gbdt;  // seed is replaced by a per-fold sub-seed

  void validate() const {
    if (k_folds < 2) throw Error("k_folds must be at least 2");
    if (pca_k < 1) throw Error("pca_k must be at least 1");
  }
};

struct FoldPlan {
  std::size_t k = 0;
  std::vector<std::size_t> assignment;  // fold index per row

  std::vector<std::size_t> test_rows(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignment.size(); ++i) {
      if (assignment[i] == fold) out.push_back(i);
    }
    return out;
  }

  std::vector<std::size_t> train_rows(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignment.size(); ++i) {
      if (assignment[i] != fold) out.push_back(i);
    }
    return out;
  }
};

// Each class is shuffled and dealt round-robin, negatives first, with the
// positives continuing where the negatives stopped. Per-class fold counts and
// total fold sizes then each differ by at most one.
inline FoldPlan stratified_fold_plan(std::span<const std::uint8_t> labels, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw Error("k_folds must be at least 2");
  FoldPlan plan{k, std::vector<std::size_t>(labels.size())};
  std::mt19937_64 rng(seed);
  std::size_t position = 0;
  for (std::uint8_t cls : {std::uint8_t{0}, std::uint8_t{1}}) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] > 1) throw Error("labels must be 0 or 1");
      if (labels[i] == cls) members.push_back(i);
    }
    if (members.size() < k) {
      throw Error("class " + std::to_string(cls) + " has " + std::to_string(members.size()) +
                  " rows, fewer than k=" + std::to_string(k) + " folds");
    }
    shuffle(std::span<std::size_t>(members), rng);
    for (auto row : members) plan.assignment[row] = position++ % k;
  }
  return plan;
}

class FoldError : public Error {
 public:
  FoldError(std::size_t fold, const std::string& what)
      : Error("fold " + std::to_string(fold) + ": " + what), fold_(fold) {}
  std::size_t fold() const noexcept { return fold_; }

 private:
  std::size_t fold_;
};

// What a fold saw; handed to an optional observer for provenance checks.
struct FoldTrace {
  std::size_t fold = 0;
  const std::vector<std::size_t>* train_rows = nullptr;
  const std::vector<std::size_t>* test_rows = nullptr;
  const PcaModel* pca = nullptr;  // null without compression
  const GbdtModel* gbdt = nullptr;
  const HbosModel* hbos = nullptr;
};

using FoldObserver = std::function<void(const FoldTrace&)>;

struct EvaluationReport {
  CvConfig config;
  std::string dataset;
  std::string embedding;
  std::vector<double> pooled_scores;
  Labels pooled_labels;
  std::vector<std::size_t> fold_of_row;
  std::vector<CurvePoint> roc_points;
  std::vector<CurvePoint> prc_points;
  double auc_roc = 0;
  double auc_prc = 0;
  double eer_threshold = 0;
  ConfusionMatrix confusion;
  double accuracy = 0;
  double kappa = 0;
  std::vector<std::size_t> gbdt_best_iterations;  // per fold, 2c only
};

// Fills curves and metrics from pooled_scores / pooled_labels.
inline void compute_pooled_metrics(EvaluationReport& r) {
  r.roc_points = roc_curve(r.pooled_scores, r.pooled_labels);
  r.prc_points = prc_curve(r.pooled_scores, r.pooled_labels);
  r.auc_roc = auc_roc(r.pooled_scores, r.pooled_labels);
  r.auc_prc = auc_prc(r.pooled_scores, r.pooled_labels);
  const EerPoint eer = eer_threshold(r.pooled_scores, r.pooled_labels);
  r.eer_threshold = eer.threshold;
  r.confusion = eer.confusion;
  const AgreementMetrics m = metrics_from_confusion(r.confusion);
  r.accuracy = m.accuracy;
  r.kappa = m.kappa;
}

// Score of the one-class detector for the target class: the HBOS model is
// fitted on target rows, so a low rescaled outlier score means target-like.
inline double one_class_target_score(double raw, bool compressed) { return 1.0 - hbos_probability(raw, compressed); }

inline EvaluationReport run_cv(const Matrix& x, std::span<const std::uint8_t> labels, const CvConfig& config,
                               const FoldObserver& observer = {}) {
  config.validate();
  const auto n = static_cast<std::size_t>(x.rows());
  if (labels.size() != n) {
    throw DimensionError("embeddings have " + std::to_string(n) + " rows but there are " +
                         std::to_string(labels.size()) + " labels");
  }
  const FoldPlan plan = stratified_fold_plan(labels, config.k_folds, derive_seed(config.seed, "folds"));

  EvaluationReport report;
  report.config = config;
  report.pooled_scores.assign(n, std::numeric_limits<double>::quiet_NaN());
  report.pooled_labels.assign(labels.begin(), labels.end());
  report.fold_of_row = plan.assignment;

  for (std::size_t fold = 0; fold < config.k_folds; ++fold) {
    const auto train = plan.train_rows(fold);
    const auto test = plan.test_rows(fold);
    try {
      Matrix x_train = select_rows(x, train);
      Matrix x_test = select_rows(x, test);
      std::optional<PcaModel> pca;
      if (config.use_pca) {
        pca = pca_fit(x_train, config.pca_k);
        x_train = pca_transform(*pca, x_train);
        x_test = pca_transform(*pca, x_test);
      }
      FoldTrace trace{fold, &train, &test, pca ? &*pca : nullptr, nullptr, nullptr};

      std::vector<double> scores;
      if (config.model_kind == ModelKind::one_class_hbos) {
        std::vector<std::size_t> target;
        for (std::size_t i = 0; i < train.size(); ++i) {
          if (labels[train[i]] == 1) target.push_back(i);
        }
        const HbosModel model = hbos_fit(select_rows(x_train, target), config.hbos);
        for (double raw : hbos_raw_scores(model, x_test)) {
          scores.push_back(one_class_target_score(raw, config.use_pca));
        }
        trace.hbos = &model;
        if (observer) observer(trace);
      } else {
        GbdtConfig gc = config.gbdt;
        gc.seed = derive_seed(config.seed, "gbdt", fold);
        const Labels y_train = select(Labels(labels.begin(), labels.end()), train);
        const GbdtModel model = gbdt_train(x_train, y_train, gc);
        scores = gbdt_predict_proba(model, x_test);
        report.gbdt_best_iterations.push_back(model.best_iteration);
        trace.gbdt = &model;
        if (observer) observer(trace);
      }
      for (std::size_t i = 0; i < test.size(); ++i) report.pooled_scores[test[i]] = scores[i];
    } catch (const FoldError&) {
      throw;
    } catch (const std::exception& e) {
      throw FoldError(fold, e.what());
    }
  }
  compute_pooled_metrics(report);
  return report;
}

// ---- serialization ---------------------------------------------------------

namespace detail {

// JSON has no infinities; thresholds at the +/-inf sentinels become strings.
inline nlohmann::ordered_json finite_or_string(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

inline double number_or_string(const nlohmann::json& j) {
  if (j.is_number()) return j.get<double>();
  const auto s = j.get<std::string>();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  throw Error("expected a number, got \"" + s + "\"");
}

}  // namespace detail

inline nlohmann::ordered_json to_json(const CvConfig& c) {
  nlohmann::ordered_json j;
  j["k_folds"] = c.k_folds;
  j["seed"] = c.seed;
  j["model_kind"] = to_string(c.model_kind);
  j["use_pca"] = c.use_pca;
  j["pca_k"] = c.pca_k;
  j["hbos"] = {{"n_bins", c.hbos.n_bins}, {"contamination", c.hbos.contamination}};
  j["gbdt"] = to_json(c.gbdt);
  return j;
}

inline CvConfig cv_config_from_json(const nlohmann::json& j) {
  CvConfig c;
  c.k_folds = j.at("k_folds").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.model_kind = model_kind_from_string(j.at("model_kind").get<std::string>());
  c.use_pca = j.at("use_pca").get<bool>();
  c.pca_k = j.at("pca_k").get<std::size_t>();
  c.hbos.n_bins = j.at("hbos").at("n_bins").get<std::size_t>();
  c.hbos.contamination = j.at("hbos").at("contamination").get<double>();
  c.gbdt = gbdt_config_from_json(j.at("gbdt"));
  return c;
}

inline nlohmann::ordered_json to_json(const EvaluationReport& r) {
  nlohmann::ordered_json j;
  j["dataset"] = r.dataset;
  j["embedding"] = r.embedding;
  j["config"] = to_json(r.config);
  j["n"] = r.pooled_scores.size();
  j["accuracy"] = r.accuracy;
  j["kappa"] = r.kappa;
  j["auc_roc"] = r.auc_roc;
  j["auc_prc"] = r.auc_prc;
  j["eer_threshold"] = detail::finite_or_string(r.eer_threshold);
  j["operating_point"] = "equal error rate, selected on pooled test scores";
  j["confusion"] = {{"tp", r.confusion.tp}, {"tn", r.confusion.tn}, {"fp", r.confusion.fp}, {"fn", r.confusion.fn}};
  if (!r.gbdt_best_iterations.empty()) j["gbdt_best_iterations"] = r.gbdt_best_iterations;
  j["pooled_scores"] = r.pooled_scores;
  j["pooled_labels"] = r.pooled_labels;
  j["fold_of_row"] = r.fold_of_row;
  auto curve = [](const std::vector<CurvePoint>& pts) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& p : pts) arr.push_back({detail::finite_or_string(p.threshold), p.x, p.y});
    return arr;
  };
  j["roc_points"] = curve(r.roc_points);
  j["prc_points"] = curve(r.prc_points);
  return j;
}

inline EvaluationReport report_from_json(const nlohmann::json& j) {
  EvaluationReport r;
  try {
    r.dataset = j.at("dataset").get<std::string>();
    r.embedding = j.at("embedding").get<std::string>();
    r.config = cv_config_from_json(j.at("config"));
    r.accuracy = j.at("accuracy").get<double>();
    r.kappa = j.at("kappa").get<double>();
    r.auc_roc = j.at("auc_roc").get<double>();
    r.auc_prc = j.at("auc_prc").get<double>();
    r.eer_threshold = detail::number_or_string(j.at("eer_threshold"));
    const auto& c = j.at("confusion");
    r.confusion = {c.at("tp").get<std::uint64_t>(), c.at("tn").get<std::uint64_t>(), c.at("fp").get<std::uint64_t>(),
                   c.at("fn").get<std::uint64_t>()};
    if (j.contains("gbdt_best_iterations")) {
      r.gbdt_best_iterations = j.at("gbdt_best_iterations").get<std::vector<std::size_t>>();
    }
    r.pooled_scores = j.at("pooled_scores").get<std::vector<double>>();
    r.pooled_labels = j.at("pooled_labels").get<Labels>();
    r.fold_of_row = j.at("fold_of_row").get<std::vector<std::size_t>>();
    auto curve = [](const nlohmann::json& arr) {
      std::vector<CurvePoint> pts;
      for (const auto& p : arr) pts.push_back({detail::number_or_string(p.at(0)), p.at(1).get<double>(), p.at(2).get<double>()});
      return pts;
    };
    r.roc_points = curve(j.at("roc_points"));
    r.prc_points = curve(j.at("prc_points"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("evaluation report JSON invalid: ") + e.what());
  }
  return r;
}

}  // namespace hatebench
