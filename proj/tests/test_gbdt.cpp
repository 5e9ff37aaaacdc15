#include <gtest/gtest.h>

#include <cmath>

#include "hatebench/gbdt.hpp"
#include "support/fixtures.hpp"

using namespace hatebench;

namespace {

fixtures::Dataset separable_1d(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  fixtures::Dataset ds{Matrix(static_cast<Eigen::Index>(n), 1), Labels(n)};
  for (std::size_t i = 0; i < n; ++i) {
    ds.y[i] = static_cast<std::uint8_t>(i % 2);
    const double mag = 0.01 + uniform_unit(rng);
    ds.x(static_cast<Eigen::Index>(i), 0) = ds.y[i] == 1 ? mag : -mag;
  }
  return ds;
}

GbdtConfig fast_config(std::uint64_t seed) {
  GbdtConfig c;
  c.seed = seed;
  c.max_iterations = 60;
  c.early_stop_patience = 10;
  c.max_depth = 4;
  return c;
}

}  // namespace

TEST(Gbdt, GradientsAtZero) {
  const Labels y{1, 0};
  const std::vector<double> raw{0.0, 0.0};
  const auto g = logistic_loss_gradients(y, raw, 1.0);
  EXPECT_DOUBLE_EQ(g.gradients[0], -0.5);
  EXPECT_DOUBLE_EQ(g.hessians[0], 0.25);
  EXPECT_DOUBLE_EQ(g.gradients[1], 0.5);
  EXPECT_DOUBLE_EQ(g.hessians[1], 0.25);
}

TEST(Gbdt, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(41);
  const double h = 1e-5;
  for (int i = 0; i < 20; ++i) {
    const Labels y{static_cast<std::uint8_t>(uniform_below(rng, 2))};
    const double raw = -5.0 + 10.0 * uniform_unit(rng);
    const double w = 0.25 + 4.0 * uniform_unit(rng);
    const auto loss = [&](double r) { return weighted_log_loss(y, std::vector<double>{r}, w); };
    const auto g = logistic_loss_gradients(y, std::vector<double>{raw}, w);
    const double fd1 = (loss(raw + h) - loss(raw - h)) / (2 * h);
    const double fd2 = (loss(raw + h) - 2 * loss(raw) + loss(raw - h)) / (h * h);
    EXPECT_NEAR(g.gradients[0], fd1, 1e-6);
    const auto gp = logistic_loss_gradients(y, std::vector<double>{raw + h}, w);
    const auto gm = logistic_loss_gradients(y, std::vector<double>{raw - h}, w);
    EXPECT_NEAR(g.hessians[0], (gp.gradients[0] - gm.gradients[0]) / (2 * h), 1e-6);
    EXPECT_NEAR(g.hessians[0], fd2, 1e-3);
  }
}

TEST(Gbdt, ScalePosWeight) {
  auto ds = separable_1d(200, 1);
  auto m = gbdt_train(ds.x, ds.y, fast_config(1));
  EXPECT_DOUBLE_EQ(m.scale_pos_weight, 1.0);

  // 100 negatives, 25 positives -> fit part 80 / 20
  Labels y(125, 0);
  for (std::size_t i = 0; i < 25; ++i) y[i * 5] = 1;
  Matrix x(125, 1);
  for (Eigen::Index i = 0; i < 125; ++i) x(i, 0) = y[static_cast<std::size_t>(i)] ? 1.0 + i : -1.0 - i;
  m = gbdt_train(x, y, fast_config(2));
  EXPECT_DOUBLE_EQ(m.scale_pos_weight, 4.0);
}

TEST(Gbdt, SeparableDataStopsEarly) {
  const auto ds = separable_1d(1000, 3);
  GbdtConfig c;
  c.seed = 3;
  const auto m = gbdt_train(ds.x, ds.y, c);
  ASSERT_FALSE(m.validation_history.empty());
  std::size_t first_perfect = 0;
  for (const auto& v : m.validation_history) {
    if (v.auc == 1.0) {
      first_perfect = v.iteration;
      break;
    }
  }
  EXPECT_GE(first_perfect, 1u);
  EXPECT_LE(first_perfect, 10u);
  EXPECT_LT(m.validation_history.size(), 100u);
  EXPECT_EQ(m.trees.size(), m.best_iteration);

  const auto held = separable_1d(400, 99);
  const auto p = gbdt_predict_proba(m, held.x);
  EXPECT_EQ(auc_roc(p, held.y), 1.0);
}

TEST(Gbdt, TrainingLossNonIncreasing) {
  const auto ds = fixtures::isotropic_gaussians(600, 5, 2.0, 5);
  GbdtConfig c = fast_config(5);
  c.lambda_l2 = 0.0;
  c.min_samples_leaf = 1;
  c.early_stop_patience = 1000;
  c.max_iterations = 80;
  const auto m = gbdt_train(ds.x, ds.y, c);
  ASSERT_EQ(m.fit_loss_history.size(), 81u);
  for (std::size_t i = 1; i < m.fit_loss_history.size(); ++i) {
    EXPECT_LE(m.fit_loss_history[i], m.fit_loss_history[i - 1]) << i;
  }
}

TEST(Gbdt, TruncatedToBestValidationAuc) {
  const auto ds = fixtures::isotropic_gaussians(800, 10, 1.0, 6);
  const auto m = gbdt_train(ds.x, ds.y, fast_config(6));
  double best = -1;
  std::size_t arg = 0;
  for (const auto& v : m.validation_history) {
    EXPECT_GE(v.auc, 0.0);
    EXPECT_LE(v.auc, 1.0);
    if (v.auc > best) {
      best = v.auc;
      arg = v.iteration;
    }
  }
  EXPECT_EQ(m.best_iteration, arg);
  EXPECT_EQ(m.trees.size(), m.best_iteration);
  for (const auto& t : m.trees) EXPECT_LE(t.depth(), 4u);

  // recompute the retained ensemble's validation AUC from scratch
  const auto split = stratified_split(ds.y, 0.2, 6);
  const Matrix xv = select_rows(ds.x, split.validation);
  std::vector<double> raw;
  for (Eigen::Index i = 0; i < xv.rows(); ++i) raw.push_back(gbdt_raw_score(m, std::span<const double>(xv.row(i).data(), 10)));
  EXPECT_EQ(auc_roc(raw, select(ds.y, split.validation)), best);
}

TEST(Gbdt, SeededRetrainingIsBitIdentical) {
  const auto ds = fixtures::isotropic_gaussians(500, 8, 1.0, 7);
  const auto a = gbdt_train(ds.x, ds.y, fast_config(7));
  const auto b = gbdt_train(ds.x, ds.y, fast_config(7));
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
  EXPECT_EQ(gbdt_predict_proba(a, ds.x), gbdt_predict_proba(b, ds.x));
}

TEST(Gbdt, PredictionClosedForms) {
  GbdtModel m;
  m.feature_count = 2;
  const Matrix x = Matrix::Random(3, 2);
  for (double p : gbdt_predict_proba(m, x)) EXPECT_EQ(p, 0.5);
  RegressionTree leaf;
  leaf.nodes.push_back({-1, 0, -1, -1, 0.7});
  m.trees.push_back(leaf);
  for (double p : gbdt_predict_proba(m, x)) EXPECT_DOUBLE_EQ(p, 1.0 / (1.0 + std::exp(-0.7)));
  EXPECT_THROW(gbdt_predict_proba(m, Matrix::Zero(1, 3)), DimensionError);
}

TEST(Gbdt, Errors) {
  const auto ds = separable_1d(100, 8);
  EXPECT_THROW(gbdt_train(ds.x, Labels(100, 1), fast_config(1)), Error);
  Labels few(100, 0);
  few[0] = 1;
  few[1] = 1;
  few[2] = 1;
  EXPECT_THROW(gbdt_train(ds.x, few, fast_config(1)), Error);
  GbdtConfig bad = fast_config(1);
  bad.learning_rate = 0;
  EXPECT_THROW(gbdt_train(ds.x, ds.y, bad), Error);
  try {
    gbdt_train(ds.x, Labels(100, 0), fast_config(1));
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("scale_pos_weight undefined"), std::string::npos);
  }
}

TEST(Gbdt, StratifiedSplitKeepsProportions) {
  Labels y(1000, 0);
  for (std::size_t i = 0; i < 300; ++i) y[i * 3] = 1;
  const auto s = stratified_split(y, 0.2, 5);
  EXPECT_EQ(s.validation.size(), 200u);
  std::size_t vp = 0;
  for (auto r : s.validation) vp += y[r];
  EXPECT_EQ(vp, 60u);
  EXPECT_EQ(s.fit.size() + s.validation.size(), 1000u);
}

TEST(Gbdt, JsonRoundTrip) {
  const auto ds = fixtures::isotropic_gaussians(300, 4, 1.5, 9);
  const auto m = gbdt_train(ds.x, ds.y, fast_config(9));
  const auto back = gbdt_from_json(nlohmann::json::parse(to_json(m).dump()));
  EXPECT_EQ(gbdt_predict_proba(back, ds.x), gbdt_predict_proba(m, ds.x));
  EXPECT_EQ(to_json(back).dump(), to_json(m).dump());
}
