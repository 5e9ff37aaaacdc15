#include <gtest/gtest.h>

#include <set>

#include "hatebench/cv.hpp"
#include "support/fixtures.hpp"

using namespace hatebench;

namespace {

void check_plan_bounds(const FoldPlan& plan, const Labels& y) {
  std::vector<std::size_t> size(plan.k, 0), pos(plan.k, 0);
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    ASSERT_LT(plan.assignment[i], plan.k);
    ++size[plan.assignment[i]];
    pos[plan.assignment[i]] += y[i];
    n_pos += y[i];
  }
  const auto [smin, smax] = std::minmax_element(size.begin(), size.end());
  EXPECT_LE(*smax - *smin, 1u);
  EXPECT_GT(*smin, 0u);
  for (std::size_t f = 0; f < plan.k; ++f) {
    const std::size_t neg = size[f] - pos[f];
    EXPECT_TRUE(pos[f] == n_pos / plan.k || pos[f] == (n_pos + plan.k - 1) / plan.k);
    const std::size_t n_neg = y.size() - n_pos;
    EXPECT_TRUE(neg == n_neg / plan.k || neg == (n_neg + plan.k - 1) / plan.k);
  }
}

CvConfig quick_config(ModelKind kind, bool pca, std::uint64_t seed) {
  CvConfig c;
  c.k_folds = 5;
  c.seed = seed;
  c.model_kind = kind;
  c.use_pca = pca;
  c.pca_k = 4;
  c.gbdt.max_iterations = 40;
  c.gbdt.early_stop_patience = 10;
  c.gbdt.max_depth = 3;
  return c;
}

}  // namespace

TEST(FoldPlan, ExactDivisibility) {
  Labels y(20);
  for (std::size_t i = 0; i < 20; ++i) y[i] = static_cast<std::uint8_t>(i % 2);
  const auto plan = stratified_fold_plan(y, 10, 1);
  for (std::size_t f = 0; f < 10; ++f) {
    const auto rows = plan.test_rows(f);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(y[rows[0]] + y[rows[1]], 1);
  }
}

TEST(FoldPlan, LtHateCounts) {
  Labels y(12054, 0);
  for (std::size_t i = 0; i < 6477; ++i) y[i] = 1;
  const auto plan = stratified_fold_plan(y, 10, 42);
  std::size_t pos648 = 0, pos647 = 0, s1205 = 0, s1206 = 0;
  for (std::size_t f = 0; f < 10; ++f) {
    const auto rows = plan.test_rows(f);
    std::size_t p = 0;
    for (auto r : rows) p += y[r];
    pos648 += p == 648;
    pos647 += p == 647;
    s1205 += rows.size() == 1205;
    s1206 += rows.size() == 1206;
  }
  EXPECT_EQ(pos648, 7u);
  EXPECT_EQ(pos647, 3u);
  EXPECT_EQ(s1205 + s1206, 10u);
  EXPECT_EQ(1205 * s1205 + 1206 * s1206, 12054u);
}

TEST(FoldPlan, TooFewMembers) {
  Labels y(30, 0);
  for (std::size_t i = 0; i < 9; ++i) y[i] = 1;
  EXPECT_THROW(stratified_fold_plan(y, 10, 1), Error);
}

TEST(FoldPlan, PropertyBoundsAndDeterminism) {
  std::mt19937_64 rng(7);
  for (int rep = 0; rep < 300; ++rep) {
    const std::size_t k = 2 + uniform_below(rng, 11);
    const std::size_t n_pos = k + uniform_below(rng, 60);
    const std::size_t n_neg = k + uniform_below(rng, 60);
    Labels y(n_pos + n_neg, 0);
    for (std::size_t i = 0; i < n_pos; ++i) y[i] = 1;
    shuffle(std::span<std::uint8_t>(y), rng);
    const auto seed = rng();
    const auto plan = stratified_fold_plan(y, k, seed);
    check_plan_bounds(plan, y);
    EXPECT_EQ(plan.assignment, stratified_fold_plan(y, k, seed).assignment);
  }
}

TEST(RunCv, EveryRowScoredOnceByModelThatNeverSawIt) {
  const auto ds = fixtures::isotropic_gaussians(300, 6, 1.5, 11);
  for (auto kind : {ModelKind::one_class_hbos, ModelKind::two_class_gbdt}) {
    std::vector<int> tested(300, 0);
    const auto report = run_cv(ds.x, ds.y, quick_config(kind, true, 3), [&](const FoldTrace& t) {
      std::set<std::size_t> train(t.train_rows->begin(), t.train_rows->end());
      for (auto r : *t.test_rows) {
        EXPECT_EQ(train.count(r), 0u);
        ++tested[r];
      }
      ASSERT_NE(t.pca, nullptr);
      EXPECT_EQ(t.pca->n_samples, t.train_rows->size());
      if (kind == ModelKind::one_class_hbos) {
        ASSERT_NE(t.hbos, nullptr);
      } else {
        ASSERT_NE(t.gbdt, nullptr);
      }
    });
    EXPECT_EQ(report.pooled_scores.size(), 300u);
    for (int c : tested) EXPECT_EQ(c, 1);
    for (double s : report.pooled_scores) EXPECT_FALSE(std::isnan(s));
  }
}

TEST(RunCv, HbosSeesPositiveTrainRowsOnly) {
  const auto ds = fixtures::isotropic_gaussians(200, 3, 1.0, 12);
  run_cv(ds.x, ds.y, quick_config(ModelKind::one_class_hbos, false, 4), [&](const FoldTrace& t) {
    std::size_t pos = 0;
    for (auto r : *t.train_rows) pos += ds.y[r];
    // rebuild the expected model from positive train rows
    std::vector<std::size_t> rows;
    for (auto r : *t.train_rows) {
      if (ds.y[r] == 1) rows.push_back(r);
    }
    const auto expected = hbos_fit(select_rows(ds.x, rows));
    EXPECT_EQ(rows.size(), pos);
    EXPECT_EQ(t.hbos->decision_threshold, expected.decision_threshold);
    EXPECT_EQ(t.hbos->features[0].edges, expected.features[0].edges);
  });
}

TEST(RunCv, PooledMetricsRecomputable) {
  const auto ds = fixtures::isotropic_gaussians(240, 5, 1.2, 13);
  const auto report = run_cv(ds.x, ds.y, quick_config(ModelKind::two_class_gbdt, false, 5));
  EXPECT_EQ(report.auc_roc, auc_roc(report.pooled_scores, report.pooled_labels));
  EXPECT_EQ(report.auc_prc, auc_prc(report.pooled_scores, report.pooled_labels));
  const auto eer = eer_threshold(report.pooled_scores, report.pooled_labels);
  EXPECT_EQ(report.confusion, eer.confusion);
  const auto m = metrics_from_confusion(eer.confusion);
  EXPECT_EQ(report.accuracy, m.accuracy);
  EXPECT_EQ(report.kappa, m.kappa);
  EXPECT_EQ(report.gbdt_best_iterations.size(), 5u);
}

TEST(RunCv, JsonRoundTripPreservesMetrics) {
  const auto ds = fixtures::isotropic_gaussians(150, 4, 1.0, 14);
  auto report = run_cv(ds.x, ds.y, quick_config(ModelKind::one_class_hbos, true, 6));
  report.dataset = "d";
  report.embedding = "e";
  const auto text = to_json(report).dump();
  const auto back = report_from_json(nlohmann::json::parse(text));
  EXPECT_EQ(back.pooled_scores, report.pooled_scores);
  EXPECT_EQ(back.auc_roc, report.auc_roc);
  EXPECT_EQ(back.kappa, report.kappa);
  EXPECT_EQ(back.confusion, report.confusion);
  EXPECT_EQ(back.roc_points.size(), report.roc_points.size());
  EXPECT_EQ(to_json(back).dump(), text);
}

TEST(RunCv, FoldErrorsCarryIndex) {
  const auto ds = fixtures::isotropic_gaussians(100, 3, 1.0, 15);
  auto c = quick_config(ModelKind::two_class_gbdt, true, 7);
  c.pca_k = 50;  // exceeds d = 3
  try {
    run_cv(ds.x, ds.y, c);
    FAIL();
  } catch (const FoldError& e) {
    EXPECT_EQ(e.fold(), 0u);
    EXPECT_NE(std::string(e.what()).find("fold 0"), std::string::npos);
  }
  EXPECT_THROW(run_cv(ds.x, Labels(99, 0), c), DimensionError);
}

TEST(RunCv, Deterministic) {
  const auto ds = fixtures::isotropic_gaussians(200, 4, 1.0, 16);
  const auto c = quick_config(ModelKind::two_class_gbdt, true, 8);
  EXPECT_EQ(to_json(run_cv(ds.x, ds.y, c)).dump(), to_json(run_cv(ds.x, ds.y, c)).dump());
}
