#pragma once

// Ranking and confusion-matrix metrics shared by the CV driver and by the
// GBDT early-stopping monitor, so the whole library uses one AUC definition.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "hatebench/error.hpp"

namespace hatebench {

struct ConfusionMatrix {
  std::uint64_t tp = 0, tn = 0, fp = 0, fn = 0;

  std::uint64_t total() const { return tp + tn + fp + fn; }
  bool operator==(const ConfusionMatrix&) const = default;
};

struct AgreementMetrics {
  double accuracy = 0;
  double kappa = 0;
};

// Accuracy (TP+TN)/n and Cohen's kappa (p0 - pe)/(1 - pe), both evaluated
// as a single integer ratio so hand-checkable tables reproduce exactly.
inline AgreementMetrics metrics_from_confusion(const ConfusionMatrix& c) {
  const auto n = static_cast<std::int64_t>(c.total());
  if (n <= 0) throw Error("confusion matrix is empty");
  const auto tp = static_cast<std::int64_t>(c.tp), tn = static_cast<std::int64_t>(c.tn);
  const auto fp = static_cast<std::int64_t>(c.fp), fn = static_cast<std::int64_t>(c.fn);
  const std::int64_t agree = tp + tn;
  // chance = n^2 * pe
  const std::int64_t chance = (tp + fp) * (tp + fn) + (tn + fn) * (tn + fp);
  AgreementMetrics m;
  m.accuracy = static_cast<double>(agree) / static_cast<double>(n);
  const std::int64_t denom = n * n - chance;
  m.kappa = denom == 0 ? 0.0 : static_cast<double>(n * agree - chance) / static_cast<double>(denom);
  return m;
}

struct CurvePoint {
  double threshold;  // score at (or above) which rows are called positive
  double x;
  double y;
};

namespace detail {

struct ClassCounts {
  std::uint64_t pos = 0, neg = 0;
};

inline ClassCounts check_binary(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) {
    throw DimensionError("scores and labels differ in length: " + std::to_string(scores.size()) + " vs " +
                         std::to_string(labels.size()));
  }
  ClassCounts c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (std::isnan(scores[i])) throw Error("score " + std::to_string(i) + " is NaN");
    if (labels[i] == 1) ++c.pos;
    else if (labels[i] == 0) ++c.neg;
    else throw Error("label " + std::to_string(i) + " is not 0 or 1");
  }
  if (c.pos == 0 || c.neg == 0) throw Error("metric undefined: labels contain a single class");
  return c;
}

// Row indices sorted by descending score; ties keep index order.
inline std::vector<std::size_t> order_desc(std::span<const double> scores) {
  std::vector<std::size_t> idx(scores.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return idx;
}

// Visits blocks of equal score from the highest score down.
template <typename F>
void for_each_tie_block(std::span<const double> scores, std::span<const std::uint8_t> labels, F&& visit) {
  const auto idx = order_desc(scores);
  std::size_t i = 0;
  while (i < idx.size()) {
    const double s = scores[idx[i]];
    std::uint64_t pos = 0, neg = 0;
    while (i < idx.size() && scores[idx[i]] == s) {
      (labels[idx[i]] == 1 ? pos : neg) += 1;
      ++i;
    }
    visit(s, pos, neg);
  }
}

}  // namespace detail

// Mann-Whitney form: P(score_pos > score_neg) + 0.5 P(tie), over all pairs.
inline double auc_roc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  const auto counts = detail::check_binary(scores, labels);
  std::uint64_t neg_below = counts.neg;
  std::uint64_t wins = 0, ties = 0;
  detail::for_each_tie_block(scores, labels, [&](double, std::uint64_t pos, std::uint64_t neg) {
    neg_below -= neg;
    wins += pos * neg_below;
    ties += pos * neg;
  });
  return (static_cast<double>(wins) + 0.5 * static_cast<double>(ties)) /
         (static_cast<double>(counts.pos) * static_cast<double>(counts.neg));
}

// Average precision. A block of tied scores is consumed at once and its
// precision taken at the block end, so an all-tied ranker scores the
// prevalence.
inline double auc_prc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  const auto counts = detail::check_binary(scores, labels);
  std::uint64_t tp = 0, fp = 0;
  double ap = 0;
  detail::for_each_tie_block(scores, labels, [&](double, std::uint64_t pos, std::uint64_t neg) {
    tp += pos;
    fp += neg;
    if (pos > 0) {
      const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
      ap += precision * static_cast<double>(pos) / static_cast<double>(counts.pos);
    }
  });
  return ap;
}

// (FPR, TPR) after each tie block, starting at (0, 0) with threshold +inf.
inline std::vector<CurvePoint> roc_curve(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  const auto counts = detail::check_binary(scores, labels);
  std::vector<CurvePoint> pts{{std::numeric_limits<double>::infinity(), 0.0, 0.0}};
  std::uint64_t tp = 0, fp = 0;
  detail::for_each_tie_block(scores, labels, [&](double s, std::uint64_t pos, std::uint64_t neg) {
    tp += pos;
    fp += neg;
    pts.push_back({s, static_cast<double>(fp) / static_cast<double>(counts.neg),
                   static_cast<double>(tp) / static_cast<double>(counts.pos)});
  });
  return pts;
}

// (recall, precision) after each tie block, starting at (0, 1) with
// threshold +inf.
inline std::vector<CurvePoint> prc_curve(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  const auto counts = detail::check_binary(scores, labels);
  std::vector<CurvePoint> pts{{std::numeric_limits<double>::infinity(), 0.0, 1.0}};
  std::uint64_t tp = 0, fp = 0;
  detail::for_each_tie_block(scores, labels, [&](double s, std::uint64_t pos, std::uint64_t neg) {
    tp += pos;
    fp += neg;
    pts.push_back({s, static_cast<double>(tp) / static_cast<double>(counts.pos),
                   static_cast<double>(tp) / static_cast<double>(tp + fp)});
  });
  return pts;
}

inline double trapezoid_area(std::span<const CurvePoint> pts) {
  double area = 0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    area += (pts[i].x - pts[i - 1].x) * (pts[i].y + pts[i - 1].y) / 2.0;
  }
  return area;
}

// Rows with score strictly above the threshold are called positive.
inline ConfusionMatrix confusion_at(std::span<const double> scores, std::span<const std::uint8_t> labels,
                                    double threshold) {
  if (scores.size() != labels.size()) throw DimensionError("scores and labels differ in length");
  ConfusionMatrix c;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] > threshold;
    if (labels[i] == 1) (predicted ? c.tp : c.fn) += 1;
    else (predicted ? c.fp : c.tn) += 1;
  }
  return c;
}

// Midpoints between adjacent distinct scores plus -inf and +inf, ascending.
inline std::vector<double> eer_candidate_thresholds(std::span<const double> scores) {
  std::vector<double> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::vector<double> out;
  out.reserve(sorted.size() + 1);
  out.push_back(-std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
    const double lo = sorted[i], hi = sorted[i + 1];
    double mid = lo + (hi - lo) / 2.0;
    // Adjacent doubles: the midpoint may round onto hi, which would move hi
    // to the wrong side of a strict comparison.
    if (!(mid < hi)) mid = lo;
    out.push_back(mid);
  }
  out.push_back(std::numeric_limits<double>::infinity());
  return out;
}

namespace detail {

// True when confusion a is a better equal-error operating point than b:
// smaller |sensitivity - specificity|, then higher accuracy. Compared in
// exact integer arithmetic.
inline bool better_eer(const ConfusionMatrix& a, const ConfusionMatrix& b, std::uint64_t pos, std::uint64_t neg) {
  const auto gap = [&](const ConfusionMatrix& c) {
    const auto s = static_cast<std::int64_t>(c.tp * neg);
    const auto t = static_cast<std::int64_t>(c.tn * pos);
    return std::llabs(s - t);
  };
  const auto ga = gap(a), gb = gap(b);
  if (ga != gb) return ga < gb;
  return a.tp + a.tn > b.tp + b.tn;
}

}  // namespace detail

struct EerPoint {
  double threshold;
  ConfusionMatrix confusion;
};

// Operating point where sensitivity is closest to specificity. Ties go to
// the higher accuracy, then to the lower threshold.
inline EerPoint eer_threshold(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  const auto counts = detail::check_binary(scores, labels);
  const auto candidates = eer_candidate_thresholds(scores);

  std::vector<std::size_t> idx(scores.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Sweep thresholds upward; rows at or below the threshold are negatives.
  ConfusionMatrix c{counts.pos, 0, counts.neg, 0};
  EerPoint best{candidates.front(), c};
  std::size_t next = 0;
  for (std::size_t t = 1; t < candidates.size(); ++t) {
    while (next < idx.size() && !(scores[idx[next]] > candidates[t])) {
      if (labels[idx[next]] == 1) {
        --c.tp;
        ++c.fn;
      } else {
        --c.fp;
        ++c.tn;
      }
      ++next;
    }
    if (detail::better_eer(c, best.confusion, counts.pos, counts.neg)) best = {candidates[t], c};
  }
  return best;
}

}  // namespace hatebench
