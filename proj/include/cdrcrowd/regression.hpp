#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cdrcrowd/errors.hpp"
#include "cdrcrowd/mobility_stats.hpp"
#include "cdrcrowd/types.hpp"

namespace cdrcrowd {

struct TrainingPair
{
  double x = 0.0; // raw estimate
  double y = 0.0; // ground truth
  std::string event_id;
};

struct FitLine
{
  double slope = 0.0;
  double intercept = 0.0;
  double r = 0.0;  // Pearson correlation (0 when y is constant)
  double r2 = 0.0; // coefficient of determination
  std::size_t n = 0;

  [[nodiscard]] double predict(double x) const { return intercept + slope * x; }
};

/// Ordinary least squares y = intercept + slope * x.
inline FitLine fit_ols(std::span<TrainingPair const> train)
{
  if (train.size() < 2)
    throw DegenerateDesign("degenerate design: fewer than two points");
  auto const n = static_cast<double>(train.size());
  double mx = 0.0, my = 0.0;
  for (auto const &p : train) {
    mx += p.x;
    my += p.y;
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (auto const &p : train) {
    sxx += (p.x - mx) * (p.x - mx);
    sxy += (p.x - mx) * (p.y - my);
    syy += (p.y - my) * (p.y - my);
  }
  if (!(sxx > 0.0))
    throw DegenerateDesign();
  FitLine f;
  f.n = train.size();
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (syy > 0.0) {
    f.r = sxy / std::sqrt(sxx * syy);
    double ss_res = 0.0;
    for (auto const &p : train) {
      double e = p.y - f.predict(p.x);
      ss_res += e * e;
    }
    f.r2 = 1.0 - ss_res / syy;
  }
  return f;
}

// Pearson correlation of two equally long samples; 0 if either is constant.
inline double pearson(std::span<double const> xs, std::span<double const> ys)
{
  if (xs.size() != ys.size() || xs.size() < 2)
    throw InputError("pearson: need two equally long samples of size >= 2");
  auto const n = static_cast<double>(xs.size());
  double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (!(sxx > 0.0) || !(syy > 0.0))
    return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

// 1 - SS_res / SS_tot of predictions against truth.
inline double coefficient_of_determination(std::span<double const> predicted,
                                           std::span<double const> truth)
{
  if (predicted.size() != truth.size() || truth.empty())
    throw InputError("coefficient of determination: size mismatch");
  double mean = std::accumulate(truth.begin(), truth.end(), 0.0) / static_cast<double>(truth.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ss_res += (truth[i] - predicted[i]) * (truth[i] - predicted[i]);
    ss_tot += (truth[i] - mean) * (truth[i] - mean);
  }
  if (!(ss_tot > 0.0))
    return ss_res == 0.0 ? 1.0 : 0.0;
  return 1.0 - ss_res / ss_tot;
}

/// Local linear regression: fit OLS on the `n` training pairs closest to `x`
/// (ties broken by event id) and evaluate at `x`.
inline double predict_piecewise(std::span<TrainingPair const> train, double x, std::size_t n = 6)
{
  if (train.size() < 2)
    throw InputError("piecewise regression needs at least two training pairs");
  if (n >= train.size())
    return fit_ols(train).predict(x);

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    double da = std::abs(train[a].x - x), db = std::abs(train[b].x - x);
    if (da != db)
      return da < db;
    return train[a].event_id < train[b].event_id;
  });
  std::vector<TrainingPair> nearest;
  for (std::size_t i = 0; i < std::max<std::size_t>(n, 1); ++i)
    nearest.push_back(train[order[i]]);
  try {
    return fit_ols(nearest).predict(x);
  } catch (DegenerateDesign const &) {
    double sum = 0.0;
    for (auto const &p : nearest)
      sum += p.y;
    return sum / static_cast<double>(nearest.size());
  }
}

struct RangeModel
{
  FitLine global;
  std::optional<FitLine> small; // trained on y < threshold
  std::optional<FitLine> large; // trained on y >= threshold
  double threshold = 10000.0;

  // Routed by which side of the threshold the global fit puts x on; a side
  // without its own fit uses the global one.
  [[nodiscard]] double predict(double x) const
  {
    double prelim = global.predict(x);
    auto const &side = prelim < threshold ? small : large;
    return side ? side->predict(x) : prelim;
  }
};

inline RangeModel fit_range(std::span<TrainingPair const> train, double threshold = 10000.0)
{
  RangeModel m;
  m.threshold = threshold;
  m.global = fit_ols(train);
  std::vector<TrainingPair> lo, hi;
  for (auto const &p : train)
    (p.y < threshold ? lo : hi).push_back(p);
  auto side_fit = [](std::vector<TrainingPair> const &v) -> std::optional<FitLine> {
    if (v.size() < 2)
      return std::nullopt;
    try {
      return fit_ols(v);
    } catch (DegenerateDesign const &) {
      return std::nullopt;
    }
  };
  m.small = side_fit(lo);
  m.large = side_fit(hi);
  return m;
}

inline double predict_range(std::span<TrainingPair const> train, double x,
                            double threshold = 10000.0)
{
  return fit_range(train, threshold).predict(x);
}

struct ErrorReport
{
  std::size_t count = 0;     // events compared
  std::size_t pct_count = 0; // events with positive ground truth
  std::size_t zero_truth_excluded = 0;
  double mean_abs = 0.0;
  double median_abs = 0.0;
  double mean_pct = std::numeric_limits<double>::quiet_NaN();
  double median_pct = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> skewness; // of the percentage errors
  // (percentage error, fraction of events at or below it), strictly
  // increasing in the error, last fraction 1.
  std::vector<std::pair<double, double>> error_cdf;
};

// Adjusted Fisher-Pearson standardized third moment; empty for n < 3 or a
// constant sample.
inline std::optional<double> sample_skewness(std::span<double const> v)
{
  if (v.size() < 3)
    return std::nullopt;
  auto const n = static_cast<double>(v.size());
  double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double m2 = 0.0, m3 = 0.0;
  for (auto x : v) {
    double d = x - mean;
    m2 += d * d;
    m3 += d * d * d;
  }
  m2 /= n;
  m3 /= n;
  if (!(m2 > 0.0))
    return std::nullopt;
  double g1 = m3 / std::pow(m2, 1.5);
  return std::sqrt(n * (n - 1.0)) / (n - 2.0) * g1;
}

/// Absolute and percentage errors of predictions against ground truth.
/// Percentage errors are |predicted - truth| / truth * 100; events with zero
/// truth are left out of them and counted in zero_truth_excluded.
inline ErrorReport error_metrics(std::span<double const> predicted, std::span<double const> truth)
{
  if (predicted.size() != truth.size() || predicted.empty())
    throw InputError("error metrics need equally long, nonempty lists");
  ErrorReport rep;
  rep.count = predicted.size();
  std::vector<double> abs_err, pct;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    double e = std::abs(predicted[i] - truth[i]);
    abs_err.push_back(e);
    if (truth[i] > 0.0)
      pct.push_back(e / truth[i] * 100.0);
    else
      ++rep.zero_truth_excluded;
  }
  auto mean = [](std::vector<double> const &v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  rep.mean_abs = mean(abs_err);
  rep.median_abs = quantile(abs_err, 0.5);
  rep.pct_count = pct.size();
  if (!pct.empty()) {
    rep.mean_pct = mean(pct);
    rep.median_pct = quantile(pct, 0.5);
    rep.skewness = sample_skewness(pct);
    std::sort(pct.begin(), pct.end());
    auto const n = static_cast<double>(pct.size());
    for (std::size_t i = 0; i < pct.size(); ++i) {
      double frac = static_cast<double>(i + 1) / n;
      if (!rep.error_cdf.empty() && rep.error_cdf.back().first == pct[i])
        rep.error_cdf.back().second = frac;
      else
        rep.error_cdf.emplace_back(pct[i], frac);
    }
  }
  return rep;
}

enum class RegressionMethod
{
  ols,
  piecewise,
  range
};

inline std::string_view to_string(RegressionMethod m)
{
  switch (m) {
  case RegressionMethod::ols: return "ols";
  case RegressionMethod::piecewise: return "piecewise";
  case RegressionMethod::range: return "range";
  }
  return "?";
}

inline std::optional<RegressionMethod> parse_regression(std::string_view s)
{
  if (s == "ols")
    return RegressionMethod::ols;
  if (s == "piecewise")
    return RegressionMethod::piecewise;
  if (s == "range")
    return RegressionMethod::range;
  return std::nullopt;
}

enum class TrainingFilter
{
  structured_only,
  all
};

struct RegressionOptions
{
  RegressionMethod method = RegressionMethod::piecewise;
  std::size_t knn = 6;
  double range_threshold = 10000.0;
  TrainingFilter filter = TrainingFilter::structured_only;
};

inline double predict_with(std::span<TrainingPair const> train, double x,
                           RegressionOptions const &opt)
{
  switch (opt.method) {
  case RegressionMethod::ols: return fit_ols(train).predict(x);
  case RegressionMethod::piecewise: return predict_piecewise(train, x, opt.knn);
  case RegressionMethod::range: return predict_range(train, x, opt.range_threshold);
  }
  return 0.0;
}

struct EvalEvent
{
  std::string event_id;
  double raw = 0.0;
  std::optional<double> truth;
  EventCategory category = EventCategory::structured;
};

struct Prediction
{
  std::string event_id;
  double raw = 0.0;
  double predicted = 0.0;
  std::optional<double> truth;
  std::optional<double> abs_err;
  std::optional<double> pct_err;
  bool in_training = false;
};

struct Evaluation
{
  std::vector<Prediction> predictions;
  ErrorReport report; // over events with ground truth
  // Over events with ground truth: predicted vs truth.
  double prediction_r2 = std::numeric_limits<double>::quiet_NaN();
  double prediction_r = std::numeric_limits<double>::quiet_NaN();
  // Fits on the full training pool, for reporting.
  std::optional<FitLine> global_fit;
  std::optional<RangeModel> range_fit;
};

inline bool passes(TrainingFilter f, EvalEvent const &e)
{
  if (!e.truth)
    return false;
  return f == TrainingFilter::all || e.category == EventCategory::structured;
}

/// Leave-one-out evaluation: each event is predicted from a model trained on
/// every other event that passes the training filter. Unstructured events are
/// predicted but never trained on unless the filter is `all`.
inline Evaluation leave_one_out_eval(std::span<EvalEvent const> events,
                                     RegressionOptions const &opt = {})
{
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < events.size(); ++i)
    if (passes(opt.filter, events[i]))
      pool.push_back(i);
  if (pool.size() < 3)
    throw InputError("leave-one-out evaluation needs at least three training events, have " +
                     std::to_string(pool.size()));

  Evaluation ev;
  std::vector<double> pred_with_truth, truth;
  for (std::size_t i = 0; i < events.size(); ++i) {
    std::vector<TrainingPair> train;
    bool in_pool = false;
    for (auto j : pool) {
      if (j == i) {
        in_pool = true;
        continue;
      }
      train.push_back({events[j].raw, *events[j].truth, events[j].event_id});
    }
    Prediction p;
    p.event_id = events[i].event_id;
    p.raw = events[i].raw;
    p.in_training = in_pool;
    p.predicted = predict_with(train, events[i].raw, opt);
    p.truth = events[i].truth;
    if (p.truth) {
      p.abs_err = std::abs(p.predicted - *p.truth);
      if (*p.truth > 0.0)
        p.pct_err = *p.abs_err / *p.truth * 100.0;
      pred_with_truth.push_back(p.predicted);
      truth.push_back(*p.truth);
    }
    ev.predictions.push_back(std::move(p));
  }
  if (!truth.empty()) {
    ev.report = error_metrics(pred_with_truth, truth);
    ev.prediction_r2 = coefficient_of_determination(pred_with_truth, truth);
    if (truth.size() >= 2)
      ev.prediction_r = pearson(pred_with_truth, truth);
  }

  std::vector<TrainingPair> all;
  for (auto j : pool)
    all.push_back({events[j].raw, *events[j].truth, events[j].event_id});
  try {
    ev.global_fit = fit_ols(all);
    if (opt.method == RegressionMethod::range)
      ev.range_fit = fit_range(all, opt.range_threshold);
  } catch (DegenerateDesign const &) {
  }
  return ev;
}

} // namespace cdrcrowd
