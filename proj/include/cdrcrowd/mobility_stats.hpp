#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cdrcrowd/cdr_store.hpp"
#include "cdrcrowd/errors.hpp"
#include "cdrcrowd/geo.hpp"
#include "cdrcrowd/types.hpp"

namespace cdrcrowd {

// Population prior for the average inter-CDR time: 64 minutes.
inline constexpr double kDefaultIetFallbackS = 64.0 * 60.0;

/// A recurring time-of-day range, e.g. 18:00-23:00 every day. May wrap past
/// midnight. Each day's instance is one "occurrence".
struct DailyWindow
{
  Timestamp begin_s = 0;  // second of day, [0, 86400)
  Timestamp length_s = 0; // (0, 86400]

  static DailyWindow hours(int begin_hour, int end_hour)
  {
    auto b = static_cast<Timestamp>(begin_hour) * kSecondsPerHour;
    auto e = static_cast<Timestamp>(end_hour) * kSecondsPerHour;
    auto len = e > b ? e - b : e - b + kSecondsPerDay;
    return {b % kSecondsPerDay, len};
  }

  // The time-of-day range spanned by an absolute window.
  static DailyWindow covering(TimeWindow w)
  {
    return {second_of_day(w.begin), std::clamp<Timestamp>(w.duration(), 1, kSecondsPerDay)};
  }

  [[nodiscard]] bool all_day() const { return length_s >= kSecondsPerDay; }

  [[nodiscard]] bool contains(Timestamp t) const
  {
    if (all_day())
      return true;
    auto offset = second_of_day(t) - begin_s;
    if (offset < 0)
      offset += kSecondsPerDay;
    return offset < length_s;
  }

  // Index of the daily instance containing t (meaningful when contains(t)).
  [[nodiscard]] Timestamp occurrence(Timestamp t) const { return day_of(t - begin_s); }
};

/// Gaps in seconds between consecutive records. With a filter, a gap is kept
/// only when both records fall inside the same daily occurrence of the
/// window, so overnight gaps between two evenings are not counted.
inline std::vector<Timestamp> inter_cdr_times(std::span<CdrRecord const> records,
                                              std::optional<DailyWindow> const &filter = {})
{
  std::vector<Timestamp> gaps;
  if (records.size() < 2)
    return gaps;
  gaps.reserve(records.size() - 1);
  for (std::size_t i = 1; i < records.size(); ++i) {
    auto const a = records[i - 1].timestamp;
    auto const b = records[i].timestamp;
    if (filter && !filter->all_day()) {
      if (!filter->contains(a) || !filter->contains(b) ||
          filter->occurrence(a) != filter->occurrence(b))
        continue;
    }
    gaps.push_back(b - a);
  }
  return gaps;
}

/// Mean gap in seconds (symbol iet), or `fallback_s` when no gap qualifies.
inline double avg_inter_cdr_time(std::span<CdrRecord const> records,
                                 std::optional<DailyWindow> const &filter = {},
                                 double fallback_s = kDefaultIetFallbackS)
{
  auto gaps = inter_cdr_times(records, filter);
  if (gaps.empty())
    return fallback_s;
  double sum = 0.0;
  for (auto g : gaps)
    sum += static_cast<double>(g);
  return sum / static_cast<double>(gaps.size());
}

// Linear interpolation between order statistics of already-sorted values.
inline double quantile_sorted(std::span<double const> sorted, double p)
{
  if (sorted.empty())
    throw InputError("quantile of empty sample");
  double const h = (static_cast<double>(sorted.size()) - 1.0) * std::clamp(p, 0.0, 1.0);
  auto const lo = static_cast<std::size_t>(std::floor(h));
  auto const hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline double quantile(std::vector<double> values, double p)
{
  std::sort(values.begin(), values.end());
  return quantile_sorted(values, p);
}

struct InterCdrSummary
{
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  std::size_t sample_count = 0;
};

inline InterCdrSummary quartile_summary(std::span<double const> durations)
{
  if (durations.empty())
    throw InputError("quartile summary of an empty list");
  std::vector<double> v(durations.begin(), durations.end());
  std::sort(v.begin(), v.end());
  return {quantile_sorted(v, 0.25), quantile_sorted(v, 0.5), quantile_sorted(v, 0.75), v.size()};
}

struct MeanPair
{
  double arithmetic = 0.0;
  std::optional<double> geometric; // empty when some value is not positive
};

inline MeanPair population_median_stats(std::span<double const> medians)
{
  if (medians.empty())
    throw InputError("population statistics of an empty list");
  MeanPair out;
  double sum = 0.0;
  double log_sum = 0.0;
  bool positive = true;
  for (auto m : medians) {
    sum += m;
    if (m > 0.0)
      log_sum += std::log(m);
    else
      positive = false;
  }
  auto const n = static_cast<double>(medians.size());
  out.arithmetic = sum / n;
  if (positive)
    out.geometric = std::exp(log_sum / n);
  return out;
}

/// Root-mean-square distance of the positions from their centroid, in meters,
/// evaluated in a local planar projection about the positions' mean.
inline double radius_of_gyration(std::span<GeoPoint const> positions)
{
  if (positions.empty())
    throw InputError("radius of gyration of an empty trace");
  double lat = 0.0, lon = 0.0;
  for (auto const &p : positions) {
    lat += p.lat;
    lon += p.lon;
  }
  auto const n = static_cast<double>(positions.size());
  LocalProjection proj({lat / n, lon / n});
  double cx = 0.0, cy = 0.0;
  std::vector<LocalProjection::Xy> xy;
  xy.reserve(positions.size());
  for (auto const &p : positions) {
    xy.push_back(proj.to_xy(p));
    cx += xy.back().x;
    cy += xy.back().y;
  }
  cx /= n;
  cy /= n;
  double ss = 0.0;
  for (auto const &q : xy)
    ss += (q.x - cx) * (q.x - cx) + (q.y - cy) * (q.y - cy);
  return std::sqrt(ss / n);
}

struct PercentilePoint
{
  int percentile = 0;
  double value = 0.0;
};

// Quantiles at 0, 5, ..., 100 percent.
inline std::vector<PercentilePoint> percentile_table(std::vector<double> values)
{
  std::vector<PercentilePoint> out;
  if (values.empty())
    return out;
  std::sort(values.begin(), values.end());
  for (int p = 0; p <= 100; p += 5)
    out.push_back({p, quantile_sorted(values, p / 100.0)});
  return out;
}

// Calendar days (UTC) touched by the store's records, first to last inclusive.
inline Timestamp dataset_days(CdrStore const &store)
{
  if (store.empty())
    return 0;
  Timestamp lo = store.records().front().timestamp, hi = lo;
  for (auto const &r : store.records()) {
    lo = std::min(lo, r.timestamp);
    hi = std::max(hi, r.timestamp);
  }
  return day_of(hi) - day_of(lo) + 1;
}

inline std::vector<double> per_user_daily_counts(CdrStore const &store)
{
  auto const days = static_cast<double>(dataset_days(store));
  std::vector<double> out;
  out.reserve(store.user_count());
  for (std::size_t u = 0; u < store.user_count(); ++u) {
    auto n = store.user_record_count(static_cast<UserIndex>(u));
    if (n > 0)
      out.push_back(static_cast<double>(n) / days);
  }
  return out;
}

/// Percentiles (5% steps) of the per-user daily average number of records.
inline std::vector<PercentilePoint> daily_cdr_percentiles(CdrStore const &store)
{
  if (store.empty())
    throw InputError("daily CDR percentiles of an empty store");
  return percentile_table(per_user_daily_counts(store));
}

// Radius of gyration of every user, positions being the serving cell centers.
inline std::vector<double> per_user_gyration(CdrStore const &store)
{
  std::vector<double> out;
  out.reserve(store.user_count());
  std::vector<GeoPoint> pos;
  for (std::size_t u = 0; u < store.user_count(); ++u) {
    auto recs = store.user_records(static_cast<UserIndex>(u));
    if (recs.empty())
      continue;
    pos.clear();
    for (auto const &r : recs)
      pos.push_back(store.cells()[r.cell].center);
    out.push_back(radius_of_gyration(pos));
  }
  return out;
}

} // namespace cdrcrowd
