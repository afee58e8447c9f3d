#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cdrcrowd/cdr_store.hpp"
#include "cdrcrowd/geo.hpp"
#include "cdrcrowd/mobility_stats.hpp"
#include "cdrcrowd/types.hpp"

namespace cdrcrowd {

inline constexpr double kNaiveRadiusM = 100.0;

/// Distinct users seen in the cells overlapping a fixed-radius circle around
/// the venue during the window. The baseline the estimator is compared to.
inline std::size_t naive_count(CdrStore const &store, GeoPoint const &center, TimeWindow window,
                               double fixed_radius_m = kNaiveRadiusM)
{
  auto cells = relevant_cells(store.cells(), {center, fixed_radius_m});
  return store.count_users(cells, window.begin, window.end);
}

struct PresenceAssessment
{
  UserIndex user{};
  double iet_s = 0.0;
  Timestamp first_in = 0;
  Timestamp last_in = 0;
  double f1 = 0.0; // share of the event window spent in the area
  double f2 = 0.0; // share of the lookback period spent in the area
  double p = 0.0;  // f1 * (1 - f2)
};

namespace detail {

struct FirstLast
{
  Timestamp first = 0;
  Timestamp last = 0;
};

inline std::optional<FirstLast> first_last_in(std::span<CdrRecord const> records,
                                              CellSet const &area, Timestamp t0, Timestamp t1)
{
  std::optional<FirstLast> out;
  auto lo = std::lower_bound(records.begin(), records.end(), t0,
                             [](CdrRecord const &r, Timestamp t) { return r.timestamp < t; });
  for (auto it = lo; it != records.end() && it->timestamp < t1; ++it) {
    if (!std::binary_search(area.begin(), area.end(), it->cell))
      continue;
    if (!out)
      out = FirstLast{it->timestamp, it->timestamp};
    else
      out->last = it->timestamp;
  }
  return out;
}

inline double span_fraction(FirstLast const &fl, double iet_s, double denominator_s)
{
  double f = std::abs(static_cast<double>(fl.last - fl.first) + iet_s) / denominator_s;
  return std::clamp(f, 0.0, 1.0);
}

} // namespace detail

/// Probability that a user attended, from the user's time-ordered records.
///
/// f1 is the time between the first and last in-area record during the
/// window, plus one inter-CDR time, over the window length. f2 is the same
/// quantity over the `lookback_days` before the window start, divided by the
/// lookback length (0 without prior in-area records). Both are clamped to
/// [0, 1].
inline PresenceAssessment presence_probability(std::span<CdrRecord const> user_records,
                                               CellSet const &area, TimeWindow window,
                                               int lookback_days, double iet_s)
{
  if (window.begin >= window.end)
    throw InputError("event window must have start before end");
  if (lookback_days < 1)
    throw InputError("lookback must be at least one day");
  auto during = detail::first_last_in(user_records, area, window.begin, window.end);
  if (!during)
    throw InputError("user has no record in the event area during the event");

  PresenceAssessment a;
  if (!user_records.empty())
    a.user = user_records.front().user;
  a.iet_s = iet_s;
  a.first_in = during->first;
  a.last_in = during->last;
  a.f1 = detail::span_fraction(*during, iet_s, static_cast<double>(window.duration()));

  auto const lookback_s = static_cast<Timestamp>(lookback_days) * kSecondsPerDay;
  if (auto before =
          detail::first_last_in(user_records, area, window.begin - lookback_s, window.begin))
    a.f2 = detail::span_fraction(*before, iet_s, static_cast<double>(lookback_s));
  a.p = a.f1 * (1.0 - a.f2);
  return a;
}

struct EstimatorConfig
{
  int lookback_days = 6;
  double iet_fallback_s = kDefaultIetFallbackS;
  bool keep_per_user = false;
};

struct RawAttendance
{
  std::string event_id;
  double radius_m = 0.0;
  std::size_t cell_count = 0;
  std::size_t candidate_count = 0;
  double probability_sum = 0.0;
  std::vector<PresenceAssessment> per_user; // filled when requested
};

/// Sum of presence probabilities over every user with at least one record in
/// the event area during the window. Each user's inter-CDR time is measured
/// over the daily hours of the window.
inline RawAttendance estimate_raw_attendance(CdrStore const &store, GeoPoint const &center,
                                             double radius_m, TimeWindow window,
                                             EstimatorConfig const &cfg = {},
                                             std::string event_id = {})
{
  if (window.begin >= window.end)
    throw InputError("event window must have start before end");
  RawAttendance out;
  out.event_id = std::move(event_id);
  out.radius_m = radius_m;
  auto area = relevant_cells(store.cells(), {center, radius_m});
  out.cell_count = area.size();
  auto candidates = store.users_in(area, window.begin, window.end);
  out.candidate_count = candidates.size();

  // Summation order is fixed by user name so the result does not depend on
  // ingestion order.
  std::sort(candidates.begin(), candidates.end(), [&](UserIndex a, UserIndex b) {
    return store.user_name(a) < store.user_name(b);
  });
  auto const hours = DailyWindow::covering(window);
  for (auto u : candidates) {
    auto recs = store.user_records(u);
    double iet = avg_inter_cdr_time(recs, hours, cfg.iet_fallback_s);
    auto a = presence_probability(recs, area, window, cfg.lookback_days, iet);
    out.probability_sum += a.p;
    if (cfg.keep_per_user)
      out.per_user.push_back(a);
  }
  return out;
}

} // namespace cdrcrowd
