#pragma once

#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "cdrcrowd/cdr_store.hpp"
#include "cdrcrowd/errors.hpp"
#include "cdrcrowd/geo.hpp"
#include "cdrcrowd/types.hpp"

namespace cdrcrowd {

struct SweepConfig
{
  double r_min = -500.0;
  double r_max = 1500.0;
  double step = 100.0;
  int lookback_days = 6;
  double z_threshold = 3.0;

  void validate() const
  {
    if (!(r_min < r_max))
      throw InputError("sweep: r_min must be below r_max");
    if (!(step > 0.0))
      throw InputError("sweep: step must be positive");
    if (lookback_days < 1)
      throw InputError("sweep: lookback must be at least one day");
  }

  // r_min, r_min + step, ... up to and including r_max.
  [[nodiscard]] std::vector<double> radii() const
  {
    validate();
    std::vector<double> out;
    auto const n = static_cast<long>(std::floor((r_max - r_min) / step + 1e-9));
    for (long k = 0; k <= n; ++k)
      out.push_back(r_min + static_cast<double>(k) * step);
    return out;
  }
};

struct RadiusProfile
{
  double radius_m = 0.0;
  std::size_t cell_count = 0;
  double coverage_sum_m = 0.0; // sum of coverage radii of the relevant cells
  std::size_t user_count = 0;  // x_k
  std::vector<std::size_t> baseline_counts;
  double baseline_mean = 0.0;
  double baseline_std = 0.0;
  std::optional<double> z_score;
  std::optional<double> normalized_z;
  int detected_events = 0;
};

struct MeanStd
{
  double mean = 0.0;
  double stddev = 0.0; // sample (n - 1) standard deviation, 0 when n < 2
};

inline MeanStd mean_sample_std(std::span<double const> v)
{
  MeanStd out;
  if (v.empty())
    return out;
  auto const n = static_cast<double>(v.size());
  out.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  if (v.size() < 2)
    return out;
  double ss = 0.0;
  for (auto x : v)
    ss += (x - out.mean) * (x - out.mean);
  out.stddev = std::sqrt(ss / (n - 1.0));
  return out;
}

/// Relevant-cell sets for every radius of a sweep around one center.
/// Reusable across all events held at that center.
class RadiusSweep
{
public:
  RadiusSweep(CellCatalog const &cells, GeoPoint const &center, SweepConfig const &cfg)
      : cfg_(cfg)
  {
    CellDistances dist(cells, center);
    for (double r : cfg.radii()) {
      Ring ring{r, dist.relevant(r), 0.0};
      for (auto c : ring.cells)
        ring.coverage_sum += cells[c].coverage_radius_m;
      rings_.push_back(std::move(ring));
    }
  }

  [[nodiscard]] std::size_t size() const { return rings_.size(); }
  [[nodiscard]] double radius(std::size_t k) const { return rings_[k].radius; }
  [[nodiscard]] CellSet const &cells(std::size_t k) const { return rings_[k].cells; }
  [[nodiscard]] SweepConfig const &config() const { return cfg_; }

  // z-score profile of one (padded) event window. Baselines are the same
  // time-of-day window on each of the lookback days before the event.
  [[nodiscard]] std::vector<RadiusProfile> profile(CdrStore const &store, TimeWindow window) const
  {
    if (window.begin >= window.end)
      throw InputError("event window must have start before end");
    std::vector<RadiusProfile> out;
    out.reserve(rings_.size());
    for (auto const &ring : rings_) {
      RadiusProfile p;
      p.radius_m = ring.radius;
      p.cell_count = ring.cells.size();
      p.coverage_sum_m = ring.coverage_sum;
      if (!ring.cells.empty()) {
        p.user_count = store.count_users(ring.cells, window.begin, window.end);
        std::vector<double> ys;
        for (int i = 1; i <= cfg_.lookback_days; ++i) {
          auto w = window.shifted(-static_cast<Timestamp>(i) * kSecondsPerDay);
          auto y = store.count_users(ring.cells, w.begin, w.end);
          p.baseline_counts.push_back(y);
          ys.push_back(static_cast<double>(y));
        }
        auto ms = mean_sample_std(ys);
        p.baseline_mean = ms.mean;
        p.baseline_std = ms.stddev;
        if (ms.stddev > 0.0) {
          p.z_score = (static_cast<double>(p.user_count) - ms.mean) / ms.stddev;
          p.normalized_z = *p.z_score / ring.coverage_sum;
        }
      }
      out.push_back(std::move(p));
    }
    return out;
  }

private:
  struct Ring
  {
    double radius;
    CellSet cells;
    double coverage_sum;
  };
  SweepConfig cfg_;
  std::vector<Ring> rings_;
};

inline std::vector<RadiusProfile> z_scores_by_radius(CdrStore const &store, GeoPoint const &center,
                                                     TimeWindow window, SweepConfig const &cfg)
{
  return RadiusSweep(store.cells(), center, cfg).profile(store, window);
}

// sum(r * w) / sum(w); throws NoEventSignal when the weights sum to zero.
inline double weighted_radius(std::span<double const> radii, std::span<double const> weights)
{
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < radii.size(); ++k) {
    num += radii[k] * weights[k];
    den += weights[k];
  }
  if (!(den > 0.0))
    throw NoEventSignal();
  return num / den;
}

/// Mean of the swept radii weighted by their normalized z-scores. Undefined
/// scores are skipped and negative ones count as zero.
inline double best_radius_single(std::span<RadiusProfile const> profiles)
{
  std::vector<double> radii, weights;
  for (auto const &p : profiles) {
    if (!p.normalized_z)
      continue;
    radii.push_back(p.radius_m);
    weights.push_back(std::max(0.0, *p.normalized_z));
  }
  return weighted_radius(radii, weights);
}

struct MultiEventRadius
{
  double best_radius_m = 0.0;
  // One row per radius; detected_events holds e_k.
  std::vector<RadiusProfile> detections;
  // Full profile of each training event, in input order.
  std::vector<std::vector<RadiusProfile>> per_event;
};

/// Radius for a venue from several known events held there: each radius is
/// weighted by how many of the events it flags as outliers (z above the
/// threshold).
inline MultiEventRadius best_radius_multi(CdrStore const &store, GeoPoint const &center,
                                          std::span<TimeWindow const> training_windows,
                                          SweepConfig const &cfg)
{
  if (training_windows.empty())
    throw InputError("multi-event radius needs at least one training event");
  RadiusSweep sweep(store.cells(), center, cfg);
  MultiEventRadius out;
  out.detections.resize(sweep.size());
  for (std::size_t k = 0; k < sweep.size(); ++k) {
    out.detections[k].radius_m = sweep.radius(k);
    out.detections[k].cell_count = sweep.cells(k).size();
  }
  for (auto const &w : training_windows) {
    auto prof = sweep.profile(store, w);
    for (std::size_t k = 0; k < prof.size(); ++k)
      if (prof[k].z_score && *prof[k].z_score > cfg.z_threshold)
        ++out.detections[k].detected_events;
    out.per_event.push_back(std::move(prof));
  }
  std::vector<double> radii, weights;
  for (auto const &d : out.detections) {
    radii.push_back(d.radius_m);
    weights.push_back(static_cast<double>(d.detected_events));
  }
  try {
    out.best_radius_m = weighted_radius(radii, weights);
  } catch (NoEventSignal const &) {
    throw NoEventDetected();
  }
  return out;
}

} // namespace cdrcrowd
