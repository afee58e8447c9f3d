#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "cdrcrowd/attendance.hpp"
#include "cdrcrowd/cdr_store.hpp"
#include "cdrcrowd/radius.hpp"
#include "cdrcrowd/regression.hpp"
#include "cdrcrowd/types.hpp"

namespace cdrcrowd {

struct AnalysisConfig
{
  SweepConfig sweep;
  Timestamp pad_s = 2 * kSecondsPerHour;
  EstimatorConfig estimator;
  RegressionOptions regression;
  bool multi_event = false;
  // Used when no radius shows an event signal.
  double default_radius_m = kNaiveRadiusM;
  double naive_radius_m = kNaiveRadiusM;
  unsigned threads = 1;
  // Radii fixed by the caller, by event id; those events skip the sweep.
  std::map<std::string, double> given_radius_m;
  // Stop after the radius stage (no attendance, no regression).
  bool radius_only = false;
};

enum class RadiusSource
{
  single,
  multi,
  fallback,
  given
};

inline std::string_view to_string(RadiusSource s)
{
  switch (s) {
  case RadiusSource::single: return "single";
  case RadiusSource::multi: return "multi";
  case RadiusSource::fallback: return "default";
  case RadiusSource::given: return "given";
  }
  return "?";
}

struct EventAnalysis
{
  EventSpec event;
  TimeWindow window; // padded
  std::vector<RadiusProfile> profile;
  std::optional<double> single_radius_m;
  std::optional<double> multi_radius_m;
  double radius_m = 0.0;
  RadiusSource radius_source = RadiusSource::fallback;
  RawAttendance raw;
  std::size_t naive = 0;
};

struct VenueRadius
{
  std::string venue_id;
  std::vector<std::string> training_events;
  std::optional<MultiEventRadius> result; // empty when no event was detected
};

struct AnalysisResult
{
  std::vector<EventAnalysis> events; // catalog order
  std::vector<VenueRadius> venues;   // multi-event mode only, sorted by venue id
  std::optional<Evaluation> evaluation;
  std::string evaluation_note; // why evaluation is missing, if it is
};

// Runs fn(i) for i in [0, n) on up to `threads` workers; the first exception
// is rethrown after all workers stop.
inline void parallel_for(std::size_t n, unsigned threads, std::function<void(std::size_t)> const &fn)
{
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i)
      fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> workers;
    for (unsigned t = 0; t < std::min<std::size_t>(threads, n); ++t)
      workers.emplace_back([&] {
        for (;;) {
          auto i = next.fetch_add(1);
          if (i >= n)
            return;
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error)
              error = std::current_exception();
            next = n;
          }
        }
      });
  }
  if (error)
    std::rethrow_exception(error);
}

/// Error raised while processing a specific event; names the stage.
class StageError : public Error
{
public:
  StageError(std::string stage, std::string event_id, std::string const &what)
      : Error(stage + " failed" + (event_id.empty() ? "" : " for event " + event_id) + ": " + what),
        stage_(std::move(stage)), event_id_(std::move(event_id))
  {}
  [[nodiscard]] std::string const &stage() const { return stage_; }
  [[nodiscard]] std::string const &event_id() const { return event_id_; }

private:
  std::string stage_;
  std::string event_id_;
};

/// Leave-one-out evaluation, or the reason it could not run.
inline void evaluate_into(AnalysisResult &out, std::span<EvalEvent const> eval,
                          RegressionOptions const &opt)
{
  try {
    out.evaluation = leave_one_out_eval(eval, opt);
  } catch (InputError const &e) {
    out.evaluation_note = e.what();
  }
}

/// Best radius, raw attendance and naive count for every event, followed by
/// a leave-one-out regression over the events with ground truth.
inline AnalysisResult analyze_events(CdrStore const &store, std::span<EventSpec const> events,
                                     AnalysisConfig const &cfg)
{
  cfg.sweep.validate();
  if (cfg.pad_s < 0)
    throw InputError("padding must be nonnegative");
  AnalysisResult out;
  out.events.resize(events.size());
  for (auto const &ev : events) {
    try {
      ev.validate();
    } catch (std::exception const &e) {
      throw StageError("validate", ev.event_id, e.what());
    }
  }

  std::map<std::string, std::size_t> venue_slot;
  if (cfg.multi_event) {
    std::map<std::string, std::vector<std::size_t>> by_venue;
    for (std::size_t i = 0; i < events.size(); ++i)
      by_venue[events[i].venue_id].push_back(i);
    for (auto const &[venue, idx] : by_venue) {
      venue_slot[venue] = out.venues.size();
      VenueRadius v;
      v.venue_id = venue;
      for (auto i : idx)
        v.training_events.push_back(events[i].event_id);
      out.venues.push_back(std::move(v));
    }
    parallel_for(out.venues.size(), cfg.threads, [&](std::size_t k) {
      auto &v = out.venues[k];
      std::vector<TimeWindow> windows;
      GeoPoint center{};
      for (auto const &ev : events)
        if (ev.venue_id == v.venue_id) {
          windows.push_back(ev.padded(cfg.pad_s));
          center = ev.center;
        }
      try {
        v.result = best_radius_multi(store, center, windows, cfg.sweep);
      } catch (NoEventDetected const &) {
        v.result.reset();
      }
    });
  }

  parallel_for(events.size(), cfg.threads, [&](std::size_t i) {
    auto const &ev = events[i];
    auto &a = out.events[i];
    a.event = ev;
    std::string stage = "best-radius";
    try {
      a.window = ev.padded(cfg.pad_s);
      if (auto it = cfg.given_radius_m.find(ev.event_id); it != cfg.given_radius_m.end()) {
        a.radius_m = it->second;
        a.radius_source = RadiusSource::given;
      } else {
        a.profile = z_scores_by_radius(store, ev.center, a.window, cfg.sweep);
        try {
          a.single_radius_m = best_radius_single(a.profile);
        } catch (NoEventSignal const &) {
        }
        if (cfg.multi_event) {
          auto const &v = out.venues[venue_slot.at(ev.venue_id)];
          if (v.result)
            a.multi_radius_m = v.result->best_radius_m;
        }
        if (a.multi_radius_m) {
          a.radius_m = *a.multi_radius_m;
          a.radius_source = RadiusSource::multi;
        } else if (a.single_radius_m) {
          a.radius_m = *a.single_radius_m;
          a.radius_source = RadiusSource::single;
        } else {
          a.radius_m = cfg.default_radius_m;
          a.radius_source = RadiusSource::fallback;
        }
      }
      if (cfg.radius_only)
        return;
      stage = "estimate";
      a.raw = estimate_raw_attendance(store, ev.center, a.radius_m, a.window, cfg.estimator,
                                      ev.event_id);
      a.naive = naive_count(store, ev.center, a.window, cfg.naive_radius_m);
    } catch (std::exception const &e) {
      throw StageError(stage, ev.event_id, e.what());
    }
  });
  if (cfg.radius_only)
    return out;

  std::vector<EvalEvent> eval;
  for (auto const &a : out.events)
    eval.push_back({a.event.event_id, a.raw.probability_sum, a.event.ground_truth,
                    a.event.category});
  evaluate_into(out, eval, cfg.regression);
  return out;
}

} // namespace cdrcrowd
