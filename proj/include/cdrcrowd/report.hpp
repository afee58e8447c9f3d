#pragma once

// Reading and writing the pipeline's intermediate tables. Requires
// nlohmann/json (single header `json.hpp`) on the include path.

#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cdrcrowd/cdr_store.hpp"
#include "cdrcrowd/csv.hpp"
#include "cdrcrowd/mobility_stats.hpp"
#include "cdrcrowd/pipeline.hpp"
#include "cdrcrowd/regression.hpp"
#include "cdrcrowd/simulator.hpp"

namespace cdrcrowd::report {

using Json = nlohmann::ordered_json;

inline constexpr std::string_view kProfileHeader =
    "event_id,radius_m,cell_count,coverage_sum_m,user_count,baseline_mean,baseline_std,z_score,"
    "normalized_z";
inline constexpr std::string_view kBestRadiusHeader =
    "event_id,venue_id,single_radius_m,multi_radius_m,radius_m,source";
inline constexpr std::string_view kMultiEventHeader = "venue_id,radius_m,cell_count,detected_events";
inline constexpr std::string_view kPredictionHeader =
    "event_id,raw,predicted,ground_truth,abs_err,pct_err,in_training";

namespace detail {

inline std::string opt(std::optional<double> v)
{
  return v ? csv::format_double(*v) : std::string();
}

inline Json opt_json(std::optional<double> v)
{
  return v ? Json(*v) : Json(nullptr);
}

inline Json finite_json(double v)
{
  return std::isfinite(v) ? Json(v) : Json(nullptr);
}

} // namespace detail

inline void write_profiles(std::ostream &out, std::span<EventAnalysis const> events)
{
  out << kProfileHeader << '\n';
  for (auto const &a : events)
    for (auto const &p : a.profile)
      out << a.event.event_id << ',' << csv::format_double(p.radius_m) << ',' << p.cell_count
          << ',' << csv::format_double(p.coverage_sum_m) << ',' << p.user_count << ','
          << csv::format_double(p.baseline_mean) << ',' << csv::format_double(p.baseline_std)
          << ',' << detail::opt(p.z_score) << ',' << detail::opt(p.normalized_z) << '\n';
}

inline void write_best_radius(std::ostream &out, std::span<EventAnalysis const> events)
{
  out << kBestRadiusHeader << '\n';
  for (auto const &a : events)
    out << a.event.event_id << ',' << a.event.venue_id << ',' << detail::opt(a.single_radius_m)
        << ',' << detail::opt(a.multi_radius_m) << ',' << csv::format_double(a.radius_m) << ','
        << to_string(a.radius_source) << '\n';
}

/// event_id -> radius_m from a best-radius table.
inline std::map<std::string, double> parse_best_radius(std::string_view buffer,
                                                       std::string const &source = "<radii>")
{
  csv::LineReader lines(buffer);
  std::string_view line;
  if (!lines.next(line))
    throw InputError(source + ": empty file");
  csv::expect_header(line, kBestRadiusHeader, source);
  std::map<std::string, double> out;
  std::vector<std::string_view> f;
  while (lines.next(line)) {
    if (csv::trim(line).empty())
      continue;
    csv::split(line, f);
    auto where = source + ":" + std::to_string(lines.line_number());
    if (f.size() != 6)
      throw InputError(where + ": expected 6 fields");
    auto r = csv::parse_number<double>(f[4]);
    if (!r)
      throw InputError(where + ": bad radius");
    if (!out.emplace(std::string(f[0]), *r).second)
      throw InputError(where + ": duplicate event id");
  }
  return out;
}

inline void write_multi_event(std::ostream &out, std::span<VenueRadius const> venues)
{
  out << kMultiEventHeader << '\n';
  for (auto const &v : venues) {
    if (!v.result)
      continue;
    for (auto const &d : v.result->detections)
      out << v.venue_id << ',' << csv::format_double(d.radius_m) << ',' << d.cell_count << ','
          << d.detected_events << '\n';
  }
}

inline Json venues_json(std::span<VenueRadius const> venues)
{
  Json arr = Json::array();
  for (auto const &v : venues) {
    Json j;
    j["venue_id"] = v.venue_id;
    j["training_events"] = v.training_events;
    j["best_radius_m"] = v.result ? Json(v.result->best_radius_m) : Json(nullptr);
    arr.push_back(std::move(j));
  }
  return arr;
}

/// One object per event: the input of the evaluate stage. Per-user detail is
/// included for events that kept it, with user names taken from `store`.
inline Json raw_attendance_json(std::span<EventAnalysis const> events,
                                CdrStore const *store = nullptr)
{
  Json arr = Json::array();
  for (auto const &a : events) {
    Json j;
    j["event_id"] = a.event.event_id;
    j["venue_id"] = a.event.venue_id;
    j["category"] = std::string(to_string(a.event.category));
    j["ground_truth"] = detail::opt_json(a.event.ground_truth);
    j["window_start"] = csv::format_iso8601(a.window.begin);
    j["window_end"] = csv::format_iso8601(a.window.end);
    j["radius_m"] = a.radius_m;
    j["radius_source"] = std::string(to_string(a.radius_source));
    j["cell_count"] = a.raw.cell_count;
    j["candidate_users"] = a.raw.candidate_count;
    j["raw_attendance"] = a.raw.probability_sum;
    j["naive_count"] = a.naive;
    if (store && !a.raw.per_user.empty()) {
      Json users = Json::array();
      for (auto const &p : a.raw.per_user)
        users.push_back({{"user_id", store->user_name(p.user)},
                         {"iet_s", p.iet_s},
                         {"first_in", csv::format_iso8601(p.first_in)},
                         {"last_in", csv::format_iso8601(p.last_in)},
                         {"f1", p.f1},
                         {"f2", p.f2},
                         {"p", p.p}});
      j["per_user"] = users;
    }
    arr.push_back(std::move(j));
  }
  return arr;
}

inline std::vector<EvalEvent> parse_raw_attendance(Json const &j, std::string const &source)
{
  if (!j.is_array())
    throw InputError(source + ": expected a JSON array of events");
  std::vector<EvalEvent> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    auto const &e = j[i];
    auto where = source + "[" + std::to_string(i) + "]";
    try {
      EvalEvent ev;
      ev.event_id = e.at("event_id").get<std::string>();
      ev.raw = e.at("raw_attendance").get<double>();
      if (e.contains("ground_truth") && !e.at("ground_truth").is_null())
        ev.truth = e.at("ground_truth").get<double>();
      if (e.contains("category")) {
        auto c = parse_category(e.at("category").get<std::string>());
        if (!c)
          throw InputError("unknown category");
        ev.category = *c;
      }
      out.push_back(std::move(ev));
    } catch (Json::exception const &x) {
      throw InputError(where + ": " + x.what());
    } catch (InputError const &x) {
      throw InputError(where + ": " + x.what());
    }
  }
  return out;
}

inline void write_predictions(std::ostream &out, Evaluation const &ev)
{
  out << kPredictionHeader << '\n';
  for (auto const &p : ev.predictions)
    out << p.event_id << ',' << csv::format_double(p.raw) << ',' << csv::format_double(p.predicted)
        << ',' << detail::opt(p.truth) << ',' << detail::opt(p.abs_err) << ','
        << detail::opt(p.pct_err) << ',' << (p.in_training ? 1 : 0) << '\n';
}

inline Json line_json(FitLine const &f)
{
  return Json{{"slope", f.slope}, {"intercept", f.intercept}, {"r", f.r}, {"r2", f.r2}, {"n", f.n}};
}

inline Json error_report_json(AnalysisResult const &res, RegressionOptions const &opt)
{
  Json j;
  j["method"] = std::string(to_string(opt.method));
  j["knn"] = opt.knn;
  j["range_threshold"] = opt.range_threshold;
  j["training_filter"] = opt.filter == TrainingFilter::all ? "all" : "structured";
  if (!res.evaluation) {
    j["evaluated"] = false;
    j["note"] = res.evaluation_note;
    return j;
  }
  auto const &ev = *res.evaluation;
  auto const &r = ev.report;
  j["evaluated"] = true;
  j["events_compared"] = r.count;
  j["events_with_positive_truth"] = r.pct_count;
  j["zero_truth_excluded"] = r.zero_truth_excluded;
  j["mean_abs_err"] = r.mean_abs;
  j["median_abs_err"] = r.median_abs;
  j["mean_pct_err"] = detail::finite_json(r.mean_pct);
  j["median_pct_err"] = detail::finite_json(r.median_pct);
  j["pct_err_skewness"] = detail::opt_json(r.skewness);
  j["prediction_r"] = detail::finite_json(ev.prediction_r);
  j["prediction_r2"] = detail::finite_json(ev.prediction_r2);
  j["global_fit"] = ev.global_fit ? line_json(*ev.global_fit) : Json(nullptr);
  if (ev.range_fit) {
    Json rf;
    rf["threshold"] = ev.range_fit->threshold;
    rf["small"] = ev.range_fit->small ? line_json(*ev.range_fit->small) : Json(nullptr);
    rf["large"] = ev.range_fit->large ? line_json(*ev.range_fit->large) : Json(nullptr);
    j["range_fit"] = rf;
  }
  return j;
}

inline void write_error_cdf(std::ostream &out, ErrorReport const &r)
{
  out << "pct_err,cumulative_fraction\n";
  for (auto const &[x, f] : r.error_cdf)
    out << csv::format_double(x) << ',' << csv::format_double(f) << '\n';
}

inline Json ingest_json(LoadReport const &r, CdrStore const &store)
{
  Json j;
  j["rows_read"] = r.rows_read;
  j["accepted"] = r.rows_accepted;
  j["filtered_mcc"] = r.rows_filtered;
  j["rejected_malformed"] = r.rejected_malformed;
  j["rejected_bad_timestamp"] = r.rejected_bad_timestamp;
  j["rejected_unknown_cell"] = r.rejected_unknown_cell;
  j["rejected_out_of_span"] = r.rejected_out_of_span;
  j["sample_errors"] = r.sample_errors;
  j["users"] = store.user_count();
  j["cells"] = store.cells().size();
  j["span_start"] = csv::format_iso8601(store.span().begin);
  j["span_end"] = csv::format_iso8601(store.span().end);
  return j;
}

inline void write_percentiles(std::ostream &out, std::span<PercentilePoint const> pts,
                              std::string_view value_name)
{
  out << "percentile," << value_name << '\n';
  for (auto const &p : pts)
    out << csv::format_double(p.percentile) << ',' << csv::format_double(p.value) << '\n';
}

inline Json percentiles_json(std::span<PercentilePoint const> pts)
{
  Json arr = Json::array();
  for (auto const &p : pts)
    arr.push_back({{"percentile", p.percentile}, {"value", p.value}});
  return arr;
}

/// Dataset-level mobility statistics: daily records per user, per-user
/// inter-record time quartiles and their population means, and radius of
/// gyration percentiles.
inline Json stats_json(CdrStore const &store)
{
  Json j;
  j["records"] = store.size();
  j["users"] = store.user_count();
  j["days"] = dataset_days(store);
  if (store.empty())
    return j;
  j["daily_cdrs_percentiles"] = percentiles_json(daily_cdr_percentiles(store));

  std::vector<double> q1s, medians, q3s, all_gaps;
  for (std::size_t u = 0; u < store.user_count(); ++u) {
    auto recs = store.user_records(static_cast<UserIndex>(u));
    auto gaps = inter_cdr_times(recs, std::nullopt);
    if (gaps.empty())
      continue;
    std::vector<double> g(gaps.begin(), gaps.end());
    auto s = quartile_summary(g);
    q1s.push_back(s.q1);
    medians.push_back(s.median);
    q3s.push_back(s.q3);
  }
  Json iet;
  iet["users_with_gaps"] = medians.size();
  if (!medians.empty()) {
    for (auto const &[name, v] : {std::pair{"q1", &q1s}, std::pair{"median", &medians},
                                  std::pair{"q3", &q3s}}) {
      auto m = population_median_stats(*v);
      iet[name] = {{"arithmetic_mean_s", m.arithmetic},
                   {"geometric_mean_s", detail::opt_json(m.geometric)}};
    }
  }
  j["inter_cdr_time"] = iet;
  j["gyration_percentiles_m"] = percentiles_json(percentile_table(per_user_gyration(store)));
  return j;
}

inline Json sweep_json(SweepConfig const &s)
{
  return {{"r_min", s.r_min},
          {"r_max", s.r_max},
          {"step", s.step},
          {"lookback_days", s.lookback_days},
          {"z_threshold", s.z_threshold}};
}

inline Json analysis_json(AnalysisConfig const &c)
{
  Json j;
  j["sweep"] = sweep_json(c.sweep);
  j["pad_hours"] = static_cast<double>(c.pad_s) / static_cast<double>(kSecondsPerHour);
  j["lookback_days"] = c.estimator.lookback_days;
  j["iet_fallback_s"] = c.estimator.iet_fallback_s;
  j["multi_event"] = c.multi_event;
  j["default_radius_m"] = c.default_radius_m;
  j["naive_radius_m"] = c.naive_radius_m;
  j["regression"] = std::string(to_string(c.regression.method));
  j["knn"] = c.regression.knn;
  j["range_threshold"] = c.regression.range_threshold;
  return j;
}

inline void write_json(std::string const &path, Json const &j)
{
  write_file(path, [&](std::ostream &o) { o << j.dump(2) << '\n'; });
}

inline Json read_json(std::string const &path)
{
  auto text = csv::read_file(path);
  try {
    return Json::parse(text);
  } catch (Json::exception const &e) {
    throw InputError(path + ": " + e.what());
  }
}

/// What a simulated city was built from, and the truth behind each event.
inline Json scenario_json(std::string const &name, sim::SyntheticCity const &city)
{
  auto const &c = city.config;
  Json j;
  j["scenario"] = name;
  j["seed"] = c.rng_seed;
  Json city_j;
  city_j["south_west"] = {c.south_west.lat, c.south_west.lon};
  city_j["north_east"] = {c.north_east.lat, c.north_east.lon};
  Json layers = Json::array();
  for (auto const &l : c.layers) {
    Json lj{{"count", l.count},
            {"min_radius_m", l.min_radius_m},
            {"max_radius_m", l.max_radius_m},
            {"traffic_share", l.traffic_share}};
    lj["activity_noise"] = detail::opt_json(l.activity_noise);
    layers.push_back(std::move(lj));
  }
  city_j["layers"] = layers;
  city_j["population"] = c.population;
  city_j["carrier_share"] = c.carrier_share;
  city_j["median_daily_cdrs"] = c.median_daily_cdrs;
  city_j["daily_cdrs_sigma"] = c.daily_cdrs_sigma;
  city_j["errand_fraction"] = c.errand_fraction;
  city_j["cell_day_noise"] = c.cell_day_noise;
  city_j["start"] = csv::format_iso8601(c.start);
  city_j["days"] = c.days;
  Json hot = Json::array();
  for (auto const &h : c.hotspots)
    hot.push_back({{"lat", h.center.lat},
                   {"lon", h.center.lon},
                   {"radius_m", h.radius_m},
                   {"residents", h.residents},
                   {"workers", h.workers}});
  city_j["hotspots"] = hot;
  j["city"] = city_j;
  j["cells"] = city.cells.size();
  j["users"] = city.users.size();
  j["records"] = city.records.size();
  Json events = Json::array();
  for (auto const &p : city.planted) {
    auto const &e = p.event;
    events.push_back({{"event_id", e.event_id},
                      {"venue_id", e.venue_id},
                      {"lat", e.center.lat},
                      {"lon", e.center.lon},
                      {"extent_m", e.extent_m},
                      {"start", csv::format_iso8601(e.start)},
                      {"end", csv::format_iso8601(e.end)},
                      {"true_attendance", e.true_attendance},
                      {"usage_multiplier", e.usage_multiplier},
                      {"confounder", e.confounder},
                      {"injected_users", p.injected_users},
                      {"attendee_cells", p.attendee_cell_count}});
  }
  j["events"] = events;
  return j;
}

} // namespace cdrcrowd::report
