#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cdrcrowd.hpp"

namespace fs = std::filesystem;
using namespace cdrcrowd;

namespace {

struct Options
{
  std::string cells, cdrs, events, radii, input;
  std::string out = "out";
  std::string scenario = "demo";
  std::uint64_t seed = 1;
  std::optional<int> mcc;
  double r_min = -500.0, r_max = 1500.0, step = 100.0;
  double pad_hours = 2.0;
  int lookback_days = 6;
  double z_threshold = 3.0;
  std::string regression = "piecewise";
  std::size_t knn = 6;
  double range_threshold = 10000.0;
  bool multi_event = false;
  bool train_all = false;
  bool per_user = false;
  unsigned threads = 1;
};

void add_inputs(CLI::App *cmd, Options &o, bool events)
{
  cmd->add_option("--cells", o.cells, "cell catalog CSV")->required();
  cmd->add_option("--cdrs", o.cdrs, "CDR CSV")->required();
  if (events)
    cmd->add_option("--events", o.events, "event catalog CSV")->required();
  cmd->add_option("--mcc", o.mcc, "keep only records with this country code");
}

void add_sweep(CLI::App *cmd, Options &o)
{
  cmd->add_option("--r-min", o.r_min, "smallest swept radius, m")->capture_default_str();
  cmd->add_option("--r-max", o.r_max, "largest swept radius, m")->capture_default_str();
  cmd->add_option("--step", o.step, "radius step, m")->capture_default_str();
  cmd->add_option("--pad-hours", o.pad_hours, "padding before and after each event")
      ->capture_default_str();
  cmd->add_option("--lookback-days", o.lookback_days, "prior days for baselines and f2")
      ->capture_default_str();
  cmd->add_option("--z-threshold", o.z_threshold, "detection threshold, multi-event mode")
      ->capture_default_str();
  cmd->add_flag("--multi-event", o.multi_event, "one radius per venue from all its events");
  cmd->add_option("--threads", o.threads, "worker threads for per-event work")
      ->capture_default_str();
}

void add_regression(CLI::App *cmd, Options &o)
{
  cmd->add_option("--regression", o.regression, "ols, piecewise or range")
      ->check(CLI::IsMember({"ols", "piecewise", "range"}))
      ->capture_default_str();
  cmd->add_option("--knn", o.knn, "neighbours for piecewise regression")->capture_default_str();
  cmd->add_option("--range-threshold", o.range_threshold, "split point for range regression")
      ->capture_default_str();
  cmd->add_flag("--train-all", o.train_all, "also train on unstructured events");
}

void add_out(CLI::App *cmd, Options &o)
{
  cmd->add_option("--out", o.out, "output directory")->capture_default_str();
}

IngestOptions ingest_options(Options const &o)
{
  IngestOptions i;
  if (o.mcc)
    i.mcc_filter = static_cast<std::uint16_t>(*o.mcc);
  return i;
}

RegressionOptions regression_options(Options const &o)
{
  RegressionOptions r;
  r.method = *parse_regression(o.regression);
  r.knn = o.knn;
  r.range_threshold = o.range_threshold;
  r.filter = o.train_all ? TrainingFilter::all : TrainingFilter::structured_only;
  return r;
}

AnalysisConfig analysis_config(Options const &o)
{
  if (o.pad_hours < 0.0)
    throw StageError("config", "", "--pad-hours must be nonnegative");
  if (o.knn < 2)
    throw StageError("config", "", "--knn must be at least 2");
  AnalysisConfig c;
  c.sweep.r_min = o.r_min;
  c.sweep.r_max = o.r_max;
  c.sweep.step = o.step;
  c.sweep.lookback_days = o.lookback_days;
  c.sweep.z_threshold = o.z_threshold;
  c.estimator.lookback_days = o.lookback_days;
  c.pad_s = static_cast<Timestamp>(o.pad_hours * static_cast<double>(kSecondsPerHour));
  c.multi_event = o.multi_event;
  c.regression = regression_options(o);
  c.threads = o.threads;
  try {
    c.sweep.validate();
  } catch (InputError const &e) {
    throw StageError("config", "", e.what());
  }
  return c;
}

template <class F>
auto stage(char const *name, F &&f)
{
  try {
    return f();
  } catch (StageError const &) {
    throw;
  } catch (std::exception const &e) {
    throw StageError(name, "", e.what());
  }
}

void require_file(std::string const &p)
{
  if (!fs::exists(p))
    throw StageError("load-inputs", "", "input file does not exist: " + p);
}

LoadedCdrs load_store(Options const &o)
{
  require_file(o.cells);
  require_file(o.cdrs);
  auto cells = stage("load-cells", [&] { return load_cells(o.cells); });
  return stage("ingest", [&] { return ingest_cdrs(o.cdrs, std::move(cells), ingest_options(o)); });
}

std::vector<EventSpec> load_event_catalog(Options const &o)
{
  require_file(o.events);
  return stage("load-events", [&] { return load_events(o.events); });
}

std::string out_path(Options const &o, char const *name)
{
  fs::create_directories(o.out);
  return (fs::path(o.out) / name).string();
}

void say(std::string const &msg)
{
  std::cerr << msg << '\n';
}

void cmd_simulate(Options const &o)
{
  auto city = stage("simulate", [&] { return scenario::build(o.scenario, o.seed); });
  auto manifest = report::scenario_json(o.scenario, city);
  auto events = city.events;
  auto store = std::move(city).take_store();
  write_file(out_path(o, "cells.csv"), [&](std::ostream &out) { write_cells(out, store.cells()); });
  write_file(out_path(o, "cdrs.csv"), [&](std::ostream &out) { write_cdrs(out, store); });
  write_file(out_path(o, "events.csv"), [&](std::ostream &out) { write_events(out, events); });
  report::write_json(out_path(o, "scenario.json"), manifest);
  say("simulated " + std::to_string(store.size()) + " records, " +
      std::to_string(events.size()) + " events -> " + o.out);
}

void cmd_ingest(Options const &o)
{
  auto loaded = load_store(o);
  report::write_json(out_path(o, "ingest.json"), report::ingest_json(loaded.report, loaded.store));
  write_file(out_path(o, "cdrs.csv"), [&](std::ostream &out) { write_cdrs(out, loaded.store); });
  say("accepted " + std::to_string(loaded.report.rows_accepted) + " of " +
      std::to_string(loaded.report.rows_read) + " rows");
}

void cmd_stats(Options const &o)
{
  auto loaded = load_store(o);
  auto const &store = loaded.store;
  auto j = stage("stats", [&] { return report::stats_json(store); });
  report::write_json(out_path(o, "stats.json"), j);
  if (store.empty())
    return;
  write_file(out_path(o, "daily_cdrs.csv"), [&](std::ostream &out) {
    report::write_percentiles(out, daily_cdr_percentiles(store), "cdrs_per_day");
  });
  write_file(out_path(o, "gyration.csv"), [&](std::ostream &out) {
    report::write_percentiles(out, percentile_table(per_user_gyration(store)), "radius_m");
  });
}

void cmd_best_radius(Options const &o)
{
  auto cfg = analysis_config(o);
  cfg.radius_only = true;
  auto loaded = load_store(o);
  auto events = load_event_catalog(o);
  auto res = analyze_events(loaded.store, events, cfg);
  write_file(out_path(o, "profiles.csv"), [&](std::ostream &out) { report::write_profiles(out, res.events); });
  write_file(out_path(o, "best_radius.csv"),
             [&](std::ostream &out) { report::write_best_radius(out, res.events); });
  if (cfg.multi_event)
    write_file(out_path(o, "multi_event.csv"),
               [&](std::ostream &out) { report::write_multi_event(out, res.venues); });
}

void cmd_estimate(Options const &o)
{
  auto cfg = analysis_config(o);
  cfg.estimator.keep_per_user = o.per_user;
  if (!o.radii.empty()) {
    require_file(o.radii);
    cfg.given_radius_m = stage("load-radii", [&] {
      return report::parse_best_radius(csv::read_file(o.radii), o.radii);
    });
  }
  auto loaded = load_store(o);
  auto events = load_event_catalog(o);
  auto res = analyze_events(loaded.store, events, cfg);
  report::write_json(out_path(o, "raw_attendance.json"), report::raw_attendance_json(res.events, &loaded.store));
}

void cmd_evaluate(Options const &o)
{
  auto opt = regression_options(o);
  require_file(o.input);
  auto eval = stage("load-raw", [&] {
    return report::parse_raw_attendance(report::read_json(o.input), o.input);
  });
  AnalysisResult res;
  evaluate_into(res, eval, opt);
  if (res.evaluation) {
    write_file(out_path(o, "predictions.csv"),
               [&](std::ostream &out) { report::write_predictions(out, *res.evaluation); });
    write_file(out_path(o, "error_cdf.csv"),
               [&](std::ostream &out) { report::write_error_cdf(out, res.evaluation->report); });
  }
  report::write_json(out_path(o, "error_report.json"), report::error_report_json(res, opt));
  if (!res.evaluation)
    say("no evaluation: " + res.evaluation_note);
}

void cmd_run(Options const &o)
{
  PipelineConfig p;
  p.cells_path = o.cells;
  p.cdrs_path = o.cdrs;
  p.events_path = o.events;
  p.ingest = ingest_options(o);
  p.analysis = analysis_config(o);
  p.out_dir = o.out;
  auto run = run_pipeline(p);
  say("processed " + std::to_string(run.result.events.size()) + " events -> " + o.out);
  if (run.result.evaluation)
    say("prediction r2 " + csv::format_double(run.result.evaluation->prediction_r2) +
        ", median pct err " + csv::format_double(run.result.evaluation->report.median_pct));
  else if (!run.result.evaluation_note.empty())
    say("no evaluation: " + run.result.evaluation_note);
}

} // namespace

int main(int argc, char **argv)
{
  CLI::App app{"Event attendance estimation from call detail records"};
  app.require_subcommand(1);
  Options o;

  auto *sim = app.add_subcommand("simulate", "write a synthetic city and its events");
  std::string names;
  for (auto n : scenario::names())
    names += (names.empty() ? "" : ", ") + std::string(n);
  sim->add_option("--scenario", o.scenario, names)->capture_default_str();
  sim->add_option("--seed", o.seed, "random seed")->capture_default_str();
  add_out(sim, o);

  auto *ingest = app.add_subcommand("ingest", "validate CDRs and write a clean copy");
  add_inputs(ingest, o, false);
  add_out(ingest, o);

  auto *stats = app.add_subcommand("stats", "dataset mobility statistics");
  add_inputs(stats, o, false);
  add_out(stats, o);

  auto *radius = app.add_subcommand("best-radius", "radius sweep and best radius per event");
  add_inputs(radius, o, true);
  add_sweep(radius, o);
  add_out(radius, o);

  auto *estimate = app.add_subcommand("estimate", "raw attendance per event");
  add_inputs(estimate, o, true);
  estimate->add_option("--radii", o.radii, "best_radius.csv from the best-radius stage");
  estimate->add_flag("--per-user", o.per_user, "include each candidate's f1, f2 and p");
  add_sweep(estimate, o);
  add_out(estimate, o);

  auto *evaluate = app.add_subcommand("evaluate", "leave-one-out regression and error report");
  evaluate->add_option("--input", o.input, "raw_attendance.json from the estimate stage")
      ->required();
  add_regression(evaluate, o);
  add_out(evaluate, o);

  auto *run = app.add_subcommand("run", "full pipeline");
  add_inputs(run, o, true);
  add_sweep(run, o);
  add_regression(run, o);
  add_out(run, o);

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed())
      cmd_simulate(o);
    else if (ingest->parsed())
      cmd_ingest(o);
    else if (stats->parsed())
      cmd_stats(o);
    else if (radius->parsed())
      cmd_best_radius(o);
    else if (estimate->parsed())
      cmd_estimate(o);
    else if (evaluate->parsed())
      cmd_evaluate(o);
    else if (run->parsed())
      cmd_run(o);
  } catch (std::exception const &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
