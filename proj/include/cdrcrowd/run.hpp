#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

#include "cdrcrowd/cdr_store.hpp"
#include "cdrcrowd/pipeline.hpp"
#include "cdrcrowd/report.hpp"

namespace cdrcrowd {

struct PipelineConfig
{
  std::string cells_path;
  std::string cdrs_path;
  std::string events_path;
  IngestOptions ingest;
  AnalysisConfig analysis;
  std::filesystem::path out_dir;
};

struct PipelineRun
{
  AnalysisResult result;
  LoadReport ingest;
  std::vector<std::string> written; // file names, in write order
};

inline std::string utc_now_iso8601()
{
  auto now = std::chrono::system_clock::now();
  return csv::format_iso8601(
      std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count());
}

/// Loads the catalogs, analyzes every event and writes:
///   ingest.json, profiles.csv, best_radius.csv, [multi_event.csv,]
///   raw_attendance.json, predictions.csv, error_report.json,
///   error_cdf.csv, manifest.json.
/// Everything except the manifest's `generated_at` is a function of the
/// inputs and the configuration.
inline PipelineRun run_pipeline(PipelineConfig const &cfg)
{
  if (cfg.analysis.pad_s < 0)
    throw StageError("config", "", "padding must be nonnegative");
  for (auto const *p : {&cfg.cells_path, &cfg.cdrs_path, &cfg.events_path})
    if (!std::filesystem::exists(*p))
      throw StageError("load-inputs", "", "input file does not exist: " + *p);

  CellCatalog cells;
  try {
    cells = load_cells(cfg.cells_path);
  } catch (std::exception const &e) {
    throw StageError("load-cells", "", e.what());
  }
  std::vector<EventSpec> events;
  try {
    events = load_events(cfg.events_path);
  } catch (std::exception const &e) {
    throw StageError("load-events", "", e.what());
  }
  std::optional<LoadedCdrs> loaded;
  try {
    loaded.emplace(ingest_cdrs(cfg.cdrs_path, cells, cfg.ingest));
  } catch (std::exception const &e) {
    throw StageError("ingest", "", e.what());
  }
  auto const &store = loaded->store;

  PipelineRun run;
  run.ingest = loaded->report;
  run.result = analyze_events(store, events, cfg.analysis);
  auto const &res = run.result;

  std::filesystem::create_directories(cfg.out_dir);
  auto path = [&](char const *name) {
    run.written.emplace_back(name);
    return (cfg.out_dir / name).string();
  };
  report::write_json(path("ingest.json"), report::ingest_json(run.ingest, store));
  write_file(path("profiles.csv"), [&](std::ostream &o) { report::write_profiles(o, res.events); });
  write_file(path("best_radius.csv"),
             [&](std::ostream &o) { report::write_best_radius(o, res.events); });
  if (cfg.analysis.multi_event)
    write_file(path("multi_event.csv"),
               [&](std::ostream &o) { report::write_multi_event(o, res.venues); });
  report::write_json(path("raw_attendance.json"), report::raw_attendance_json(res.events));
  if (res.evaluation)
    write_file(path("predictions.csv"),
               [&](std::ostream &o) { report::write_predictions(o, *res.evaluation); });
  report::write_json(path("error_report.json"),
                     report::error_report_json(res, cfg.analysis.regression));
  if (res.evaluation)
    write_file(path("error_cdf.csv"),
               [&](std::ostream &o) { report::write_error_cdf(o, res.evaluation->report); });

  report::Json manifest;
  manifest["generated_at"] = utc_now_iso8601();
  manifest["inputs"] = {{"cells", cfg.cells_path}, {"cdrs", cfg.cdrs_path},
                        {"events", cfg.events_path}};
  manifest["config"] = report::analysis_json(cfg.analysis);
  manifest["events"] = events.size();
  manifest["records"] = store.size();
  if (cfg.analysis.multi_event)
    manifest["venues"] = report::venues_json(res.venues);
  run.written.emplace_back("manifest.json");
  manifest["files"] = run.written;
  report::write_json((cfg.out_dir / "manifest.json").string(), manifest);
  return run;
}

} // namespace cdrcrowd
