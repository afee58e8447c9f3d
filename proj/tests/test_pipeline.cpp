#include <gtest/gtest.h>

#include <filesystem>

#include "support.hpp"

using namespace cdrcrowd;
using namespace testing_support;
namespace fs = std::filesystem;

namespace {

sim::SyntheticCity const &demo_city()
{
  static auto const city = scenario::demo(7);
  return city;
}

PipelineConfig config_for(TempDir const &in, fs::path out)
{
  PipelineConfig p;
  p.cells_path = in / "cells.csv";
  p.cdrs_path = in / "cdrs.csv";
  p.events_path = in / "events.csv";
  p.out_dir = std::move(out);
  return p;
}

} // namespace

TEST(Pipeline, EmptyCatalogSucceedsWithAnEmptyReport)
{
  TempDir dir("empty");
  write_inputs(demo_city(), {}, dir);
  auto run = run_pipeline(config_for(dir, dir.path / "out"));
  EXPECT_TRUE(run.result.events.empty());
  EXPECT_FALSE(run.result.evaluation);
  EXPECT_FALSE(run.result.evaluation_note.empty());
  EXPECT_TRUE(fs::exists(dir.path / "out" / "manifest.json"));
  EXPECT_TRUE(fs::exists(dir.path / "out" / "error_report.json"));
  EXPECT_FALSE(fs::exists(dir.path / "out" / "predictions.csv"));
}

TEST(Pipeline, OneEventWithThreeTrainingEventsMatchesTheManualChain)
{
  auto events = demo_city().events;
  events.resize(4);
  events[3].ground_truth.reset(); // the event to estimate
  TempDir dir("chain");
  write_inputs(demo_city(), events, dir);
  auto cfg = config_for(dir, dir.path / "out");
  cfg.analysis.regression.method = RegressionMethod::ols;
  auto run = run_pipeline(cfg);

  auto store = demo_city().store();
  SweepConfig sweep;
  std::vector<TrainingPair> train;
  double target_raw = 0;
  for (auto const &e : events) {
    TimeWindow w{e.scheduled_start - 2 * kSecondsPerHour, e.scheduled_end + 2 * kSecondsPerHour};
    auto prof = z_scores_by_radius(store, e.center, w, sweep);
    double r = best_radius_single(prof);
    auto raw = estimate_raw_attendance(store, e.center, r, w).probability_sum;
    if (e.ground_truth)
      train.push_back({raw, *e.ground_truth, e.event_id});
    else
      target_raw = raw;
  }
  ASSERT_EQ(train.size(), 3u);
  double want = fit_ols(train).predict(target_raw);

  ASSERT_TRUE(run.result.evaluation);
  auto const &preds = run.result.evaluation->predictions;
  ASSERT_EQ(preds.size(), 4u);
  EXPECT_EQ(preds[3].event_id, events[3].event_id);
  EXPECT_FALSE(preds[3].truth);
  EXPECT_DOUBLE_EQ(preds[3].raw, target_raw);
  EXPECT_NEAR(preds[3].predicted, want, 1e-9 * std::abs(want));
  EXPECT_NE(slurp(dir / "out/predictions.csv").find(events[3].event_id), std::string::npos);
}

TEST(Pipeline, RerunsAreByteIdenticalExceptTheTimestamp)
{
  TempDir dir("rerun");
  write_inputs(demo_city(), demo_city().events, dir);
  auto cfg = config_for(dir, dir.path / "a");
  cfg.analysis.multi_event = true;
  auto first = run_pipeline(cfg);
  cfg.out_dir = dir.path / "b";
  cfg.analysis.threads = 3;
  auto second = run_pipeline(cfg);
  ASSERT_EQ(first.written, second.written);
  for (auto const &name : first.written) {
    auto a = slurp(dir / ("a/" + name)), b = slurp(dir / ("b/" + name));
    if (name == "manifest.json") {
      auto ja = report::Json::parse(a), jb = report::Json::parse(b);
      EXPECT_NE(ja["generated_at"], nullptr);
      ja.erase("generated_at");
      jb.erase("generated_at");
      ja["config"].erase("threads");
      jb["config"].erase("threads");
      EXPECT_EQ(ja, jb);
    } else {
      EXPECT_EQ(a, b) << name;
    }
  }
}

TEST(Pipeline, ThreadCountDoesNotChangeResults)
{
  auto store = demo_city().store();
  auto const &events = demo_city().events;
  for (bool multi : {false, true}) {
    AnalysisConfig one;
    one.multi_event = multi;
    auto many = one;
    many.threads = 4;
    auto a = analyze_events(store, events, one);
    auto b = analyze_events(store, events, many);
    ASSERT_EQ(a.events.size(), b.events.size());
    for (std::size_t i = 0; i < a.events.size(); ++i) {
      EXPECT_EQ(a.events[i].radius_m, b.events[i].radius_m);
      EXPECT_EQ(a.events[i].raw.probability_sum, b.events[i].raw.probability_sum);
      EXPECT_EQ(a.events[i].naive, b.events[i].naive);
    }
    ASSERT_TRUE(a.evaluation && b.evaluation);
    for (std::size_t i = 0; i < a.evaluation->predictions.size(); ++i)
      EXPECT_EQ(a.evaluation->predictions[i].predicted, b.evaluation->predictions[i].predicted);
  }
}

TEST(Pipeline, MultiEventModeUsesOneRadiusPerVenue)
{
  auto store = demo_city().store();
  AnalysisConfig cfg;
  cfg.multi_event = true;
  auto res = analyze_events(store, demo_city().events, cfg);
  ASSERT_EQ(res.venues.size(), 2u);
  int multi = 0;
  for (auto const &a : res.events)
    if (a.radius_source == RadiusSource::multi) {
      ++multi;
      auto const &v = res.venues[a.event.venue_id == "NORTH" ? 0 : 1];
      ASSERT_TRUE(v.result);
      EXPECT_EQ(a.radius_m, v.result->best_radius_m);
    }
  EXPECT_GT(multi, 0);
}

TEST(Pipeline, FailuresNameTheStageAndEvent)
{
  auto store = demo_city().store();
  auto events = demo_city().events;
  events[2].scheduled_end = events[2].scheduled_start;
  try {
    analyze_events(store, events, AnalysisConfig{});
    FAIL() << "expected a stage error";
  } catch (StageError const &e) {
    EXPECT_EQ(e.stage(), "validate");
    EXPECT_EQ(e.event_id(), events[2].event_id);
    EXPECT_NE(std::string(e.what()).find(events[2].event_id), std::string::npos);
  }

  TempDir dir("fail");
  auto cfg = config_for(dir, dir.path / "out");
  try {
    run_pipeline(cfg);
    FAIL() << "expected a stage error";
  } catch (StageError const &e) {
    EXPECT_EQ(e.stage(), "load-inputs");
  }
  write_inputs(demo_city(), demo_city().events, dir);
  write_file(dir / "events.csv", [](std::ostream &o) { o << "not,a,catalog\n"; });
  try {
    run_pipeline(cfg);
    FAIL() << "expected a stage error";
  } catch (StageError const &e) {
    EXPECT_EQ(e.stage(), "load-events");
  }
  write_inputs(demo_city(), demo_city().events, dir);
  cfg.analysis.pad_s = -1;
  EXPECT_THROW(run_pipeline(cfg), StageError);
}

TEST(Pipeline, GivenRadiiSkipTheSweep)
{
  auto store = demo_city().store();
  AnalysisConfig cfg;
  cfg.given_radius_m[demo_city().events[0].event_id] = 250.0;
  auto res = analyze_events(store, demo_city().events, cfg);
  EXPECT_EQ(res.events[0].radius_source, RadiusSource::given);
  EXPECT_EQ(res.events[0].radius_m, 250.0);
  EXPECT_TRUE(res.events[0].profile.empty());
  EXPECT_EQ(res.events[0].raw.radius_m, 250.0);
}
