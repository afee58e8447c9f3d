#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "support.hpp"

using namespace cdrcrowd;
using namespace testing_support;

namespace {

CellCatalog one_cell() { return catalog({{"A", {45.0, 7.0}, 300.0}}); }

// Event on 2012-03-08 19:00-21:00; `counts[i]` distinct users in the same
// hours i + 1 days earlier, `x` users during the event.
CdrStore baseline_store(std::vector<int> const &counts, int x)
{
  std::vector<Row> rows;
  auto const ev = make_timestamp(2012, 3, 8, 19);
  for (std::size_t i = 0; i < counts.size(); ++i)
    for (int u = 0; u < counts[i]; ++u)
      rows.push_back({"u" + std::to_string(u), "A", ev - static_cast<Timestamp>(i + 1) * kSecondsPerDay + 60 * u});
  for (int u = 0; u < x; ++u)
    rows.push_back({"u" + std::to_string(u), "A", ev + 60 * u});
  return store_of(one_cell(), rows);
}

TimeWindow event_window()
{
  auto st = make_timestamp(2012, 3, 8, 19);
  return {st, st + 2 * kSecondsPerHour};
}

SweepConfig narrow_sweep()
{
  SweepConfig cfg;
  cfg.r_min = 0;
  cfg.r_max = 200;
  cfg.step = 100;
  return cfg;
}

RadiusProfile profile_at(double r, std::optional<double> zhat)
{
  RadiusProfile p;
  p.radius_m = r;
  p.normalized_z = zhat;
  p.z_score = zhat;
  return p;
}

} // namespace

TEST(Sweep, GridHasTwentyOneRadii)
{
  auto r = SweepConfig{}.radii();
  ASSERT_EQ(r.size(), 21u);
  EXPECT_EQ(r.front(), -500.0);
  EXPECT_EQ(r.back(), 1500.0);
  SweepConfig bad;
  bad.step = 0;
  EXPECT_THROW(bad.validate(), InputError);
  bad = {};
  bad.r_min = 10;
  bad.r_max = 10;
  EXPECT_THROW(bad.validate(), InputError);
  bad = {};
  bad.lookback_days = 0;
  EXPECT_THROW(bad.validate(), InputError);
}

TEST(ZScore, EqualToBaselineIsZero)
{
  auto s = baseline_store({5, 7, 5, 7, 5, 7}, 6);
  auto prof = z_scores_by_radius(s, {45.0, 7.0}, event_window(), narrow_sweep());
  for (auto const &p : prof) {
    ASSERT_TRUE(p.z_score);
    EXPECT_DOUBLE_EQ(*p.z_score, 0.0);
  }
}

TEST(ZScore, HandComputedBaselineExample)
{
  auto s = baseline_store({4, 6, 8, 6, 5, 7}, 12);
  auto prof = z_scores_by_radius(s, {45.0, 7.0}, event_window(), narrow_sweep());
  ASSERT_EQ(prof.size(), 3u);
  for (auto const &p : prof) {
    EXPECT_EQ(p.user_count, 12u);
    EXPECT_EQ(p.baseline_counts, (std::vector<std::size_t>{4, 6, 8, 6, 5, 7}));
    ASSERT_TRUE(p.z_score);
    // (12 - 6) / sqrt(10 / 5), worked out by hand.
    EXPECT_NEAR(*p.z_score, 4.242640687119285, 1e-12);
    EXPECT_NEAR(*p.normalized_z, 4.242640687119285 / 300.0, 1e-15);
  }
}

TEST(ZScore, ConstantBaselineLeavesScoreUndefined)
{
  auto s = baseline_store({5, 5, 5, 5, 5, 5}, 9);
  auto prof = z_scores_by_radius(s, {45.0, 7.0}, event_window(), narrow_sweep());
  for (auto const &p : prof) {
    EXPECT_FALSE(p.z_score);
    EXPECT_FALSE(p.normalized_z);
  }
  EXPECT_THROW(best_radius_single(prof), NoEventSignal);
}

TEST(ZScore, NoRelevantCellsGivesEmptyProfile)
{
  auto s = baseline_store({4, 6, 8, 6, 5, 7}, 12);
  SweepConfig cfg;
  cfg.r_min = -500;
  cfg.r_max = -400;
  auto prof = z_scores_by_radius(s, {45.0, 7.0}, event_window(), cfg);
  for (auto const &p : prof) {
    EXPECT_EQ(p.cell_count, 0u);
    EXPECT_EQ(p.user_count, 0u);
    EXPECT_FALSE(p.z_score);
  }
}

TEST(ZScore, PlantedEventStandsOutNearItsExtent)
{
  auto cfg = small_city(21);
  cfg.population = 3000;
  cfg.days = 14;
  auto city = sim::generate_city(cfg);
  sim::PlantedEvent ev;
  ev.event_id = "E";
  ev.venue_id = "V";
  ev.center = {45.05, 7.675};
  ev.extent_m = 200.0;
  ev.start = make_timestamp(2012, 3, 10, 18);
  ev.end = ev.start + 2 * kSecondsPerHour;
  ev.true_attendance = 600;
  ev.usage_multiplier = 1.0;
  sim::plant_event(city, ev);
  auto store = city.store();
  auto prof = z_scores_by_radius(store, ev.center, {ev.start - 7200, ev.end + 7200}, SweepConfig{});
  auto at = [&](double r) {
    return *std::find_if(prof.begin(), prof.end(), [&](auto const &p) { return p.radius_m == r; });
  };
  auto near = at(200.0), far = at(1000.0);
  ASSERT_TRUE(near.z_score);
  ASSERT_TRUE(far.z_score);
  EXPECT_GT(*near.z_score, 3.0);
  EXPECT_LT(*far.z_score, *near.z_score);
}

TEST(ZScore, NeverReadsOutsideTheLookbackSpan)
{
  std::mt19937_64 rng(30);
  auto base = random_store(rng, 40, 300, 20000, 20);
  GeoPoint center{45.045, 7.665};
  auto st = make_timestamp(2012, 3, 12, 18);
  TimeWindow w{st, st + 3 * kSecondsPerHour};
  SweepConfig cfg;
  auto ref = z_scores_by_radius(base, center, w, cfg);

  // Records before st - 6 days and at or after et, added in bulk.
  CdrStoreBuilder b(base.cells());
  for (auto const &r : base.records())
    b.add(b.intern_user(base.user_name(r.user)), r.cell, r.timestamp, r.mcc);
  std::uniform_int_distribution<std::size_t> pc(0, base.cells().size() - 1);
  std::uniform_int_distribution<Timestamp> before(make_timestamp(2012, 3, 1), st - 6 * kSecondsPerDay - 1);
  std::uniform_int_distribution<Timestamp> after(w.end, w.end + 5 * kSecondsPerDay);
  for (int i = 0; i < 20000; ++i) {
    auto u = b.intern_user("x" + std::to_string(i % 500));
    b.add(u, static_cast<CellIndex>(pc(rng)), i % 2 ? before(rng) : after(rng), 222);
  }
  auto noisy = std::move(b).build({});
  auto got = z_scores_by_radius(noisy, center, w, cfg);
  ASSERT_EQ(got.size(), ref.size());
  for (std::size_t k = 0; k < got.size(); ++k) {
    EXPECT_EQ(got[k].user_count, ref[k].user_count);
    EXPECT_EQ(got[k].baseline_counts, ref[k].baseline_counts);
    EXPECT_EQ(got[k].z_score, ref[k].z_score);
  }
}

TEST(ZScore, ScalingCoverageScalesNormalizedScoreInversely)
{
  // Cells stacked on the venue: relevance reduces to rc > -r, so doubling
  // every rc together with every swept radius keeps each relevant set.
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> rad(100, 1500);
  CellCatalog small, scaled;
  for (int i = 0; i < 30; ++i) {
    double rc = rad(rng);
    small.add({"c" + std::to_string(i), {45.045, 7.665}, rc});
    scaled.add({"c" + std::to_string(i), {45.045, 7.665}, 2 * rc});
  }
  std::uniform_int_distribution<int> pu(0, 299), pc(0, 29);
  std::uniform_int_distribution<Timestamp> pt(0, 20 * kSecondsPerDay - 1);
  std::vector<Row> rows;
  for (int i = 0; i < 20000; ++i)
    rows.push_back({"u" + std::to_string(pu(rng)), "c" + std::to_string(pc(rng)),
                    make_timestamp(2012, 3, 1) + pt(rng)});
  auto base = store_of(small, rows);
  auto big = store_of(scaled, rows);
  GeoPoint center{45.045, 7.665};
  auto st = make_timestamp(2012, 3, 12, 18);
  TimeWindow w{st, st + 3 * kSecondsPerHour};
  SweepConfig cfg, cfg2;
  cfg2.r_min = 2 * cfg.r_min;
  cfg2.r_max = 2 * cfg.r_max;
  cfg2.step = 2 * cfg.step;
  auto a = z_scores_by_radius(base, center, w, cfg);
  auto c = z_scores_by_radius(big, center, w, cfg2);
  ASSERT_EQ(a.size(), c.size());
  bool any = false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    ASSERT_EQ(a[k].cell_count, c[k].cell_count);
    ASSERT_EQ(a[k].normalized_z.has_value(), c[k].normalized_z.has_value());
    if (a[k].normalized_z) {
      any = true;
      EXPECT_NEAR(*c[k].normalized_z, *a[k].normalized_z / 2.0, 1e-12);
    }
  }
  ASSERT_TRUE(any);
  // Weights shrink by a common factor, so the weighted mean over the same
  // radii is unchanged.
  std::vector<RadiusProfile> rescaled = c;
  for (std::size_t k = 0; k < c.size(); ++k)
    rescaled[k].radius_m = a[k].radius_m;
  try {
    EXPECT_NEAR(best_radius_single(rescaled), best_radius_single(a), 1e-9);
  } catch (NoEventSignal const &) {
    EXPECT_THROW(best_radius_single(a), NoEventSignal);
  }
}

TEST(BestSingle, DegenerateAndSymmetricCases)
{
  std::vector<RadiusProfile> one{profile_at(300, 0.01)};
  EXPECT_DOUBLE_EQ(best_radius_single(one), 300.0);
  std::vector<RadiusProfile> two{profile_at(0, 0.02), profile_at(400, 0.02)};
  EXPECT_DOUBLE_EQ(best_radius_single(two), 200.0);
  // Negative scores carry no weight; undefined ones are skipped.
  std::vector<RadiusProfile> mixed{profile_at(-500, -0.5), profile_at(100, 0.01), profile_at(900, std::nullopt)};
  EXPECT_DOUBLE_EQ(best_radius_single(mixed), 100.0);
  std::vector<RadiusProfile> none{profile_at(0, -1.0), profile_at(100, 0.0)};
  EXPECT_THROW(best_radius_single(none), NoEventSignal);
}

TEST(BestSingle, PeakedProfileNearThreeHundredMeters)
{
  // Shaped like a sweep whose z peaks at about 3.7 near 300 m and decays to
  // noise on both sides; coverage sums grow with the radius.
  std::vector<RadiusProfile> prof;
  for (double r = -500; r <= 1500; r += 100) {
    double z = 3.7 * std::exp(-std::pow((r - 300) / 250.0, 2)) - 0.3;
    double cover = 2000 + 6 * (r + 600);
    prof.push_back(profile_at(r, z / cover));
  }
  double best = best_radius_single(prof);
  EXPECT_GE(best, -500);
  EXPECT_LE(best, 1500);
  EXPECT_NEAR(best, 300.0, 200.0);
}

TEST(BestSingle, StaysWithinDefinedRadii)
{
  std::mt19937_64 rng(32);
  std::normal_distribution<double> z(0.0, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<RadiusProfile> prof;
    double lo = 1e9, hi = -1e9;
    for (double r = -500; r <= 1500; r += 100) {
      if (z(rng) > 1.0) {
        prof.push_back(profile_at(r, std::nullopt));
        continue;
      }
      prof.push_back(profile_at(r, z(rng)));
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
    try {
      double b = best_radius_single(prof);
      EXPECT_GE(b, lo - 1e-9);
      EXPECT_LE(b, hi + 1e-9);
    } catch (NoEventSignal const &) {
    }
  }
}

namespace {

// Store where cell A (rc 150) sits at the venue and B (rc 150) 250 m away.
// At r = 100 only A is relevant; from r = 200 on, both are.
struct TwoRing
{
  CdrStore store;
  std::vector<TimeWindow> windows;
};

TwoRing two_ring(std::vector<std::pair<bool, bool>> const &spikes)
{
  GeoPoint const c{45.0, 7.0};
  GeoPoint const b{45.0 + 250.0 / 6371000.0 * 180.0 / M_PI, 7.0};
  auto cells = catalog({{"A", c, 150.0}, {"B", b, 150.0}});
  std::vector<Row> rows;
  TwoRing out{CdrStore{}, {}};
  auto const day0 = make_timestamp(2012, 3, 1, 18);
  // Background: 3 or 4 users per evening in each cell, 60 days.
  for (int d = 0; d < 60; ++d)
    for (int u = 0; u < 3 + d % 2; ++u) {
      rows.push_back({"a" + std::to_string(u), "A", day0 + d * kSecondsPerDay + 100 * u});
      rows.push_back({"b" + std::to_string(u), "B", day0 + d * kSecondsPerDay + 100 * u});
    }
  for (std::size_t e = 0; e < spikes.size(); ++e) {
    auto st = day0 + static_cast<Timestamp>(8 + 7 * e) * kSecondsPerDay;
    out.windows.push_back({st, st + 2 * kSecondsPerHour});
    for (int u = 0; u < 40; ++u) {
      if (spikes[e].first)
        rows.push_back({"ea" + std::to_string(e) + "_" + std::to_string(u), "A", st + 60 + u});
      if (spikes[e].second)
        rows.push_back({"eb" + std::to_string(e) + "_" + std::to_string(u), "B", st + 60 + u});
    }
  }
  out.store = store_of(cells, rows);
  return out;
}

SweepConfig ring_sweep()
{
  SweepConfig cfg;
  cfg.r_min = -100;
  cfg.r_max = 300;
  cfg.step = 100;
  return cfg;
}

} // namespace

TEST(BestMulti, EqualDetectionsAverageTheRadii)
{
  // Spikes only in A: every radius from 0 up sees them, but the B background
  // dilutes nothing since x - mu stays 40 against a small sigma.
  auto tr = two_ring({{true, false}, {true, false}});
  auto res = best_radius_multi(tr.store, {45.0, 7.0}, tr.windows, ring_sweep());
  std::map<double, int> e;
  for (auto const &d : res.detections)
    e[d.radius_m] = d.detected_events;
  EXPECT_EQ(e[-100], 2);
  EXPECT_EQ(e[0], 2);
  EXPECT_EQ(e[100], 2);
  double num = 0, den = 0;
  for (auto [r, k] : e) {
    num += r * k;
    den += k;
  }
  EXPECT_DOUBLE_EQ(res.best_radius_m, num / den);
  EXPECT_EQ(res.per_event.size(), 2u);
}

TEST(BestMulti, NoDetectionIsAnError)
{
  auto tr = two_ring({{false, false}, {false, false}});
  EXPECT_THROW(best_radius_multi(tr.store, {45.0, 7.0}, tr.windows, ring_sweep()), NoEventDetected);
  EXPECT_THROW(best_radius_multi(tr.store, {45.0, 7.0}, std::span<TimeWindow const>{}, ring_sweep()),
               InputError);
}

TEST(BestMulti, AddingAnEventRaisesEachCountByAtMostOne)
{
  auto tr = two_ring({{true, false}, {false, true}, {true, true}, {false, false}});
  GeoPoint c{45.0, 7.0};
  std::vector<int> prev;
  for (std::size_t n = 1; n <= tr.windows.size(); ++n) {
    std::span<TimeWindow const> some(tr.windows.data(), n);
    std::vector<int> cur;
    try {
      auto res = best_radius_multi(tr.store, c, some, ring_sweep());
      for (auto const &d : res.detections)
        cur.push_back(d.detected_events);
      EXPECT_GE(res.best_radius_m, ring_sweep().r_min);
      EXPECT_LE(res.best_radius_m, ring_sweep().r_max);
    } catch (NoEventDetected const &) {
      cur.assign(5, 0);
    }
    if (!prev.empty())
      for (std::size_t k = 0; k < cur.size(); ++k) {
        EXPECT_GE(cur[k], prev[k]);
        EXPECT_LE(cur[k], prev[k] + 1);
      }
    prev = cur;
  }
}

TEST(BestMulti, EightPlantedEventsRecoverTheExtent)
{
  auto city = scenario::radius_recovery(1);
  auto store = city.store();
  for (std::string venue : {"V1", "V3"}) {
    std::vector<TimeWindow> windows;
    GeoPoint center{};
    double extent = 0;
    for (std::size_t i = 0; i < city.events.size(); ++i)
      if (city.events[i].venue_id == venue) {
        windows.push_back(city.events[i].padded(2 * kSecondsPerHour));
        center = city.events[i].center;
        extent = city.planted[i].event.extent_m;
      }
    ASSERT_EQ(windows.size(), 8u);
    auto res = best_radius_multi(store, center, windows, SweepConfig{});
    EXPECT_NEAR(res.best_radius_m, extent, 200.0) << venue;
  }
}
