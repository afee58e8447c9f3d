#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "support.hpp"

using namespace cdrcrowd;
using namespace testing_support;

namespace {

std::vector<CdrRecord> at_times(std::vector<Timestamp> ts)
{
  std::vector<CdrRecord> out;
  for (auto t : ts)
    out.push_back({UserIndex{0}, CellIndex{0}, t, 222});
  return out;
}

// Sort-and-index quantile with linear interpolation.
double oracle_quantile(std::vector<double> v, double p)
{
  std::sort(v.begin(), v.end());
  double pos = p * static_cast<double>(v.size() - 1);
  std::size_t i = static_cast<std::size_t>(pos);
  if (i + 1 >= v.size())
    return v.back();
  return v[i] * (1 - (pos - i)) + v[i + 1] * (pos - i);
}

// Evening filter 18:00-23:00 done the long way: convert each record to its
// calendar day and hour and keep gaps whose endpoints share an evening.
std::vector<Timestamp> oracle_evening_gaps(std::vector<CdrRecord> const &recs)
{
  std::vector<Timestamp> out;
  for (std::size_t i = 1; i < recs.size(); ++i) {
    auto a = recs[i - 1].timestamp, b = recs[i].timestamp;
    long long da = a / 86400, db = b / 86400;
    long long ha = (a % 86400) / 3600, hb = (b % 86400) / 3600;
    if (da == db && ha >= 18 && ha < 23 && hb >= 18 && hb < 23)
      out.push_back(b - a);
  }
  return out;
}

// r_g^2 equals the mean squared pairwise distance over two, in the plane.
double oracle_gyration(std::vector<GeoPoint> const &pts)
{
  double mlat = 0, mlon = 0;
  for (auto const &p : pts) {
    mlat += p.lat;
    mlon += p.lon;
  }
  mlat /= pts.size();
  mlon /= pts.size();
  double const k = M_PI / 180.0, R = 6371000.0;
  std::vector<std::pair<double, double>> xy;
  for (auto const &p : pts)
    xy.emplace_back(R * (p.lon - mlon) * k * std::cos(mlat * k), R * (p.lat - mlat) * k);
  double s = 0;
  for (std::size_t i = 0; i < xy.size(); ++i)
    for (std::size_t j = i + 1; j < xy.size(); ++j)
      s += std::pow(xy[i].first - xy[j].first, 2) + std::pow(xy[i].second - xy[j].second, 2);
  double n = static_cast<double>(pts.size());
  return std::sqrt(s / (n * n));
}

} // namespace

TEST(InterCdr, TrivialSequences)
{
  EXPECT_TRUE(inter_cdr_times(at_times({1000})).empty());
  EXPECT_TRUE(inter_cdr_times(at_times({})).empty());
  auto g = inter_cdr_times(at_times({1000, 1600, 2200}));
  EXPECT_EQ(g, (std::vector<Timestamp>{600, 600}));
  auto recs = at_times({1000, 1600, 2200});
  EXPECT_DOUBLE_EQ(avg_inter_cdr_time(recs), 600.0);
}

TEST(InterCdr, FallbackIsSixtyFourMinutes)
{
  EXPECT_DOUBLE_EQ(kDefaultIetFallbackS, 3840.0);
  EXPECT_DOUBLE_EQ(avg_inter_cdr_time(at_times({5})), 3840.0);
  EXPECT_DOUBLE_EQ(avg_inter_cdr_time(at_times({5}), {}, 99.0), 99.0);
  // Two records on different evenings: no qualifying gap.
  auto t = make_timestamp(2012, 3, 1, 19);
  EXPECT_DOUBLE_EQ(avg_inter_cdr_time(at_times({t, t + kSecondsPerDay}), DailyWindow::hours(18, 23)),
                   3840.0);
}

TEST(InterCdr, EveningFilterMatchesDirectFiltering)
{
  std::mt19937_64 rng(10);
  std::uniform_int_distribution<Timestamp> pt(0, 14 * kSecondsPerDay);
  auto const t0 = make_timestamp(2012, 3, 1);
  auto filter = DailyWindow::hours(18, 23);
  for (int user = 0; user < 100; ++user) {
    std::vector<Timestamp> ts;
    std::uniform_int_distribution<int> n(0, 120);
    for (int i = n(rng); i > 0; --i)
      ts.push_back(t0 + pt(rng));
    std::sort(ts.begin(), ts.end());
    auto recs = at_times(ts);
    auto got = inter_cdr_times(recs, filter);
    auto want = oracle_evening_gaps(recs);
    ASSERT_EQ(got, want);
    double mean = 3840.0;
    if (!want.empty()) {
      mean = 0;
      for (auto g : want)
        mean += static_cast<double>(g) / static_cast<double>(want.size());
    }
    EXPECT_NEAR(avg_inter_cdr_time(recs, filter), mean, 1e-9);
  }
}

TEST(InterCdr, LengthIsCountMinusOneWithoutFilter)
{
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Timestamp> ts(std::uniform_int_distribution<int>(2, 50)(rng));
    for (auto &t : ts)
      t = std::uniform_int_distribution<Timestamp>(0, 1000000)(rng);
    std::sort(ts.begin(), ts.end());
    EXPECT_EQ(inter_cdr_times(at_times(ts)).size(), ts.size() - 1);
    EXPECT_EQ(inter_cdr_times(at_times(ts), DailyWindow::hours(0, 24)).size(), ts.size() - 1);
  }
}

TEST(DailyWindowTest, WrapsPastMidnight)
{
  auto w = DailyWindow::hours(22, 2);
  auto day = make_timestamp(2012, 3, 1);
  EXPECT_TRUE(w.contains(day + 23 * kSecondsPerHour));
  EXPECT_TRUE(w.contains(day + kSecondsPerDay + kSecondsPerHour));
  EXPECT_FALSE(w.contains(day + 12 * kSecondsPerHour));
  EXPECT_EQ(w.occurrence(day + 23 * kSecondsPerHour), w.occurrence(day + kSecondsPerDay + kSecondsPerHour));
}

TEST(Quartiles, Examples)
{
  std::vector<double> one{10};
  auto s = quartile_summary(one);
  EXPECT_EQ(s.q1, 10);
  EXPECT_EQ(s.median, 10);
  EXPECT_EQ(s.q3, 10);
  EXPECT_EQ(s.sample_count, 1u);
  std::vector<double> four{4, 1, 3, 2};
  EXPECT_DOUBLE_EQ(quartile_summary(four).median, 2.5);
  EXPECT_THROW(quartile_summary(std::vector<double>{}), InputError);
}

TEST(Quartiles, RandomListsMatchSortAndIndex)
{
  std::mt19937_64 rng(12);
  std::lognormal_distribution<double> d(4.0, 1.0);
  std::vector<double> big(1001);
  for (auto &x : big)
    x = d(rng);
  auto s = quartile_summary(big);
  EXPECT_NEAR(s.q1, oracle_quantile(big, 0.25), 1e-9);
  EXPECT_NEAR(s.median, oracle_quantile(big, 0.5), 1e-9);
  EXPECT_NEAR(s.q3, oracle_quantile(big, 0.75), 1e-9);

  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(std::uniform_int_distribution<int>(1, 40)(rng));
    for (auto &x : v)
      x = d(rng);
    auto q = quartile_summary(v);
    EXPECT_NEAR(q.q1, oracle_quantile(v, 0.25), 1e-9);
    EXPECT_NEAR(q.median, oracle_quantile(v, 0.5), 1e-9);
    EXPECT_NEAR(q.q3, oracle_quantile(v, 0.75), 1e-9);
    EXPECT_LE(q.q1, q.median);
    EXPECT_LE(q.median, q.q3);
  }
}

TEST(MedianStats, Examples)
{
  auto a = population_median_stats(std::vector<double>{60, 60});
  EXPECT_DOUBLE_EQ(a.arithmetic, 60);
  ASSERT_TRUE(a.geometric);
  EXPECT_NEAR(*a.geometric, 60, 1e-9);
  auto b = population_median_stats(std::vector<double>{10, 1000});
  EXPECT_DOUBLE_EQ(b.arithmetic, 505);
  EXPECT_NEAR(*b.geometric, 100, 1e-9);
  auto c = population_median_stats(std::vector<double>{0, 10});
  EXPECT_DOUBLE_EQ(c.arithmetic, 5);
  EXPECT_FALSE(c.geometric);
}

TEST(MedianStats, RandomPopulationsAndAmGm)
{
  std::mt19937_64 rng(13);
  std::lognormal_distribution<double> d(3.5, 0.8);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(std::uniform_int_distribution<int>(1, 60)(rng));
    for (auto &x : v)
      x = d(rng);
    double sum = 0, prod_log = 0;
    for (auto x : v) {
      sum += x;
      prod_log += std::log(x);
    }
    auto s = population_median_stats(v);
    EXPECT_NEAR(s.arithmetic, sum / v.size(), 1e-9);
    ASSERT_TRUE(s.geometric);
    EXPECT_NEAR(*s.geometric, std::exp(prod_log / v.size()), 1e-9);
    EXPECT_LE(*s.geometric, s.arithmetic * (1 + 1e-12));
  }
}

TEST(Gyration, TrivialCases)
{
  std::vector<GeoPoint> same(5, GeoPoint{45.05, 7.67});
  EXPECT_NEAR(radius_of_gyration(same), 0.0, 1e-9);
  GeoPoint a{45.0, 7.0}, b{45.0, 7.01};
  std::vector<GeoPoint> two{a, b};
  EXPECT_NEAR(radius_of_gyration(two), distance_m(a, b) / 2, 0.01);
  EXPECT_THROW(radius_of_gyration(std::vector<GeoPoint>{}), InputError);
}

TEST(Gyration, RandomTracesMatchPairwiseFormula)
{
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> lat(45.0, 45.1), lon(7.6, 7.75);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<GeoPoint> pts(std::uniform_int_distribution<int>(1, 30)(rng));
    for (auto &p : pts)
      p = {lat(rng), lon(rng)};
    EXPECT_NEAR(radius_of_gyration(pts), oracle_gyration(pts), 1e-6);
  }
}

TEST(Gyration, TranslationInvariantAndZeroOnlyWhenCoincident)
{
  std::mt19937_64 rng(15);
  std::uniform_real_distribution<double> lat(45.0, 45.1), lon(7.6, 7.75), shift(-0.05, 0.05);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<GeoPoint> pts(10);
    for (auto &p : pts)
      p = {lat(rng), lon(rng)};
    double dlat = shift(rng), dlon = shift(rng);
    auto moved = pts;
    for (auto &p : moved)
      p = {p.lat + dlat, p.lon + dlon};
    double r0 = radius_of_gyration(pts), r1 = radius_of_gyration(moved);
    EXPECT_GT(r0, 0.0);
    EXPECT_LT(std::abs(r1 - r0) / r0, 1e-3);
  }
}

TEST(DailyPercentiles, OneUserSevenRecordsOverSevenDays)
{
  auto cells = catalog({{"A", {45.0, 7.0}, 300.0}});
  std::vector<Row> rows;
  auto t0 = make_timestamp(2012, 3, 1, 12);
  for (int d = 0; d < 7; ++d)
    rows.push_back({"u", "A", t0 + d * kSecondsPerDay});
  auto pts = daily_cdr_percentiles(store_of(cells, rows));
  ASSERT_EQ(pts.size(), 21u);
  for (auto const &p : pts)
    EXPECT_DOUBLE_EQ(p.value, 1.0);
}

TEST(DailyPercentiles, TwoUsersMedianIsTwo)
{
  auto cells = catalog({{"A", {45.0, 7.0}, 300.0}});
  std::vector<Row> rows;
  auto t0 = make_timestamp(2012, 3, 1, 10);
  for (int d = 0; d < 4; ++d) {
    rows.push_back({"one", "A", t0 + d * kSecondsPerDay});
    for (int k = 0; k < 3; ++k)
      rows.push_back({"three", "A", t0 + d * kSecondsPerDay + k * 600});
  }
  auto pts = daily_cdr_percentiles(store_of(cells, rows));
  EXPECT_EQ(pts[10].percentile, 50);
  EXPECT_DOUBLE_EQ(pts[10].value, 2.0);
  EXPECT_DOUBLE_EQ(pts.front().value, 1.0);
  EXPECT_DOUBLE_EQ(pts.back().value, 3.0);
}

TEST(DailyPercentiles, SyntheticPopulationMatchesOracle)
{
  std::mt19937_64 rng(16);
  auto store = random_store(rng, 30, 200, 5000, 10);
  // Days spanned, counted independently from the raw records.
  Timestamp lo = INT64_MAX, hi = INT64_MIN;
  std::map<std::string, double> count;
  for (auto const &r : store.records()) {
    lo = std::min(lo, r.timestamp);
    hi = std::max(hi, r.timestamp);
    count[store.user_name(r.user)] += 1;
  }
  double days = static_cast<double>(hi / 86400 - lo / 86400 + 1);
  std::vector<double> rates;
  for (auto const &[u, c] : count)
    rates.push_back(c / days);
  auto pts = daily_cdr_percentiles(store);
  for (auto const &p : pts)
    EXPECT_NEAR(p.value, oracle_quantile(rates, p.percentile / 100.0), 1e-9);

  auto gy = per_user_gyration(store);
  ASSERT_EQ(gy.size(), store.user_count());
  for (std::size_t u = 0; u < store.user_count(); ++u) {
    std::vector<GeoPoint> pos;
    for (auto const &r : store.user_records(static_cast<UserIndex>(u)))
      pos.push_back(store.cells()[r.cell].center);
    EXPECT_NEAR(gy[u], oracle_gyration(pos), 1e-6);
  }
}
