#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "cdrcrowd/cdr_store.hpp"
#include "cdrcrowd/errors.hpp"
#include "cdrcrowd/geo.hpp"
#include "cdrcrowd/types.hpp"

namespace cdrcrowd::sim {

// Dense cluster of regular (non-attendee) activity: people who live or work
// inside a disk.
struct Hotspot
{
  GeoPoint center;
  double radius_m = 500.0;
  std::size_t residents = 0;
  std::size_t workers = 0;
};

// Relative call volume per hour of day; normalized on use.
inline std::array<double, 24> default_hour_weights()
{
  return {0.2, 0.1, 0.1, 0.1, 0.1, 0.3, 0.8, 1.6, 2.6, 3.0, 3.2, 3.3,
          3.4, 3.2, 3.1, 3.2, 3.3, 3.5, 3.6, 3.4, 3.0, 2.4, 1.5, 0.7};
}

// A tier of cells laid on a jittered grid over the whole city. Each user's
// home and work cell is taken from one tier, picked in proportion to
// traffic_share, as the nearest cell of that tier.
struct CellLayer
{
  std::size_t count = 300;
  double min_radius_m = 300.0;
  double max_radius_m = 900.0;
  double traffic_share = 1.0;
  // Overrides the city-wide cell_day_noise for this layer.
  std::optional<double> activity_noise;
};

struct CityConfig
{
  GeoPoint south_west{45.00, 7.60};
  GeoPoint north_east{45.10, 7.75};
  std::vector<CellLayer> layers{CellLayer{}};
  std::size_t population = 10000;
  double carrier_share = 0.3;
  // Per-user daily CDR rate: log-normal with this median and log-sd.
  double median_daily_cdrs = 4.0;
  double daily_cdrs_sigma = 0.7;
  std::array<double, 24> hour_weights = default_hour_weights();
  double worker_fraction = 0.6;
  int work_begin_hour = 9;
  int work_end_hour = 18;
  // Share of each user's calls placed from a random cell (errands, transit).
  double errand_fraction = 0.1;
  // Log-sd of the per-(cell, day) activity factor; 0 disables it.
  double cell_day_noise = 0.25;
  Timestamp start = make_timestamp(2012, 3, 1);
  int days = 28;
  std::uint64_t rng_seed = 1;
  std::uint16_t mcc = 222;
  std::vector<Hotspot> hotspots;

  void validate() const
  {
    if (!south_west.valid() || !north_east.valid() || !(south_west.lat < north_east.lat) ||
        !(south_west.lon < north_east.lon))
      throw InputError("city: invalid bounding box");
    if (layers.empty())
      throw InputError("city: at least one cell layer is required");
    for (auto const &l : layers) {
      if (l.count == 0)
        throw InputError("city: cell count must be positive");
      if (!(l.min_radius_m > 0.0) || !(l.max_radius_m >= l.min_radius_m))
        throw InputError("city: invalid coverage radius range");
      if (!(l.traffic_share > 0.0))
        throw InputError("city: traffic share must be positive");
      if (l.activity_noise && !(*l.activity_noise >= 0.0))
        throw InputError("city: activity noise must be nonnegative");
    }
    if (!(carrier_share > 0.0 && carrier_share <= 1.0))
      throw InputError("city: carrier_share must be in (0, 1]");
    if (!(cell_day_noise >= 0.0))
      throw InputError("city: cell_day_noise must be nonnegative");
    if (!(median_daily_cdrs > 0.0) || !(daily_cdrs_sigma >= 0.0))
      throw InputError("city: invalid usage model");
    if (days < 1)
      throw InputError("city: days must be positive");
    if (!(worker_fraction >= 0.0 && worker_fraction <= 1.0) ||
        !(errand_fraction >= 0.0 && errand_fraction < 1.0))
      throw InputError("city: fractions must be in [0, 1]");
    if (work_begin_hour < 0 || work_end_hour > 24 || work_begin_hour >= work_end_hour)
      throw InputError("city: invalid working hours");
    double w = 0.0;
    for (auto x : hour_weights) {
      if (x < 0.0)
        throw InputError("city: negative hour weight");
      w += x;
    }
    if (!(w > 0.0))
      throw InputError("city: hour weights sum to zero");
  }

  [[nodiscard]] TimeWindow span() const
  {
    return {start, start + static_cast<Timestamp>(days) * kSecondsPerDay};
  }

  [[nodiscard]] std::size_t cell_count() const
  {
    std::size_t n = 0;
    for (auto const &l : layers)
      n += l.count;
    return n;
  }
};

struct PlantedEvent
{
  std::string event_id;
  std::string venue_id;
  GeoPoint center;
  // Attendees' calls are served by the cells overlapping a circle of this
  // (possibly negative) radius around the venue.
  double extent_m = 0.0;
  Timestamp start = 0;
  Timestamp end = 0;
  double true_attendance = 0.0;
  // Attendee call rate during the event relative to their daily average.
  double usage_multiplier = 2.0;
  // Venue sits in a hotspot of co-located regular activity; a hotspot must
  // lie within 500 m.
  bool confounder = false;
  EventCategory category = EventCategory::structured;
  bool publish_ground_truth = true;
  double cell_weight_exponent = 0.0;
};

struct PlantedRecord
{
  PlantedEvent event;
  std::size_t injected_users = 0;
  std::size_t attendee_cell_count = 0;
};

// Bijective 32-bit mix so sequential ids look like hashes.
constexpr std::uint32_t mix32(std::uint32_t x)
{
  x ^= x >> 16;
  x *= 0x7feb352dU;
  x ^= x >> 15;
  x *= 0x846ca68bU;
  x ^= x >> 16;
  return x;
}

inline std::string hashed_user_name(std::uint32_t id)
{
  char buf[16];
  std::snprintf(buf, sizeof buf, "%08x", mix32(id));
  return buf;
}

class SyntheticCity
{
public:
  CityConfig config;
  CellCatalog cells;
  std::vector<std::string> users;
  std::vector<CdrRecord> records;
  std::vector<EventSpec> events;
  std::vector<PlantedRecord> planted;
  // Per user: home cell, daily call rate, and the event visits already
  // planted (so nobody attends two overlapping events).
  std::vector<CellIndex> homes;
  std::vector<double> daily_rates;
  std::vector<std::vector<TimeWindow>> visits;
  // Activity factor of (cell, day), indexed day * cell_count + cell.
  std::vector<double> cell_day_factor;

  [[nodiscard]] double activity(CellIndex c, Timestamp day) const
  {
    auto d = day - day_of(config.start);
    return cell_day_factor[static_cast<std::size_t>(d) * cells.size() + to_index(c)];
  }

  [[nodiscard]] TimeWindow span() const { return config.span(); }

  [[nodiscard]] CdrStore store() const &
  {
    return CdrStore(cells, users, records, span());
  }
  [[nodiscard]] CdrStore take_store() &&
  {
    return CdrStore(std::move(cells), std::move(users), std::move(records), span());
  }
};

namespace detail {

class Generator
{
public:
  Generator(CityConfig const &cfg, CellCatalog const &cells, std::mt19937_64 &rng)
      : cfg_(cfg), rng_(rng), proj_(midpoint(cfg))
  {
    double total = 0.0;
    for (auto w : cfg.hour_weights)
      total += w;
    for (std::size_t h = 0; h < 24; ++h)
      weights_[h] = cfg.hour_weights[h] / total;
    for (auto const &c : cells.cells())
      cell_xy_.push_back(proj_.to_xy(c.center));
    std::vector<double> shares;
    std::size_t first = 0;
    for (auto const &l : cfg.layers) {
      layer_begin_.push_back(first);
      first += l.count;
      shares.push_back(l.traffic_share);
    }
    layer_begin_.push_back(first);
    pick_layer_ = std::discrete_distribution<std::size_t>(shares.begin(), shares.end());
  }

  static GeoPoint midpoint(CityConfig const &cfg)
  {
    return {(cfg.south_west.lat + cfg.north_east.lat) / 2.0,
            (cfg.south_west.lon + cfg.north_east.lon) / 2.0};
  }

  // Nearest cell center to a point within a randomly picked layer.
  [[nodiscard]] CellIndex serving_cell(GeoPoint const &p)
  {
    auto layer = pick_layer_(rng_);
    auto xy = proj_.to_xy(p);
    std::size_t best = layer_begin_[layer];
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = layer_begin_[layer]; i < layer_begin_[layer + 1] && i < cell_xy_.size();
         ++i) {
      double dx = cell_xy_[i].x - xy.x, dy = cell_xy_[i].y - xy.y;
      double d = dx * dx + dy * dy;
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    return static_cast<CellIndex>(best);
  }

  GeoPoint random_point()
  {
    std::uniform_real_distribution<double> lat(cfg_.south_west.lat, cfg_.north_east.lat);
    std::uniform_real_distribution<double> lon(cfg_.south_west.lon, cfg_.north_east.lon);
    double a = lat(rng_);
    double b = lon(rng_);
    return {a, b};
  }

  GeoPoint random_point_in_disk(GeoPoint center, double radius_m)
  {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double r = radius_m * std::sqrt(u(rng_));
    double theta = 2.0 * std::numbers::pi * u(rng_);
    LocalProjection local(center);
    return local.to_geo({r * std::cos(theta), r * std::sin(theta)});
  }

  double draw_rate()
  {
    std::lognormal_distribution<double> d(std::log(cfg_.median_daily_cdrs), cfg_.daily_cdrs_sigma);
    return d(rng_);
  }

  // Uniform time inside hour `h` of `day`.
  Timestamp time_in_hour(Timestamp day, int h)
  {
    std::uniform_int_distribution<Timestamp> s(0, kSecondsPerHour - 1);
    return day * kSecondsPerDay + h * kSecondsPerHour + s(rng_);
  }

  int draw_hour(int begin, int end)
  {
    double total = 0.0;
    for (int h = begin; h < end; ++h)
      total += weights_[static_cast<std::size_t>(h)];
    std::uniform_real_distribution<double> u(0.0, total);
    double x = u(rng_);
    for (int h = begin; h < end; ++h) {
      x -= weights_[static_cast<std::size_t>(h)];
      if (x < 0.0)
        return h;
    }
    return end - 1;
  }

  double weight_between(int begin, int end) const
  {
    double total = 0.0;
    for (int h = begin; h < end; ++h)
      total += weights_[static_cast<std::size_t>(h)];
    return total;
  }

  std::size_t poisson(double mean)
  {
    if (!(mean > 0.0))
      return 0;
    std::poisson_distribution<std::size_t> d(mean);
    return d(rng_);
  }

  std::mt19937_64 &rng() { return rng_; }

private:
  CityConfig const &cfg_;
  std::mt19937_64 &rng_;
  LocalProjection proj_;
  std::array<double, 24> weights_{};
  std::vector<LocalProjection::Xy> cell_xy_;
  std::vector<std::size_t> layer_begin_;
  std::discrete_distribution<std::size_t> pick_layer_;
};

struct Resident
{
  CellIndex home{};
  std::optional<CellIndex> work;
};

} // namespace detail

/// Builds cells and a background CDR stream. Deterministic for a given
/// configuration, seed included.
inline SyntheticCity generate_city(CityConfig const &cfg)
{
  cfg.validate();
  SyntheticCity city;
  city.config = cfg;
  std::mt19937_64 rng(cfg.rng_seed);

  // Each layer's cells on a jittered grid covering the bounding box.
  LocalProjection proj(detail::Generator::midpoint(cfg));
  auto sw = proj.to_xy(cfg.south_west);
  auto ne = proj.to_xy(cfg.north_east);
  double width = ne.x - sw.x, height = ne.y - sw.y;
  std::uniform_real_distribution<double> jitter(-0.35, 0.35);
  for (auto const &layer : cfg.layers) {
    auto cols = static_cast<std::size_t>(std::max(
        1.0, std::round(std::sqrt(static_cast<double>(layer.count) * width / height))));
    auto rows = (layer.count + cols - 1) / cols;
    double dx = width / static_cast<double>(cols), dy = height / static_cast<double>(rows);
    std::uniform_real_distribution<double> radius(layer.min_radius_m, layer.max_radius_m);
    for (std::size_t i = 0; i < layer.count; ++i) {
      auto r = i / cols, c = i % cols;
      double x = sw.x + (static_cast<double>(c) + 0.5 + jitter(rng)) * dx;
      double y = sw.y + (static_cast<double>(r) + 0.5 + jitter(rng)) * dy;
      char id[16];
      std::snprintf(id, sizeof id, "C%04zu", city.cells.size());
      double rc = radius(rng);
      city.cells.add({id, proj.to_geo({x, y}), rc});
    }
  }

  detail::Generator gen(cfg, city.cells, rng);

  // Per-(cell, day) activity factors with mean 1.
  auto const n_cells = city.cells.size();
  std::vector<double> factor(n_cells * static_cast<std::size_t>(cfg.days), 1.0);
  {
    std::normal_distribution<double> z(0.0, 1.0);
    std::vector<double> noise;
    for (auto const &l : cfg.layers)
      noise.insert(noise.end(), l.count, l.activity_noise.value_or(cfg.cell_day_noise));
    for (std::size_t i = 0; i < factor.size(); ++i) {
      double const s = noise[i % n_cells];
      if (s > 0.0)
        factor[i] = std::exp(s * z(rng) - s * s / 2.0);
    }
  }
  auto cell_factor = [&](CellIndex c, int day) {
    return factor[static_cast<std::size_t>(day) * n_cells + to_index(c)];
  };

  std::vector<detail::Resident> residents;
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (std::size_t i = 0; i < cfg.population; ++i) {
    detail::Resident r{gen.serving_cell(gen.random_point()), std::nullopt};
    if (u01(rng) < cfg.worker_fraction)
      r.work = gen.serving_cell(gen.random_point());
    residents.push_back(r);
  }
  for (auto const &h : cfg.hotspots) {
    for (std::size_t i = 0; i < h.residents; ++i) {
      detail::Resident r{gen.serving_cell(gen.random_point_in_disk(h.center, h.radius_m)),
                         std::nullopt};
      if (u01(rng) < cfg.worker_fraction)
        r.work = gen.serving_cell(gen.random_point());
      residents.push_back(r);
    }
    for (std::size_t i = 0; i < h.workers; ++i)
      residents.push_back({gen.serving_cell(gen.random_point()),
                           gen.serving_cell(gen.random_point_in_disk(h.center, h.radius_m))});
  }

  Timestamp const first_day = day_of(cfg.start);
  double const work_share = gen.weight_between(cfg.work_begin_hour, cfg.work_end_hour);
  for (auto const &res : residents) {
    auto uid = static_cast<UserIndex>(city.users.size());
    city.users.push_back(hashed_user_name(static_cast<std::uint32_t>(city.users.size())));
    double rate = gen.draw_rate();
    city.homes.push_back(res.home);
    city.daily_rates.push_back(rate);
    double regular = rate * (1.0 - cfg.errand_fraction);
    for (int d = 0; d < cfg.days; ++d) {
      Timestamp day = first_day + d;
      auto emit = [&](CellIndex c, int h0, int h1, double mean) {
        auto n = gen.poisson(mean * cell_factor(c, d));
        for (std::size_t k = 0; k < n; ++k)
          city.records.push_back({uid, c, gen.time_in_hour(day, gen.draw_hour(h0, h1)), cfg.mcc});
      };
      if (res.work) {
        emit(res.home, 0, cfg.work_begin_hour, regular * gen.weight_between(0, cfg.work_begin_hour));
        emit(*res.work, cfg.work_begin_hour, cfg.work_end_hour, regular * work_share);
        emit(res.home, cfg.work_end_hour, 24, regular * gen.weight_between(cfg.work_end_hour, 24));
      } else {
        emit(res.home, 0, 24, regular);
      }
    }
  }

  // Errands: each (cell, day) draws its visits from the activity factor, and
  // each visit goes to a user picked in proportion to their call rate, so the
  // per-user expected rate is unchanged while distinct-user counts vary by
  // cell and day.
  if (cfg.errand_fraction > 0.0 && !city.daily_rates.empty()) {
    double const total = std::accumulate(city.daily_rates.begin(), city.daily_rates.end(), 0.0);
    double share_total = 0.0;
    for (auto const &l : cfg.layers)
      share_total += l.traffic_share;
    std::vector<double> per_cell;
    for (auto const &l : cfg.layers)
      per_cell.insert(per_cell.end(), l.count,
                      total * cfg.errand_fraction * l.traffic_share / share_total /
                          static_cast<double>(l.count));
    std::discrete_distribution<std::size_t> pick_user(city.daily_rates.begin(),
                                                      city.daily_rates.end());
    for (int d = 0; d < cfg.days; ++d)
      for (std::size_t c = 0; c < n_cells; ++c) {
        auto cell = static_cast<CellIndex>(c);
        auto n = gen.poisson(per_cell[c] * cell_factor(cell, d));
        for (std::size_t k = 0; k < n; ++k) {
          auto uid = static_cast<UserIndex>(pick_user(rng));
          city.records.push_back(
              {uid, cell, gen.time_in_hour(first_day + d, gen.draw_hour(0, 24)), cfg.mcc});
        }
      }
  }
  city.visits.resize(city.users.size());
  city.cell_day_factor = std::move(factor);
  return city;
}

/// Sends round(true_attendance * carrier_share) users to the event. They
/// are drawn from residents living more than 3 km from the venue who are not
/// at another event at the time; new stay-at-home users are added when there
/// are not enough. From a random arrival lead to a departure lag around the
/// event, an attendee's ordinary records are replaced by calls from the cells
/// overlapping the venue extent.
inline PlantedRecord plant_event(SyntheticCity &city, PlantedEvent const &ev)
{
  auto const &cfg = city.config;
  if (!ev.center.valid())
    throw InputError("planted event " + ev.event_id + ": invalid venue coordinates");
  if (!(ev.center.lat >= cfg.south_west.lat && ev.center.lat <= cfg.north_east.lat &&
        ev.center.lon >= cfg.south_west.lon && ev.center.lon <= cfg.north_east.lon))
    throw InputError("planted event " + ev.event_id + ": venue outside the city");
  if (ev.start >= ev.end)
    throw InputError("planted event " + ev.event_id + ": start must precede end");
  if (!(ev.true_attendance >= 0.0))
    throw InputError("planted event " + ev.event_id + ": negative attendance");
  if (!(ev.usage_multiplier >= 0.0))
    throw InputError("planted event " + ev.event_id + ": negative usage multiplier");
  auto const span = city.span();
  if (ev.start < span.begin || ev.end > span.end)
    throw InputError("planted event " + ev.event_id + ": outside the simulated span");
  if (ev.confounder) {
    bool near = std::any_of(cfg.hotspots.begin(), cfg.hotspots.end(), [&](Hotspot const &h) {
      return distance_m(h.center, ev.center) <= 500.0;
    });
    if (!near)
      throw InputError("planted event " + ev.event_id + ": confounder venue without a hotspot");
  }
  auto area = relevant_cells(city.cells, {ev.center, ev.extent_m});
  if (area.empty())
    throw InputError("planted event " + ev.event_id + ": venue covered by zero cells");

  PlantedRecord rec{ev, 0, area.size()};
  auto const n_users =
      static_cast<std::size_t>(std::llround(ev.true_attendance * cfg.carrier_share));
  rec.injected_users = n_users;

  std::seed_seq seq{cfg.rng_seed, static_cast<std::uint64_t>(city.planted.size()) + 1,
                    static_cast<std::uint64_t>(ev.start)};
  std::mt19937_64 rng(seq);
  detail::Generator gen(cfg, city.cells, rng);
  std::uniform_int_distribution<Timestamp> lead(0, 90 * kSecondsPerMinute);
  std::uniform_int_distribution<Timestamp> lag(0, 45 * kSecondsPerMinute);
  TimeWindow const reach{std::max(span.begin, ev.start - 90 * kSecondsPerMinute),
                         std::min(span.end, ev.end + 45 * kSecondsPerMinute)};

  std::vector<bool> far(city.cells.size());
  for (std::size_t i = 0; i < city.cells.size(); ++i)
    far[i] = distance_m(city.cells[static_cast<CellIndex>(i)].center, ev.center) > 3000.0;
  std::vector<UserIndex> pool;
  for (std::size_t u = 0; u < city.homes.size(); ++u) {
    if (!far[to_index(city.homes[u])])
      continue;
    auto const &v = city.visits[u];
    bool busy = std::any_of(v.begin(), v.end(), [&](TimeWindow const &w) {
      return w.begin < reach.end + kSecondsPerHour && reach.begin < w.end + kSecondsPerHour;
    });
    if (!busy)
      pool.push_back(static_cast<UserIndex>(u));
  }
  std::shuffle(pool.begin(), pool.end(), rng);
  if (pool.size() > n_users)
    pool.resize(n_users);
  std::sort(pool.begin(), pool.end());

  // Top up with new users who stay home for the whole span.
  std::vector<CellIndex> far_cells;
  for (std::size_t i = 0; i < far.size(); ++i)
    if (far[i])
      far_cells.push_back(static_cast<CellIndex>(i));
  if (far_cells.empty())
    for (std::size_t i = 0; i < city.cells.size(); ++i)
      if (!std::binary_search(area.begin(), area.end(), static_cast<CellIndex>(i)))
        far_cells.push_back(static_cast<CellIndex>(i));
  if (far_cells.empty())
    far_cells = area;
  std::uniform_int_distribution<std::size_t> pick_home(0, far_cells.size() - 1);
  Timestamp const first_day = day_of(span.begin);
  while (pool.size() < n_users) {
    auto uid = static_cast<UserIndex>(city.users.size());
    city.users.push_back(hashed_user_name(static_cast<std::uint32_t>(city.users.size())));
    CellIndex home = far_cells[pick_home(rng)];
    double rate = gen.draw_rate();
    city.homes.push_back(home);
    city.daily_rates.push_back(rate);
    city.visits.emplace_back();
    for (int d = 0; d < cfg.days; ++d) {
      auto n = gen.poisson(rate * city.activity(home, first_day + d));
      for (std::size_t k = 0; k < n; ++k)
        city.records.push_back(
            {uid, home, gen.time_in_hour(first_day + d, gen.draw_hour(0, 24)), cfg.mcc});
    }
    pool.push_back(uid);
  }

  std::vector<TimeWindow> stay(pool.size());
  std::vector<std::int64_t> slot(city.users.size(), -1);
  for (std::size_t i = 0; i < pool.size(); ++i) {
    stay[i] = {std::max(span.begin, ev.start - lead(rng)), std::min(span.end, ev.end + lag(rng))};
    slot[to_index(pool[i])] = static_cast<std::int64_t>(i);
  }
  std::erase_if(city.records, [&](CdrRecord const &r) {
    auto i = slot[to_index(r.user)];
    return i >= 0 && stay[static_cast<std::size_t>(i)].contains(r.timestamp);
  });

  std::vector<double> area_w;
  for (auto c : area)
    area_w.push_back(std::pow(city.cells[c].coverage_radius_m, -ev.cell_weight_exponent));
  std::discrete_distribution<std::size_t> pick_area(area_w.begin(), area_w.end());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    auto u = pool[i];
    city.visits[to_index(u)].push_back(stay[i]);
    double const hours =
        static_cast<double>(stay[i].duration()) / static_cast<double>(kSecondsPerHour);
    auto n = gen.poisson(city.daily_rates[to_index(u)] / 16.0 * ev.usage_multiplier * hours);
    std::uniform_int_distribution<Timestamp> when(stay[i].begin, stay[i].end - 1);
    for (std::size_t k = 0; k < n; ++k)
      city.records.push_back({u, area[pick_area(rng)], when(rng), cfg.mcc});
  }

  EventSpec spec;
  spec.event_id = ev.event_id;
  spec.venue_id = ev.venue_id;
  spec.center = ev.center;
  spec.scheduled_start = ev.start;
  spec.scheduled_end = ev.end;
  if (ev.publish_ground_truth)
    spec.ground_truth = ev.true_attendance;
  spec.category = ev.category;
  city.events.push_back(spec);
  city.planted.push_back(rec);
  return rec;
}

} // namespace cdrcrowd::sim
