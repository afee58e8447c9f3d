#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "cdrcrowd/simulator.hpp"

// Seeded benchmark cities. Each builder returns a city with its events
// already planted; the same seed always gives the same city.
namespace cdrcrowd::scenario {

struct Venue
{
  std::string venue_id;
  GeoPoint center;
  double extent_m = 0.0;
};

// Nearest cell site whose own coverage reaches `min_radius_m`.
inline GeoPoint cell_site_near(CellCatalog const &cells, GeoPoint p, double min_radius_m)
{
  GeoPoint best = p;
  double best_d = std::numeric_limits<double>::infinity();
  for (auto const &c : cells.cells()) {
    if (c.coverage_radius_m < min_radius_m)
      continue;
    double d = distance_m(c.center, p);
    if (d < best_d) {
      best_d = d;
      best = c.center;
    }
  }
  return best;
}

// Moves a venue whose area holds no cell onto a site that covers it.
inline void ensure_covered(CellCatalog const &cells, Venue &v)
{
  if (relevant_cells(cells, {v.center, v.extent_m}).empty())
    v.center = cell_site_near(cells, v.center, std::max(0.0, -v.extent_m) + 50.0);
}

// Day `d` of the city at hour `h`.
inline Timestamp at(sim::CityConfig const &cfg, int d, int h)
{
  return (day_of(cfg.start) + d) * kSecondsPerDay + h * kSecondsPerHour;
}

// Dense small cells carrying most traffic plus a sparse macro tier.
inline sim::CityConfig layered_city(std::uint64_t seed)
{
  sim::CityConfig c;
  c.rng_seed = seed;
  c.population = 10000;
  c.days = 35;
  c.cell_day_noise = 0.5;
  c.errand_fraction = 0.6;
  c.layers = {sim::CellLayer{800, 100.0, 300.0, 1.0, std::nullopt},
              sim::CellLayer{6, 1500.0, 2500.0, 0.02, 0.3}};
  return c;
}

inline constexpr double kAttendeeCellExponent = 2.0;

/// Four venues with extents -200, 0, 300 and 800 m, eight events each.
/// Attendance grows with the number of cells in the venue area.
inline sim::SyntheticCity radius_recovery(std::uint64_t seed = 1)
{
  auto cfg = layered_city(seed);
  auto city = sim::generate_city(cfg);
  std::vector<Venue> venues = {{"V0", {45.025, 7.64}, -200.0},
                               {"V1", {45.025, 7.71}, 0.0},
                               {"V2", {45.075, 7.64}, 300.0},
                               {"V3", {45.075, 7.71}, 800.0}};
  for (auto &v : venues)
    ensure_covered(city.cells, v);

  std::vector<double> area(venues.size());
  for (std::size_t i = 0; i < venues.size(); ++i)
    area[i] = static_cast<double>(
        relevant_cells(city.cells, {venues[i].center, venues[i].extent_m}).size());
  double const mult[8] = {0.7, 0.8, 0.9, 1.0, 1.1, 1.2, 1.3, 1.4};
  for (std::size_t vi = 0; vi < venues.size(); ++vi)
    for (int k = 0; k < 8; ++k) {
      sim::PlantedEvent e;
      e.event_id = venues[vi].venue_id + "E" + std::to_string(k);
      e.venue_id = venues[vi].venue_id;
      e.center = venues[vi].center;
      e.extent_m = venues[vi].extent_m;
      e.usage_multiplier = 1.0;
      e.cell_weight_exponent = kAttendeeCellExponent;
      e.start = at(cfg, 7 + 7 * (k / 2) + (k % 2 ? 3 : 0), k % 2 ? 9 : 16);
      e.end = e.start + 2 * kSecondsPerHour;
      e.true_attendance = std::round(700.0 * area[vi] / area[2] *
                                     mult[(static_cast<std::size_t>(k) * 3 + vi) % 8]);
      sim::plant_event(city, e);
    }
  return city;
}

/// A central venue inside a dense hotspot hosting small events, and a
/// suburban venue hosting large ones; six events each.
inline sim::SyntheticCity confounder(std::uint64_t seed = 1)
{
  auto cfg = layered_city(seed);
  cfg.days = 42;
  GeoPoint const centre{45.05, 7.675};
  cfg.hotspots.push_back({centre, 500.0, 2500, 6000});
  auto city = sim::generate_city(cfg);

  Venue central{"CENTRAL", cell_site_near(city.cells, centre, 250.0), 0.0};
  Venue suburb{"SUBURB", cell_site_near(city.cells, {45.015, 7.615}, 250.0), 300.0};
  double const small[6] = {2000, 3000, 4000, 5000, 6500, 8000};
  double const large[6] = {10000, 15000, 20000, 25000, 32000, 40000};
  for (int k = 0; k < 6; ++k)
    for (int side = 0; side < 2; ++side) {
      auto const &v = side == 0 ? central : suburb;
      sim::PlantedEvent e;
      e.event_id = v.venue_id + "-" + std::to_string(k + 1);
      e.venue_id = v.venue_id;
      e.center = v.center;
      e.extent_m = v.extent_m;
      e.confounder = side == 0;
      e.usage_multiplier = 1.0;
      e.cell_weight_exponent = kAttendeeCellExponent;
      e.start = at(cfg, 7 + 5 * k + side * 2, side == 0 ? 18 : 15);
      e.end = e.start + 3 * kSecondsPerHour;
      e.true_attendance = side == 0 ? small[k] : large[k];
      sim::plant_event(city, e);
    }
  return city;
}

/// Fifteen events at five venues, 2,000 to 80,000 attendees, carrier share
/// 0.3.
inline sim::SyntheticCity estimation(std::uint64_t seed = 1)
{
  auto cfg = layered_city(seed);
  cfg.days = 42;
  cfg.population = 20000;
  cfg.carrier_share = 0.3;
  auto city = sim::generate_city(cfg);
  std::vector<Venue> venues = {{"STADIUM", {45.03, 7.63}, 300.0},
                               {"ARENA", {45.08, 7.72}, 0.0},
                               {"SQUARE", {45.05, 7.68}, 100.0},
                               {"PARK", {45.02, 7.72}, 800.0},
                               {"HALL", {45.085, 7.625}, -100.0}};
  for (auto &v : venues)
    ensure_covered(city.cells, v);
  double const attendance[15] = {2000,  3500,  5000,  7000,  9000,  12000, 15000, 20000,
                                 26000, 33000, 40000, 50000, 60000, 70000, 80000};
  // Spread sizes over venues so no venue only hosts small events.
  std::size_t const order[15] = {0, 7, 13, 3, 10, 5, 12, 1, 8, 14, 4, 11, 2, 9, 6};
  for (std::size_t i = 0; i < 15; ++i) {
    auto const &v = venues[i % venues.size()];
    auto round = static_cast<int>(i / venues.size());
    sim::PlantedEvent e;
    e.event_id = "E" + std::to_string(i + 1);
    e.venue_id = v.venue_id;
    e.center = v.center;
    e.extent_m = v.extent_m;
    e.usage_multiplier = 1.0;
    e.cell_weight_exponent = kAttendeeCellExponent;
    e.start = at(cfg, 8 + 9 * round + static_cast<int>(i % venues.size()), i % 2 ? 15 : 19);
    e.end = e.start + (i % 3 == 0 ? 3 : 2) * kSecondsPerHour;
    e.true_attendance = attendance[order[i]];
    sim::plant_event(city, e);
  }
  return city;
}

/// About five million records over 500 cells with 15 events.
inline sim::SyntheticCity performance(std::uint64_t seed = 1)
{
  sim::CityConfig cfg;
  cfg.rng_seed = seed;
  cfg.population = 36000;
  cfg.days = 28;
  cfg.cell_day_noise = 0.3;
  cfg.layers = {sim::CellLayer{480, 150.0, 500.0, 1.0, std::nullopt},
                sim::CellLayer{20, 1500.0, 2500.0, 0.1, std::nullopt}};
  auto city = sim::generate_city(cfg);
  for (int i = 0; i < 15; ++i) {
    sim::PlantedEvent e;
    e.event_id = "P" + std::to_string(i + 1);
    e.venue_id = "PV" + std::to_string(i % 5);
    e.center = cell_site_near(city.cells, {45.02 + 0.015 * (i % 5), 7.63 + 0.02 * (i % 5)}, 200.0);
    e.extent_m = 100.0 * (i % 5);
    e.start = at(cfg, 7 + i, 18);
    e.end = e.start + 2 * kSecondsPerHour;
    e.true_attendance = 3000.0 + 4000.0 * i;
    sim::plant_event(city, e);
  }
  return city;
}

/// Small city for trying the tools: two venues, three events each.
inline sim::SyntheticCity demo(std::uint64_t seed = 1)
{
  sim::CityConfig cfg;
  cfg.rng_seed = seed;
  cfg.population = 3000;
  cfg.days = 21;
  cfg.layers = {sim::CellLayer{200, 150.0, 500.0, 1.0, std::nullopt}};
  auto city = sim::generate_city(cfg);
  Venue a{"NORTH", cell_site_near(city.cells, {45.08, 7.65}, 150.0), 0.0};
  Venue b{"SOUTH", cell_site_near(city.cells, {45.02, 7.72}, 150.0), 300.0};
  for (int k = 0; k < 3; ++k)
    for (auto const *v : {&a, &b}) {
      sim::PlantedEvent e;
      e.event_id = v->venue_id + "-" + std::to_string(k + 1);
      e.venue_id = v->venue_id;
      e.center = v->center;
      e.extent_m = v->extent_m;
      e.start = at(cfg, 7 + 4 * k + (v == &b ? 2 : 0), 17);
      e.end = e.start + 2 * kSecondsPerHour;
      e.true_attendance = 1500.0 * (k + 1) + (v == &b ? 2500.0 : 0.0);
      sim::plant_event(city, e);
    }
  return city;
}

inline std::vector<std::string_view> names()
{
  return {"demo", "radius", "confounder", "estimation", "performance"};
}

inline sim::SyntheticCity build(std::string_view name, std::uint64_t seed)
{
  if (name == "demo")
    return demo(seed);
  if (name == "radius")
    return radius_recovery(seed);
  if (name == "confounder")
    return confounder(seed);
  if (name == "estimation")
    return estimation(seed);
  if (name == "performance")
    return performance(seed);
  throw InputError("unknown scenario: " + std::string(name));
}

} // namespace cdrcrowd::scenario
