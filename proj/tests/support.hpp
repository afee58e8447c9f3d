#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "cdrcrowd.hpp"

namespace testing_support {

using namespace cdrcrowd;

struct Row
{
  std::string user;
  std::string cell;
  Timestamp t;
};

inline CellCatalog catalog(std::vector<Cell> cells)
{
  CellCatalog c;
  for (auto &x : cells)
    c.add(std::move(x));
  return c;
}

inline CdrStore store_of(CellCatalog cells, std::vector<Row> const &rows,
                         std::optional<TimeWindow> span = {})
{
  CdrStoreBuilder b(std::move(cells));
  for (auto const &r : rows)
    b.add(b.intern_user(r.user), *b.cells().find(r.cell), r.t, 222);
  return std::move(b).build(span);
}

// Random cells scattered in a box of about 10 x 10 km.
inline CellCatalog random_cells(std::mt19937_64 &rng, std::size_t n, double rmin = 100.0,
                                double rmax = 1500.0)
{
  std::uniform_real_distribution<double> lat(45.0, 45.09), lon(7.6, 7.73), rad(rmin, rmax);
  CellCatalog c;
  for (std::size_t i = 0; i < n; ++i)
    c.add({"c" + std::to_string(i), {lat(rng), lon(rng)}, rad(rng)});
  return c;
}

// Random store: `users` users, `records` records over `days` days.
inline CdrStore random_store(std::mt19937_64 &rng, std::size_t cells, std::size_t users,
                             std::size_t records, int days = 10)
{
  auto cat = random_cells(rng, cells);
  std::uniform_int_distribution<std::size_t> pu(0, users - 1), pc(0, cells - 1);
  std::uniform_int_distribution<Timestamp> pt(0, days * kSecondsPerDay - 1);
  Timestamp const t0 = make_timestamp(2012, 3, 1);
  std::vector<Row> rows;
  for (std::size_t i = 0; i < records; ++i)
    rows.push_back({"u" + std::to_string(pu(rng)), "c" + std::to_string(pc(rng)), t0 + pt(rng)});
  return store_of(std::move(cat), rows);
}

inline std::string to_csv(CdrStore const &store)
{
  std::ostringstream o;
  write_cdrs(o, store);
  return o.str();
}

inline std::string cells_csv(CellCatalog const &cells)
{
  std::ostringstream o;
  write_cells(o, cells);
  return o.str();
}

// Small city used by several suites; cheap to build.
inline sim::CityConfig small_city(std::uint64_t seed = 3)
{
  sim::CityConfig c;
  c.rng_seed = seed;
  c.population = 600;
  c.days = 14;
  c.layers = {sim::CellLayer{150, 400.0, 900.0, 1.0, std::nullopt}};
  return c;
}

// Fresh directory under the system temp dir, removed on destruction.
struct TempDir
{
  std::filesystem::path path;

  explicit TempDir(std::string const &tag)
  {
    std::random_device rd;
    path = std::filesystem::temp_directory_path() /
           ("cdrcrowd-" + tag + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  TempDir(TempDir const &) = delete;
  TempDir &operator=(TempDir const &) = delete;

  [[nodiscard]] std::string operator/(std::string const &name) const { return (path / name).string(); }
};

inline std::string slurp(std::string const &path)
{
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// cells.csv, cdrs.csv and events.csv for a city.
inline void write_inputs(sim::SyntheticCity const &city, std::vector<EventSpec> const &events,
                         TempDir const &dir)
{
  auto store = city.store();
  write_file(dir / "cells.csv", [&](std::ostream &o) { write_cells(o, store.cells()); });
  write_file(dir / "cdrs.csv", [&](std::ostream &o) { write_cdrs(o, store); });
  write_file(dir / "events.csv", [&](std::ostream &o) { write_events(o, events); });
}

} // namespace testing_support
