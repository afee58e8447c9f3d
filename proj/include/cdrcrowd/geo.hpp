#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "cdrcrowd/types.hpp"

namespace cdrcrowd {

inline constexpr double kEarthRadiusM = 6371000.0;

constexpr double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }
constexpr double rad2deg(double rad) { return rad * 180.0 / std::numbers::pi; }

// Great-circle distance in meters (haversine, spherical Earth).
inline double distance_m(GeoPoint const &a, GeoPoint const &b)
{
  double const phi1 = deg2rad(a.lat);
  double const phi2 = deg2rad(b.lat);
  double const dphi = phi2 - phi1;
  double const dlambda = deg2rad(b.lon - a.lon);
  double const s1 = std::sin(dphi / 2.0);
  double const s2 = std::sin(dlambda / 2.0);
  double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
  h = std::min(1.0, std::max(0.0, h));
  return 2.0 * kEarthRadiusM * std::asin(std::sqrt(h));
}

// Circle around an event venue. A negative radius requires a cell to reach
// past the center by |radius| before it counts.
struct EventArea
{
  GeoPoint center;
  double radius_m = 0.0;
};

inline bool is_relevant(Cell const &cell, EventArea const &area)
{
  return distance_m(area.center, cell.center) < area.radius_m + cell.coverage_radius_m;
}

inline CellSet relevant_cells(CellCatalog const &cells, EventArea const &area)
{
  CellSet out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    auto idx = static_cast<CellIndex>(i);
    if (is_relevant(cells[idx], area))
      out.push_back(idx);
  }
  return out;
}

// Distances from a fixed center to every cell, computed once so sweeps over
// many radii avoid recomputing them.
class CellDistances
{
public:
  CellDistances(CellCatalog const &cells, GeoPoint const &center) : cells_(&cells)
  {
    dist_.reserve(cells.size());
    for (auto const &c : cells.cells())
      dist_.push_back(distance_m(center, c.center));
  }

  // Same predicate as is_relevant.
  [[nodiscard]] CellSet relevant(double radius_m) const
  {
    CellSet out;
    for (std::size_t i = 0; i < dist_.size(); ++i) {
      auto idx = static_cast<CellIndex>(i);
      if (dist_[i] < radius_m + (*cells_)[idx].coverage_radius_m)
        out.push_back(idx);
    }
    return out;
  }

  [[nodiscard]] double operator[](CellIndex c) const { return dist_[to_index(c)]; }

private:
  CellCatalog const *cells_;
  std::vector<double> dist_;
};

// Equirectangular projection about an origin; meters east (x) and north (y).
class LocalProjection
{
public:
  explicit LocalProjection(GeoPoint origin)
      : origin_(origin), cos_lat_(std::cos(deg2rad(origin.lat)))
  {}

  struct Xy
  {
    double x = 0.0;
    double y = 0.0;
  };

  [[nodiscard]] Xy to_xy(GeoPoint const &p) const
  {
    return {kEarthRadiusM * deg2rad(p.lon - origin_.lon) * cos_lat_,
            kEarthRadiusM * deg2rad(p.lat - origin_.lat)};
  }

  [[nodiscard]] GeoPoint to_geo(Xy const &xy) const
  {
    return {origin_.lat + rad2deg(xy.y / kEarthRadiusM),
            origin_.lon + rad2deg(xy.x / (kEarthRadiusM * cos_lat_))};
  }

  [[nodiscard]] GeoPoint origin() const { return origin_; }

private:
  GeoPoint origin_;
  double cos_lat_;
};

} // namespace cdrcrowd
