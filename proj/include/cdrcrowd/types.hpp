#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cdrcrowd/errors.hpp"

namespace cdrcrowd {

// Seconds since the Unix epoch, UTC.
using Timestamp = std::int64_t;

inline constexpr Timestamp kSecondsPerMinute = 60;
inline constexpr Timestamp kSecondsPerHour = 3600;
inline constexpr Timestamp kSecondsPerDay = 86400;

// Half-open interval [begin, end).
struct TimeWindow
{
  Timestamp begin = 0;
  Timestamp end = 0;

  [[nodiscard]] constexpr Timestamp duration() const { return end - begin; }
  [[nodiscard]] constexpr bool contains(Timestamp t) const
  {
    return t >= begin && t < end;
  }
  [[nodiscard]] constexpr TimeWindow shifted(Timestamp delta) const
  {
    return {begin + delta, end + delta};
  }

  friend constexpr bool operator==(TimeWindow const &, TimeWindow const &) = default;
};

struct GeoPoint
{
  double lat = 0.0;
  double lon = 0.0;

  [[nodiscard]] bool valid() const
  {
    return std::isfinite(lat) && std::isfinite(lon) && lat >= -90.0 &&
           lat <= 90.0 && lon >= -180.0 && lon <= 180.0;
  }

  // Validating factory; aggregate initialization skips the bounds check.
  static GeoPoint checked(double lat, double lon)
  {
    GeoPoint p{lat, lon};
    if (!p.valid())
      throw InputError("coordinates out of range: (" + std::to_string(lat) +
                       ", " + std::to_string(lon) + ")");
    return p;
  }

  friend bool operator==(GeoPoint const &, GeoPoint const &) = default;
};

enum class CellIndex : std::uint32_t
{
};
enum class UserIndex : std::uint32_t
{
};

constexpr std::uint32_t to_index(CellIndex c) { return static_cast<std::uint32_t>(c); }
constexpr std::uint32_t to_index(UserIndex u) { return static_cast<std::uint32_t>(u); }

struct Cell
{
  std::string id;
  GeoPoint center;
  double coverage_radius_m = 0.0;
};

// Sorted, duplicate-free list of cells.
using CellSet = std::vector<CellIndex>;

class CellCatalog
{
public:
  CellCatalog() = default;

  CellIndex add(Cell cell)
  {
    if (!cell.center.valid())
      throw InputError("cell " + cell.id + ": coordinates out of range");
    if (!(cell.coverage_radius_m > 0.0) || !std::isfinite(cell.coverage_radius_m))
      throw InputError("cell " + cell.id + ": coverage radius must be positive");
    auto const idx = static_cast<CellIndex>(cells_.size());
    if (!by_id_.emplace(cell.id, idx).second)
      throw InputError("duplicate cell id " + cell.id);
    cells_.push_back(std::move(cell));
    return idx;
  }

  [[nodiscard]] std::optional<CellIndex> find(std::string_view id) const
  {
    auto it = by_id_.find(std::string(id));
    if (it == by_id_.end())
      return std::nullopt;
    return it->second;
  }

  [[nodiscard]] Cell const &operator[](CellIndex c) const { return cells_[to_index(c)]; }
  [[nodiscard]] std::size_t size() const { return cells_.size(); }
  [[nodiscard]] bool empty() const { return cells_.empty(); }
  [[nodiscard]] std::vector<Cell> const &cells() const { return cells_; }

  [[nodiscard]] CellSet all() const
  {
    CellSet out(cells_.size());
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = static_cast<CellIndex>(i);
    return out;
  }

private:
  std::vector<Cell> cells_;
  std::unordered_map<std::string, CellIndex> by_id_;
};

// One network interaction. User and cell are interned indices into the
// owning store's tables.
struct CdrRecord
{
  UserIndex user{};
  CellIndex cell{};
  Timestamp timestamp = 0;
  std::uint16_t mcc = 0;

  friend bool operator==(CdrRecord const &, CdrRecord const &) = default;
};

enum class EventCategory
{
  structured,
  unstructured
};

inline std::string_view to_string(EventCategory c)
{
  return c == EventCategory::structured ? "structured" : "unstructured";
}

inline std::optional<EventCategory> parse_category(std::string_view s)
{
  if (s == "structured")
    return EventCategory::structured;
  if (s == "unstructured")
    return EventCategory::unstructured;
  return std::nullopt;
}

struct EventSpec
{
  std::string event_id;
  std::string venue_id;
  GeoPoint center;
  Timestamp scheduled_start = 0;
  Timestamp scheduled_end = 0;
  std::optional<double> ground_truth;
  EventCategory category = EventCategory::structured;

  [[nodiscard]] TimeWindow scheduled() const { return {scheduled_start, scheduled_end}; }

  // Scheduled window widened by `pad` seconds on both sides.
  [[nodiscard]] TimeWindow padded(Timestamp pad) const
  {
    return {scheduled_start - pad, scheduled_end + pad};
  }

  void validate() const
  {
    if (!center.valid())
      throw InputError("event " + event_id + ": coordinates out of range");
    if (scheduled_start >= scheduled_end)
      throw InputError("event " + event_id + ": start must precede end");
    if (ground_truth && !(*ground_truth >= 0.0))
      throw InputError("event " + event_id + ": negative ground truth");
  }
};

// Calendar helpers (UTC).

inline Timestamp make_timestamp(int year, unsigned month, unsigned day, int hour = 0,
                                int minute = 0, int second = 0)
{
  using namespace std::chrono;
  year_month_day ymd{std::chrono::year{year}, std::chrono::month{month},
                     std::chrono::day{day}};
  if (!ymd.ok())
    throw InputError("invalid calendar date");
  auto days = sys_days{ymd}.time_since_epoch().count();
  return static_cast<Timestamp>(days) * kSecondsPerDay + hour * kSecondsPerHour +
         minute * kSecondsPerMinute + second;
}

// Floor division that rounds towards negative infinity.
constexpr Timestamp floor_div(Timestamp a, Timestamp b)
{
  Timestamp q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0)))
    --q;
  return q;
}

constexpr Timestamp day_of(Timestamp t) { return floor_div(t, kSecondsPerDay); }
constexpr Timestamp second_of_day(Timestamp t) { return t - day_of(t) * kSecondsPerDay; }

} // namespace cdrcrowd
