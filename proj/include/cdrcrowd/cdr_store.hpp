#pragma once

#include <algorithm>
#include <fstream>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "cdrcrowd/csv.hpp"
#include "cdrcrowd/errors.hpp"
#include "cdrcrowd/types.hpp"

namespace cdrcrowd {

inline constexpr std::string_view kCdrHeader = "user_id,mcc,timestamp,cell_id";
inline constexpr std::string_view kCellHeader = "cell_id,lat,lon,radius_m";
inline constexpr std::string_view kEventHeader =
    "event_id,venue_id,lat,lon,start_iso8601,end_iso8601,ground_truth,category";

/// Immutable, indexed collection of CDRs.
///
/// Records are held cell-major (time-ordered inside each cell), so a
/// cell/time-window lookup is a binary search plus a contiguous scan. A second
/// index lists each user's records in time order. All queries are const and
/// safe to run concurrently.
class CdrStore
{
public:
  CdrStore() = default;

  CdrStore(CellCatalog cells, std::vector<std::string> user_names,
           std::vector<CdrRecord> records, std::optional<TimeWindow> declared_span = {})
      : cells_(std::move(cells)), user_names_(std::move(user_names)), records_(std::move(records))
  {
    for (auto const &r : records_) {
      if (to_index(r.cell) >= cells_.size())
        throw InputError("record references unknown cell index");
      if (to_index(r.user) >= user_names_.size())
        throw InputError("record references unknown user index");
    }
    std::sort(records_.begin(), records_.end(), [](CdrRecord const &a, CdrRecord const &b) {
      if (a.cell != b.cell)
        return a.cell < b.cell;
      if (a.timestamp != b.timestamp)
        return a.timestamp < b.timestamp;
      if (a.user != b.user)
        return a.user < b.user;
      return a.mcc < b.mcc;
    });

    cell_offsets_.assign(cells_.size() + 1, 0);
    for (auto const &r : records_)
      ++cell_offsets_[to_index(r.cell) + 1];
    std::partial_sum(cell_offsets_.begin(), cell_offsets_.end(), cell_offsets_.begin());

    user_offsets_.assign(user_names_.size() + 1, 0);
    for (auto const &r : records_)
      ++user_offsets_[to_index(r.user) + 1];
    std::partial_sum(user_offsets_.begin(), user_offsets_.end(), user_offsets_.begin());
    by_user_.resize(records_.size());
    {
      auto cursor = user_offsets_;
      for (std::size_t i = 0; i < records_.size(); ++i)
        by_user_[cursor[to_index(records_[i].user)]++] = static_cast<std::uint32_t>(i);
    }
    for (std::size_t u = 0; u < user_names_.size(); ++u) {
      auto first = by_user_.begin() + static_cast<std::ptrdiff_t>(user_offsets_[u]);
      auto last = by_user_.begin() + static_cast<std::ptrdiff_t>(user_offsets_[u + 1]);
      std::sort(first, last, [this](std::uint32_t a, std::uint32_t b) {
        auto const &ra = records_[a];
        auto const &rb = records_[b];
        if (ra.timestamp != rb.timestamp)
          return ra.timestamp < rb.timestamp;
        return ra.cell < rb.cell;
      });
    }

    user_lookup_.reserve(user_names_.size());
    for (std::size_t u = 0; u < user_names_.size(); ++u)
      user_lookup_.emplace(user_names_[u], static_cast<UserIndex>(u));

    if (declared_span) {
      span_ = *declared_span;
    } else if (!records_.empty()) {
      auto [lo, hi] = std::minmax_element(
          records_.begin(), records_.end(),
          [](CdrRecord const &a, CdrRecord const &b) { return a.timestamp < b.timestamp; });
      span_ = {lo->timestamp, hi->timestamp + 1};
    }
  }

  [[nodiscard]] CellCatalog const &cells() const { return cells_; }
  [[nodiscard]] std::size_t size() const { return records_.size(); }
  [[nodiscard]] bool empty() const { return records_.empty(); }
  [[nodiscard]] std::size_t user_count() const { return user_names_.size(); }
  [[nodiscard]] TimeWindow span() const { return span_; }
  [[nodiscard]] std::span<CdrRecord const> records() const { return records_; }

  [[nodiscard]] std::string const &user_name(UserIndex u) const
  {
    return user_names_[to_index(u)];
  }
  [[nodiscard]] std::optional<UserIndex> find_user(std::string const &name) const
  {
    auto it = user_lookup_.find(name);
    if (it == user_lookup_.end())
      return std::nullopt;
    return it->second;
  }

  // Time-ordered records of one cell.
  [[nodiscard]] std::span<CdrRecord const> cell_records(CellIndex c) const
  {
    auto i = to_index(c);
    return std::span<CdrRecord const>(records_).subspan(
        cell_offsets_[i], cell_offsets_[i + 1] - cell_offsets_[i]);
  }

  [[nodiscard]] std::span<CdrRecord const> cell_records(CellIndex c, Timestamp t0,
                                                        Timestamp t1) const
  {
    auto all = cell_records(c);
    if (t1 <= t0)
      return {};
    auto by_time = [](CdrRecord const &r, Timestamp t) { return r.timestamp < t; };
    auto lo = std::lower_bound(all.begin(), all.end(), t0, by_time);
    auto hi = std::lower_bound(lo, all.end(), t1, by_time);
    return {lo, hi};
  }

  // Number of records of one user, without materializing them.
  [[nodiscard]] std::size_t user_record_count(UserIndex u) const
  {
    return user_offsets_[to_index(u) + 1] - user_offsets_[to_index(u)];
  }

  // Time-ordered records of one user.
  [[nodiscard]] std::vector<CdrRecord> user_records(UserIndex u) const
  {
    std::vector<CdrRecord> out;
    auto i = to_index(u);
    out.reserve(user_offsets_[i + 1] - user_offsets_[i]);
    for (auto k = user_offsets_[i]; k < user_offsets_[i + 1]; ++k)
      out.push_back(records_[by_user_[k]]);
    return out;
  }

  // Records with cell in `cells` and t0 <= timestamp < t1, ordered by time.
  [[nodiscard]] std::vector<CdrRecord> cdrs_in_window(CellSet const &cells, Timestamp t0,
                                                      Timestamp t1) const
  {
    std::vector<CdrRecord> out;
    for (auto c : cells) {
      auto part = cell_records(c, t0, t1);
      out.insert(out.end(), part.begin(), part.end());
    }
    std::sort(out.begin(), out.end(), [](CdrRecord const &a, CdrRecord const &b) {
      if (a.timestamp != b.timestamp)
        return a.timestamp < b.timestamp;
      if (a.user != b.user)
        return a.user < b.user;
      return a.cell < b.cell;
    });
    return out;
  }

  // Distinct users with at least one record in the cells during [t0, t1),
  // in ascending index order.
  [[nodiscard]] std::vector<UserIndex> users_in(CellSet const &cells, Timestamp t0,
                                                Timestamp t1) const
  {
    std::vector<UserIndex> users;
    for (auto c : cells)
      for (auto const &r : cell_records(c, t0, t1))
        users.push_back(r.user);
    std::sort(users.begin(), users.end());
    users.erase(std::unique(users.begin(), users.end()), users.end());
    return users;
  }

  [[nodiscard]] std::size_t count_users(CellSet const &cells, Timestamp t0, Timestamp t1) const
  {
    return users_in(cells, t0, t1).size();
  }

  [[nodiscard]] std::vector<std::string> const &user_names() const { return user_names_; }

private:
  CellCatalog cells_;
  std::vector<std::string> user_names_;
  std::unordered_map<std::string, UserIndex> user_lookup_;
  std::vector<CdrRecord> records_;
  std::vector<std::size_t> cell_offsets_;
  std::vector<std::size_t> user_offsets_;
  std::vector<std::uint32_t> by_user_;
  TimeWindow span_{};
};

// Interns user names while records are accumulated, then hands everything
// to a CdrStore.
class CdrStoreBuilder
{
public:
  explicit CdrStoreBuilder(CellCatalog cells) : cells_(std::move(cells)) {}

  UserIndex intern_user(std::string_view name)
  {
    auto [it, inserted] =
        lookup_.try_emplace(std::string(name), static_cast<UserIndex>(names_.size()));
    if (inserted)
      names_.emplace_back(name);
    return it->second;
  }

  void add(UserIndex user, CellIndex cell, Timestamp t, std::uint16_t mcc)
  {
    records_.push_back({user, cell, t, mcc});
  }

  [[nodiscard]] CellCatalog const &cells() const { return cells_; }
  [[nodiscard]] std::size_t size() const { return records_.size(); }

  CdrStore build(std::optional<TimeWindow> declared_span = {}) &&
  {
    return CdrStore(std::move(cells_), std::move(names_), std::move(records_), declared_span);
  }

private:
  CellCatalog cells_;
  std::vector<std::string> names_;
  std::unordered_map<std::string, UserIndex> lookup_;
  std::vector<CdrRecord> records_;
};

struct IngestOptions
{
  // Keep only rows with this country code; other rows count as filtered.
  std::optional<std::uint16_t> mcc_filter;
  // Rows outside this span are rejected.
  std::optional<TimeWindow> declared_span;
  double max_reject_fraction = 0.10;
  // The reject-fraction gate only applies once this many rows were read.
  std::size_t reject_gate_min_rows = 100;
};

struct LoadReport
{
  std::size_t rows_read = 0;
  std::size_t rows_accepted = 0;
  std::size_t rows_filtered = 0;
  std::size_t rejected_unknown_cell = 0;
  std::size_t rejected_bad_timestamp = 0;
  std::size_t rejected_malformed = 0;
  std::size_t rejected_out_of_span = 0;
  std::vector<std::string> sample_errors;

  [[nodiscard]] std::size_t rows_rejected() const
  {
    return rejected_unknown_cell + rejected_bad_timestamp + rejected_malformed +
           rejected_out_of_span;
  }
};

struct LoadedCdrs
{
  CdrStore store;
  LoadReport report;
};

inline LoadedCdrs parse_cdrs(std::string_view buffer, CellCatalog cells,
                             IngestOptions const &opts = {}, std::string const &source = "<cdrs>")
{
  csv::LineReader lines(buffer);
  std::string_view line;
  if (!lines.next(line))
    throw InputError(source + ": missing header");
  csv::expect_header(line, kCdrHeader, source);

  LoadReport report;
  CdrStoreBuilder builder(std::move(cells));
  std::vector<std::string_view> fields;
  auto reject = [&](std::size_t &counter, std::string_view why) {
    ++counter;
    if (report.sample_errors.size() < 10)
      report.sample_errors.push_back("line " + std::to_string(lines.line_number()) + ": " +
                                     std::string(why));
  };

  while (lines.next(line)) {
    if (csv::trim(line).empty())
      continue;
    ++report.rows_read;
    csv::split(line, fields);
    if (fields.size() != 4 || fields[0].empty()) {
      reject(report.rejected_malformed, "malformed row");
      continue;
    }
    auto mcc = csv::parse_number<int>(fields[1]);
    if (!mcc || *mcc < 0 || *mcc > 999) {
      reject(report.rejected_malformed, "bad mcc");
      continue;
    }
    auto ts = csv::parse_number<Timestamp>(fields[2]);
    if (!ts) {
      reject(report.rejected_bad_timestamp, "malformed timestamp");
      continue;
    }
    auto cell = builder.cells().find(fields[3]);
    if (!cell) {
      reject(report.rejected_unknown_cell, "unknown cell " + std::string(fields[3]));
      continue;
    }
    if (opts.declared_span && !opts.declared_span->contains(*ts)) {
      reject(report.rejected_out_of_span, "timestamp outside declared span");
      continue;
    }
    if (opts.mcc_filter && *opts.mcc_filter != *mcc) {
      ++report.rows_filtered;
      continue;
    }
    builder.add(builder.intern_user(fields[0]), *cell, *ts, static_cast<std::uint16_t>(*mcc));
    ++report.rows_accepted;
  }

  if (report.rows_read >= opts.reject_gate_min_rows && report.rows_read > 0 &&
      static_cast<double>(report.rows_rejected()) >
          opts.max_reject_fraction * static_cast<double>(report.rows_read))
    throw IngestError(source + ": " + std::to_string(report.rows_rejected()) + " of " +
                      std::to_string(report.rows_read) +
                      " rows rejected; is this the right file for this cell catalog?");

  return {std::move(builder).build(opts.declared_span), std::move(report)};
}

inline LoadedCdrs ingest_cdrs(std::string const &path, CellCatalog cells,
                              IngestOptions const &opts = {})
{
  auto buffer = csv::read_file(path);
  return parse_cdrs(buffer, std::move(cells), opts, path);
}

inline CellCatalog parse_cells(std::string_view buffer, std::string const &source = "<cells>")
{
  csv::LineReader lines(buffer);
  std::string_view line;
  if (!lines.next(line))
    throw InputError(source + ": missing header");
  csv::expect_header(line, kCellHeader, source);
  CellCatalog catalog;
  std::vector<std::string_view> f;
  while (lines.next(line)) {
    if (csv::trim(line).empty())
      continue;
    csv::split(line, f);
    auto where = source + ":" + std::to_string(lines.line_number());
    if (f.size() != 4 || f[0].empty())
      throw InputError(where + ": malformed cell row");
    auto lat = csv::parse_number<double>(f[1]);
    auto lon = csv::parse_number<double>(f[2]);
    auto radius = csv::parse_number<double>(f[3]);
    if (!lat || !lon || !radius)
      throw InputError(where + ": malformed number");
    catalog.add({std::string(f[0]), GeoPoint::checked(*lat, *lon), *radius});
  }
  return catalog;
}

inline CellCatalog load_cells(std::string const &path)
{
  return parse_cells(csv::read_file(path), path);
}

inline std::vector<EventSpec> parse_events(std::string_view buffer,
                                           std::string const &source = "<events>")
{
  csv::LineReader lines(buffer);
  std::string_view line;
  if (!lines.next(line))
    throw InputError(source + ": missing header");
  csv::expect_header(line, kEventHeader, source);
  std::vector<EventSpec> events;
  std::vector<std::string_view> f;
  while (lines.next(line)) {
    if (csv::trim(line).empty())
      continue;
    csv::split(line, f);
    auto where = source + ":" + std::to_string(lines.line_number());
    if (f.size() != 8 || f[0].empty())
      throw InputError(where + ": malformed event row");
    EventSpec ev;
    ev.event_id = f[0];
    ev.venue_id = f[1];
    auto lat = csv::parse_number<double>(f[2]);
    auto lon = csv::parse_number<double>(f[3]);
    if (!lat || !lon)
      throw InputError(where + ": malformed coordinates");
    ev.center = GeoPoint::checked(*lat, *lon);
    auto st = csv::parse_iso8601(f[4]);
    auto et = csv::parse_iso8601(f[5]);
    if (!st || !et)
      throw InputError(where + ": malformed ISO-8601 time");
    ev.scheduled_start = *st;
    ev.scheduled_end = *et;
    if (!f[6].empty()) {
      auto gt = csv::parse_number<double>(f[6]);
      if (!gt)
        throw InputError(where + ": malformed ground truth");
      ev.ground_truth = *gt;
    }
    auto cat = parse_category(f[7]);
    if (!cat)
      throw InputError(where + ": unknown category '" + std::string(f[7]) + "'");
    ev.category = *cat;
    ev.validate();
    events.push_back(std::move(ev));
  }
  return events;
}

inline std::vector<EventSpec> load_events(std::string const &path)
{
  return parse_events(csv::read_file(path), path);
}

inline void write_cells(std::ostream &out, CellCatalog const &cells)
{
  out << kCellHeader << '\n';
  for (auto const &c : cells.cells())
    out << c.id << ',' << csv::format_double(c.center.lat) << ','
        << csv::format_double(c.center.lon) << ',' << csv::format_double(c.coverage_radius_m)
        << '\n';
}

inline void write_events(std::ostream &out, std::span<EventSpec const> events)
{
  out << kEventHeader << '\n';
  for (auto const &e : events) {
    out << e.event_id << ',' << e.venue_id << ',' << csv::format_double(e.center.lat) << ','
        << csv::format_double(e.center.lon) << ',' << csv::format_iso8601(e.scheduled_start)
        << ',' << csv::format_iso8601(e.scheduled_end) << ',';
    if (e.ground_truth)
      out << csv::format_double(*e.ground_truth);
    out << ',' << to_string(e.category) << '\n';
  }
}

// Writes records in time order. Output is a pure function of the record
// multiset.
inline void write_cdrs(std::ostream &out, CdrStore const &store)
{
  std::vector<CdrRecord> rows(store.records().begin(), store.records().end());
  auto const &cells = store.cells();
  std::sort(rows.begin(), rows.end(), [&](CdrRecord const &a, CdrRecord const &b) {
    if (a.timestamp != b.timestamp)
      return a.timestamp < b.timestamp;
    if (a.user != b.user) {
      auto const &na = store.user_name(a.user);
      auto const &nb = store.user_name(b.user);
      if (na != nb)
        return na < nb;
    }
    if (a.cell != b.cell)
      return cells[a.cell].id < cells[b.cell].id;
    return a.mcc < b.mcc;
  });
  std::string buf;
  buf.reserve(1 << 20);
  buf.append(kCdrHeader).push_back('\n');
  char num[24];
  for (auto const &r : rows) {
    buf.append(store.user_name(r.user)).push_back(',');
    auto [p1, e1] = std::to_chars(num, num + sizeof num, r.mcc);
    buf.append(num, p1).push_back(',');
    auto [p2, e2] = std::to_chars(num, num + sizeof num, r.timestamp);
    buf.append(num, p2).push_back(',');
    buf.append(cells[r.cell].id).push_back('\n');
    if (buf.size() > (1 << 20) - 256) {
      out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
      buf.clear();
    }
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

template<typename Writer>
void write_file(std::string const &path, Writer &&writer)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw InputError("cannot write " + path);
  writer(out);
  if (!out)
    throw InputError("error writing " + path);
}

} // namespace cdrcrowd
