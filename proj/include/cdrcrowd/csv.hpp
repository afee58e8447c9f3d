#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "cdrcrowd/errors.hpp"
#include "cdrcrowd/types.hpp"

namespace cdrcrowd::csv {

inline std::string_view trim(std::string_view s)
{
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
    s.remove_prefix(1);
  while (!s.empty() &&
         (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '\n'))
    s.remove_suffix(1);
  return s;
}

// Splits on commas into `out` (reused across calls). Fields are trimmed;
// quoting is not supported by any of the formats handled here.
inline void split(std::string_view line, std::vector<std::string_view> &out)
{
  out.clear();
  std::size_t start = 0;
  for (;;) {
    auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      return;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
}

template<typename T>
std::optional<T> parse_number(std::string_view s)
{
  T value{};
  if (s.empty())
    return std::nullopt;
  if (s.front() == '+')
    s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    return std::nullopt;
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(value))
      return std::nullopt;
  }
  return value;
}

inline std::string read_file(std::string const &path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw InputError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad())
    throw InputError("error reading " + path);
  return std::move(ss).str();
}

// Iterates the lines of an in-memory buffer without copying.
class LineReader
{
public:
  explicit LineReader(std::string_view buffer) : rest_(buffer) {}

  bool next(std::string_view &line)
  {
    if (rest_.empty())
      return false;
    auto pos = rest_.find('\n');
    if (pos == std::string_view::npos) {
      line = rest_;
      rest_ = {};
    } else {
      line = rest_.substr(0, pos);
      rest_.remove_prefix(pos + 1);
    }
    if (!line.empty() && line.back() == '\r')
      line.remove_suffix(1);
    ++line_number_;
    return true;
  }

  [[nodiscard]] std::size_t line_number() const { return line_number_; }

private:
  std::string_view rest_;
  std::size_t line_number_ = 0;
};

inline void expect_header(std::string_view line, std::string_view expected,
                          std::string const &path)
{
  if (trim(line) != expected)
    throw InputError(path + ": expected header '" + std::string(expected) + "'");
}

// Parses "YYYY-MM-DDTHH:MM[:SS][Z|+HH:MM|-HH:MM]" (space also accepted as
// date/time separator). A missing offset means UTC. Returns UTC seconds.
inline std::optional<Timestamp> parse_iso8601(std::string_view s)
{
  s = trim(s);
  auto digits = [&](std::size_t pos, std::size_t n) -> std::optional<int> {
    if (pos + n > s.size())
      return std::nullopt;
    int v = 0;
    for (std::size_t i = pos; i < pos + n; ++i) {
      if (s[i] < '0' || s[i] > '9')
        return std::nullopt;
      v = v * 10 + (s[i] - '0');
    }
    return v;
  };
  if (s.size() < 16 || s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != ' ') ||
      s[13] != ':')
    return std::nullopt;
  auto y = digits(0, 4), mo = digits(5, 2), d = digits(8, 2), h = digits(11, 2),
       mi = digits(14, 2);
  if (!y || !mo || !d || !h || !mi)
    return std::nullopt;
  std::size_t pos = 16;
  int sec = 0;
  if (pos < s.size() && s[pos] == ':') {
    auto sv = digits(pos + 1, 2);
    if (!sv)
      return std::nullopt;
    sec = *sv;
    pos += 3;
  }
  int offset = 0;
  if (pos < s.size()) {
    if (s[pos] == 'Z' && pos + 1 == s.size()) {
      offset = 0;
    } else if ((s[pos] == '+' || s[pos] == '-') && s.size() == pos + 6 && s[pos + 3] == ':') {
      auto oh = digits(pos + 1, 2), om = digits(pos + 4, 2);
      if (!oh || !om || *oh > 23 || *om > 59)
        return std::nullopt;
      offset = (*oh * 60 + *om) * 60 * (s[pos] == '-' ? -1 : 1);
    } else {
      return std::nullopt;
    }
  }
  if (*h > 23 || *mi > 59 || sec > 59)
    return std::nullopt;
  using namespace std::chrono;
  year_month_day ymd{std::chrono::year{*y}, std::chrono::month{static_cast<unsigned>(*mo)},
                     std::chrono::day{static_cast<unsigned>(*d)}};
  if (!ymd.ok())
    return std::nullopt;
  return make_timestamp(*y, static_cast<unsigned>(*mo), static_cast<unsigned>(*d), *h, *mi,
                        sec) -
         offset;
}

inline std::string format_iso8601(Timestamp t)
{
  using namespace std::chrono;
  sys_days days{std::chrono::days{day_of(t)}};
  year_month_day ymd{days};
  auto sod = second_of_day(t);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:%02lldZ", int(ymd.year()),
                unsigned(ymd.month()), unsigned(ymd.day()), static_cast<long long>(sod / 3600),
                static_cast<long long>((sod / 60) % 60), static_cast<long long>(sod % 60));
  return buf;
}

// Shortest round-trip formatting for doubles.
inline std::string format_double(double v)
{
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

} // namespace cdrcrowd::csv
