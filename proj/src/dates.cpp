#include "mpcport/dates.hpp"

#include <charconv>
#include <chrono>

#include "mpcport/errors.hpp"

namespace mpcport::dates {

namespace {

bool parse_fields(std::string_view iso, int& y, unsigned& m, unsigned& d) {
  if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-') return false;
  auto num = [&](int from, int len, auto& out) {
    const char* first = iso.data() + from;
    auto [ptr, ec] = std::from_chars(first, first + len, out);
    return ec == std::errc() && ptr == first + len;
  };
  return num(0, 4, y) && num(5, 2, m) && num(8, 2, d);
}

}  // namespace

std::int64_t to_days(std::string_view iso) {
  using namespace std::chrono;
  int y = 0;
  unsigned m = 0, d = 0;
  if (!parse_fields(iso, y, m, d))
    throw ParseError("malformed date '" + std::string(iso) + "', expected YYYY-MM-DD");
  year_month_day ymd{year{y}, month{m}, day{d}};
  if (!ymd.ok())
    throw ParseError("impossible calendar date '" + std::string(iso) + "'");
  return sys_days(ymd).time_since_epoch().count();
}

std::string from_days(std::int64_t days_count) {
  using namespace std::chrono;
  year_month_day ymd{sys_days{days{days_count}}};
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", int(ymd.year()),
                unsigned(ymd.month()), unsigned(ymd.day()));
  return buf;
}

bool is_valid(std::string_view iso) {
  using namespace std::chrono;
  int y = 0;
  unsigned m = 0, d = 0;
  if (!parse_fields(iso, y, m, d)) return false;
  return year_month_day{year{y}, month{m}, day{d}}.ok();
}

}  // namespace mpcport::dates
