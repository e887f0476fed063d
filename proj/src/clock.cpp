#include "promptgrade/clock.hpp"

#include <cstdio>
#include <ctime>
#include <stdexcept>

namespace promptgrade {

Timestamp SystemClock::now() const {
  return std::chrono::time_point_cast<std::chrono::milliseconds>(std::chrono::system_clock::now());
}

ManualClock::ManualClock(Timestamp start) : millis_(start.time_since_epoch().count()) {}

Timestamp ManualClock::now() const {
  return Timestamp{std::chrono::milliseconds{millis_.load()}};
}

void ManualClock::set(Timestamp t) { millis_.store(t.time_since_epoch().count()); }

void ManualClock::advance(std::chrono::milliseconds delta) { millis_.fetch_add(delta.count()); }

std::string format_timestamp(Timestamp t) {
  const auto ms = t.time_since_epoch().count();
  std::int64_t secs = ms / 1000;
  std::int64_t frac = ms % 1000;
  if (frac < 0) {
    frac += 1000;
    --secs;
  }
  const std::time_t tt = static_cast<std::time_t>(secs);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[96];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1,
                tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(frac));
  return buf;
}

Timestamp parse_timestamp(std::string_view text) {
  int year, mon, day, hour, min, sec, frac;
  char z = 0;
  const std::string s(text);
  if (s.size() != 24 ||
      std::sscanf(s.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d.%3d%c", &year, &mon, &day, &hour, &min, &sec, &frac, &z) != 8 ||
      z != 'Z') {
    throw std::invalid_argument("malformed timestamp: " + s);
  }
  using namespace std::chrono;
  const auto ymd = year_month_day{std::chrono::year{year}, month{static_cast<unsigned>(mon)},
                                  std::chrono::day{static_cast<unsigned>(day)}};
  if (!ymd.ok()) throw std::invalid_argument("malformed timestamp: " + s);
  const auto tp = sys_days{ymd} + hours{hour} + minutes{min} + seconds{sec} + milliseconds{frac};
  return time_point_cast<milliseconds>(tp);
}

}  // namespace promptgrade
