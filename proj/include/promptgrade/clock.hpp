#pragma once

#include <atomic>
#include <chrono>
#include <string>
#include <string_view>

namespace promptgrade {

using Timestamp = std::chrono::sys_time<std::chrono::milliseconds>;

/// Time source injected into anything that stamps records or checks expiry.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual Timestamp now() const = 0;
};

class SystemClock final : public Clock {
 public:
  Timestamp now() const override;
};

/// Test clock. Starts at a fixed instant and only moves when told to.
class ManualClock final : public Clock {
 public:
  explicit ManualClock(Timestamp start = Timestamp{std::chrono::milliseconds{1'700'000'000'000}});

  Timestamp now() const override;
  void set(Timestamp t);
  void advance(std::chrono::milliseconds delta);

 private:
  std::atomic<std::int64_t> millis_;
};

/// "2026-10-15T08:41:00.123Z". Fixed width, so lexical order is time order.
std::string format_timestamp(Timestamp t);

/// Inverse of format_timestamp; throws std::invalid_argument on bad input.
Timestamp parse_timestamp(std::string_view text);

}  // namespace promptgrade
