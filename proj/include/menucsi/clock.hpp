#pragma once

#include <chrono>
#include <mutex>
#include <string>

namespace menucsi {

// Time source for rate limiting, retry backoff and cache timestamps.
class Clock {
 public:
  using duration = std::chrono::nanoseconds;
  using time_point = std::chrono::time_point<std::chrono::steady_clock, duration>;

  virtual ~Clock() = default;
  virtual time_point now() = 0;
  virtual void sleep_until(time_point t) = 0;
  // Wall-clock time, ISO-8601 UTC with second precision.
  virtual std::string utc_timestamp() = 0;

  void sleep_for(duration d) { sleep_until(now() + d); }
};

class SystemClock final : public Clock {
 public:
  time_point now() override;
  void sleep_until(time_point t) override;
  std::string utc_timestamp() override;
};

// Deterministic clock: sleeping advances time instantly.
class VirtualClock final : public Clock {
 public:
  explicit VirtualClock(std::string timestamp = "2024-01-01T00:00:00Z") : timestamp_(std::move(timestamp)) {}

  time_point now() override;
  void sleep_until(time_point t) override;
  std::string utc_timestamp() override { return timestamp_; }

  void advance(duration d);

 private:
  std::mutex mu_;
  time_point now_{};
  std::string timestamp_;
};

Clock& system_clock();

}  // namespace menucsi
