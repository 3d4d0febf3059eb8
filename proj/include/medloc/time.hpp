#pragma once

#include <atomic>
#include <chrono>
#include <string>

namespace medloc {

using Duration = std::chrono::milliseconds;
using Timestamp = std::chrono::sys_time<Duration>;

/// Formats as `YYYY-MM-DDTHH:MM:SS.mmmZ` (UTC).
std::string format_timestamp(Timestamp t);
Timestamp parse_timestamp(const std::string& text);

/// Accepts `90s`, `10m`, `2h`, `1500ms`, compounds such as `1h30m`, or a
/// bare number of seconds.
Duration parse_duration(const std::string& text);

// The engine never reads a wall clock; everything time-dependent is driven
// through one of these.
class Clock {
public:
    virtual ~Clock() = default;
    virtual Timestamp now() const = 0;
};

class SystemClock final : public Clock {
public:
    Timestamp now() const override;
};

class VirtualClock final : public Clock {
public:
    explicit VirtualClock(Timestamp start = default_epoch()) : now_(start.time_since_epoch().count()) {}

    Timestamp now() const override { return Timestamp(Duration(now_.load())); }
    void advance(Duration d) { now_.fetch_add(d.count()); }
    void set(Timestamp t) { now_.store(t.time_since_epoch().count()); }

    // 2024-01-01T00:00:00Z; fixed so transcripts are reproducible.
    static Timestamp default_epoch();

private:
    std::atomic<Duration::rep> now_;
};

}  // namespace medloc
