#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace paxcast {

using Timestamp = std::chrono::sys_seconds;
using Seconds = std::chrono::seconds;
using Hours = std::chrono::hours;
using Days = std::chrono::days;

/// Parse an ISO-8601 UTC timestamp. Accepts `YYYY-MM-DD`, `YYYY-MM-DDTHH:MM`,
/// `YYYY-MM-DDTHH:MM:SS` with either `T` or a space as separator and an
/// optional `Z` / `+00:00` suffix. Returns nullopt for anything else.
std::optional<Timestamp> try_parse_time(std::string_view text);

/// Throwing variant of try_parse_time.
Timestamp parse_time(std::string_view text);

/// `YYYY-MM-DDTHH:MM:SSZ`
std::string format_time(Timestamp t);

/// `YYYY-MM-DD`
std::string format_date(std::chrono::sys_days d);

inline Timestamp floor_hour(Timestamp t) { return std::chrono::floor<Hours>(t); }
inline std::chrono::sys_days floor_day(Timestamp t) { return std::chrono::floor<Days>(t); }

/// Hour of day in [0, 24).
inline int hour_of_day(Timestamp t) {
    return static_cast<int>((t - std::chrono::floor<Days>(t)).count() / 3600);
}

/// Fractional days since the Unix epoch.
inline double epoch_days(Timestamp t) { return static_cast<double>(t.time_since_epoch().count()) / 86400.0; }

inline Timestamp from_epoch_seconds(std::int64_t s) { return Timestamp{Seconds{s}}; }
inline std::int64_t epoch_seconds(Timestamp t) { return t.time_since_epoch().count(); }

/// Half-open interval of whole hours [start, end).
struct HourSpan {
    Timestamp start;
    Timestamp end;

    std::size_t hours() const {
        return end > start ? static_cast<std::size_t>((end - start) / Hours{1}) : 0;
    }
    bool contains(Timestamp t) const { return t >= start && t < end; }
};

}  // namespace paxcast
