#include "medloc/time.hpp"

#include <cctype>
#include <cstdio>
#include <ctime>

#include "medloc/error.hpp"

namespace medloc {

using namespace std::chrono;

std::string format_timestamp(Timestamp t) {
    const auto day = floor<days>(t);
    const year_month_day ymd{day};
    const hh_mm_ss hms{t - day};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d.%03dZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                  static_cast<int>(hms.seconds().count()), static_cast<int>(hms.subseconds().count()));
    return buf;
}

Timestamp parse_timestamp(const std::string& text) {
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0, ms = 0;
    int consumed = 0;
    if (std::sscanf(text.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%n", &y, &mo, &d, &h, &mi, &s, &consumed) != 6)
        throw ValidationError("bad timestamp: " + text);
    std::size_t pos = static_cast<std::size_t>(consumed);
    if (pos < text.size() && text[pos] == '.') {
        ++pos;
        int digits = 0;
        while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
            if (digits < 3) ms = ms * 10 + (text[pos] - '0');
            ++digits;
            ++pos;
        }
        for (; digits < 3; ++digits) ms *= 10;
    }
    if (pos < text.size() && text[pos] == 'Z') ++pos;
    if (pos != text.size()) throw ValidationError("bad timestamp: " + text);
    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) throw ValidationError("bad timestamp: " + text);
    return Timestamp(sys_days{ymd}.time_since_epoch() + hours{h} + minutes{mi} + seconds{s} + milliseconds{ms});
}

Duration parse_duration(const std::string& text) {
    // A bare number is seconds; otherwise one or more <number><unit> parts,
    // as in "1h30m" or "9m59s".
    const auto bad = [&] { return ValidationError("bad duration: '" + text + "'"); };
    std::string t;
    for (char c : text)
        if (!std::isspace(static_cast<unsigned char>(c))) t += c;
    if (t.empty()) throw bad();
    double ms = 0.0;
    std::size_t pos = 0;
    bool bare = true;
    while (pos < t.size()) {
        std::size_t used = 0;
        double value = 0.0;
        try {
            value = std::stod(t.substr(pos), &used);
        } catch (const std::exception&) {
            throw bad();
        }
        if (value < 0) throw ValidationError("negative duration: '" + text + "'");
        pos += used;
        std::size_t unit_end = pos;
        while (unit_end < t.size() && std::isalpha(static_cast<unsigned char>(t[unit_end]))) ++unit_end;
        const auto unit = t.substr(pos, unit_end - pos);
        pos = unit_end;
        if (unit.empty()) {
            if (pos != t.size() || !bare) throw bad();
            ms += value * 1000.0;
        } else if (unit == "s") {
            ms += value * 1000.0;
        } else if (unit == "ms") {
            ms += value;
        } else if (unit == "m" || unit == "min") {
            ms += value * 60'000.0;
        } else if (unit == "h") {
            ms += value * 3'600'000.0;
        } else {
            throw ValidationError("bad duration unit in '" + text + "'");
        }
        bare = false;
    }
    return Duration(static_cast<Duration::rep>(ms + 0.5));
}

Timestamp SystemClock::now() const {
    return time_point_cast<Duration>(system_clock::now());
}

Timestamp VirtualClock::default_epoch() {
    return Timestamp(sys_days{year{2024} / January / 1}.time_since_epoch());
}

}  // namespace medloc
