#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "volrough/errors.hpp"

namespace volrough {

// One business day in the BUS/252 convention.
inline constexpr double kBusinessDay = 0.004;

// Ordered observations X(t_0), ..., X(t_n). Times are year fractions.
struct TimeSeriesPath {
    std::vector<double> times;
    std::vector<double> values;

    std::size_t size() const noexcept { return values.size(); }
    double span() const { return times.back() - times.front(); }

    // Throws DataError unless times are strictly increasing, sizes match,
    // there are at least two points and all values are finite.
    void validate() const {
        if (times.size() != values.size())
            throw SizeError("time/value length mismatch");
        if (values.size() < 2)
            throw InsufficientDataError("path needs at least 2 observations");
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (!std::isfinite(values[i]) || !std::isfinite(times[i]))
                throw DomainError("non-finite observation at index " + std::to_string(i), i);
            if (i > 0 && !(times[i] > times[i - 1]))
                throw DataError("times not strictly increasing at index " + std::to_string(i));
        }
    }

    // Path on the uniform business-day grid t_i = i * 0.004.
    static TimeSeriesPath daily(std::vector<double> values) {
        TimeSeriesPath p;
        p.times.resize(values.size());
        for (std::size_t i = 0; i < values.size(); ++i)
            p.times[i] = static_cast<double>(i) * kBusinessDay;
        p.values = std::move(values);
        return p;
    }

    static TimeSeriesPath uniform(std::vector<double> values, double dt) {
        TimeSeriesPath p;
        p.times.resize(values.size());
        for (std::size_t i = 0; i < values.size(); ++i)
            p.times[i] = static_cast<double>(i) * dt;
        p.values = std::move(values);
        return p;
    }
};

enum class DateFormat {
    automatic,     // either of the two below
    iso_date,      // YYYY-MM-DD
    iso_datetime,  // YYYY-MM-DD HH:MM:SS+HH:MM
};

struct IngestSpec {
    std::string date_column = "date";
    std::string value_column = "value";
    DateFormat date_format = DateFormat::automatic;
    char delimiter = ',';

    // Yahoo Finance daily history: Date,Open,High,Low,Close,Adj Close,Volume.
    static IngestSpec yahoo(std::string value_column = "Close") {
        return IngestSpec{"Date", std::move(value_column), DateFormat::iso_date, ','};
    }
    static IngestSpec generic() { return IngestSpec{}; }
};

struct IngestResult {
    TimeSeriesPath path;
    std::vector<std::string> dates;  // as read, in output order
    std::size_t dropped_rows = 0;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"' ||
                          s.front() == '\r' || s.front() == '\n'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '"' ||
                          s.back() == '\r' || s.back() == '\n'))
        s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split(std::string_view line, char delim) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        auto pos = line.find(delim, start);
        if (pos == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            break;
        }
        out.push_back(trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
    return out;
}

template <class T>
bool parse_number(std::string_view s, T& out) {
    if (s.empty()) return false;
    if (s.front() == '+') s.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

inline std::optional<double> parse_value(std::string_view s) {
    double v = 0.0;
    if (!parse_number(s, v) || !std::isfinite(v)) return std::nullopt;
    return v;
}

// Seconds since the epoch (UTC) for a supported date string.
inline std::optional<std::int64_t> parse_instant(std::string_view s, DateFormat fmt) {
    using namespace std::chrono;
    if (s.size() < 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
    int y = 0;
    unsigned mo = 0, d = 0;
    if (!parse_number(s.substr(0, 4), y) || !parse_number(s.substr(5, 2), mo) ||
        !parse_number(s.substr(8, 2), d))
        return std::nullopt;
    year_month_day ymd{year{y}, month{mo}, day{d}};
    if (!ymd.ok()) return std::nullopt;
    std::int64_t secs = static_cast<std::int64_t>(sys_days{ymd}.time_since_epoch().count()) * 86400;

    if (s.size() == 10) {
        if (fmt == DateFormat::iso_datetime) return std::nullopt;
        return secs;
    }
    if (fmt == DateFormat::iso_date) return std::nullopt;
    // " HH:MM:SS" optionally followed by "+HH:MM" / "-HH:MM"
    if (s.size() < 19 || (s[10] != ' ' && s[10] != 'T') || s[13] != ':' || s[16] != ':')
        return std::nullopt;
    int hh = 0, mm = 0, ss = 0;
    if (!parse_number(s.substr(11, 2), hh) || !parse_number(s.substr(14, 2), mm) ||
        !parse_number(s.substr(17, 2), ss) || hh > 23 || mm > 59 || ss > 60)
        return std::nullopt;
    secs += hh * 3600 + mm * 60 + ss;
    auto rest = s.substr(19);
    if (rest.empty()) return secs;
    if (rest.size() != 6 || (rest[0] != '+' && rest[0] != '-') || rest[3] != ':')
        return std::nullopt;
    int oh = 0, om = 0;
    if (!parse_number(rest.substr(1, 2), oh) || !parse_number(rest.substr(4, 2), om))
        return std::nullopt;
    const int offset = (oh * 3600 + om * 60) * (rest[0] == '-' ? -1 : 1);
    return secs - offset;
}

inline std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace detail

// Reads a delimited file with a header row. Rows are sorted by date and
// mapped onto consecutive business days starting at t = 0; calendar gaps
// count as a single step. Rows whose date or value does not parse are
// dropped and counted. Lines starting with '#' are ignored.
inline IngestResult ingest_csv(std::istream& in, const IngestSpec& spec) {
    std::string line;
    std::vector<std::string_view> header;
    std::string header_line;
    while (std::getline(in, line)) {
        auto t = detail::trim(line);
        if (t.empty() || t.front() == '#') continue;
        header_line = line;
        break;
    }
    if (header_line.empty()) throw SchemaError("missing header row");
    header = detail::split(header_line, spec.delimiter);

    auto find_col = [&](const std::string& name) -> std::size_t {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        // fall back to a case-insensitive match ("Date" vs "date")
        auto lower = [](std::string_view v) {
            std::string out(v);
            for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            return out;
        };
        for (std::size_t i = 0; i < header.size(); ++i)
            if (lower(header[i]) == lower(name)) return i;
        throw SchemaError("column '" + name + "' not found in header");
    };
    const std::size_t date_col = find_col(spec.date_column);
    const std::size_t value_col = find_col(spec.value_column);

    struct Row {
        std::int64_t instant;
        std::string date;
        double value;
    };
    std::vector<Row> rows;
    std::size_t dropped = 0;
    while (std::getline(in, line)) {
        auto t = detail::trim(line);
        if (t.empty() || t.front() == '#') continue;
        auto fields = detail::split(line, spec.delimiter);
        if (fields.size() <= std::max(date_col, value_col)) {
            ++dropped;
            continue;
        }
        auto instant = detail::parse_instant(fields[date_col], spec.date_format);
        auto value = detail::parse_value(fields[value_col]);
        if (!instant || !value) {
            ++dropped;
            continue;
        }
        rows.push_back(Row{*instant, std::string(fields[date_col]), *value});
    }
    if (rows.size() < 2)
        throw InsufficientDataError("need at least 2 valid rows, found " +
                                    std::to_string(rows.size()));

    std::stable_sort(rows.begin(), rows.end(),
                     [](const Row& a, const Row& b) { return a.instant < b.instant; });
    for (std::size_t i = 1; i < rows.size(); ++i)
        if (rows[i].instant == rows[i - 1].instant)
            throw DuplicateDateError("duplicate date " + rows[i].date);

    IngestResult out;
    out.dropped_rows = dropped;
    out.dates.reserve(rows.size());
    std::vector<double> values;
    values.reserve(rows.size());
    for (auto& r : rows) {
        out.dates.push_back(std::move(r.date));
        values.push_back(r.value);
    }
    out.path = TimeSeriesPath::daily(std::move(values));
    return out;
}

inline IngestResult ingest_csv_file(const std::string& filename, const IngestSpec& spec) {
    std::ifstream in(filename);
    if (!in) throw DataError("cannot open " + filename);
    return ingest_csv(in, spec);
}

// Natural log of every value; times unchanged.
inline TimeSeriesPath log_transform(const TimeSeriesPath& path) {
    TimeSeriesPath out;
    out.times = path.times;
    out.values.resize(path.values.size());
    for (std::size_t i = 0; i < path.values.size(); ++i) {
        if (!(path.values[i] > 0.0))
            throw DomainError("log of non-positive value at index " + std::to_string(i), i);
        out.values[i] = std::log(path.values[i]);
    }
    return out;
}

// `t,value` with 17 significant digits.
inline void write_path_csv(std::ostream& os, const TimeSeriesPath& path) {
    os << "t,value\n";
    for (std::size_t i = 0; i < path.size(); ++i)
        os << detail::format_g17(path.times[i]) << ',' << detail::format_g17(path.values[i])
           << '\n';
}

inline TimeSeriesPath read_path_csv(std::istream& in) {
    std::string line;
    bool header_seen = false;
    TimeSeriesPath p;
    while (std::getline(in, line)) {
        auto t = detail::trim(line);
        if (t.empty() || t.front() == '#') continue;
        if (!header_seen) {
            auto cols = detail::split(line, ',');
            if (cols.size() < 2 || cols[0] != "t" || cols[1] != "value")
                throw SchemaError("expected header 't,value'");
            header_seen = true;
            continue;
        }
        auto cols = detail::split(line, ',');
        double tv = 0.0, xv = 0.0;
        if (cols.size() < 2 || !detail::parse_number(cols[0], tv) ||
            !detail::parse_number(cols[1], xv))
            throw DataError("malformed path row: " + line);
        p.times.push_back(tv);
        p.values.push_back(xv);
    }
    if (!header_seen) throw SchemaError("missing header row");
    p.validate();
    return p;
}

}  // namespace volrough
