#pragma once

// CSV loading, clock normalization, and inner-join alignment of price series.
//
// Dialect: comma-separated, RFC-4180 quoting, a header row, one timestamp
// column and one column per asset. Timestamps are integer epoch seconds or
// ISO dates "YYYY-MM-DD" with an optional "[T ]HH:MM[:SS]" time part.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "rte/error.hpp"

namespace rte {

class IngestError : public std::runtime_error {
public:
    enum class Kind {
        MissingFile,
        EmptyFile,
        MalformedHeader,
        BadTimestamp,
        NonAscendingTimestamps,
        UnknownColumn,
        EmptyIntersection,
    };

    IngestError(Kind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}
    [[nodiscard]] Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

/// One asset column. Timestamps are epoch seconds on the reference clock.
struct RawSeries {
    std::string label;
    std::vector<std::int64_t> timestamps;
    std::vector<double> values;
    std::size_t omitted = 0; // rows dropped for a missing or unparseable cell

    void validate() const
    {
        detail::require(timestamps.size() == values.size(), "series " + label + ": timestamp/value count mismatch");
        for (std::size_t i = 0; i < values.size(); ++i) {
            detail::require(std::isfinite(values[i]), "series " + label + " has a non-finite value");
            detail::require(i == 0 || timestamps[i - 1] < timestamps[i],
                            "series " + label + " timestamps are not strictly ascending");
        }
    }

    [[nodiscard]] std::size_t size() const noexcept { return values.size(); }
};

struct AlignedPair {
    std::string label_a;
    std::string label_b;
    std::vector<std::int64_t> timestamps;
    std::vector<double> values_a;
    std::vector<double> values_b;
};

/// Several series restricted to the instants present in all of them.
struct AlignedSet {
    std::vector<std::string> labels;
    std::vector<std::int64_t> timestamps;
    std::vector<std::vector<double>> columns;
};

struct CsvOptions {
    /// Timestamp column name; empty selects the first column.
    std::string timestamp_column;
    /// Value columns to keep; empty keeps all.
    std::vector<std::string> columns;
    /// UTC offset in minutes of each column's clock, keyed by column label.
    /// The key "*" applies to columns without their own entry.
    std::map<std::string, std::int64_t> tz_offset_minutes;
};

namespace detail {

inline std::vector<std::string> split_csv_record(std::string_view line)
{
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else {
            field.push_back(c);
        }
    }
    fields.push_back(std::move(field));
    return fields;
}

inline std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

template <typename T>
bool parse_number(std::string_view s, T& out)
{
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    if (s.empty()) return false;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

inline std::optional<std::int64_t> parse_timestamp(std::string_view text)
{
    text = trim(text);
    std::int64_t epoch = 0;
    if (parse_number(text, epoch)) return epoch;

    // YYYY-MM-DD[( |T)HH:MM[:SS]]
    if (text.size() < 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
    int year = 0;
    unsigned month = 0, day = 0;
    if (!parse_number(text.substr(0, 4), year) || !parse_number(text.substr(5, 2), month)
        || !parse_number(text.substr(8, 2), day))
        return std::nullopt;
    const std::chrono::year_month_day date{std::chrono::year{year}, std::chrono::month{month},
                                           std::chrono::day{day}};
    if (!date.ok()) return std::nullopt;
    std::int64_t seconds = std::chrono::sys_days{date}.time_since_epoch().count() * std::int64_t{86400};

    std::string_view rest = text.substr(10);
    if (rest.empty()) return seconds;
    if (rest.front() != ' ' && rest.front() != 'T') return std::nullopt;
    rest.remove_prefix(1);
    if (rest.size() != 5 && rest.size() != 8) return std::nullopt;
    int hh = 0, mm = 0, ss = 0;
    if (rest[2] != ':' || !parse_number(rest.substr(0, 2), hh) || !parse_number(rest.substr(3, 2), mm))
        return std::nullopt;
    if (rest.size() == 8 && (rest[5] != ':' || !parse_number(rest.substr(6, 2), ss))) return std::nullopt;
    if (hh > 23 || mm > 59 || ss > 60) return std::nullopt;
    return seconds + hh * 3600 + mm * 60 + ss;
}

} // namespace detail

/// Reads one RawSeries per value column. A missing, non-numeric, or
/// non-finite cell drops that row from that column only.
inline std::vector<RawSeries> read_csv(std::istream& in, const CsvOptions& options = {},
                                       const std::string& source_name = "<stream>")
{
    using Kind = IngestError::Kind;
    std::string line;
    if (!std::getline(in, line) || detail::trim(line).empty())
        throw IngestError(Kind::EmptyFile, source_name + ": file is empty");

    const auto header = detail::split_csv_record(line);
    if (header.size() < 2)
        throw IngestError(Kind::MalformedHeader, source_name + ": header needs a timestamp column and at least one value column");
    std::set<std::string> seen;
    for (const auto& name : header) {
        if (detail::trim(name).empty())
            throw IngestError(Kind::MalformedHeader, source_name + ": header has an empty column name");
        if (!seen.insert(std::string(detail::trim(name))).second)
            throw IngestError(Kind::MalformedHeader, source_name + ": duplicate column " + name);
    }

    std::size_t ts_col = 0;
    if (!options.timestamp_column.empty()) {
        const auto it = std::find_if(header.begin(), header.end(), [&](const std::string& h) {
            return detail::trim(h) == options.timestamp_column;
        });
        if (it == header.end())
            throw IngestError(Kind::UnknownColumn, source_name + ": no timestamp column " + options.timestamp_column);
        ts_col = static_cast<std::size_t>(it - header.begin());
    }

    std::vector<std::size_t> value_cols;
    std::vector<RawSeries> series;
    auto add_column = [&](std::size_t c) {
        value_cols.push_back(c);
        series.push_back(RawSeries{std::string(detail::trim(header[c])), {}, {}, 0});
    };
    if (options.columns.empty()) {
        for (std::size_t c = 0; c < header.size(); ++c)
            if (c != ts_col) add_column(c);
    } else {
        for (const auto& wanted : options.columns) {
            const auto it = std::find_if(header.begin(), header.end(),
                                         [&](const std::string& h) { return detail::trim(h) == wanted; });
            if (it == header.end() || static_cast<std::size_t>(it - header.begin()) == ts_col)
                throw IngestError(Kind::UnknownColumn, source_name + ": no value column " + wanted);
            add_column(static_cast<std::size_t>(it - header.begin()));
        }
    }

    std::vector<std::int64_t> offsets;
    for (const auto& s : series) {
        auto it = options.tz_offset_minutes.find(s.label);
        if (it == options.tz_offset_minutes.end()) it = options.tz_offset_minutes.find("*");
        offsets.push_back(it == options.tz_offset_minutes.end() ? 0 : it->second * 60);
    }

    std::optional<std::int64_t> previous;
    std::size_t line_number = 1;
    while (std::getline(in, line)) {
        ++line_number;
        if (detail::trim(line).empty()) continue;
        const auto fields = detail::split_csv_record(line);
        const auto where = source_name + ":" + std::to_string(line_number);
        if (ts_col >= fields.size())
            throw IngestError(Kind::BadTimestamp, where + ": missing timestamp");
        const auto ts = detail::parse_timestamp(fields[ts_col]);
        if (!ts) throw IngestError(Kind::BadTimestamp, where + ": unparseable timestamp '" + fields[ts_col] + "'");
        if (previous && *ts <= *previous)
            throw IngestError(Kind::NonAscendingTimestamps, where + ": timestamps must be strictly ascending");
        previous = ts;

        for (std::size_t i = 0; i < value_cols.size(); ++i) {
            double value = 0.0;
            const std::size_t c = value_cols[i];
            if (c < fields.size() && detail::parse_number(fields[c], value) && std::isfinite(value)) {
                series[i].timestamps.push_back(*ts - offsets[i]);
                series[i].values.push_back(value);
            } else {
                ++series[i].omitted;
            }
        }
    }
    return series;
}

inline std::vector<RawSeries> load_csv(const std::string& path, const CsvOptions& options = {})
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestError(IngestError::Kind::MissingFile, path + ": cannot open file");
    return read_csv(in, options, path);
}

/// Writes series sharing one timestamp column (union of instants); absent
/// cells are left empty.
inline void write_csv(std::ostream& out, const std::vector<RawSeries>& series,
                      const std::string& timestamp_label = "timestamp")
{
    std::set<std::int64_t> instants;
    for (const auto& s : series) instants.insert(s.timestamps.begin(), s.timestamps.end());
    out << timestamp_label;
    for (const auto& s : series) out << ',' << s.label;
    out << '\n';
    std::vector<std::size_t> cursor(series.size(), 0);
    char buffer[32];
    for (std::int64_t ts : instants) {
        out << ts;
        for (std::size_t i = 0; i < series.size(); ++i) {
            out << ',';
            const auto& s = series[i];
            if (cursor[i] < s.size() && s.timestamps[cursor[i]] == ts) {
                const auto [end, ec] = std::to_chars(buffer, buffer + sizeof buffer, s.values[cursor[i]]);
                out.write(buffer, end - buffer);
                ++cursor[i];
            }
        }
        out << '\n';
    }
}

/// Inner join on timestamps. Instants missing from either series are dropped
/// and the survivors are treated as consecutive ticks downstream.
inline AlignedPair align(const RawSeries& a, const RawSeries& b)
{
    a.validate();
    b.validate();
    AlignedPair out{a.label, b.label, {}, {}, {}};
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a.timestamps[i] < b.timestamps[j]) {
            ++i;
        } else if (b.timestamps[j] < a.timestamps[i]) {
            ++j;
        } else {
            out.timestamps.push_back(a.timestamps[i]);
            out.values_a.push_back(a.values[i++]);
            out.values_b.push_back(b.values[j++]);
        }
    }
    if (out.timestamps.empty())
        throw IngestError(IngestError::Kind::EmptyIntersection,
                          "series " + a.label + " and " + b.label + " share no timestamps");
    return out;
}

/// Inner join of any number of series on their common instants.
inline AlignedSet align_all(const std::vector<RawSeries>& series)
{
    detail::require(!series.empty(), "nothing to align");
    for (const auto& s : series) s.validate();
    std::vector<std::int64_t> common = series.front().timestamps;
    for (std::size_t k = 1; k < series.size(); ++k) {
        std::vector<std::int64_t> next;
        std::set_intersection(common.begin(), common.end(), series[k].timestamps.begin(),
                              series[k].timestamps.end(), std::back_inserter(next));
        common.swap(next);
    }
    if (common.empty())
        throw IngestError(IngestError::Kind::EmptyIntersection, "the selected series share no timestamps");

    AlignedSet out;
    out.timestamps = common;
    for (const auto& s : series) {
        out.labels.push_back(s.label);
        std::vector<double> column;
        column.reserve(common.size());
        std::size_t j = 0;
        for (std::int64_t ts : common) {
            while (s.timestamps[j] < ts) ++j;
            column.push_back(s.values[j]);
        }
        out.columns.push_back(std::move(column));
    }
    return out;
}

} // namespace rte
