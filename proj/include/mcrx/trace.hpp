/**
 * @file trace.hpp
 * @brief Uniformly sampled drain-source current traces and their CSV form.
 *
 * CSV layout: header `time_s,current_uA` (or `time_s,normalized` for traces
 * divided by the baseline), one sample per line, LF line endings, values in
 * shortest round-trip decimal.
 */
#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "errors.hpp"

namespace mcrx {

enum class TraceUnit { microampere, normalized };

struct Trace {
    double t0 = 0.0;
    double dt = 1.0;
    std::vector<double> samples;
    /// I_ds baseline in µA; samples of a microampere trace are absolute
    /// currents, baseline + ΔI.
    double baseline = 0.0;
    TraceUnit unit = TraceUnit::microampere;

    [[nodiscard]] std::size_t size() const { return samples.size(); }
    [[nodiscard]] double time(std::size_t i) const { return t0 + static_cast<double>(i) * dt; }
    [[nodiscard]] double end_time() const { return samples.empty() ? t0 : time(samples.size() - 1); }

    void validate() const {
        if (!(dt > 0.0))
            throw DomainError("trace: sampling period must be positive");
        for (std::size_t i = 0; i < samples.size(); ++i)
            if (!std::isfinite(samples[i]))
                throw DataError("trace: non-finite sample at index " + std::to_string(i));
    }
};

/// Shortest decimal that parses back to the same double.
inline std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{})
        throw std::runtime_error("format_double: conversion failed");
    return {buf, end};
}

inline double parse_double(std::string_view s, const std::string& where) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty())
        throw DataError(where + ": cannot parse number '" + std::string(s) + "'");
    return v;
}

inline const char* trace_header(TraceUnit unit) {
    return unit == TraceUnit::normalized ? "time_s,normalized" : "time_s,current_uA";
}

inline void write_trace_csv(std::ostream& os, const Trace& tr) {
    os << trace_header(tr.unit) << '\n';
    for (std::size_t i = 0; i < tr.size(); ++i)
        os << format_double(tr.time(i)) << ',' << format_double(tr.samples[i]) << '\n';
}

inline void write_trace_csv(const std::string& path, const Trace& tr) {
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw std::runtime_error("cannot open '" + path + "' for writing");
    write_trace_csv(os, tr);
    if (!os)
        throw std::runtime_error("write failed for '" + path + "'");
}

/// Two-column numeric CSV with a one-line header. Errors name the source and
/// line number.
struct Table2 {
    std::string header;
    std::vector<double> x;
    std::vector<double> y;
};

inline Table2 read_two_column_csv(std::istream& is, const std::string& source) {
    Table2 out;
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        if (!have_header) {
            out.header = line;
            have_header = true;
            continue;
        }
        const auto comma = line.find(',');
        const std::string where = source + ":" + std::to_string(lineno);
        if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos)
            throw DataError(where + ": expected two comma-separated columns");
        out.x.push_back(parse_double(std::string_view(line).substr(0, comma), where));
        out.y.push_back(parse_double(std::string_view(line).substr(comma + 1), where));
    }
    if (!have_header)
        throw DataError(source + ":1: empty file, expected a CSV header");
    if (out.x.empty())
        throw DataError(source + ":" + std::to_string(lineno + 1) + ": no data rows after header");
    return out;
}

/// Parse a trace CSV. Sampling must be uniform to 1e-6 relative.
inline Trace read_trace_csv(std::istream& is, const std::string& source) {
    const Table2 table = read_two_column_csv(is, source);
    Trace tr;
    if (table.header == "time_s,normalized")
        tr.unit = TraceUnit::normalized;
    else if (table.header != "time_s,current_uA")
        throw DataError(source + ":1: unexpected header '" + table.header + "'");
    tr.t0 = table.x.front();
    tr.samples = table.y;
    if (table.x.size() >= 2) {
        tr.dt = (table.x.back() - table.x.front()) / static_cast<double>(table.x.size() - 1);
        if (!(tr.dt > 0.0))
            throw DataError(source + ": time column must be increasing");
        for (std::size_t i = 0; i < table.x.size(); ++i) {
            if (std::abs(table.x[i] - tr.time(i)) > 1e-6 * tr.dt)
                throw DataError(source + ":" + std::to_string(i + 2) + ": non-uniform sampling");
        }
    }
    tr.validate();
    return tr;
}

inline Trace read_trace_csv(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw DataError(path + ": cannot open file");
    return read_trace_csv(is, path);
}

} // namespace mcrx
