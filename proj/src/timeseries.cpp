#include "extherm/timeseries.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "extherm/errors.hpp"

namespace extherm {

int TimeSeries::channel_index(const std::string& name) const {
    const auto it = std::find(names.begin(), names.end(), name);
    return it == names.end() ? -1 : static_cast<int>(it - names.begin());
}

std::vector<double>& TimeSeries::add_channel(const std::string& name) {
    if (has_channel(name))
        throw DataError("timeseries: duplicate channel '" + name + "'");
    names.push_back(name);
    columns.emplace_back(time.size(), 0.0);
    return columns.back();
}

const std::vector<double>& TimeSeries::channel(const std::string& name) const {
    const int i = channel_index(name);
    if (i < 0) throw DataError("timeseries: no channel '" + name + "'");
    return columns[i];
}

void TimeSeries::validate() const {
    for (size_t k = 1; k < time.size(); ++k)
        if (!(time[k] > time[k - 1]))
            throw DataError("timeseries: timestamps must be strictly increasing");
    for (size_t c = 0; c < columns.size(); ++c)
        if (columns[c].size() != time.size())
            throw DataError("timeseries: channel '" + names[c] + "' length mismatch");
}

std::string format_double(double v) {
    if (std::isnan(v)) return "NaN";
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {
double parse_double(const std::string& s, size_t line_no) {
    if (s == "NaN" || s == "nan")
        return std::numeric_limits<double>::quiet_NaN();
    double v = 0.0;
    const char* b = s.data();
    const char* e = b + s.size();
    const auto res = std::from_chars(b, e, v);
    if (res.ec != std::errc{} || res.ptr != e)
        throw DataError("csv: bad numeric field '" + s + "' on line " + std::to_string(line_no));
    return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}
} // namespace

TimeSeries read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("csv: cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line))
        throw DataError("csv: '" + path + "' is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto header = split_csv_line(line);
    if (header.empty() || header[0] != "time")
        throw DataError("csv: first column must be 'time' in '" + path + "'");

    TimeSeries ts;
    for (size_t c = 1; c < header.size(); ++c) ts.add_channel(header[c]);
    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != header.size())
            throw DataError("csv: wrong field count on line " + std::to_string(line_no) +
                            " of '" + path + "'");
        ts.time.push_back(parse_double(fields[0], line_no));
        for (size_t c = 1; c < fields.size(); ++c)
            ts.columns[c - 1].push_back(parse_double(fields[c], line_no));
    }
    if (ts.time.empty())
        throw DataError("csv: '" + path + "' has a header but no samples");
    ts.validate();
    return ts;
}

void write_csv(const TimeSeries& ts, const std::string& path) {
    ts.validate();
    std::ofstream out(path, std::ios::binary); // LF line endings everywhere
    if (!out) throw DataError("csv: cannot write '" + path + "'");
    out << "time";
    for (const auto& n : ts.names) out << ',' << n;
    out << '\n';
    for (size_t k = 0; k < ts.time.size(); ++k) {
        out << format_double(ts.time[k]);
        for (const auto& col : ts.columns) out << ',' << format_double(col[k]);
        out << '\n';
    }
}

bool is_uniform(const TimeSeries& ts, double dt) {
    for (size_t k = 1; k < ts.time.size(); ++k)
        if (std::abs(ts.time[k] - ts.time[k - 1] - dt) > 1e-9)
            return false;
    return true;
}

TimeSeries resample_hold(const TimeSeries& ts, double dt) {
    if (dt <= 0.0) throw DataError("resample: dt must be positive");
    ts.validate();
    TimeSeries out;
    out.names = ts.names;
    out.columns.resize(ts.columns.size());
    const double t0 = ts.time.front();
    const double t_end = ts.time.back();
    size_t src = 0;
    for (size_t k = 0;; ++k) {
        const double t = t0 + static_cast<double>(k) * dt;
        if (t > t_end + 1e-9) break;
        while (src + 1 < ts.time.size() && ts.time[src + 1] <= t + 1e-9) ++src;
        out.time.push_back(t);
        for (size_t c = 0; c < ts.columns.size(); ++c)
            out.columns[c].push_back(ts.columns[c][src]);
    }
    return out;
}

} // namespace extherm
