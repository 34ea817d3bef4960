#pragma once

#include <string>
#include <vector>

namespace extherm {

/// Named, column-ordered sampled channels over a strictly increasing time axis.
struct TimeSeries {
    std::vector<double> time; // [s]
    std::vector<std::string> names;
    std::vector<std::vector<double>> columns; // one per name, same length as time

    size_t size() const { return time.size(); }
    int channel_index(const std::string& name) const;
    bool has_channel(const std::string& name) const { return channel_index(name) >= 0; }
    std::vector<double>& add_channel(const std::string& name);
    const std::vector<double>& channel(const std::string& name) const;

    void validate() const; // throws DataError
};

TimeSeries read_csv(const std::string& path);
void write_csv(const TimeSeries& ts, const std::string& path);

/// Shortest round-trip decimal formatting (deterministic CSV output).
std::string format_double(double v);

/// Previous-value-hold resampling onto the uniform grid t0, t0+dt, ..., up to
/// the last source timestamp.
TimeSeries resample_hold(const TimeSeries& ts, double dt);

/// True when timestamps are already uniform at dt (1e-9 s tolerance).
bool is_uniform(const TimeSeries& ts, double dt);

} // namespace extherm
