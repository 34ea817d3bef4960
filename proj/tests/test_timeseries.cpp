#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "extherm/errors.hpp"
#include "extherm/timeseries.hpp"

using namespace extherm;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

} // namespace

TEST_CASE("shortest round-trip formatting") {
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(1.0) == "1");
    CHECK(format_double(-2.5e-7) == "-2.5e-07");
    CHECK(format_double(std::nan("")) == "NaN");
    // round trip is exact
    const double v = 0.123456789012345678;
    CHECK(std::stod(format_double(v)) == v);
}

TEST_CASE("CSV write/read round trip is byte-stable") {
    TimeSeries ts;
    ts.time = {0.0, 1.5, 3.0};
    ts.add_channel("a") = {1.0, 0.1, std::nan("")};
    ts.add_channel("b") = {-2.0, 1e-12, 3e8};
    const std::string p1 = "ts_roundtrip_1.csv", p2 = "ts_roundtrip_2.csv";
    write_csv(ts, p1);
    const TimeSeries back = read_csv(p1);
    REQUIRE(back.size() == 3);
    CHECK(back.names == ts.names);
    CHECK(back.channel("a")[1] == 0.1);
    CHECK(std::isnan(back.channel("a")[2]));
    write_csv(back, p2);
    CHECK(slurp(p1) == slurp(p2));
    // LF endings only
    CHECK(slurp(p1).find('\r') == std::string::npos);
    std::remove(p1.c_str());
    std::remove(p2.c_str());
}

TEST_CASE("malformed CSV is rejected") {
    const std::string p = "ts_bad.csv";
    {
        std::ofstream out(p);
        out << "a,b\n1,2\n";
    }
    CHECK_THROWS_AS(read_csv(p), DataError); // header must start with time
    {
        std::ofstream out(p);
        out << "time,a\n0,1\n1\n";
    }
    CHECK_THROWS_AS(read_csv(p), DataError); // ragged row
    {
        std::ofstream out(p);
        out << "time,a\n1,1\n0,2\n";
    }
    CHECK_THROWS_AS(read_csv(p), DataError); // non-monotone time
    std::remove(p.c_str());
    CHECK_THROWS_AS(read_csv("does_not_exist.csv"), DataError);
}

TEST_CASE("uniformity check and hold resampling") {
    TimeSeries ts;
    ts.time = {0.0, 10.0, 20.0};
    ts.add_channel("a") = {1.0, 2.0, 3.0};
    CHECK(is_uniform(ts, 10.0));
    CHECK_FALSE(is_uniform(ts, 5.0));

    TimeSeries ragged;
    ragged.time = {0.0, 4.0, 10.0};
    ragged.add_channel("a") = {1.0, 2.0, 3.0};
    CHECK_FALSE(is_uniform(ragged, 5.0));
    const TimeSeries r = resample_hold(ragged, 5.0);
    REQUIRE(r.size() == 3); // t = 0, 5, 10
    CHECK(r.channel("a")[0] == 1.0);
    CHECK(r.channel("a")[1] == 2.0); // previous value held
    CHECK(r.channel("a")[2] == 3.0);
}
