#include "support.hpp"

#include "qqm/data.hpp"

#include <catch_amalgamated.hpp>

#include <random>

using namespace qqm;

namespace {

TimeSeries two_points(Interp interp, Extrapolation ex) {
    return parse_series("t,v\n0,0\n10,10\n", "t", "v", SeriesOptions{interp, ex, "s"}, "mem");
}

std::string load_error(const std::string& text, int* line = nullptr) {
    try {
        (void)parse_series(text, "t", "v", SeriesOptions{}, "mem");
    } catch (const Error& e) {
        if (line && e.diagnostics().front().span) *line = e.diagnostics().front().span->line;
        return e.code();
    }
    return "";
}

} // namespace

TEST_CASE("sampling modes", "[data]") {
    CHECK(sample(two_points(Interp::linear, Extrapolation::error), 4) == 4);
    CHECK(sample(two_points(Interp::hold, Extrapolation::error), 4) == 0);
    CHECK(sample(two_points(Interp::hold, Extrapolation::error), 10) == 10);
    CHECK(sample(two_points(Interp::hold, Extrapolation::hold_ends), 12) == 10);
    CHECK(sample(two_points(Interp::linear, Extrapolation::hold_ends), -1) == 0);
    CHECK_THROWS_AS(sample(two_points(Interp::linear, Extrapolation::error), 12), Error);
}

TEST_CASE("CSV errors", "[data]") {
    int line = 0;
    CHECK(load_error("t,v\n0,1\n1,\n", &line) == "E-CSV-PARSE");
    CHECK(line == 3);
    CHECK(load_error("t,v\n0,1\n1,abc\n") == "E-CSV-PARSE");
    CHECK(load_error("t,w\n0,1\n") == "E-MISSING-COLUMN");
    CHECK(load_error("t,v\n") == "E-EMPTY");
    CHECK(load_error("t,v\n0,1\n2,1\n1,1\n", &line) == "E-NONMONOTONIC-TIME");
    CHECK(line == 4);
}

TEST_CASE("comments and blank lines are skipped", "[data]") {
    auto s = parse_series("# source: test\nt,v\n\n0,1\n# mid\n1,2\n", "t", "v", SeriesOptions{}, "mem");
    CHECK(s.times == std::vector<double>{0, 1});
    CHECK(s.values == std::vector<double>{1, 2});
}

TEST_CASE("load -> to_csv -> load is the identity", "[data]") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int trial = 0; trial < 50; ++trial) {
        TimeSeries s;
        double t = u(rng);
        for (int i = 0; i < 30; ++i) {
            s.times.push_back(t);
            s.values.push_back(u(rng) / 7.0);
            t += std::abs(u(rng)) / 1000.0 + 1e-3;
        }
        auto text = to_csv(s, "time", "value");
        auto back = parse_series(text, "time", "value", SeriesOptions{}, "mem");
        CHECK(back.times == s.times);
        CHECK(back.values == s.values);
    }
}

TEST_CASE("sample is monotone for monotone series", "[data]") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0, 1);
    for (auto interp : {Interp::hold, Interp::linear}) {
        TimeSeries s;
        s.interp = interp;
        double v = 0;
        for (int i = 0; i <= 20; ++i) {
            s.times.push_back(i);
            s.values.push_back(v += u(rng));
        }
        double prev = sample(s, 0);
        for (double t = 0; t <= 20; t += 0.013) {
            double x = sample(s, t);
            CHECK(x >= prev);
            prev = x;
        }
    }
}

TEST_CASE("lookup examples", "[data][lookup]") {
    LookupTable t{"t", {{0, 1}, {10, 0.8}}, ""};
    CHECK(lookup_eval(t, 5) == Catch::Approx(0.9).epsilon(1e-15));
    CHECK(lookup_eval(t, -3) == 1);
    CHECK(lookup_eval(t, 10) == 0.8);
    CHECK(lookup_eval(t, 0) == 1);
}

TEST_CASE("lookup agrees with an independent interpolation oracle", "[data][lookup]") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> u(-10, 10);
    std::uniform_int_distribution<int> npts(2, 8);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<std::pair<double, double>> pts;
        double x = u(rng);
        for (int k = npts(rng); k > 0; --k) {
            pts.push_back({x, u(rng)});
            x += std::abs(u(rng)) + 0.01;
        }
        LookupTable table;
        table.id = "t";
        for (auto [px, py] : pts) table.points.push_back({px, py});
        const double probe = trial % 10 == 0 ? pts[trial % pts.size()].first : u(rng) * 2;
        CHECK(std::abs(lookup_eval(table, probe) - qqm_test::oracle_interp(pts, probe)) <= 1e-12);
    }
}

TEST_CASE("malformed lookup tables", "[data][lookup]") {
    CHECK(has_code(check_lookup(LookupTable{"t", {{0, 1}}, ""}), "E-BAD-LOOKUP"));
    CHECK(has_code(check_lookup(LookupTable{"t", {{0, 1}, {0, 2}}, ""}), "E-BAD-LOOKUP"));
    CHECK(check_lookup(LookupTable{"t", {{0, 1}, {1, 2}}, ""}).empty());
}
