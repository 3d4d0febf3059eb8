#include <doctest.h>

#include <cstdio>
#include <random>

#include "medloc/error.hpp"
#include "medloc/stats.hpp"
#include "medloc/stats_fixture.hpp"
#include "../support/oracles.hpp"

using namespace medloc;
using namespace medloc::stats;

namespace {

std::string fixed3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

ContingencyTable2x2 table(std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t d) {
    ContingencyTable2x2 t;
    t.a = a, t.b = b, t.c = c, t.d = d;
    return t;
}

struct Published {
    std::uint64_t a, b, c, d;
    const char* statistic;
    const char* p;
};

// Tables 7-9 as printed.
const Published kPublished[] = {
    {19, 32, 31, 18, "6.763", "0.009"},  {27, 19, 23, 31, "2.576", "0.108"}, {30, 21, 20, 29, "3.241", "0.072"},
    {24, 30, 26, 20, "1.449", "0.229"},  {21, 30, 30, 19, "4.019", "0.045"}, {15, 36, 31, 18, "11.530", "0.001"},
    {5, 16, 41, 38, "5.270", "0.022"},   {21, 39, 25, 15, "7.307", "0.007"}, {20, 39, 26, 15, "8.484", "0.004"},
};

}  // namespace

TEST_CASE("published chi-square pairs reproduce at three decimals") {
    for (const auto& row : kPublished) {
        CAPTURE(row.statistic);
        const auto r = pearson_chi_square(table(row.a, row.b, row.c, row.d));
        CHECK(r.df == 1);
        CHECK(fixed3(r.statistic) == row.statistic);
        CHECK(fixed3(r.p_value) == row.p);
    }
}

TEST_CASE("shipped fixture carries the same tables") {
    const auto fx = load_stats_fixture(MEDLOC_SOURCE_DIR "/data/stats/chi_square_tables.yaml");
    REQUIRE(fx.tables.size() == std::size(kPublished));
    for (std::size_t i = 0; i < fx.tables.size(); ++i) {
        const auto& t = fx.tables[i].table;
        CHECK(t.a == kPublished[i].a);
        CHECK(t.b == kPublished[i].b);
        CHECK(t.c == kPublished[i].c);
        CHECK(t.d == kPublished[i].d);
        REQUIRE(fx.tables[i].reported.has_value());
        CHECK(fixed3(fx.tables[i].reported->statistic) == kPublished[i].statistic);
    }
    const auto report = format_report(fx);
    CHECK(report.find("6.763") != std::string::npos);
    CHECK(report.find("DIFFERS") == std::string::npos);
}

TEST_CASE("chi-square trivial and degenerate tables") {
    const auto r = pearson_chi_square(table(10, 10, 10, 10));
    CHECK(r.statistic == 0.0);
    CHECK(r.p_value == 1.0);
    CHECK_THROWS_AS(pearson_chi_square(table(0, 0, 3, 4)), DomainError);
    CHECK_THROWS_AS(pearson_chi_square(table(1, 0, 3, 0)), DomainError);
}

TEST_CASE("no continuity correction") {
    // the corrected statistic for Table 7's first row is 5.762
    const double x = pearson_chi_square(table(19, 32, 31, 18)).statistic;
    CHECK(x == doctest::Approx(6.763).epsilon(1e-4));
    const double n = 100, ad_bc = std::fabs(19.0 * 18 - 32.0 * 31);
    const double yates = n * std::pow(ad_bc - n / 2, 2) / (51.0 * 49 * 50 * 50);
    CHECK(fixed3(yates) == "5.762");
    CHECK(fixed3(pearson_chi_square(table(19, 32, 31, 18)).p_value) == "0.009");
    CHECK(std::fabs(x - yates) > 1.0);
}

TEST_CASE("chi-square properties on random tables") {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 1000; ++i) {
        const std::uint64_t a = 1 + rng() % 200, b = 1 + rng() % 200, c = 1 + rng() % 200, d = 1 + rng() % 200;
        const double x = pearson_chi_square(table(a, b, c, d)).statistic;
        const auto rel = [&](double y) { return std::fabs(x - y) <= 1e-12 * std::max(1.0, std::fabs(x)); };
        CHECK(rel(pearson_chi_square(table(c, d, a, b)).statistic));  // rows swapped
        CHECK(rel(pearson_chi_square(table(b, a, d, c)).statistic));  // columns swapped
        CHECK(rel(pearson_chi_square(table(a, c, b, d)).statistic));  // transposed
        const double expected_form = oracle::chi_square_expected_form(a, b, c, d);
        CHECK(std::fabs(x - expected_form) <= 1e-9 * std::max(1.0, x));
        CHECK(std::fabs(pearson_statistic_from_expected(table(a, b, c, d)) - expected_form) <= 1e-9 * std::max(1.0, x));
    }
    // X2 = 0 exactly when the rows are proportional
    for (std::uint64_t k = 1; k < 20; ++k) {
        const std::uint64_t a = 1 + rng() % 30, b = 1 + rng() % 30;
        CHECK(pearson_chi_square(table(a, b, k * a, k * b)).statistic == 0.0);
    }
    CHECK(pearson_chi_square(table(3, 4, 4, 3)).statistic > 0.0);
}

TEST_CASE("chi_square_sf against numerical integration") {
    for (const int df : {1, 2, 5})
        for (const double x : {0.5, 1.0, 2.0, 3.841, 6.763, 11.530, 20.0}) {
            CAPTURE(df);
            CAPTURE(x);
            CHECK(std::fabs(chi_square_sf(x, df) - oracle::chi_square_sf_by_integration(x, df)) < 1e-9);
        }
    for (const int df : {1, 2, 3, 7, 10}) CHECK(chi_square_sf(0.0, df) == 1.0);
    CHECK(fixed3(chi_square_sf(3.841, 1)) == "0.050");
    CHECK(std::fabs(chi_square_sf(3.841, 1) - 0.0500) < 5e-5);
    CHECK(std::fabs(chi_square_sf(6.763, 1) - 0.00930) < 1e-5);
    // df = 2 has the closed form exp(-x/2)
    for (double x = 0.0; x <= 100.0; x += 0.37) CHECK(std::fabs(chi_square_sf(x, 2) - std::exp(-x / 2)) < 1e-12);
    CHECK_THROWS_AS(chi_square_sf(-0.1, 1), DomainError);
    CHECK_THROWS_AS(chi_square_sf(1.0, 0), DomainError);
}

TEST_CASE("chi_square_sf over the full range") {
    // df = 1 has the closed form erfc(sqrt(x/2))
    for (double x = 0.0; x <= 100.0; x += 0.25)
        CHECK(std::fabs(chi_square_sf(x, 1) - std::erfc(std::sqrt(x / 2))) < 1e-9);
    for (int df = 1; df <= 10; ++df) {
        double prev = 1.0;
        for (double x = 0.0; x <= 100.0; x += 1.0) {
            const double p = chi_square_sf(x, df);
            CHECK(p <= prev);
            CHECK(p >= 0.0);
            prev = p;
        }
    }
}

TEST_CASE("tabulate") {
    SUBCASE("Table 4 difficulty to find a pharmacy") {
        const std::vector<LabeledCount> counts{{"No", 171}, {"Yes", 100}};
        const auto t = tabulate(counts);
        CHECK(t.base == 271);
        CHECK(t.entries[0].percent_text() == "63.1");
        CHECK(t.entries[1].percent_text() == "36.9");
    }
    SUBCASE("single entry") {
        const std::vector<LabeledCount> counts{{"x", 1}};
        CHECK(tabulate(counts).entries[0].percent_text() == "100.0");
    }
    SUBCASE("Table 6 interest in a new system") {
        const std::vector<LabeledCount> counts{{"Some", 39}, {"High", 54}, {"Low", 6}, {"None", 1}};
        const auto t = tabulate(counts);
        std::vector<std::string> got;
        for (const auto& e : t.entries) got.push_back(e.percent_text());
        CHECK(got == std::vector<std::string>{"39.0", "54.0", "6.0", "1.0"});
    }
    SUBCASE("explicit base for multi-response questions") {
        const std::vector<LabeledCount> counts{{"A", 42}, {"B", 34}, {"C", 3}};
        const auto t = tabulate(counts, 54);
        CHECK(t.entries[0].percent_text() == "77.8");
        CHECK(t.entries[1].percent_text() == "63.0");
        CHECK(t.entries[2].percent_text() == "5.6");
    }
    SUBCASE("half-up rounding agrees with integer arithmetic") {
        std::mt19937 rng(8);
        for (int i = 0; i < 2000; ++i) {
            const std::uint64_t base = 1 + rng() % 1000, n = rng() % (base + 1);
            const std::vector<LabeledCount> counts{{"n", n}};
            CHECK(tabulate(counts, base).entries[0].percent_text() == oracle::percent_half_up(n, base));
        }
        // exact halves round up: 1/8 = 12.5%, 1/16 = 6.25% -> 6.3
        const std::vector<LabeledCount> one{{"n", 1}};
        CHECK(tabulate(one, 16).entries[0].percent_text() == "6.3");
        CHECK(tabulate(one, 8).entries[0].percent_text() == "12.5");
    }
    SUBCASE("errors") {
        const std::vector<LabeledCount> none;
        CHECK_THROWS_AS(tabulate(none), DomainError);
        const std::vector<LabeledCount> zeros{{"a", 0}};
        CHECK_THROWS_AS(tabulate(zeros), DomainError);
        CHECK_THROWS_AS(tabulate(zeros, 0), DomainError);
    }
}

TEST_CASE("shipped frequency fixture matches every printed percentage") {
    const auto fx = load_stats_fixture(MEDLOC_SOURCE_DIR "/data/stats/frequency_tables.yaml");
    REQUIRE_FALSE(fx.frequencies.empty());
    std::size_t table4 = 0;
    for (const auto& f : fx.frequencies) {
        CAPTURE(f.title);
        const auto t = tabulate(f.counts, f.base);
        REQUIRE(t.entries.size() == f.reported_percent.size());
        for (std::size_t i = 0; i < t.entries.size(); ++i) CHECK(t.entries[i].per_mille == std::llround(f.reported_percent[i] * 10));
        if (f.group.rfind("Table 4", 0) == 0) ++table4;
    }
    CHECK(table4 == 5);
}

TEST_CASE("describe") {
    const std::vector<double> fives{5, 5, 5};
    const auto f = describe(fives);
    CHECK(f.mean == 5.0);
    CHECK(f.sd == 0.0);

    const std::vector<double> four{1, 2, 3, 4};
    const auto s = describe(four);
    CHECK(s.mean == 2.5);
    CHECK(s.sd == doctest::Approx(1.2910).epsilon(1e-4));
    CHECK(s.min == 1.0);
    CHECK(s.max == 4.0);
    CHECK(s.n == 4);

    const std::vector<double> one{1};
    CHECK_THROWS_AS(describe(one), DomainError);

    std::mt19937_64 rng(21);
    for (int i = 0; i < 500; ++i) {
        std::vector<double> v(2 + rng() % 200);
        std::normal_distribution<double> dist(std::uniform_real_distribution<double>(-1e3, 1e3)(rng), 50.0);
        for (auto& x : v) x = dist(rng);
        const auto got = describe(v);
        const auto want = oracle::two_pass(v);
        CHECK(std::fabs(got.mean - want.mean) <= 1e-12 * std::max(1.0, std::fabs(want.mean)));
        CHECK(std::fabs(got.sd - want.sd) <= 1e-12 * std::max(1.0, want.sd));
        CHECK(got.min == want.min);
        CHECK(got.max == want.max);
        CHECK(got.min <= got.mean);
        CHECK(got.mean <= got.max);
    }
}

TEST_CASE("fixture parse errors name the line") {
    try {
        parse_stats_fixture("contingency:\n  - title: x\n    counts: [[1, 2], [3]]\n", "bad.yaml");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() >= 2);
        CHECK(std::string(e.what()).find("bad.yaml") != std::string::npos);
    }
}
