#include "medloc/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "medloc/error.hpp"

namespace medloc::stats {

ChiSquareResult pearson_chi_square(const ContingencyTable2x2& t) {
    const double a = static_cast<double>(t.a), b = static_cast<double>(t.b);
    const double c = static_cast<double>(t.c), d = static_cast<double>(t.d);
    const double r1 = a + b, r2 = c + d, c1 = a + c, c2 = b + d;
    if (r1 == 0 || r2 == 0 || c1 == 0 || c2 == 0)
        throw DomainError("chi-square undefined: a row or column total is zero");
    const double n = r1 + r2;
    // ad - bc in exact integer arithmetic; the counts are survey-sized.
    const long double cross = static_cast<long double>(t.a) * t.d - static_cast<long double>(t.b) * t.c;
    const double statistic =
        static_cast<double>(static_cast<long double>(n) * cross * cross / (static_cast<long double>(r1) * r2 * c1 * c2));
    return {statistic, 1, chi_square_sf(statistic, 1)};
}

double pearson_statistic_from_expected(const ContingencyTable2x2& t) {
    const double obs[2][2] = {{static_cast<double>(t.a), static_cast<double>(t.b)},
                              {static_cast<double>(t.c), static_cast<double>(t.d)}};
    const double rows[2] = {obs[0][0] + obs[0][1], obs[1][0] + obs[1][1]};
    const double cols[2] = {obs[0][0] + obs[1][0], obs[0][1] + obs[1][1]};
    const double n = rows[0] + rows[1];
    if (rows[0] == 0 || rows[1] == 0 || cols[0] == 0 || cols[1] == 0)
        throw DomainError("chi-square undefined: a row or column total is zero");
    double sum = 0.0;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            const double expected = rows[i] * cols[j] / n;
            const double diff = obs[i][j] - expected;
            sum += diff * diff / expected;
        }
    return sum;
}

namespace {

constexpr int kMaxIterations = 10'000;
constexpr double kEpsilon = 1e-16;

// P(a, x) by its power series; converges quickly for x < a + 1.
double lower_series(double a, double x) {
    double term = 1.0 / a;
    double sum = term;
    for (int n = 1; n < kMaxIterations; ++n) {
        term *= x / (a + n);
        sum += term;
        if (std::abs(term) < std::abs(sum) * kEpsilon) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Q(a, x) by the Legendre continued fraction, evaluated with modified Lentz.
double upper_fraction(double a, double x) {
    constexpr double tiny = std::numeric_limits<double>::min() / kEpsilon;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < kMaxIterations; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < kEpsilon) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double regularized_gamma_q(double a, double x) {
    if (!(a > 0.0)) throw DomainError("incomplete gamma needs a > 0");
    if (!(x >= 0.0)) throw DomainError("incomplete gamma needs x >= 0");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - lower_series(a, x);
    return upper_fraction(a, x);
}

double chi_square_sf(double x, int df) {
    if (df < 1) throw DomainError("chi-square needs df >= 1");
    if (!(x >= 0.0)) throw DomainError("chi-square statistic must be non-negative");
    return regularized_gamma_q(df / 2.0, x / 2.0);
}

std::string FrequencyEntry::percent_text() const {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%llu.%llu", static_cast<unsigned long long>(per_mille / 10),
                  static_cast<unsigned long long>(per_mille % 10));
    return buf;
}

FrequencyTable tabulate(std::span<const LabeledCount> counts, std::optional<std::uint64_t> base) {
    if (counts.empty()) throw DomainError("nothing to tabulate");
    std::uint64_t total = 0;
    for (const auto& c : counts) total += c.count;
    const std::uint64_t n = base.value_or(total);
    if (n == 0) throw DomainError("tabulation base is zero");
    FrequencyTable table;
    table.base = n;
    for (const auto& c : counts) {
        // round(1000 * count / n) with halves going up, in integers.
        const std::uint64_t tenths = (2000 * c.count + n) / (2 * n);
        table.entries.push_back({c.label, c.count, tenths});
    }
    return table;
}

DescriptiveSummary describe(std::span<const double> values) {
    if (values.size() < 2) throw DomainError("describe needs at least two values");
    // Welford's update keeps the variance stable for large offsets.
    double mean = 0.0, m2 = 0.0;
    double lo = values.front(), hi = values.front();
    std::size_t n = 0;
    for (const double v : values) {
        ++n;
        const double delta = v - mean;
        mean += delta / static_cast<double>(n);
        m2 += delta * (v - mean);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    return {mean, std::sqrt(m2 / static_cast<double>(n - 1)), lo, hi, n};
}

double round_to(double value, int decimals) {
    const double scale = std::pow(10.0, decimals);
    // The nudge absorbs representation error such as 0.0045 stored as 0.00449999...
    const double scaled = value * scale;
    return std::copysign(std::floor(std::abs(scaled) + 0.5 + 1e-9), scaled) / scale;
}

}  // namespace medloc::stats
