#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace medloc::stats {

// 2x2 cross-tabulation. Rows are the levels of the first factor, columns the
// levels of the second:
//
//              col[0]  col[1]
//     row[0]     a       b
//     row[1]     c       d
struct ContingencyTable2x2 {
    std::uint64_t a = 0, b = 0, c = 0, d = 0;
    std::string title;
    std::string row_labels[2];
    std::string column_labels[2];

    std::uint64_t total() const noexcept { return a + b + c + d; }
};

struct ChiSquareResult {
    double statistic = 0.0;
    int df = 1;
    double p_value = 1.0;
};

/// Pearson's X² without continuity correction, df = 1. Throws DomainError
/// when a row or column total is zero.
ChiSquareResult pearson_chi_square(const ContingencyTable2x2& t);

/// Same statistic computed as Σ (O - E)² / E with E taken from the margins.
double pearson_statistic_from_expected(const ContingencyTable2x2& t);

/// Regularized upper incomplete gamma Q(a, x) for a > 0, x >= 0.
double regularized_gamma_q(double a, double x);

/// Upper tail P(X > x) of the chi-square distribution with `df` degrees of
/// freedom. Throws DomainError for x < 0 or df < 1.
double chi_square_sf(double x, int df);

struct FrequencyEntry {
    std::string label;
    std::uint64_t count = 0;
    // Percentage of the base in tenths of a percent, rounded half-up.
    std::uint64_t per_mille = 0;

    double percent() const noexcept { return static_cast<double>(per_mille) / 10.0; }
    /// One decimal, e.g. "63.1".
    std::string percent_text() const;
};

struct FrequencyTable {
    std::string title;
    std::uint64_t base = 0;
    std::vector<FrequencyEntry> entries;
};

struct LabeledCount {
    std::string label;
    std::uint64_t count = 0;
};

/// Shares of `base` (default: the sum of the counts). An explicit base is how
/// multi-response questions are tabulated: each option is an independent
/// share of the respondents, so the column may exceed 100%. Throws
/// DomainError on empty input or a zero base.
FrequencyTable tabulate(std::span<const LabeledCount> counts, std::optional<std::uint64_t> base = std::nullopt);

struct DescriptiveSummary {
    double mean = 0.0;
    double sd = 0.0;  // sample (N - 1)
    double min = 0.0;
    double max = 0.0;
    std::size_t n = 0;
};

/// Throws DomainError for fewer than two values.
DescriptiveSummary describe(std::span<const double> values);

/// Rounds half away from zero at `decimals` places, e.g. for report columns.
double round_to(double value, int decimals);

}  // namespace medloc::stats
