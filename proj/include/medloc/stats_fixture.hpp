#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "medloc/stats.hpp"

namespace medloc::stats {

struct ReportedChiSquare {
    double statistic = 0.0;
    double p_value = 0.0;
};

struct FixtureTable {
    std::string group;  // caption of the published table
    ContingencyTable2x2 table;
    std::optional<ReportedChiSquare> reported;
};

struct FixtureFrequency {
    std::string group;
    std::string title;
    std::optional<std::uint64_t> base;
    std::vector<LabeledCount> counts;
    std::vector<double> reported_percent;
};

struct StatsFixture {
    std::vector<FixtureTable> tables;
    std::vector<FixtureFrequency> frequencies;
};

/// YAML with top-level `contingency:` and/or `frequencies:` lists; see
/// docs/formats.md. Errors are ParseError with the line number.
StatsFixture load_stats_fixture(const std::filesystem::path& path);
StatsFixture parse_stats_fixture(const std::string& yaml_text, const std::string& source_name = "<string>");

inline constexpr double kSignificanceLevel = 0.05;

struct ReportOptions {
    bool show_reported = true;
};

/// Plain-text report: contingency tables laid out as counts, X², p and a
/// significance mark, followed by the frequency tables.
std::string format_report(const StatsFixture& fixture, const ReportOptions& options = {});

}  // namespace medloc::stats
