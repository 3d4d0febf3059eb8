#include "medloc/stats_fixture.hpp"

#include <yaml-cpp/yaml.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "medloc/error.hpp"

namespace medloc::stats {
namespace {

struct Reader {
    std::string source;

    [[noreturn]] void fail(const YAML::Node& node, const std::string& what) const {
        const auto mark = node.Mark();
        throw ParseError(source, mark.line >= 0 ? static_cast<std::size_t>(mark.line) + 1 : 0, what);
    }

    template <typename T>
    T as(const YAML::Node& node, const char* what) const {
        try {
            return node.as<T>();
        } catch (const YAML::Exception&) {
            fail(node, std::string("bad value for ") + what);
        }
    }

    YAML::Node field(const YAML::Node& map, const char* key) const {
        const auto node = map[key];
        if (!node) fail(map, std::string("missing '") + key + "'");
        return node;
    }

    FixtureTable table(const YAML::Node& n) const {
        FixtureTable t;
        t.group = n["group"] ? as<std::string>(n["group"], "group") : "";
        t.table.title = as<std::string>(field(n, "title"), "title");
        const auto rows = field(n, "rows");
        const auto cols = field(n, "columns");
        const auto counts = field(n, "counts");
        if (!rows.IsSequence() || rows.size() != 2) fail(rows, "rows must list two labels");
        if (!cols.IsSequence() || cols.size() != 2) fail(cols, "columns must list two labels");
        if (!counts.IsSequence() || counts.size() != 2 || !counts[0].IsSequence() || counts[0].size() != 2 ||
            !counts[1].IsSequence() || counts[1].size() != 2)
            fail(counts, "counts must be a 2x2 list of lists");
        for (int i = 0; i < 2; ++i) {
            t.table.row_labels[i] = as<std::string>(rows[i], "row label");
            t.table.column_labels[i] = as<std::string>(cols[i], "column label");
        }
        t.table.a = as<std::uint64_t>(counts[0][0], "count");
        t.table.b = as<std::uint64_t>(counts[0][1], "count");
        t.table.c = as<std::uint64_t>(counts[1][0], "count");
        t.table.d = as<std::uint64_t>(counts[1][1], "count");
        if (const auto rep = n["reported"]) {
            t.reported = ReportedChiSquare{as<double>(field(rep, "statistic"), "reported statistic"),
                                           as<double>(field(rep, "p"), "reported p")};
        }
        return t;
    }

    FixtureFrequency frequency(const YAML::Node& n) const {
        FixtureFrequency f;
        f.group = n["group"] ? as<std::string>(n["group"], "group") : "";
        f.title = as<std::string>(field(n, "title"), "title");
        if (n["base"]) f.base = as<std::uint64_t>(n["base"], "base");
        const auto counts = field(n, "counts");
        if (!counts.IsSequence() || counts.size() == 0) fail(counts, "counts must be a non-empty list");
        for (const auto& entry : counts) {
            if (!entry.IsSequence() || entry.size() != 2) fail(entry, "each count is [label, n]");
            f.counts.push_back({as<std::string>(entry[0], "label"), as<std::uint64_t>(entry[1], "count")});
        }
        if (const auto rep = n["reported"]) {
            if (!rep.IsSequence() || rep.size() != f.counts.size())
                fail(rep, "reported must have one percentage per count");
            for (const auto& v : rep) f.reported_percent.push_back(as<double>(v, "reported percentage"));
        }
        return f;
    }
};

}  // namespace

StatsFixture parse_stats_fixture(const std::string& yaml_text, const std::string& source_name) {
    YAML::Node root;
    try {
        root = YAML::Load(yaml_text);
    } catch (const YAML::ParserException& e) {
        throw ParseError(source_name, static_cast<std::size_t>(e.mark.line) + 1, e.msg);
    }
    Reader reader{source_name};
    StatsFixture fixture;
    if (!root.IsMap()) reader.fail(root, "expected a mapping with 'contingency' and/or 'frequencies'");
    if (const auto tables = root["contingency"]) {
        if (!tables.IsSequence()) reader.fail(tables, "'contingency' must be a list");
        for (const auto& t : tables) fixture.tables.push_back(reader.table(t));
    }
    if (const auto freqs = root["frequencies"]) {
        if (!freqs.IsSequence()) reader.fail(freqs, "'frequencies' must be a list");
        for (const auto& f : freqs) fixture.frequencies.push_back(reader.frequency(f));
    }
    return fixture;
}

StatsFixture load_stats_fixture(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw NotFoundError("cannot open fixture " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_stats_fixture(buffer.str(), path.string());
}

namespace {

std::string fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, round_to(v, decimals));
    return buf;
}

std::string pad(const std::string& s, std::size_t width) {
    return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

std::string lpad(const std::string& s, std::size_t width) {
    return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

}  // namespace

std::string format_report(const StatsFixture& fixture, const ReportOptions& options) {
    std::ostringstream out;
    std::string group;
    if (!fixture.tables.empty()) {
        out << "Chi-square tests of independence (Pearson, df = 1, no continuity correction; alpha = "
            << kSignificanceLevel << ")\n";
    }
    for (const auto& ft : fixture.tables) {
        const auto& t = ft.table;
        if (ft.group != group || &ft == &fixture.tables.front()) {
            group = ft.group;
            out << "\n" << (group.empty() ? std::string("(untitled)") : group) << "\n";
            out << pad("", 40) << lpad(t.column_labels[0], 16) << lpad(t.column_labels[1], 16) << lpad("X2", 10)
                << lpad("p", 8) << "\n";
        }
        const auto result = pearson_chi_square(t);
        const bool significant = result.p_value <= kSignificanceLevel;
        out << "  " << t.title << "\n";
        out << "    " << pad(t.row_labels[0], 36) << lpad(std::to_string(t.a), 16) << lpad(std::to_string(t.b), 16)
            << lpad(fixed(result.statistic, 3), 10) << lpad(fixed(result.p_value, 3), 8)
            << (significant ? "  * associated" : "    independent");
        if (options.show_reported && ft.reported) {
            const bool match = fixed(result.statistic, 3) == fixed(ft.reported->statistic, 3) &&
                               fixed(result.p_value, 3) == fixed(ft.reported->p_value, 3);
            out << (match ? "  [matches published]" : "  [DIFFERS from published " +
                                                           fixed(ft.reported->statistic, 3) + " / " +
                                                           fixed(ft.reported->p_value, 3) + "]");
        }
        out << "\n";
        out << "    " << pad(t.row_labels[1], 36) << lpad(std::to_string(t.c), 16) << lpad(std::to_string(t.d), 16)
            << "\n";
    }

    group.clear();
    if (!fixture.frequencies.empty()) out << (fixture.tables.empty() ? "" : "\n") << "Frequency tables\n";
    bool first = true;
    for (const auto& f : fixture.frequencies) {
        if (first || f.group != group) {
            group = f.group;
            out << "\n" << (group.empty() ? std::string("(untitled)") : group) << "\n";
        }
        first = false;
        const auto table = tabulate(f.counts, f.base);
        out << "  " << f.title << " (N=" << table.base << ")\n";
        for (std::size_t i = 0; i < table.entries.size(); ++i) {
            const auto& e = table.entries[i];
            out << "    " << pad(e.label, 48) << lpad(std::to_string(e.count), 6) << lpad(e.percent_text(), 8);
            if (options.show_reported && i < f.reported_percent.size()) {
                const bool match = fixed(f.reported_percent[i], 1) == e.percent_text();
                out << (match ? "  [matches published]" : "  [DIFFERS: " + fixed(f.reported_percent[i], 1) + "]");
            }
            out << "\n";
        }
    }
    return out.str();
}

}  // namespace medloc::stats
