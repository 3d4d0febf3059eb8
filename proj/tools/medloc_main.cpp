// medloc: server, statistics report and log inspection.
#include <CLI11.hpp>

#include <csignal>
#include <cstdlib>
#include <iostream>
#include <optional>

#include "medloc/api_server.hpp"
#include "medloc/broker.hpp"
#include "medloc/catalog.hpp"
#include "medloc/error.hpp"
#include "medloc/seed_files.hpp"
#include "medloc/stats_fixture.hpp"
#include "medloc/store.hpp"

namespace {

medloc::ApiServer* g_server = nullptr;

void on_signal(int) {
    if (g_server) g_server->stop();
}

std::string env_or(const char* name, std::string fallback) {
    const char* v = std::getenv(name);
    return v && *v ? std::string(v) : fallback;
}

struct ServeArgs {
    std::string listen = "127.0.0.1:8080";
    std::string data_dir = "data/run";
    std::string catalog;
    std::string pharmacies;
    std::string tokens;
    std::string static_dir;
    bool virtual_clock = false;
    double tick_seconds = 1.0;
};

int serve(ServeArgs a) {
    using namespace medloc;
    const auto colon = a.listen.rfind(':');
    if (colon == std::string::npos) throw ValidationError("--listen expects host:port");
    const auto host = a.listen.substr(0, colon);
    const int port = std::stoi(a.listen.substr(colon + 1));

    const bool fresh = Store::is_empty(a.data_dir);
    Store store(a.data_dir);
    if (fresh) {
        if (a.catalog.empty() || a.pharmacies.empty() || a.tokens.empty())
            throw ValidationError("empty data directory: pass --catalog, --pharmacies and --tokens to seed it");
        World w;
        w.medicines = load_catalog(std::filesystem::path(a.catalog)).medicines();
        w.pharmacies = load_pharmacy_seed(std::filesystem::path(a.pharmacies));
        w.sessions = load_token_table(std::filesystem::path(a.tokens));
        seed_world(store, w);
        std::cerr << "seeded " << a.data_dir << ": " << w.pharmacies.size() << " pharmacies, " << w.medicines.size()
                  << " medicines, " << w.sessions.size() << " tokens\n";
    }

    std::unique_ptr<Clock> clock;
    VirtualClock* virtual_clock = nullptr;
    if (a.virtual_clock) {
        auto vc = std::make_unique<VirtualClock>();
        virtual_clock = vc.get();
        clock = std::move(vc);
    } else {
        clock = std::make_unique<SystemClock>();
    }
    Broker broker(store, *clock);

    // Wall-clock mode ticks in the background; virtual mode only moves on
    // /admin/advance-clock.
    std::optional<TickDriver> driver;
    if (!a.virtual_clock)
        driver.emplace(broker, std::chrono::milliseconds(static_cast<long>(a.tick_seconds * 1000)));

    ApiOptions options;
    options.virtual_clock = virtual_clock;
    options.static_dir = a.static_dir;
    ApiServer server(broker, options);
    g_server = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::cerr << "listening on " << host << ":" << port << (a.virtual_clock ? " (virtual clock)" : "") << "\n";
    server.listen(host, port);
    g_server = nullptr;
    return 0;
}

int stats_report(const std::string& fixture, bool quiet_reported) {
    const auto f = medloc::stats::load_stats_fixture(fixture);
    medloc::stats::ReportOptions opt;
    opt.show_reported = !quiet_reported;
    std::cout << medloc::stats::format_report(f, opt);
    return 0;
}

int log_dump(const std::string& request_id, const std::string& data_dir) {
    const auto file = std::filesystem::path(data_dir) / "events.jsonl";
    if (!std::filesystem::exists(file)) throw medloc::NotFoundError("no event log in " + data_dir);
    std::vector<medloc::RequestEvent> trace;
    for (auto& e : medloc::EventLog::read_file(file))
        if (e.request_id == request_id) trace.push_back(std::move(e));
    if (trace.empty()) throw medloc::NotFoundError("no events for request " + request_id);
    std::cout << medloc::format_trace(trace);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"medloc: medicine availability broker"};
    app.require_subcommand(1);

    ServeArgs sa;
    sa.listen = env_or("MEDLOC_LISTEN", sa.listen);
    sa.data_dir = env_or("MEDLOC_DATA_DIR", sa.data_dir);
    sa.catalog = env_or("MEDLOC_CATALOG", "");
    sa.pharmacies = env_or("MEDLOC_PHARMACIES", "");
    sa.tokens = env_or("MEDLOC_TOKENS", "");
    sa.virtual_clock = env_or("MEDLOC_VIRTUAL_CLOCK", "") == "1";
    auto* serve_cmd = app.add_subcommand("serve", "run the HTTP API");
    serve_cmd->add_option("--listen", sa.listen, "host:port")->capture_default_str();
    serve_cmd->add_option("--data-dir", sa.data_dir, "data directory")->capture_default_str();
    serve_cmd->add_option("--catalog", sa.catalog, "medicine file, used to seed an empty data directory");
    serve_cmd->add_option("--pharmacies", sa.pharmacies, "pharmacy seed file");
    serve_cmd->add_option("--tokens", sa.tokens, "token table");
    serve_cmd->add_option("--static-dir", sa.static_dir, "serve UI assets from this directory");
    serve_cmd->add_flag("--virtual-clock", sa.virtual_clock, "enable /admin endpoints and a manual clock");
    serve_cmd->add_option("--tick-seconds", sa.tick_seconds, "deadline check period in wall-clock mode")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);

    std::string fixture;
    bool quiet = false;
    auto* stats_cmd = app.add_subcommand("stats", "chi-square and frequency report over a fixture");
    stats_cmd->add_option("fixture", fixture, "stats fixture (YAML)")->required();
    stats_cmd->add_flag("--no-reported", quiet, "omit the published values");

    std::string request_id, dump_dir = sa.data_dir;
    auto* dump_cmd = app.add_subcommand("log-dump", "print the event trace of one request");
    dump_cmd->add_option("request_id", request_id)->required();
    dump_cmd->add_option("--data-dir", dump_dir)->capture_default_str();

    CLI11_PARSE(app, argc, argv);
    try {
        if (*serve_cmd) return serve(sa);
        if (*stats_cmd) return stats_report(fixture, quiet);
        if (*dump_cmd) return log_dump(request_id, dump_dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
