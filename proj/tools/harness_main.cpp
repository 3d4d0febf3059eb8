// harness: seeds worlds and runs scripted scenarios against the API.
#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "medloc/error.hpp"
#include "medloc/scenario.hpp"

namespace {

void print_result(const medloc::ScenarioResult& r) {
    for (const auto& s : r.steps) {
        std::cout << (s.passed() ? "  ok   " : "  FAIL ") << "step " << s.index << " (line " << s.line << ") "
                  << s.action;
        if (!s.actor.empty()) std::cout << " by " << s.actor;
        std::cout << "\n";
        for (const auto& f : s.failures) std::cout << "         " << f << "\n";
    }
    for (const auto& f : r.failures) std::cout << "  FAIL " << f << "\n";
    std::cout << (r.passed() ? "PASS " : "FAIL ") << r.name << ": " << (r.assertion_count - r.failed_assertions) << "/"
              << r.assertion_count << " assertions\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"harness: scenario seeding and replay"};
    app.require_subcommand(1);

    std::string seed_file, data_dir;
    auto* seed = app.add_subcommand("seed", "load a scenario world into an empty data directory");
    seed->add_option("file", seed_file)->required()->check(CLI::ExistingFile);
    seed->add_option("--data-dir", data_dir)->required();

    std::string run_file, server, transcript;
    bool check_replay = false;
    auto* run = app.add_subcommand("run", "run a scenario");
    run->add_option("file", run_file)->required()->check(CLI::ExistingFile);
    run->add_option("--server", server, "base URL of a server in virtual-clock mode; default runs in-process");
    run->add_option("--transcript", transcript, "write the JSON transcript here");
    run->add_flag("--check-replay", check_replay, "compare live state with a replay of the log after every step");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*seed) {
            const auto s = medloc::load_scenario(seed_file);
            const auto r = medloc::seed_scenario(s, data_dir);
            std::cout << "seeded " << data_dir << ": " << r.pharmacies << " pharmacies, " << r.medicines
                      << " medicines, " << r.users << " users\n";
            return 0;
        }
        const auto s = medloc::load_scenario(run_file);
        medloc::RunOptions opt;
        opt.check_replay = check_replay;
        const auto result = server.empty() ? medloc::run_embedded(s, opt) : medloc::run_scenario(s, server, opt);
        if (!transcript.empty()) {
            std::ofstream out(transcript);
            if (!out) throw medloc::Error("cannot write " + transcript);
            out << result.transcript().dump(2) << "\n";
        }
        print_result(result);
        return result.passed() ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
