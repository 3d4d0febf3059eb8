#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "medloc/broker.hpp"
#include "medloc/time.hpp"

namespace medloc {

class ApiServer;

// Scenario files are YAML; the schema is documented in docs/scenarios.md.

struct ScenarioPharmacy {
    Pharmacy pharmacy;
    std::set<MedicineId> stock;
};

struct ScenarioUser {
    std::string name;  // how steps refer to the actor
    ApiSession session;
};

struct ScenarioWorld {
    std::vector<Medicine> medicines;
    std::vector<ScenarioPharmacy> pharmacies;
    std::vector<ScenarioUser> users;

    World to_world() const;
    const ScenarioUser* user(const std::string& name) const;
    const ScenarioPharmacy* pharmacy(const PharmacyId& id) const;
};

struct ScenarioStep {
    std::size_t line = 0;
    Duration at{0};
    std::string actor;
    std::string action;
    nlohmann::json params = nlohmann::json::object();
    // variable name -> path into the response body
    std::map<std::string, std::string> save;
    std::optional<int> expect_status;
    // path -> expected value; a path ending in "#" compares a length
    std::vector<std::pair<std::string, nlohmann::json>> expect_json;
};

struct Scenario {
    std::string name;
    std::string description;
    std::string source;
    ScenarioWorld world;
    std::vector<ScenarioStep> steps;
};

/// Throws ParseError with the offending line for malformed files, unsorted
/// steps, undeclared actors and unknown actions.
Scenario parse_scenario(const std::string& text, const std::string& source = "<scenario>");
Scenario load_scenario(const std::filesystem::path& path);

/// Looks up a dotted path ("enquired.0.pharmacy_id", "enquired.#").
std::optional<nlohmann::json> json_at(const nlohmann::json& doc, const std::string& path);

struct SeedReport {
    std::size_t pharmacies = 0;
    std::size_t medicines = 0;
    std::size_t users = 0;
};

/// Writes the scenario world into `data_dir`. Refuses a non-empty directory.
SeedReport seed_scenario(const Scenario& scenario, const std::filesystem::path& data_dir);

struct StepOutcome {
    std::size_t index = 0;
    std::size_t line = 0;
    Duration at{0};
    std::string actor;
    std::string action;
    nlohmann::json exchanges = nlohmann::json::array();
    nlohmann::json events = nlohmann::json::array();
    std::vector<std::string> failures;

    bool passed() const noexcept { return failures.empty(); }
};

struct ScenarioResult {
    std::string name;
    std::vector<StepOutcome> steps;
    std::vector<std::string> failures;  // run-level problems such as replay mismatches

    bool passed() const;
    std::size_t assertion_count = 0;
    std::size_t failed_assertions = 0;
    nlohmann::json transcript() const;
};

struct RunOptions {
    // After every step, compare the server's live state with a replay of its
    // event log.
    bool check_replay = false;
};

/// Drives a server that runs in virtual-clock mode with the scenario world
/// seeded. Throws Error if the server cannot be reached.
ScenarioResult run_scenario(const Scenario& scenario, const std::string& base_url, const RunOptions& options = {});

// In-process server over a scratch data directory seeded with the scenario
// world, on a virtual clock at the default epoch.
class EmbeddedServer {
public:
    explicit EmbeddedServer(const Scenario& scenario, std::optional<std::filesystem::path> data_dir = std::nullopt);
    ~EmbeddedServer();

    EmbeddedServer(const EmbeddedServer&) = delete;
    EmbeddedServer& operator=(const EmbeddedServer&) = delete;

    std::string base_url() const;
    Broker& broker() noexcept { return *broker_; }
    const std::filesystem::path& data_dir() const noexcept { return dir_; }

    /// Rebuilds a broker from the directory alone and compares every request
    /// with the live one. Returns the ids that differ.
    std::vector<RequestId> compare_with_fresh_replay() const;

private:
    std::filesystem::path dir_;
    bool owns_dir_ = false;
    VirtualClock clock_;
    std::unique_ptr<Store> store_;
    std::unique_ptr<Broker> broker_;
    std::unique_ptr<ApiServer> server_;
};

/// One-call form: embedded server, run, optional fresh-replay check.
ScenarioResult run_embedded(const Scenario& scenario, const RunOptions& options = {});

}  // namespace medloc
