#include <doctest.h>

#include <sstream>

#include "medloc/error.hpp"
#include "medloc/scenario.hpp"
#include "medloc/seed_files.hpp"
#include "../support/temp_dir.hpp"

using namespace medloc;

namespace {

const char* kSmall = R"(name: small
world:
  medicines:
    - {id: m1, name: Paracetamol}
  pharmacies:
    - {id: ph-1, name: One, lat: 41.15, lon: -8.61, stock: [m1]}
  users:
    - {name: ana, token: t-ana, role: patient}
    - {name: one, token: t-one, role: pharmacist, principal: ph-1}
steps:
  - at: 0s
    actor: ana
    action: submit_prescription
    params: {lines: [{medicine_id: m1, quantity: 1}]}
    save: {rx: id}
    expect: {status: 201}
  - at: 1m
    actor: ana
    action: request_availability
    params: {prescription_id: "${rx}", lat: 41.15, lon: -8.61}
    expect: {status: 202, json: {state: open, "enquired.#": 1}}
)";

std::size_t parse_error_line(const std::string& text) {
    try {
        parse_scenario(text, "t.yaml");
    } catch (const ParseError& e) {
        return e.line();
    }
    return 0;
}

}  // namespace

TEST_CASE("parse_scenario reads world and steps") {
    const auto s = parse_scenario(kSmall);
    CHECK(s.name == "small");
    CHECK(s.world.medicines.size() == 1);
    REQUIRE(s.world.pharmacies.size() == 1);
    CHECK(s.world.pharmacies[0].stock == std::set<MedicineId>{"m1"});
    CHECK(s.world.user("one")->session.principal == "ph-1");
    CHECK(s.world.user("nobody") == nullptr);
    REQUIRE(s.steps.size() == 2);
    CHECK(s.steps[1].at == std::chrono::minutes(1));
    CHECK(s.steps[1].expect_status == 202);
    CHECK(s.steps[0].line == 11);
    CHECK(s.steps[1].line == 17);
}

// Step-level problems point at the step's first line.
TEST_CASE("parse_scenario errors carry the line") {
    std::string unsorted = kSmall;
    unsorted.replace(unsorted.find("at: 1m"), 6, "at: 0s");
    unsorted.replace(unsorted.find("at: 0s"), 6, "at: 5m");
    CHECK(parse_error_line(unsorted) == 17);

    std::string stranger = kSmall;
    stranger.replace(stranger.rfind("actor: ana"), 10, "actor: bob");
    CHECK(parse_error_line(stranger) == 17);

    std::string verb = kSmall;
    verb.replace(verb.find("action: request_availability"), 28, "action: teleport");
    CHECK(parse_error_line(verb) == 17);
}

TEST_CASE("a bad pharmacy coordinate names the record") {
    std::string bad = kSmall;
    bad.replace(bad.find("lat: 41.15, lon: -8.61, stock"), 10, "lat: 91.0,");
    try {
        parse_scenario(bad, "t.yaml");
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("ph-1") != std::string::npos);
    }
}

TEST_CASE("json_at") {
    const auto doc = nlohmann::json::parse(R"({"a": [{"b": 1}, {"b": 2}], "n": null})");
    CHECK(json_at(doc, "a.1.b") == nlohmann::json(2));
    CHECK(json_at(doc, "a.#") == nlohmann::json(2));
    CHECK(json_at(doc, "a.5.b") == std::nullopt);
    CHECK(json_at(doc, "missing") == std::nullopt);
    CHECK(json_at(doc, "") == doc);
}

TEST_CASE("seed_scenario reports counts and refuses a second seed") {
    fixture::TempDir dir;
    const auto s = load_scenario(MEDLOC_SOURCE_DIR "/scenarios/silent_round.yaml");
    const auto report = seed_scenario(s, dir.path());
    CHECK(report.pharmacies == s.world.pharmacies.size());
    CHECK(report.medicines == s.world.medicines.size());
    CHECK_THROWS_AS(seed_scenario(s, dir.path()), ConflictError);
}

TEST_CASE("seed files: pharmacies and tokens") {
    std::istringstream ok(
        "# id|name|lat|lon|contact|registered\n"
        "ph-1|One|41.15|-8.61|+351 1|true\n"
        "ph-2|Two|41.16|-8.60||false\n");
    const auto ps = load_pharmacy_seed(ok);
    REQUIRE(ps.size() == 2);
    CHECK_FALSE(ps[1].registered);
    std::ostringstream out;
    write_pharmacy_seed(out, ps);
    std::istringstream back(out.str());
    CHECK(load_pharmacy_seed(back) == ps);

    std::istringstream bad("ph-1|One|41.15|-8.61|x|true\nph-9|Nine|91|-8.61|x|true\n");
    try {
        load_pharmacy_seed(bad, "ph.txt");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
        CHECK(std::string(e.what()).find("ph-9") != std::string::npos);
    }

    std::istringstream tokens("t1|patient|ana\nt2|pharmacist|ph-1\n");
    const auto ts = load_token_table(tokens);
    REQUIRE(ts.size() == 2);
    CHECK(ts[1].role == Role::pharmacist);
    std::istringstream bad_role("t1|admin|ana\n");
    CHECK_THROWS_AS(load_token_table(bad_role), ParseError);
}

TEST_CASE("shipped world seeds: 12 pharmacies, 20 medicines") {
    const auto ps = load_pharmacy_seed(std::filesystem::path(MEDLOC_SOURCE_DIR "/data/world/pharmacies.txt"));
    CHECK(ps.size() == 12);
    CHECK(std::count_if(ps.begin(), ps.end(), [](const Pharmacy& p) { return !p.registered; }) == 1);
}

TEST_CASE("embedded run of a small scenario is deterministic") {
    const auto s = parse_scenario(kSmall);
    RunOptions opts;
    opts.check_replay = true;
    const auto a = run_embedded(s, opts);
    const auto b = run_embedded(s, opts);
    CHECK(a.passed());
    CHECK(a.assertion_count > 0);
    CHECK(a.transcript() == b.transcript());
}

TEST_CASE("a wrong expectation fails the run") {
    std::string wrong = kSmall;
    wrong.replace(wrong.find("state: open"), 11, "state: exhausted");
    const auto r = run_embedded(parse_scenario(wrong));
    CHECK_FALSE(r.passed());
    CHECK(r.failed_assertions == 1);
}
