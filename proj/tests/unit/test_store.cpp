#include <doctest.h>

#include <fstream>

#include "medloc/error.hpp"
#include "medloc/serialization.hpp"
#include "medloc/store.hpp"
#include "../support/oracles.hpp"
#include "../support/temp_dir.hpp"

using namespace medloc;
using namespace std::chrono_literals;
using fixture::pharmacy_at;

namespace {

const Timestamp t0 = VirtualClock::default_epoch();

struct Trace {
    std::shared_ptr<const RegistrySnapshot> registry;
    std::vector<Transition> steps;

    std::vector<RequestEvent> events() const {
        std::vector<RequestEvent> out;
        for (const auto& s : steps) out.insert(out.end(), s.events.begin(), s.events.end());
        return out;
    }
};

// opened, dispatched (round 1), then P1 answers with everything.
Trace full_trace(const RequestId& id = "req-1") {
    GeoRegistry reg;
    reg.register_pharmacy(pharmacy_at("P1", 1.0));
    reg.register_pharmacy(pharmacy_at("P2", 3.0));
    Trace t{reg.snapshot(), {}};
    const Prescription rx{"rx-1", "ana", {{"A", 1}, {"B", 1}}, PrescriptionStatus::submitted};
    t.steps.push_back(open_request(id, rx, fixture::origin(), {}, *t.registry, t0));
    const auto& r = t.steps.back().request;
    t.steps.push_back(record_response(r, {id, "P1", Verdict::full, {"A", "B"}, t0 + 1min}, *t.registry, t0 + 1min));
    return t;
}

std::string read_all(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("append assigns increasing sequences and validates the trace") {
    fixture::TempDir dir;
    EventLog log(dir / "events.jsonl");
    const auto events = full_trace().events();
    REQUIRE(events.size() == 3);
    CHECK(events[0].kind() == "opened");
    CHECK(events[1].kind() == "dispatched");
    CHECK(events[2].kind() == "response_recorded");
    CHECK(log.append(events[0]) == 1);
    CHECK(log.append(events[1]) == 2);
    CHECK(log.append(events[2]) == 3);
    CHECK(log.size() == 3);
    CHECK(log.last_sequence() == 3);
}

TEST_CASE("an event that does not extend the trace is refused and nothing is written") {
    fixture::TempDir dir;
    EventLog log(dir / "events.jsonl");
    const auto events = full_trace().events();
    CHECK_THROWS_AS(log.append(events[2]), InvalidTrace);  // response before opened
    CHECK(log.size() == 0);
    CHECK(read_all(dir / "events.jsonl").empty());

    CHECK_THROWS_AS(log.append_batch({events[0], events[2]}), InvalidTrace);  // response before dispatch
    CHECK(log.size() == 0);
}

TEST_CASE("re-appending an event returns its original sequence") {
    fixture::TempDir dir;
    EventLog log(dir / "events.jsonl");
    const auto events = full_trace().events();
    log.append_batch(events);
    const auto size = read_all(dir / "events.jsonl").size();
    CHECK(log.append(events[1]) == 2);
    CHECK(log.append_batch(events) == std::vector<std::uint64_t>{1, 2, 3});
    CHECK(log.size() == 3);
    CHECK(read_all(dir / "events.jsonl").size() == size);
}

TEST_CASE("replay equals the live state") {
    fixture::TempDir dir;
    const auto trace = full_trace();
    {
        EventLog log(dir / "events.jsonl");
        log.append_batch(trace.events());
        CHECK(log.replay("req-1") == trace.steps.back().request);
        CHECK_THROWS_AS(log.replay("nope"), NotFoundError);
    }
    // after reopening, from disk alone
    EventLog reopened(dir / "events.jsonl");
    CHECK(reopened.replay("req-1") == trace.steps.back().request);
    CHECK(reopened.replay("req-1").state == RequestState::fulfilled_full);
    CHECK(reopened.request_ids() == std::vector<RequestId>{"req-1"});
    CHECK(reopened.last_sequence() == 3);
}

TEST_CASE("a torn final line is dropped on open; earlier damage is an error") {
    fixture::TempDir dir;
    const auto trace = full_trace();
    const auto file = dir / "events.jsonl";
    {
        EventLog log(file);
        log.append_batch(trace.events());
    }
    const auto whole = read_all(file);

    SUBCASE("partial line without newline") {
        {
            std::ofstream out(file, std::ios::app | std::ios::binary);
            out << R"({"sequence":4,"request_id":"req-1","at":)";
        }
        EventLog log(file);
        CHECK(log.size() == 3);
        CHECK(read_all(file) == whole);  // truncated back to the acknowledged prefix
        // still appendable after recovery, and still validating
        const auto late_cancel = cancel(trace.steps[0].request, t0 + 2min);
        CHECK_THROWS_AS(log.append(late_cancel.events[0]), InvalidTrace);
        CHECK(log.append_batch(full_trace("req-2").events()) == std::vector<std::uint64_t>{4, 5, 6});
    }
    SUBCASE("every crash prefix recovers to a prefix of the trace") {
        for (std::size_t cut = 0; cut <= whole.size(); ++cut) {
            {
                std::ofstream out(file, std::ios::trunc | std::ios::binary);
                out << whole.substr(0, cut);
            }
            EventLog log(file);
            const auto complete = static_cast<std::size_t>(std::count(whole.begin(), whole.begin() + cut, '\n'));
            CHECK(log.size() == complete);
            if (complete > 0) {
                auto expected = trace.events();
                expected.resize(complete);
                CHECK(log.events_for("req-1").size() == complete);
                for (std::size_t i = 0; i < complete; ++i) CHECK(log.events_for("req-1")[i].payload == expected[i].payload);
            }
        }
    }
    SUBCASE("damage in the middle") {
        {
            std::ofstream out(file, std::ios::trunc | std::ios::binary);
            const auto first_nl = whole.find('\n');
            out << whole.substr(0, first_nl + 1) << "garbage\n" << whole.substr(first_nl + 1);
        }
        try {
            EventLog log(file);
            FAIL("expected a parse error");
        } catch (const ParseError& e) {
            CHECK(e.line() == 2);
        }
    }
}

TEST_CASE("read_file leaves the file alone") {
    fixture::TempDir dir;
    const auto file = dir / "events.jsonl";
    {
        EventLog log(file);
        log.append_batch(full_trace().events());
    }
    {
        std::ofstream out(file, std::ios::app | std::ios::binary);
        out << "{\"torn";
    }
    const auto before = read_all(file);
    CHECK(EventLog::read_file(file).size() == 3);
    CHECK(read_all(file) == before);
}

TEST_CASE("event JSON round-trips") {
    for (const auto& e : full_trace().events()) {
        auto copy = e;
        copy.sequence = 7;
        CHECK(nlohmann::json(copy).get<RequestEvent>() == copy);
    }
}

TEST_CASE("format_trace prints one line per event") {
    auto events = full_trace().events();
    for (std::size_t i = 0; i < events.size(); ++i) events[i].sequence = i + 1;
    const auto text = format_trace(events);
    CHECK(std::count(text.begin(), text.end(), '\n') == 3);
    CHECK(text.find("opened") != std::string::npos);
    CHECK(text.find("P1") != std::string::npos);
}

TEST_CASE("entity store") {
    fixture::TempDir dir;
    EntityStore store(dir / "entities");

    SUBCASE("round trip") {
        const std::vector<Pharmacy> ps{pharmacy_at("P1", 1.0), pharmacy_at("P2", 2.0, false)};
        CHECK(store.save(EntityKind::pharmacies, ps) == 2);
        CHECK(store.load<Pharmacy>(EntityKind::pharmacies) == ps);
        const std::vector<Prescription> rx{{"rx-1", "ana", {{"A", 2}}, PrescriptionStatus::submitted}};
        store.save(EntityKind::prescriptions, rx);
        CHECK(store.load<Prescription>(EntityKind::prescriptions) == rx);
    }
    SUBCASE("never saved loads empty; empty save stores zero") {
        CHECK(store.load_entities("medicines") == nlohmann::json::array());
        CHECK(store.save_entities("medicines", nlohmann::json::array()) == 0);
        CHECK(store.load_entities("medicines") == nlohmann::json::array());
    }
    SUBCASE("unknown kind") {
        CHECK_THROWS_AS(store.save_entities("unicorns", nlohmann::json::array()), NotFoundError);
        CHECK_THROWS_AS(store.load_entities("unicorns"), NotFoundError);
    }
    SUBCASE("invalid record is refused and the old file kept") {
        store.save(EntityKind::pharmacies, std::vector<Pharmacy>{pharmacy_at("P1", 1.0)});
        auto bad = nlohmann::json(std::vector<Pharmacy>{pharmacy_at("P2", 1.0)});
        bad[0]["lat"] = 91;
        CHECK_THROWS_AS(store.save_entities(EntityKind::pharmacies, bad), ValidationError);
        CHECK(store.load<Pharmacy>(EntityKind::pharmacies).size() == 1);
        CHECK_THROWS_AS(store.save_entities(EntityKind::pharmacies, nlohmann::json::object()), ValidationError);
    }
}

TEST_CASE("Store::is_empty") {
    fixture::TempDir dir;
    CHECK(Store::is_empty(dir / "missing"));
    CHECK(Store::is_empty(dir.path()));
    {
        Store s(dir.path());
        s.entities().save(EntityKind::medicines, std::vector<Medicine>{{"m1", "A", "", ""}});
    }
    CHECK_FALSE(Store::is_empty(dir.path()));
}
