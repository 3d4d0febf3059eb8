#include <doctest.h>

#include <atomic>
#include <thread>

#include "medloc/broker.hpp"
#include "medloc/error.hpp"
#include "../support/oracles.hpp"
#include "../support/temp_dir.hpp"

using namespace medloc;
using namespace std::chrono_literals;
using fixture::pharmacy_at;

namespace {

World world(int pharmacies) {
    World w;
    w.medicines = {{"A", "Alpha", "", ""}, {"B", "Beta", "", ""}};
    w.sessions = {{"t-ana", "ana", Role::patient}, {"t-rui", "rui", Role::patient}};
    for (int i = 0; i < pharmacies; ++i) {
        const auto id = "P" + std::to_string(i);
        w.pharmacies.push_back(pharmacy_at(id, 0.1 + 0.2 * i));
        w.sessions.push_back({"t-" + id, id, Role::pharmacist});
    }
    return w;
}

struct Env {
    fixture::TempDir dir;
    VirtualClock clock;
    std::unique_ptr<Store> store;
    std::unique_ptr<Broker> broker;

    explicit Env(int pharmacies) {
        store = std::make_unique<Store>(dir.path());
        seed_world(*store, world(pharmacies));
        broker = std::make_unique<Broker>(*store, clock);
    }
};

}  // namespace

TEST_CASE("broker flow and error mapping") {
    Env env(3);
    auto& b = *env.broker;
    CHECK(b.authenticate("t-ana")->principal == "ana");
    CHECK_FALSE(b.authenticate("nope").has_value());

    CHECK_THROWS_AS(b.submit_prescription("ana", {{"Z", 1}}), ValidationError);
    const auto rx = b.submit_prescription("ana", {{"A", 1}, {"B", 2}});
    CHECK_THROWS_AS(b.get_prescription("rui", rx.id), NotFoundError);
    const auto r = b.request_availability("ana", rx.id, fixture::origin());
    CHECK(r.enquired.size() == 3);
    CHECK_THROWS_AS(b.request_availability("ana", rx.id, fixture::origin()), ConflictError);
    CHECK_THROWS_AS(b.get_request("rui", r.id), ForbiddenError);
    CHECK(b.pharmacy_inbox("P1").size() == 1);

    CHECK_THROWS_AS(b.respond("P1", r.id, {Verdict::full, std::set<MedicineId>{"A"}}), ValidationError);
    const auto after = b.respond("P1", r.id, {std::nullopt, std::set<MedicineId>{"A"}});
    CHECK(after.responses.at("P1").verdict == Verdict::partial);
    CHECK_THROWS_AS(b.respond("P1", r.id, {Verdict::none, std::nullopt}), ConflictError);
    CHECK_THROWS_AS(b.respond("P9", r.id, {Verdict::none, std::nullopt}), NotFoundError);
    CHECK(b.pharmacy_inbox("P1").empty());

    const auto done = b.respond("P2", r.id, {Verdict::full, std::nullopt});
    CHECK(done.state == RequestState::fulfilled_full);
    CHECK(b.notifier().list("ana", false).size() == 2);  // two responses, no state change message
    CHECK(b.verify_against_log().empty());

    // a new broker over the same directory sees the same world
    Broker again(*env.store, env.clock);
    CHECK(again.get_request("ana", r.id) == done);
    CHECK(again.notifier().all() == b.notifier().all());
}

TEST_CASE("rounds advance on tick_all and next_deadline follows them") {
    Env env(2);
    auto& b = *env.broker;
    CHECK_FALSE(b.next_deadline().has_value());
    const auto rx = b.submit_prescription("ana", {{"A", 1}});
    const auto r = b.request_availability("ana", rx.id, fixture::origin());
    CHECK(b.next_deadline() == r.round_deadline);
    env.clock.advance(10min);
    CHECK(b.tick_all() == 1);
    // nobody new out to the cap, so the same tick grows to 50 km and gives up
    const auto now = b.get_request("ana", r.id);
    CHECK(now.round == 5);
    CHECK(now.current_radius_km == 50.0);
    CHECK(now.state == RequestState::exhausted);
    CHECK(b.tick_all() == 0);
    CHECK_FALSE(b.next_deadline().has_value());

    // with someone at 7 km the first expansion stops at round 2
    Env near(0);
    near.broker->registry().register_pharmacy(pharmacy_at("P7", 7.0));
    near.broker->registry().register_pharmacy(pharmacy_at("P1", 1.0));
    const auto rx2 = near.broker->submit_prescription("ana", {{"A", 1}});
    const auto r2 = near.broker->request_availability("ana", rx2.id, fixture::origin());
    near.clock.advance(10min);
    CHECK(near.broker->tick_all() == 1);
    const auto r2now = near.broker->get_request("ana", r2.id);
    CHECK(r2now.round == 2);
    CHECK(r2now.dispatched_in_round(2) == std::vector<PharmacyId>{"P7"});
    CHECK(near.broker->next_deadline() == r2.round_deadline + 10min);
}

TEST_CASE("concurrent responses, ticks and cancels keep the log and memory in step") {
    Env env(40);
    auto& b = *env.broker;
    std::vector<RequestId> ids;
    for (int i = 0; i < 8; ++i) {
        const auto rx = b.submit_prescription(i % 2 ? "ana" : "rui", {{"A", 1}, {"B", 1}});
        ids.push_back(b.request_availability(i % 2 ? "ana" : "rui", rx.id, fixture::origin()).id);
    }
    std::atomic<int> conflicts{0};
    std::vector<std::thread> threads;
    for (int t = 0; t < 8; ++t)
        threads.emplace_back([&, t] {
            for (int p = 0; p < 40; ++p)
                for (const auto& id : ids) {
                    try {
                        const auto ph = "P" + std::to_string((p + t) % 40);
                        std::set<MedicineId> avail;
                        if ((p + t) % 7 == 0) avail = {"A"};
                        b.respond(ph, id, {std::nullopt, avail});
                    } catch (const ConflictError&) {
                        ++conflicts;
                    } catch (const NotFoundError&) {
                    }
                }
        });
    threads.emplace_back([&] {
        for (int i = 0; i < 50; ++i) {
            b.tick_all();
            std::this_thread::yield();
        }
    });
    for (auto& th : threads) th.join();
    CHECK(conflicts > 0);
    CHECK(b.verify_against_log().empty());
    for (const auto& id : ids) {
        const auto r = *b.find_request(id);
        CHECK(r == env.store->log().replay(id));
        // one recorded answer per pharmacy at most
        CHECK(r.responses.size() <= r.enquired.size());
    }
}
