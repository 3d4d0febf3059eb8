#include "medloc/request_engine.hpp"

#include <algorithm>
#include <cmath>

#include "medloc/error.hpp"

namespace medloc {

std::string_view to_string(RequestState s) noexcept {
    switch (s) {
        case RequestState::open: return "open";
        case RequestState::expanding: return "expanding";
        case RequestState::fulfilled_full: return "fulfilled_full";
        case RequestState::fulfilled_partial: return "fulfilled_partial";
        case RequestState::exhausted: return "exhausted";
        case RequestState::cancelled: return "cancelled";
    }
    return "open";
}

RequestState parse_request_state(std::string_view s) {
    for (auto st : {RequestState::open, RequestState::expanding, RequestState::fulfilled_full,
                    RequestState::fulfilled_partial, RequestState::exhausted, RequestState::cancelled})
        if (to_string(st) == s) return st;
    throw ValidationError("unknown request state '" + std::string(s) + "'");
}

bool is_terminal(RequestState s) noexcept {
    return s == RequestState::fulfilled_full || s == RequestState::fulfilled_partial ||
           s == RequestState::exhausted || s == RequestState::cancelled;
}

void RequestConfig::validate() const {
    if (!(initial_radius_km > 0.0)) throw ValidationError("initial_radius_km must be positive");
    if (!(max_radius_km > 0.0)) throw ValidationError("max_radius_km must be positive");
    if (!(initial_radius_km <= max_radius_km))
        throw ValidationError("initial_radius_km must not exceed max_radius_km");
    if (!(expansion_factor > 1.0)) throw ValidationError("expansion_factor must be greater than 1");
    if (round_timeout <= Duration::zero()) throw ValidationError("round_timeout must be positive");
}

double RequestConfig::radius_for_round(int round) const {
    return std::min(initial_radius_km * std::pow(expansion_factor, round - 1), max_radius_km);
}

int RequestConfig::max_rounds() const {
    const double steps = std::log(max_radius_km / initial_radius_km) / std::log(expansion_factor);
    // Guard against log rounding just above an integer.
    return static_cast<int>(std::ceil(steps - 1e-12)) + 1;
}

bool AvailabilityRequest::has_responded(const PharmacyId& id) const {
    if (responses.contains(id)) return true;
    return std::any_of(audit_responses.begin(), audit_responses.end(),
                       [&](const PharmacyResponse& r) { return r.pharmacy_id == id; });
}

bool AvailabilityRequest::awaiting(const PharmacyId& id) const {
    return !terminal() && enquired.contains(id) && !has_responded(id);
}

std::vector<PharmacyId> AvailabilityRequest::dispatched_in_round(int r) const {
    std::vector<const Enquiry*> hits;
    for (const auto& [id, e] : enquired)
        if (e.round == r) hits.push_back(&e);
    std::sort(hits.begin(), hits.end(), [](const Enquiry* x, const Enquiry* y) {
        if (x->distance_km != y->distance_km) return x->distance_km < y->distance_km;
        return x->pharmacy_id < y->pharmacy_id;
    });
    std::vector<PharmacyId> out;
    for (const auto* e : hits) out.push_back(e->pharmacy_id);
    return out;
}

std::string_view RequestEvent::kind() const noexcept {
    struct Visitor {
        std::string_view operator()(const events::Opened&) const { return "opened"; }
        std::string_view operator()(const events::Dispatched&) const { return "dispatched"; }
        std::string_view operator()(const events::ResponseRecorded&) const { return "response_recorded"; }
        std::string_view operator()(const events::RoundExpanded&) const { return "round_expanded"; }
        std::string_view operator()(const events::StateChanged&) const { return "state_changed"; }
        std::string_view operator()(const events::Cancelled&) const { return "cancelled"; }
    };
    return std::visit(Visitor{}, payload);
}

std::string RequestEvent::dedup_key() const {
    struct Visitor {
        std::string operator()(const events::Opened&) const { return "opened"; }
        std::string operator()(const events::Dispatched& e) const { return "dispatched:" + std::to_string(e.round); }
        std::string operator()(const events::ResponseRecorded& e) const {
            return "response:" + e.response.pharmacy_id;
        }
        std::string operator()(const events::RoundExpanded& e) const { return "round:" + std::to_string(e.round); }
        std::string operator()(const events::StateChanged& e) const {
            return "state:" + std::string(to_string(e.to));
        }
        std::string operator()(const events::Cancelled&) const { return "cancelled"; }
    };
    return std::visit(Visitor{}, payload);
}

namespace {

[[noreturn]] void bad_trace(const RequestEvent& e, const std::string& why) {
    throw InvalidTrace("request " + e.request_id + ": " + std::string(e.kind()) + " event " + why);
}

bool has_partial(const AvailabilityRequest& r) {
    return std::any_of(r.responses.begin(), r.responses.end(),
                       [](const auto& kv) { return kv.second.verdict == Verdict::partial; });
}

// Applies each event as it is produced so the returned request is, by
// construction, the fold of the emitted trace.
class TransitionBuilder {
public:
    TransitionBuilder(const AvailabilityRequest& start, Timestamp now) : now_(now), started_(true) {
        t_.request = start;
    }
    explicit TransitionBuilder(Timestamp now) : now_(now) {}

    const AvailabilityRequest& current() const { return t_.request; }

    void emit(const RequestId& id, EventPayload payload) {
        RequestEvent e{0, id, now_, std::move(payload)};
        t_.request = apply_event(started_ ? std::optional(t_.request) : std::nullopt, e);
        started_ = true;
        if (const auto* d = std::get_if<events::Dispatched>(&e.payload))
            for (const auto& target : d->targets) t_.dispatched.push_back(target.pharmacy_id);
        t_.events.push_back(std::move(e));
    }

    Transition finish() && { return std::move(t_); }
    Timestamp now() const { return now_; }

private:
    Transition t_;
    Timestamp now_;
    bool started_ = false;
};

std::vector<Enquiry> new_targets(const AvailabilityRequest& r, const RegistrySnapshot& registry, double radius,
                                 int round) {
    std::vector<Enquiry> out;
    for (const auto& hit : registry.within_radius(r.origin, radius))
        if (!r.enquired.contains(hit.pharmacy.id)) out.push_back({hit.pharmacy.id, hit.distance_km, round});
    return out;
}

// Grows the radius round by round until there is someone new to ask. With a
// partial answer already in hand a single expansion is made even if nobody
// new is in range; the round then simply runs to its deadline.
void expand(TransitionBuilder& b, const RegistrySnapshot& registry) {
    const bool partial_in_hand = has_partial(b.current());
    while (true) {
        const auto& r = b.current();
        if (r.current_radius_km >= r.config.max_radius_km) {
            b.emit(r.id, events::StateChanged{RequestState::exhausted});
            return;
        }
        const int next_round = r.round + 1;
        const double radius = r.config.radius_for_round(next_round);
        b.emit(r.id, events::RoundExpanded{next_round, radius, b.now() + r.config.round_timeout});
        auto targets = new_targets(b.current(), registry, radius, next_round);
        if (!targets.empty()) {
            b.emit(b.current().id, events::Dispatched{next_round, std::move(targets)});
            return;
        }
        if (partial_in_hand) return;
    }
}

void close_round(TransitionBuilder& b, const RegistrySnapshot& registry) {
    const auto& r = b.current();
    const bool partial = has_partial(r);
    const bool capped = r.current_radius_km >= r.config.max_radius_km;
    if (partial && (!r.config.expand_past_partial || capped)) {
        b.emit(r.id, events::StateChanged{RequestState::fulfilled_partial});
    } else if (capped) {
        b.emit(r.id, events::StateChanged{RequestState::exhausted});
    } else {
        expand(b, registry);
    }
}

}  // namespace

AvailabilityRequest apply_event(const std::optional<AvailabilityRequest>& current, const RequestEvent& event) {
    if (const auto* opened = std::get_if<events::Opened>(&event.payload)) {
        if (current) bad_trace(event, "on a request that is already open");
        opened->config.validate();
        if (opened->medicine_ids.empty()) bad_trace(event, "without medicines");
        AvailabilityRequest r;
        r.id = event.request_id;
        r.prescription_id = opened->prescription_id;
        r.owner_id = opened->owner_id;
        r.origin = opened->origin;
        r.medicine_ids = opened->medicine_ids;
        r.config = opened->config;
        r.round = 1;
        r.current_radius_km = r.config.radius_for_round(1);
        r.state = RequestState::open;
        r.opened_at = event.at;
        r.round_deadline = event.at + r.config.round_timeout;
        return r;
    }
    if (!current) bad_trace(event, "before the request was opened");
    if (current->id != event.request_id) bad_trace(event, "addressed to another request");
    AvailabilityRequest r = *current;

    struct Visitor {
        AvailabilityRequest& r;
        const RequestEvent& e;

        void operator()(const events::Opened&) const {}

        void operator()(const events::Dispatched& d) const {
            if (r.terminal()) bad_trace(e, "after a terminal state");
            if (d.round != r.round) bad_trace(e, "for round " + std::to_string(d.round) + " during round " +
                                                     std::to_string(r.round));
            for (const auto& t : d.targets) {
                if (t.round != d.round) bad_trace(e, "with a target tagged for another round");
                if (!r.enquired.emplace(t.pharmacy_id, t).second)
                    bad_trace(e, "re-enquires pharmacy " + t.pharmacy_id);
            }
        }

        void operator()(const events::ResponseRecorded& rr) const {
            const auto& resp = rr.response;
            if (!r.enquired.contains(resp.pharmacy_id))
                bad_trace(e, "from pharmacy " + resp.pharmacy_id + " that was never enquired");
            if (r.has_responded(resp.pharmacy_id)) bad_trace(e, "repeats pharmacy " + resp.pharmacy_id);
            Verdict expected;
            try {
                expected = classify_response(r.medicine_ids, resp.available_medicine_ids);
            } catch (const ValidationError& err) {
                bad_trace(e, err.what());
            }
            if (expected != resp.verdict) bad_trace(e, "with a verdict that disagrees with its medicines");
            if (r.terminal()) {
                r.audit_responses.push_back(resp);
                return;
            }
            r.responses.emplace(resp.pharmacy_id, resp);
            if (resp.verdict == Verdict::full) r.state = RequestState::fulfilled_full;
        }

        void operator()(const events::RoundExpanded& x) const {
            if (r.terminal()) bad_trace(e, "after a terminal state");
            if (x.round != r.round + 1) bad_trace(e, "skips from round " + std::to_string(r.round));
            const double expected = r.config.radius_for_round(x.round);
            if (std::abs(x.radius_km - expected) > 1e-9 * std::max(1.0, expected))
                bad_trace(e, "with radius " + std::to_string(x.radius_km) + " instead of " + std::to_string(expected));
            r.round = x.round;
            r.current_radius_km = expected;
            r.round_deadline = x.deadline;
            r.state = RequestState::expanding;
        }

        void operator()(const events::StateChanged& s) const {
            if (r.terminal()) bad_trace(e, "after a terminal state");
            switch (s.to) {
                case RequestState::exhausted: break;
                case RequestState::fulfilled_partial:
                    if (!has_partial(r)) bad_trace(e, "to fulfilled_partial without a partial response");
                    break;
                case RequestState::fulfilled_full:
                    if (std::none_of(r.responses.begin(), r.responses.end(),
                                     [](const auto& kv) { return kv.second.verdict == Verdict::full; }))
                        bad_trace(e, "to fulfilled_full without a full response");
                    break;
                default: bad_trace(e, "to non-terminal state " + std::string(to_string(s.to)));
            }
            r.state = s.to;
        }

        void operator()(const events::Cancelled&) const {
            if (r.terminal()) bad_trace(e, "after a terminal state");
            r.state = RequestState::cancelled;
        }
    };
    std::visit(Visitor{r, event}, event.payload);
    return r;
}

AvailabilityRequest fold_events(std::span<const RequestEvent> trace) {
    if (trace.empty()) throw InvalidTrace("empty trace");
    std::optional<AvailabilityRequest> r;
    for (const auto& e : trace) r = apply_event(r, e);
    return *r;
}

Transition open_request(const RequestId& id, const Prescription& prescription, const GeoPoint& origin,
                        const RequestConfig& config, const RegistrySnapshot& registry, Timestamp now) {
    if (prescription.status != PrescriptionStatus::submitted)
        throw ValidationError("prescription " + prescription.id + " is not submitted");
    if (prescription.lines.empty()) throw ValidationError("prescription " + prescription.id + " has no lines");
    validate(prescription);
    config.validate();

    TransitionBuilder b(now);
    b.emit(id, events::Opened{prescription.id, prescription.patient_id, origin, prescription.medicine_ids(), config});
    auto targets = new_targets(b.current(), registry, b.current().current_radius_km, 1);
    if (!targets.empty())
        b.emit(id, events::Dispatched{1, std::move(targets)});
    else
        expand(b, registry);
    return std::move(b).finish();
}

Transition record_response(const AvailabilityRequest& request, const PharmacyResponse& response,
                           const RegistrySnapshot& registry, Timestamp now) {
    if (response.request_id != request.id)
        throw ValidationError("response addressed to " + response.request_id + ", not " + request.id);
    if (!request.enquired.contains(response.pharmacy_id))
        throw NotFoundError("pharmacy " + response.pharmacy_id + " was not enquired by " + request.id);
    if (classify_response(request.medicine_ids, response.available_medicine_ids) != response.verdict)
        throw ValidationError("verdict does not match the available medicines");

    TransitionBuilder b(request, now);
    if (request.has_responded(response.pharmacy_id)) return std::move(b).finish();

    b.emit(request.id, events::ResponseRecorded{response});
    const auto& r = b.current();
    if (r.terminal() || !has_partial(r)) return std::move(b).finish();

    // The round closes early once everyone asked this round has answered.
    const auto this_round = r.dispatched_in_round(r.round);
    const bool all_in = !this_round.empty() && std::all_of(this_round.begin(), this_round.end(), [&](const auto& id) {
        return r.responses.contains(id);
    });
    if (all_in) close_round(b, registry);
    return std::move(b).finish();
}

Transition tick(const AvailabilityRequest& request, const RegistrySnapshot& registry, Timestamp now) {
    TransitionBuilder b(request, now);
    if (request.terminal() || now < request.round_deadline) return std::move(b).finish();
    close_round(b, registry);
    return std::move(b).finish();
}

Transition cancel(const AvailabilityRequest& request, Timestamp now) {
    if (request.terminal())
        throw InvalidTransition("request " + request.id + " is already " + std::string(to_string(request.state)));
    TransitionBuilder b(request, now);
    b.emit(request.id, events::Cancelled{});
    return std::move(b).finish();
}

std::optional<BestPharmacy> best_pharmacy(const AvailabilityRequest& request) {
    std::optional<BestPharmacy> best;
    auto rank = [](Verdict v) { return v == Verdict::full ? 0 : 1; };
    for (const auto& [id, resp] : request.responses) {
        if (resp.verdict == Verdict::none) continue;
        const auto it = request.enquired.find(id);
        BestPharmacy cand{id, resp.verdict, it == request.enquired.end() ? 0.0 : it->second.distance_km,
                          resp.available_medicine_ids.size()};
        if (!best) {
            best = cand;
            continue;
        }
        const auto key = [&](const BestPharmacy& p) {
            return std::make_tuple(rank(p.verdict), -static_cast<long long>(p.available_count), p.distance_km,
                                   p.pharmacy_id);
        };
        if (key(cand) < key(*best)) best = cand;
    }
    return best;
}

}  // namespace medloc
