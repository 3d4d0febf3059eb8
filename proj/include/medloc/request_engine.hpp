#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "medloc/domain.hpp"
#include "medloc/geo_registry.hpp"
#include "medloc/time.hpp"

namespace medloc {

enum class RequestState { open, expanding, fulfilled_full, fulfilled_partial, exhausted, cancelled };

std::string_view to_string(RequestState s) noexcept;
RequestState parse_request_state(std::string_view s);
bool is_terminal(RequestState s) noexcept;

struct RequestConfig {
    double initial_radius_km = 5.0;
    double expansion_factor = 2.0;
    double max_radius_km = 50.0;
    Duration round_timeout = std::chrono::minutes(10);
    // Keep searching for a full match after a round closes with only
    // partial answers instead of settling.
    bool expand_past_partial = false;

    /// Throws ValidationError on a non-positive radius, factor <= 1,
    /// initial > max or a non-positive timeout.
    void validate() const;
    /// min(initial * factor^(round-1), max)
    double radius_for_round(int round) const;
    /// ceil(log_factor(max / initial)) + 1
    int max_rounds() const;

    friend bool operator==(const RequestConfig&, const RequestConfig&) = default;
};

struct Enquiry {
    PharmacyId pharmacy_id;
    double distance_km = 0.0;
    int round = 1;

    friend bool operator==(const Enquiry&, const Enquiry&) = default;
};

struct AvailabilityRequest {
    RequestId id;
    PrescriptionId prescription_id;
    UserId owner_id;
    GeoPoint origin;
    std::set<MedicineId> medicine_ids;
    RequestConfig config;

    int round = 1;
    double current_radius_km = 0.0;
    RequestState state = RequestState::open;
    std::map<PharmacyId, Enquiry> enquired;
    std::map<PharmacyId, PharmacyResponse> responses;
    // Responses that arrived after a terminal state. Never affect state.
    std::vector<PharmacyResponse> audit_responses;
    Timestamp opened_at{};
    Timestamp round_deadline{};

    bool terminal() const noexcept { return is_terminal(state); }
    bool has_responded(const PharmacyId& id) const;
    /// Enquired, not yet answered, and the request is still live.
    bool awaiting(const PharmacyId& id) const;
    std::vector<PharmacyId> dispatched_in_round(int r) const;

    friend bool operator==(const AvailabilityRequest&, const AvailabilityRequest&) = default;
};

// Events are the source of truth: every engine operation works by emitting
// events and folding them into the request with apply_event.
namespace events {

struct Opened {
    PrescriptionId prescription_id;
    UserId owner_id;
    GeoPoint origin;
    std::set<MedicineId> medicine_ids;
    RequestConfig config;
    friend bool operator==(const Opened&, const Opened&) = default;
};

struct Dispatched {
    int round = 1;
    std::vector<Enquiry> targets;
    friend bool operator==(const Dispatched&, const Dispatched&) = default;
};

struct ResponseRecorded {
    PharmacyResponse response;
    friend bool operator==(const ResponseRecorded&, const ResponseRecorded&) = default;
};

struct RoundExpanded {
    int round = 2;
    double radius_km = 0.0;
    Timestamp deadline{};
    friend bool operator==(const RoundExpanded&, const RoundExpanded&) = default;
};

struct StateChanged {
    RequestState to = RequestState::exhausted;
    friend bool operator==(const StateChanged&, const StateChanged&) = default;
};

struct Cancelled {
    friend bool operator==(const Cancelled&, const Cancelled&) = default;
};

}  // namespace events

using EventPayload = std::variant<events::Opened, events::Dispatched, events::ResponseRecorded,
                                  events::RoundExpanded, events::StateChanged, events::Cancelled>;

struct RequestEvent {
    std::uint64_t sequence = 0;  // assigned by the event log
    RequestId request_id;
    Timestamp at{};
    EventPayload payload;

    std::string_view kind() const noexcept;
    /// Identity used for idempotent appends, unique within one request.
    std::string dedup_key() const;

    friend bool operator==(const RequestEvent&, const RequestEvent&) = default;
};

/// Folds one event into the request state. `current` is empty only for the
/// first (opened) event. Throws InvalidTrace if the event does not extend a
/// legal trace.
AvailabilityRequest apply_event(const std::optional<AvailabilityRequest>& current, const RequestEvent& event);

/// Throws InvalidTrace on an illegal or empty trace.
AvailabilityRequest fold_events(std::span<const RequestEvent> trace);

struct Transition {
    AvailabilityRequest request;
    std::vector<RequestEvent> events;
    std::vector<PharmacyId> dispatched;

    bool changed() const noexcept { return !events.empty(); }
};

/// Opens round 1 at config.initial_radius_km. When nothing is in range the
/// radius keeps growing until someone is or the cap is reached.
Transition open_request(const RequestId& id, const Prescription& prescription, const GeoPoint& origin,
                        const RequestConfig& config, const RegistrySnapshot& registry, Timestamp now);

/// First response per pharmacy wins; a repeat yields an unchanged transition.
/// Throws NotFoundError if the pharmacy was never enquired and
/// ValidationError if the verdict disagrees with the available set.
Transition record_response(const AvailabilityRequest& request, const PharmacyResponse& response,
                           const RegistrySnapshot& registry, Timestamp now);

/// Closes the current round once its deadline has passed.
Transition tick(const AvailabilityRequest& request, const RegistrySnapshot& registry, Timestamp now);

/// Throws InvalidTransition on a terminal request.
Transition cancel(const AvailabilityRequest& request, Timestamp now);

struct BestPharmacy {
    PharmacyId pharmacy_id;
    Verdict verdict = Verdict::none;
    double distance_km = 0.0;
    std::size_t available_count = 0;

    friend bool operator==(const BestPharmacy&, const BestPharmacy&) = default;
};

/// full > partial, then more medicines available, then closer, then id.
/// Absent when no response has verdict other than none.
std::optional<BestPharmacy> best_pharmacy(const AvailabilityRequest& request);

}  // namespace medloc
