#include "medloc/serialization.hpp"

#include "medloc/error.hpp"

namespace medloc {
namespace {

template <typename T>
T required(const json& j, const char* key) {
    const auto it = j.find(key);
    if (it == j.end() || it->is_null()) throw ValidationError(std::string("missing field '") + key + "'");
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        throw ValidationError(std::string("field '") + key + "' has the wrong type");
    }
}

template <typename T>
T optional_field(const json& j, const char* key, T fallback) {
    const auto it = j.find(key);
    if (it == j.end() || it->is_null()) return fallback;
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        throw ValidationError(std::string("field '") + key + "' has the wrong type");
    }
}

}  // namespace

void to_json(json& j, const GeoPoint& p) {
    j = json{{"lat", p.latitude()}, {"lon", p.longitude()}};
}

void from_json(const json& j, GeoPoint& p) {
    p = GeoPoint(required<double>(j, "lat"), required<double>(j, "lon"));
}

void to_json(json& j, const Medicine& m) {
    j = json{{"id", m.id}, {"name", m.name}, {"dosage", m.dosage}, {"package", m.package}};
}

void from_json(const json& j, Medicine& m) {
    m.id = required<std::string>(j, "id");
    m.name = required<std::string>(j, "name");
    m.dosage = optional_field<std::string>(j, "dosage", "");
    m.package = optional_field<std::string>(j, "package", "");
    if (m.name.empty()) throw ValidationError("medicine " + m.id + " has an empty name");
}

void to_json(json& j, const PrescriptionLine& l) {
    j = json{{"medicine_id", l.medicine_id}, {"quantity", l.quantity}};
}

void from_json(const json& j, PrescriptionLine& l) {
    l.medicine_id = required<std::string>(j, "medicine_id");
    l.quantity = optional_field<int>(j, "quantity", 1);
}

void to_json(json& j, const Prescription& p) {
    j = json{{"id", p.id},
             {"patient_id", p.patient_id},
             {"lines", p.lines},
             {"status", std::string(to_string(p.status))}};
}

void from_json(const json& j, Prescription& p) {
    p.id = required<std::string>(j, "id");
    p.patient_id = required<std::string>(j, "patient_id");
    p.lines = required<std::vector<PrescriptionLine>>(j, "lines");
    p.status = parse_prescription_status(required<std::string>(j, "status"));
    validate(p);
}

void to_json(json& j, const Pharmacy& p) {
    j = json{{"id", p.id},
             {"name", p.name},
             {"lat", p.location.latitude()},
             {"lon", p.location.longitude()},
             {"contact", p.contact},
             {"registered", p.registered}};
}

void from_json(const json& j, Pharmacy& p) {
    p.id = required<std::string>(j, "id");
    p.name = required<std::string>(j, "name");
    p.location = GeoPoint(required<double>(j, "lat"), required<double>(j, "lon"));
    p.contact = optional_field<std::string>(j, "contact", "");
    p.registered = optional_field<bool>(j, "registered", true);
    validate(p);
}

void to_json(json& j, const PharmacyResponse& r) {
    j = json{{"request_id", r.request_id},
             {"pharmacy_id", r.pharmacy_id},
             {"verdict", std::string(to_string(r.verdict))},
             {"available_medicine_ids", r.available_medicine_ids},
             {"responded_at", format_timestamp(r.responded_at)}};
}

void from_json(const json& j, PharmacyResponse& r) {
    r.request_id = required<std::string>(j, "request_id");
    r.pharmacy_id = required<std::string>(j, "pharmacy_id");
    r.verdict = parse_verdict(required<std::string>(j, "verdict"));
    r.available_medicine_ids = optional_field<std::set<MedicineId>>(j, "available_medicine_ids", {});
    r.responded_at = parse_timestamp(required<std::string>(j, "responded_at"));
}

void to_json(json& j, const RequestConfig& c) {
    j = json{{"initial_radius_km", c.initial_radius_km},
             {"expansion_factor", c.expansion_factor},
             {"max_radius_km", c.max_radius_km},
             {"round_timeout_seconds", static_cast<double>(c.round_timeout.count()) / 1000.0},
             {"expand_past_partial", c.expand_past_partial}};
}

void from_json(const json& j, RequestConfig& c) {
    c = merge_config(RequestConfig{}, j);
}

RequestConfig merge_config(RequestConfig base, const json& overrides) {
    if (overrides.is_null()) return base;
    if (!overrides.is_object()) throw ValidationError("config overrides must be an object");
    base.initial_radius_km = optional_field<double>(overrides, "initial_radius_km", base.initial_radius_km);
    base.expansion_factor = optional_field<double>(overrides, "expansion_factor", base.expansion_factor);
    base.max_radius_km = optional_field<double>(overrides, "max_radius_km", base.max_radius_km);
    if (overrides.contains("round_timeout_seconds")) {
        const double secs = required<double>(overrides, "round_timeout_seconds");
        base.round_timeout = Duration(static_cast<Duration::rep>(secs * 1000.0 + 0.5));
    }
    base.expand_past_partial = optional_field<bool>(overrides, "expand_past_partial", base.expand_past_partial);
    base.validate();
    return base;
}

void to_json(json& j, const Enquiry& e) {
    j = json{{"pharmacy_id", e.pharmacy_id}, {"distance_km", e.distance_km}, {"round", e.round}};
}

void from_json(const json& j, Enquiry& e) {
    e.pharmacy_id = required<std::string>(j, "pharmacy_id");
    e.distance_km = required<double>(j, "distance_km");
    e.round = required<int>(j, "round");
}

void to_json(json& j, const AvailabilityRequest& r) {
    json enquired = json::array();
    for (const auto& [id, e] : r.enquired) enquired.push_back(e);
    json responses = json::array();
    for (const auto& [id, resp] : r.responses) responses.push_back(resp);
    j = json{{"id", r.id},
             {"prescription_id", r.prescription_id},
             {"owner_id", r.owner_id},
             {"origin", r.origin},
             {"medicine_ids", r.medicine_ids},
             {"config", r.config},
             {"round", r.round},
             {"radius_km", r.current_radius_km},
             {"state", std::string(to_string(r.state))},
             {"enquired", enquired},
             {"responses", responses},
             {"audit_responses", r.audit_responses},
             {"opened_at", format_timestamp(r.opened_at)},
             {"round_deadline", format_timestamp(r.round_deadline)}};
}

void to_json(json& j, const RequestEvent& e) {
    json payload;
    struct Visitor {
        json& out;
        void operator()(const events::Opened& o) const {
            out = json{{"prescription_id", o.prescription_id},
                       {"owner_id", o.owner_id},
                       {"origin", o.origin},
                       {"medicine_ids", o.medicine_ids},
                       {"config", o.config}};
        }
        void operator()(const events::Dispatched& d) const {
            out = json{{"round", d.round}, {"targets", d.targets}};
        }
        void operator()(const events::ResponseRecorded& r) const { out = json{{"response", r.response}}; }
        void operator()(const events::RoundExpanded& x) const {
            out = json{{"round", x.round}, {"radius_km", x.radius_km}, {"deadline", format_timestamp(x.deadline)}};
        }
        void operator()(const events::StateChanged& s) const { out = json{{"to", std::string(to_string(s.to))}}; }
        void operator()(const events::Cancelled&) const { out = json::object(); }
    };
    std::visit(Visitor{payload}, e.payload);
    j = json{{"sequence", e.sequence},
             {"request_id", e.request_id},
             {"kind", std::string(e.kind())},
             {"at", format_timestamp(e.at)},
             {"payload", payload}};
}

void from_json(const json& j, RequestEvent& e) {
    e.sequence = optional_field<std::uint64_t>(j, "sequence", 0);
    e.request_id = required<std::string>(j, "request_id");
    e.at = parse_timestamp(required<std::string>(j, "at"));
    const auto kind = required<std::string>(j, "kind");
    const json payload = j.value("payload", json::object());
    if (kind == "opened") {
        events::Opened o;
        o.prescription_id = required<std::string>(payload, "prescription_id");
        o.owner_id = required<std::string>(payload, "owner_id");
        o.origin = required<GeoPoint>(payload, "origin");
        o.medicine_ids = required<std::set<MedicineId>>(payload, "medicine_ids");
        o.config = optional_field<RequestConfig>(payload, "config", RequestConfig{});
        e.payload = std::move(o);
    } else if (kind == "dispatched") {
        e.payload = events::Dispatched{required<int>(payload, "round"), required<std::vector<Enquiry>>(payload, "targets")};
    } else if (kind == "response_recorded") {
        e.payload = events::ResponseRecorded{required<PharmacyResponse>(payload, "response")};
    } else if (kind == "round_expanded") {
        e.payload = events::RoundExpanded{required<int>(payload, "round"), required<double>(payload, "radius_km"),
                                          parse_timestamp(required<std::string>(payload, "deadline"))};
    } else if (kind == "state_changed") {
        e.payload = events::StateChanged{parse_request_state(required<std::string>(payload, "to"))};
    } else if (kind == "cancelled") {
        e.payload = events::Cancelled{};
    } else {
        throw ValidationError("unknown event kind '" + kind + "'");
    }
}

void to_json(json& j, const Notification& n) {
    j = json{{"id", n.id},
             {"user_id", n.user_id},
             {"kind", std::string(to_string(n.kind))},
             {"request_id", n.request_id},
             {"created_at", format_timestamp(n.created_at)},
             {"read", n.read},
             {"event_key", n.event_key}};
    if (n.pharmacy_id) j["pharmacy_id"] = *n.pharmacy_id;
    if (n.verdict) j["verdict"] = std::string(to_string(*n.verdict));
    if (n.state) j["state"] = std::string(to_string(*n.state));
}

void from_json(const json& j, Notification& n) {
    n.id = required<NotificationId>(j, "id");
    n.user_id = required<std::string>(j, "user_id");
    n.kind = parse_notification_kind(required<std::string>(j, "kind"));
    n.request_id = required<std::string>(j, "request_id");
    n.created_at = parse_timestamp(required<std::string>(j, "created_at"));
    n.read = optional_field<bool>(j, "read", false);
    n.event_key = required<std::string>(j, "event_key");
    n.pharmacy_id.reset();
    n.verdict.reset();
    n.state.reset();
    if (j.contains("pharmacy_id")) n.pharmacy_id = j.at("pharmacy_id").get<std::string>();
    if (j.contains("verdict")) n.verdict = parse_verdict(j.at("verdict").get<std::string>());
    if (j.contains("state")) n.state = parse_request_state(j.at("state").get<std::string>());
}

void to_json(json& j, const ApiSession& s) {
    j = json{{"token", s.token}, {"principal", s.principal}, {"role", std::string(to_string(s.role))}};
}

void from_json(const json& j, ApiSession& s) {
    s.token = required<std::string>(j, "token");
    s.principal = required<std::string>(j, "principal");
    s.role = parse_role(required<std::string>(j, "role"));
    if (s.token.empty()) throw ValidationError("empty token");
    if (s.principal.empty()) throw ValidationError("empty principal for token");
}

}  // namespace medloc
