#include "medloc/broker.hpp"

#include <algorithm>
#include <charconv>

#include "medloc/error.hpp"
#include "medloc/serialization.hpp"

namespace medloc {
namespace {

// Numeric suffix of ids like "req-12"; 0 when there is none.
std::uint64_t id_number(const std::string& id) {
    const auto dash = id.rfind('-');
    if (dash == std::string::npos) return 0;
    std::uint64_t n = 0;
    std::from_chars(id.data() + dash + 1, id.data() + id.size(), n);
    return n;
}

bool request_order(const AvailabilityRequest& x, const AvailabilityRequest& y) {
    if (x.opened_at != y.opened_at) return x.opened_at < y.opened_at;
    return id_number(x.id) < id_number(y.id);
}

}  // namespace

World load_world(const Store& store) {
    World w;
    const auto& entities = store.entities();
    w.pharmacies = entities.load<Pharmacy>(EntityKind::pharmacies);
    w.medicines = entities.load<Medicine>(EntityKind::medicines);
    w.sessions = entities.load<ApiSession>(EntityKind::sessions);
    return w;
}

void seed_world(Store& store, const World& world) {
    if (store.log().size() > 0) throw ConflictError("data directory already holds request events");
    for (auto kind : {EntityKind::pharmacies, EntityKind::medicines, EntityKind::sessions, EntityKind::prescriptions})
        if (!store.entities().load_entities(kind).empty())
            throw ConflictError("data directory already holds " + std::string(to_string(kind)));
    // Build the in-memory forms first so every invariant is checked before
    // anything is written.
    GeoRegistry registry;
    for (const auto& p : world.pharmacies) registry.register_pharmacy(p);
    Catalog catalog(world.medicines);
    std::set<std::string> tokens;
    for (const auto& s : world.sessions) {
        if (s.token.empty() || s.principal.empty()) throw ValidationError("session with empty token or principal");
        if (!tokens.insert(s.token).second) throw ConflictError("duplicate token for " + s.principal);
        if (s.role == Role::pharmacist && !registry.snapshot()->find(s.principal))
            throw ValidationError("pharmacist token for unknown pharmacy " + s.principal);
    }
    store.entities().save(EntityKind::pharmacies, world.pharmacies);
    store.entities().save(EntityKind::medicines, world.medicines);
    store.entities().save(EntityKind::sessions, world.sessions);
}

Broker::Broker(Store& store, const Clock& clock, RequestConfig default_config)
    : store_(store), clock_(clock), default_config_(default_config), notifier_(clock) {
    default_config_.validate();
    const World world = load_world(store_);
    for (const auto& p : world.pharmacies) registry_.register_pharmacy(p);
    catalog_ = Catalog(world.medicines);
    for (const auto& s : world.sessions) sessions_.emplace(s.token, s);

    for (auto& p : store_.entities().load<Prescription>(EntityKind::prescriptions)) {
        next_prescription_ = std::max(next_prescription_, id_number(p.id) + 1);
        prescriptions_.emplace(p.id, std::move(p));
    }
    notifier_.restore(store_.entities().load<Notification>(EntityKind::notifications));

    for (const auto& id : store_.log().request_ids()) {
        auto slot = std::make_shared<Slot>();
        slot->request = store_.log().replay(id);
        next_request_ = std::max(next_request_, id_number(id) + 1);
        if (!slot->request.terminal()) open_request_by_prescription_[slot->request.prescription_id] = id;
        requests_.emplace(id, std::move(slot));
    }
}

std::optional<ApiSession> Broker::authenticate(const std::string& token) const {
    const auto it = sessions_.find(token);
    if (it == sessions_.end()) return std::nullopt;
    return it->second;
}

std::vector<PrescriptionLine> Broker::checked_lines(std::vector<PrescriptionLine> lines) const {
    if (lines.empty()) throw ValidationError("a prescription needs at least one line");
    for (const auto& line : lines)
        if (!catalog_.find(line.medicine_id)) throw ValidationError("unknown medicine id " + line.medicine_id);
    Prescription probe{"", "", lines, PrescriptionStatus::submitted};
    validate(probe);
    return lines;
}

Prescription& Broker::owned_prescription(const UserId& patient, const PrescriptionId& id) {
    const auto it = prescriptions_.find(id);
    if (it == prescriptions_.end() || it->second.patient_id != patient)
        throw NotFoundError("prescription " + id + " not found");
    return it->second;
}

const Prescription& Broker::owned_prescription(const UserId& patient, const PrescriptionId& id) const {
    return const_cast<Broker*>(this)->owned_prescription(patient, id);
}

void Broker::persist_prescriptions() {
    std::vector<Prescription> all;
    for (const auto& [id, p] : prescriptions_) all.push_back(p);
    std::lock_guard lock(persist_mutex_);
    store_.entities().save(EntityKind::prescriptions, all);
}

void Broker::persist_notifications() {
    std::lock_guard lock(persist_mutex_);
    store_.entities().save(EntityKind::notifications, notifier_.all());
}

Prescription Broker::submit_prescription(const UserId& patient, std::vector<PrescriptionLine> lines) {
    auto checked = checked_lines(std::move(lines));
    std::lock_guard lock(prescriptions_mutex_);
    Prescription p{"rx-" + std::to_string(next_prescription_++), patient, std::move(checked),
                   PrescriptionStatus::submitted};
    prescriptions_.emplace(p.id, p);
    persist_prescriptions();
    return p;
}

Prescription Broker::update_prescription(const UserId& patient, const PrescriptionId& id,
                                         std::vector<PrescriptionLine> lines) {
    auto checked = checked_lines(std::move(lines));
    std::lock_guard lock(prescriptions_mutex_);
    auto& p = owned_prescription(patient, id);
    if (p.status == PrescriptionStatus::cancelled) throw ConflictError("prescription " + id + " is cancelled");
    if (const auto it = open_request_by_prescription_.find(id); it != open_request_by_prescription_.end()) {
        const auto r = find_request(it->second);
        if (r && !r->terminal()) throw ConflictError("prescription " + id + " has an open request " + r->id);
    }
    p.lines = std::move(checked);
    p.status = PrescriptionStatus::submitted;
    persist_prescriptions();
    return p;
}

Prescription Broker::cancel_prescription(const UserId& patient, const PrescriptionId& id) {
    std::optional<RequestId> open;
    {
        std::lock_guard lock(prescriptions_mutex_);
        auto& p = owned_prescription(patient, id);
        if (p.status == PrescriptionStatus::cancelled) return p;
        p.status = PrescriptionStatus::cancelled;
        persist_prescriptions();
        if (const auto it = open_request_by_prescription_.find(id); it != open_request_by_prescription_.end())
            open = it->second;
    }
    if (open) {
        try {
            cancel_request(patient, *open);
        } catch (const InvalidTransition&) {
            // already settled
        }
    }
    return get_prescription(patient, id);
}

Prescription Broker::get_prescription(const UserId& patient, const PrescriptionId& id) const {
    std::lock_guard lock(prescriptions_mutex_);
    return owned_prescription(patient, id);
}

std::vector<Prescription> Broker::list_prescriptions(const UserId& patient) const {
    std::lock_guard lock(prescriptions_mutex_);
    std::vector<Prescription> out;
    for (const auto& [id, p] : prescriptions_)
        if (p.patient_id == patient) out.push_back(p);
    std::sort(out.begin(), out.end(),
              [](const Prescription& x, const Prescription& y) { return id_number(x.id) < id_number(y.id); });
    return out;
}

std::shared_ptr<Broker::Slot> Broker::slot(const RequestId& id) const {
    std::shared_lock lock(requests_mutex_);
    const auto it = requests_.find(id);
    if (it == requests_.end()) throw NotFoundError("request " + id + " not found");
    return it->second;
}

std::optional<AvailabilityRequest> Broker::find_request(const RequestId& id) const {
    std::shared_ptr<Slot> s;
    {
        std::shared_lock lock(requests_mutex_);
        const auto it = requests_.find(id);
        if (it == requests_.end()) return std::nullopt;
        s = it->second;
    }
    std::lock_guard lock(s->mutex);
    return s->request;
}

std::vector<RequestId> Broker::request_ids() const {
    std::shared_lock lock(requests_mutex_);
    std::vector<RequestId> out;
    for (const auto& [id, s] : requests_) out.push_back(id);
    return out;
}

void Broker::commit(Slot& slot, const Transition& t) {
    if (!t.changed()) return;
    store_.log().append_batch(t.events);
    slot.request = t.request;
}

void Broker::notify(const AvailabilityRequest& before, const Transition& t) {
    // Late answers to a finished request only go to the audit list.
    if (!t.changed() || before.terminal()) return;
    bool emitted = false;
    RequestState state = before.state;
    bool fresh = before.id.empty();
    for (const auto& e : t.events) {
        if (const auto* rr = std::get_if<events::ResponseRecorded>(&e.payload)) {
            notifier_.emit(NotificationEvent::response(e.request_id, rr->response.pharmacy_id, rr->response.verdict),
                           t.request.owner_id);
            emitted = true;
        } else if (const auto* sc = std::get_if<events::StateChanged>(&e.payload)) {
            notifier_.emit(NotificationEvent::state_change(e.request_id, sc->to), t.request.owner_id);
            emitted = true;
        } else if (std::holds_alternative<events::RoundExpanded>(e.payload)) {
            // open -> expanding is announced once; later rounds stay "expanding".
            if (fresh || state == RequestState::open) {
                notifier_.emit(NotificationEvent::state_change(e.request_id, RequestState::expanding),
                               t.request.owner_id);
                emitted = true;
            }
            state = RequestState::expanding;
            fresh = false;
        }
    }
    if (emitted) persist_notifications();
}

AvailabilityRequest Broker::request_availability(const UserId& patient, const PrescriptionId& prescription,
                                                 const GeoPoint& origin, const nlohmann::json& overrides) {
    const RequestConfig config = merge_config(default_config_, overrides);
    std::lock_guard lock(prescriptions_mutex_);
    const auto& p = owned_prescription(patient, prescription);
    if (p.status != PrescriptionStatus::submitted)
        throw ConflictError("prescription " + prescription + " is " + std::string(to_string(p.status)));
    if (const auto it = open_request_by_prescription_.find(prescription); it != open_request_by_prescription_.end()) {
        const auto r = find_request(it->second);
        if (r && !r->terminal())
            throw ConflictError("prescription " + prescription + " already has open request " + r->id);
    }

    auto slot = std::make_shared<Slot>();
    RequestId id;
    {
        std::unique_lock rlock(requests_mutex_);
        id = "req-" + std::to_string(next_request_++);
    }
    std::lock_guard slock(slot->mutex);
    const auto t = open_request(id, p, origin, config, *registry_.snapshot(), clock_.now());
    commit(*slot, t);
    {
        std::unique_lock rlock(requests_mutex_);
        requests_.emplace(id, slot);
    }
    open_request_by_prescription_[prescription] = id;
    notify(AvailabilityRequest{}, t);
    return slot->request;
}

AvailabilityRequest Broker::get_request(const UserId& patient, const RequestId& id) const {
    const auto s = slot(id);
    std::lock_guard lock(s->mutex);
    if (s->request.owner_id != patient) throw ForbiddenError("request " + id + " belongs to another user");
    return s->request;
}

std::vector<AvailabilityRequest> Broker::list_requests(const UserId& patient) const {
    std::vector<AvailabilityRequest> out;
    for (const auto& id : request_ids())
        if (auto r = find_request(id); r && r->owner_id == patient) out.push_back(std::move(*r));
    std::sort(out.begin(), out.end(), request_order);
    return out;
}

AvailabilityRequest Broker::cancel_request(const UserId& patient, const RequestId& id) {
    const auto s = slot(id);
    std::lock_guard lock(s->mutex);
    if (s->request.owner_id != patient) throw ForbiddenError("request " + id + " belongs to another user");
    const auto before = s->request;
    const auto t = cancel(s->request, clock_.now());
    commit(*s, t);
    notify(before, t);
    return s->request;
}

std::vector<InboxItem> Broker::pharmacy_inbox(const PharmacyId& pharmacy) const {
    std::vector<AvailabilityRequest> open;
    for (const auto& id : request_ids())
        if (auto r = find_request(id); r && r->awaiting(pharmacy)) open.push_back(std::move(*r));
    std::sort(open.begin(), open.end(), request_order);
    std::vector<InboxItem> out;
    std::lock_guard lock(prescriptions_mutex_);
    for (auto& r : open) {
        Prescription p;
        if (const auto it = prescriptions_.find(r.prescription_id); it != prescriptions_.end()) p = it->second;
        out.push_back({std::move(r), std::move(p)});
    }
    return out;
}

AvailabilityRequest Broker::respond(const PharmacyId& pharmacy, const RequestId& id, const ResponseInput& input) {
    const auto s = slot(id);
    std::lock_guard lock(s->mutex);
    const auto& r = s->request;
    if (!r.enquired.contains(pharmacy)) throw NotFoundError("request " + id + " was not sent to " + pharmacy);
    if (r.has_responded(pharmacy)) throw ConflictError(pharmacy + " already answered " + id);

    std::set<MedicineId> available;
    if (input.available_medicine_ids) {
        available = *input.available_medicine_ids;
    } else if (input.verdict == Verdict::full) {
        available = r.medicine_ids;
    } else if (input.verdict == Verdict::partial) {
        throw ValidationError("a partial answer must list available_medicine_ids");
    } else if (!input.verdict) {
        throw ValidationError("response needs a verdict or available_medicine_ids");
    }
    const Verdict verdict = classify_response(r.medicine_ids, available);
    if (input.verdict && *input.verdict != verdict)
        throw ValidationError("verdict " + std::string(to_string(*input.verdict)) + " contradicts the listed medicines");

    const auto now = clock_.now();
    const PharmacyResponse response{id, pharmacy, verdict, std::move(available), now};
    const auto before = r;
    const auto t = record_response(before, response, *registry_.snapshot(), now);
    commit(*s, t);
    notify(before, t);
    return s->request;
}

std::size_t Broker::tick_all() {
    std::size_t changed = 0;
    const auto snapshot = registry_.snapshot();
    for (const auto& id : request_ids()) {
        const auto s = slot(id);
        std::lock_guard lock(s->mutex);
        if (s->request.terminal()) continue;
        const auto before = s->request;
        const auto t = tick(before, *snapshot, clock_.now());
        if (!t.changed()) continue;
        commit(*s, t);
        notify(before, t);
        ++changed;
    }
    return changed;
}

std::optional<Timestamp> Broker::next_deadline() const {
    std::optional<Timestamp> next;
    for (const auto& id : request_ids()) {
        const auto r = find_request(id);
        if (!r || r->terminal()) continue;
        if (!next || r->round_deadline < *next) next = r->round_deadline;
    }
    return next;
}

std::vector<RequestId> Broker::verify_against_log() const {
    std::vector<std::shared_ptr<Slot>> slots;
    std::vector<RequestId> ids;
    {
        std::shared_lock lock(requests_mutex_);
        for (const auto& [id, s] : requests_) {
            ids.push_back(id);
            slots.push_back(s);
        }
    }
    std::vector<std::unique_lock<std::mutex>> held;
    for (const auto& s : slots) held.emplace_back(s->mutex);

    std::map<RequestId, std::vector<RequestEvent>> traces;
    for (auto& e : EventLog::read_file(store_.log().path())) traces[e.request_id].push_back(std::move(e));

    std::vector<RequestId> mismatched;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const auto it = traces.find(ids[i]);
        if (it == traces.end() || fold_events(it->second) != slots[i]->request) mismatched.push_back(ids[i]);
    }
    for (const auto& [id, trace] : traces)
        if (!std::binary_search(ids.begin(), ids.end(), id)) mismatched.push_back(id);
    return mismatched;
}

}  // namespace medloc
