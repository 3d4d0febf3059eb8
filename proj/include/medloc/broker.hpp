#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "medloc/catalog.hpp"
#include "medloc/domain.hpp"
#include "medloc/geo_registry.hpp"
#include "medloc/notifier.hpp"
#include "medloc/request_engine.hpp"
#include "medloc/session.hpp"
#include "medloc/store.hpp"
#include "medloc/time.hpp"

namespace medloc {

struct World {
    std::vector<Pharmacy> pharmacies;
    std::vector<Medicine> medicines;
    std::vector<ApiSession> sessions;
};

/// Reads the seeded world back from a data directory.
World load_world(const Store& store);
/// Writes a world into an empty data directory. Throws ConflictError if the
/// directory already holds data and ValidationError naming a bad record.
void seed_world(Store& store, const World& world);

// How a pharmacist answered: the quick buttons carry a verdict, the checkbox
// form carries the ids that are in stock.
struct ResponseInput {
    std::optional<Verdict> verdict;
    std::optional<std::set<MedicineId>> available_medicine_ids;
};

struct InboxItem {
    AvailabilityRequest request;
    Prescription prescription;
};

// Application service behind the HTTP surface. Owns the registry, catalog,
// notifier and the live request states; every request transition is appended
// to the event log before it becomes visible.
//
// Locking: one mutex per request serializes its transitions; the request and
// prescription maps have their own locks; the log and notifier lock
// internally.
class Broker {
public:
    Broker(Store& store, const Clock& clock, RequestConfig default_config = {});

    Broker(const Broker&) = delete;
    Broker& operator=(const Broker&) = delete;

    std::optional<ApiSession> authenticate(const std::string& token) const;

    const Catalog& catalog() const noexcept { return catalog_; }
    GeoRegistry& registry() noexcept { return registry_; }
    const GeoRegistry& registry() const noexcept { return registry_; }
    Notifier& notifier() noexcept { return notifier_; }
    const Clock& clock() const noexcept { return clock_; }
    const RequestConfig& default_config() const noexcept { return default_config_; }
    Store& store() noexcept { return store_; }

    // Prescriptions. Unknown medicine ids, duplicate lines and empty lists
    // are ValidationError; foreign or unknown ids are NotFoundError.
    Prescription submit_prescription(const UserId& patient, std::vector<PrescriptionLine> lines);
    Prescription update_prescription(const UserId& patient, const PrescriptionId& id,
                                     std::vector<PrescriptionLine> lines);
    Prescription cancel_prescription(const UserId& patient, const PrescriptionId& id);
    Prescription get_prescription(const UserId& patient, const PrescriptionId& id) const;
    std::vector<Prescription> list_prescriptions(const UserId& patient) const;

    // Availability requests. A second open request for the same prescription
    // is a ConflictError.
    AvailabilityRequest request_availability(const UserId& patient, const PrescriptionId& prescription,
                                             const GeoPoint& origin, const nlohmann::json& overrides = {});
    /// NotFoundError for unknown ids, ForbiddenError for someone else's.
    AvailabilityRequest get_request(const UserId& patient, const RequestId& id) const;
    std::vector<AvailabilityRequest> list_requests(const UserId& patient) const;
    AvailabilityRequest cancel_request(const UserId& patient, const RequestId& id);

    // Pharmacist side.
    std::vector<InboxItem> pharmacy_inbox(const PharmacyId& pharmacy) const;
    /// NotFoundError when the request is unknown or never reached this
    /// pharmacy, ConflictError on a second answer, ValidationError for ids
    /// outside the prescription.
    AvailabilityRequest respond(const PharmacyId& pharmacy, const RequestId& id, const ResponseInput& input);

    /// Closes every round whose deadline has passed.
    std::size_t tick_all();
    /// Earliest round deadline among live requests.
    std::optional<Timestamp> next_deadline() const;

    /// Unchecked lookup for internal views.
    std::optional<AvailabilityRequest> find_request(const RequestId& id) const;
    std::vector<RequestId> request_ids() const;

    /// Compares each live request with a fresh fold of the on-disk log.
    /// Returns the ids that differ.
    std::vector<RequestId> verify_against_log() const;

private:
    struct Slot {
        mutable std::mutex mutex;
        AvailabilityRequest request;
    };

    std::shared_ptr<Slot> slot(const RequestId& id) const;
    void commit(Slot& slot, const Transition& t);
    void notify(const AvailabilityRequest& before, const Transition& t);
    void persist_prescriptions();
    void persist_notifications();
    Prescription& owned_prescription(const UserId& patient, const PrescriptionId& id);
    const Prescription& owned_prescription(const UserId& patient, const PrescriptionId& id) const;
    std::vector<PrescriptionLine> checked_lines(std::vector<PrescriptionLine> lines) const;

    Store& store_;
    const Clock& clock_;
    RequestConfig default_config_;
    Catalog catalog_;
    GeoRegistry registry_;
    Notifier notifier_;
    std::map<std::string, ApiSession> sessions_;

    mutable std::mutex prescriptions_mutex_;
    std::map<PrescriptionId, Prescription> prescriptions_;
    std::map<PrescriptionId, RequestId> open_request_by_prescription_;
    std::uint64_t next_prescription_ = 1;

    mutable std::shared_mutex requests_mutex_;
    std::map<RequestId, std::shared_ptr<Slot>> requests_;
    std::uint64_t next_request_ = 1;

    std::mutex persist_mutex_;
};

}  // namespace medloc
