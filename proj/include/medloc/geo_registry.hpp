#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "medloc/domain.hpp"

namespace medloc {

struct RankedPharmacy {
    Pharmacy pharmacy;
    double distance_km = 0.0;

    friend bool operator==(const RankedPharmacy&, const RankedPharmacy&) = default;
};

// Immutable view of the registry. Queries are a linear scan; the results are
// ordered by (distance, id) so the fanout is reproducible.
class RegistrySnapshot {
public:
    RegistrySnapshot() = default;
    RegistrySnapshot(std::map<PharmacyId, Pharmacy> pharmacies, std::uint64_t version)
        : pharmacies_(std::move(pharmacies)), version_(version) {}

    const std::map<PharmacyId, Pharmacy>& pharmacies() const noexcept { return pharmacies_; }
    std::uint64_t version() const noexcept { return version_; }
    std::size_t size() const noexcept { return pharmacies_.size(); }
    const Pharmacy* find(const PharmacyId& id) const;

    /// Registered pharmacies with distance <= radius_km (inclusive).
    std::vector<RankedPharmacy> within_radius(const GeoPoint& origin, double radius_km) const;
    /// The min(k, count) closest registered pharmacies.
    std::vector<RankedPharmacy> nearest(const GeoPoint& origin, std::size_t k) const;

private:
    std::vector<RankedPharmacy> ranked(const GeoPoint& origin) const;

    std::map<PharmacyId, Pharmacy> pharmacies_;
    std::uint64_t version_ = 0;
};

// Copy-on-write registry: mutations are serialized and publish a new
// snapshot; readers keep whichever snapshot they grabbed.
class GeoRegistry {
public:
    GeoRegistry();

    std::shared_ptr<const RegistrySnapshot> snapshot() const;

    /// Re-registering an identical record is a no-op; a differing record under
    /// an existing id throws ConflictError.
    std::shared_ptr<const RegistrySnapshot> register_pharmacy(const Pharmacy& p);

    std::vector<RankedPharmacy> within_radius(const GeoPoint& origin, double radius_km) const {
        return snapshot()->within_radius(origin, radius_km);
    }
    std::vector<RankedPharmacy> nearest(const GeoPoint& origin, std::size_t k) const {
        return snapshot()->nearest(origin, k);
    }

private:
    mutable std::mutex mutex_;
    std::shared_ptr<const RegistrySnapshot> current_;
};

}  // namespace medloc
