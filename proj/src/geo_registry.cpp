#include "medloc/geo_registry.hpp"

#include <algorithm>

#include "medloc/error.hpp"

namespace medloc {
namespace {

bool closer(const RankedPharmacy& x, const RankedPharmacy& y) {
    if (x.distance_km != y.distance_km) return x.distance_km < y.distance_km;
    return x.pharmacy.id < y.pharmacy.id;
}

}  // namespace

const Pharmacy* RegistrySnapshot::find(const PharmacyId& id) const {
    const auto it = pharmacies_.find(id);
    return it == pharmacies_.end() ? nullptr : &it->second;
}

std::vector<RankedPharmacy> RegistrySnapshot::ranked(const GeoPoint& origin) const {
    std::vector<RankedPharmacy> out;
    out.reserve(pharmacies_.size());
    for (const auto& [id, p] : pharmacies_) {
        if (!p.registered) continue;
        out.push_back({p, haversine_distance(origin, p.location)});
    }
    return out;
}

std::vector<RankedPharmacy> RegistrySnapshot::within_radius(const GeoPoint& origin, double radius_km) const {
    if (!(radius_km > 0.0)) throw ValidationError("radius_km must be positive");
    auto all = ranked(origin);
    std::erase_if(all, [&](const RankedPharmacy& r) { return r.distance_km > radius_km; });
    std::sort(all.begin(), all.end(), closer);
    return all;
}

std::vector<RankedPharmacy> RegistrySnapshot::nearest(const GeoPoint& origin, std::size_t k) const {
    if (k == 0) throw ValidationError("k must be at least 1");
    auto all = ranked(origin);
    const auto take = std::min(k, all.size());
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(take), all.end(), closer);
    all.resize(take);
    return all;
}

GeoRegistry::GeoRegistry() : current_(std::make_shared<const RegistrySnapshot>()) {}

std::shared_ptr<const RegistrySnapshot> GeoRegistry::snapshot() const {
    std::lock_guard lock(mutex_);
    return current_;
}

std::shared_ptr<const RegistrySnapshot> GeoRegistry::register_pharmacy(const Pharmacy& p) {
    validate(p);
    std::lock_guard lock(mutex_);
    if (const Pharmacy* existing = current_->find(p.id)) {
        if (*existing == p) return current_;
        throw ConflictError("pharmacy " + p.id + " is already registered with different details");
    }
    auto pharmacies = current_->pharmacies();
    pharmacies.emplace(p.id, p);
    current_ = std::make_shared<const RegistrySnapshot>(std::move(pharmacies), current_->version() + 1);
    return current_;
}

}  // namespace medloc
