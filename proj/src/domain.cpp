#include "medloc/domain.hpp"

#include <cmath>
#include <numbers>

#include "medloc/error.hpp"

namespace medloc {

GeoPoint::GeoPoint(double latitude, double longitude) : latitude_(latitude), longitude_(longitude) {
    if (!(latitude >= -90.0 && latitude <= 90.0))
        throw ValidationError("latitude " + std::to_string(latitude) + " outside [-90, 90]");
    if (!(longitude >= -180.0 && longitude <= 180.0))
        throw ValidationError("longitude " + std::to_string(longitude) + " outside [-180, 180]");
}

double haversine_distance(const GeoPoint& a, const GeoPoint& b) noexcept {
    constexpr double rad = std::numbers::pi / 180.0;
    const double phi1 = a.latitude() * rad;
    const double phi2 = b.latitude() * rad;
    const double dphi = phi2 - phi1;
    const double dlambda = (b.longitude() - a.longitude()) * rad;
    const double s1 = std::sin(dphi / 2.0);
    const double s2 = std::sin(dlambda / 2.0);
    double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
    h = std::min(1.0, std::max(0.0, h));
    return 2.0 * kEarthRadiusKm * std::asin(std::sqrt(h));
}

std::set<MedicineId> Prescription::medicine_ids() const {
    std::set<MedicineId> ids;
    for (const auto& line : lines) ids.insert(line.medicine_id);
    return ids;
}

void validate(const Prescription& p) {
    std::set<MedicineId> seen;
    for (const auto& line : p.lines) {
        if (line.medicine_id.empty()) throw ValidationError("prescription line without medicine_id");
        if (line.quantity < 1)
            throw ValidationError("quantity for " + line.medicine_id + " must be >= 1");
        if (!seen.insert(line.medicine_id).second)
            throw ValidationError("duplicate line for medicine " + line.medicine_id);
    }
    if (p.status == PrescriptionStatus::submitted && p.lines.empty())
        throw ValidationError("a submitted prescription needs at least one line");
}

void validate(const Pharmacy& p) {
    if (p.id.empty()) throw ValidationError("pharmacy without id");
    if (p.name.empty()) throw ValidationError("pharmacy " + p.id + " has no name");
}

std::string_view to_string(Verdict v) noexcept {
    switch (v) {
        case Verdict::full: return "full";
        case Verdict::partial: return "partial";
        case Verdict::none: return "none";
    }
    return "none";
}

Verdict parse_verdict(std::string_view s) {
    if (s == "full") return Verdict::full;
    if (s == "partial") return Verdict::partial;
    if (s == "none") return Verdict::none;
    throw ValidationError("unknown verdict '" + std::string(s) + "'");
}

std::string_view to_string(PrescriptionStatus s) noexcept {
    switch (s) {
        case PrescriptionStatus::draft: return "draft";
        case PrescriptionStatus::submitted: return "submitted";
        case PrescriptionStatus::cancelled: return "cancelled";
    }
    return "draft";
}

PrescriptionStatus parse_prescription_status(std::string_view s) {
    if (s == "draft") return PrescriptionStatus::draft;
    if (s == "submitted") return PrescriptionStatus::submitted;
    if (s == "cancelled") return PrescriptionStatus::cancelled;
    throw ValidationError("unknown prescription status '" + std::string(s) + "'");
}

Verdict classify_response(const std::set<MedicineId>& requested, const std::set<MedicineId>& available) {
    for (const auto& id : available)
        if (!requested.contains(id)) throw ValidationError("medicine " + id + " is not part of the request");
    if (available.empty()) return Verdict::none;
    if (available.size() == requested.size()) return Verdict::full;
    return Verdict::partial;
}

}  // namespace medloc
