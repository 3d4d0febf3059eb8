#pragma once

#include <compare>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "medloc/time.hpp"

namespace medloc {

using MedicineId = std::string;
using PharmacyId = std::string;
using PrescriptionId = std::string;
using RequestId = std::string;
using UserId = std::string;

inline constexpr double kEarthRadiusKm = 6371.0;

class GeoPoint {
public:
    GeoPoint() = default;
    /// Throws ValidationError when latitude is outside [-90, 90] or longitude
    /// outside [-180, 180] (NaN included).
    GeoPoint(double latitude, double longitude);

    double latitude() const noexcept { return latitude_; }
    double longitude() const noexcept { return longitude_; }

    friend bool operator==(const GeoPoint&, const GeoPoint&) = default;

private:
    double latitude_ = 0.0;
    double longitude_ = 0.0;
};

/// Great-circle distance in kilometers on a sphere of radius kEarthRadiusKm.
double haversine_distance(const GeoPoint& a, const GeoPoint& b) noexcept;

struct Medicine {
    MedicineId id;
    std::string name;
    std::string dosage;
    std::string package;

    friend bool operator==(const Medicine&, const Medicine&) = default;
};

struct PrescriptionLine {
    MedicineId medicine_id;
    int quantity = 1;

    friend bool operator==(const PrescriptionLine&, const PrescriptionLine&) = default;
};

enum class PrescriptionStatus { draft, submitted, cancelled };

struct Prescription {
    PrescriptionId id;
    UserId patient_id;
    std::vector<PrescriptionLine> lines;
    PrescriptionStatus status = PrescriptionStatus::draft;

    std::set<MedicineId> medicine_ids() const;

    friend bool operator==(const Prescription&, const Prescription&) = default;
};

/// Checks line quantities, duplicate medicines and the non-empty rule for
/// submitted prescriptions.
void validate(const Prescription& p);

struct Pharmacy {
    PharmacyId id;
    std::string name;
    GeoPoint location;
    std::string contact;
    bool registered = true;

    friend bool operator==(const Pharmacy&, const Pharmacy&) = default;
};

void validate(const Pharmacy& p);

enum class Verdict { full, partial, none };

std::string_view to_string(Verdict v) noexcept;
Verdict parse_verdict(std::string_view s);
std::string_view to_string(PrescriptionStatus s) noexcept;
PrescriptionStatus parse_prescription_status(std::string_view s);

/// full when `available` equals `requested`, none when empty, partial
/// otherwise. Throws ValidationError if `available` names a medicine that was
/// not requested.
Verdict classify_response(const std::set<MedicineId>& requested, const std::set<MedicineId>& available);

struct PharmacyResponse {
    RequestId request_id;
    PharmacyId pharmacy_id;
    Verdict verdict = Verdict::none;
    std::set<MedicineId> available_medicine_ids;
    Timestamp responded_at{};

    friend bool operator==(const PharmacyResponse&, const PharmacyResponse&) = default;
};

}  // namespace medloc
