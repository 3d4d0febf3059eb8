#pragma once

#include <json.hpp>

#include "medloc/domain.hpp"
#include "medloc/notifier.hpp"
#include "medloc/request_engine.hpp"
#include "medloc/session.hpp"

// JSON mapping for the domain types. Field names are lower_snake_case and
// timestamps are UTC strings; these are both the wire and the on-disk format.
namespace medloc {

using nlohmann::json;

void to_json(json& j, const GeoPoint& p);
void from_json(const json& j, GeoPoint& p);
void to_json(json& j, const Medicine& m);
void from_json(const json& j, Medicine& m);
void to_json(json& j, const PrescriptionLine& l);
void from_json(const json& j, PrescriptionLine& l);
void to_json(json& j, const Prescription& p);
void from_json(const json& j, Prescription& p);
void to_json(json& j, const Pharmacy& p);
void from_json(const json& j, Pharmacy& p);
void to_json(json& j, const PharmacyResponse& r);
void from_json(const json& j, PharmacyResponse& r);
void to_json(json& j, const RequestConfig& c);
void from_json(const json& j, RequestConfig& c);
void to_json(json& j, const Enquiry& e);
void from_json(const json& j, Enquiry& e);
void to_json(json& j, const AvailabilityRequest& r);
void to_json(json& j, const RequestEvent& e);
void from_json(const json& j, RequestEvent& e);
void to_json(json& j, const Notification& n);
void from_json(const json& j, Notification& n);
void to_json(json& j, const ApiSession& s);
void from_json(const json& j, ApiSession& s);

/// Applies the keys present in `overrides` on top of `base`.
RequestConfig merge_config(RequestConfig base, const json& overrides);

}  // namespace medloc
