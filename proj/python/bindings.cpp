// Python bindings for the core library. Request state stays a C++ object;
// dict views go through the same JSON mapping the HTTP API uses.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "medloc/catalog.hpp"
#include "medloc/domain.hpp"
#include "medloc/error.hpp"
#include "medloc/geo_registry.hpp"
#include "medloc/request_engine.hpp"
#include "medloc/scenario.hpp"
#include "medloc/serialization.hpp"
#include "medloc/stats.hpp"
#include "medloc/stats_fixture.hpp"
#include "medloc/time.hpp"

namespace py = pybind11;
using namespace medloc;

namespace {

py::object to_python(const nlohmann::json& j) {
    return py::module_::import("json").attr("loads")(j.dump());
}

nlohmann::json from_python(const py::object& o) {
    return nlohmann::json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

Timestamp at(double seconds) {
    return VirtualClock::default_epoch() + Duration(static_cast<std::int64_t>(std::llround(seconds * 1000.0)));
}

py::list ranked(const std::vector<RankedPharmacy>& v) {
    py::list out;
    for (const auto& r : v) out.append(py::make_tuple(r.pharmacy.id, r.distance_km));
    return out;
}

Pharmacy pharmacy(const std::string& id, double lat, double lon, const std::string& name, const std::string& contact,
                  bool registered) {
    Pharmacy p{id, name.empty() ? id : name, GeoPoint(lat, lon), contact, registered};
    validate(p);
    return p;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Pharmacy availability broker: geometry, catalog, request engine and survey statistics.";

    auto base = py::register_exception<Error>(m, "MedlocError");
    py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
    py::register_exception<ConflictError>(m, "ConflictError", base.ptr());
    py::register_exception<NotFoundError>(m, "NotFoundError", base.ptr());
    py::register_exception<InvalidTransition>(m, "InvalidTransition", base.ptr());
    py::register_exception<InvalidTrace>(m, "InvalidTrace", base.ptr());
    py::register_exception<DomainError>(m, "DomainError", base.ptr());
    py::register_exception<ParseError>(m, "ParseError", base.ptr());

    m.def(
        "haversine_km",
        [](double lat1, double lon1, double lat2, double lon2) {
            return haversine_distance(GeoPoint(lat1, lon1), GeoPoint(lat2, lon2));
        },
        py::arg("lat1"), py::arg("lon1"), py::arg("lat2"), py::arg("lon2"));

    m.def(
        "classify",
        [](const std::set<MedicineId>& requested, const std::set<MedicineId>& available) {
            return std::string(to_string(classify_response(requested, available)));
        },
        py::arg("requested"), py::arg("available"));

    py::class_<GeoRegistry>(m, "Registry")
        .def(py::init<>())
        .def(
            "register",
            [](GeoRegistry& r, const std::string& id, double lat, double lon, const std::string& name,
               const std::string& contact, bool registered) {
                r.register_pharmacy(pharmacy(id, lat, lon, name, contact, registered));
            },
            py::arg("id"), py::arg("lat"), py::arg("lon"), py::arg("name") = "", py::arg("contact") = "",
            py::arg("registered") = true)
        .def("__len__", [](const GeoRegistry& r) { return r.snapshot()->size(); })
        .def(
            "within_radius",
            [](const GeoRegistry& r, double lat, double lon, double radius_km) {
                return ranked(r.within_radius(GeoPoint(lat, lon), radius_km));
            },
            py::arg("lat"), py::arg("lon"), py::arg("radius_km"), "[(id, distance_km)] ordered by distance, then id")
        .def(
            "nearest",
            [](const GeoRegistry& r, double lat, double lon, std::size_t k) {
                return ranked(r.nearest(GeoPoint(lat, lon), k));
            },
            py::arg("lat"), py::arg("lon"), py::arg("k"));

    py::class_<Catalog>(m, "Catalog")
        .def(py::init([](const std::vector<py::dict>& records) {
                 std::vector<Medicine> meds;
                 for (const auto& r : records) meds.push_back(from_python(r).get<Medicine>());
                 return Catalog(std::move(meds));
             }),
             py::arg("medicines"))
        .def_static(
            "load", [](const std::string& path) { return load_catalog(std::filesystem::path(path)); }, py::arg("path"))
        .def("__len__", &Catalog::size)
        .def(
            "autocomplete",
            [](const Catalog& c, const std::string& prefix, std::size_t limit) {
                return to_python(nlohmann::json(c.autocomplete(prefix, limit)));
            },
            py::arg("prefix"), py::arg("limit") = 10);

    py::class_<AvailabilityRequest>(m, "Request")
        .def_property_readonly("id", [](const AvailabilityRequest& r) { return r.id; })
        .def_property_readonly("state", [](const AvailabilityRequest& r) { return std::string(to_string(r.state)); })
        .def_property_readonly("round", [](const AvailabilityRequest& r) { return r.round; })
        .def_property_readonly("radius_km", [](const AvailabilityRequest& r) { return r.current_radius_km; })
        .def_property_readonly("terminal", &AvailabilityRequest::terminal)
        .def_property_readonly("enquired",
                               [](const AvailabilityRequest& r) {
                                   std::vector<PharmacyId> ids;
                                   for (const auto& [id, e] : r.enquired) ids.push_back(id);
                                   return ids;
                               })
        .def_property_readonly("deadline_seconds",
                               [](const AvailabilityRequest& r) {
                                   return std::chrono::duration<double>(r.round_deadline - VirtualClock::default_epoch()).count();
                               })
        .def("best",
             [](const AvailabilityRequest& r) -> py::object {
                 const auto b = best_pharmacy(r);
                 if (!b) return py::none();
                 return py::make_tuple(b->pharmacy_id, std::string(to_string(b->verdict)), b->distance_km);
             })
        .def("to_dict", [](const AvailabilityRequest& r) { return to_python(nlohmann::json(r)); })
        .def("__eq__", [](const AvailabilityRequest& a, const AvailabilityRequest& b) { return a == b; });

    // The engine works on an immutable registry snapshot; times are seconds
    // after the virtual epoch.
    py::class_<Transition>(m, "Transition")
        .def_readonly("request", &Transition::request)
        .def_readonly("dispatched", &Transition::dispatched)
        .def_property_readonly("changed", &Transition::changed)
        .def_property_readonly("events", [](const Transition& t) { return to_python(nlohmann::json(t.events)); });

    m.def(
        "open_request",
        [](const std::string& id, const std::vector<MedicineId>& medicines, double lat, double lon, const GeoRegistry& reg,
           double now, const py::object& config) {
            Prescription p{"rx-" + id, "patient", {}, PrescriptionStatus::submitted};
            for (const auto& mid : medicines) p.lines.push_back({mid, 1});
            const auto cfg = config.is_none() ? RequestConfig{} : merge_config(RequestConfig{}, from_python(config));
            return open_request(id, p, GeoPoint(lat, lon), cfg, *reg.snapshot(), at(now));
        },
        py::arg("id"), py::arg("medicines"), py::arg("lat"), py::arg("lon"), py::arg("registry"), py::arg("now") = 0.0,
        py::arg("config") = py::none());
    m.def(
        "record_response",
        [](const AvailabilityRequest& r, const PharmacyId& pharmacy, const std::set<MedicineId>& available,
           const GeoRegistry& reg, double now) {
            PharmacyResponse resp{r.id, pharmacy, classify_response(r.medicine_ids, available), available, at(now)};
            return record_response(r, resp, *reg.snapshot(), at(now));
        },
        py::arg("request"), py::arg("pharmacy"), py::arg("available"), py::arg("registry"), py::arg("now"));
    m.def(
        "tick", [](const AvailabilityRequest& r, const GeoRegistry& reg, double now) { return tick(r, *reg.snapshot(), at(now)); },
        py::arg("request"), py::arg("registry"), py::arg("now"));
    m.def(
        "cancel", [](const AvailabilityRequest& r, double now) { return cancel(r, at(now)); }, py::arg("request"),
        py::arg("now"));
    m.def(
        "replay",
        [](const py::object& events) {
            return fold_events(from_python(events).get<std::vector<RequestEvent>>());
        },
        py::arg("events"), "Rebuilds a request from its event list (as returned by Transition.events).");

    m.def(
        "chi_square",
        [](std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t d) {
            stats::ContingencyTable2x2 t;
            t.a = a, t.b = b, t.c = c, t.d = d;
            const auto r = stats::pearson_chi_square(t);
            return py::make_tuple(r.statistic, r.p_value);
        },
        py::arg("a"), py::arg("b"), py::arg("c"), py::arg("d"), "Pearson X2 (no continuity correction) and p, df = 1.");
    m.def("chi_square_sf", &stats::chi_square_sf, py::arg("x"), py::arg("df"));
    m.def(
        "tabulate",
        [](const std::vector<std::pair<std::string, std::uint64_t>>& counts, std::optional<std::uint64_t> base) {
            std::vector<stats::LabeledCount> in;
            for (const auto& [label, n] : counts) in.push_back({label, n});
            py::list out;
            for (const auto& e : stats::tabulate(in, base).entries) out.append(py::make_tuple(e.label, e.count, e.percent_text()));
            return out;
        },
        py::arg("counts"), py::arg("base") = py::none());
    m.def(
        "describe",
        [](const std::vector<double>& values) {
            const auto s = stats::describe(values);
            py::dict d;
            d["mean"] = s.mean;
            d["sd"] = s.sd;
            d["min"] = s.min;
            d["max"] = s.max;
            d["n"] = s.n;
            return d;
        },
        py::arg("values"));
    m.def(
        "stats_report",
        [](const std::string& path, bool show_reported) {
            stats::ReportOptions o;
            o.show_reported = show_reported;
            return stats::format_report(stats::load_stats_fixture(path), o);
        },
        py::arg("path"), py::arg("show_reported") = true);

    m.def(
        "run_scenario",
        [](const std::string& path, bool check_replay) {
            RunOptions o;
            o.check_replay = check_replay;
            ScenarioResult r;
            {
                py::gil_scoped_release release;
                r = run_embedded(load_scenario(path), o);
            }
            py::dict d;
            d["name"] = r.name;
            d["passed"] = r.passed();
            d["assertions"] = r.assertion_count;
            d["failed"] = r.failed_assertions;
            d["transcript"] = to_python(r.transcript());
            return d;
        },
        py::arg("path"), py::arg("check_replay") = true,
        "Runs a scenario file against an in-process server on a virtual clock.");
}
