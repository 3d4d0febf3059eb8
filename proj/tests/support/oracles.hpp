#pragma once
// Independent reference implementations the tests compare against. None of
// them calls the code under test except where noted.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <tuple>
#include <vector>

#include "medloc/catalog.hpp"
#include "medloc/domain.hpp"
#include "medloc/geo_registry.hpp"
#include "medloc/text.hpp"

namespace oracle {

/// Spherical law of cosines; numerically different from haversine but the
/// same great circle.
inline double law_of_cosines_km(double lat1, double lon1, double lat2, double lon2) {
    constexpr double rad = std::numbers::pi / 180.0;
    const double p1 = lat1 * rad, p2 = lat2 * rad, dl = (lon2 - lon1) * rad;
    double c = std::sin(p1) * std::sin(p2) + std::cos(p1) * std::cos(p2) * std::cos(dl);
    c = std::clamp(c, -1.0, 1.0);
    return 6371.0 * std::acos(c);
}

/// Filter-and-sort over every pharmacy. Uses the library's haversine so the
/// comparison is exact; the distance itself is checked separately.
inline std::vector<medloc::RankedPharmacy> brute_within(const std::vector<medloc::Pharmacy>& all,
                                                        const medloc::GeoPoint& o, double radius) {
    std::vector<medloc::RankedPharmacy> out;
    for (const auto& p : all) {
        if (!p.registered) continue;
        const double d = medloc::haversine_distance(o, p.location);
        if (d <= radius) out.push_back({p, d});
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        return std::tie(a.distance_km, a.pharmacy.id) < std::tie(b.distance_km, b.pharmacy.id);
    });
    return out;
}

inline std::vector<medloc::RankedPharmacy> brute_nearest(const std::vector<medloc::Pharmacy>& all,
                                                         const medloc::GeoPoint& o, std::size_t k) {
    auto v = brute_within(all, o, 1e9);
    if (v.size() > k) v.resize(k);
    return v;
}

/// Lowercases ASCII only; enough for oracle catalogs built from ASCII names.
inline std::string ascii_lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

inline std::vector<medloc::Medicine> brute_autocomplete(std::vector<medloc::Medicine> all, const std::string& prefix,
                                                        std::size_t limit) {
    std::vector<medloc::Medicine> out;
    const auto p = ascii_lower(prefix);
    for (const auto& m : all)
        if (ascii_lower(m.name).rfind(p, 0) == 0) out.push_back(m);
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        const auto fa = ascii_lower(a.name), fb = ascii_lower(b.name);
        return std::tie(fa, a.name, a.id) < std::tie(fb, b.name, b.id);
    });
    if (out.size() > limit) out.resize(limit);
    return out;
}

/// Upper tail of the chi-square distribution by composite Simpson
/// integration of the density. Substituting t = u^2 removes the df = 1
/// singularity at zero: the integrand becomes 2 u^(k-1) e^(-u^2/2) / C.
inline double chi_square_sf_by_integration(double x, int df, int intervals = 200000) {
    const double k = df;
    const double norm = std::pow(2.0, k / 2.0) * std::tgamma(k / 2.0);
    auto g = [&](double u) { return 2.0 * std::pow(u, k - 1.0) * std::exp(-u * u / 2.0) / norm; };
    const double lo = std::sqrt(x), hi = lo + 40.0;
    const double h = (hi - lo) / intervals;
    double sum = g(lo) + g(hi);
    for (int i = 1; i < intervals; ++i) sum += g(lo + i * h) * (i % 2 ? 4.0 : 2.0);
    return sum * h / 3.0;
}

/// Pearson statistic from observed and expected counts, written out cell by
/// cell.
inline double chi_square_expected_form(double a, double b, double c, double d) {
    const double n = a + b + c + d;
    const double r1 = a + b, r2 = c + d, c1 = a + c, c2 = b + d;
    const double obs[4] = {a, b, c, d};
    const double exp[4] = {r1 * c1 / n, r1 * c2 / n, r2 * c1 / n, r2 * c2 / n};
    double s = 0.0;
    for (int i = 0; i < 4; ++i) s += (obs[i] - exp[i]) * (obs[i] - exp[i]) / exp[i];
    return s;
}

struct TwoPass {
    double mean, sd, min, max;
};

inline TwoPass two_pass(const std::vector<double>& v) {
    double sum = 0.0;
    for (double x : v) sum += x;
    const double mean = sum / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / static_cast<double>(v.size() - 1)), *std::min_element(v.begin(), v.end()),
            *std::max_element(v.begin(), v.end())};
}

/// Half-up percentage to one decimal in exact integer arithmetic.
inline std::string percent_half_up(std::uint64_t n, std::uint64_t base) {
    const std::uint64_t tenths = (2000 * n + base) / (2 * base);
    return std::to_string(tenths / 10) + "." + std::to_string(tenths % 10);
}

}  // namespace oracle

namespace fixture {

inline constexpr double kOriginLat = 41.1496;
inline constexpr double kOriginLon = -8.6109;

/// A point `km` kilometers due north (negative: south) of the origin. Along a
/// meridian the great-circle distance is exactly R * dlat.
inline medloc::GeoPoint north_of_origin(double km) {
    return medloc::GeoPoint(kOriginLat + km * 180.0 / (std::numbers::pi * 6371.0), kOriginLon);
}

inline medloc::GeoPoint origin() { return medloc::GeoPoint(kOriginLat, kOriginLon); }

inline medloc::Pharmacy pharmacy_at(const std::string& id, double km, bool registered = true) {
    return medloc::Pharmacy{id, "Pharmacy " + id, north_of_origin(km), "+351 000 " + id, registered};
}

}  // namespace fixture
