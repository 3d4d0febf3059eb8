#include "medloc/seed_files.hpp"

#include <fstream>
#include <set>

#include "medloc/error.hpp"
#include "medloc/text.hpp"

namespace medloc {
namespace {

std::vector<std::string> record(std::string_view line, std::size_t expected, const std::string& source,
                                std::size_t lineno, const char* layout) {
    auto fields = text::split(line, '|');
    if (fields.size() != expected)
        throw ParseError(source, lineno,
                         "expected " + std::to_string(expected) + " fields " + layout + ", got " +
                             std::to_string(fields.size()));
    for (auto& f : fields) f = std::string(text::trim(f));
    return fields;
}

double number(const std::string& s, const std::string& source, std::size_t lineno, const char* what) {
    std::size_t idx = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &idx);
    } catch (const std::exception&) {
        throw ParseError(source, lineno, std::string("bad ") + what + " '" + s + "'");
    }
    if (idx != s.size()) throw ParseError(source, lineno, std::string("bad ") + what + " '" + s + "'");
    return v;
}

bool flag(const std::string& s, const std::string& source, std::size_t lineno) {
    const auto f = text::casefold(s);
    if (f == "true" || f == "yes" || f == "1") return true;
    if (f == "false" || f == "no" || f == "0") return false;
    throw ParseError(source, lineno, "bad registered flag '" + s + "'");
}

}  // namespace

std::vector<Pharmacy> load_pharmacy_seed(std::istream& in, const std::string& source_name) {
    std::vector<Pharmacy> out;
    std::set<PharmacyId> ids;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto body = text::trim(line);
        if (body.empty() || body.front() == '#') continue;
        const auto f = record(body, 6, source_name, lineno, "id|name|latitude|longitude|contact|registered");
        Pharmacy p;
        p.id = f[0];
        p.name = f[1];
        try {
            p.location = GeoPoint(number(f[2], source_name, lineno, "latitude"),
                                  number(f[3], source_name, lineno, "longitude"));
            p.contact = f[4];
            p.registered = flag(f[5], source_name, lineno);
            validate(p);
        } catch (const ValidationError& e) {
            throw ParseError(source_name, lineno, "pharmacy " + p.id + ": " + e.what());
        }
        if (!ids.insert(p.id).second) throw ParseError(source_name, lineno, "duplicate pharmacy id " + p.id);
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<Pharmacy> load_pharmacy_seed(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw NotFoundError("cannot open pharmacy seed " + path.string());
    return load_pharmacy_seed(in, path.string());
}

void write_pharmacy_seed(std::ostream& out, const std::vector<Pharmacy>& pharmacies) {
    out << "# id|name|latitude|longitude|contact|registered\n";
    out.precision(17);
    for (const auto& p : pharmacies)
        out << p.id << '|' << p.name << '|' << p.location.latitude() << '|' << p.location.longitude() << '|'
            << p.contact << '|' << (p.registered ? "true" : "false") << '\n';
}

std::vector<ApiSession> load_token_table(std::istream& in, const std::string& source_name) {
    std::vector<ApiSession> out;
    std::set<std::string> tokens;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto body = text::trim(line);
        if (body.empty() || body.front() == '#') continue;
        const auto f = record(body, 3, source_name, lineno, "token|role|principal");
        ApiSession s;
        s.token = f[0];
        try {
            s.role = parse_role(f[1]);
        } catch (const ValidationError& e) {
            throw ParseError(source_name, lineno, e.what());
        }
        s.principal = f[2];
        if (s.token.empty() || s.principal.empty()) throw ParseError(source_name, lineno, "empty token or principal");
        if (!tokens.insert(s.token).second) throw ParseError(source_name, lineno, "duplicate token");
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<ApiSession> load_token_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw NotFoundError("cannot open token table " + path.string());
    return load_token_table(in, path.string());
}

}  // namespace medloc
