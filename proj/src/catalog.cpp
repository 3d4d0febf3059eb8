#include "medloc/catalog.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "medloc/error.hpp"
#include "medloc/text.hpp"

namespace medloc {

Catalog::Catalog(std::vector<Medicine> medicines) {
    std::set<MedicineId> ids;
    entries_.reserve(medicines.size());
    for (auto& m : medicines) {
        if (m.id.empty()) throw ValidationError("medicine without id");
        if (m.name.empty()) throw ValidationError("medicine " + m.id + " has an empty name");
        if (!ids.insert(m.id).second) throw ConflictError("duplicate medicine id " + m.id);
        entries_.push_back({text::casefold(m.name), std::move(m)});
    }
    std::sort(entries_.begin(), entries_.end(), [](const Entry& x, const Entry& y) {
        if (x.folded != y.folded) return x.folded < y.folded;
        if (x.medicine.name != y.medicine.name) return x.medicine.name < y.medicine.name;
        return x.medicine.id < y.medicine.id;
    });
}

const Medicine* Catalog::find(const MedicineId& id) const {
    for (const auto& e : entries_)
        if (e.medicine.id == id) return &e.medicine;
    return nullptr;
}

std::vector<Medicine> Catalog::autocomplete(std::string_view prefix, std::size_t limit) const {
    if (limit == 0) throw ValidationError("limit must be at least 1");
    const std::string folded = text::casefold(prefix);
    auto it = std::lower_bound(entries_.begin(), entries_.end(), folded,
                               [](const Entry& e, const std::string& key) { return e.folded < key; });
    std::vector<Medicine> out;
    for (; it != entries_.end() && out.size() < limit; ++it) {
        if (!it->folded.starts_with(folded)) break;
        out.push_back(it->medicine);
    }
    return out;
}

std::vector<Medicine> Catalog::medicines() const {
    std::vector<Medicine> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back(e.medicine);
    return out;
}

Catalog load_catalog(std::istream& in, const std::string& source_name) {
    std::vector<Medicine> medicines;
    std::set<MedicineId> ids;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto body = text::trim(line);
        if (body.empty() || body.front() == '#') continue;
        auto fields = text::split(body, '|');
        if (fields.size() != 4)
            throw ParseError(source_name, lineno,
                             "expected 4 fields id|name|dosage|package, got " + std::to_string(fields.size()));
        for (auto& f : fields) f = std::string(text::trim(f));
        Medicine m{fields[0], fields[1], fields[2], fields[3]};
        if (m.id.empty()) throw ParseError(source_name, lineno, "empty medicine id");
        if (m.name.empty()) throw ParseError(source_name, lineno, "empty medicine name");
        if (!ids.insert(m.id).second) throw ParseError(source_name, lineno, "duplicate medicine id " + m.id);
        medicines.push_back(std::move(m));
    }
    return Catalog(std::move(medicines));
}

Catalog load_catalog(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw NotFoundError("cannot open medicine file " + path.string());
    return load_catalog(in, path.string());
}

}  // namespace medloc
