#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "medloc/domain.hpp"

namespace medloc {

// Read-only medicine catalog with case-insensitive prefix search. Entries are
// kept sorted by (folded name, name, id); a prefix query is one lower_bound
// plus a forward walk.
class Catalog {
public:
    Catalog() = default;
    /// Throws ValidationError on an empty name and ConflictError on a repeated id.
    explicit Catalog(std::vector<Medicine> medicines);

    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }
    const Medicine* find(const MedicineId& id) const;

    /// Medicines whose name starts with `prefix` (case-insensitive), in
    /// catalog order, at most `limit` of them. Throws ValidationError when
    /// limit is 0.
    std::vector<Medicine> autocomplete(std::string_view prefix, std::size_t limit) const;

    /// All medicines in catalog order.
    std::vector<Medicine> medicines() const;

private:
    struct Entry {
        std::string folded;
        Medicine medicine;
    };
    std::vector<Entry> entries_;
};

/// Medicine file: `id|name|dosage|package` per line, `#` comments and blank
/// lines ignored. Errors carry the line number.
Catalog load_catalog(std::istream& in, const std::string& source_name = "<stream>");
Catalog load_catalog(const std::filesystem::path& path);

}  // namespace medloc
