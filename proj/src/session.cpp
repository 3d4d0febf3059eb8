#include "medloc/session.hpp"

#include <string>

#include "medloc/error.hpp"

namespace medloc {

std::string_view to_string(Role r) noexcept {
    return r == Role::patient ? "patient" : "pharmacist";
}

Role parse_role(std::string_view s) {
    if (s == "patient") return Role::patient;
    if (s == "pharmacist") return Role::pharmacist;
    throw ValidationError("unknown role '" + std::string(s) + "'");
}

}  // namespace medloc
