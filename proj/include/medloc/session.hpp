#pragma once

#include <string>
#include <string_view>

namespace medloc {

enum class Role { patient, pharmacist };

std::string_view to_string(Role r) noexcept;
Role parse_role(std::string_view s);

// Static bearer-token table entry. For pharmacists the principal is the
// pharmacy id.
struct ApiSession {
    std::string token;
    std::string principal;
    Role role = Role::patient;

    friend bool operator==(const ApiSession&, const ApiSession&) = default;
};

}  // namespace medloc
