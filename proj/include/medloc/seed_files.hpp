#pragma once

#include <filesystem>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "medloc/domain.hpp"
#include "medloc/session.hpp"

namespace medloc {

// Pipe-delimited text files, one record per line; blank lines and lines
// starting with '#' are skipped. Field order:
//   pharmacies: id|name|latitude|longitude|contact|registered
//   tokens:     token|role|principal
// Malformed records raise ParseError naming the line.

std::vector<Pharmacy> load_pharmacy_seed(std::istream& in, const std::string& source_name = "<stream>");
std::vector<Pharmacy> load_pharmacy_seed(const std::filesystem::path& path);
void write_pharmacy_seed(std::ostream& out, const std::vector<Pharmacy>& pharmacies);

std::vector<ApiSession> load_token_table(std::istream& in, const std::string& source_name = "<stream>");
std::vector<ApiSession> load_token_table(const std::filesystem::path& path);

}  // namespace medloc
