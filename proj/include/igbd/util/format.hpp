#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace igbd {

// Every float written to CSV uses 17 significant digits so that a value
// survives a parse/emit cycle unchanged.
std::string format_double(double v);

// Minimal CSV support: comma separated, no quoting (artifacts never contain
// commas inside fields).
std::vector<std::vector<std::string>> parse_csv(const std::string& text);
std::string join_csv(const std::vector<std::string>& fields);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

// JSON has no infinities; they are encoded as the strings "inf" / "-inf".
nlohmann::json json_number(double v);
double json_to_double(const nlohmann::json& j);

}  // namespace igbd
