#pragma once

#include <string>
#include <vector>

namespace hmmrates {

// Shortest round-trip decimal for a double ("%.17g" trimmed).
std::string format_real(double value);
double parse_real(const std::string& field);

std::vector<std::string> split_csv(const std::string& line);
void strip_line_end(std::string& line);

}  // namespace hmmrates
