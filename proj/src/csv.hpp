#pragma once
// Small CSV helpers shared by the writers and readers.

#include <string>
#include <vector>

namespace uavnet::csv {

/// 9 significant digits, the fixed output format of every CSV.
std::string num(double v);
std::vector<std::string> split(const std::string& line);

}  // namespace uavnet::csv
