#pragma once

#include <iosfwd>
#include <string>

#include "htbnn/network.hpp"

namespace htbnn {

/// Shortest decimal text that reads back to the same double.
std::string format_double(double x);

/// Text format: header line, depth, widths, coefficient count, one value per line.
void write_network(std::ostream& os, const Network& net);
Network read_network(std::istream& is);

void save_network(const std::string& path, const Network& net);
Network load_network(const std::string& path);

}  // namespace htbnn
