#pragma once

#include <string>

namespace rpsim {

/// Shortest round-trippable text for a double ("%.17g").
std::string format_number(double value);

}  // namespace rpsim
