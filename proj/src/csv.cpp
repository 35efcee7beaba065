#include "rpsim/csv.hpp"

#include <cstdio>

namespace rpsim {

std::string format_number(double value) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

}  // namespace rpsim
