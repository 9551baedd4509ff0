#include "costgate/common.hpp"

#include <cstdio>

namespace costgate {

std::string format_double(double v) {
    char buf[40];
    // %.17g always round-trips; prefer the shorter form when it does too
    std::snprintf(buf, sizeof(buf), "%.15g", v);
    double back = 0.0;
    std::sscanf(buf, "%lf", &back);
    if (back != v) std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace costgate
