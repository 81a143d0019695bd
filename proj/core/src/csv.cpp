#include "symmcomp/csv.hpp"

#include <cmath>
#include <cstdio>

namespace symmcomp {

std::string fmt17(double x) {
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    if (std::isnan(x)) return "nan";
    if (x == 0.0) x = 0.0;  // fold -0
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

}  // namespace symmcomp
