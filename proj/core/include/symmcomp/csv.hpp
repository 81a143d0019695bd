#pragma once

#include <string>

namespace symmcomp {

// Shortest-roundtrip-safe formatting with 17 significant digits; used by every
// CSV writer so outputs are byte-deterministic.
std::string fmt17(double x);

}  // namespace symmcomp
