#pragma once

#include <cstdio>
#include <string>

namespace cellcap {

// Round-trippable decimal rendering (17 significant digits).
inline std::string format_full(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace cellcap
