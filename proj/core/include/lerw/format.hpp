#pragma once

#include <cstdio>
#include <string>

namespace lerw {

// Round-trip decimal for doubles (17 significant digits reproduces the bit
// pattern exactly on read-back). All file formats use this, never ostream
// default precision, so emitted bytes are stable.
inline std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string g17(long double v) { return g17(double(v)); }

}  // namespace lerw
