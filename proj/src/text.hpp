#pragma once

#include <cstdio>
#include <string>

namespace distpd {

// Locale-independent shortest-ish decimal used in every CSV we write.
inline std::string num(double v, int precision = 12) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", precision, v);
  return buf;
}

}  // namespace distpd
