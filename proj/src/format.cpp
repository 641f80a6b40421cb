#include "sslab/format.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace sslab {

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  char buf[40];
  for (int precision = 15; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof(buf), "%.*g", precision, value);
    if (std::strtod(buf, nullptr) == value) break;
  }
  return buf;
}

}  // namespace sslab
