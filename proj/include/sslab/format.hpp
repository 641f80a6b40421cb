#pragma once

#include <string>

namespace sslab {

/// Shortest round-trip decimal form of a double ("%.17g" trimmed), so CSV and
/// checkpoint files reproduce values bit-exactly and byte-identically.
std::string format_double(double value);

}  // namespace sslab
