#pragma once

#include <cstdio>
#include <string>

namespace dbell {

/// `%.Ng` formatting; 12 digits for CSV exports, 17 for lossless round trips.
inline std::string format_sig(double value, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, value);
  return buf;
}

/// Negative zero prints as 0 so that sign-symmetric results diff cleanly.
inline std::string csv_number(double value) { return format_sig(value == 0.0 ? 0.0 : value, 12); }

}  // namespace dbell
