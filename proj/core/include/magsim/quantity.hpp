#pragma once

#include <string>
#include <string_view>

namespace magsim {

// Parses "283 uT", "7um", "38.7 kHz", "77.3 nT/um", "inf", or a bare number
// (already in SI units of the expected dimension). Supported bases: s, T, m,
// Hz, K with prefixes n, u (or µ), m, k, M, G; compound units use one '/'.
// expected_dimension examples: "s", "T", "m", "Hz", "T/m", "" (dimensionless).
// Throws ConfigError on malformed input or a dimension mismatch.
double parse_quantity(std::string_view text, std::string_view expected_dimension);

// Formats an SI value with the dimension appended ("2.83e-04 T"); used when
// echoing configuration values.
std::string format_quantity(double value, std::string_view dimension);

}  // namespace magsim
