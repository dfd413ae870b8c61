#pragma once

#include <string>

#include "relaymec/recovery.hpp"

namespace relaymec {

// JSON image of a SolveReport, field names matching the struct members.
// Doubles print shortest-round-trip, so parsing the text back reproduces
// the report exactly; non-finite values (the degenerate tau_r_lb) map to
// null and back to infinity.
std::string report_to_json(const SolveReport& report);

// Inverse of report_to_json. Throws ConfigError on malformed input or a
// missing field.
SolveReport report_from_json(const std::string& text);

}  // namespace relaymec
