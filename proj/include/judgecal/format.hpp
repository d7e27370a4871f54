#pragma once

#include <string>

namespace judgecal {

/// Shortest decimal that round-trips to the same double ("0.45", "1e-06", "nan").
std::string format_double(double value);

/// Quotes a CSV field when it contains a delimiter, quote or newline.
std::string csv_field(const std::string& value);

}  // namespace judgecal
