#pragma once

#include <fmt/format.h>

#include <string>

namespace qnn {

/// Fixed CSV number format: 12 significant digits.
inline std::string num(double v) { return fmt::format("{:.12g}", v); }

}  // namespace qnn
