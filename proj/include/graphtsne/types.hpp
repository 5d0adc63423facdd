#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace gtsne {

using NodeId = std::int32_t;

// Graph distance between nodes with no connecting path (or beyond a hop cap).
// Infinity is used as an exact flag: compare with is_unreachable(), never with a threshold.
inline constexpr double kUnreachable = std::numeric_limits<double>::infinity();

inline bool is_unreachable(double d) noexcept { return std::isinf(d); }

}  // namespace gtsne
