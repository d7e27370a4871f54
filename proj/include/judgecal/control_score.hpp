#pragma once

#include <span>

#include "judgecal/points.hpp"

namespace judgecal {

/// Median of a panel's marks. Even panels take the midpoint of the two central
/// marks, which may fall between grid positions. Requires at least two marks.
Points median_control_score(std::span<const Points> marks);

}  // namespace judgecal
