#include "judgecal/control_score.hpp"

#include <algorithm>
#include <stdexcept>
#include <vector>

namespace judgecal {

Points median_control_score(std::span<const Points> marks) {
    if (marks.size() < 2) {
        throw std::invalid_argument("median_control_score: panel needs at least 2 marks");
    }
    std::vector<Points> work(marks.begin(), marks.end());
    const std::size_t half = work.size() / 2;
    auto upper = work.begin() + static_cast<std::ptrdiff_t>(half);
    std::nth_element(work.begin(), upper, work.end());
    if (work.size() % 2 == 1) return *upper;
    const Points lower = *std::max_element(work.begin(), upper);
    return midpoint(lower, *upper);
}

}  // namespace judgecal
