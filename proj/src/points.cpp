#include "judgecal/points.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace judgecal {

namespace {
__extension__ using Wide = __int128;
}  // namespace

std::optional<Points> Points::parse(std::string_view text) {
    if (text.empty()) return std::nullopt;
    bool negative = false;
    std::size_t i = 0;
    if (text[0] == '+' || text[0] == '-') {
        negative = text[0] == '-';
        ++i;
    }
    constexpr std::int64_t kMaxUnits = std::numeric_limits<std::int64_t>::max() / kTicksPerUnit - 1;
    std::int64_t units = 0;
    std::int64_t frac = 0;
    int frac_digits = 0;
    bool seen_digit = false;
    bool seen_point = false;
    for (; i < text.size(); ++i) {
        const char ch = text[i];
        if (ch == '.') {
            if (seen_point) return std::nullopt;
            seen_point = true;
            continue;
        }
        if (ch < '0' || ch > '9') return std::nullopt;
        seen_digit = true;
        const int digit = ch - '0';
        if (seen_point) {
            if (++frac_digits > kMaxInputDecimals) {
                // trailing zeros beyond the limit are harmless
                if (digit != 0) return std::nullopt;
                --frac_digits;
                continue;
            }
            frac = frac * 10 + digit;
        } else {
            units = units * 10 + digit;
            if (units > kMaxUnits) return std::nullopt;
        }
    }
    if (!seen_digit) return std::nullopt;
    for (int d = frac_digits; d < 9; ++d) frac *= 10;
    const std::int64_t ticks = units * kTicksPerUnit + frac;
    return from_ticks(negative ? -ticks : ticks);
}

Points Points::from_double(double value) {
    const double ticks = std::round(value * static_cast<double>(kTicksPerUnit));
    if (!std::isfinite(ticks) || std::abs(ticks) > 9.0e18) {
        throw std::out_of_range("Points::from_double: value out of range");
    }
    return from_ticks(static_cast<std::int64_t>(ticks));
}

std::string Points::to_string() const {
    const bool negative = ticks_ < 0;
    // magnitude fits: |ticks| <= 9.2e18 and negation of min() never occurs for parsed input
    const std::uint64_t mag = negative ? static_cast<std::uint64_t>(-(ticks_ + 1)) + 1u
                                       : static_cast<std::uint64_t>(ticks_);
    const std::uint64_t units = mag / kTicksPerUnit;
    std::uint64_t frac = mag % kTicksPerUnit;
    std::string out = negative ? "-" : "";
    out += std::to_string(units);
    if (frac != 0) {
        std::string digits(9, '0');
        for (int k = 8; k >= 0; --k) {
            digits[static_cast<std::size_t>(k)] = static_cast<char>('0' + frac % 10);
            frac /= 10;
        }
        while (!digits.empty() && digits.back() == '0') digits.pop_back();
        out += '.';
        out += digits;
    }
    return out;
}

Points midpoint(Points a, Points b) {
    const std::int64_t sum = a.ticks() + b.ticks();
    if (sum % 2 != 0) {
        throw std::invalid_argument("midpoint: operands exceed input precision");
    }
    return Points::from_ticks(sum / 2);
}

std::optional<Points> scaled(Points value, Points factor) {
    const Wide prod = static_cast<Wide>(value.ticks()) * factor.ticks();
    if (prod % Points::kTicksPerUnit != 0) return std::nullopt;
    const Wide ticks = prod / Points::kTicksPerUnit;
    if (ticks > std::numeric_limits<std::int64_t>::max() || ticks < std::numeric_limits<std::int64_t>::min()) {
        return std::nullopt;
    }
    return Points::from_ticks(static_cast<std::int64_t>(ticks));
}

}  // namespace judgecal
