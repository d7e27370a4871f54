#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace judgecal {

/// Exact score value in fixed-point ticks of 1e-9 score units.
///
/// Parsed marks carry at most 8 fractional digits, so the midpoint of any two
/// marks is still exact. Arithmetic stays in integers until a value is handed
/// to the regression code through `to_double()`.
class Points {
public:
    static constexpr std::int64_t kTicksPerUnit = 1'000'000'000;
    static constexpr int kMaxInputDecimals = 8;

    constexpr Points() = default;

    static constexpr Points from_ticks(std::int64_t ticks) {
        Points p;
        p.ticks_ = ticks;
        return p;
    }
    static constexpr Points from_int(std::int64_t units) { return from_ticks(units * kTicksPerUnit); }

    /// Parses a plain decimal literal ("8.5", "-0.25", "10"). Returns nullopt on
    /// malformed input, exponents, or more than kMaxInputDecimals fractional digits.
    static std::optional<Points> parse(std::string_view text);

    /// Nearest representable value; only for generated data and tests.
    static Points from_double(double value);

    constexpr std::int64_t ticks() const { return ticks_; }
    double to_double() const { return static_cast<double>(ticks_) / static_cast<double>(kTicksPerUnit); }

    /// Shortest decimal that parses back to the same value ("8.5", "10", "-0.125").
    std::string to_string() const;

    constexpr Points operator-() const { return from_ticks(-ticks_); }
    constexpr Points operator+(Points o) const { return from_ticks(ticks_ + o.ticks_); }
    constexpr Points operator-(Points o) const { return from_ticks(ticks_ - o.ticks_); }
    constexpr Points& operator+=(Points o) {
        ticks_ += o.ticks_;
        return *this;
    }
    constexpr Points& operator-=(Points o) {
        ticks_ -= o.ticks_;
        return *this;
    }

    constexpr auto operator<=>(const Points&) const = default;

private:
    std::int64_t ticks_ = 0;
};

/// Exact midpoint. Both operands must come from parsed marks (see Points).
Points midpoint(Points a, Points b);

/// Exact product with a decimal factor; nullopt when the result is not representable.
std::optional<Points> scaled(Points value, Points factor);

}  // namespace judgecal
