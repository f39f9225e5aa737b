// fixed_point.hpp - datapath widths and overflow-checked helpers.
#pragma once

#include <cstdint>
#include <string>

#include "errors.hpp"

namespace snnaccel {

// Engine accumulators are 12-bit SIMD lanes; merged psums and membrane
// potentials are 18-bit.
inline constexpr int kEnginePsumBits = 12;
inline constexpr int kMergedPsumBits = 18;

// True when |value| < 2^(bits-1).
constexpr bool fits_signed(std::int64_t value, int bits) noexcept
{
    const std::int64_t limit = std::int64_t{1} << (bits - 1);
    return value > -limit && value < limit;
}

inline std::int32_t check_signed(std::int64_t value, int bits, const char* where)
{
    if (!fits_signed(value, bits)) {
        throw OverflowError(std::string(where) + ": value " + std::to_string(value) +
                            " exceeds " + std::to_string(bits) + "-bit range");
    }
    return static_cast<std::int32_t>(value);
}

inline std::int32_t check_engine(std::int64_t value, const char* where = "engine psum")
{
    return check_signed(value, kEnginePsumBits, where);
}

inline std::int32_t check_merged(std::int64_t value, const char* where = "merged psum")
{
    return check_signed(value, kMergedPsumBits, where);
}

constexpr std::int64_t ceil_div(std::int64_t a, std::int64_t b) noexcept
{
    return (a + b - 1) / b;
}

constexpr std::int64_t round_up(std::int64_t a, std::int64_t b) noexcept
{
    return ceil_div(a, b) * b;
}

} // namespace snnaccel
