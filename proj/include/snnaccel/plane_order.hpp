// plane_order.hpp - bit-plane ordering shared by decompose and postproc.
//
// Equivalent time steps are emitted MSB-first within each original step
// (a 4-bit spike becomes planes weighted 8,4,2,1). The merge formulas, in
// contrast, take P0 as the least significant lane inside one S-wide round
// (Q0 = P0 + (P1 << 1)), while across rounds the earlier round is the more
// significant one (R1 = R0 + (R0' << 4)). merge_lane() converts between the
// two: it reverses lanes within each group of min(B, S) lanes.
#pragma once

#include <algorithm>
#include <cstddef>

namespace snnaccel {

inline constexpr bool kPlanesMsbFirst = true;
inline constexpr int kMergeLanes = 4;

// Shift amount of plane p (0-based, in emission order) of a B-bit value.
constexpr int plane_shift(int bit_width, int plane) noexcept
{
    return kPlanesMsbFirst ? bit_width - 1 - plane : plane;
}

// Engine lane feeding merge input P_k for a given source bit width.
constexpr std::size_t merge_lane(int bit_width, std::size_t k) noexcept
{
    if (bit_width <= 1) {
        return k;
    }
    const std::size_t group = static_cast<std::size_t>(std::min(bit_width, kMergeLanes));
    const std::size_t base = (k / group) * group;
    return base + (group - 1 - (k - base));
}

} // namespace snnaccel
