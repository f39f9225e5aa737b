// decompose.hpp - bit-serial treatment of multi-bit spikes.
//
// A B-bit spike over T steps is equivalent to B*T binary steps whose psums
// are shifted and merged B at a time. Pixels of a direct-coded input are the
// B = 8 case with T = 1.
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "errors.hpp"
#include "fixed_point.hpp"
#include "model_ir.hpp"
#include "plane_order.hpp"
#include "tensor.hpp"

namespace snnaccel {

struct BitPlanePlan {
    int b = 1;   // source bit width
    int t = 1;   // source time steps
    int t_e = 1; // equivalent binary steps, b * t
    std::vector<int> plane_weights; // left-shift per equivalent step

    static BitPlanePlan make(int bits, int steps)
    {
        if (bits < 1 || bits > 8 || steps < 1) throw ValidationError("bit-plane plan: bad bit width or T");
        BitPlanePlan p{bits, steps, bits * steps, {}};
        p.plane_weights.reserve(static_cast<std::size_t>(p.t_e));
        for (int t = 0; t < steps; ++t)
            for (int plane = 0; plane < bits; ++plane) p.plane_weights.push_back(plane_shift(bits, plane));
        return p;
    }

    bool operator==(const BitPlanePlan&) const = default;
};

struct Decomposed {
    SpikeTensor planes; // binary, (t_e, c, h, w)
    BitPlanePlan plan;
};

// Plane p of step t lands at equivalent step t*B + p and holds bit
// plane_weights[t*B + p] of x[t].
inline Decomposed bitplane_decompose(const SpikeTensor& x)
{
    const int b = x.bit_width();
    auto plan = BitPlanePlan::make(b, static_cast<int>(x.t()));
    SpikeTensor planes({static_cast<std::size_t>(plan.t_e), x.c(), x.h(), x.w()}, 1);
    for (std::size_t t = 0; t < x.t(); ++t)
        for (int p = 0; p < b; ++p) {
            const std::size_t te = t * static_cast<std::size_t>(b) + static_cast<std::size_t>(p);
            const int shift = plan.plane_weights[te];
            for (std::size_t c = 0; c < x.c(); ++c)
                for (std::size_t y = 0; y < x.h(); ++y)
                    for (std::size_t xx = 0; xx < x.w(); ++xx)
                        planes.set(te, c, y, xx, (x(t, c, y, xx) >> shift) & 1u);
        }
    return {std::move(planes), std::move(plan)};
}

// out[t] = sum_p psum[t*B + p] << plane_weights[t*B + p], 18-bit checked.
inline std::vector<std::int32_t> reconstruct(std::span<const std::int32_t> psums, const BitPlanePlan& plan)
{
    if (psums.size() != static_cast<std::size_t>(plan.t_e))
        throw ValidationError("reconstruct: psum count does not match plan");
    std::vector<std::int32_t> out(static_cast<std::size_t>(plan.t));
    for (int t = 0; t < plan.t; ++t) {
        std::int64_t acc = 0;
        for (int p = 0; p < plan.b; ++p) {
            const auto i = static_cast<std::size_t>(t * plan.b + p);
            acc += std::int64_t{psums[i]} * (std::int64_t{1} << plan.plane_weights[i]);
        }
        out[static_cast<std::size_t>(t)] = check_merged(acc, "reconstruct");
    }
    return out;
}

// Tensor form: psums (t_e, c, h, w) -> (t, c, h, w).
inline PsumTensor reconstruct(const PsumTensor& psums, const BitPlanePlan& plan)
{
    const auto& d = psums.dims();
    if (d[0] != static_cast<std::size_t>(plan.t_e)) throw ValidationError("reconstruct: time axis != t_e");
    PsumTensor out({static_cast<std::size_t>(plan.t), d[1], d[2], d[3]});
    std::vector<std::int32_t> seq(d[0]);
    for (std::size_t c = 0; c < d[1]; ++c)
        for (std::size_t y = 0; y < d[2]; ++y)
            for (std::size_t x = 0; x < d[3]; ++x) {
                for (std::size_t te = 0; te < d[0]; ++te) seq[te] = psums(te, c, y, x);
                const auto r = reconstruct(seq, plan);
                for (std::size_t t = 0; t < r.size(); ++t) out(t, c, y, x) = r[t];
            }
    return out;
}

struct BitWidthPolicy {
    PolicyMode mode = PolicyMode::saturate;
    std::int64_t total = 0;
    std::int64_t threshold_exceeded_count = 0; // elements > 3
    std::int64_t shifted_mass = 0;             // sum of LSBs dropped by x >> 1

    PolicyStats stats() const { return {total, threshold_exceeded_count, shifted_mass}; }
};

inline constexpr double kDefaultPolicyCutoff = 0.01;

// Saturate unless more than `cutoff` of all elements exceed 3; a fraction
// exactly equal to the cutoff saturates.
inline BitWidthPolicy calibrate_policy(std::span<const SpikeTensor> samples, double cutoff = kDefaultPolicyCutoff)
{
    if (samples.empty()) throw ValidationError("calibrate_policy: empty sample batch");
    BitWidthPolicy p;
    for (const auto& s : samples) {
        for (auto v : s.values()) {
            ++p.total;
            if (v > 3) ++p.threshold_exceeded_count;
            p.shifted_mass += v & 1u;
        }
    }
    if (p.total == 0) throw ValidationError("calibrate_policy: samples contain no elements");
    const double frac = static_cast<double>(p.threshold_exceeded_count) / static_cast<double>(p.total);
    p.mode = frac <= cutoff ? PolicyMode::saturate : PolicyMode::shift;
    return p;
}

} // namespace snnaccel
