// postproc.hpp - post-engine pipeline.
//
// Flexible partial-sum merge, bias/shift stage, two-phase neurodynamics,
// pooling, residual connection and spike accumulation. Merge inputs P0..P3
// are indexed least-significant lane first inside a round (see
// plane_order.hpp for how engine lanes map onto them).
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "errors.hpp"
#include "fixed_point.hpp"
#include "model_ir.hpp"
#include "oracle.hpp"
#include "tensor.hpp"

namespace snnaccel {

enum class MergeCase { bypass1bit, merge2bit, merge4bit, direct8bit };

inline MergeCase merge_case_for(Coding c) noexcept
{
    switch (c) {
    case Coding::binary_spike: return MergeCase::bypass1bit;
    case Coding::spike2bit: return MergeCase::merge2bit;
    case Coding::spike4bit: return MergeCase::merge4bit;
    case Coding::direct8bit: return MergeCase::direct8bit;
    }
    return MergeCase::bypass1bit;
}

using PsumQuad = std::array<std::int32_t, 4>;
using MergedPsum = std::array<std::int32_t, 4>;

// Values one round of four psums contributes:
//   bypass1bit -> P0..P3
//   merge2bit  -> Q0 = P0 + (P1 << 1), Q1 = P2 + (P3 << 1)
//   merge4bit / direct8bit -> R0 = Q0 + (Q1 << 2)
inline std::vector<std::int32_t> merge_round(const PsumQuad& p, MergeCase mc)
{
    const auto q0 = check_merged(std::int64_t{p[0]} + (std::int64_t{p[1]} << 1), "psum merge Q0");
    const auto q1 = check_merged(std::int64_t{p[2]} + (std::int64_t{p[3]} << 1), "psum merge Q1");
    switch (mc) {
    case MergeCase::bypass1bit: return {p[0], p[1], p[2], p[3]};
    case MergeCase::merge2bit: return {q0, q1};
    case MergeCase::merge4bit:
    case MergeCase::direct8bit: return {check_merged(std::int64_t{q0} + (std::int64_t{q1} << 2), "psum merge R0")};
    }
    return {};
}

// Stateful merge sub-module for one (channel, pixel) stream. Collects rounds
// until four merged values are available. For direct coding the second
// round completes R1 = R0 + (R0' << 4), which is replicated four times.
class PsumMergeUnit {
public:
    explicit PsumMergeUnit(MergeCase mc = MergeCase::bypass1bit) : case_(mc) {}

    MergeCase merge_case() const noexcept { return case_; }

    std::optional<MergedPsum> push(const PsumQuad& p)
    {
        const auto vals = merge_round(p, case_);
        if (case_ == MergeCase::direct8bit) {
            if (!prev_r0_) {
                prev_r0_ = vals[0];
                return std::nullopt;
            }
            const auto r1 = check_merged(std::int64_t{vals[0]} + (std::int64_t{*prev_r0_} << 4), "psum merge R1");
            prev_r0_.reset();
            return MergedPsum{r1, r1, r1, r1};
        }
        pending_.insert(pending_.end(), vals.begin(), vals.end());
        if (pending_.size() < 4) return std::nullopt;
        MergedPsum out{pending_[0], pending_[1], pending_[2], pending_[3]};
        pending_.clear();
        return out;
    }

    // Emits a partially collected group, zero-filled. Direct coding never
    // leaves a valid partial group.
    std::optional<MergedPsum> flush()
    {
        if (prev_r0_) throw ValidationError("psum merge: direct coding flushed after a single round");
        if (pending_.empty()) return std::nullopt;
        MergedPsum out{};
        for (std::size_t i = 0; i < pending_.size(); ++i) out[i] = pending_[i];
        pending_.clear();
        return out;
    }

private:
    MergeCase case_;
    std::vector<std::int32_t> pending_;
    std::optional<std::int32_t> prev_r0_;
};

// (m << post_shift_left) + bias: shift first, then bias.
inline MergedPsum bias_shift(const MergedPsum& m, std::int32_t bias, int post_shift_left)
{
    MergedPsum out{};
    for (std::size_t i = 0; i < m.size(); ++i)
        out[i] = check_merged((std::int64_t{m[i]} << post_shift_left) + bias, "bias/shift");
    return out;
}

struct NeuroResult {
    std::vector<std::uint8_t> spikes;
    std::int32_t v_next = 0;
};

// Lookahead neurodynamics over one batch of S steps.
//
// Phase 1 builds every spike candidate without looking at earlier spikes:
// for IF/LIF one trajectory per possible last-reset position r (-1 = no
// reset in this batch, start from v_pre), for RMP one per number of spikes
// already emitted (each subtracts theta). Phase 2 walks the S steps once and
// picks the candidate indexed by the selection so far. The observable result
// equals the serial recurrence in oracle::neuron_step.
inline NeuroResult two_phase_neurodynamics(std::span<const std::int32_t> currents, std::int32_t v_pre,
                                           const NeuronParams& p)
{
    const std::size_t steps = currents.size();
    for (auto i : currents) check_merged(i, "synaptic current");
    NeuroResult res;
    res.spikes.assign(steps, 0);
    if (steps == 0) {
        res.v_next = v_pre;
        return res;
    }
    const std::int64_t theta = p.threshold;

    if (p.type == NeuronType::RMP) {
        // Phase 1: base[j] = v_pre + I[0] + ... + I[j]; candidate with k prior
        // spikes is base[j] - k*theta.
        std::vector<std::int64_t> base(steps);
        std::int64_t run = v_pre;
        for (std::size_t j = 0; j < steps; ++j) base[j] = (run += currents[j]);
        std::vector<std::vector<std::int64_t>> value(steps + 1, std::vector<std::int64_t>(steps));
        std::vector<std::vector<std::uint8_t>> cand(steps + 1, std::vector<std::uint8_t>(steps));
        for (std::size_t k = 0; k <= steps; ++k)
            for (std::size_t j = 0; j < steps; ++j) {
                value[k][j] = base[j] - static_cast<std::int64_t>(k) * theta;
                cand[k][j] = value[k][j] >= theta ? 1 : 0;
            }
        // Phase 2: selection chain.
        std::size_t k = 0;
        for (std::size_t j = 0; j < steps; ++j) {
            check_merged(value[k][j], "membrane potential");
            res.spikes[j] = cand[k][j];
            k += cand[k][j];
        }
        res.v_next = check_merged(base[steps - 1] - static_cast<std::int64_t>(k) * theta, "membrane potential");
        return res;
    }

    // IF / LIF. Row r + 1 holds the trajectory assuming the last reset
    // happened at step r (row 0: no reset, start from v_pre).
    std::vector<std::vector<std::int64_t>> traj(steps + 1, std::vector<std::int64_t>(steps, 0));
    std::vector<std::vector<std::uint8_t>> cand(steps + 1, std::vector<std::uint8_t>(steps, 0));
    for (std::size_t row = 0; row <= steps; ++row) {
        std::int64_t v = row == 0 ? v_pre : 0;
        for (std::size_t j = row == 0 ? 0 : row; j < steps; ++j) {
            if (p.type == NeuronType::LIF) v -= v >> p.leak_shift;
            v += currents[j];
            traj[row][j] = v;
            cand[row][j] = v >= theta ? 1 : 0;
        }
    }
    std::size_t row = 0;
    for (std::size_t j = 0; j < steps; ++j) {
        check_merged(traj[row][j], "membrane potential");
        res.spikes[j] = cand[row][j];
        if (cand[row][j]) row = j + 1;
    }
    res.v_next = row == steps ? 0 : check_merged(traj[row][steps - 1], "membrane potential");
    return res;
}

// Pooling datapath; avg-pool window sums pass through the layer's
// saturate-or-shift policy and leave as 2-bit spikes.
inline SpikeTensor pool_unit(const SpikeTensor& spikes, PoolMode mode, PolicyMode policy = PolicyMode::saturate)
{
    switch (mode) {
    case PoolMode::none: return spikes;
    case PoolMode::max2x2: return oracle::max_pool_2x2(spikes);
    case PoolMode::avg2x2: return oracle::apply_pool_policy(oracle::avg_pool_2x2(spikes), policy);
    }
    return spikes;
}

inline SpikeTensor residual_unit(const SpikeTensor& backbone, const SpikeTensor& shortcut, const ResidualConfig& cfg)
{
    if (backbone.bit_width() != 1) throw ValidationError("residual unit: backbone spikes must be binary");
    if (shortcut.bit_width() != cfg.shortcut_bit_width)
        throw ValidationError("residual unit: shortcut bit width differs from configuration");
    return oracle::sew_residual(backbone, shortcut, cfg.function, cfg.overflow_policy, cfg.iand_order);
}

// Firing-rate counters of the classification layer: one per channel,
// accumulated time step by time step.
inline std::vector<std::int64_t> spike_accumulate(const SpikeTensor& spikes)
{
    std::vector<std::int64_t> counters(spikes.c(), 0);
    const auto values = spikes.values();
    const std::size_t plane = spikes.h() * spikes.w();
    std::size_t idx = 0;
    for (std::size_t t = 0; t < spikes.t(); ++t)
        for (std::size_t c = 0; c < spikes.c(); ++c)
            for (std::size_t i = 0; i < plane; ++i) counters[c] += values[idx++];
    return counters;
}

} // namespace snnaccel
