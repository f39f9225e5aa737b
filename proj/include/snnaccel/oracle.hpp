// oracle.hpp - naive golden model of every network-level computation.
//
// Nested loops, 64-bit accumulation, serial time recurrences. Nothing here
// knows about tiling, bit planes, lookahead or clock domains; the accelerator
// path in pipeline.hpp is checked element-for-element against these
// functions.
#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "errors.hpp"
#include "fixed_point.hpp"
#include "model_ir.hpp"
#include "tensor.hpp"

namespace snnaccel::oracle {

// Membrane potentials of one layer, one per (c_o, y, x) neuron.
struct NeuronState {
    std::vector<std::int32_t> v;
};

// psum[t][co][y][x] = sum over (ci, ky, kx) of in[t][ci][y*s+ky-p][x*s+kx-p] * w,
// zero outside the input. Any psum outside the 18-bit range is an error.
inline PsumTensor conv_integrate(const SpikeTensor& in, const WeightTensor& w, const LayerShape& s)
{
    if (in.c() != static_cast<std::size_t>(s.c_i) || in.h() != static_cast<std::size_t>(s.h_i) ||
        in.w() != static_cast<std::size_t>(s.w_i)) {
        throw ValidationError("conv_integrate: input dims do not match layer shape");
    }
    if (w.dim(0) != static_cast<std::size_t>(s.c_o) || w.dim(1) != static_cast<std::size_t>(s.c_i) ||
        w.dim(2) != static_cast<std::size_t>(s.k_h) || w.dim(3) != static_cast<std::size_t>(s.k_w)) {
        throw ValidationError("conv_integrate: weight dims do not match layer shape");
    }
    PsumTensor out({in.t(), static_cast<std::size_t>(s.c_o), static_cast<std::size_t>(s.h_o),
                    static_cast<std::size_t>(s.w_o)});
    for (std::size_t t = 0; t < in.t(); ++t) {
        for (int co = 0; co < s.c_o; ++co) {
            for (int y = 0; y < s.h_o; ++y) {
                for (int x = 0; x < s.w_o; ++x) {
                    std::int64_t acc = 0;
                    for (int ci = 0; ci < s.c_i; ++ci) {
                        for (int ky = 0; ky < s.k_h; ++ky) {
                            const int iy = y * s.stride + ky - s.pad;
                            if (iy < 0 || iy >= s.h_i) continue;
                            for (int kx = 0; kx < s.k_w; ++kx) {
                                const int ix = x * s.stride + kx - s.pad;
                                if (ix < 0 || ix >= s.w_i) continue;
                                acc += std::int64_t{in(t, ci, iy, ix)} * w(co, ci, ky, kx);
                            }
                        }
                    }
                    out(t, co, y, x) = check_merged(acc, "conv_integrate");
                }
            }
        }
    }
    return out;
}

// One serial time step of a single neuron; returns the spike.
//   IF : v += I; fire iff v >= theta; hard reset to 0.
//   LIF: v -= v >> leak_shift; v += I; fire iff v >= theta; hard reset to 0.
//   RMP: v += I; fire iff v >= theta; soft reset v -= theta (once per step).
inline std::uint8_t neuron_step(std::int32_t current, const NeuronParams& p, std::int32_t& v)
{
    std::int64_t next = v;
    if (p.type == NeuronType::LIF) next -= next >> p.leak_shift;
    next += current;
    check_merged(next, "membrane potential");
    std::uint8_t spike = 0;
    if (next >= p.threshold) {
        spike = 1;
        next = p.type == NeuronType::RMP ? next - p.threshold : 0;
    }
    v = check_merged(next, "membrane potential");
    return spike;
}

// Runs a neuron strictly serially over the given currents, carrying v.
inline std::vector<std::uint8_t> neuron_serial(std::span<const std::int32_t> currents, const NeuronParams& p,
                                               std::int32_t& v)
{
    std::vector<std::uint8_t> spikes;
    spikes.reserve(currents.size());
    for (auto i : currents) spikes.push_back(neuron_step(check_merged(i, "synaptic current"), p, v));
    return spikes;
}

// Layer-level version: currents (t, c, h, w) -> binary spikes, state updated.
inline SpikeTensor neuron_serial(const PsumTensor& currents, const NeuronParams& p, NeuronState& state)
{
    const auto& d = currents.dims();
    const std::size_t neurons = d[1] * d[2] * d[3];
    if (state.v.empty()) state.v.assign(neurons, 0);
    if (state.v.size() != neurons) throw ValidationError("neuron_serial: state size mismatch");
    SpikeTensor out(d, 1);
    std::vector<std::int32_t> seq(d[0]);
    for (std::size_t c = 0; c < d[1]; ++c) {
        for (std::size_t y = 0; y < d[2]; ++y) {
            for (std::size_t x = 0; x < d[3]; ++x) {
                for (std::size_t t = 0; t < d[0]; ++t) seq[t] = currents(t, c, y, x);
                auto& v = state.v[(c * d[2] + y) * d[3] + x];
                const auto spikes = neuron_serial(seq, p, v);
                for (std::size_t t = 0; t < d[0]; ++t) out.set(t, c, y, x, spikes[t]);
            }
        }
    }
    return out;
}

namespace detail {
inline void require_even(const SpikeTensor& s, const char* what)
{
    if (s.h() % 2 != 0 || s.w() % 2 != 0) throw ValidationError(std::string(what) + ": odd spatial dims");
}
} // namespace detail

// 2x2 window sums of binary spikes: values 0..4, carried as 3-bit spikes.
inline SpikeTensor avg_pool_2x2(const SpikeTensor& in)
{
    detail::require_even(in, "avg_pool_2x2");
    if (in.bit_width() != 1) throw ValidationError("avg_pool_2x2: expects binary spikes");
    SpikeTensor out({in.t(), in.c(), in.h() / 2, in.w() / 2}, 3);
    for (std::size_t t = 0; t < in.t(); ++t)
        for (std::size_t c = 0; c < in.c(); ++c)
            for (std::size_t y = 0; y < in.h() / 2; ++y)
                for (std::size_t x = 0; x < in.w() / 2; ++x)
                    out.set(t, c, y, x,
                            unsigned{in(t, c, 2 * y, 2 * x)} + in(t, c, 2 * y, 2 * x + 1) +
                                in(t, c, 2 * y + 1, 2 * x) + in(t, c, 2 * y + 1, 2 * x + 1));
    return out;
}

inline SpikeTensor max_pool_2x2(const SpikeTensor& in)
{
    detail::require_even(in, "max_pool_2x2");
    SpikeTensor out({in.t(), in.c(), in.h() / 2, in.w() / 2}, in.bit_width());
    for (std::size_t t = 0; t < in.t(); ++t)
        for (std::size_t c = 0; c < in.c(); ++c)
            for (std::size_t y = 0; y < in.h() / 2; ++y)
                for (std::size_t x = 0; x < in.w() / 2; ++x)
                    out.set(t, c, y, x,
                            std::max({in(t, c, 2 * y, 2 * x), in(t, c, 2 * y, 2 * x + 1),
                                      in(t, c, 2 * y + 1, 2 * x), in(t, c, 2 * y + 1, 2 * x + 1)}));
    return out;
}

// Saturate-or-shift applied to avg-pool window sums: 2-bit result.
inline SpikeTensor apply_pool_policy(const SpikeTensor& sums, PolicyMode mode)
{
    SpikeTensor out(sums.dims(), 2);
    for (std::size_t t = 0; t < sums.t(); ++t)
        for (std::size_t c = 0; c < sums.c(); ++c)
            for (std::size_t y = 0; y < sums.h(); ++y)
                for (std::size_t x = 0; x < sums.w(); ++x) {
                    const unsigned v = sums(t, c, y, x);
                    out.set(t, c, y, x, mode == PolicyMode::saturate ? std::min(v, 3u) : std::min(v >> 1, 3u));
                }
    return out;
}

// Spike-element-wise residual. IAND: shortcut AND NOT backbone (or the
// swapped order), binary only. ADD: sum followed by the overflow policy.
inline SpikeTensor sew_residual(const SpikeTensor& backbone, const SpikeTensor& shortcut, ResidualFunction fn,
                                OverflowPolicy policy, IandOrder order = IandOrder::negate_backbone)
{
    if (backbone.dims() != shortcut.dims()) throw ValidationError("sew_residual: shape mismatch");
    if (fn == ResidualFunction::iand) {
        if (backbone.bit_width() != 1 || shortcut.bit_width() != 1)
            throw ValidationError("sew_residual: IAND requires binary operands");
        SpikeTensor out(backbone.dims(), 1);
        for (std::size_t t = 0; t < backbone.t(); ++t)
            for (std::size_t c = 0; c < backbone.c(); ++c)
                for (std::size_t y = 0; y < backbone.h(); ++y)
                    for (std::size_t x = 0; x < backbone.w(); ++x) {
                        const unsigned b = backbone(t, c, y, x);
                        const unsigned s = shortcut(t, c, y, x);
                        out.set(t, c, y, x, order == IandOrder::negate_backbone ? (s & (1u - b)) : (b & (1u - s)));
                    }
        return out;
    }
    SpikeTensor out(backbone.dims(), overflow_policy_bits(policy));
    for (std::size_t t = 0; t < backbone.t(); ++t)
        for (std::size_t c = 0; c < backbone.c(); ++c)
            for (std::size_t y = 0; y < backbone.h(); ++y)
                for (std::size_t x = 0; x < backbone.w(); ++x) {
                    const unsigned sum = unsigned{backbone(t, c, y, x)} + shortcut(t, c, y, x);
                    unsigned v = 0;
                    switch (policy) {
                    case OverflowPolicy::extend4: v = std::min(sum, 15u); break;
                    case OverflowPolicy::saturate2: v = std::min(sum, 3u); break;
                    case OverflowPolicy::shift2: v = std::min(sum >> 1, 3u); break;
                    }
                    out.set(t, c, y, x, v);
                }
    return out;
}

// Synaptic currents of a layer: (psum << post_shift_left) + bias[c], with the
// direct-coded psum (T=1) replicated over the layer's T steps.
inline PsumTensor layer_currents(const PsumTensor& psums, const LayerConfig& cfg)
{
    const std::size_t steps = static_cast<std::size_t>(cfg.shape.t);
    const auto& d = psums.dims();
    PsumTensor out({steps, d[1], d[2], d[3]});
    for (std::size_t t = 0; t < steps; ++t) {
        const std::size_t src_t = d[0] == 1 ? 0 : t;
        for (std::size_t c = 0; c < d[1]; ++c)
            for (std::size_t y = 0; y < d[2]; ++y)
                for (std::size_t x = 0; x < d[3]; ++x) {
                    const std::int64_t v =
                        (std::int64_t{psums(src_t, c, y, x)} * (std::int64_t{1} << cfg.post_shift_left)) +
                        cfg.neuron.bias[c];
                    out(t, c, y, x) = check_merged(v, "synaptic current");
                }
    }
    return out;
}

// Direct input encoding: pixel convolution computed once, replicated over T
// steps as the synaptic current, then serial neurodynamics.
inline SpikeTensor direct_encode(const SpikeTensor& image, const WeightTensor& w, const LayerConfig& cfg)
{
    if (cfg.coding != Coding::direct8bit) throw ValidationError("direct_encode: layer is not direct-coded");
    if (image.t() != 1) throw ValidationError("direct_encode: image must have a single time step");
    const auto psum = conv_integrate(image, w, cfg.shape);
    NeuronState state;
    return neuron_serial(layer_currents(psum, cfg), cfg.neuron, state);
}

// Per-channel spike counts over (t, h, w). Multi-bit spikes count by value.
inline std::vector<std::int64_t> spike_counts(const SpikeTensor& s)
{
    std::vector<std::int64_t> out(s.c(), 0);
    for (std::size_t t = 0; t < s.t(); ++t)
        for (std::size_t c = 0; c < s.c(); ++c)
            for (std::size_t y = 0; y < s.h(); ++y)
                for (std::size_t x = 0; x < s.w(); ++x) out[c] += s(t, c, y, x);
    return out;
}

struct LayerTrace {
    SpikeTensor neuron_out; // binary spikes before pooling
    SpikeTensor output;     // after pooling and residual
};

// Full layer: conv -> shift/bias -> neurodynamics -> pool -> residual.
inline LayerTrace run_layer(const LayerConfig& cfg, const WeightTensor& w, const SpikeTensor& input,
                            const SpikeTensor* shortcut)
{
    if (input.bit_width() != cfg.input_bits())
        throw ValidationError("run_layer: input bit width does not match layer coding");
    const auto psum = conv_integrate(input, w, cfg.shape);
    NeuronState state;
    LayerTrace tr;
    tr.neuron_out = neuron_serial(layer_currents(psum, cfg), cfg.neuron, state);
    switch (cfg.pool) {
    case PoolMode::none: tr.output = tr.neuron_out; break;
    case PoolMode::max2x2: tr.output = max_pool_2x2(tr.neuron_out); break;
    case PoolMode::avg2x2: tr.output = apply_pool_policy(avg_pool_2x2(tr.neuron_out), cfg.pool_policy); break;
    }
    if (cfg.residual) {
        if (shortcut == nullptr) throw ValidationError("run_layer: residual layer needs a shortcut tensor");
        tr.output = sew_residual(tr.output, *shortcut, cfg.residual->function, cfg.residual->overflow_policy,
                                 cfg.residual->iand_order);
    }
    return tr;
}

struct ReferenceResult {
    std::vector<SpikeTensor> layer_outputs;
    std::vector<std::int64_t> class_scores;
};

inline const SpikeTensor* shortcut_for(const LayerConfig& cfg, const SpikeTensor& input,
                                       const std::vector<SpikeTensor>& outputs)
{
    if (!cfg.residual) return nullptr;
    const int src = cfg.residual->source;
    return src < 0 ? &input : &outputs.at(static_cast<std::size_t>(src));
}

// Executes every layer in order; class scores are the last layer's spike counts.
inline ReferenceResult run_reference(const NetworkDesc& net, const SpikeTensor& input)
{
    ReferenceResult res;
    res.layer_outputs.reserve(net.layers.size());
    const SpikeTensor* current = &input;
    for (const auto& layer : net.layers) {
        const auto* sc = shortcut_for(layer.config, input, res.layer_outputs);
        res.layer_outputs.push_back(run_layer(layer.config, layer.weights, *current, sc).output);
        current = &res.layer_outputs.back();
    }
    res.class_scores = spike_counts(res.layer_outputs.back());
    return res;
}

} // namespace snnaccel::oracle
