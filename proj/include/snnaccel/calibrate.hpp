// calibrate.hpp - per-layer saturate-or-shift selection over a sample batch.
//
// Layers are visited in order. For each avg-pooled layer the 2x2 window sums
// decide pool_policy; for each ADD residual with a 2-bit policy the
// backbone + shortcut sums decide between saturate2 and shift2. Every later
// layer is run with the already-chosen policies, and the consumer of a
// shifted output gets post_shift_left = 1.
#pragma once

#include <span>
#include <string>
#include <vector>

#include "decompose.hpp"
#include "errors.hpp"
#include "model_ir.hpp"
#include "oracle.hpp"

namespace snnaccel {

struct LayerDecision {
    std::size_t layer = 0;
    std::string what; // "pool" or "residual"
    BitWidthPolicy policy;
};

struct CalibrationResult {
    NetworkDesc net;
    std::vector<LayerDecision> decisions;
};

namespace calib_detail {

inline SpikeTensor residual_sums(const SpikeTensor& backbone, const SpikeTensor& shortcut)
{
    if (backbone.dims() != shortcut.dims()) throw ValidationError("calibrate: shortcut shape mismatch");
    SpikeTensor out(backbone.dims(), std::min(8, std::max(backbone.bit_width(), shortcut.bit_width()) + 1));
    for (std::size_t t = 0; t < out.t(); ++t)
        for (std::size_t c = 0; c < out.c(); ++c)
            for (std::size_t y = 0; y < out.h(); ++y)
                for (std::size_t x = 0; x < out.w(); ++x)
                    out.set(t, c, y, x, unsigned{backbone(t, c, y, x)} + shortcut(t, c, y, x));
    return out;
}

} // namespace calib_detail

inline CalibrationResult calibrate_network(const NetworkDesc& net, std::span<const SpikeTensor> samples,
                                           double cutoff = kDefaultPolicyCutoff)
{
    if (samples.empty()) throw ValidationError("calibrate: empty sample set");
    if (net.layers.empty()) throw ValidationError("calibrate: network has no layers");
    CalibrationResult res{net, {}};
    auto& layers = res.net.layers;
    const std::size_t n = samples.size();
    // outputs[s][l]: output of layer l for sample s under the policies so far.
    std::vector<std::vector<SpikeTensor>> outputs(n);
    for (auto& o : outputs) o.reserve(layers.size());

    for (std::size_t l = 0; l < layers.size(); ++l) {
        auto& cfg = layers[l].config;
        if (l > 0) cfg.post_shift_left = layers[l - 1].config.output_shifted() ? 1 : 0;
        const bool pool_choice = cfg.pool == PoolMode::avg2x2;
        const bool residual_choice = cfg.residual && cfg.residual->function == ResidualFunction::add &&
                                     cfg.residual->overflow_policy != OverflowPolicy::extend4;

        std::vector<SpikeTensor> neuron_out(n);
        for (std::size_t s = 0; s < n; ++s) {
            const SpikeTensor& in = l == 0 ? samples[s] : outputs[s].back();
            auto plain = cfg;
            plain.pool = PoolMode::none;
            plain.residual.reset();
            neuron_out[s] = oracle::run_layer(plain, layers[l].weights, in, nullptr).neuron_out;
        }

        if (pool_choice) {
            std::vector<SpikeTensor> sums;
            sums.reserve(n);
            for (const auto& s : neuron_out) sums.push_back(oracle::avg_pool_2x2(s));
            auto policy = calibrate_policy(sums, cutoff);
            cfg.pool_policy = policy.mode;
            cfg.calibration = policy.stats();
            res.decisions.push_back({l, "pool", policy});
        }
        if (residual_choice) {
            std::vector<SpikeTensor> sums;
            sums.reserve(n);
            for (std::size_t s = 0; s < n; ++s) {
                const auto pooled = cfg.pool == PoolMode::max2x2 ? oracle::max_pool_2x2(neuron_out[s]) : neuron_out[s];
                const auto* sc = oracle::shortcut_for(cfg, samples[s], outputs[s]);
                sums.push_back(calib_detail::residual_sums(pooled, *sc));
            }
            auto policy = calibrate_policy(sums, cutoff);
            cfg.residual->overflow_policy =
                policy.mode == PolicyMode::shift ? OverflowPolicy::shift2 : OverflowPolicy::saturate2;
            cfg.calibration = policy.stats();
            res.decisions.push_back({l, "residual", policy});
        }
        for (std::size_t s = 0; s < n; ++s) {
            const SpikeTensor& in = l == 0 ? samples[s] : outputs[s].back();
            const auto* sc = oracle::shortcut_for(cfg, samples[s], outputs[s]);
            outputs[s].push_back(oracle::run_layer(cfg, layers[l].weights, in, sc).output);
        }
    }
    return res;
}

} // namespace snnaccel
