// pipeline.hpp - end-to-end accelerator path.
//
// Per layer: bit-plane decomposition, zero padding into a banked row buffer,
// im2col gathering of V x N x S spike blocks, the systolic engine, psum
// collection, the merge unit, bias/shift, two-phase neurodynamics with the
// M x N membrane buffer carried across time tiles, then pooling and the
// residual unit. The network driver compares every layer against the oracle
// and reports the first differing element.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "decompose.hpp"
#include "engine.hpp"
#include "errors.hpp"
#include "model_ir.hpp"
#include "oracle.hpp"
#include "plane_order.hpp"
#include "postproc.hpp"
#include "schedperf.hpp"
#include "tensor.hpp"

namespace snnaccel {

struct LayerAccelResult {
    SpikeTensor neuron_out; // binary spikes before pooling
    SpikeTensor output;     // after pooling and residual
    LayerPerf perf;
    std::int64_t tiles = 0;
    std::int64_t accumulation_cycles = 0; // summed over tiles, fill excluded
    std::int64_t blocks_per_tile = 0;
};

namespace detail {

// Padded, bank-interleaved copy of the bit planes. Reads go through
// (row, bank, offset) exactly as the im2col unit addresses them.
class BankedInput {
public:
    BankedInput(const PaddedStream& p, int n, int stride)
        : layout_{n, stride, p.meta.padded_w}, te_(p.tensor.t()), c_(p.tensor.c()), h_(p.tensor.h()),
          row_words_(static_cast<std::size_t>(n) * static_cast<std::size_t>(stride * layout_.words_per_phase())),
          data_(te_ * c_ * h_ * row_words_, 0)
    {
        for (std::size_t t = 0; t < te_; ++t)
            for (std::size_t c = 0; c < c_; ++c)
                for (std::size_t y = 0; y < h_; ++y)
                    for (int col = 0; col < layout_.padded_w; ++col)
                        data_[index(t, c, y, layout_.bank(col), layout_.offset(col))] =
                            p.tensor(t, c, y, static_cast<std::size_t>(col));
    }

    std::uint8_t read(std::size_t te, std::size_t c, const BankAddress& a) const
    {
        if (!a.valid || a.column >= layout_.padded_w || te >= te_ || c >= c_) return 0;
        return data_[index(te, c, static_cast<std::size_t>(a.row), a.bank, a.offset)];
    }

private:
    std::size_t index(std::size_t t, std::size_t c, std::size_t y, int bank, int offset) const
    {
        const auto words_per_bank = row_words_ / static_cast<std::size_t>(layout_.n);
        return ((t * c_ + c) * h_ + y) * row_words_ + static_cast<std::size_t>(bank) * words_per_bank +
               static_cast<std::size_t>(offset);
    }

    BankLayout layout_;
    std::size_t te_, c_, h_, row_words_;
    std::vector<std::uint8_t> data_;
};

// Membrane buffer slot for one neuron of the current (channel, pixel) tile.
struct NeuronSlot {
    PsumMergeUnit merge;
    std::int32_t v = 0;
    int t_out = 0; // next output time step
};

} // namespace detail

// Runs one layer through the accelerator model. The merge unit is four lanes
// wide, so s must be 4.
inline LayerAccelResult run_layer_accel(const LayerConfig& cfg, const WeightTensor& weights, const SpikeTensor& input,
                                        const SpikeTensor* shortcut, const ParallelismConfig& par,
                                        const PerfOptions& opt = {})
{
    par.validate();
    if (par.s != kMergeLanes) throw ValidationError("accelerator path requires s = 4 (four-lane psum merge)");
    cfg.shape.validate();
    if (input.dims() != cfg.input_dims()) throw ValidationError("run_layer_accel: input dims do not match layer");
    if (input.bit_width() != cfg.input_bits())
        throw ValidationError("run_layer_accel: input bit width does not match layer coding");
    if (weights.dims() != cfg.weight_dims()) throw ValidationError("run_layer_accel: weight dims do not match layer");
    if (cfg.neuron.bias.size() != static_cast<std::size_t>(cfg.shape.c_o))
        throw ValidationError("run_layer_accel: bias count differs from c_o");

    const auto& s = cfg.shape;
    const auto g = EngineGeometry::from(par);
    const int bits = input.bit_width();
    const auto mcase = merge_case_for(cfg.coding);
    const auto dec = bitplane_decompose(input);
    const auto padded = pad_stream(dec.planes, s.pad, par.n);
    const detail::BankedInput banked(padded, par.n, s.stride);
    const auto nest = plan_loop_nest(cfg, par);

    LayerAccelResult res;
    res.neuron_out = SpikeTensor(
        {static_cast<std::size_t>(s.t), static_cast<std::size_t>(s.c_o), static_cast<std::size_t>(s.h_o),
         static_cast<std::size_t>(s.w_o)},
        1);
    res.blocks_per_tile = nest.trip(4) * nest.trip(5) * nest.trip(6);

    const std::size_t slots = static_cast<std::size_t>(par.m * par.n);
    std::vector<detail::NeuronSlot> buffer(slots);
    std::vector<SpikeBlock> spike_stream(static_cast<std::size_t>(res.blocks_per_tile));
    std::vector<WeightBlock> weight_stream(static_cast<std::size_t>(res.blocks_per_tile));

    // Consumes one merged group of four currents for the neuron in `slot`.
    auto fire = [&](detail::NeuronSlot& slot, const MergedPsum& merged, int co, int y, int x) {
        const auto cur = bias_shift(merged, cfg.neuron.bias[static_cast<std::size_t>(co)], cfg.post_shift_left);
        // Direct coding computes the current once and replays it for every
        // batch of four steps.
        const int repeats = mcase == MergeCase::direct8bit ? static_cast<int>(ceil_div(s.t, kMergeLanes)) : 1;
        for (int r = 0; r < repeats; ++r) {
            const int valid = std::min(kMergeLanes, s.t - slot.t_out);
            if (valid <= 0) return;
            const auto nr = two_phase_neurodynamics(std::span<const std::int32_t>(cur.data(), static_cast<std::size_t>(valid)),
                                                    slot.v, cfg.neuron);
            slot.v = nr.v_next;
            for (int j = 0; j < valid; ++j)
                res.neuron_out.set(static_cast<std::size_t>(slot.t_out + j), static_cast<std::size_t>(co),
                                   static_cast<std::size_t>(y), static_cast<std::size_t>(x), nr.spikes[static_cast<std::size_t>(j)]);
            slot.t_out += valid;
        }
    };

    for (std::int64_t co_tile = 0; co_tile < nest.trip(0); ++co_tile) {
        for (int y = 0; y < s.h_o; ++y) {
            for (std::int64_t x_tile = 0; x_tile < nest.trip(2); ++x_tile) {
                const int x0 = static_cast<int>(x_tile) * par.n;
                for (auto& slot : buffer) slot = detail::NeuronSlot{PsumMergeUnit(mcase), 0, 0};
                const auto fetches = im2col_addresses(s, par.n, y, x0);

                for (std::int64_t t_tile = 0; t_tile < nest.trip(3); ++t_tile) {
                    std::size_t blk = 0;
                    for (const auto& f : fetches) {
                        for (std::int64_t ci_tile = 0; ci_tile < nest.trip(6); ++ci_tile, ++blk) {
                            SpikeBlock sb(par.v, par.n, par.s);
                            WeightBlock wb(par.m, par.v);
                            for (int vi = 0; vi < par.v; ++vi) {
                                const std::int64_t ci = ci_tile * par.v + vi;
                                if (ci >= s.c_i) continue;
                                for (int ni = 0; ni < par.n; ++ni)
                                    for (int si = 0; si < par.s; ++si)
                                        sb.at(vi, ni, si) = banked.read(static_cast<std::size_t>(t_tile * par.s + si),
                                                                        static_cast<std::size_t>(ci),
                                                                        f.addresses[static_cast<std::size_t>(ni)]);
                                for (int mi = 0; mi < par.m; ++mi) {
                                    const std::int64_t co = co_tile * par.m + mi;
                                    if (co < s.c_o)
                                        wb.at(mi, vi) = weights(static_cast<std::size_t>(co), static_cast<std::size_t>(ci),
                                                                static_cast<std::size_t>(f.ky), static_cast<std::size_t>(f.kx));
                                }
                            }
                            spike_stream[blk] = std::move(sb);
                            weight_stream[blk] = std::move(wb);
                        }
                    }
                    const auto tile = run_tile(spike_stream, weight_stream, g);
                    ++res.tiles;
                    res.accumulation_cycles += tile.cycles.accumulation;

                    for (const auto& rec : collect_psums(tile.tile).records) {
                        const int co = static_cast<int>(co_tile) * par.m + rec.m;
                        const int x = x0 + rec.n;
                        if (co >= s.c_o || x >= s.w_o) continue;
                        auto& slot = buffer[static_cast<std::size_t>(rec.m * par.n + rec.n)];
                        PsumQuad quad{};
                        for (std::size_t k = 0; k < quad.size(); ++k)
                            quad[k] = rec.lanes[merge_lane(bits, k)];
                        if (auto merged = slot.merge.push(quad)) fire(slot, *merged, co, y, x);
                    }
                }

                for (int mi = 0; mi < par.m; ++mi) {
                    for (int ni = 0; ni < par.n; ++ni) {
                        const int co = static_cast<int>(co_tile) * par.m + mi;
                        const int x = x0 + ni;
                        if (co >= s.c_o || x >= s.w_o) continue;
                        auto& slot = buffer[static_cast<std::size_t>(mi * par.n + ni)];
                        if (auto merged = slot.merge.flush()) fire(slot, *merged, co, y, x);
                        if (slot.t_out != s.t)
                            throw Error("pipeline: neuron produced " + std::to_string(slot.t_out) + " of " +
                                        std::to_string(s.t) + " time steps");
                    }
                }
            }
        }
    }

    res.output = pool_unit(res.neuron_out, cfg.pool, cfg.pool_policy);
    if (cfg.residual) {
        if (shortcut == nullptr) throw ValidationError("run_layer_accel: residual layer needs a shortcut tensor");
        res.output = residual_unit(res.output, *shortcut, *cfg.residual);
    }
    res.perf = estimate_layer(cfg, par, opt);
    return res;
}

struct NetworkAccelResult {
    std::vector<SpikeTensor> layer_outputs;
    std::vector<std::int64_t> class_scores;
    std::vector<LayerAccelResult> layers; // outputs moved into layer_outputs
    PerfReport perf;
};

inline NetworkAccelResult run_network_accel(const NetworkDesc& net, const SpikeTensor& input,
                                            const ParallelismConfig& par, const PerfOptions& opt = {})
{
    if (net.layers.empty()) throw ValidationError("network has no layers");
    NetworkAccelResult res;
    res.layer_outputs.reserve(net.layers.size());
    const SpikeTensor* current = &input;
    for (const auto& layer : net.layers) {
        const auto* sc = oracle::shortcut_for(layer.config, input, res.layer_outputs);
        auto lr = run_layer_accel(layer.config, layer.weights, *current, sc, par, opt);
        res.layer_outputs.push_back(std::move(lr.output));
        lr.output = SpikeTensor();
        res.layers.push_back(std::move(lr));
        current = &res.layer_outputs.back();
    }
    res.class_scores = spike_accumulate(res.layer_outputs.back());
    res.perf = estimate(net, par, opt);
    return res;
}

struct Divergence {
    std::size_t layer = 0;
    std::string layer_name;
    std::size_t t = 0, c = 0, y = 0, x = 0;
    int oracle_value = 0;
    int accel_value = 0;
    std::string message;
};

// First element (layer-major, then t, c, y, x) where two runs disagree.
inline std::optional<Divergence> first_divergence(const NetworkDesc& net, const std::vector<SpikeTensor>& oracle_out,
                                                  const std::vector<SpikeTensor>& accel_out)
{
    const auto layers = std::min(oracle_out.size(), accel_out.size());
    for (std::size_t l = 0; l < layers; ++l) {
        const auto& a = oracle_out[l];
        const auto& b = accel_out[l];
        Divergence d;
        d.layer = l;
        d.layer_name = l < net.layers.size() ? net.layers[l].config.name : std::string();
        if (a.dims() != b.dims() || a.bit_width() != b.bit_width()) {
            d.message = "layer " + std::to_string(l) + ": output shape or bit width differs";
            return d;
        }
        for (std::size_t t = 0; t < a.t(); ++t)
            for (std::size_t c = 0; c < a.c(); ++c)
                for (std::size_t y = 0; y < a.h(); ++y)
                    for (std::size_t x = 0; x < a.w(); ++x)
                        if (a(t, c, y, x) != b(t, c, y, x)) {
                            d.t = t;
                            d.c = c;
                            d.y = y;
                            d.x = x;
                            d.oracle_value = a(t, c, y, x);
                            d.accel_value = b(t, c, y, x);
                            d.message = "layer " + std::to_string(l) + (d.layer_name.empty() ? "" : " (" + d.layer_name + ")") +
                                        " differs at t=" + std::to_string(t) + " c=" + std::to_string(c) +
                                        " y=" + std::to_string(y) + " x=" + std::to_string(x) + ": oracle " +
                                        std::to_string(d.oracle_value) + ", accelerator " + std::to_string(d.accel_value);
                            return d;
                        }
    }
    if (oracle_out.size() != accel_out.size()) {
        Divergence d;
        d.layer = layers;
        d.message = "runs produced a different number of layer outputs";
        return d;
    }
    return std::nullopt;
}

struct CompareResult {
    oracle::ReferenceResult reference;
    NetworkAccelResult accel;
    std::optional<Divergence> divergence;
    bool scores_match = false;
    bool match() const noexcept { return !divergence && scores_match; }
};

inline CompareResult compare_network(const NetworkDesc& net, const SpikeTensor& input, const ParallelismConfig& par,
                                     const PerfOptions& opt = {})
{
    CompareResult r;
    r.reference = oracle::run_reference(net, input);
    r.accel = run_network_accel(net, input, par, opt);
    r.divergence = first_divergence(net, r.reference.layer_outputs, r.accel.layer_outputs);
    r.scores_match = r.reference.class_scores == r.accel.class_scores;
    return r;
}

} // namespace snnaccel
