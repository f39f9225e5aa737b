// schedperf.hpp - loop-nest planning, im2col addressing, padding, the
// dual-port bandwidth arbiter and the cycle/throughput estimator.
//
// Dataflow per layer, outermost first:
//   (C_o/M, H_o, W_o/N, T_e/S, K_h, K_w, C_i/V, [M, V, N, S])
// The time loop sits between the neuron loops and the spatial loops, so only
// M x N membrane potentials are live at a time.
#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "engine.hpp"
#include "errors.hpp"
#include "fixed_point.hpp"
#include "model_ir.hpp"
#include "tensor.hpp"

namespace snnaccel {

// ---------------------------------------------------------------- loop nest

struct Loop {
    std::string name;
    std::int64_t trip = 1;
};

struct LoopNest {
    std::vector<Loop> loops; // c_o/m, h_o, w_o/n, t/s, k_h, k_w, c_i/v
    std::array<int, 4> unrolled{}; // m, v, n, s
    int t_e = 1;       // equivalent binary time steps entering the engine
    int t_e_pad = 1;   // rounded up to a multiple of s
    int c_o_pad = 1;
    int w_o_pad = 1;
    int c_i_pad = 1;
    std::int64_t membrane_buffer_entries = 0; // m * n
    std::vector<std::string> notes;

    std::int64_t trip(std::size_t i) const { return loops.at(i).trip; }

    std::int64_t iterations() const noexcept
    {
        std::int64_t p = 1;
        for (const auto& l : loops) p *= l.trip;
        return p;
    }

    std::int64_t unrolled_ops() const noexcept
    {
        return std::int64_t{unrolled[0]} * unrolled[1] * unrolled[2] * unrolled[3];
    }

    // Synaptic operations executed including channel/pixel/time padding.
    std::int64_t padded_ops() const noexcept { return iterations() * unrolled_ops(); }
};

// Equivalent binary time steps the engine processes for a layer.
inline int equivalent_steps(const LayerConfig& cfg) noexcept
{
    return cfg.coding == Coding::direct8bit ? 8 : cfg.input_bits() * cfg.shape.t;
}

// Engine synaptic work without any padding.
inline std::int64_t useful_synaptic_ops(const LayerConfig& cfg) noexcept
{
    return cfg.shape.macs() * equivalent_steps(cfg);
}

inline LoopNest plan_loop_nest(const LayerConfig& cfg, const ParallelismConfig& par)
{
    par.validate();
    const auto& s = cfg.shape;
    LoopNest nest;
    nest.unrolled = {par.m, par.v, par.n, par.s};
    nest.t_e = equivalent_steps(cfg);
    nest.t_e_pad = static_cast<int>(round_up(nest.t_e, par.s));
    nest.c_o_pad = static_cast<int>(round_up(s.c_o, par.m));
    nest.w_o_pad = static_cast<int>(round_up(s.w_o, par.n));
    nest.c_i_pad = static_cast<int>(round_up(s.c_i, par.v));
    nest.membrane_buffer_entries = std::int64_t{par.m} * par.n;
    nest.loops = {{"c_o/m", nest.c_o_pad / par.m}, {"h_o", s.h_o},
                  {"w_o/n", nest.w_o_pad / par.n}, {"t/s", nest.t_e_pad / par.s},
                  {"k_h", s.k_h},                  {"k_w", s.k_w},
                  {"c_i/v", nest.c_i_pad / par.v}};
    auto pad_note = [&](const char* what, int real, int padded, int unit) {
        if (real != padded) {
            nest.notes.push_back(std::string(what) + " " + std::to_string(real) + " does not align with x" +
                                 std::to_string(unit) + " parallelism: " + std::to_string(padded - real) +
                                 " padded, efficiency " + std::to_string(100 * real / padded) + "%");
        }
    };
    pad_note("output channels", s.c_o, nest.c_o_pad, par.m);
    pad_note("output width", s.w_o, nest.w_o_pad, par.n);
    pad_note("equivalent time steps", nest.t_e, nest.t_e_pad, par.s);
    pad_note("input channels", s.c_i, nest.c_i_pad, par.v);
    return nest;
}

struct LoopIndex {
    std::int64_t co_tile, y, x_tile, t_tile, ky, kx, ci_tile;
};

// Visits the folded iteration space in dataflow order.
inline void visit_loop_nest(const LoopNest& nest, const std::function<void(const LoopIndex&)>& fn)
{
    LoopIndex i{};
    for (i.co_tile = 0; i.co_tile < nest.trip(0); ++i.co_tile)
        for (i.y = 0; i.y < nest.trip(1); ++i.y)
            for (i.x_tile = 0; i.x_tile < nest.trip(2); ++i.x_tile)
                for (i.t_tile = 0; i.t_tile < nest.trip(3); ++i.t_tile)
                    for (i.ky = 0; i.ky < nest.trip(4); ++i.ky)
                        for (i.kx = 0; i.kx < nest.trip(5); ++i.kx)
                            for (i.ci_tile = 0; i.ci_tile < nest.trip(6); ++i.ci_tile) fn(i);
}

// ------------------------------------------------------------------ padding

struct PadMetadata {
    int pad = 0;
    int padded_h = 0, padded_w = 0;
    int aligned_w = 0; // padded width rounded up to a multiple of n
    int valid_y0 = 0, valid_x0 = 0, valid_h = 0, valid_w = 0;
    std::int64_t valid_pixels = 0;
    std::int64_t total_pixels = 0; // padded_h * padded_w
};

struct PaddedStream {
    SpikeTensor tensor;
    PadMetadata meta;
};

// Zero-pads by `pad` on every side and records the valid region and the
// n-aligned row width used by the banked im2col buffer.
inline PaddedStream pad_stream(const SpikeTensor& in, int pad, int n)
{
    if (pad < 0 || n < 1) throw ValidationError("pad_stream: pad must be >= 0 and n >= 1");
    PadMetadata m;
    m.pad = pad;
    m.padded_h = static_cast<int>(in.h()) + 2 * pad;
    m.padded_w = static_cast<int>(in.w()) + 2 * pad;
    m.aligned_w = static_cast<int>(round_up(m.padded_w, n));
    m.valid_y0 = pad;
    m.valid_x0 = pad;
    m.valid_h = static_cast<int>(in.h());
    m.valid_w = static_cast<int>(in.w());
    m.valid_pixels = std::int64_t{m.valid_h} * m.valid_w;
    m.total_pixels = std::int64_t{m.padded_h} * m.padded_w;
    SpikeTensor out({in.t(), in.c(), static_cast<std::size_t>(m.padded_h), static_cast<std::size_t>(m.padded_w)},
                    in.bit_width());
    for (std::size_t t = 0; t < in.t(); ++t)
        for (std::size_t c = 0; c < in.c(); ++c)
            for (std::size_t y = 0; y < in.h(); ++y)
                for (std::size_t x = 0; x < in.w(); ++x)
                    out.set(t, c, y + static_cast<std::size_t>(pad), x + static_cast<std::size_t>(pad), in(t, c, y, x));
    return {std::move(out), m};
}

inline SpikeTensor crop_valid(const PaddedStream& p)
{
    const auto& m = p.meta;
    SpikeTensor out({p.tensor.t(), p.tensor.c(), static_cast<std::size_t>(m.valid_h), static_cast<std::size_t>(m.valid_w)},
                    p.tensor.bit_width());
    for (std::size_t t = 0; t < out.t(); ++t)
        for (std::size_t c = 0; c < out.c(); ++c)
            for (std::size_t y = 0; y < out.h(); ++y)
                for (std::size_t x = 0; x < out.w(); ++x)
                    out.set(t, c, y, x,
                            p.tensor(t, c, y + static_cast<std::size_t>(m.valid_y0), x + static_cast<std::size_t>(m.valid_x0)));
    return out;
}

// ------------------------------------------------------------------- im2col

// Banked layout of one padded input row: columns are split by stride phase
// and interleaved over n banks, bank = (col / stride) mod n. With stride 1
// this is plain col mod n.
struct BankLayout {
    int n = 1;
    int stride = 1;
    int padded_w = 1;

    int bank(int col) const noexcept { return (col / stride) % n; }
    int words_per_phase() const noexcept { return static_cast<int>(ceil_div(ceil_div(padded_w, stride), n)); }
    int offset(int col) const noexcept { return (col % stride) * words_per_phase() + (col / stride) / n; }
};

struct BankAddress {
    int bank = 0;
    int row = 0;    // padded input row
    int offset = 0; // word within the bank for that row
    int column = 0; // padded input column
    bool valid = true; // false for lanes beyond the output width
};

struct Im2colFetch {
    int ky = 0, kx = 0;
    std::vector<BankAddress> addresses; // one per output pixel lane
    std::vector<int> route;             // route[lane] = bank feeding that lane
};

// Fetches for the n output pixels (y_o, x0 .. x0+n-1): one per kernel tap.
// Throws if two lanes of one fetch hit the same bank.
inline std::vector<Im2colFetch> im2col_addresses(const LayerShape& s, int n, int y_o, int x0)
{
    const BankLayout layout{n, s.stride, s.w_i + 2 * s.pad};
    std::vector<Im2colFetch> fetches;
    fetches.reserve(static_cast<std::size_t>(s.k_h * s.k_w));
    std::vector<char> used(static_cast<std::size_t>(n));
    for (int ky = 0; ky < s.k_h; ++ky) {
        for (int kx = 0; kx < s.k_w; ++kx) {
            Im2colFetch f{ky, kx, {}, {}};
            std::fill(used.begin(), used.end(), 0);
            for (int lane = 0; lane < n; ++lane) {
                const int x = x0 + lane;
                const int col = x * s.stride + kx;
                BankAddress a{layout.bank(col), y_o * s.stride + ky, layout.offset(col), col, x < s.w_o};
                if (used[static_cast<std::size_t>(a.bank)]) {
                    throw Error("im2col: bank conflict on bank " + std::to_string(a.bank) + " at tap (" +
                                std::to_string(ky) + "," + std::to_string(kx) + ")");
                }
                used[static_cast<std::size_t>(a.bank)] = 1;
                f.route.push_back(a.bank);
                f.addresses.push_back(a);
            }
            fetches.push_back(std::move(f));
        }
    }
    return fetches;
}

// ------------------------------------------------------------------ arbiter

enum Stream : std::size_t { kSpikes = 0, kWeights = 1 };

struct ArbiterModel {
    std::array<std::int64_t, 2> capacity{16, 16}; // bytes per slow cycle (128-bit ports)
    std::array<bool, 2> enabled{true, true};

    std::int64_t total_capacity() const noexcept
    {
        return (enabled[0] ? capacity[0] : 0) + (enabled[1] ? capacity[1] : 0);
    }
};

struct ArbiterResult {
    std::int64_t cycles = 0; // slow clock
    std::array<std::int64_t, 2> demanded{};          // per stream
    std::array<std::int64_t, 2> granted{};           // per stream
    std::array<std::int64_t, 2> port_bytes{};        // per port
    std::array<std::int64_t, 2> port_busy_cycles{};  // per port
    std::array<std::int64_t, 2> max_grant{};         // largest single-cycle grant per port
    std::array<std::array<std::int64_t, 2>, 2> port_stream_bytes{}; // [port][stream]
    bool work_conserving = true; // no enabled port idle while demand was pending
};

// Demand-weighted round-robin over two read ports. Every cycle each enabled
// port serves the stream with the larger outstanding demand (ties alternate),
// and hands any leftover capacity to the other stream.
inline ArbiterResult run_arbiter(std::int64_t spike_bytes, std::int64_t weight_bytes, const ArbiterModel& arb)
{
    ArbiterResult r;
    r.demanded = {spike_bytes, weight_bytes};
    std::array<std::int64_t, 2> remaining{spike_bytes, weight_bytes};
    if (spike_bytes + weight_bytes > 0 && arb.total_capacity() <= 0)
        throw ValidationError("arbiter: demand present but no enabled port");
    std::size_t tie_next = kSpikes;

    auto grant = [&](std::size_t port, std::size_t stream, std::int64_t bytes) {
        remaining[stream] -= bytes;
        r.granted[stream] += bytes;
        r.port_bytes[port] += bytes;
        r.port_stream_bytes[port][stream] += bytes;
    };

    while (remaining[0] + remaining[1] > 0) {
        // Only one stream left: every remaining cycle is identical.
        if (remaining[0] == 0 || remaining[1] == 0) {
            const std::size_t st = remaining[0] > 0 ? kSpikes : kWeights;
            const std::int64_t cap = arb.total_capacity();
            const std::int64_t full = remaining[st] / cap;
            if (full > 0) {
                for (std::size_t p = 0; p < 2; ++p) {
                    if (!arb.enabled[p]) continue;
                    grant(p, st, full * arb.capacity[p]);
                    r.port_busy_cycles[p] += full;
                    r.max_grant[p] = std::max(r.max_grant[p], arb.capacity[p]);
                }
                r.cycles += full;
                continue;
            }
        }
        ++r.cycles;
        for (std::size_t p = 0; p < 2; ++p) {
            if (!arb.enabled[p]) continue;
            std::int64_t cap = arb.capacity[p];
            if (remaining[0] + remaining[1] == 0) {
                continue;
            }
            std::size_t first = remaining[kSpikes] > remaining[kWeights] ? kSpikes
                                : remaining[kWeights] > remaining[kSpikes] ? kWeights
                                                                          : tie_next;
            if (remaining[kSpikes] == remaining[kWeights]) tie_next = 1 - tie_next;
            std::int64_t used = 0;
            for (std::size_t st : {first, 1 - first}) {
                const std::int64_t g = std::min(cap - used, remaining[st]);
                if (g > 0) {
                    grant(p, st, g);
                    used += g;
                }
            }
            if (used > 0) ++r.port_busy_cycles[p];
            r.max_grant[p] = std::max(r.max_grant[p], used);
        }
    }
    for (std::size_t p = 0; p < 2; ++p) {
        // A port may only be idle during the final, partially filled cycle.
        if (arb.enabled[p] && r.port_busy_cycles[p] + 1 < r.cycles) r.work_conserving = false;
    }
    return r;
}

// ------------------------------------------------------------- perf report

struct PerfOptions {
    ArbiterModel arbiter;
    std::int64_t write_port_capacity = 16;      // bytes per slow cycle
    std::int64_t weight_cache_bytes = 128 * 1024;
    double dram_ceiling_gbs = 19.2;
    int fill_override = -1; // < 0: geometry default
};

struct LayerBandwidth {
    std::int64_t spike_bytes = 0;
    std::int64_t weight_bytes = 0;
    std::int64_t output_bytes = 0;
    bool weight_cache_hit = true;
    ArbiterResult arbiter;
    std::int64_t read_cycles_fast = 0;
    std::int64_t write_cycles_fast = 0;
    std::array<std::int64_t, 2> port_cycles_fast{};
};

inline std::int64_t bits_to_bytes(std::int64_t bits) { return ceil_div(bits, 8); }

// Byte volumes of one layer and the cycles the ports need to move them.
inline LayerBandwidth model_bandwidth(const LayerConfig& cfg, const ParallelismConfig& par, const PerfOptions& opt)
{
    const auto& s = cfg.shape;
    const auto nest = plan_loop_nest(cfg, par);
    LayerBandwidth b;
    const std::int64_t in_t = cfg.coding == Coding::direct8bit ? 1 : s.t;
    const std::int64_t per_pass = bits_to_bytes(in_t * s.c_i * s.h_i * s.w_i * cfg.input_bits());
    b.spike_bytes = per_pass * nest.trip(0);
    if (cfg.residual) {
        b.spike_bytes += bits_to_bytes(std::int64_t{s.t} * s.c_o * cfg.output_h() * cfg.output_w() *
                                       cfg.residual->shortcut_bit_width);
    }
    const std::int64_t tile_weights = std::int64_t{par.m} * nest.c_i_pad * s.k_h * s.k_w;
    b.weight_cache_hit = tile_weights <= opt.weight_cache_bytes;
    const std::int64_t reloads = b.weight_cache_hit ? 1 : nest.trip(1) * nest.trip(2) * nest.trip(3);
    // int8 weights, plus 4-byte bias per channel and one threshold word.
    b.weight_bytes = tile_weights * nest.trip(0) * reloads + std::int64_t{s.c_o} * 4 + 4;
    b.output_bytes = bits_to_bytes(std::int64_t{s.t} * s.c_o * cfg.output_h() * cfg.output_w() * cfg.output_bits());

    if (s.macs() == 0) return b;
    b.arbiter = run_arbiter(b.spike_bytes, b.weight_bytes, opt.arbiter);
    const std::int64_t ratio = par.f_fast_mhz / par.f_slow_mhz; // always 2
    b.read_cycles_fast = b.arbiter.cycles * ratio;
    b.port_cycles_fast = {b.arbiter.port_busy_cycles[0] * ratio, b.arbiter.port_busy_cycles[1] * ratio};
    b.write_cycles_fast = ceil_div(b.output_bytes, opt.write_port_capacity) * ratio;
    return b;
}

struct LayerPerf {
    std::string name;
    LoopNest nest;
    std::int64_t compute_cycles = 0; // fast clock
    std::int64_t fill_cycles = 0;
    LayerBandwidth bandwidth;
    std::int64_t modeled_cycles = 0;
    std::int64_t useful_ops = 0;
    std::int64_t padded_ops = 0;
    double latency_us = 0;
    double achieved_gops = 0;
    double utilization = 0;
    bool bandwidth_bound = false;
    std::int64_t ann_flops = 0;
};

inline constexpr const char* kPerfDisclaimer =
    "Modeled estimate (approximate). Board-level measured latencies and power draw depend on DRAM, "
    "DMA and host effects that this model does not capture; no numeric agreement with such "
    "measurements is claimed.";

struct PerfReport {
    ParallelismConfig par;
    std::int64_t dsp_count = 0;
    std::int64_t peak_ops_per_us = 0; // m*v*n*s*f_fast_mhz, exact
    double peak_gops = 0;
    double gops_per_dsp = 0;
    double port_bandwidth_gbs = 0;
    double dram_ceiling_gbs = 19.2;
    std::vector<LayerPerf> layers;
    std::int64_t total_cycles = 0;
    double latency_us = 0;
    std::int64_t useful_ops = 0;
    double achieved_gops = 0;
    double utilization = 0;
    std::int64_t ann_flops = 0;
    double ann_equiv_gops = 0; // ann_flops * T / latency, informational
    bool approximate = true;
    std::string note = kPerfDisclaimer;
};

// Peak figures only: peak = m*v*n*s*f_fast, DSPs = (m/4)*n*(v/4)*s.
inline PerfReport peak_report(const ParallelismConfig& par, const PerfOptions& opt = {})
{
    par.validate();
    const auto g = EngineGeometry::from(par);
    PerfReport r;
    r.par = par;
    r.dsp_count = g.dsp_count();
    r.peak_ops_per_us = g.ops_per_cycle() * par.f_fast_mhz;
    r.peak_gops = static_cast<double>(r.peak_ops_per_us) / 1000.0;
    r.gops_per_dsp = static_cast<double>(r.peak_ops_per_us) / 1000.0 / static_cast<double>(r.dsp_count);
    // Two read ports plus one write port, bytes per slow cycle.
    const double bytes_per_cycle = static_cast<double>(opt.arbiter.total_capacity() + opt.write_port_capacity);
    r.port_bandwidth_gbs = bytes_per_cycle * par.f_slow_mhz / 1000.0;
    r.dram_ceiling_gbs = opt.dram_ceiling_gbs;
    if (r.port_bandwidth_gbs > opt.dram_ceiling_gbs)
        throw ValidationError("configured port bandwidth exceeds the DRAM ceiling");
    return r;
}

inline LayerPerf estimate_layer(const LayerConfig& cfg, const ParallelismConfig& par, const PerfOptions& opt = {})
{
    auto g = EngineGeometry::from(par);
    if (opt.fill_override >= 0) g.pipeline_fill = opt.fill_override;
    LayerPerf lp;
    lp.name = cfg.name;
    lp.nest = plan_loop_nest(cfg, par);
    lp.compute_cycles = lp.nest.iterations();
    lp.fill_cycles = g.pipeline_fill;
    lp.bandwidth = model_bandwidth(cfg, par, opt);
    const auto bw = std::max(lp.bandwidth.read_cycles_fast, lp.bandwidth.write_cycles_fast);
    lp.bandwidth_bound = bw > lp.compute_cycles;
    lp.modeled_cycles = std::max(lp.compute_cycles, bw) + lp.fill_cycles;
    lp.useful_ops = useful_synaptic_ops(cfg);
    lp.padded_ops = lp.nest.padded_ops();
    lp.latency_us = static_cast<double>(lp.modeled_cycles) / par.f_fast_mhz;
    lp.achieved_gops = lp.latency_us > 0 ? static_cast<double>(lp.useful_ops) / lp.latency_us / 1000.0 : 0.0;
    lp.utilization = static_cast<double>(lp.useful_ops) /
                     (static_cast<double>(g.ops_per_cycle()) * static_cast<double>(lp.modeled_cycles));
    lp.ann_flops = cfg.ann_flops;
    return lp;
}

inline PerfReport estimate(const NetworkDesc& net, const ParallelismConfig& par, const PerfOptions& opt = {})
{
    auto r = peak_report(par, opt);
    for (const auto& layer : net.layers) {
        r.layers.push_back(estimate_layer(layer.config, par, opt));
        const auto& lp = r.layers.back();
        r.total_cycles += lp.modeled_cycles;
        r.useful_ops += lp.useful_ops;
        r.ann_flops += lp.ann_flops;
    }
    r.latency_us = static_cast<double>(r.total_cycles) / par.f_fast_mhz;
    if (r.latency_us > 0) {
        r.achieved_gops = static_cast<double>(r.useful_ops) / r.latency_us / 1000.0;
        r.ann_equiv_gops = static_cast<double>(r.ann_flops) * net.time_steps() / r.latency_us / 1000.0;
    }
    r.utilization = r.achieved_gops / r.peak_gops;
    return r;
}

inline nlohmann::json to_json(const PerfReport& r)
{
    using nlohmann::json;
    json layers = json::array();
    for (const auto& l : r.layers) {
        json loops = json::array();
        for (const auto& lp : l.nest.loops) loops.push_back({{"name", lp.name}, {"trip", lp.trip}});
        layers.push_back({{"name", l.name},
                          {"loops", loops},
                          {"notes", l.nest.notes},
                          {"membrane_buffer_entries", l.nest.membrane_buffer_entries},
                          {"compute_cycles", l.compute_cycles},
                          {"fill_cycles", l.fill_cycles},
                          {"read_cycles", l.bandwidth.read_cycles_fast},
                          {"write_cycles", l.bandwidth.write_cycles_fast},
                          {"port_cycles", l.bandwidth.port_cycles_fast},
                          {"spike_bytes", l.bandwidth.spike_bytes},
                          {"weight_bytes", l.bandwidth.weight_bytes},
                          {"output_bytes", l.bandwidth.output_bytes},
                          {"weight_cache_hit", l.bandwidth.weight_cache_hit},
                          {"bandwidth_bound", l.bandwidth_bound},
                          {"modeled_cycles", l.modeled_cycles},
                          {"useful_ops", l.useful_ops},
                          {"padded_ops", l.padded_ops},
                          {"latency_us", l.latency_us},
                          {"achieved_gops", l.achieved_gops},
                          {"utilization", l.utilization}});
    }
    return json{{"approximate", r.approximate},
                {"note", r.note},
                {"config", {{"m", r.par.m}, {"v", r.par.v}, {"n", r.par.n}, {"s", r.par.s},
                            {"f_fast_mhz", r.par.f_fast_mhz}, {"f_slow_mhz", r.par.f_slow_mhz}}},
                {"peak", {{"dsp_count", r.dsp_count},
                          {"peak_ops_per_us", r.peak_ops_per_us},
                          {"peak_gops", r.peak_gops},
                          {"gops_per_dsp", r.gops_per_dsp},
                          {"port_bandwidth_gbs", r.port_bandwidth_gbs},
                          {"dram_ceiling_gbs", r.dram_ceiling_gbs}}},
                {"layers", layers},
                {"totals", {{"modeled_cycles", r.total_cycles},
                            {"latency_us", r.latency_us},
                            {"useful_ops", r.useful_ops},
                            {"achieved_gops", r.achieved_gops},
                            {"utilization", r.utilization},
                            {"ann_flops", r.ann_flops},
                            {"ann_equiv_gops", r.ann_equiv_gops}}}};
}

} // namespace snnaccel
