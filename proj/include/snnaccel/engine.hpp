// engine.hpp - spike computing engine model.
//
// Output-stationary systolic array: SA_h = M/4 rows of PEs by SA_w = N
// columns; each PE holds PE_w = S columns of PE_h = V/4 cascaded crossbar
// cells. A cell takes two binary spikes and a 2x4 block of int8 weights and
// adds into four 12-bit SIMD lanes. Slow-domain words are split in half by
// the gearbox, so one V-wide input block is consumed as two half-blocks of
// V/2 channels, each pushed through the PE_h-deep cascade.
//
// Values are exact; cycle counts follow the ledger described at run_tile().
#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "fixed_point.hpp"
#include "model_ir.hpp"

namespace snnaccel {

struct EngineGeometry {
    int sa_h = 4;  // M / 4
    int sa_w = 8;  // N
    int pe_h = 4;  // V / 4
    int pe_w = 4;  // S
    // Systolic skew charged once per tile; a declared approximation that
    // affects cycle counts only.
    int pipeline_fill = 16;

    static EngineGeometry from(const ParallelismConfig& par)
    {
        par.validate();
        EngineGeometry g{par.m / 4, par.n, par.v / 4, par.s, 0};
        g.pipeline_fill = g.sa_h + g.sa_w + g.pe_h;
        return g;
    }

    int m() const noexcept { return sa_h * 4; }
    int v() const noexcept { return pe_h * 4; }
    int n() const noexcept { return sa_w; }
    int s() const noexcept { return pe_w; }

    std::int64_t dsp_count() const noexcept { return std::int64_t{sa_h} * sa_w * pe_h * pe_w; }
    // Synaptic operations per fast-clock cycle: m * v * n * s.
    std::int64_t ops_per_cycle() const noexcept { return std::int64_t{m()} * v() * n() * s(); }
};

// --- gearbox -------------------------------------------------------------

// Slow-to-fast: each 2k-element word becomes two k-element words, first
// half first.
template <typename T>
std::vector<std::vector<T>> gearbox_in(std::span<const std::vector<T>> slow)
{
    std::vector<std::vector<T>> fast;
    fast.reserve(slow.size() * 2);
    for (const auto& word : slow) {
        if (word.size() % 2 != 0) throw ValidationError("gearbox_in: slow word width must be even");
        const auto half = static_cast<std::ptrdiff_t>(word.size() / 2);
        fast.emplace_back(word.begin(), word.begin() + half);
        fast.emplace_back(word.begin() + half, word.end());
    }
    return fast;
}

// Fast-to-slow: consecutive pairs of k-element words are concatenated.
template <typename T>
std::vector<std::vector<T>> gearbox_out(std::span<const std::vector<T>> fast)
{
    if (fast.size() % 2 != 0) throw ValidationError("gearbox_out: odd number of fast words");
    std::vector<std::vector<T>> slow;
    slow.reserve(fast.size() / 2);
    for (std::size_t i = 0; i < fast.size(); i += 2) {
        auto word = fast[i];
        word.insert(word.end(), fast[i + 1].begin(), fast[i + 1].end());
        slow.push_back(std::move(word));
    }
    return slow;
}

// --- blocks and tiles ----------------------------------------------------

// V x N x S binary spikes, index (vi, ni, si).
struct SpikeBlock {
    int v = 0, n = 0, s = 0;
    std::vector<std::uint8_t> bits;

    SpikeBlock() = default;
    SpikeBlock(int v_, int n_, int s_) : v(v_), n(n_), s(s_), bits(static_cast<std::size_t>(v_ * n_ * s_), 0) {}
    std::uint8_t& at(int vi, int ni, int si) { return bits[static_cast<std::size_t>((vi * n + ni) * s + si)]; }
    std::uint8_t at(int vi, int ni, int si) const { return bits[static_cast<std::size_t>((vi * n + ni) * s + si)]; }
};

// M x V int8 weights, index (mi, vi).
struct WeightBlock {
    int m = 0, v = 0;
    std::vector<std::int8_t> w;

    WeightBlock() = default;
    WeightBlock(int m_, int v_) : m(m_), v(v_), w(static_cast<std::size_t>(m_ * v_), 0) {}
    std::int8_t& at(int mi, int vi) { return w[static_cast<std::size_t>(mi * v + vi)]; }
    std::int8_t at(int mi, int vi) const { return w[static_cast<std::size_t>(mi * v + vi)]; }
};

// M x N x S accumulators, each within the 12-bit engine range.
struct PsumTile {
    int m = 0, n = 0, s = 0;
    std::vector<std::int32_t> values;
    std::int64_t valid_at_cycle = 0;

    PsumTile() = default;
    PsumTile(int m_, int n_, int s_) : m(m_), n(n_), s(s_), values(static_cast<std::size_t>(m_ * n_ * s_), 0) {}
    std::int32_t& at(int mi, int ni, int si) { return values[static_cast<std::size_t>((mi * n + ni) * s + si)]; }
    std::int32_t at(int mi, int ni, int si) const { return values[static_cast<std::size_t>((mi * n + ni) * s + si)]; }
};

// One DSP slice used as a 2x4 synaptic crossbar.
struct CrossbarCell {
    std::array<std::uint8_t, 2> spikes{};
    std::array<std::int8_t, 8> weights{}; // weights[input * 4 + lane]

    // acc[c] = cascade_in[c] + (spike0 ? w0c : 0) + (spike1 ? w1c : 0)
    std::array<std::int32_t, 4> eval(const std::array<std::int32_t, 4>& cascade_in) const
    {
        std::array<std::int32_t, 4> out{};
        for (int c = 0; c < 4; ++c) {
            std::int64_t acc = cascade_in[static_cast<std::size_t>(c)];
            if (spikes[0]) acc += weights[static_cast<std::size_t>(c)];
            if (spikes[1]) acc += weights[static_cast<std::size_t>(4 + c)];
            out[static_cast<std::size_t>(c)] = check_engine(acc, "crossbar cascade");
        }
        return out;
    }
};

// tile[m][n][s] += sum_v spike[v][n][s] * weight[m][v], computed through the
// cell cascade. The two gearbox halves of the block are folded into this one
// call.
inline void systolic_step(const SpikeBlock& spikes, const WeightBlock& weights, PsumTile& tile,
                          const EngineGeometry& g)
{
    if (spikes.v != g.v() || spikes.n != g.n() || spikes.s != g.s() || weights.m != g.m() ||
        weights.v != g.v() || tile.m != g.m() || tile.n != g.n() || tile.s != g.s()) {
        throw ValidationError("systolic_step: block shapes do not match engine geometry");
    }
    // An all-zero block adds nothing; skipping it changes neither values nor
    // the cycle ledger, which is charged per block in run_tile().
    if (std::find(spikes.bits.begin(), spikes.bits.end(), std::uint8_t{1}) == spikes.bits.end()) return;
    const int half = g.v() / 2;
    for (int row = 0; row < g.sa_h; ++row) {
        for (int col = 0; col < g.sa_w; ++col) {
            for (int lane_col = 0; lane_col < g.pe_w; ++lane_col) {
                for (int phase = 0; phase < 2; ++phase) {
                    std::array<std::int32_t, 4> cascade{};
                    for (int cell_idx = 0; cell_idx < g.pe_h; ++cell_idx) {
                        CrossbarCell cell;
                        const int v0 = phase * half + 2 * cell_idx;
                        for (int in = 0; in < 2; ++in) {
                            cell.spikes[static_cast<std::size_t>(in)] = spikes.at(v0 + in, col, lane_col);
                            for (int c = 0; c < 4; ++c)
                                cell.weights[static_cast<std::size_t>(in * 4 + c)] = weights.at(row * 4 + c, v0 + in);
                        }
                        cascade = cell.eval(cascade);
                    }
                    for (int c = 0; c < 4; ++c) {
                        auto& acc = tile.at(row * 4 + c, col, lane_col);
                        acc = check_engine(std::int64_t{acc} + cascade[static_cast<std::size_t>(c)], "psum accumulator");
                    }
                }
            }
        }
    }
}

struct TileCycles {
    std::int64_t accumulation = 0; // one per V-block
    std::int64_t fill = 0;
    std::int64_t total() const noexcept { return accumulation + fill; }
};

struct TileResult {
    PsumTile tile;
    TileCycles cycles;
};

// Accumulates a whole K_h*K_w*C_i/V block stream into one tile. The cycle
// ledger charges one fast cycle per block plus the pipeline fill; it does not
// depend on spike content.
inline TileResult run_tile(std::span<const SpikeBlock> spike_stream, std::span<const WeightBlock> weight_stream,
                           const EngineGeometry& g)
{
    if (spike_stream.size() != weight_stream.size())
        throw ValidationError("run_tile: spike and weight streams differ in length (" +
                              std::to_string(spike_stream.size()) + " vs " +
                              std::to_string(weight_stream.size()) + ")");
    TileResult r{PsumTile(g.m(), g.n(), g.s()), {}};
    for (std::size_t i = 0; i < spike_stream.size(); ++i) systolic_step(spike_stream[i], weight_stream[i], r.tile, g);
    r.cycles.accumulation = static_cast<std::int64_t>(spike_stream.size());
    r.cycles.fill = g.pipeline_fill;
    r.tile.valid_at_cycle = r.cycles.total();
    return r;
}

// S psums of one (output channel, pixel) pair as handed to postproc.
struct PsumRecord {
    int m = 0;
    int n = 0;
    std::vector<std::int32_t> lanes; // one per equivalent time step in the tile
    bool operator==(const PsumRecord&) const = default;
};

struct CollectedPsums {
    std::vector<PsumRecord> records;
    std::int64_t slow_words = 0; // after 2:1 deserialization back to the slow clock
};

// Emission order: pixel-group major (n outer), channels aligned across the
// M/4 PE rows (m inner).
inline CollectedPsums collect_psums(const PsumTile& tile)
{
    CollectedPsums out;
    out.records.reserve(static_cast<std::size_t>(tile.m * tile.n));
    for (int n = 0; n < tile.n; ++n) {
        for (int m = 0; m < tile.m; ++m) {
            PsumRecord r{m, n, std::vector<std::int32_t>(static_cast<std::size_t>(tile.s))};
            for (int s = 0; s < tile.s; ++s) r.lanes[static_cast<std::size_t>(s)] = tile.at(m, n, s);
            out.records.push_back(std::move(r));
        }
    }
    out.slow_words = ceil_div(static_cast<std::int64_t>(out.records.size()), 2);
    return out;
}

} // namespace snnaccel
