// fixtures.hpp - seeded generators for legal layers, networks and inputs,
// plus named preset networks.
//
// Random draws use mt19937_64 with explicit range reduction so that a seed
// produces the same fixture with every standard library.
#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"
#include "fixed_point.hpp"
#include "model_ir.hpp"
#include "oracle.hpp"
#include "tensor.hpp"

namespace snnaccel::fixtures {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // Inclusive range.
    int uniform(int lo, int hi)
    {
        if (hi <= lo) return lo;
        const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<int>(gen_() % span);
    }

    bool chance(int per_mille) { return uniform(0, 999) < per_mille; }

    template <typename T, std::size_t N>
    T pick(const std::array<T, N>& items)
    {
        return items[static_cast<std::size_t>(uniform(0, static_cast<int>(N) - 1))];
    }

    std::uint64_t next() { return gen_(); }

private:
    std::mt19937_64 gen_;
};

// Each element is nonzero with probability density/1000; nonzero values are
// uniform over 1 .. 2^bits - 1.
inline SpikeTensor random_spikes(const Dims4& dims, int bits, int density_per_mille, Rng& rng)
{
    SpikeTensor s(dims, bits);
    const int top = (1 << bits) - 1;
    for (std::size_t t = 0; t < dims[0]; ++t)
        for (std::size_t c = 0; c < dims[1]; ++c)
            for (std::size_t y = 0; y < dims[2]; ++y)
                for (std::size_t x = 0; x < dims[3]; ++x)
                    if (rng.chance(density_per_mille)) s.set(t, c, y, x, static_cast<unsigned>(rng.uniform(1, top)));
    return s;
}

inline WeightTensor random_weights(const Dims4& dims, int w_max, int zero_per_mille, Rng& rng)
{
    WeightTensor w(dims);
    for (auto& v : w.values()) v = rng.chance(zero_per_mille) ? 0 : static_cast<std::int8_t>(rng.uniform(-w_max, w_max));
    return w;
}

// Largest |w| for which one binary plane can never leave the 12-bit engine
// range: k_h * k_w * c_i * |w| <= 2047.
inline int engine_weight_cap(const LayerShape& s)
{
    const std::int64_t taps = std::int64_t{s.k_h} * s.k_w * s.c_i;
    if (taps > 2047) throw ValidationError("fixture: k_h*k_w*c_i exceeds 2047, no weight fits the engine range");
    return static_cast<int>(std::min<std::int64_t>(127, 2047 / taps));
}

namespace detail {

inline double mean_value(const SpikeTensor& s)
{
    double sum = 0;
    for (auto v : s.values()) sum += v;
    return s.size() ? sum / static_cast<double>(s.size()) : 0.0;
}

// Weights plus a threshold scaled to the typical current, bias within
// +-theta/2.
inline void draw_layer_params(Layer& layer, double mean_in, int w_max, int zero_per_mille, Rng& rng)
{
    auto& cfg = layer.config;
    const auto& s = cfg.shape;
    layer.weights = random_weights(cfg.weight_dims(), w_max, zero_per_mille, rng);
    const double typical = (w_max + 1) * 0.5 * (1000 - zero_per_mille) / 1000.0 * s.k_h * s.k_w * s.c_i * mean_in *
                           (1 << cfg.post_shift_left);
    // Weights are zero-mean, so currents spread around 0 with a width well
    // below `typical`; thresholds sit inside that spread.
    const int theta_hi = std::clamp(static_cast<int>(typical / 3), 1, 4096);
    cfg.neuron.threshold = rng.uniform(std::max(1, theta_hi / 8), theta_hi);
    cfg.neuron.bias.resize(static_cast<std::size_t>(s.c_o));
    for (auto& b : cfg.neuron.bias) b = rng.uniform(-cfg.neuron.threshold / 2, cfg.neuron.threshold / 2);
}

} // namespace detail

// Draws weights, threshold and bias for `layer` so that running it on
// `input` stays inside every fixed-point range. Starts from the engine cap
// and shrinks magnitude (then density) until the reference run succeeds.
inline void fill_layer_params(Layer& layer, const SpikeTensor& input, const SpikeTensor* shortcut, Rng& rng)
{
    int w_max = engine_weight_cap(layer.config.shape);
    int zero_per_mille = rng.uniform(0, 500);
    const double mean_in = detail::mean_value(input);
    for (int attempt = 0; attempt < 40; ++attempt) {
        detail::draw_layer_params(layer, mean_in, w_max, zero_per_mille, rng);
        try {
            (void)oracle::run_layer(layer.config, layer.weights, input, shortcut);
            return;
        }
        catch (const OverflowError&) {
            if (w_max > 1)
                w_max = std::max(1, w_max / 2);
            else
                zero_per_mille = std::min(1000, (zero_per_mille + 1000) / 2 + 1);
        }
    }
    throw Error("fixture: could not fit layer parameters into the fixed-point ranges");
}

enum class ResidualKind { none, add_saturate2, add_shift2, add_extend4, iand };

struct LayerCaseSpec {
    int k = 3;
    int stride = 1;
    int pad = 1;
    int t = 4;
    Coding coding = Coding::binary_spike;
    NeuronType neuron = NeuronType::IF;
    PoolMode pool = PoolMode::none;
    PolicyMode pool_policy = PolicyMode::saturate;
    ResidualKind residual = ResidualKind::none;
    int max_hw = 12;
    int max_channels = 16;
};

struct Case {
    std::string label;
    NetworkDesc net;
    SpikeTensor input;
    ParallelismConfig par;
};

inline const std::array<ParallelismConfig, 4>& case_parallelisms()
{
    static const std::array<ParallelismConfig, 4> pars{
        ParallelismConfig::make(16, 16, 8, 4, 500), ParallelismConfig::make(8, 8, 4, 4, 500),
        ParallelismConfig::make(4, 4, 2, 4, 500), ParallelismConfig::make(32, 16, 8, 4, 500)};
    return pars;
}

inline std::string describe(const LayerCaseSpec& c)
{
    std::string r = "k" + std::to_string(c.k) + " s" + std::to_string(c.stride) + " p" + std::to_string(c.pad) + " T" +
                    std::to_string(c.t) + " " + std::string(to_string(c.coding)) + " " +
                    std::string(to_string(c.neuron));
    if (c.pool != PoolMode::none) r += " " + std::string(to_string(c.pool)) + "/" + std::string(to_string(c.pool_policy));
    switch (c.residual) {
    case ResidualKind::none: break;
    case ResidualKind::add_saturate2: r += " ADD/saturate2"; break;
    case ResidualKind::add_shift2: r += " ADD/shift2"; break;
    case ResidualKind::add_extend4: r += " ADD/extend4"; break;
    case ResidualKind::iand: r += " IAND"; break;
    }
    return r;
}

// Deterministic sweep over the discrete layer options; consecutive indices
// vary every option so any 100 consecutive cases cover all of them.
inline LayerCaseSpec covering_spec(int i)
{
    static constexpr std::array<int, 4> ks{1, 3, 5, 7};
    static constexpr std::array<int, 4> ts{1, 2, 4, 8};
    static constexpr std::array<Coding, 4> codings{Coding::binary_spike, Coding::spike2bit, Coding::spike4bit,
                                                   Coding::direct8bit};
    static constexpr std::array<NeuronType, 3> neurons{NeuronType::IF, NeuronType::LIF, NeuronType::RMP};
    LayerCaseSpec c;
    c.k = ks[static_cast<std::size_t>(i % 4)];
    c.stride = 1 + (i / 4) % 2;
    c.pad = (i / 2) % 4;
    c.t = ts[static_cast<std::size_t>((i / 3) % 4)];
    c.coding = codings[static_cast<std::size_t>((i / 5) % 4)];
    c.neuron = neurons[static_cast<std::size_t>(i % 3)];
    switch (i % 7) {
    case 1: c.pool = PoolMode::max2x2; break;
    case 3: c.pool = PoolMode::avg2x2; c.pool_policy = PolicyMode::saturate; break;
    case 5: c.pool = PoolMode::avg2x2; c.pool_policy = PolicyMode::shift; break;
    default: break;
    }
    if (c.pool == PoolMode::none) {
        static constexpr std::array<ResidualKind, 5> kinds{ResidualKind::none, ResidualKind::add_saturate2,
                                                          ResidualKind::add_shift2, ResidualKind::add_extend4,
                                                          ResidualKind::iand};
        c.residual = kinds[static_cast<std::size_t>((i / 7) % 5)];
    }
    return c;
}

namespace detail {

// Picks an input extent in [lo, hi] whose output extent is >= 1 and, when
// `even` is set, even and >= 2.
inline int pick_extent(Rng& rng, int k, int stride, int pad, int lo, int hi, bool even)
{
    lo = std::max(lo, std::max(1, k - 2 * pad));
    hi = std::max(hi, lo + 2 * stride + 1);
    std::vector<int> ok;
    for (int h = lo; h <= hi; ++h) {
        const int o = (h + 2 * pad - k) / stride + 1;
        if (o >= 1 && (!even || (o >= 2 && o % 2 == 0))) ok.push_back(h);
    }
    if (ok.empty()) throw Error("fixture: no legal input extent");
    return ok[static_cast<std::size_t>(rng.uniform(0, static_cast<int>(ok.size()) - 1))];
}

inline int density_for(Rng& rng) { return rng.uniform(100, 600); }

} // namespace detail

// One-layer network (residual cases take the network input as shortcut).
inline Case make_layer_case(LayerCaseSpec spec, std::uint64_t seed)
{
    Rng rng(seed);
    if (spec.residual != ResidualKind::none) {
        if (spec.coding == Coding::direct8bit) spec.coding = Coding::spike2bit;
        if (spec.residual == ResidualKind::iand) spec.coding = Coding::binary_spike;
        spec.stride = 1;
        spec.pad = (spec.k - 1) / 2;
        spec.pool = PoolMode::none;
    }
    Case c;
    c.label = describe(spec);
    const auto& pars = case_parallelisms();
    c.par = pars[static_cast<std::size_t>(rng.uniform(0, static_cast<int>(pars.size()) - 1))];

    const bool even = spec.pool != PoolMode::none;
    const int h = detail::pick_extent(rng, spec.k, spec.stride, spec.pad, 1, spec.max_hw, even);
    const int w = detail::pick_extent(rng, spec.k, spec.stride, spec.pad, 1, spec.max_hw, even);
    const int ci_cap = std::min(spec.max_channels, 2047 / (spec.k * spec.k));
    const int c_i = spec.coding == Coding::direct8bit ? rng.uniform(1, 3) : rng.uniform(1, ci_cap);
    const int c_o = spec.residual != ResidualKind::none ? c_i : rng.uniform(1, spec.max_channels);

    Layer layer;
    auto& cfg = layer.config;
    cfg.name = "case";
    cfg.shape = LayerShape::conv(spec.t, c_i, h, w, c_o, spec.k, spec.stride, spec.pad);
    cfg.coding = spec.coding;
    cfg.neuron.type = spec.neuron;
    cfg.neuron.leak_shift = spec.neuron == NeuronType::LIF ? rng.uniform(1, 4) : 0;
    cfg.pool = spec.pool;
    cfg.pool_policy = spec.pool_policy;
    cfg.ann_flops = 2 * cfg.shape.macs();
    if (spec.residual != ResidualKind::none) {
        ResidualConfig r;
        r.source = -1;
        r.shortcut_bit_width = cfg.input_bits();
        r.function = spec.residual == ResidualKind::iand ? ResidualFunction::iand : ResidualFunction::add;
        r.overflow_policy = spec.residual == ResidualKind::add_shift2    ? OverflowPolicy::shift2
                            : spec.residual == ResidualKind::add_extend4 ? OverflowPolicy::extend4
                                                                         : OverflowPolicy::saturate2;
        r.iand_order = rng.chance(500) ? IandOrder::negate_backbone : IandOrder::negate_shortcut;
        cfg.residual = r;
    }
    c.input = random_spikes(cfg.input_dims(), cfg.input_bits(), detail::density_for(rng), rng);
    fill_layer_params(layer, c.input, cfg.residual ? &c.input : nullptr, rng);
    c.net.name = "layer-case";
    c.net.layers.push_back(std::move(layer));
    if (auto d = validate_chain(c.net); !d.empty()) throw Error("fixture: generated illegal layer: " + d.front());
    return c;
}

// Random chain of 2..4 legal layers with residuals where shapes allow.
inline Case random_network_case(std::uint64_t seed)
{
    Rng rng(seed);
    static constexpr std::array<int, 4> ts{1, 2, 4, 8};
    static constexpr std::array<int, 4> ks{1, 3, 5, 7};
    static constexpr std::array<Coding, 4> codings{Coding::binary_spike, Coding::spike2bit, Coding::spike4bit,
                                                   Coding::direct8bit};
    static constexpr std::array<NeuronType, 3> neurons{NeuronType::IF, NeuronType::LIF, NeuronType::RMP};
    static constexpr std::array<OverflowPolicy, 3> policies{OverflowPolicy::saturate2, OverflowPolicy::shift2,
                                                            OverflowPolicy::extend4};
    Case c;
    c.label = "random network seed " + std::to_string(seed);
    const auto& pars = case_parallelisms();
    c.par = pars[static_cast<std::size_t>(rng.uniform(0, static_cast<int>(pars.size()) - 1))];
    c.net.name = "random-" + std::to_string(seed);
    const int t = rng.pick(ts);
    const int layers = rng.uniform(2, 4);

    int h = rng.uniform(6, 12), w = rng.uniform(6, 12);
    int c_prev = rng.uniform(1, 8);
    Coding coding = rng.pick(codings);
    if (coding == Coding::direct8bit) c_prev = rng.uniform(1, 3);

    std::vector<SpikeTensor> outputs;
    outputs.reserve(static_cast<std::size_t>(layers));
    for (int i = 0; i < layers; ++i) {
        Layer layer;
        auto& cfg = layer.config;
        cfg.name = "conv" + std::to_string(i);
        cfg.coding = coding;
        if (i > 0) cfg.post_shift_left = c.net.layers.back().config.output_shifted() ? 1 : 0;
        const int in_bits = coding_bits(coding);

        int k = rng.pick(ks);
        while (k > 1 && k > std::min(h, w) + 2) k -= 2;
        const bool residual = i > 0 && in_bits != 8 && rng.chance(350);
        int stride = residual ? 1 : rng.uniform(1, 2);
        int pad = residual ? (k - 1) / 2 : rng.uniform(0, 3);
        if (k > h + 2 * pad || k > w + 2 * pad) pad = (k + 1) / 2;
        auto out = derive_output_shape(h, w, k, stride, pad);
        const int c_o = residual ? c_prev : rng.uniform(1, 12);
        cfg.shape = LayerShape{t, h, w, out.h, out.w, k, k, stride, pad, c_prev, c_o};
        cfg.neuron.type = rng.pick(neurons);
        cfg.neuron.leak_shift = cfg.neuron.type == NeuronType::LIF ? rng.uniform(1, 4) : 0;
        cfg.ann_flops = 2 * cfg.shape.macs();
        if (!residual && out.h % 2 == 0 && out.w % 2 == 0 && rng.chance(400)) {
            cfg.pool = rng.chance(500) ? PoolMode::max2x2 : PoolMode::avg2x2;
            cfg.pool_policy = rng.chance(500) ? PolicyMode::shift : PolicyMode::saturate;
        }
        if (residual) {
            ResidualConfig r;
            r.source = i - 1;
            r.shortcut_bit_width = in_bits;
            r.function = in_bits == 1 && rng.chance(400) ? ResidualFunction::iand : ResidualFunction::add;
            r.overflow_policy = rng.pick(policies);
            r.iand_order = rng.chance(500) ? IandOrder::negate_backbone : IandOrder::negate_shortcut;
            cfg.residual = r;
        }
        if (std::int64_t{k} * k * c_prev > 2047) throw Error("fixture: generated layer exceeds engine range");

        if (i == 0) c.input = random_spikes(cfg.input_dims(), in_bits, detail::density_for(rng), rng);
        const SpikeTensor& in = i == 0 ? c.input : outputs.back();
        const SpikeTensor* sc = residual ? &outputs.back() : nullptr;
        fill_layer_params(layer, in, sc, rng);
        outputs.push_back(oracle::run_layer(cfg, layer.weights, in, sc).output);

        h = cfg.output_h();
        w = cfg.output_w();
        c_prev = c_o;
        coding = *coding_for_bits(cfg.output_bits());
        c.net.layers.push_back(std::move(layer));
    }
    if (auto d = validate_chain(c.net); !d.empty()) throw Error("fixture: generated illegal network: " + d.front());
    return c;
}

// ------------------------------------------------------------------ presets

inline std::vector<std::string> preset_names() { return {"tiny", "sew-block", "avgpool-shift", "snn7-cifar10"}; }

namespace detail {

struct LayerSketch {
    std::string name;
    int c_o, k, stride, pad;
    NeuronType neuron;
    PoolMode pool;
    PolicyMode pool_policy;
    std::optional<ResidualConfig> residual;

    LayerSketch(std::string name_, int c_o_, int k_, int stride_, int pad_, NeuronType neuron_ = NeuronType::IF,
                PoolMode pool_ = PoolMode::none, PolicyMode policy_ = PolicyMode::saturate,
                std::optional<ResidualConfig> residual_ = std::nullopt)
        : name(std::move(name_)), c_o(c_o_), k(k_), stride(stride_), pad(pad_), neuron(neuron_), pool(pool_),
          pool_policy(policy_), residual(std::move(residual_))
    {
    }
};

// Builds a chain from sketches. With `fit`, parameters are fitted on a seeded
// input so the preset runs in range on it; without, weights are drawn at the
// engine cap and only the configuration is meaningful (enough for perf).
inline NetworkDesc build_chain(std::string name, int t, Coding coding, int c_i, int h, int w,
                               const std::vector<LayerSketch>& sketches, std::uint64_t seed, bool fit)
{
    Rng rng(seed);
    NetworkDesc net;
    net.name = std::move(name);
    SpikeTensor input;
    std::vector<SpikeTensor> outputs;
    outputs.reserve(sketches.size());
    for (std::size_t i = 0; i < sketches.size(); ++i) {
        const auto& sk = sketches[i];
        Layer layer;
        auto& cfg = layer.config;
        cfg.name = sk.name;
        cfg.coding = coding;
        cfg.shape = LayerShape::conv(t, c_i, h, w, sk.c_o, sk.k, sk.stride, sk.pad);
        cfg.neuron.type = sk.neuron;
        cfg.neuron.leak_shift = sk.neuron == NeuronType::LIF ? 2 : 0;
        cfg.pool = sk.pool;
        cfg.pool_policy = sk.pool_policy;
        cfg.residual = sk.residual;
        cfg.ann_flops = 2 * cfg.shape.macs();
        if (i > 0) cfg.post_shift_left = net.layers.back().config.output_shifted() ? 1 : 0;
        if (!fit) {
            detail::draw_layer_params(layer, 0.3 * ((1 << cfg.input_bits()) - 1), engine_weight_cap(cfg.shape), 500, rng);
        }
        else {
            if (i == 0) input = random_spikes(cfg.input_dims(), cfg.input_bits(), 300, rng);
            const SpikeTensor& in = i == 0 ? input : outputs.back();
            const SpikeTensor* sc = oracle::shortcut_for(cfg, input, outputs);
            fill_layer_params(layer, in, sc, rng);
            outputs.push_back(oracle::run_layer(cfg, layer.weights, in, sc).output);
        }
        c_i = sk.c_o;
        h = cfg.output_h();
        w = cfg.output_w();
        coding = *coding_for_bits(cfg.output_bits());
        net.layers.push_back(std::move(layer));
    }
    if (auto d = validate_chain(net); !d.empty()) throw Error("preset " + net.name + " is illegal: " + d.front());
    return net;
}

} // namespace detail

// The input a preset was fitted on.
inline SpikeTensor preset_input(const NetworkDesc& net, std::uint64_t seed = 1)
{
    Rng rng(seed);
    const auto& cfg = net.layers.front().config;
    return random_spikes(cfg.input_dims(), cfg.input_bits(), 300, rng);
}

// `fit = false` skips fitting against the reference model; use it when only
// the configuration matters.
inline NetworkDesc preset(std::string_view name, std::uint64_t seed = 1, bool fit = true)
{
    using detail::LayerSketch;
    if (name == "tiny") {
        // Direct-coded input, three layers, T = 4.
        return detail::build_chain("tiny", 4, Coding::direct8bit, 3, 8, 8,
                                   {{"conv0", 8, 3, 1, 1, NeuronType::IF},
                                    {"conv1", 16, 3, 1, 1, NeuronType::LIF, PoolMode::max2x2},
                                    {"fc", 10, 4, 1, 0, NeuronType::RMP}},
                                   seed, fit);
    }
    if (name == "sew-block") {
        ResidualConfig r;
        r.source = 0;
        r.function = ResidualFunction::add;
        r.shortcut_bit_width = 1;
        r.overflow_policy = OverflowPolicy::saturate2;
        return detail::build_chain("sew-block", 4, Coding::binary_spike, 8, 8, 8,
                                   {{"stem", 16, 3, 1, 1},
                                    {"block", 16, 3, 1, 1, NeuronType::IF, PoolMode::none, PolicyMode::saturate, r},
                                    {"head", 10, 8, 1, 0, NeuronType::RMP}},
                                   seed, fit);
    }
    if (name == "avgpool-shift") {
        return detail::build_chain("avgpool-shift", 4, Coding::binary_spike, 4, 8, 8,
                                   {{"conv0", 16, 3, 1, 1, NeuronType::IF, PoolMode::avg2x2, PolicyMode::shift},
                                    {"conv1", 16, 3, 1, 1, NeuronType::LIF},
                                    {"fc", 10, 4, 1, 0, NeuronType::RMP}},
                                   seed, fit);
    }
    if (name == "snn7-cifar10") {
        // Seven convolutions on 32x32x3 with T = 4. The widest layers use 192
        // channels so 3x3xC_i stays within the 12-bit engine range.
        return detail::build_chain("snn7-cifar10", 4, Coding::direct8bit, 3, 32, 32,
                                   {{"conv1", 64, 3, 1, 1},
                                    {"conv2", 64, 3, 1, 1, NeuronType::IF, PoolMode::max2x2},
                                    {"conv3", 128, 3, 1, 1},
                                    {"conv4", 128, 3, 1, 1, NeuronType::IF, PoolMode::max2x2},
                                    {"conv5", 192, 3, 1, 1},
                                    {"conv6", 192, 3, 1, 1, NeuronType::IF, PoolMode::max2x2},
                                    {"classifier", 10, 1, 1, 0, NeuronType::RMP}},
                                   seed, fit);
    }
    throw ValidationError("unknown preset '" + std::string(name) + "'");
}

} // namespace snnaccel::fixtures
