// model_ir.hpp - network intermediate representation.
//
// A NetworkDesc is an ordered list of convolution layers. Each layer owns its
// geometry, input coding, neuron parameters, optional 2x2 pooling and an
// optional spike-element-wise (SEW) residual connection whose shortcut is the
// output of an earlier layer (or the network input). Everything downstream of
// the manifest loader treats a NetworkDesc as immutable.
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"
#include "tensor.hpp"

namespace snnaccel {

struct OutputSize {
    int h = 0;
    int w = 0;
    bool operator==(const OutputSize&) const = default;
};

// Standard convolution output geometry: floor((in + 2*pad - k) / stride) + 1.
inline OutputSize derive_output_shape(int h_i, int w_i, int k_h, int k_w, int stride, int pad)
{
    if (h_i < 1 || w_i < 1 || k_h < 1 || k_w < 1 || stride < 1 || pad < 0) {
        throw ValidationError("convolution geometry: dimensions must be positive and pad >= 0");
    }
    if (k_h > h_i + 2 * pad || k_w > w_i + 2 * pad) {
        throw ValidationError("convolution geometry: kernel larger than padded input");
    }
    return {(h_i + 2 * pad - k_h) / stride + 1, (w_i + 2 * pad - k_w) / stride + 1};
}

inline OutputSize derive_output_shape(int h_i, int w_i, int k, int stride, int pad)
{
    return derive_output_shape(h_i, w_i, k, k, stride, pad);
}

struct LayerShape {
    int t = 1;
    int h_i = 1, w_i = 1;
    int h_o = 1, w_o = 1;
    int k_h = 1, k_w = 1;
    int stride = 1;
    int pad = 0;
    int c_i = 1, c_o = 1;

    // Builds a shape with h_o/w_o derived from the convolution formula.
    static LayerShape conv(int t, int c_i, int h_i, int w_i, int c_o, int k, int stride, int pad)
    {
        const auto out = derive_output_shape(h_i, w_i, k, stride, pad);
        LayerShape s{t, h_i, w_i, out.h, out.w, k, k, stride, pad, c_i, c_o};
        return s;
    }

    // Empty when every invariant holds.
    std::vector<std::string> problems() const
    {
        std::vector<std::string> out;
        if (t < 1 || h_i < 1 || w_i < 1 || h_o < 1 || w_o < 1 || k_h < 1 || k_w < 1 ||
            stride < 1 || c_i < 1 || c_o < 1 || pad < 0) {
            out.emplace_back("all dimensions must be >= 1 and pad >= 0");
            return out;
        }
        if (k_h > h_i + 2 * pad || k_w > w_i + 2 * pad) {
            out.emplace_back("kernel larger than padded input");
            return out;
        }
        const auto expect = derive_output_shape(h_i, w_i, k_h, k_w, stride, pad);
        if (expect.h != h_o || expect.w != w_o) {
            out.push_back("output size " + std::to_string(h_o) + "x" + std::to_string(w_o) +
                          " inconsistent with stride formula (expected " + std::to_string(expect.h) +
                          "x" + std::to_string(expect.w) + ")");
        }
        return out;
    }

    void validate() const
    {
        if (auto p = problems(); !p.empty()) {
            throw ValidationError("layer shape: " + p.front());
        }
    }

    std::int64_t macs() const noexcept
    {
        return std::int64_t{c_o} * h_o * w_o * c_i * k_h * k_w;
    }

    bool operator==(const LayerShape&) const = default;
};

enum class Coding { binary_spike, spike2bit, spike4bit, direct8bit };
enum class NeuronType { IF, LIF, RMP };
enum class PoolMode { none, max2x2, avg2x2 };
enum class PolicyMode { saturate, shift };
enum class ResidualFunction { add, iand };
enum class OverflowPolicy { extend4, saturate2, shift2 };
// Which operand IAND negates. Default gates the shortcut with NOT backbone.
enum class IandOrder { negate_backbone, negate_shortcut };

constexpr int coding_bits(Coding c) noexcept
{
    switch (c) {
    case Coding::binary_spike: return 1;
    case Coding::spike2bit: return 2;
    case Coding::spike4bit: return 4;
    case Coding::direct8bit: return 8;
    }
    return 1;
}

inline std::optional<Coding> coding_for_bits(int bits) noexcept
{
    switch (bits) {
    case 1: return Coding::binary_spike;
    case 2: return Coding::spike2bit;
    case 4: return Coding::spike4bit;
    case 8: return Coding::direct8bit;
    default: return std::nullopt;
    }
}

// Window sums of a 2x2 average pool are 4x the average; the downstream layer
// absorbs this as a right shift of 2 in its quantization scale.
constexpr int pool_scale_shift(PoolMode p) noexcept { return p == PoolMode::avg2x2 ? 2 : 0; }

constexpr int overflow_policy_bits(OverflowPolicy p) noexcept
{
    return p == OverflowPolicy::extend4 ? 4 : 2;
}

struct NeuronParams {
    NeuronType type = NeuronType::IF;
    // Per-layer firing threshold in merged (18-bit) psum scale.
    std::int32_t threshold = 1;
    // LIF decay: v -= v >> leak_shift before integration.
    int leak_shift = 0;
    // One bias per output channel, merged psum scale.
    std::vector<std::int32_t> bias;

    bool operator==(const NeuronParams&) const = default;
};

struct ResidualConfig {
    // Index of the layer whose output is the shortcut; -1 is the network input.
    int source = -1;
    ResidualFunction function = ResidualFunction::add;
    int shortcut_bit_width = 1;
    OverflowPolicy overflow_policy = OverflowPolicy::saturate2;
    IandOrder iand_order = IandOrder::negate_backbone;

    bool operator==(const ResidualConfig&) const = default;
};

// Statistics recorded when a saturate-or-shift policy was calibrated.
struct PolicyStats {
    std::int64_t total = 0;
    std::int64_t exceeded_count = 0; // elements > 3
    std::int64_t shifted_mass = 0;   // sum of dropped LSBs if shifted
    bool operator==(const PolicyStats&) const = default;
};

struct LayerConfig {
    std::string name;
    LayerShape shape;
    Coding coding = Coding::binary_spike;
    NeuronParams neuron;
    PoolMode pool = PoolMode::none;
    PolicyMode pool_policy = PolicyMode::saturate;
    std::optional<ResidualConfig> residual;
    // 1 when the preceding layer right-shifted its spikes.
    int post_shift_left = 0;
    // ANN-equivalent FLOPs, informational only (0 = unknown).
    std::int64_t ann_flops = 0;
    std::optional<PolicyStats> calibration;

    int input_bits() const noexcept { return coding_bits(coding); }

    int output_h() const noexcept { return pool == PoolMode::none ? shape.h_o : shape.h_o / 2; }
    int output_w() const noexcept { return pool == PoolMode::none ? shape.w_o : shape.w_o / 2; }

    int output_bits() const noexcept
    {
        if (residual) {
            return residual->function == ResidualFunction::iand
                       ? 1
                       : overflow_policy_bits(residual->overflow_policy);
        }
        return pool == PoolMode::avg2x2 ? 2 : 1;
    }

    // True when this layer's output spikes were halved and the consumer must
    // left-shift its psums by one.
    bool output_shifted() const noexcept
    {
        if (residual) {
            return residual->function == ResidualFunction::add &&
                   residual->overflow_policy == OverflowPolicy::shift2;
        }
        return pool == PoolMode::avg2x2 && pool_policy == PolicyMode::shift;
    }

    Dims4 output_dims() const noexcept
    {
        return {static_cast<std::size_t>(shape.t), static_cast<std::size_t>(shape.c_o),
                static_cast<std::size_t>(output_h()), static_cast<std::size_t>(output_w())};
    }

    Dims4 input_dims() const noexcept
    {
        const auto t = coding == Coding::direct8bit ? 1 : shape.t;
        return {static_cast<std::size_t>(t), static_cast<std::size_t>(shape.c_i),
                static_cast<std::size_t>(shape.h_i), static_cast<std::size_t>(shape.w_i)};
    }

    Dims4 weight_dims() const noexcept
    {
        return {static_cast<std::size_t>(shape.c_o), static_cast<std::size_t>(shape.c_i),
                static_cast<std::size_t>(shape.k_h), static_cast<std::size_t>(shape.k_w)};
    }

    bool operator==(const LayerConfig&) const = default;
};

struct ParallelismConfig {
    int m = 16; // output channels
    int v = 16; // input channels
    int n = 8;  // output pixels along w
    int s = 4;  // equivalent time steps
    int f_fast_mhz = 500;
    int f_slow_mhz = 250;
    bool s_override = false;

    std::vector<std::string> problems() const
    {
        std::vector<std::string> out;
        if (m < 1 || v < 1 || n < 1 || s < 1) out.emplace_back("parallelism degrees must be positive");
        if (m % 4 != 0) out.emplace_back("m must be a multiple of 4");
        if (v % 4 != 0) out.emplace_back("v must be a multiple of 4");
        if (f_fast_mhz <= 0 || f_fast_mhz != 2 * f_slow_mhz)
            out.emplace_back("fast clock must be exactly twice the slow clock");
        if (s != 4 && !s_override) out.emplace_back("s must be 4 unless explicitly overridden");
        return out;
    }

    void validate() const
    {
        if (auto p = problems(); !p.empty()) {
            throw ValidationError("parallelism config: " + p.front());
        }
    }

    static ParallelismConfig make(int m, int v, int n, int s, int f_fast_mhz)
    {
        ParallelismConfig p{m, v, n, s, f_fast_mhz, f_fast_mhz / 2, s != 4};
        if (f_fast_mhz % 2 != 0) {
            p.f_slow_mhz = 0;
        }
        return p;
    }

    bool operator==(const ParallelismConfig&) const = default;
};

struct Layer {
    LayerConfig config;
    WeightTensor weights;
    bool operator==(const Layer&) const = default;
};

struct ClassifierSpec {
    // Class scores are per-channel spike counts of the last layer over T.
    std::string readout = "spike_count";
    bool operator==(const ClassifierSpec&) const = default;
};

struct NetworkDesc {
    std::string name;
    std::vector<Layer> layers;
    ClassifierSpec classifier;

    const LayerConfig& input_layer() const { return layers.front().config; }
    int time_steps() const { return layers.empty() ? 0 : layers.front().config.shape.t; }

    bool operator==(const NetworkDesc&) const = default;
};

namespace detail {

inline std::string layer_tag(std::size_t i, const LayerConfig& c)
{
    return "layer " + std::to_string(i) + (c.name.empty() ? "" : " (" + c.name + ")") + ": ";
}

inline std::string dims_str(const Dims4& d)
{
    return std::to_string(d[0]) + "x" + std::to_string(d[1]) + "x" + std::to_string(d[2]) + "x" +
           std::to_string(d[3]);
}

} // namespace detail

// Checks every per-layer and inter-layer contract; returns one diagnostic per
// violation. Nothing is thrown.
inline std::vector<std::string> validate_chain(const NetworkDesc& net)
{
    std::vector<std::string> diags;
    if (net.layers.empty()) {
        diags.emplace_back("network has no layers");
        return diags;
    }
    const int t = net.layers.front().config.shape.t;

    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const auto& layer = net.layers[i];
        const auto& cfg = layer.config;
        const auto tag = detail::layer_tag(i, cfg);

        for (const auto& p : cfg.shape.problems()) diags.push_back(tag + p);
        if (cfg.shape.t != t) diags.push_back(tag + "time steps differ from the network's T");
        if (layer.weights.dims() != cfg.weight_dims()) {
            diags.push_back(tag + "weight tensor dims " + detail::dims_str(layer.weights.dims()) +
                            " do not match layer shape " + detail::dims_str(cfg.weight_dims()));
        }
        if (cfg.neuron.threshold <= 0) diags.push_back(tag + "threshold must be positive");
        if (cfg.neuron.leak_shift < 0 || cfg.neuron.leak_shift > 17)
            diags.push_back(tag + "leak_shift must be in 0..17");
        if (cfg.neuron.bias.size() != static_cast<std::size_t>(cfg.shape.c_o))
            diags.push_back(tag + "bias must have one entry per output channel");
        if (cfg.post_shift_left != 0 && cfg.post_shift_left != 1)
            diags.push_back(tag + "post_shift_left must be 0 or 1");
        if (cfg.coding == Coding::direct8bit && i != 0)
            diags.push_back(tag + "direct 8-bit coding is only legal on the input layer");
        if (cfg.pool != PoolMode::none && (cfg.shape.h_o % 2 != 0 || cfg.shape.w_o % 2 != 0))
            diags.push_back(tag + "2x2 pooling requires even output height and width");

        if (cfg.residual) {
            const auto& r = *cfg.residual;
            if (cfg.pool == PoolMode::avg2x2) {
                diags.push_back(tag + "residual connection after average-pool downsampling is unsupported");
            }
            else if (r.source < -1 || r.source >= static_cast<int>(i)) {
                diags.push_back(tag + "residual source must be -1 or an earlier layer");
            }
            else {
                const bool from_input = r.source == -1;
                const auto& first = net.layers.front().config;
                const int src_bits = from_input ? first.input_bits()
                                                : net.layers[static_cast<std::size_t>(r.source)].config.output_bits();
                const Dims4 src_dims = from_input ? first.input_dims()
                                                  : net.layers[static_cast<std::size_t>(r.source)].config.output_dims();
                if (r.shortcut_bit_width != 1 && r.shortcut_bit_width != 2 && r.shortcut_bit_width != 4) {
                    diags.push_back(tag + "shortcut bit width must be 1, 2 or 4");
                }
                else if (src_bits != r.shortcut_bit_width) {
                    diags.push_back(tag + "shortcut declared " + std::to_string(r.shortcut_bit_width) +
                                    "-bit but source produces " + std::to_string(src_bits) + "-bit spikes");
                }
                if (src_dims != cfg.output_dims()) {
                    diags.push_back(tag + "shortcut dims " + detail::dims_str(src_dims) +
                                    " differ from backbone dims " + detail::dims_str(cfg.output_dims()));
                }
                if (r.function == ResidualFunction::iand && r.shortcut_bit_width != 1) {
                    diags.push_back(tag + "IAND requires a binary shortcut");
                }
            }
        }

        if (i == 0) {
            if (cfg.post_shift_left != 0)
                diags.push_back(tag + "input layer cannot compensate a shift policy");
            continue;
        }
        const auto& prev = net.layers[i - 1].config;
        const auto ptag = tag + "input ";
        if (cfg.shape.c_i != prev.shape.c_o)
            diags.push_back(ptag + "channels " + std::to_string(cfg.shape.c_i) + " != previous c_o " +
                            std::to_string(prev.shape.c_o));
        if (cfg.shape.h_i != prev.output_h() || cfg.shape.w_i != prev.output_w())
            diags.push_back(ptag + "size " + std::to_string(cfg.shape.h_i) + "x" + std::to_string(cfg.shape.w_i) +
                            " != previous output " + std::to_string(prev.output_h()) + "x" +
                            std::to_string(prev.output_w()));
        if (cfg.coding != Coding::direct8bit && cfg.input_bits() != prev.output_bits())
            diags.push_back(ptag + "declared " + std::to_string(cfg.input_bits()) +
                            "-bit but previous layer produces " + std::to_string(prev.output_bits()) +
                            "-bit spikes");
        if (cfg.post_shift_left != (prev.output_shifted() ? 1 : 0))
            diags.push_back(tag + "post_shift_left must equal 1 exactly when the previous layer uses the shift policy");
    }
    return diags;
}

// Parses and prints the enum spellings used by the manifest format.
inline std::string_view to_string(Coding c)
{
    switch (c) {
    case Coding::binary_spike: return "binary_spike";
    case Coding::spike2bit: return "spike2bit";
    case Coding::spike4bit: return "spike4bit";
    case Coding::direct8bit: return "direct8bit";
    }
    return "?";
}
inline std::string_view to_string(NeuronType n)
{
    switch (n) {
    case NeuronType::IF: return "IF";
    case NeuronType::LIF: return "LIF";
    case NeuronType::RMP: return "RMP";
    }
    return "?";
}
inline std::string_view to_string(PoolMode p)
{
    switch (p) {
    case PoolMode::none: return "none";
    case PoolMode::max2x2: return "max2x2";
    case PoolMode::avg2x2: return "avg2x2";
    }
    return "?";
}
inline std::string_view to_string(PolicyMode p) { return p == PolicyMode::shift ? "shift" : "saturate"; }
inline std::string_view to_string(ResidualFunction f) { return f == ResidualFunction::iand ? "IAND" : "ADD"; }
inline std::string_view to_string(OverflowPolicy p)
{
    switch (p) {
    case OverflowPolicy::extend4: return "extend4";
    case OverflowPolicy::saturate2: return "saturate2";
    case OverflowPolicy::shift2: return "shift2";
    }
    return "?";
}
inline std::string_view to_string(IandOrder o)
{
    return o == IandOrder::negate_shortcut ? "negate_shortcut" : "negate_backbone";
}

namespace detail {
template <typename E, std::size_t N>
E parse_enum(std::string_view text, const std::array<E, N>& all, const char* what)
{
    for (auto e : all) {
        if (to_string(e) == text) return e;
    }
    throw ParseError(std::string("unknown ") + what + " '" + std::string(text) + "'");
}
} // namespace detail

inline Coding parse_coding(std::string_view s)
{
    return detail::parse_enum(s, std::array{Coding::binary_spike, Coding::spike2bit, Coding::spike4bit,
                                            Coding::direct8bit}, "coding");
}
inline NeuronType parse_neuron_type(std::string_view s)
{
    return detail::parse_enum(s, std::array{NeuronType::IF, NeuronType::LIF, NeuronType::RMP}, "neuron type");
}
inline PoolMode parse_pool(std::string_view s)
{
    return detail::parse_enum(s, std::array{PoolMode::none, PoolMode::max2x2, PoolMode::avg2x2}, "pool mode");
}
inline PolicyMode parse_policy(std::string_view s)
{
    return detail::parse_enum(s, std::array{PolicyMode::saturate, PolicyMode::shift}, "policy");
}
inline ResidualFunction parse_residual_function(std::string_view s)
{
    return detail::parse_enum(s, std::array{ResidualFunction::add, ResidualFunction::iand}, "residual function");
}
inline OverflowPolicy parse_overflow_policy(std::string_view s)
{
    return detail::parse_enum(s, std::array{OverflowPolicy::extend4, OverflowPolicy::saturate2,
                                            OverflowPolicy::shift2}, "overflow policy");
}
inline IandOrder parse_iand_order(std::string_view s)
{
    return detail::parse_enum(s, std::array{IandOrder::negate_backbone, IandOrder::negate_shortcut}, "IAND order");
}

} // namespace snnaccel
