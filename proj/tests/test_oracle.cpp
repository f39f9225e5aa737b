#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace snnaccel;

namespace {

NeuronParams params(NeuronType type, std::int32_t theta, int leak = 0)
{
    NeuronParams p;
    p.type = type;
    p.threshold = theta;
    p.leak_shift = leak;
    return p;
}

std::vector<std::uint8_t> serial(const std::vector<std::int32_t>& cur, const NeuronParams& p, std::int32_t& v)
{
    return oracle::neuron_serial(std::span<const std::int32_t>(cur), p, v);
}

SpikeTensor window(std::initializer_list<unsigned> vals, int bits)
{
    SpikeTensor s({1, 1, 2, 2}, bits);
    auto it = vals.begin();
    for (std::size_t y = 0; y < 2; ++y)
        for (std::size_t x = 0; x < 2; ++x) s.set(0, 0, y, x, *it++);
    return s;
}

SpikeTensor scalar(unsigned v, int bits)
{
    SpikeTensor s({1, 1, 1, 1}, bits);
    s.set(0, 0, 0, 0, v);
    return s;
}

} // namespace

// ------------------------------------------------------------ convolution

TEST(ConvIntegrate, ZeroSpikesGiveZeroPsums)
{
    const auto shape = LayerShape::conv(2, 3, 5, 5, 4, 3, 1, 1);
    const auto psum = oracle::conv_integrate(SpikeTensor({2, 3, 5, 5}, 1), test::random_weights({4, 3, 3, 3}, 100, 1), shape);
    for (auto v : psum.values()) EXPECT_EQ(v, 0);
}

TEST(ConvIntegrate, SingleSpikeSingleWeight)
{
    WeightTensor w({1, 1, 1, 1});
    w(0, 0, 0, 0) = -37;
    const auto psum = oracle::conv_integrate(scalar(1, 1), w, LayerShape::conv(1, 1, 1, 1, 1, 1, 1, 0));
    EXPECT_EQ(psum(0, 0, 0, 0), -37);
}

TEST(ConvIntegrate, MatchesIndependentReferenceFixture)
{
    const auto dir = test::data_dir();
    const auto input = blob::load_spikes(dir / "conv_input.snnt");
    const auto weights = blob::to_weights(blob::read_file(dir / "conv_weights.snnt"));
    const auto expect = blob::read_file(dir / "conv_psum.snnt");
    ASSERT_EQ(input.dims(), (Dims4{2, 2, 4, 4}));
    const auto shape = LayerShape::conv(2, 2, 4, 4, 3, 3, 1, 1);
    const auto psum = oracle::conv_integrate(input, weights, shape);
    ASSERT_EQ(expect.dims, (std::vector<std::uint32_t>{2, 3, 4, 4}));
    const auto* raw = expect.payload.data();
    for (std::size_t i = 0; i < psum.size(); ++i) {
        std::uint32_t u = 0;
        for (int k = 0; k < 4; ++k) u |= std::uint32_t{raw[4 * i + static_cast<std::size_t>(k)]} << (8 * k);
        EXPECT_EQ(psum.values()[i], static_cast<std::int32_t>(u)) << "element " << i;
    }
}

TEST(ConvIntegrate, OverflowIsAnError)
{
    SpikeTensor in({1, 9, 1, 1}, 8);
    for (std::size_t c = 0; c < 9; ++c) in.set(0, c, 0, 0, 255);
    WeightTensor w({1, 9, 1, 1}, 127);
    EXPECT_THROW(oracle::conv_integrate(in, w, LayerShape::conv(1, 9, 1, 1, 1, 1, 1, 0)), OverflowError);
}

TEST(ConvIntegrate, LinearInWeights)
{
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        fixtures::Rng rng(seed);
        const int k = 1 + 2 * rng.uniform(0, 2);
        const auto shape = LayerShape::conv(rng.uniform(1, 3), rng.uniform(1, 4), rng.uniform(k, 7), rng.uniform(k, 7),
                                            rng.uniform(1, 4), k, rng.uniform(1, 2), rng.uniform(0, 2));
        const auto in = test::random_spikes({static_cast<std::size_t>(shape.t), static_cast<std::size_t>(shape.c_i),
                                             static_cast<std::size_t>(shape.h_i), static_cast<std::size_t>(shape.w_i)},
                                            2, seed);
        const Dims4 wd{static_cast<std::size_t>(shape.c_o), static_cast<std::size_t>(shape.c_i),
                       static_cast<std::size_t>(k), static_cast<std::size_t>(k)};
        const auto w1 = test::random_weights(wd, 60, seed * 2 + 1);
        const auto w2 = test::random_weights(wd, 60, seed * 2 + 2);
        WeightTensor sum(wd);
        for (std::size_t i = 0; i < sum.size(); ++i) sum.values()[i] = static_cast<std::int8_t>(w1.values()[i] + w2.values()[i]);
        const auto a = oracle::conv_integrate(in, w1, shape);
        const auto b = oracle::conv_integrate(in, w2, shape);
        const auto c = oracle::conv_integrate(in, sum, shape);
        for (std::size_t i = 0; i < c.size(); ++i) ASSERT_EQ(c.values()[i], a.values()[i] + b.values()[i]) << "seed " << seed;
    }
}

// ---------------------------------------------------------- neurodynamics

TEST(NeuronSerial, IfHardResetTrace)
{
    std::int32_t v = 0;
    EXPECT_EQ(serial({4, 4, 4}, params(NeuronType::IF, 10), v), (std::vector<std::uint8_t>{0, 0, 1}));
    EXPECT_EQ(v, 0);
}

TEST(NeuronSerial, IfThresholdOneAlwaysFires)
{
    std::int32_t v = 0;
    EXPECT_EQ(serial({1, 3, 2, 7, 1}, params(NeuronType::IF, 1), v), (std::vector<std::uint8_t>(5, 1)));
}

TEST(NeuronSerial, RmpSubtractsThresholdOncePerStep)
{
    std::int32_t v = 0;
    EXPECT_EQ(serial({25, 0}, params(NeuronType::RMP, 10), v), (std::vector<std::uint8_t>{1, 1}));
    EXPECT_EQ(v, 5);
}

TEST(NeuronSerial, LifLeaksBeforeIntegrating)
{
    std::int32_t v = 0;
    // v: 0 -> 8 -> 8-4+8 = 12 -> fire, reset.
    EXPECT_EQ(serial({8, 8}, params(NeuronType::LIF, 12, 1), v), (std::vector<std::uint8_t>{0, 1}));
    EXPECT_EQ(v, 0);
    v = -9;
    serial({0}, params(NeuronType::LIF, 5, 1), v); // -9 - (-9 >> 1) = -9 + 5 = -4
    EXPECT_EQ(v, -4);
}

TEST(NeuronSerial, MembraneOverflowIsAnError)
{
    std::int32_t v = 0;
    EXPECT_THROW(serial({100000, 100000}, params(NeuronType::IF, (1 << 17) - 1), v), OverflowError);
}

TEST(NeuronSerial, SplittingTimeLoopAnywhereIsInvariant)
{
    for (auto type : {NeuronType::IF, NeuronType::LIF, NeuronType::RMP}) {
        for (std::uint64_t seed = 0; seed < 200; ++seed) {
            fixtures::Rng rng(seed);
            const auto p = params(type, rng.uniform(1, 12), rng.uniform(1, 3));
            std::vector<std::int32_t> cur(8);
            for (auto& c : cur) c = rng.uniform(-6, 14);
            std::int32_t v_full = rng.uniform(-5, 10);
            const std::int32_t v0 = v_full;
            const auto full = serial(cur, p, v_full);
            for (std::size_t split = 0; split <= 8; ++split) {
                std::int32_t v = v0;
                auto a = oracle::neuron_serial(std::span<const std::int32_t>(cur.data(), split), p, v);
                auto b = oracle::neuron_serial(std::span<const std::int32_t>(cur.data() + split, 8 - split), p, v);
                a.insert(a.end(), b.begin(), b.end());
                ASSERT_EQ(a, full) << "split " << split;
                ASSERT_EQ(v, v_full);
            }
        }
    }
}

// ------------------------------------------------------------------ pooling

TEST(AvgPool, WindowSums)
{
    EXPECT_EQ(oracle::avg_pool_2x2(window({1, 1, 1, 0}, 1))(0, 0, 0, 0), 3);
    EXPECT_EQ(oracle::avg_pool_2x2(window({0, 0, 0, 0}, 1))(0, 0, 0, 0), 0);
    EXPECT_EQ(oracle::avg_pool_2x2(window({1, 1, 1, 1}, 1))(0, 0, 0, 0), 4);
    EXPECT_EQ(oracle::avg_pool_2x2(window({1, 1, 1, 1}, 1)).bit_width(), 3);
}

TEST(AvgPool, OddDimensionsThrow)
{
    EXPECT_THROW(oracle::avg_pool_2x2(SpikeTensor({1, 1, 3, 2}, 1)), ValidationError);
    EXPECT_THROW(oracle::max_pool_2x2(SpikeTensor({1, 1, 2, 3}, 1)), ValidationError);
}

TEST(AvgPool, ShiftByTwoIsExactDivisionForMultiplesOfFour)
{
    // A downstream psum over window sums, right-shifted by the recorded
    // pool_scale_shift, equals the psum over exact averages.
    SpikeTensor in({1, 2, 4, 4}, 1);
    for (std::size_t c = 0; c < 2; ++c)
        for (std::size_t y = 0; y < 4; ++y)
            for (std::size_t x = 0; x < 4; ++x) in.set(0, c, y, x, ((y / 2 + x / 2 + c) % 2) ? 1u : 0u);
    const auto sums = oracle::avg_pool_2x2(in);
    const auto w = test::random_weights({3, 2, 1, 1}, 50, 5);
    const auto shape = LayerShape::conv(1, 2, 2, 2, 3, 1, 1, 0);
    const auto psum = oracle::conv_integrate(sums, w, shape);
    for (std::size_t co = 0; co < 3; ++co)
        for (std::size_t y = 0; y < 2; ++y)
            for (std::size_t x = 0; x < 2; ++x) {
                std::int64_t exact = 0;
                for (std::size_t ci = 0; ci < 2; ++ci) {
                    ASSERT_EQ(sums(0, ci, y, x) % 4, 0);
                    exact += (sums(0, ci, y, x) / 4) * w(co, ci, 0, 0);
                }
                EXPECT_EQ(psum(0, co, y, x) >> pool_scale_shift(PoolMode::avg2x2), exact);
            }
}

TEST(MaxPool, Examples)
{
    EXPECT_EQ(oracle::max_pool_2x2(window({0, 0, 0, 0}, 1))(0, 0, 0, 0), 0);
    EXPECT_EQ(oracle::max_pool_2x2(window({0, 1, 0, 0}, 1))(0, 0, 0, 0), 1);
    EXPECT_EQ(oracle::max_pool_2x2(window({2, 3, 1, 0}, 2))(0, 0, 0, 0), 3);
    EXPECT_EQ(oracle::max_pool_2x2(window({2, 3, 1, 0}, 2)).bit_width(), 2);
}

TEST(PoolPolicy, SaturateAndShift)
{
    const auto sums = oracle::avg_pool_2x2(window({1, 1, 1, 1}, 1));
    EXPECT_EQ(oracle::apply_pool_policy(sums, PolicyMode::saturate)(0, 0, 0, 0), 3);
    EXPECT_EQ(oracle::apply_pool_policy(sums, PolicyMode::shift)(0, 0, 0, 0), 2);
}

// ---------------------------------------------------------------- residual

TEST(SewResidual, AddExamples)
{
    const auto two = oracle::sew_residual(scalar(1, 1), scalar(1, 1), ResidualFunction::add, OverflowPolicy::saturate2);
    EXPECT_EQ(two(0, 0, 0, 0), 2);
    EXPECT_EQ(two.bit_width(), 2);
    // Sum 4 (binary backbone + 2-bit shortcut 3) saturates to 3.
    EXPECT_EQ(oracle::sew_residual(scalar(1, 1), scalar(3, 2), ResidualFunction::add, OverflowPolicy::saturate2)(0, 0, 0, 0), 3);
    EXPECT_EQ(oracle::sew_residual(scalar(1, 1), scalar(3, 2), ResidualFunction::add, OverflowPolicy::shift2)(0, 0, 0, 0), 2);
    EXPECT_EQ(oracle::sew_residual(scalar(1, 1), scalar(15, 4), ResidualFunction::add, OverflowPolicy::extend4)(0, 0, 0, 0), 15);
}

TEST(SewResidual, IandTruthTable)
{
    auto iand = [](unsigned b, unsigned s, IandOrder o) {
        return oracle::sew_residual(scalar(b, 1), scalar(s, 1), ResidualFunction::iand, OverflowPolicy::saturate2, o)(0, 0, 0, 0);
    };
    EXPECT_EQ(iand(1, 1, IandOrder::negate_backbone), 0);
    EXPECT_EQ(iand(0, 1, IandOrder::negate_backbone), 1);
    EXPECT_EQ(iand(1, 0, IandOrder::negate_backbone), 0);
    EXPECT_EQ(iand(0, 0, IandOrder::negate_backbone), 0);
    EXPECT_EQ(iand(1, 0, IandOrder::negate_shortcut), 1);
    EXPECT_EQ(iand(0, 1, IandOrder::negate_shortcut), 0);
    EXPECT_THROW(oracle::sew_residual(scalar(1, 1), scalar(2, 2), ResidualFunction::iand, OverflowPolicy::saturate2),
                 ValidationError);
}

TEST(SewResidual, ShapeMismatchThrows)
{
    EXPECT_THROW(oracle::sew_residual(SpikeTensor({1, 1, 2, 2}, 1), SpikeTensor({1, 1, 2, 1}, 1), ResidualFunction::add,
                                      OverflowPolicy::saturate2),
                 ValidationError);
}

TEST(SewResidual, AddChainNeverExceedsNPlusOne)
{
    for (int n = 1; n <= 15; ++n) {
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            auto acc = test::random_spikes({2, 3, 4, 4}, 1, seed * 100 + static_cast<std::uint64_t>(n), 600);
            for (int k = 0; k < n; ++k) {
                const auto backbone = test::random_spikes({2, 3, 4, 4}, 1, seed * 1000 + static_cast<std::uint64_t>(k), 600);
                acc = oracle::sew_residual(backbone, acc, ResidualFunction::add, OverflowPolicy::extend4);
            }
            for (auto v : acc.values()) ASSERT_LE(v, n + 1);
        }
        // All-ones streams reach the bound (up to the 4-bit ceiling).
        SpikeTensor ones({1, 1, 1, 1}, 1, {1});
        SpikeTensor acc = ones;
        for (int k = 0; k < n; ++k) acc = oracle::sew_residual(ones, acc, ResidualFunction::add, OverflowPolicy::extend4);
        EXPECT_EQ(acc(0, 0, 0, 0), std::min(n + 1, 15));
    }
}

// ---------------------------------------------------------- direct coding

namespace {

LayerConfig direct_layer(int t, std::int32_t theta, NeuronType type)
{
    LayerConfig c;
    c.shape = LayerShape::conv(t, 1, 1, 1, 1, 1, 1, 0);
    c.coding = Coding::direct8bit;
    c.neuron = params(type, theta);
    c.neuron.bias = {0};
    return c;
}

} // namespace

TEST(DirectEncode, ZeroImageGivesNoSpikes)
{
    const auto cfg = direct_layer(4, 1, NeuronType::IF);
    WeightTensor w({1, 1, 1, 1}, 5);
    const auto out = oracle::direct_encode(scalar(0, 8), w, cfg);
    for (auto v : out.values()) EXPECT_EQ(v, 0);
}

TEST(DirectEncode, PixelConvolutionIsReplicatedOverT)
{
    WeightTensor w({1, 1, 1, 1}, 1);
    const auto a = oracle::direct_encode(scalar(255, 8), w, direct_layer(2, 256, NeuronType::IF));
    EXPECT_EQ(a(0, 0, 0, 0), 0);
    EXPECT_EQ(a(1, 0, 0, 0), 1);

    WeightTensor w3({1, 1, 1, 1}, 3);
    const auto b = oracle::direct_encode(scalar(2, 8), w3, direct_layer(3, 5, NeuronType::RMP));
    for (std::size_t t = 0; t < 3; ++t) EXPECT_EQ(b(t, 0, 0, 0), 1);
}

// ------------------------------------------------------------ full network

TEST(RunReference, SingleLayerIsConvThenNeurons)
{
    auto layer = test::simple_layer("l", 3, 2, 5, 5, 3, 3, 1, 1, Coding::binary_spike, 4);
    layer.weights = test::random_weights(layer.config.weight_dims(), 5, 3);
    layer.config.neuron.bias = {1, -1, 0};
    NetworkDesc net;
    net.layers.push_back(layer);
    const auto in = test::random_spikes({3, 2, 5, 5}, 1, 4);
    const auto ref = oracle::run_reference(net, in);

    const auto psum = oracle::conv_integrate(in, layer.weights, layer.config.shape);
    oracle::NeuronState st;
    const auto expect = oracle::neuron_serial(oracle::layer_currents(psum, layer.config), layer.config.neuron, st);
    EXPECT_EQ(ref.layer_outputs.at(0), expect);
    EXPECT_EQ(ref.class_scores, oracle::spike_counts(expect));
}

TEST(RunReference, TwoLayerChainIsComposition)
{
    NetworkDesc net;
    net.layers.push_back(test::simple_layer("a", 2, 2, 6, 6, 4, 3, 1, 1, Coding::binary_spike, 3));
    net.layers.push_back(test::simple_layer("b", 2, 4, 6, 6, 5, 3, 2, 1, Coding::binary_spike, 2));
    net.layers[0].weights = test::random_weights(net.layers[0].config.weight_dims(), 4, 8);
    net.layers[1].weights = test::random_weights(net.layers[1].config.weight_dims(), 4, 9);
    const auto in = test::random_spikes({2, 2, 6, 6}, 1, 10);
    const auto ref = oracle::run_reference(net, in);
    const auto first = oracle::run_layer(net.layers[0].config, net.layers[0].weights, in, nullptr).output;
    const auto second = oracle::run_layer(net.layers[1].config, net.layers[1].weights, first, nullptr).output;
    EXPECT_EQ(ref.layer_outputs[0], first);
    EXPECT_EQ(ref.layer_outputs[1], second);
}

class FrozenNetwork : public ::testing::TestWithParam<std::string> {};

TEST_P(FrozenNetwork, MatchesIndependentReference)
{
    const auto dir = test::data_dir() / GetParam();
    const auto net = load_manifest(dir / (GetParam() + ".json"));
    const auto input = blob::load_spikes(dir / (GetParam() + ".input.snnt"));
    const auto expected = test::read_json(dir / "expected.json");
    const auto ref = oracle::run_reference(net, input);
    EXPECT_EQ(ref.class_scores, expected["class_scores"].get<std::vector<std::int64_t>>());
    ASSERT_EQ(ref.layer_outputs.size(), expected["layer_outputs"].size());
    for (std::size_t l = 0; l < ref.layer_outputs.size(); ++l) {
        const auto& want = expected["layer_outputs"][l];
        const auto got = ref.layer_outputs[l].values();
        ASSERT_EQ(got.size(), want.size()) << "layer " << l;
        for (std::size_t i = 0; i < got.size(); ++i) ASSERT_EQ(got[i], want[i].get<int>()) << "layer " << l << " index " << i;
    }
}

INSTANTIATE_TEST_SUITE_P(Presets, FrozenNetwork, ::testing::Values("tiny", "sew-block", "avgpool-shift"),
                         [](const auto& info) {
                             std::string n = info.param;
                             for (auto& ch : n)
                                 if (ch == '-') ch = '_';
                             return n;
                         });
