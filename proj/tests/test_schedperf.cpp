#include <gtest/gtest.h>

#include <set>

#include "test_support.hpp"

using namespace snnaccel;

namespace {

ParallelismConfig par(int m, int v, int n, int f = 500) { return ParallelismConfig::make(m, v, n, 4, f); }

LayerConfig conv_cfg(int t, int c_i, int h, int w, int c_o, int k, int stride, int pad, Coding coding = Coding::binary_spike)
{
    return test::simple_layer("l", t, c_i, h, w, c_o, k, stride, pad, coding).config;
}

} // namespace

// -------------------------------------------------------------- loop nest

TEST(LoopNest, TripCounts)
{
    const auto nest = plan_loop_nest(conv_cfg(8, 32, 14, 14, 16, 3, 1, 1), par(16, 16, 8));
    ASSERT_EQ(nest.loops.size(), 7u);
    EXPECT_EQ(nest.loops[0].name, "c_o/m");
    EXPECT_EQ(nest.trip(0), 1); // c_o = m = 16
    EXPECT_EQ(nest.trip(1), 14);
    EXPECT_EQ(nest.trip(2), 2); // w_o = 14 over n = 8
    EXPECT_EQ(nest.trip(3), 2); // T = 8 over s = 4
    EXPECT_EQ(nest.trip(4), 3);
    EXPECT_EQ(nest.trip(5), 3);
    EXPECT_EQ(nest.trip(6), 2);
    EXPECT_EQ(nest.w_o_pad, 16);
    EXPECT_EQ(nest.membrane_buffer_entries, 16 * 8);
}

TEST(LoopNest, MisalignedWidthEmitsEfficiencyNote)
{
    const auto nest = plan_loop_nest(conv_cfg(4, 16, 14, 14, 16, 3, 1, 1), par(16, 16, 8));
    ASSERT_EQ(nest.notes.size(), 1u);
    EXPECT_NE(nest.notes[0].find("output width 14"), std::string::npos);
    EXPECT_NE(nest.notes[0].find("x8"), std::string::npos);
    EXPECT_NE(nest.notes[0].find("2 padded"), std::string::npos);
    EXPECT_TRUE(plan_loop_nest(conv_cfg(4, 16, 16, 16, 16, 3, 1, 1), par(16, 16, 8)).notes.empty());
}

TEST(LoopNest, EquivalentStepsPerCoding)
{
    EXPECT_EQ(plan_loop_nest(conv_cfg(4, 16, 8, 8, 16, 1, 1, 0, Coding::spike2bit), par(16, 16, 8)).t_e, 8);
    EXPECT_EQ(plan_loop_nest(conv_cfg(4, 3, 8, 8, 16, 3, 1, 1, Coding::direct8bit), par(16, 16, 8)).t_e, 8);
    EXPECT_EQ(plan_loop_nest(conv_cfg(3, 16, 8, 8, 16, 1, 1, 0), par(16, 16, 8)).t_e_pad, 4);
}

TEST(LoopNest, PaddedOpsEqualsTripProductTimesUnroll)
{
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        fixtures::Rng rng(seed);
        const int k = 2 * rng.uniform(0, 3) + 1;
        const auto cfg = conv_cfg(rng.uniform(1, 8), rng.uniform(1, 40), rng.uniform(k, 20), rng.uniform(k, 20),
                                  rng.uniform(1, 40), k, rng.uniform(1, 2), rng.uniform(0, 3));
        const auto p = par(4 * rng.uniform(1, 8), 4 * rng.uniform(1, 8), rng.uniform(1, 16));
        const auto nest = plan_loop_nest(cfg, p);
        const auto& s = cfg.shape;
        EXPECT_EQ(nest.padded_ops(), std::int64_t{nest.c_o_pad} * s.h_o * nest.w_o_pad * nest.t_e_pad * s.k_h * s.k_w *
                                         nest.c_i_pad);
        EXPECT_GE(nest.padded_ops(), useful_synaptic_ops(cfg));
    }
}

// Every (t_e, c_o, y, x, c_i, k_h, k_w) point is covered exactly once.
TEST(LoopNest, VisitsEveryIndexExactlyOnce)
{
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        fixtures::Rng rng(seed);
        const int k = rng.uniform(0, 1) ? 3 : 1;
        const auto cfg = conv_cfg(rng.uniform(1, 5), rng.uniform(1, 9), rng.uniform(k, 6), rng.uniform(k, 6),
                                  rng.uniform(1, 9), k, 1, k / 2);
        const auto p = par(4, 4, rng.uniform(1, 3));
        const auto nest = plan_loop_nest(cfg, p);
        const auto& s = cfg.shape;
        const std::size_t total = static_cast<std::size_t>(nest.t_e) * s.c_o * s.h_o * s.w_o * s.c_i * s.k_h * s.k_w;
        std::vector<int> seen(total, 0);
        visit_loop_nest(nest, [&](const LoopIndex& i) {
            for (int mo = 0; mo < p.m; ++mo)
                for (int no = 0; no < p.n; ++no)
                    for (int so = 0; so < p.s; ++so)
                        for (int vo = 0; vo < p.v; ++vo) {
                            const std::int64_t co = i.co_tile * p.m + mo, x = i.x_tile * p.n + no;
                            const std::int64_t te = i.t_tile * p.s + so, ci = i.ci_tile * p.v + vo;
                            if (co >= s.c_o || x >= s.w_o || te >= nest.t_e || ci >= s.c_i) continue;
                            const std::int64_t idx =
                                ((((((te * s.c_o + co) * s.h_o + i.y) * s.w_o + x) * s.c_i + ci) * s.k_h + i.ky) * s.k_w) +
                                i.kx;
                            ++seen[static_cast<std::size_t>(idx)];
                        }
        });
        for (auto c : seen) ASSERT_EQ(c, 1);
    }
}

// ----------------------------------------------------------------- padding

TEST(PadStream, UnpaddedIsIdentity)
{
    const auto in = test::random_spikes({2, 3, 4, 8}, 2, 1);
    const auto p = pad_stream(in, 0, 8);
    EXPECT_EQ(p.tensor, in);
    EXPECT_EQ(p.meta.aligned_w, 8);
    EXPECT_EQ(p.meta.valid_pixels, p.meta.total_pixels);
}

TEST(PadStream, FourByFourPadOne)
{
    const auto p = pad_stream(SpikeTensor({1, 1, 4, 4}, 1, std::vector<std::uint8_t>(16, 1)), 1, 8);
    EXPECT_EQ(p.meta.padded_h, 6);
    EXPECT_EQ(p.meta.padded_w, 6);
    EXPECT_EQ(p.meta.valid_pixels, 16);
    EXPECT_EQ(p.meta.total_pixels, 36);
    EXPECT_EQ(p.meta.aligned_w, 8);
    int ones = 0;
    for (auto v : p.tensor.values()) ones += v;
    EXPECT_EQ(ones, 16);
    EXPECT_EQ(p.tensor(0, 0, 0, 0), 0);
    EXPECT_EQ(p.tensor(0, 0, 1, 1), 1);
}

TEST(PadStream, CropRoundTrip)
{
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        fixtures::Rng rng(seed);
        const auto in = fixtures::random_spikes({static_cast<std::size_t>(rng.uniform(1, 3)), 2,
                                                 static_cast<std::size_t>(rng.uniform(1, 9)),
                                                 static_cast<std::size_t>(rng.uniform(1, 9))},
                                                rng.pick(std::array<int, 3>{1, 2, 4}), 500, rng);
        EXPECT_EQ(crop_valid(pad_stream(in, rng.uniform(0, 3), rng.uniform(1, 8))), in);
    }
}

// ------------------------------------------------------------------ im2col

TEST(Im2col, StrideOneNFourKernelThree)
{
    const auto s = LayerShape::conv(1, 1, 8, 8, 1, 3, 1, 1);
    for (int y = 0; y < s.h_o; ++y)
        for (int x0 = 0; x0 < s.w_o; x0 += 4) {
            const auto fetches = im2col_addresses(s, 4, y, x0);
            ASSERT_EQ(fetches.size(), 9u);
            for (const auto& f : fetches) {
                std::set<int> banks(f.route.begin(), f.route.end());
                EXPECT_EQ(banks, (std::set<int>{0, 1, 2, 3}));
                for (int lane = 0; lane < 4; ++lane) {
                    EXPECT_EQ(f.addresses[static_cast<std::size_t>(lane)].column, x0 + lane + f.kx);
                    EXPECT_EQ(f.addresses[static_cast<std::size_t>(lane)].row, y + f.ky);
                }
            }
        }
}

TEST(Im2col, SingleLaneIsTriviallyConflictFree)
{
    const auto s = LayerShape::conv(1, 1, 7, 7, 1, 5, 2, 2);
    for (int y = 0; y < s.h_o; ++y)
        for (int x = 0; x < s.w_o; ++x) EXPECT_NO_THROW(im2col_addresses(s, 1, y, x));
}

TEST(Im2col, StrideTwoConflictFreeForAllPhases)
{
    for (int k : {1, 3, 5, 7})
        for (int pad = 0; pad <= 3; ++pad)
            for (int w = k; w <= 20; ++w)
                for (int n : {2, 4, 8}) {
                    const auto s = LayerShape::conv(1, 1, k, w, 1, k, 2, pad);
                    if (s.w_o < 1) continue;
                    for (int x0 = 0; x0 < s.w_o; x0 += n) {
                        const auto fetches = im2col_addresses(s, n, 0, x0);
                        for (const auto& f : fetches) {
                            std::set<int> banks(f.route.begin(), f.route.end());
                            ASSERT_EQ(banks.size(), static_cast<std::size_t>(n));
                        }
                    }
                }
}

TEST(Im2col, PlainColumnModNConflictsAtStrideTwo)
{
    // Lanes 0..3 of a stride-2 fetch read columns 0,2,4,6: col mod 4 repeats.
    std::set<int> banks;
    for (int lane = 0; lane < 4; ++lane) banks.insert((lane * 2) % 4);
    EXPECT_LT(banks.size(), 4u);
}

TEST(Im2col, BankLayoutIsInjective)
{
    for (int stride : {1, 2})
        for (int n : {1, 2, 4, 8})
            for (int w = 1; w <= 40; ++w) {
                const BankLayout layout{n, stride, w};
                std::set<std::pair<int, int>> slots;
                for (int col = 0; col < w; ++col) {
                    ASSERT_LT(layout.offset(col), stride * layout.words_per_phase());
                    ASSERT_TRUE(slots.insert({layout.bank(col), layout.offset(col)}).second);
                }
            }
}

// ----------------------------------------------------------------- arbiter

TEST(Arbiter, NoDemandNoCycles)
{
    const auto r = run_arbiter(0, 0, {});
    EXPECT_EQ(r.cycles, 0);
    auto cfg = conv_cfg(1, 1, 1, 1, 1, 1, 1, 0);
    cfg.shape.c_o = 0;
    EXPECT_EQ(model_bandwidth(cfg, par(16, 16, 8), {}).read_cycles_fast, 0);
}

TEST(Arbiter, GrantsFollowDemand)
{
    const auto p = par(16, 16, 8);
    const auto weights_heavy = model_bandwidth(conv_cfg(4, 256, 4, 4, 256, 3, 1, 1), p, {});
    const auto spikes_heavy = model_bandwidth(conv_cfg(4, 16, 64, 64, 16, 1, 1, 0), p, {});
    EXPECT_GT(weights_heavy.weight_bytes, weights_heavy.spike_bytes);
    EXPECT_GT(spikes_heavy.spike_bytes, spikes_heavy.weight_bytes);
    for (const auto* b : {&weights_heavy, &spikes_heavy}) {
        const auto& a = b->arbiter;
        EXPECT_EQ(a.granted, a.demanded);
        // Total demand exceeds capacity: both ports busy every cycle but the last.
        for (std::size_t port = 0; port < 2; ++port) EXPECT_GE(a.port_busy_cycles[port] + 1, a.cycles);
    }
    // Each port carries mostly the dominant stream.
    for (std::size_t port = 0; port < 2; ++port) {
        EXPECT_GT(weights_heavy.arbiter.port_stream_bytes[port][kWeights], weights_heavy.arbiter.port_stream_bytes[port][kSpikes]);
        EXPECT_GT(spikes_heavy.arbiter.port_stream_bytes[port][kSpikes], spikes_heavy.arbiter.port_stream_bytes[port][kWeights]);
    }
}

TEST(Arbiter, SinglePortDoublesBalancedDemand)
{
    ArbiterModel both;
    ArbiterModel one;
    one.enabled[1] = false;
    for (std::int64_t bytes : {16, 160, 1600, 123456}) {
        const auto a = run_arbiter(bytes, bytes, both);
        const auto b = run_arbiter(bytes, bytes, one);
        EXPECT_EQ(a.cycles, ceil_div(2 * bytes, 32));
        EXPECT_EQ(b.cycles, 2 * a.cycles);
    }
}

TEST(Arbiter, ConservationAndCapacity)
{
    fixtures::Rng rng(77);
    for (int i = 0; i < 500; ++i) {
        ArbiterModel arb;
        arb.capacity = {rng.uniform(1, 32), rng.uniform(1, 32)};
        arb.enabled = {true, rng.uniform(0, 3) != 0};
        const std::int64_t sb = rng.uniform(0, 5000);
        const std::int64_t wb = rng.uniform(0, 5000);
        const auto r = run_arbiter(sb, wb, arb);
        ASSERT_EQ(r.granted[kSpikes], sb);
        ASSERT_EQ(r.granted[kWeights], wb);
        ASSERT_EQ(r.port_bytes[0] + r.port_bytes[1], sb + wb);
        for (std::size_t p = 0; p < 2; ++p) ASSERT_LE(r.max_grant[p], arb.enabled[p] ? arb.capacity[p] : 0);
        ASSERT_TRUE(r.work_conserving);
        ASSERT_EQ(r.cycles, ceil_div(sb + wb, arb.total_capacity()));
    }
}

TEST(Arbiter, NoEnabledPortWithDemandThrows)
{
    ArbiterModel none;
    none.enabled = {false, false};
    EXPECT_THROW(run_arbiter(10, 0, none), ValidationError);
}

// -------------------------------------------------------------------- perf

TEST(Peak, ReferenceConfigurations)
{
    const auto a = peak_report(par(16, 16, 4, 600));
    EXPECT_EQ(a.peak_ops_per_us, 2457600);
    EXPECT_DOUBLE_EQ(a.peak_gops, 2457.6);
    EXPECT_EQ(a.dsp_count, 256);
    EXPECT_DOUBLE_EQ(a.gops_per_dsp, 9.6);

    const auto b = peak_report(par(16, 16, 8, 500));
    EXPECT_DOUBLE_EQ(b.peak_gops, 4096);
    EXPECT_EQ(b.dsp_count, 512);
    EXPECT_DOUBLE_EQ(b.gops_per_dsp, 8);

    const auto c = peak_report(par(32, 16, 8, 500));
    EXPECT_DOUBLE_EQ(c.peak_gops, 8192);
    EXPECT_EQ(c.dsp_count, 1024);
    EXPECT_DOUBLE_EQ(c.gops_per_dsp, 8);
}

TEST(Peak, ClosedFormsOverConfigGrid)
{
    for (int m = 4; m <= 32; m += 4)
        for (int v = 4; v <= 32; v += 4)
            for (int n : {1, 2, 4, 8, 16})
                for (int f : {200, 300, 500, 600, 800}) {
                    const auto r = peak_report(par(m, v, n, f));
                    ASSERT_EQ(r.peak_ops_per_us, std::int64_t{m} * v * n * 4 * f);
                    ASSERT_EQ(r.dsp_count, (m / 4) * n * (v / 4) * 4);
                    ASSERT_DOUBLE_EQ(r.gops_per_dsp, 16.0 * f / 1000.0);
                    ASSERT_LE(r.port_bandwidth_gbs, r.dram_ceiling_gbs);
                }
}

TEST(Peak, PortBandwidthAboveDramCeilingRejected)
{
    EXPECT_THROW(peak_report(par(16, 16, 8, 1000)), ValidationError);
}

TEST(Estimate, CyclesAreBoundedBelowByComputeAndBandwidth)
{
    const auto p = par(16, 16, 8);
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        fixtures::Rng rng(seed);
        const int k = 2 * rng.uniform(0, 2) + 1;
        const auto cfg = conv_cfg(rng.uniform(1, 8), rng.uniform(1, 64), rng.uniform(k, 32), rng.uniform(k, 32),
                                  rng.uniform(1, 64), k, rng.uniform(1, 2), rng.uniform(0, 2));
        const auto lp = estimate_layer(cfg, p);
        EXPECT_EQ(lp.compute_cycles, lp.nest.iterations());
        EXPECT_GE(lp.modeled_cycles, lp.compute_cycles + lp.fill_cycles);
        EXPECT_GE(lp.modeled_cycles, lp.bandwidth.read_cycles_fast + lp.fill_cycles);
        EXPECT_GE(lp.modeled_cycles, lp.bandwidth.write_cycles_fast + lp.fill_cycles);
        EXPECT_GT(lp.utilization, 0.0);
        EXPECT_LE(lp.utilization, 1.0);
    }
}

TEST(Estimate, WeightCacheSpillAddsTraffic)
{
    const auto cfg = conv_cfg(4, 256, 8, 8, 64, 3, 1, 1);
    PerfOptions big;
    PerfOptions tiny;
    tiny.weight_cache_bytes = 1024;
    const auto hit = model_bandwidth(cfg, par(16, 16, 8), big);
    const auto miss = model_bandwidth(cfg, par(16, 16, 8), tiny);
    EXPECT_TRUE(hit.weight_cache_hit);
    EXPECT_FALSE(miss.weight_cache_hit);
    EXPECT_GT(miss.weight_bytes, hit.weight_bytes);
    EXPECT_GE(miss.read_cycles_fast, hit.read_cycles_fast);
}

TEST(Estimate, UtilizationAtMostOneForFixtureNetworks)
{
    for (const auto& name : fixtures::preset_names()) {
        const auto net = fixtures::preset(name, 1, false);
        for (const auto& p : fixtures::case_parallelisms()) {
            const auto r = estimate(net, p);
            ASSERT_EQ(r.layers.size(), net.layers.size());
            for (const auto& l : r.layers) {
                EXPECT_LE(l.utilization, 1.0) << name << " " << l.name;
                EXPECT_EQ(l.bandwidth.arbiter.granted, l.bandwidth.arbiter.demanded);
            }
            EXPECT_LE(r.utilization, 1.0);
            EXPECT_GT(r.latency_us, 0.0);
        }
    }
}

TEST(Estimate, JsonReportIsFlaggedApproximate)
{
    const auto j = to_json(estimate(fixtures::preset("tiny", 1, false), par(16, 16, 8)));
    EXPECT_TRUE(j.at("approximate").get<bool>());
    EXPECT_NE(j.at("note").get<std::string>().find("approximate"), std::string::npos);
    EXPECT_EQ(j.at("layers").size(), 3u);
    EXPECT_DOUBLE_EQ(j.at("peak").at("peak_gops").get<double>(), 4096.0);
    EXPECT_TRUE(j.contains("totals"));
}
