// cli_commands.hpp - subcommands of the snnaccel command-line tool.
//
// Each command returns a process exit code:
//   0  success
//   1  usage error (bad or missing arguments)
//   2  validation error (illegal configuration, manifest, blob or value range)
//   3  divergence between accelerator and reference model
//   4  I/O error (missing or unwritable file)
#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include <snnaccel/snnaccel.hpp>

namespace snnaccel::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kValidation = 2, kDivergence = 3, kIo = 4 };

struct CommonOptions {
    std::string par = "16,16,8,4";
    int fast_mhz = 500;
    std::string report_out; // empty: summary to stdout only
    std::uint64_t seed = 1;
};

struct RunOptions : CommonOptions {
    std::string manifest;
    std::string input; // empty: seeded random input
    std::string mode = "compare";
};

struct PerfOptionsCli : CommonOptions {
    std::string manifest; // empty: peak figures only (or --preset)
    std::string preset;
    std::int64_t weight_cache_kib = 128;
    bool single_port = false;
};

struct CalibrateOptions {
    std::string manifest;
    std::vector<std::string> samples;
    double policy_cutoff = kDefaultPolicyCutoff;
    std::string out; // empty: <manifest stem>.calibrated.json beside the input
    std::string report_out;
};

struct FixtureOptions {
    std::string preset;
    std::string out_dir;
    std::uint64_t seed = 1;
};

// "m,v,n,s" plus the fast clock; the slow clock is half of it.
inline ParallelismConfig parse_par(const std::string& text, int fast_mhz)
{
    std::vector<int> v;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            v.push_back(std::stoi(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        }
        catch (const std::exception&) {
            throw ValidationError("--par: '" + item + "' is not an integer");
        }
    }
    if (v.size() != 4) throw ValidationError("--par expects four comma-separated values m,v,n,s");
    if (fast_mhz <= 0 || fast_mhz % 2 != 0) throw ValidationError("--fast-mhz must be a positive even number");
    auto p = ParallelismConfig::make(v[0], v[1], v[2], v[3], fast_mhz);
    p.validate();
    return p;
}

namespace detail {

inline void write_json(const std::string& path, const nlohmann::json& j)
{
    const std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream f(p);
    if (!f) throw IoError("cannot open " + path + " for writing");
    f << j.dump(2) << '\n';
    if (!f) throw IoError("write failed for " + path);
}

inline nlohmann::json divergence_json(const Divergence& d)
{
    return {{"layer", d.layer}, {"layer_name", d.layer_name}, {"t", d.t}, {"c", d.c}, {"y", d.y}, {"x", d.x},
            {"oracle", d.oracle_value}, {"accelerator", d.accel_value}, {"message", d.message}};
}

inline SpikeTensor seeded_input(const NetworkDesc& net, std::uint64_t seed)
{
    fixtures::Rng rng(seed);
    const auto& cfg = net.input_layer();
    return fixtures::random_spikes(cfg.input_dims(), cfg.input_bits(), 300, rng);
}

inline std::string scores_str(const std::vector<std::int64_t>& s)
{
    std::string r;
    for (std::size_t i = 0; i < s.size(); ++i) r += (i ? " " : "") + std::to_string(s[i]);
    return r;
}

} // namespace detail

// Maps library exceptions to exit codes and prints the message.
template <typename F>
int guarded(F&& body, std::ostream& err)
{
    try {
        return body();
    }
    catch (const IoError& e) {
        err << "error (I/O): " << e.what() << '\n';
        return kIo;
    }
    catch (const std::filesystem::filesystem_error& e) {
        err << "error (I/O): " << e.what() << '\n';
        return kIo;
    }
    catch (const ValidationError& e) {
        err << "error (validation): " << e.what() << '\n';
        return kValidation;
    }
    catch (const OverflowError& e) {
        err << "error (validation, value range): " << e.what() << '\n';
        return kValidation;
    }
}

inline int cmd_run(const RunOptions& o, std::ostream& out, std::ostream& err)
{
    return guarded(
        [&] {
            if (o.mode != "oracle" && o.mode != "accel" && o.mode != "compare") {
                err << "error: --mode must be oracle, accel or compare\n";
                return int{kUsage};
            }
            const auto par = parse_par(o.par, o.fast_mhz);
            const auto net = load_manifest(o.manifest);
            const auto input = o.input.empty() ? detail::seeded_input(net, o.seed) : blob::load_spikes(o.input);
            if (input.dims() != net.input_layer().input_dims() || input.bit_width() != net.input_layer().input_bits())
                throw ValidationError("input blob does not match the first layer's input shape or bit width");

            nlohmann::json report{{"mode", o.mode}, {"network", net.name}};
            int code = kOk;
            if (o.mode == "oracle") {
                const auto ref = oracle::run_reference(net, input);
                report["class_scores"] = ref.class_scores;
                out << "oracle scores: " << detail::scores_str(ref.class_scores) << '\n';
            }
            else if (o.mode == "accel") {
                const auto acc = run_network_accel(net, input, par);
                report["class_scores"] = acc.class_scores;
                report["perf"] = to_json(acc.perf);
                out << "accelerator scores: " << detail::scores_str(acc.class_scores) << '\n';
                out << "modeled latency: " << acc.perf.latency_us << " us (approximate)\n";
            }
            else {
                const auto cmp = compare_network(net, input, par);
                report["oracle_scores"] = cmp.reference.class_scores;
                report["accelerator_scores"] = cmp.accel.class_scores;
                report["match"] = cmp.match();
                report["perf"] = to_json(cmp.accel.perf);
                if (cmp.divergence) report["divergence"] = detail::divergence_json(*cmp.divergence);
                out << "oracle scores:      " << detail::scores_str(cmp.reference.class_scores) << '\n';
                out << "accelerator scores: " << detail::scores_str(cmp.accel.class_scores) << '\n';
                if (cmp.match()) {
                    out << "match: all " << net.layers.size() << " layer outputs identical\n";
                }
                else {
                    out << "DIVERGENCE: "
                        << (cmp.divergence ? cmp.divergence->message : std::string("class scores differ")) << '\n';
                    code = kDivergence;
                }
            }
            if (!o.report_out.empty()) detail::write_json(o.report_out, report);
            return code;
        },
        err);
}

inline int cmd_perf(const PerfOptionsCli& o, std::ostream& out, std::ostream& err)
{
    return guarded(
        [&] {
            const auto par = parse_par(o.par, o.fast_mhz);
            PerfOptions opt;
            if (o.weight_cache_kib < 0) throw ValidationError("--weight-cache-kib must be >= 0");
            opt.weight_cache_bytes = o.weight_cache_kib * 1024;
            if (o.single_port) opt.arbiter.enabled[1] = false;
            if (!o.manifest.empty() && !o.preset.empty()) {
                err << "error: give either a manifest or --preset, not both\n";
                return int{kUsage};
            }
            PerfReport r;
            if (!o.manifest.empty())
                r = estimate(load_manifest(o.manifest), par, opt);
            else if (!o.preset.empty())
                r = estimate(fixtures::preset(o.preset, o.seed, false), par, opt);
            else
                r = peak_report(par, opt);

            out << "config m=" << par.m << " v=" << par.v << " n=" << par.n << " s=" << par.s << " @ "
                << par.f_fast_mhz << " MHz\n";
            out << "peak " << r.peak_gops << " GOP/s, " << r.dsp_count << " DSPs, " << r.gops_per_dsp
                << " GOP/s/DSP\n";
            if (!r.layers.empty()) {
                out << "modeled latency " << r.latency_us << " us, utilization " << r.utilization
                    << " (approximate)\n";
            }
            out << "note: " << r.note << '\n';
            if (!o.report_out.empty()) detail::write_json(o.report_out, to_json(r));
            return int{kOk};
        },
        err);
}

inline int cmd_calibrate(const CalibrateOptions& o, std::ostream& out, std::ostream& err)
{
    return guarded(
        [&] {
            if (o.samples.empty()) throw ValidationError("calibrate: empty sample set");
            if (!(o.policy_cutoff >= 0.0 && o.policy_cutoff <= 1.0))
                throw ValidationError("--policy-cutoff must be within [0, 1]");
            const auto net = load_manifest(o.manifest);
            std::vector<SpikeTensor> samples;
            for (const auto& s : o.samples) {
                samples.push_back(blob::load_spikes(s));
                if (samples.back().dims() != net.input_layer().input_dims() ||
                    samples.back().bit_width() != net.input_layer().input_bits())
                    throw ValidationError("sample " + s + " does not match the network input");
            }
            const auto res = calibrate_network(net, samples, o.policy_cutoff);
            require_valid(res.net);

            std::filesystem::path dst = o.out;
            if (dst.empty()) {
                const std::filesystem::path src(o.manifest);
                dst = src.parent_path() / (src.stem().string() + ".calibrated.json");
            }
            save_manifest(res.net, dst);

            nlohmann::json decisions = nlohmann::json::array();
            for (const auto& d : res.decisions) {
                const auto& cfg = res.net.layers[d.layer].config;
                out << "layer " << d.layer << " (" << cfg.name << ") " << d.what << ": "
                    << to_string(d.policy.mode) << " (" << d.policy.threshold_exceeded_count << "/"
                    << d.policy.total << " above 3)\n";
                decisions.push_back({{"layer", d.layer},
                                     {"name", cfg.name},
                                     {"stage", d.what},
                                     {"policy", to_string(d.policy.mode)},
                                     {"total", d.policy.total},
                                     {"exceeded_count", d.policy.threshold_exceeded_count},
                                     {"shifted_mass", d.policy.shifted_mass}});
            }
            if (res.decisions.empty()) out << "no layer has a saturate-or-shift choice\n";
            out << "wrote " << dst.string() << '\n';
            if (!o.report_out.empty())
                detail::write_json(o.report_out, {{"cutoff", o.policy_cutoff}, {"decisions", decisions}});
            return int{kOk};
        },
        err);
}

// Writes a preset network and the input it was fitted on.
inline int cmd_fixture(const FixtureOptions& o, std::ostream& out, std::ostream& err)
{
    return guarded(
        [&] {
            const auto net = fixtures::preset(o.preset, o.seed);
            const std::filesystem::path dir(o.out_dir);
            save_manifest(net, dir / (net.name + ".json"));
            blob::save_spikes(dir / (net.name + ".input.snnt"), fixtures::preset_input(net, o.seed));
            out << "wrote " << (dir / (net.name + ".json")).string() << " and " << net.name << ".input.snnt\n";
            return int{kOk};
        },
        err);
}

} // namespace snnaccel::cli
