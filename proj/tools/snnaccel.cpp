// snnaccel - command-line front end for the accelerator simulator.
#include <iostream>

#include <CLI11.hpp>

#include "cli_commands.hpp"

namespace {

void add_common(CLI::App* cmd, snnaccel::cli::CommonOptions& o)
{
    cmd->add_option("--par", o.par, "Parallelism m,v,n,s")->capture_default_str();
    cmd->add_option("--fast-mhz", o.fast_mhz, "Fast clock in MHz (slow clock is half)")->capture_default_str();
    cmd->add_option("--report-out", o.report_out, "Write the JSON report to this file");
    cmd->add_option("--seed", o.seed, "Seed for generated inputs and presets")->capture_default_str();
}

} // namespace

int main(int argc, char** argv)
{
    namespace cli = snnaccel::cli;
    CLI::App app{"Spiking neural network accelerator simulator"};
    app.require_subcommand(1);

    cli::RunOptions run;
    auto* run_cmd = app.add_subcommand("run", "Run a network through the reference model and/or the accelerator");
    run_cmd->add_option("manifest", run.manifest, "Network manifest (JSON)")->required();
    run_cmd->add_option("input", run.input, "Input spike blob; omitted: seeded random input");
    run_cmd->add_option("--mode", run.mode, "oracle, accel or compare")
        ->check(CLI::IsMember({"oracle", "accel", "compare"}))
        ->capture_default_str();
    add_common(run_cmd, run);

    cli::PerfOptionsCli perf;
    auto* perf_cmd = app.add_subcommand("perf", "Static throughput and latency estimate");
    perf_cmd->add_option("manifest", perf.manifest, "Network manifest; omitted: peak figures only");
    perf_cmd->add_option("--preset", perf.preset, "Estimate a built-in preset network instead of a manifest");
    perf_cmd->add_option("--weight-cache-kib", perf.weight_cache_kib, "On-chip weight cache size")->capture_default_str();
    perf_cmd->add_flag("--single-port", perf.single_port, "Disable the second read port");
    add_common(perf_cmd, perf);

    cli::CalibrateOptions cal;
    auto* cal_cmd = app.add_subcommand("calibrate", "Choose saturate or shift per layer from sample inputs");
    cal_cmd->add_option("manifest", cal.manifest, "Network manifest")->required();
    cal_cmd->add_option("samples", cal.samples, "Sample input spike blobs")->required();
    cal_cmd->add_option("--policy-cutoff", cal.policy_cutoff, "Largest fraction of values > 3 that still saturates")
        ->capture_default_str();
    cal_cmd->add_option("--out", cal.out, "Output manifest path");
    cal_cmd->add_option("--report-out", cal.report_out, "Write the decisions as JSON");

    cli::FixtureOptions fix;
    auto* fix_cmd = app.add_subcommand("fixture", "Write a preset network and its input");
    fix_cmd->add_option("preset", fix.preset, "tiny, sew-block, avgpool-shift or snn7-cifar10")->required();
    fix_cmd->add_option("out_dir", fix.out_dir, "Output directory")->required();
    fix_cmd->add_option("--seed", fix.seed, "Seed")->capture_default_str();

    try {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? cli::kOk : cli::kUsage;
    }

    if (*run_cmd) return cli::cmd_run(run, std::cout, std::cerr);
    if (*perf_cmd) return cli::cmd_perf(perf, std::cout, std::cerr);
    if (*cal_cmd) return cli::cmd_calibrate(cal, std::cout, std::cerr);
    if (*fix_cmd) return cli::cmd_fixture(fix, std::cout, std::cerr);
    return cli::kUsage;
}
