// Builds a small preset network, runs it through the reference model and the
// accelerator model, and prints class scores plus the modeled performance.
#include <iostream>

#include <snnaccel/snnaccel.hpp>

int main()
{
    using namespace snnaccel;

    const NetworkDesc net = fixtures::preset("sew-block");
    const SpikeTensor input = fixtures::preset_input(net);
    const auto par = ParallelismConfig::make(16, 16, 8, 4, 500);

    const CompareResult cmp = compare_network(net, input, par);

    std::cout << "network " << net.name << ", " << net.layers.size() << " layers, T=" << net.time_steps() << '\n';
    std::cout << "scores:";
    for (auto s : cmp.accel.class_scores) std::cout << ' ' << s;
    std::cout << '\n';
    std::cout << (cmp.match() ? "accelerator output matches the reference model\n"
                              : "accelerator output DIFFERS from the reference model\n");
    if (cmp.divergence) std::cout << cmp.divergence->message << '\n';

    const PerfReport& perf = cmp.accel.perf;
    std::cout << "peak " << perf.peak_gops << " GOP/s on " << perf.dsp_count << " DSPs\n";
    for (const auto& layer : perf.layers) {
        std::cout << "  " << layer.name << ": " << layer.modeled_cycles << " cycles, utilization "
                  << layer.utilization << (layer.bandwidth_bound ? " (bandwidth bound)" : "") << '\n';
    }
    std::cout << "modeled latency " << perf.latency_us << " us\n";
    return cmp.match() ? 0 : 1;
}
