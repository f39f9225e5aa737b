// manifest.hpp - JSON manifest + tensor blob loading and saving.
//
// A manifest is one JSON document describing the layer list; weights and
// biases live in blob files (see blob_io.hpp) referenced by relative path.
// load_manifest() returns a fully validated NetworkDesc.
#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "blob_io.hpp"
#include "errors.hpp"
#include "model_ir.hpp"

namespace snnaccel {

inline constexpr const char* kManifestFormat = "snnaccel-manifest";
inline constexpr int kManifestVersion = 1;

namespace manifest_detail {

using nlohmann::json;

inline json shape_to_json(const LayerShape& s)
{
    return json{{"t", s.t},     {"h_i", s.h_i},       {"w_i", s.w_i}, {"h_o", s.h_o},
                {"w_o", s.w_o}, {"k_h", s.k_h},       {"k_w", s.k_w}, {"stride", s.stride},
                {"pad", s.pad}, {"c_i", s.c_i},       {"c_o", s.c_o}};
}

inline LayerShape shape_from_json(const json& j)
{
    LayerShape s;
    s.t = j.at("t").get<int>();
    s.h_i = j.at("h_i").get<int>();
    s.w_i = j.at("w_i").get<int>();
    s.h_o = j.at("h_o").get<int>();
    s.w_o = j.at("w_o").get<int>();
    s.k_h = j.at("k_h").get<int>();
    s.k_w = j.at("k_w").get<int>();
    s.stride = j.at("stride").get<int>();
    s.pad = j.at("pad").get<int>();
    s.c_i = j.at("c_i").get<int>();
    s.c_o = j.at("c_o").get<int>();
    return s;
}

inline std::string blob_name(const LayerConfig& c, std::size_t index, const char* kind)
{
    const auto base = c.name.empty() ? "layer" + std::to_string(index) : c.name;
    return base + "." + kind + ".snnt";
}

} // namespace manifest_detail

// Serializes the network description (without blobs) to JSON.
inline nlohmann::json manifest_to_json(const NetworkDesc& net)
{
    using manifest_detail::json;
    json layers = json::array();
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const auto& c = net.layers[i].config;
        json l{{"name", c.name},
               {"shape", manifest_detail::shape_to_json(c.shape)},
               {"coding", to_string(c.coding)},
               {"neuron", {{"type", to_string(c.neuron.type)},
                           {"threshold", c.neuron.threshold},
                           {"leak_shift", c.neuron.leak_shift}}},
               {"weights", manifest_detail::blob_name(c, i, "weights")},
               {"bias", manifest_detail::blob_name(c, i, "bias")},
               {"pool", to_string(c.pool)},
               {"pool_policy", to_string(c.pool_policy)},
               {"post_shift_left", c.post_shift_left},
               {"ann_flops", c.ann_flops}};
        if (c.residual) {
            const auto& r = *c.residual;
            l["residual"] = {{"source", r.source},
                             {"function", to_string(r.function)},
                             {"shortcut_bit_width", r.shortcut_bit_width},
                             {"overflow_policy", to_string(r.overflow_policy)},
                             {"iand_order", to_string(r.iand_order)}};
        }
        if (c.calibration) {
            l["calibration"] = {{"total", c.calibration->total},
                                {"exceeded_count", c.calibration->exceeded_count},
                                {"shifted_mass", c.calibration->shifted_mass}};
        }
        layers.push_back(std::move(l));
    }
    return json{{"format", kManifestFormat},
                {"version", kManifestVersion},
                {"name", net.name},
                {"classifier", {{"readout", net.classifier.readout}}},
                {"layers", std::move(layers)}};
}

// Writes <path> plus one weight and one bias blob per layer beside it.
inline void save_manifest(const NetworkDesc& net, const std::filesystem::path& path)
{
    const auto dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
    std::filesystem::create_directories(dir);
    const auto doc = manifest_to_json(net);
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const auto& layer = net.layers[i];
        const auto& jl = doc["layers"][i];
        blob::write_file(dir / jl["weights"].get<std::string>(), blob::from_weights(layer.weights));
        blob::write_file(dir / jl["bias"].get<std::string>(), blob::from_i32(layer.config.neuron.bias));
    }
    std::ofstream f(path);
    if (!f) throw IoError("cannot open " + path.string() + " for writing");
    f << doc.dump(2) << '\n';
    if (!f) throw IoError("write failed for " + path.string());
}

// Parses the JSON document; blob paths are resolved against base_dir.
inline NetworkDesc manifest_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir)
{
    NetworkDesc net;
    try {
        if (doc.at("format").get<std::string>() != kManifestFormat) throw ParseError("manifest: unknown format tag");
        if (doc.at("version").get<int>() != kManifestVersion) throw ParseError("manifest: unsupported version");
        net.name = doc.value("name", "");
        if (doc.contains("classifier")) net.classifier.readout = doc["classifier"].value("readout", "spike_count");
        if (net.classifier.readout != "spike_count") throw ParseError("manifest: unsupported classifier readout");

        for (const auto& jl : doc.at("layers")) {
            Layer layer;
            auto& c = layer.config;
            c.name = jl.value("name", "");
            c.shape = manifest_detail::shape_from_json(jl.at("shape"));
            c.coding = parse_coding(jl.at("coding").get<std::string>());
            const auto& jn = jl.at("neuron");
            c.neuron.type = parse_neuron_type(jn.at("type").get<std::string>());
            c.neuron.threshold = jn.at("threshold").get<std::int32_t>();
            c.neuron.leak_shift = jn.value("leak_shift", 0);
            c.pool = parse_pool(jl.value("pool", "none"));
            c.pool_policy = parse_policy(jl.value("pool_policy", "saturate"));
            c.post_shift_left = jl.value("post_shift_left", 0);
            c.ann_flops = jl.value("ann_flops", std::int64_t{0});
            if (jl.contains("residual") && !jl["residual"].is_null()) {
                const auto& jr = jl["residual"];
                ResidualConfig r;
                r.source = jr.at("source").get<int>();
                r.function = parse_residual_function(jr.at("function").get<std::string>());
                r.shortcut_bit_width = jr.at("shortcut_bit_width").get<int>();
                r.overflow_policy = parse_overflow_policy(jr.value("overflow_policy", "saturate2"));
                r.iand_order = parse_iand_order(jr.value("iand_order", "negate_backbone"));
                c.residual = r;
            }
            if (jl.contains("calibration")) {
                const auto& jc = jl["calibration"];
                c.calibration = PolicyStats{jc.at("total").get<std::int64_t>(),
                                            jc.at("exceeded_count").get<std::int64_t>(),
                                            jc.at("shifted_mass").get<std::int64_t>()};
            }
            const auto wpath = base_dir / jl.at("weights").get<std::string>();
            const auto bpath = base_dir / jl.at("bias").get<std::string>();
            layer.weights = blob::to_weights(blob::read_file(wpath), wpath.string());
            c.neuron.bias = blob::to_i32(blob::read_file(bpath), bpath.string());
            net.layers.push_back(std::move(layer));
        }
    }
    catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("manifest: ") + e.what());
    }
    return net;
}

inline void require_valid(const NetworkDesc& net)
{
    const auto diags = validate_chain(net);
    if (!diags.empty()) {
        std::string msg = "network validation failed:";
        for (const auto& d : diags) msg += "\n  " + d;
        throw ValidationError(msg);
    }
}

inline NetworkDesc load_manifest(const std::filesystem::path& path)
{
    std::ifstream f(path);
    if (!f) throw IoError("cannot open manifest " + path.string());
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(f);
    }
    catch (const nlohmann::json::exception& e) {
        throw ParseError("manifest " + path.string() + ": " + e.what());
    }
    auto net = manifest_from_json(doc, path.has_parent_path() ? path.parent_path() : ".");
    require_valid(net);
    return net;
}

} // namespace snnaccel
