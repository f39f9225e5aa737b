// blob_io.hpp - raw tensor blob files.
//
// Layout (all integers little-endian):
//   bytes 0..3   magic "SNNT"
//   byte  4      format version (1)
//   byte  5      element type: 1 = uint8, 2 = int8, 3 = int32
//   byte  6      spike bit width (1..8), 0 for non-spike tensors
//   byte  7      rank (1..4)
//   rank x u32   dimensions, outermost first
//   payload      row-major elements, little-endian
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "errors.hpp"
#include "tensor.hpp"

namespace snnaccel::blob {

inline constexpr std::array<char, 4> kMagic{'S', 'N', 'N', 'T'};
inline constexpr std::uint8_t kVersion = 1;

enum class ElementType : std::uint8_t { u8 = 1, i8 = 2, i32 = 3 };

constexpr std::size_t element_size(ElementType e) noexcept { return e == ElementType::i32 ? 4 : 1; }

struct RawBlob {
    ElementType type = ElementType::u8;
    std::uint8_t bit_width = 0;
    std::vector<std::uint32_t> dims;
    std::vector<std::uint8_t> payload; // little-endian bytes

    std::size_t count() const noexcept
    {
        std::size_t n = 1;
        for (auto d : dims) n *= d;
        return n;
    }
};

inline std::vector<std::uint8_t> encode(const RawBlob& b)
{
    std::vector<std::uint8_t> out(kMagic.begin(), kMagic.end());
    out.push_back(kVersion);
    out.push_back(static_cast<std::uint8_t>(b.type));
    out.push_back(b.bit_width);
    out.push_back(static_cast<std::uint8_t>(b.dims.size()));
    for (auto d : b.dims) {
        for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>(d >> (8 * k)));
    }
    out.insert(out.end(), b.payload.begin(), b.payload.end());
    return out;
}

inline RawBlob decode(const std::vector<std::uint8_t>& bytes, const std::string& what = "blob")
{
    if (bytes.size() < 8 || !std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
        throw ParseError(what + ": bad magic");
    }
    if (bytes[4] != kVersion) throw ParseError(what + ": unsupported version " + std::to_string(bytes[4]));
    RawBlob b;
    const auto type = bytes[5];
    if (type < 1 || type > 3) throw ParseError(what + ": unknown element type " + std::to_string(type));
    b.type = static_cast<ElementType>(type);
    b.bit_width = bytes[6];
    const std::size_t rank = bytes[7];
    if (rank < 1 || rank > 4) throw ParseError(what + ": rank must be 1..4");
    std::size_t pos = 8;
    if (bytes.size() < pos + 4 * rank) throw ParseError(what + ": truncated header");
    for (std::size_t r = 0; r < rank; ++r) {
        std::uint32_t d = 0;
        for (int k = 0; k < 4; ++k) d |= std::uint32_t{bytes[pos++]} << (8 * k);
        b.dims.push_back(d);
    }
    const std::size_t expect = b.count() * element_size(b.type);
    if (bytes.size() - pos != expect) {
        throw ParseError(what + ": payload is " + std::to_string(bytes.size() - pos) + " bytes, expected " +
                         std::to_string(expect));
    }
    b.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.end());
    return b;
}

inline void write_file(const std::filesystem::path& path, const RawBlob& b)
{
    const auto bytes = encode(b);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string() + " for writing");
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw IoError("write failed for " + path.string());
}

inline RawBlob read_file(const std::filesystem::path& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return decode(bytes, path.string());
}

namespace detail {
inline Dims4 dims4(const RawBlob& b, const std::string& what)
{
    if (b.dims.size() != 4) throw ParseError(what + ": expected a rank-4 tensor");
    return {b.dims[0], b.dims[1], b.dims[2], b.dims[3]};
}
} // namespace detail

inline RawBlob from_spikes(const SpikeTensor& s)
{
    RawBlob b;
    b.type = ElementType::u8;
    b.bit_width = static_cast<std::uint8_t>(s.bit_width());
    b.dims = {static_cast<std::uint32_t>(s.t()), static_cast<std::uint32_t>(s.c()),
              static_cast<std::uint32_t>(s.h()), static_cast<std::uint32_t>(s.w())};
    b.payload.assign(s.values().begin(), s.values().end());
    return b;
}

inline SpikeTensor to_spikes(const RawBlob& b, const std::string& what = "spike blob")
{
    if (b.type != ElementType::u8 || b.bit_width < 1 || b.bit_width > 8)
        throw ParseError(what + ": not a spike tensor");
    try {
        return SpikeTensor(detail::dims4(b, what), b.bit_width, b.payload);
    }
    catch (const ParseError&) {
        throw;
    }
    catch (const ValidationError& e) {
        throw ValidationError(what + ": " + e.what());
    }
}

inline RawBlob from_weights(const WeightTensor& w)
{
    RawBlob b;
    b.type = ElementType::i8;
    for (auto d : w.dims()) b.dims.push_back(static_cast<std::uint32_t>(d));
    for (auto v : w.values()) b.payload.push_back(static_cast<std::uint8_t>(v));
    return b;
}

inline WeightTensor to_weights(const RawBlob& b, const std::string& what = "weight blob")
{
    if (b.type != ElementType::i8) throw ParseError(what + ": weights must be int8");
    std::vector<std::int8_t> values;
    values.reserve(b.payload.size());
    for (auto byte : b.payload) values.push_back(static_cast<std::int8_t>(byte));
    return WeightTensor(detail::dims4(b, what), std::move(values));
}

inline RawBlob from_i32(const std::vector<std::int32_t>& v)
{
    RawBlob b;
    b.type = ElementType::i32;
    b.dims = {static_cast<std::uint32_t>(v.size())};
    for (auto x : v) {
        const auto u = static_cast<std::uint32_t>(x);
        for (int k = 0; k < 4; ++k) b.payload.push_back(static_cast<std::uint8_t>(u >> (8 * k)));
    }
    return b;
}

inline std::vector<std::int32_t> to_i32(const RawBlob& b, const std::string& what = "int32 blob")
{
    if (b.type != ElementType::i32 || b.dims.size() != 1) throw ParseError(what + ": expected rank-1 int32");
    std::vector<std::int32_t> out(b.dims[0]);
    for (std::size_t i = 0; i < out.size(); ++i) {
        std::uint32_t u = 0;
        for (int k = 0; k < 4; ++k) u |= std::uint32_t{b.payload[4 * i + k]} << (8 * k);
        out[i] = static_cast<std::int32_t>(u);
    }
    return out;
}

inline void save_spikes(const std::filesystem::path& p, const SpikeTensor& s) { write_file(p, from_spikes(s)); }
inline SpikeTensor load_spikes(const std::filesystem::path& p) { return to_spikes(read_file(p), p.string()); }

} // namespace snnaccel::blob
