// tensor.hpp - dense 4-D containers used throughout the simulator.
//
// Layout is row-major over four axes. Spike tensors use (t, c, h, w),
// weights use (c_o, c_i, k_h, k_w).
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace snnaccel {

using Dims4 = std::array<std::size_t, 4>;

template <typename T>
class Tensor4 {
public:
    using value_type = T;

    Tensor4() = default;
    explicit Tensor4(Dims4 dims, T fill = T{})
        : dims_(dims), data_(dims[0] * dims[1] * dims[2] * dims[3], fill)
    {
    }
    Tensor4(Dims4 dims, std::vector<T> data) : dims_(dims), data_(std::move(data))
    {
        if (data_.size() != dims[0] * dims[1] * dims[2] * dims[3]) {
            throw ValidationError("tensor payload size " + std::to_string(data_.size()) +
                                  " does not match dims");
        }
    }

    const Dims4& dims() const noexcept { return dims_; }
    std::size_t dim(std::size_t axis) const noexcept { return dims_[axis]; }
    std::size_t size() const noexcept { return data_.size(); }

    std::size_t offset(std::size_t a, std::size_t b, std::size_t c, std::size_t d) const noexcept
    {
        return ((a * dims_[1] + b) * dims_[2] + c) * dims_[3] + d;
    }

    T& operator()(std::size_t a, std::size_t b, std::size_t c, std::size_t d) noexcept
    {
        return data_[offset(a, b, c, d)];
    }
    const T& operator()(std::size_t a, std::size_t b, std::size_t c, std::size_t d) const noexcept
    {
        return data_[offset(a, b, c, d)];
    }

    std::span<T> values() noexcept { return data_; }
    std::span<const T> values() const noexcept { return data_; }
    const std::vector<T>& raw() const noexcept { return data_; }

    bool operator==(const Tensor4&) const = default;

private:
    Dims4 dims_{0, 0, 0, 0};
    std::vector<T> data_;
};

using PsumTensor = Tensor4<std::int32_t>;

// Multi-bit spike activations, axes (t, c, h, w). Every element is < 2^B.
class SpikeTensor {
public:
    SpikeTensor() = default;
    SpikeTensor(Dims4 dims, int bit_width) : bit_width_(check_width(bit_width)), data_(dims) {}
    SpikeTensor(Dims4 dims, int bit_width, std::vector<std::uint8_t> values)
        : bit_width_(check_width(bit_width)), data_(dims, std::move(values))
    {
        validate();
    }

    int bit_width() const noexcept { return bit_width_; }
    std::uint8_t max_value() const noexcept
    {
        return static_cast<std::uint8_t>((1u << bit_width_) - 1u);
    }

    std::size_t t() const noexcept { return data_.dim(0); }
    std::size_t c() const noexcept { return data_.dim(1); }
    std::size_t h() const noexcept { return data_.dim(2); }
    std::size_t w() const noexcept { return data_.dim(3); }
    const Dims4& dims() const noexcept { return data_.dims(); }
    std::size_t size() const noexcept { return data_.size(); }

    std::uint8_t operator()(std::size_t t, std::size_t c, std::size_t y, std::size_t x) const noexcept
    {
        return data_(t, c, y, x);
    }

    void set(std::size_t t, std::size_t c, std::size_t y, std::size_t x, unsigned value)
    {
        if (value > max_value()) {
            throw ValidationError("spike value " + std::to_string(value) + " does not fit " +
                                  std::to_string(bit_width_) + " bits");
        }
        data_(t, c, y, x) = static_cast<std::uint8_t>(value);
    }

    std::span<const std::uint8_t> values() const noexcept { return data_.values(); }

    // Throws if any element is >= 2^B.
    void validate() const
    {
        const auto limit = max_value();
        for (auto v : data_.values()) {
            if (v > limit) {
                throw ValidationError("spike value " + std::to_string(v) + " does not fit " +
                                      std::to_string(bit_width_) + " bits");
            }
        }
    }

    bool operator==(const SpikeTensor&) const = default;

private:
    static int check_width(int bits)
    {
        if (bits < 1 || bits > 8) {
            throw ValidationError("spike bit width must be in 1..8, got " + std::to_string(bits));
        }
        return bits;
    }

    int bit_width_ = 1;
    Tensor4<std::uint8_t> data_;
};

// Signed 8-bit synaptic weights, axes (c_o, c_i, k_h, k_w).
using WeightTensor = Tensor4<std::int8_t>;

} // namespace snnaccel
