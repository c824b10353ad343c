// Copyright (C) 2026 FusionEdit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace fusionedit {

/// Dense channels x height x width float tensor, row-major, channel outermost.
///
/// Carries latents, velocities and value tensors. Element values are always
/// finite; construction from data containing NaN/Inf throws DataError.
class LatentTensor {
public:
    LatentTensor() = default;
    LatentTensor(std::size_t channels, std::size_t height, std::size_t width, float fill = 0.0f);
    LatentTensor(std::size_t channels, std::size_t height, std::size_t width, std::vector<float> data);

    std::size_t channels() const { return m_channels; }
    std::size_t height() const { return m_height; }
    std::size_t width() const { return m_width; }
    std::size_t plane_size() const { return m_height * m_width; }
    std::size_t size() const { return m_data.size(); }
    bool empty() const { return m_data.empty(); }

    float& at(std::size_t c, std::size_t y, std::size_t x) { return m_data[(c * m_height + y) * m_width + x]; }
    float at(std::size_t c, std::size_t y, std::size_t x) const { return m_data[(c * m_height + y) * m_width + x]; }

    std::span<float> channel(std::size_t c) { return {m_data.data() + c * plane_size(), plane_size()}; }
    std::span<const float> channel(std::size_t c) const { return {m_data.data() + c * plane_size(), plane_size()}; }

    std::span<float> data() { return m_data; }
    std::span<const float> data() const { return m_data; }

    bool same_shape(const LatentTensor& other) const {
        return m_channels == other.m_channels && m_height == other.m_height && m_width == other.m_width;
    }
    std::string shape_string() const;

    // Throws DataError if any element is NaN or infinite.
    void check_finite(const char* what = "tensor") const;

    friend bool operator==(const LatentTensor&, const LatentTensor&) = default;

private:
    std::size_t m_channels = 0;
    std::size_t m_height = 0;
    std::size_t m_width = 0;
    std::vector<float> m_data;
};

/// Non-negative real value per pixel (discrepancy maps, distance fields).
/// Stored in double precision; persisted as float32.
struct ScalarMap {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> data;

    ScalarMap() = default;
    ScalarMap(std::size_t h, std::size_t w, double fill = 0.0) : height(h), width(w), data(h * w, fill) {}

    double& at(std::size_t y, std::size_t x) { return data[y * width + x]; }
    double at(std::size_t y, std::size_t x) const { return data[y * width + x]; }
    std::size_t size() const { return data.size(); }
};

struct BinaryMask {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<std::uint8_t> bits;

    BinaryMask() = default;
    BinaryMask(std::size_t h, std::size_t w, std::uint8_t fill = 0) : height(h), width(w), bits(h * w, fill) {}

    std::uint8_t& at(std::size_t y, std::size_t x) { return bits[y * width + x]; }
    std::uint8_t at(std::size_t y, std::size_t x) const { return bits[y * width + x]; }
    std::size_t size() const { return bits.size(); }
    std::size_t count() const;

    friend bool operator==(const BinaryMask&, const BinaryMask&) = default;
};

/// Per-pixel blend weights in [0, 1].
struct SoftMask {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> weights;

    SoftMask() = default;
    SoftMask(std::size_t h, std::size_t w, double fill = 0.0) : height(h), width(w), weights(h * w, fill) {}

    double& at(std::size_t y, std::size_t x) { return weights[y * width + x]; }
    double at(std::size_t y, std::size_t x) const { return weights[y * width + x]; }
    std::size_t size() const { return weights.size(); }
};

// Shape checks shared by every element-wise operation.
void require_same_shape(const LatentTensor& a, const LatentTensor& b, const char* op);
void require_spatial_match(const LatentTensor& t, std::size_t height, std::size_t width, const char* op);

SoftMask to_soft(const BinaryMask& mask);

}  // namespace fusionedit
