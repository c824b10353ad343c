// Copyright (C) 2026 FusionEdit Authors
// SPDX-License-Identifier: Apache-2.0

#include "fusionedit/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fusionedit/errors.hpp"

namespace fusionedit {

LatentTensor::LatentTensor(std::size_t channels, std::size_t height, std::size_t width, float fill)
    : m_channels(channels), m_height(height), m_width(width), m_data(channels * height * width, fill) {
    if (channels == 0 || height == 0 || width == 0) {
        throw ShapeError("tensor dimensions must be positive, got " + shape_string());
    }
    check_finite();
}

LatentTensor::LatentTensor(std::size_t channels, std::size_t height, std::size_t width, std::vector<float> data)
    : m_channels(channels), m_height(height), m_width(width), m_data(std::move(data)) {
    if (channels == 0 || height == 0 || width == 0) {
        throw ShapeError("tensor dimensions must be positive, got " + shape_string());
    }
    if (m_data.size() != channels * height * width) {
        throw ShapeError("tensor data length " + std::to_string(m_data.size()) + " does not match shape " +
                         shape_string());
    }
    check_finite();
}

std::string LatentTensor::shape_string() const {
    return std::to_string(m_channels) + "x" + std::to_string(m_height) + "x" + std::to_string(m_width);
}

void LatentTensor::check_finite(const char* what) const {
    auto bad = std::find_if(m_data.begin(), m_data.end(), [](float v) { return !std::isfinite(v); });
    if (bad != m_data.end()) {
        throw DataError(std::string(what) + " contains a non-finite value at flat index " +
                        std::to_string(bad - m_data.begin()));
    }
}

std::size_t BinaryMask::count() const {
    return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

void require_same_shape(const LatentTensor& a, const LatentTensor& b, const char* op) {
    if (!a.same_shape(b)) {
        throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_string() + " vs " + b.shape_string());
    }
}

void require_spatial_match(const LatentTensor& t, std::size_t height, std::size_t width, const char* op) {
    if (t.height() != height || t.width() != width) {
        throw ShapeError(std::string(op) + ": mask " + std::to_string(height) + "x" + std::to_string(width) +
                         " does not match tensor " + t.shape_string());
    }
}

SoftMask to_soft(const BinaryMask& mask) {
    SoftMask soft(mask.height, mask.width);
    std::transform(mask.bits.begin(), mask.bits.end(), soft.weights.begin(),
                   [](std::uint8_t b) { return b ? 1.0 : 0.0; });
    return soft;
}

}  // namespace fusionedit
