// Copyright (C) 2026 FusionEdit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>

#include "fusionedit/tensor.hpp"

namespace fusionedit {

/// Reads a little-endian float32, C-order NPY file (format version 1.0).
///
/// Rank-3 files load as C x H x W; rank-2 files load as a 1 x H x W tensor.
/// Throws FormatError on a malformed header or truncated payload, ShapeError on
/// any other rank, DataError on NaN/Inf payload values, IoError if unreadable.
LatentTensor read_tensor(const std::filesystem::path& path);

/// Writes `t` as rank-3 NPY 1.0 '<f4'. Values round-trip bit-exactly.
void write_tensor(const LatentTensor& t, const std::filesystem::path& path);

// Rank-2 persistence for maps and masks (values narrowed to float32).
ScalarMap read_scalar_map(const std::filesystem::path& path);
void write_scalar_map(const ScalarMap& m, const std::filesystem::path& path);
void write_mask(const BinaryMask& m, const std::filesystem::path& path);
void write_mask(const SoftMask& m, const std::filesystem::path& path);
SoftMask read_soft_mask(const std::filesystem::path& path);

/// 8-bit grayscale PNG with pixel = round(weight * 255), halves rounded away
/// from zero.
void export_mask_image(const SoftMask& m, const std::filesystem::path& path);

/// Grayscale rendering of a non-negative map normalised by its maximum.
void export_heat_image(const ScalarMap& m, const std::filesystem::path& path);

void write_gray_png(std::span<const std::uint8_t> pixels, std::size_t height, std::size_t width,
                    const std::filesystem::path& path);

}  // namespace fusionedit
