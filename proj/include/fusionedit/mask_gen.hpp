// Copyright (C) 2026 FusionEdit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "fusionedit/flow.hpp"
#include "fusionedit/tensor.hpp"

namespace fusionedit {

struct DiscrepancyMap {
    ScalarMap map;
    int repeats = 1;
};

/// Mean discrepancy over non-overlapping patch_size x patch_size tiles.
/// Tiles on the right/bottom edge may be smaller.
struct PatchGrid {
    std::size_t patch_size = 1;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t height = 0;  // pixel extent the grid was built from
    std::size_t width = 0;
    std::vector<double> means;  // row-major, rows x cols

    double at(std::size_t r, std::size_t c) const { return means[r * cols + c]; }
};

enum class RegionStatus { ok, empty_edit_region };

struct Region {
    BinaryMask mask;                    // pixel resolution
    std::vector<std::uint8_t> patches;  // accepted patches, rows x cols
    RegionStatus status = RegionStatus::ok;
};

/// Per-pixel L2 norm over channels of v(Z, T', tar) - v(Z, T', src), with
/// Z = (1 - T') x_src + T' n and n drawn from `rng_seed`.
ScalarMap discrepancy_once(const VelocityProvider& provider, const LatentTensor& x_src, double t_prime,
                           const GuidanceConfig& guidance, std::uint64_t rng_seed);

/// Average of discrepancy_once over seeds rng_seed + 0 .. rng_seed + repeats - 1.
DiscrepancyMap discrepancy_avg(const VelocityProvider& provider, const LatentTensor& x_src, double t_prime,
                               const GuidanceConfig& guidance, int repeats, std::uint64_t rng_seed);

PatchGrid patch_means(const ScalarMap& s, std::size_t patch_size);

/// Grows a 4-connected patch region from the highest-mean patch (ties go to
/// the lowest row-major index). A neighbour joins when its mean is at least
/// merge_ratio times the seed mean. An all-zero grid yields an empty mask
/// with status empty_edit_region.
Region region_grow(const PatchGrid& grid, double merge_ratio);

/// Squared Euclidean distance from each pixel to the nearest pixel where
/// `feature` is set; +inf everywhere when no pixel is set.
std::vector<double> squared_distance_transform(const std::vector<std::uint8_t>& feature, std::size_t height,
                                               std::size_t width);

/// Distance to the nearest pixel of the opposite mask value, minus one and
/// floored at zero, so pixels touching the boundary get 0. A mask with no
/// boundary (all 0 or all 1) yields +inf everywhere.
ScalarMap distance_to_boundary(const BinaryMask& m);

/// Sigmoid transition band over the signed boundary distance
/// s = D outside the region, s = -D inside:
///
///   w = 1 / (1 + exp(k (s - d_max / 2)))   when D <= d_max
///   w = binary value                       otherwise
///
/// The half-weight contour sits d_max / 2 outside the binary region and
/// weights fall monotonically from inside to outside.
SoftMask soften(const BinaryMask& m, const ScalarMap& d, double d_max, double k);

}  // namespace fusionedit
