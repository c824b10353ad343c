// Copyright (C) 2026 FusionEdit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "fusionedit/tensor.hpp"

namespace fusionedit {

/// Result of a soft-mask blend: the fused tensor plus the transition band,
/// the flat pixel indices (y * width + x) where 0 < weight < 1.
struct FusedLatent {
    LatentTensor tensor;
    std::vector<std::size_t> band;
};

struct TvConfig {
    double lambda = 50.0;
    double step_size = 0.0;  // <= 0 selects 1 / (8 + 2 lambda)
    int max_iters = 500;
    double tol = 1e-8;       // absolute loss decrease

    double effective_step() const;
    void validate() const;
};

struct TvResult {
    LatentTensor tensor;
    std::vector<double> losses;  // losses[0] is the initial loss; one entry per accepted step after
    int iterations = 0;
};

/// m * x_mid + (1 - m) * x_src per element, mask broadcast over channels.
FusedLatent fuse_latents(const LatentTensor& x_mid, const LatentTensor& x_src, const SoftMask& m);

/// Hard blend m * x_tar + (1 - m) * x_src.
LatentTensor fuse_binary(const LatentTensor& x_tar, const LatentTensor& x_src, const BinaryMask& m);

std::vector<std::size_t> transition_band(const SoftMask& m);

/// Smoothness + fidelity energy restricted to the band:
///   sum_{p in band} |grad x(p)|^2 + lambda * sum_{p in band} |x(p) - x_hat(p)|^2
/// where grad uses forward differences to the right and lower neighbours and
/// is zero across the image border. Summed over channels.
double tv_loss(const FusedLatent& x, const LatentTensor& x_hat, double lambda);

/// Gradient descent on tv_loss over band pixels only, with x_hat = x0.tensor.
/// Pixels outside the band are never written. Throws OptimizationError if the
/// loss becomes non-finite.
TvResult tv_refine_detailed(const FusedLatent& x0, const TvConfig& config);

inline LatentTensor tv_refine(const FusedLatent& x0, const TvConfig& config) {
    return tv_refine_detailed(x0, config).tensor;
}

}  // namespace fusionedit
