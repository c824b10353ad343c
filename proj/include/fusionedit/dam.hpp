// Copyright (C) 2026 FusionEdit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "fusionedit/tensor.hpp"

namespace fusionedit {

struct DamConfig {
    double beta = 0.1;     // base strength
    double gamma = 0.5;    // disparity sensitivity
    double eta = 0.5;      // neutral threshold
    double epsilon = 1e-6; // guards sigma = 0

    void validate() const;
};

struct ChannelStats {
    std::vector<double> mean;
    std::vector<double> std;  // population (1/N)
};

ChannelStats channel_stats(const LatentTensor& v);

/// Re-normalises every channel of `v` to the mean/std of the matching channel
/// of `v_ref`: sigma_ref * (v - mu) / (sigma + epsilon) + mu_ref.
LatentTensor adain(const LatentTensor& v, const LatentTensor& v_ref, double epsilon);

/// Fusion weight clip(beta (1 - t) (1 - gamma (delta_bar - eta)), 0, 1).
/// Large prompt disparity (delta_bar above eta) weakens the statistics
/// transfer; late timesteps strengthen it.
double adaptive_alpha(const DamConfig& config, double t, double delta_bar);

/// Mean of the discrepancy map after scaling it to [0, 1] by its maximum.
/// An all-zero map gives 0.
double mean_disparity(const ScalarMap& s_bar);

/// alpha * adain(v, v_ref) + (1 - alpha) * v. Exact at alpha = 0.
LatentTensor fuse_values(const LatentTensor& v, const LatentTensor& v_ref, double alpha, double epsilon);

}  // namespace fusionedit
