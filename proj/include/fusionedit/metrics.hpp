// Copyright (C) 2026 FusionEdit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>

#include "fusionedit/tensor.hpp"

namespace fusionedit {

inline constexpr std::size_t kSsimWindow = 8;

struct MetricReport {
    double mse = 0.0;
    double psnr = 0.0;           // +inf when mse == 0
    std::optional<double> ssim;  // empty when no window fits the evaluated region
};

double mse(const LatentTensor& a, const LatentTensor& b);
double psnr_from_mse(double mse, double peak);
double psnr(const LatentTensor& a, const LatentTensor& b, double peak = 1.0);

/// Mean SSIM over all 8x8 uniform windows (stride 1) and channels, with
/// C1 = (0.01 peak)^2 and C2 = (0.03 peak)^2 and population window moments.
double ssim(const LatentTensor& a, const LatentTensor& b, double peak = 1.0);

/// Full report; with `region`, MSE/PSNR use only pixels where region is set
/// and SSIM only windows lying entirely inside it.
MetricReport compare(const LatentTensor& a, const LatentTensor& b, double peak = 1.0,
                     const BinaryMask* region = nullptr);

}  // namespace fusionedit
