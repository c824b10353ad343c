// Copyright (C) 2026 FusionEdit Authors
// SPDX-License-Identifier: Apache-2.0

#include "fusionedit/metrics.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "fusionedit/errors.hpp"

namespace fusionedit {
namespace {

void check_peak(double peak) {
    if (!(peak > 0.0) || !std::isfinite(peak)) throw ConfigError("peak must be positive and finite");
}

double window_ssim(std::span<const float> a, std::span<const float> b, std::size_t width, std::size_t y0,
                   std::size_t x0, double c1, double c2) {
    constexpr double n = kSsimWindow * kSsimWindow;
    double sum_a = 0.0;
    double sum_b = 0.0;
    for (std::size_t y = y0; y < y0 + kSsimWindow; ++y) {
        for (std::size_t x = x0; x < x0 + kSsimWindow; ++x) {
            sum_a += a[y * width + x];
            sum_b += b[y * width + x];
        }
    }
    const double mu_a = sum_a / n;
    const double mu_b = sum_b / n;
    double var_a = 0.0;
    double var_b = 0.0;
    double cov = 0.0;
    for (std::size_t y = y0; y < y0 + kSsimWindow; ++y) {
        for (std::size_t x = x0; x < x0 + kSsimWindow; ++x) {
            const double da = a[y * width + x] - mu_a;
            const double db = b[y * width + x] - mu_b;
            var_a += da * da;
            var_b += db * db;
            cov += da * db;
        }
    }
    var_a /= n;
    var_b /= n;
    cov /= n;
    return ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) /
           ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
}

std::optional<double> mean_ssim(const LatentTensor& a, const LatentTensor& b, double peak, const BinaryMask* region) {
    const double c1 = (0.01 * peak) * (0.01 * peak);
    const double c2 = (0.03 * peak) * (0.03 * peak);
    const std::size_t h = a.height();
    const std::size_t w = a.width();

    // Windows fully inside the region, found with a summed-area table.
    std::vector<std::size_t> integral;
    if (region) {
        integral.assign((h + 1) * (w + 1), 0);
        for (std::size_t y = 0; y < h; ++y) {
            for (std::size_t x = 0; x < w; ++x) {
                integral[(y + 1) * (w + 1) + x + 1] = region->at(y, x) + integral[y * (w + 1) + x + 1] +
                                                      integral[(y + 1) * (w + 1) + x] - integral[y * (w + 1) + x];
            }
        }
    }
    auto inside = [&](std::size_t y0, std::size_t x0) {
        if (!region) return true;
        const std::size_t y1 = y0 + kSsimWindow;
        const std::size_t x1 = x0 + kSsimWindow;
        const std::size_t count = integral[y1 * (w + 1) + x1] - integral[y0 * (w + 1) + x1] -
                                  integral[y1 * (w + 1) + x0] + integral[y0 * (w + 1) + x0];
        return count == kSsimWindow * kSsimWindow;
    };

    double total = 0.0;
    std::size_t windows = 0;
    for (std::size_t c = 0; c < a.channels(); ++c) {
        for (std::size_t y = 0; y + kSsimWindow <= h; ++y) {
            for (std::size_t x = 0; x + kSsimWindow <= w; ++x) {
                if (!inside(y, x)) continue;
                total += window_ssim(a.channel(c), b.channel(c), w, y, x, c1, c2);
                ++windows;
            }
        }
    }
    if (windows == 0) return std::nullopt;
    return total / static_cast<double>(windows);
}

}  // namespace

double mse(const LatentTensor& a, const LatentTensor& b) {
    require_same_shape(a, b, "mse");
    auto da = a.data();
    auto db = b.data();
    double sum = 0.0;
    for (std::size_t i = 0; i < da.size(); ++i) {
        const double d = static_cast<double>(da[i]) - static_cast<double>(db[i]);
        sum += d * d;
    }
    return sum / static_cast<double>(da.size());
}

double psnr_from_mse(double mse, double peak) {
    check_peak(peak);
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(peak * peak / mse);
}

double psnr(const LatentTensor& a, const LatentTensor& b, double peak) { return psnr_from_mse(mse(a, b), peak); }

double ssim(const LatentTensor& a, const LatentTensor& b, double peak) {
    require_same_shape(a, b, "ssim");
    check_peak(peak);
    if (a.height() < kSsimWindow || a.width() < kSsimWindow) {
        throw ShapeError("ssim: image " + a.shape_string() + " is smaller than the 8x8 window");
    }
    return *mean_ssim(a, b, peak, nullptr);
}

MetricReport compare(const LatentTensor& a, const LatentTensor& b, double peak, const BinaryMask* region) {
    require_same_shape(a, b, "compare");
    check_peak(peak);
    if (!region) {
        MetricReport report;
        report.mse = mse(a, b);
        report.psnr = psnr_from_mse(report.mse, peak);
        if (a.height() >= kSsimWindow && a.width() >= kSsimWindow) report.ssim = mean_ssim(a, b, peak, nullptr);
        return report;
    }
    require_spatial_match(a, region->height, region->width, "compare");

    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t c = 0; c < a.channels(); ++c) {
        auto da = a.channel(c);
        auto db = b.channel(c);
        for (std::size_t i = 0; i < da.size(); ++i) {
            if (!region->bits[i]) continue;
            const double d = static_cast<double>(da[i]) - static_cast<double>(db[i]);
            sum += d * d;
            ++count;
        }
    }
    MetricReport report;
    report.mse = count ? sum / static_cast<double>(count) : 0.0;
    report.psnr = psnr_from_mse(report.mse, peak);
    report.ssim = mean_ssim(a, b, peak, region);
    return report;
}

}  // namespace fusionedit
