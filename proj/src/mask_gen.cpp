// Copyright (C) 2026 FusionEdit Authors
// SPDX-License-Identifier: Apache-2.0

#include "fusionedit/mask_gen.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "fusionedit/errors.hpp"

namespace fusionedit {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Felzenszwalb-Huttenlocher lower envelope of parabolas (q - p)^2 + f(p),
// restricted to the sites where f is finite.
void distance_1d(const double* f, std::size_t n, std::size_t stride, double* out, std::vector<std::size_t>& sites,
                 std::vector<double>& bounds) {
    sites.clear();
    bounds.clear();
    auto intersect = [&](std::size_t p, std::size_t q) {
        const double fp = f[p * stride] + static_cast<double>(p * p);
        const double fq = f[q * stride] + static_cast<double>(q * q);
        return (fq - fp) / (2.0 * (static_cast<double>(q) - static_cast<double>(p)));
    };
    for (std::size_t q = 0; q < n; ++q) {
        if (!std::isfinite(f[q * stride])) continue;
        if (sites.empty()) {
            sites.push_back(q);
            bounds.push_back(-kInf);
            continue;
        }
        double s = intersect(sites.back(), q);
        while (s <= bounds.back()) {
            sites.pop_back();
            bounds.pop_back();
            if (sites.empty()) break;
            s = intersect(sites.back(), q);
        }
        sites.push_back(q);
        bounds.push_back(sites.size() == 1 ? -kInf : s);
    }
    if (sites.empty()) {
        for (std::size_t q = 0; q < n; ++q) out[q * stride] = kInf;
        return;
    }
    std::size_t k = 0;
    for (std::size_t q = 0; q < n; ++q) {
        while (k + 1 < sites.size() && bounds[k + 1] < static_cast<double>(q)) ++k;
        const double d = static_cast<double>(q) - static_cast<double>(sites[k]);
        out[q * stride] = d * d + f[sites[k] * stride];
    }
}

}  // namespace

ScalarMap discrepancy_once(const VelocityProvider& provider, const LatentTensor& x_src, double t_prime,
                           const GuidanceConfig& guidance, std::uint64_t rng_seed) {
    if (!(t_prime > 0.0 && t_prime < 1.0)) throw ConfigError("t_prime must lie in (0, 1)");
    const LatentTensor noise = standard_normal(x_src, rng_seed);
    const LatentTensor z = noised_source(x_src, noise, t_prime);
    const LatentTensor v_tar = guided_velocity(provider, z, t_prime, kTargetPrompt, guidance.tar_scale);
    const LatentTensor v_src = guided_velocity(provider, z, t_prime, kSourcePrompt, guidance.src_scale);

    ScalarMap s(x_src.height(), x_src.width());
    for (std::size_t c = 0; c < x_src.channels(); ++c) {
        auto a = v_tar.channel(c);
        auto b = v_src.channel(c);
        for (std::size_t i = 0; i < s.size(); ++i) {
            const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
            s.data[i] += d * d;
        }
    }
    for (auto& v : s.data) v = std::sqrt(v);
    return s;
}

DiscrepancyMap discrepancy_avg(const VelocityProvider& provider, const LatentTensor& x_src, double t_prime,
                               const GuidanceConfig& guidance, int repeats, std::uint64_t rng_seed) {
    if (repeats < 1) throw ConfigError("repeats must be >= 1");
    DiscrepancyMap result{ScalarMap(x_src.height(), x_src.width()), repeats};
    for (int r = 0; r < repeats; ++r) {
        const ScalarMap s = discrepancy_once(provider, x_src, t_prime, guidance, rng_seed + static_cast<std::uint64_t>(r));
        for (std::size_t i = 0; i < s.size(); ++i) result.map.data[i] += s.data[i];
    }
    for (auto& v : result.map.data) v /= repeats;
    return result;
}

PatchGrid patch_means(const ScalarMap& s, std::size_t patch_size) {
    if (patch_size < 1) throw ConfigError("patch_size must be >= 1");
    if (s.height == 0 || s.width == 0) throw ShapeError("patch_means: empty map");
    PatchGrid grid;
    grid.patch_size = patch_size;
    grid.height = s.height;
    grid.width = s.width;
    grid.rows = (s.height + patch_size - 1) / patch_size;
    grid.cols = (s.width + patch_size - 1) / patch_size;
    grid.means.assign(grid.rows * grid.cols, 0.0);
    for (std::size_t r = 0; r < grid.rows; ++r) {
        for (std::size_t c = 0; c < grid.cols; ++c) {
            const std::size_t y1 = std::min((r + 1) * patch_size, s.height);
            const std::size_t x1 = std::min((c + 1) * patch_size, s.width);
            double sum = 0.0;
            for (std::size_t y = r * patch_size; y < y1; ++y) {
                for (std::size_t x = c * patch_size; x < x1; ++x) sum += s.at(y, x);
            }
            grid.means[r * grid.cols + c] = sum / static_cast<double>((y1 - r * patch_size) * (x1 - c * patch_size));
        }
    }
    return grid;
}

Region region_grow(const PatchGrid& grid, double merge_ratio) {
    if (grid.means.empty()) throw ShapeError("region_grow: empty patch grid");
    if (!(merge_ratio > 0.0 && merge_ratio <= 1.0)) throw ConfigError("merge_ratio must lie in (0, 1]");

    Region region;
    region.mask = BinaryMask(grid.height, grid.width);
    region.patches.assign(grid.means.size(), 0);

    const auto seed = static_cast<std::size_t>(std::max_element(grid.means.begin(), grid.means.end()) - grid.means.begin());
    const double seed_mean = grid.means[seed];
    if (!(seed_mean > 0.0)) {
        region.status = RegionStatus::empty_edit_region;
        return region;
    }
    const double threshold = merge_ratio * seed_mean;

    std::deque<std::size_t> frontier{seed};
    region.patches[seed] = 1;
    while (!frontier.empty()) {
        const std::size_t p = frontier.front();
        frontier.pop_front();
        const std::size_t r = p / grid.cols;
        const std::size_t c = p % grid.cols;
        auto visit = [&](std::size_t nr, std::size_t nc) {
            const std::size_t n = nr * grid.cols + nc;
            if (!region.patches[n] && grid.means[n] >= threshold) {
                region.patches[n] = 1;
                frontier.push_back(n);
            }
        };
        if (r > 0) visit(r - 1, c);
        if (r + 1 < grid.rows) visit(r + 1, c);
        if (c > 0) visit(r, c - 1);
        if (c + 1 < grid.cols) visit(r, c + 1);
    }

    for (std::size_t y = 0; y < grid.height; ++y) {
        for (std::size_t x = 0; x < grid.width; ++x) {
            region.mask.at(y, x) = region.patches[(y / grid.patch_size) * grid.cols + x / grid.patch_size];
        }
    }
    return region;
}

std::vector<double> squared_distance_transform(const std::vector<std::uint8_t>& feature, std::size_t height,
                                               std::size_t width) {
    if (feature.size() != height * width) throw ShapeError("distance transform: buffer does not match dimensions");
    std::vector<double> f(feature.size());
    std::transform(feature.begin(), feature.end(), f.begin(), [](std::uint8_t b) { return b ? 0.0 : kInf; });

    std::vector<double> tmp(f.size());
    std::vector<double> out(f.size());
    std::vector<std::size_t> sites;
    std::vector<double> bounds;
    for (std::size_t x = 0; x < width; ++x) {
        distance_1d(f.data() + x, height, width, tmp.data() + x, sites, bounds);
    }
    for (std::size_t y = 0; y < height; ++y) {
        distance_1d(tmp.data() + y * width, width, 1, out.data() + y * width, sites, bounds);
    }
    return out;
}

ScalarMap distance_to_boundary(const BinaryMask& m) {
    ScalarMap d(m.height, m.width, kInf);
    const std::size_t ones = m.count();
    if (ones == 0 || ones == m.size()) return d;

    std::vector<std::uint8_t> zeros(m.bits.size());
    std::transform(m.bits.begin(), m.bits.end(), zeros.begin(), [](std::uint8_t b) -> std::uint8_t { return b ? 0 : 1; });
    const auto to_zero = squared_distance_transform(zeros, m.height, m.width);
    const auto to_one = squared_distance_transform(m.bits, m.height, m.width);
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double sq = m.bits[i] ? to_zero[i] : to_one[i];
        d.data[i] = std::max(std::sqrt(sq) - 1.0, 0.0);
    }
    return d;
}

SoftMask soften(const BinaryMask& m, const ScalarMap& d, double d_max, double k) {
    if (!(d_max > 0.0) || !std::isfinite(d_max)) throw ConfigError("d_max must be positive and finite");
    if (!(k > 0.0) || !std::isfinite(k)) throw ConfigError("k must be positive and finite");
    if (d.height != m.height || d.width != m.width) throw ShapeError("soften: distance map does not match mask");

    SoftMask soft(m.height, m.width);
    for (std::size_t i = 0; i < soft.size(); ++i) {
        const double dist = d.data[i];
        if (dist > d_max) {
            soft.weights[i] = m.bits[i] ? 1.0 : 0.0;
            continue;
        }
        const double signed_dist = m.bits[i] ? -dist : dist;
        soft.weights[i] = 1.0 / (1.0 + std::exp(k * (signed_dist - d_max / 2.0)));
    }
    return soft;
}

}  // namespace fusionedit
