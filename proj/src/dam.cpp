// Copyright (C) 2026 FusionEdit Authors
// SPDX-License-Identifier: Apache-2.0

#include "fusionedit/dam.hpp"

#include <algorithm>
#include <cmath>

#include "fusionedit/errors.hpp"

namespace fusionedit {

void DamConfig::validate() const {
    if (!std::isfinite(beta) || beta < 0.0) throw ConfigError("DAM beta must be finite and non-negative");
    if (!std::isfinite(gamma)) throw ConfigError("DAM gamma must be finite");
    if (!std::isfinite(eta)) throw ConfigError("DAM eta must be finite");
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw ConfigError("DAM epsilon must be positive");
}

ChannelStats channel_stats(const LatentTensor& v) {
    if (v.plane_size() == 0) throw ShapeError("channel_stats: empty spatial extent");
    ChannelStats stats;
    stats.mean.resize(v.channels());
    stats.std.resize(v.channels());
    const auto n = static_cast<double>(v.plane_size());
    for (std::size_t c = 0; c < v.channels(); ++c) {
        auto plane = v.channel(c);
        double sum = 0.0;
        for (float x : plane) sum += x;
        const double mu = sum / n;
        double sq = 0.0;
        for (float x : plane) sq += (x - mu) * (x - mu);
        stats.mean[c] = mu;
        stats.std[c] = std::sqrt(sq / n);
    }
    return stats;
}

LatentTensor adain(const LatentTensor& v, const LatentTensor& v_ref, double epsilon) {
    require_same_shape(v, v_ref, "adain");
    const ChannelStats s = channel_stats(v);
    const ChannelStats r = channel_stats(v_ref);
    LatentTensor out(v.channels(), v.height(), v.width());
    for (std::size_t c = 0; c < v.channels(); ++c) {
        const double scale = r.std[c] / (s.std[c] + epsilon);
        auto src = v.channel(c);
        auto dst = out.channel(c);
        for (std::size_t i = 0; i < dst.size(); ++i) {
            dst[i] = static_cast<float>(scale * (src[i] - s.mean[c]) + r.mean[c]);
        }
    }
    out.check_finite("adain");
    return out;
}

double adaptive_alpha(const DamConfig& config, double t, double delta_bar) {
    const double alpha = config.beta * (1.0 - t) * (1.0 - config.gamma * (delta_bar - config.eta));
    return std::clamp(alpha, 0.0, 1.0);
}

double mean_disparity(const ScalarMap& s_bar) {
    if (s_bar.data.empty()) throw ShapeError("mean_disparity: empty map");
    const double peak = *std::max_element(s_bar.data.begin(), s_bar.data.end());
    if (!(peak > 0.0)) return 0.0;
    double sum = 0.0;
    for (double v : s_bar.data) sum += v / peak;
    return sum / static_cast<double>(s_bar.data.size());
}

LatentTensor fuse_values(const LatentTensor& v, const LatentTensor& v_ref, double alpha, double epsilon) {
    require_same_shape(v, v_ref, "fuse_values");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("fuse_values: alpha must lie in [0, 1]");
    if (alpha == 0.0) return v;
    const LatentTensor stylised = adain(v, v_ref, epsilon);
    if (alpha == 1.0) return stylised;
    LatentTensor out(v.channels(), v.height(), v.width());
    auto a = stylised.data();
    auto b = v.data();
    auto dst = out.data();
    for (std::size_t i = 0; i < dst.size(); ++i) {
        dst[i] = static_cast<float>(alpha * static_cast<double>(a[i]) + (1.0 - alpha) * static_cast<double>(b[i]));
    }
    return out;
}

}  // namespace fusionedit
