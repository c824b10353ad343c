// Copyright (C) 2026 FusionEdit Authors
// SPDX-License-Identifier: Apache-2.0

#include "fusionedit/fusion.hpp"

#include <cmath>

#include "fusionedit/errors.hpp"

namespace fusionedit {
namespace {

// Loss over band pixels for one channel plane.
double plane_loss(const std::vector<double>& u, const std::vector<double>& u_hat, const std::vector<std::size_t>& band,
                  std::size_t height, std::size_t width, double lambda) {
    double grad = 0.0;
    double fid = 0.0;
    for (std::size_t p : band) {
        const std::size_t y = p / width;
        const std::size_t x = p % width;
        if (x + 1 < width) {
            const double d = u[p + 1] - u[p];
            grad += d * d;
        }
        if (y + 1 < height) {
            const double d = u[p + width] - u[p];
            grad += d * d;
        }
        const double e = u[p] - u_hat[p];
        fid += e * e;
    }
    return grad + lambda * fid;
}

}  // namespace

double TvConfig::effective_step() const { return step_size > 0.0 ? step_size : 1.0 / (8.0 + 2.0 * lambda); }

void TvConfig::validate() const {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("TV lambda must be finite and positive");
    if (!std::isfinite(step_size)) throw ConfigError("TV step size must be finite");
    if (max_iters < 1) throw ConfigError("TV max_iters must be >= 1");
    if (!(tol > 0.0)) throw ConfigError("TV tolerance must be positive");
}

std::vector<std::size_t> transition_band(const SoftMask& m) {
    std::vector<std::size_t> band;
    for (std::size_t i = 0; i < m.weights.size(); ++i) {
        if (m.weights[i] > 0.0 && m.weights[i] < 1.0) band.push_back(i);
    }
    return band;
}

FusedLatent fuse_latents(const LatentTensor& x_mid, const LatentTensor& x_src, const SoftMask& m) {
    require_same_shape(x_mid, x_src, "fuse_latents");
    require_spatial_match(x_mid, m.height, m.width, "fuse_latents");
    FusedLatent out{LatentTensor(x_mid.channels(), x_mid.height(), x_mid.width()), transition_band(m)};
    for (std::size_t c = 0; c < x_mid.channels(); ++c) {
        auto a = x_mid.channel(c);
        auto b = x_src.channel(c);
        auto dst = out.tensor.channel(c);
        for (std::size_t i = 0; i < dst.size(); ++i) {
            const double w = m.weights[i];
            dst[i] = static_cast<float>(w * static_cast<double>(a[i]) + (1.0 - w) * static_cast<double>(b[i]));
        }
    }
    return out;
}

LatentTensor fuse_binary(const LatentTensor& x_tar, const LatentTensor& x_src, const BinaryMask& m) {
    require_same_shape(x_tar, x_src, "fuse_binary");
    require_spatial_match(x_tar, m.height, m.width, "fuse_binary");
    LatentTensor out(x_tar.channels(), x_tar.height(), x_tar.width());
    for (std::size_t c = 0; c < x_tar.channels(); ++c) {
        auto a = x_tar.channel(c);
        auto b = x_src.channel(c);
        auto dst = out.channel(c);
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = m.bits[i] ? a[i] : b[i];
    }
    return out;
}

double tv_loss(const FusedLatent& x, const LatentTensor& x_hat, double lambda) {
    require_same_shape(x.tensor, x_hat, "tv_loss");
    const std::size_t h = x_hat.height();
    const std::size_t w = x_hat.width();
    double total = 0.0;
    for (std::size_t c = 0; c < x_hat.channels(); ++c) {
        auto a = x.tensor.channel(c);
        auto b = x_hat.channel(c);
        std::vector<double> u(a.begin(), a.end());
        std::vector<double> u_hat(b.begin(), b.end());
        total += plane_loss(u, u_hat, x.band, h, w, lambda);
    }
    return total;
}

TvResult tv_refine_detailed(const FusedLatent& x0, const TvConfig& config) {
    config.validate();
    const LatentTensor& x_hat = x0.tensor;
    const std::size_t h = x_hat.height();
    const std::size_t w = x_hat.width();
    const std::size_t channels = x_hat.channels();

    TvResult result{x_hat, {}, 0};
    if (x0.band.empty()) {
        result.losses.push_back(0.0);
        return result;
    }

    std::vector<std::uint8_t> in_band(h * w, 0);
    for (std::size_t p : x0.band) {
        if (p >= h * w) throw ShapeError("tv_refine: band index outside the latent");
        in_band[p] = 1;
    }

    std::vector<std::vector<double>> u(channels);
    std::vector<std::vector<double>> u_hat(channels);
    for (std::size_t c = 0; c < channels; ++c) {
        auto plane = x_hat.channel(c);
        u[c].assign(plane.begin(), plane.end());
        u_hat[c] = u[c];
    }
    auto total_loss = [&](const std::vector<std::vector<double>>& planes) {
        double sum = 0.0;
        for (std::size_t c = 0; c < channels; ++c) sum += plane_loss(planes[c], u_hat[c], x0.band, h, w, config.lambda);
        return sum;
    };

    const double step = config.effective_step();
    double loss = total_loss(u);
    result.losses.push_back(loss);

    std::vector<double> grad(h * w);
    auto candidate = u;
    for (int iter = 1; iter <= config.max_iters; ++iter) {
        for (std::size_t c = 0; c < channels; ++c) {
            const auto& plane = u[c];
            std::fill(grad.begin(), grad.end(), 0.0);
            for (std::size_t p : x0.band) {
                const std::size_t y = p / w;
                const std::size_t x = p % w;
                auto edge = [&](std::size_t n) {
                    const double d = plane[n] - plane[p];
                    grad[p] -= 2.0 * d;
                    if (in_band[n]) grad[n] += 2.0 * d;
                };
                if (x + 1 < w) edge(p + 1);
                if (y + 1 < h) edge(p + w);
                grad[p] += 2.0 * config.lambda * (plane[p] - u_hat[c][p]);
            }
            candidate[c] = plane;
            for (std::size_t p : x0.band) candidate[c][p] -= step * grad[p];
        }

        const double next = total_loss(candidate);
        if (!std::isfinite(next)) throw OptimizationError("TV refinement diverged: non-finite loss", iter);
        if (next > loss) break;  // rounding-level uphill step; keep the last accepted iterate

        std::swap(u, candidate);
        result.losses.push_back(next);
        result.iterations = iter;
        const double decrease = loss - next;
        loss = next;
        if (decrease < config.tol) break;
    }

    for (std::size_t c = 0; c < channels; ++c) {
        auto dst = result.tensor.channel(c);
        for (std::size_t p : x0.band) dst[p] = static_cast<float>(u[c][p]);
    }
    result.tensor.check_finite("tv_refine");
    return result;
}

}  // namespace fusionedit
