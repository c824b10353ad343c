// Copyright (C) 2026 FusionEdit Authors
// SPDX-License-Identifier: Apache-2.0

#include "fusionedit/flow.hpp"

#include <algorithm>
#include <random>

#include "fusionedit/errors.hpp"
#include "fusionedit/fusion.hpp"

namespace fusionedit {
namespace {

// out[i] = f(a[i], b[i]) evaluated in double precision.
template <typename F>
LatentTensor zip(const LatentTensor& a, const LatentTensor& b, const char* op, F f) {
    require_same_shape(a, b, op);
    LatentTensor out(a.channels(), a.height(), a.width());
    auto da = a.data();
    auto db = b.data();
    auto dst = out.data();
    for (std::size_t i = 0; i < dst.size(); ++i) {
        dst[i] = static_cast<float>(f(static_cast<double>(da[i]), static_cast<double>(db[i])));
    }
    out.check_finite(op);
    return out;
}

void check_time(double t, const char* op) {
    if (!(t >= 0.0 && t <= 1.0)) {
        throw ConfigError(std::string(op) + ": timestep " + std::to_string(t) + " outside [0, 1]");
    }
}

// x + dt * (a - b), the explicit editing update.
void advance(LatentTensor& x, const LatentTensor& a, const LatentTensor& b, double dt) {
    require_same_shape(a, b, "advance");
    auto dx = x.data();
    auto da = a.data();
    auto db = b.data();
    for (std::size_t i = 0; i < dx.size(); ++i) {
        dx[i] = static_cast<float>(static_cast<double>(dx[i]) +
                                   dt * (static_cast<double>(da[i]) - static_cast<double>(db[i])));
    }
    x.check_finite("edit trajectory");
}

}  // namespace

Evaluation VelocityProvider::evaluate_with_values(const LatentTensor&, double, const PromptId&,
                                                  const ValueHook&) const {
    throw ConfigError("velocity provider does not expose value tensors");
}

bool VelocityProvider::declares(const PromptId& c) const {
    const auto tags = conditionings();
    return std::find(tags.begin(), tags.end(), c.tag) != tags.end();
}

Evaluation LatentValueProvider::evaluate_with_values(const LatentTensor& x, double t, const PromptId& c,
                                                     const ValueHook& hook) const {
    if (!hook) return {evaluate(x, t, c), x};
    LatentTensor modulated = hook(x);
    require_same_shape(x, modulated, "value hook");
    return {evaluate(modulated, t, c), x};
}

LatentTensor standard_normal(const LatentTensor& like, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    LatentTensor out(like.channels(), like.height(), like.width());
    for (auto& v : out.data()) v = static_cast<float>(normal(rng));
    return out;
}

LatentTensor checked_evaluate(const VelocityProvider& provider, const LatentTensor& x, double t, const PromptId& c) {
    if (!provider.declares(c)) throw ConfigError("provider does not declare conditioning '" + c.tag + "'");
    LatentTensor v = provider.evaluate(x, t, c);
    if (!v.same_shape(x)) {
        throw ShapeError("provider returned " + v.shape_string() + " for input " + x.shape_string());
    }
    v.check_finite("velocity");
    return v;
}

LatentTensor euler_integrate(const VelocityProvider& provider, const LatentTensor& x1, const PromptId& c, int steps) {
    if (steps < 1) throw ConfigError("euler_integrate: steps must be >= 1");
    const double dt = 1.0 / steps;
    LatentTensor x = x1;
    for (int i = 0; i < steps; ++i) {
        const double t = 1.0 - static_cast<double>(i) / steps;
        const LatentTensor v = checked_evaluate(provider, x, t, c);
        x = zip(x, v, "euler_integrate", [dt](double xi, double vi) { return xi - dt * vi; });
    }
    return x;
}

LatentTensor noised_source(const LatentTensor& x_src, const LatentTensor& noise, double t) {
    check_time(t, "noised_source");
    return zip(x_src, noise, "noised_source", [t](double x, double n) { return (1.0 - t) * x + t * n; });
}

LatentTensor projected_target(const LatentTensor& x_mid, const LatentTensor& x_src, const LatentTensor& noise,
                              double t) {
    check_time(t, "projected_target");
    require_same_shape(x_mid, x_src, "projected_target");
    require_same_shape(x_mid, noise, "projected_target");
    LatentTensor out(x_mid.channels(), x_mid.height(), x_mid.width());
    auto m = x_mid.data();
    auto s = x_src.data();
    auto n = noise.data();
    auto dst = out.data();
    for (std::size_t i = 0; i < dst.size(); ++i) {
        dst[i] = static_cast<float>(static_cast<double>(m[i]) - t * static_cast<double>(s[i]) +
                                    t * static_cast<double>(n[i]));
    }
    return out;
}

LatentTensor guided_velocity(const VelocityProvider& provider, const LatentTensor& x, double t, const PromptId& c,
                             double scale) {
    if (scale == 1.0) return checked_evaluate(provider, x, t, c);
    if (!provider.declares(kNullPrompt)) {
        throw ConfigError("guidance scale " + std::to_string(scale) +
                          " requires a 'null' conditioning, which the provider does not declare");
    }
    const LatentTensor v_c = checked_evaluate(provider, x, t, c);
    const LatentTensor v_null = checked_evaluate(provider, x, t, kNullPrompt);
    return zip(v_null, v_c, "guided_velocity", [scale](double vn, double vc) { return vn + scale * (vc - vn); });
}

GuidedEvaluation guided_velocity_with_values(const VelocityProvider& provider, const LatentTensor& x, double t,
                                             const PromptId& c, double scale, const ValueHook& cond_hook,
                                             const ValueHook& null_hook) {
    auto run = [&](const PromptId& prompt, const ValueHook& hook) {
        if (!provider.declares(prompt)) {
            throw ConfigError("provider does not declare conditioning '" + prompt.tag + "'");
        }
        Evaluation e = provider.evaluate_with_values(x, t, prompt, hook);
        if (!e.velocity.same_shape(x) || !e.value.same_shape(x)) {
            throw ShapeError("provider returned mismatched velocity/value for input " + x.shape_string());
        }
        e.velocity.check_finite("velocity");
        return e;
    };

    Evaluation cond = run(c, cond_hook);
    if (scale == 1.0) return {std::move(cond.velocity), std::move(cond.value), std::nullopt};
    if (!provider.declares(kNullPrompt)) {
        throw ConfigError("guidance scale " + std::to_string(scale) +
                          " requires a 'null' conditioning, which the provider does not declare");
    }
    Evaluation null = run(kNullPrompt, null_hook);
    LatentTensor v = zip(null.velocity, cond.velocity, "guided_velocity",
                         [scale](double vn, double vc) { return vn + scale * (vc - vn); });
    return {std::move(v), std::move(cond.value), std::move(null.value)};
}

LatentTensor delta_velocity(const VelocityProvider& provider, const TrajectoryState& state,
                            const GuidanceConfig& guidance) {
    const LatentTensor z_src = noised_source(state.x_src, state.noise, state.t);
    const LatentTensor z_tar = projected_target(state.x_mid, state.x_src, state.noise, state.t);
    const LatentTensor v_tar = guided_velocity(provider, z_tar, state.t, kTargetPrompt, guidance.tar_scale);
    const LatentTensor v_src = guided_velocity(provider, z_src, state.t, kSourcePrompt, guidance.src_scale);
    return zip(v_tar, v_src, "delta_velocity", [](double a, double b) { return a - b; });
}

LatentTensor edit_trajectory(const VelocityProvider& provider, const LatentTensor& x_src, const EditConfig& config,
                             const std::optional<SoftMask>& mask, const std::optional<DamSettings>& dam,
                             std::uint64_t rng_seed) {
    config.validate();
    if (mask) require_spatial_match(x_src, mask->height, mask->width, "edit_trajectory");
    if (dam) {
        dam->config.validate();
        if (!provider.supports_values()) {
            throw ConfigError("attention modulation requested but the provider does not expose value tensors");
        }
    }

    const int steps = config.steps;
    const double dt = 1.0 / steps;
    const GuidanceConfig guidance = config.guidance();
    const TvConfig tv = config.tv();

    TrajectoryState state{x_src, x_src, standard_normal(x_src, rng_seed), 1.0, 0};
    // Unmasked, unmodulated stream supplying reference value statistics.
    LatentTensor x_ref = x_src;

    for (int i = 0; i < steps; ++i) {
        state.step_index = i;
        state.t = 1.0 - static_cast<double>(i) / steps;
        const double t = state.t;

        const LatentTensor z_src = noised_source(x_src, state.noise, t);
        const LatentTensor v_src = guided_velocity(provider, z_src, t, kSourcePrompt, guidance.src_scale);
        const LatentTensor z_tar = projected_target(state.x_mid, x_src, state.noise, t);

        if (dam) {
            const LatentTensor z_ref = projected_target(x_ref, x_src, state.noise, t);
            GuidedEvaluation ref =
                guided_velocity_with_values(provider, z_ref, t, kTargetPrompt, guidance.tar_scale);

            const double alpha = adaptive_alpha(dam->config, t, dam->delta_bar);
            const double eps = dam->config.epsilon;
            ValueHook cond_hook = [&](const LatentTensor& v) { return fuse_values(v, ref.cond_value, alpha, eps); };
            ValueHook null_hook;
            if (ref.null_value) {
                null_hook = [&](const LatentTensor& v) { return fuse_values(v, *ref.null_value, alpha, eps); };
            }
            const GuidedEvaluation masked = guided_velocity_with_values(provider, z_tar, t, kTargetPrompt,
                                                                        guidance.tar_scale, cond_hook, null_hook);
            advance(state.x_mid, masked.velocity, v_src, dt);
            advance(x_ref, ref.velocity, v_src, dt);
        } else {
            const LatentTensor v_tar = guided_velocity(provider, z_tar, t, kTargetPrompt, guidance.tar_scale);
            advance(state.x_mid, v_tar, v_src, dt);
        }

        if (mask) {
            FusedLatent fused = fuse_latents(state.x_mid, x_src, *mask);
            const bool refine = config.tv_enabled && (config.tv_every_step || i + 1 == steps);
            state.x_mid = refine ? tv_refine(fused, tv) : std::move(fused.tensor);
        }
    }
    return state.x_mid;
}

}  // namespace fusionedit
