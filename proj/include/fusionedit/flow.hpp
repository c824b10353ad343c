// Copyright (C) 2026 FusionEdit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fusionedit/config.hpp"
#include "fusionedit/dam.hpp"
#include "fusionedit/tensor.hpp"

namespace fusionedit {

/// Opaque conditioning selector ("src", "tar", "null", ...).
struct PromptId {
    std::string tag;
    friend bool operator==(const PromptId&, const PromptId&) = default;
};

inline const PromptId kSourcePrompt{"src"};
inline const PromptId kTargetPrompt{"tar"};
inline const PromptId kNullPrompt{"null"};

/// Receives the provider's value tensor and returns the tensor to use in its
/// place for the rest of the evaluation.
using ValueHook = std::function<LatentTensor(const LatentTensor&)>;

struct Evaluation {
    LatentTensor velocity;
    LatentTensor value;  // value tensor before the hook was applied
};

/// Conditional velocity field v(x, t, c). Implementations are read-only after
/// construction and must be safe for concurrent evaluate() calls.
///
/// Sign convention: velocities point from the noise end towards the data end
/// of the path, so an edit advances by adding the target-minus-source velocity
/// difference (see edit_trajectory).
class VelocityProvider {
public:
    virtual ~VelocityProvider() = default;

    virtual std::vector<std::string> conditionings() const = 0;
    virtual LatentTensor evaluate(const LatentTensor& x, double t, const PromptId& c) const = 0;

    virtual bool supports_values() const { return false; }

    /// Evaluates with access to the value tensor; velocity is computed from
    /// hook(value) when a hook is given. Throws ConfigError when unsupported.
    virtual Evaluation evaluate_with_values(const LatentTensor& x, double t, const PromptId& c,
                                            const ValueHook& hook = {}) const;

    bool declares(const PromptId& c) const;
};

/// Providers without an attention stack use the latent itself as the value
/// tensor: the hook rewrites x before the field is evaluated.
class LatentValueProvider : public VelocityProvider {
public:
    bool supports_values() const override { return true; }
    Evaluation evaluate_with_values(const LatentTensor& x, double t, const PromptId& c,
                                    const ValueHook& hook = {}) const override;
};

struct TrajectoryState {
    LatentTensor x_mid;
    LatentTensor x_src;
    LatentTensor noise;
    double t = 1.0;
    int step_index = 0;
};

/// Prompt disparity statistics needed to schedule attention modulation.
struct DamSettings {
    DamConfig config;
    double delta_bar = 0.0;
};

/// i.i.d. N(0, 1) tensor shaped like `like`, deterministic in `seed`.
LatentTensor standard_normal(const LatentTensor& like, std::uint64_t seed);

/// Provider call with the output-shape contract enforced.
LatentTensor checked_evaluate(const VelocityProvider& provider, const LatentTensor& x, double t, const PromptId& c);

/// Forward Euler for dX = v dt from t = 1 down to t = 0 on the uniform grid
/// t_i = 1 - i / steps:  x <- x - v(x, t_i, c) / steps.
LatentTensor euler_integrate(const VelocityProvider& provider, const LatentTensor& x1, const PromptId& c, int steps);

/// (1 - t) x_src + t noise
LatentTensor noised_source(const LatentTensor& x_src, const LatentTensor& noise, double t);

/// x_mid - t x_src + t noise
LatentTensor projected_target(const LatentTensor& x_mid, const LatentTensor& x_src, const LatentTensor& noise,
                              double t);

/// Classifier-free guidance v_null + scale (v_c - v_null). With scale == 1
/// this is v_c exactly and no null conditioning is needed.
LatentTensor guided_velocity(const VelocityProvider& provider, const LatentTensor& x, double t, const PromptId& c,
                             double scale);

struct GuidedEvaluation {
    LatentTensor velocity;
    LatentTensor cond_value;
    std::optional<LatentTensor> null_value;
};

GuidedEvaluation guided_velocity_with_values(const VelocityProvider& provider, const LatentTensor& x, double t,
                                             const PromptId& c, double scale, const ValueHook& cond_hook = {},
                                             const ValueHook& null_hook = {});

/// Target-minus-source guided velocity at the state's timestep.
LatentTensor delta_velocity(const VelocityProvider& provider, const TrajectoryState& state,
                            const GuidanceConfig& guidance);

/// Runs the editing ODE from X_mid = x_src at t = 1 to t = 0.
///
/// One noise tensor is drawn from `rng_seed` and reused at every step. Each
/// step evaluates the velocity difference at t_i = 1 - i / steps and applies
/// X_mid <- X_mid + delta_v / steps, so identical conditionings leave x_src
/// fixed and a constant difference d moves the result to x_src + d.
///
/// With a mask, X_mid is re-blended with x_src after every step and the
/// transition band is TV-refined (every step, or only the last one when
/// config.tv_every_step is false). With `dam`, target-branch value tensors
/// are fused with those of a parallel unmasked reference stream.
LatentTensor edit_trajectory(const VelocityProvider& provider, const LatentTensor& x_src, const EditConfig& config,
                             const std::optional<SoftMask>& mask, const std::optional<DamSettings>& dam,
                             std::uint64_t rng_seed);

}  // namespace fusionedit
