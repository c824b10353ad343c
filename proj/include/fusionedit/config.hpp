// Copyright (C) 2026 FusionEdit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>

#include <json.hpp>

#include "fusionedit/dam.hpp"
#include "fusionedit/fusion.hpp"

namespace fusionedit {

struct GuidanceConfig {
    double src_scale = 1.5;
    double tar_scale = 5.5;
};

/// Every pipeline hyperparameter. Defaults reproduce the reference setup.
struct EditConfig {
    // localisation
    double t_prime = 0.89;
    int repeats = 3;
    int patch_size = 8;
    double merge_ratio = 0.5;
    // soft mask
    double d_max = 3.0;
    double k = 5.0;
    // refinement
    double lambda = 50.0;
    double tv_step_size = 0.0;
    int tv_max_iters = 500;
    double tv_tol = 1e-8;
    bool tv_enabled = true;
    bool tv_every_step = true;
    // attention modulation
    double beta = 0.1;
    double gamma = 0.5;
    double eta = 0.5;
    double dam_epsilon = 1e-6;
    bool dam_enabled = true;
    // trajectory
    int steps = 28;
    double src_guidance = 1.5;
    double tar_guidance = 5.5;
    std::int64_t seed = 0;
    bool mask_enabled = true;

    GuidanceConfig guidance() const { return {src_guidance, tar_guidance}; }
    TvConfig tv() const { return {lambda, tv_step_size, tv_max_iters, tv_tol}; }
    DamConfig dam() const { return {beta, gamma, eta, dam_epsilon}; }

    /// Throws ConfigError naming the first invalid field.
    void validate() const;
};

void to_json(nlohmann::json& j, const EditConfig& c);

/// Overlays the keys present in `j` onto `c`. Unknown keys are rejected.
void apply_json(EditConfig& c, const nlohmann::json& j);

EditConfig load_config(const std::filesystem::path& path);

}  // namespace fusionedit
