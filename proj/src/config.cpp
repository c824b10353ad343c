// Copyright (C) 2026 FusionEdit Authors
// SPDX-License-Identifier: Apache-2.0

#include "fusionedit/config.hpp"

#include <cmath>
#include <fstream>
#include <string>

#include "fusionedit/errors.hpp"

namespace fusionedit {
namespace {

using nlohmann::json;

void require(bool ok, const std::string& field, const std::string& rule) {
    if (!ok) throw ConfigError("config field '" + field + "' " + rule);
}

bool finite(double v) { return std::isfinite(v); }

// Single table of fields so parsing and serialisation cannot drift apart.
template <typename Visitor>
void visit_fields(EditConfig& c, Visitor&& v) {
    v("t_prime", c.t_prime);
    v("repeats", c.repeats);
    v("patch_size", c.patch_size);
    v("merge_ratio", c.merge_ratio);
    v("d_max", c.d_max);
    v("k", c.k);
    v("lambda", c.lambda);
    v("tv_step_size", c.tv_step_size);
    v("tv_max_iters", c.tv_max_iters);
    v("tv_tol", c.tv_tol);
    v("tv_enabled", c.tv_enabled);
    v("tv_every_step", c.tv_every_step);
    v("beta", c.beta);
    v("gamma", c.gamma);
    v("eta", c.eta);
    v("dam_epsilon", c.dam_epsilon);
    v("dam_enabled", c.dam_enabled);
    v("steps", c.steps);
    v("src_guidance", c.src_guidance);
    v("tar_guidance", c.tar_guidance);
    v("seed", c.seed);
    v("mask_enabled", c.mask_enabled);
}

}  // namespace

void EditConfig::validate() const {
    require(finite(t_prime) && t_prime > 0.0 && t_prime < 1.0, "t_prime", "must lie in (0, 1)");
    require(repeats >= 1, "repeats", "must be >= 1");
    require(patch_size >= 1, "patch_size", "must be >= 1");
    require(finite(merge_ratio) && merge_ratio > 0.0 && merge_ratio <= 1.0, "merge_ratio", "must lie in (0, 1]");
    require(finite(d_max) && d_max > 0.0, "d_max", "must be positive");
    require(finite(k) && k > 0.0, "k", "must be positive");
    require(finite(lambda) && lambda > 0.0, "lambda", "must be positive");
    require(finite(tv_step_size) && tv_step_size >= 0.0, "tv_step_size", "must be >= 0 (0 selects the default)");
    require(tv_max_iters >= 1, "tv_max_iters", "must be >= 1");
    require(finite(tv_tol) && tv_tol > 0.0, "tv_tol", "must be positive");
    require(finite(beta) && beta >= 0.0, "beta", "must be finite and >= 0");
    require(finite(gamma), "gamma", "must be finite");
    require(finite(eta), "eta", "must be finite");
    require(finite(dam_epsilon) && dam_epsilon > 0.0, "dam_epsilon", "must be positive");
    require(steps >= 1, "steps", "must be >= 1");
    require(finite(src_guidance) && src_guidance >= 0.0, "src_guidance", "must be finite and >= 0");
    require(finite(tar_guidance) && tar_guidance >= 0.0, "tar_guidance", "must be finite and >= 0");
}

void to_json(json& j, const EditConfig& c) {
    j = json::object();
    EditConfig copy = c;
    visit_fields(copy, [&](const char* name, auto& field) { j[name] = field; });
}

void apply_json(EditConfig& c, const json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    json remaining = j;
    visit_fields(c, [&](const char* name, auto& field) {
        if (!j.contains(name)) return;
        try {
            const json& value = j.at(name);
            using T = std::remove_reference_t<decltype(field)>;
            if constexpr (std::is_same_v<T, bool>) {
                if (!value.is_boolean()) throw ConfigError("config field '" + std::string(name) + "' must be a boolean");
            } else if constexpr (std::is_integral_v<T>) {
                if (!value.is_number_integer()) {
                    throw ConfigError("config field '" + std::string(name) + "' must be an integer");
                }
            } else {
                if (!value.is_number()) throw ConfigError("config field '" + std::string(name) + "' must be a number");
            }
            field = value.get<T>();
        } catch (const json::exception& e) {
            throw ConfigError("config field '" + std::string(name) + "': " + e.what());
        }
        remaining.erase(name);
    });
    if (!remaining.empty()) throw ConfigError("unknown config field '" + remaining.begin().key() + "'");
}

EditConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("invalid JSON in " + path.string() + ": " + e.what());
    }
    EditConfig config;
    apply_json(config, j);
    config.validate();
    return config;
}

}  // namespace fusionedit
