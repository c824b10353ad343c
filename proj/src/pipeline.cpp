// Copyright (C) 2026 FusionEdit Authors
// SPDX-License-Identifier: Apache-2.0

#include "fusionedit/pipeline.hpp"

#include <spdlog/spdlog.h>

#include "fusionedit/dam.hpp"

namespace fusionedit {
namespace {

template <typename F>
auto stage(const char* name, F&& body) {
    try {
        return body();
    } catch (const StageError&) {
        throw;
    } catch (const Error& e) {
        throw StageError(name, e);
    }
}

}  // namespace

DiscrepancyMap run_discrepancy(const VelocityProvider& provider, const LatentTensor& x_src, const EditConfig& config) {
    config.validate();
    return discrepancy_avg(provider, x_src, config.t_prime, config.guidance(), config.repeats,
                           static_cast<std::uint64_t>(config.seed));
}

MaskResult build_mask(const ScalarMap& s_bar, const EditConfig& config) {
    config.validate();
    MaskResult result;
    result.region = region_grow(patch_means(s_bar, static_cast<std::size_t>(config.patch_size)), config.merge_ratio);
    result.distance = distance_to_boundary(result.region.mask);
    result.soft = soften(result.region.mask, result.distance, config.d_max, config.k);
    return result;
}

BinaryMask preserved_region(const SoftMask& soft) {
    BinaryMask region(soft.height, soft.width);
    for (std::size_t i = 0; i < soft.size(); ++i) region.bits[i] = soft.weights[i] < 0.5 ? 1 : 0;
    return region;
}

EditResult run_edit(const VelocityProvider& provider, const LatentTensor& x_src, const EditConfig& config,
                    double peak) {
    stage("config", [&] {
        config.validate();
        if (config.dam_enabled && !provider.supports_values()) {
            throw ConfigError("attention modulation is enabled but the provider does not expose value tensors "
                              "(disable it with --no-dam)");
        }
        return 0;
    });

    EditResult result;
    result.discrepancy = stage("discrepancy", [&] { return run_discrepancy(provider, x_src, config); });
    result.mask = stage("mask", [&] { return build_mask(result.discrepancy.map, config); });
    result.status = result.mask.region.status;

    if (result.status == RegionStatus::empty_edit_region) {
        spdlog::warn("empty edit region: the discrepancy map is zero everywhere, returning the source unchanged");
        result.edited = x_src;
    } else {
        result.delta_bar = mean_disparity(result.discrepancy.map);
        spdlog::debug("edit region {} px, band {} px, mean disparity {:.6f}", result.mask.region.mask.count(),
                      transition_band(result.mask.soft).size(), result.delta_bar);
        result.edited = stage("edit", [&] {
            std::optional<SoftMask> mask;
            if (config.mask_enabled) mask = result.mask.soft;
            std::optional<DamSettings> dam;
            if (config.dam_enabled) dam = DamSettings{config.dam(), result.delta_bar};
            return edit_trajectory(provider, x_src, config, mask, dam, static_cast<std::uint64_t>(config.seed));
        });
    }

    const BinaryMask keep = preserved_region(result.mask.soft);
    result.preserved = stage("metrics", [&] { return compare(result.edited, x_src, peak, &keep); });
    return result;
}

}  // namespace fusionedit
