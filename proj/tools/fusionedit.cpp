// Copyright (C) 2026 FusionEdit Authors
// SPDX-License-Identifier: Apache-2.0

// fusionedit: command-line front end for discrepancy maps, edit masks,
// masked editing runs and quality metrics on NPY latents.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "fusionedit/config.hpp"
#include "fusionedit/errors.hpp"
#include "fusionedit/mask_gen.hpp"
#include "fusionedit/metrics.hpp"
#include "fusionedit/pipeline.hpp"
#include "fusionedit/providers.hpp"
#include "fusionedit/tensor_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fusionedit;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct CommonOptions {
    std::string config_path;
    std::string provider;
    std::string source;
    std::string out = ".";
    std::optional<std::int64_t> seed;
};

// Flags that override config-file values when given.
struct Overrides {
    std::optional<double> t_prime, merge_ratio, d_max, k, lambda, src_guidance, tar_guidance, beta, gamma, eta;
    std::optional<int> repeats, patch_size, steps;
    bool dam = false, no_dam = false, no_mask = false, no_tv = false, tv_final_only = false;
};

void setup_logging() {
    auto logger = spdlog::stderr_color_mt("fusionedit");
    logger->set_pattern("[%l] %v");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::info);
    if (const char* level = std::getenv("FUSIONEDIT_LOG")) {
        const std::string value(level);
        if (value == "error") {
            spdlog::set_level(spdlog::level::err);
        } else if (value == "debug") {
            spdlog::set_level(spdlog::level::debug);
        } else if (value != "info") {
            spdlog::warn("ignoring FUSIONEDIT_LOG={} (expected error, info or debug)", value);
        }
    }
}

void add_common(CLI::App* cmd, CommonOptions& opts, bool needs_provider) {
    cmd->add_option("--config", opts.config_path, "JSON config file; flags override its values")->check(CLI::ExistingFile);
    if (needs_provider) {
        cmd->add_option("--provider", opts.provider,
                        "manifest.json | grid:<manifest.json> | analytic:<params.json> | twoblob:<params.json>")
            ->required();
        cmd->add_option("--source", opts.source, "source latent (NPY); defaults to the manifest's 'source' entry");
    }
    cmd->add_option("--seed", opts.seed, "random seed");
    cmd->add_option("--out", opts.out, "output directory");
}

void add_overrides(CLI::App* cmd, Overrides& o, bool edit) {
    cmd->add_option("--t-prime", o.t_prime, "discrepancy timestep");
    cmd->add_option("--repeats", o.repeats, "discrepancy repeats");
    cmd->add_option("--src-guidance", o.src_guidance);
    cmd->add_option("--tar-guidance", o.tar_guidance);
    cmd->add_option("--patch-size", o.patch_size);
    cmd->add_option("--merge-ratio", o.merge_ratio);
    cmd->add_option("--d-max", o.d_max, "transition band width");
    cmd->add_option("--k", o.k, "transition sharpness");
    if (!edit) return;
    cmd->add_option("--steps", o.steps);
    cmd->add_option("--lambda", o.lambda, "TV fidelity weight");
    cmd->add_option("--beta", o.beta);
    cmd->add_option("--gamma", o.gamma);
    cmd->add_option("--eta", o.eta);
    auto* dam = cmd->add_flag("--dam", o.dam, "enable attention modulation");
    cmd->add_flag("--no-dam", o.no_dam, "disable attention modulation")->excludes(dam);
    cmd->add_flag("--no-mask", o.no_mask, "edit without the soft mask");
    cmd->add_flag("--no-tv", o.no_tv, "skip TV refinement of the transition band");
    cmd->add_flag("--tv-final-only", o.tv_final_only, "run TV refinement only after the last step");
}

EditConfig resolve_config(const CommonOptions& opts, const Overrides& o) {
    EditConfig c = opts.config_path.empty() ? EditConfig{} : load_config(opts.config_path);
    auto set = [](auto& field, const auto& value) {
        if (value) field = *value;
    };
    set(c.seed, opts.seed);
    set(c.t_prime, o.t_prime);
    set(c.repeats, o.repeats);
    set(c.src_guidance, o.src_guidance);
    set(c.tar_guidance, o.tar_guidance);
    set(c.patch_size, o.patch_size);
    set(c.merge_ratio, o.merge_ratio);
    set(c.d_max, o.d_max);
    set(c.k, o.k);
    set(c.steps, o.steps);
    set(c.lambda, o.lambda);
    set(c.beta, o.beta);
    set(c.gamma, o.gamma);
    set(c.eta, o.eta);
    if (o.dam) c.dam_enabled = true;
    if (o.no_dam) c.dam_enabled = false;
    if (o.no_mask) c.mask_enabled = false;
    if (o.no_tv) c.tv_enabled = false;
    if (o.tv_final_only) c.tv_every_step = false;
    c.validate();
    return c;
}

LatentTensor load_source(const CommonOptions& opts, const VelocityProvider& provider) {
    if (!opts.source.empty()) return read_tensor(opts.source);
    if (const auto* grid = dynamic_cast<const GridProvider*>(&provider); grid && !grid->source_path().empty()) {
        return read_tensor(grid->source_path());
    }
    throw ConfigError("no source latent: pass --source");
}

fs::path output_dir(const CommonOptions& opts) {
    fs::path dir(opts.out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
    return dir;
}

json psnr_json(double value) { return std::isinf(value) ? json("inf") : json(value); }

json report_json(const MetricReport& r) {
    json j;
    j["mse"] = r.mse;
    j["psnr"] = psnr_json(r.psnr);
    j["ssim"] = r.ssim ? json(*r.ssim) : json(nullptr);
    return j;
}

void write_masks(const MaskResult& m, const fs::path& dir) {
    write_mask(m.region.mask, dir / "mask_binary.npy");
    export_mask_image(to_soft(m.region.mask), dir / "mask_binary.png");
    write_mask(m.soft, dir / "mask_soft.npy");
    export_mask_image(m.soft, dir / "mask_soft.png");
}

json map_stats(const ScalarMap& s) {
    double sum = 0.0;
    double peak = 0.0;
    for (double v : s.data) {
        sum += v;
        peak = std::max(peak, v);
    }
    return {{"mean", sum / static_cast<double>(s.size())}, {"max", peak}};
}

const char* status_name(RegionStatus s) { return s == RegionStatus::ok ? "ok" : "empty_edit_region"; }

int cmd_discrepancy(const CommonOptions& opts, const Overrides& o) {
    const EditConfig config = resolve_config(opts, o);
    const auto provider = load_provider(opts.provider);
    const LatentTensor source = load_source(opts, *provider);
    const fs::path dir = output_dir(opts);

    const DiscrepancyMap s_bar = run_discrepancy(*provider, source, config);
    write_scalar_map(s_bar.map, dir / "discrepancy.npy");
    export_heat_image(s_bar.map, dir / "discrepancy.png");

    json out = map_stats(s_bar.map);
    out["repeats"] = s_bar.repeats;
    std::cout << out.dump() << "\n";
    return 0;
}

int cmd_mask(const CommonOptions& opts, const Overrides& o, const std::string& discrepancy_path) {
    const EditConfig config = resolve_config(opts, o);
    const ScalarMap s_bar = read_scalar_map(discrepancy_path);
    const fs::path dir = output_dir(opts);

    const MaskResult mask = build_mask(s_bar, config);
    if (mask.region.status == RegionStatus::empty_edit_region) {
        spdlog::warn("discrepancy map is zero everywhere; writing empty masks");
    }
    write_masks(mask, dir);

    json out;
    out["status"] = status_name(mask.region.status);
    out["region_pixels"] = mask.region.mask.count();
    out["band_pixels"] = transition_band(mask.soft).size();
    std::cout << out.dump() << "\n";
    return 0;
}

int cmd_edit(const CommonOptions& opts, const Overrides& o, double peak) {
    const EditConfig config = resolve_config(opts, o);
    const auto provider = load_provider(opts.provider);
    const LatentTensor source = load_source(opts, *provider);
    const fs::path dir = output_dir(opts);

    const EditResult result = run_edit(*provider, source, config, peak);
    write_tensor(result.edited, dir / "edited.npy");
    write_scalar_map(result.discrepancy.map, dir / "discrepancy.npy");
    export_heat_image(result.discrepancy.map, dir / "discrepancy.png");
    write_masks(result.mask, dir);

    json out;
    out["status"] = status_name(result.status);
    out["delta_bar"] = result.delta_bar;
    out["preserved"] = report_json(result.preserved);
    std::cout << out.dump() << "\n";
    return 0;
}

int cmd_metrics(const std::string& a_path, const std::string& b_path, const std::string& mask_path, double peak) {
    const LatentTensor a = read_tensor(a_path);
    const LatentTensor b = read_tensor(b_path);
    MetricReport report;
    if (mask_path.empty()) {
        report = compare(a, b, peak);
    } else {
        const BinaryMask keep = preserved_region(read_soft_mask(mask_path));
        report = compare(a, b, peak, &keep);
    }
    std::cout << report_json(report).dump() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    setup_logging();

    CLI::App app{"FusionEdit: soft-mask latent editing over rectified-flow velocity providers"};
    app.require_subcommand(1);

    CommonOptions common;
    Overrides overrides;
    double peak = 1.0;
    std::string discrepancy_path, a_path, b_path, mask_path;

    auto* disc = app.add_subcommand("discrepancy", "average semantic discrepancy map");
    add_common(disc, common, true);
    add_overrides(disc, overrides, false);

    auto* mask = app.add_subcommand("mask", "binary region and soft mask from a discrepancy map");
    add_common(mask, common, false);
    add_overrides(mask, overrides, false);
    mask->add_option("--discrepancy", discrepancy_path, "discrepancy map (NPY)")->required();

    auto* edit = app.add_subcommand("edit", "full masked editing run");
    add_common(edit, common, true);
    add_overrides(edit, overrides, true);
    edit->add_option("--peak", peak, "signal peak for PSNR/SSIM");

    auto* metrics = app.add_subcommand("metrics", "MSE / PSNR / SSIM between two tensors");
    metrics->add_option("a", a_path, "first tensor (NPY)")->required();
    metrics->add_option("b", b_path, "second tensor (NPY)")->required();
    metrics->add_option("--mask", mask_path, "soft mask (NPY); restricts metrics to weights < 0.5");
    metrics->add_option("--peak", peak, "signal peak for PSNR/SSIM");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (*disc) return cmd_discrepancy(common, overrides);
        if (*mask) return cmd_mask(common, overrides, discrepancy_path);
        if (*edit) return cmd_edit(common, overrides, peak);
        if (*metrics) return cmd_metrics(a_path, b_path, mask_path, peak);
    } catch (const Error& e) {
        spdlog::error("{}", e.what());
        return e.is_usage_error() ? kExitUsage : kExitRuntime;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return kExitRuntime;
    }
    return kExitUsage;
}
