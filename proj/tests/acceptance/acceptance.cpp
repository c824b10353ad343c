// Copyright (C) 2026 FusionEdit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite. Each check prints exactly one PASS or FAIL line with the
// measured quantity; the process exits non-zero if any check fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <json.hpp>
#include <spdlog/spdlog.h>
#include <sstream>
#include <string>

#include "fusionedit/dam.hpp"
#include "fusionedit/fusion.hpp"
#include "fusionedit/mask_gen.hpp"
#include "fusionedit/metrics.hpp"
#include "fusionedit/pipeline.hpp"
#include "fusionedit/providers.hpp"
#include "fusionedit/tensor_io.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace fusionedit;
using namespace fusionedit::testing;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string format_detail(const char* pattern, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, pattern, a, b, c);
    return buf;
}

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

Outcome identity_edit() {
    std::mt19937_64 rng(101);
    const auto x = random_tensor(rng, 4, 32, 32);
    const auto mu = random_tensor(rng, 4, 32, 32);
    AnalyticProvider provider({{"src", mu}, {"tar", mu}, {"null", mu}});

    const auto start = Clock::now();
    const auto result = run_edit(provider, x, EditConfig{});
    const double elapsed = seconds_since(start);
    const double err = max_abs_diff(result.edited, x);

    // The same identity must hold when the trajectory itself runs.
    EditConfig unmasked;
    unmasked.mask_enabled = false;
    const double err_traj = max_abs_diff(
        edit_trajectory(provider, x, unmasked, std::nullopt, DamSettings{unmasked.dam(), 0.0}, 0), x);

    return {err <= 1e-5 && err_traj <= 1e-5 && elapsed < 1.0,
            format_detail("max_abs=%.3g trajectory_max_abs=%.3g runtime=%.3fs", err, err_traj, elapsed)};
}

Outcome zero_discrepancy() {
    std::mt19937_64 rng(102);
    const auto x = random_tensor(rng, 4, 32, 32);
    const auto mu = random_tensor(rng, 4, 32, 32);
    AnalyticProvider provider({{"src", mu}, {"tar", mu}, {"null", mu}});
    const auto s = discrepancy_avg(provider, x, 0.89, {1.5, 5.5}, 3, 0);
    double peak = 0.0;
    for (double v : s.map.data) peak = std::max(peak, std::abs(v));
    return {peak == 0.0, format_detail("max|S|=%g", peak)};
}

Outcome soft_mask_values() {
    BinaryMask m(1, 2);
    ScalarMap d(1, 2);
    d.at(0, 0) = 0.0;
    d.at(0, 1) = 1.5;
    const auto w = soften(m, d, 3.0, 5.0);
    const double e0 = std::abs(w.at(0, 0) - 0.999447);
    const double e1 = std::abs(w.at(0, 1) - 0.5);

    std::mt19937_64 rng(103);
    std::size_t checked = 0, mismatched = 0;
    std::uniform_int_distribution<std::size_t> corner(0, 12);
    std::uniform_int_distribution<std::size_t> extent(8, 20);
    for (int trial = 0; trial < 20; ++trial) {
        BinaryMask mask(32, 32);
        const std::size_t y0 = corner(rng), x0 = corner(rng), y1 = y0 + extent(rng), x1 = x0 + extent(rng);
        for (std::size_t y = y0; y < y1; ++y) {
            for (std::size_t x = x0; x < x1; ++x) mask.at(y, x) = 1;
        }
        const auto dist = distance_to_boundary(mask);
        const auto soft = soften(mask, dist, 3.0, 5.0);
        for (std::size_t i = 0; i < mask.size(); ++i) {
            if (dist.data[i] > 3.0) {
                ++checked;
                if (soft.weights[i] != static_cast<double>(mask.bits[i])) ++mismatched;
            }
        }
    }
    return {e0 <= 1e-6 && e1 <= 1e-9 && mismatched == 0,
            format_detail("|w(0)-0.999447|=%.3g |w(1.5)-0.5|=%.3g beyond_band_mismatch=%g", e0, e1,
                static_cast<double>(mismatched)) +
                " of " + std::to_string(checked)};
}

Outcome region_grow_oracle() {
    std::mt19937_64 rng(104);
    std::uniform_int_distribution<int> dim(1, 8);
    std::uniform_int_distribution<int> level(0, 5);
    std::uniform_real_distribution<double> ratio(0.05, 1.0);
    int failures = 0;
    for (int trial = 0; trial < 200; ++trial) {
        PatchGrid g;
        g.patch_size = 8;
        g.rows = static_cast<std::size_t>(dim(rng));
        g.cols = static_cast<std::size_t>(dim(rng));
        g.height = g.rows * 8;
        g.width = g.cols * 8;
        for (std::size_t i = 0; i < g.rows * g.cols; ++i) g.means.push_back(level(rng) * 0.2);
        const double r = ratio(rng);
        if (region_grow(g, r).patches != brute_force_flood_fill(g, r)) ++failures;
    }
    return {failures == 0, format_detail("mismatching_grids=%g of 200", failures)};
}

Outcome distance_oracle() {
    std::mt19937_64 rng(105);
    std::uniform_int_distribution<int> dim(1, 32);
    std::uniform_real_distribution<double> density(0.01, 0.99);
    double worst = 0.0;
    bool sentinel_ok = true;
    for (int trial = 0; trial < 50; ++trial) {
        const auto m = random_mask(rng, dim(rng), dim(rng), density(rng));
        const auto fast = distance_to_boundary(m);
        const auto slow = brute_force_boundary_distance(m);
        for (std::size_t i = 0; i < m.size(); ++i) {
            if (std::isinf(slow.data[i]) || std::isinf(fast.data[i])) {
                sentinel_ok = sentinel_ok && std::isinf(slow.data[i]) && std::isinf(fast.data[i]);
            } else {
                worst = std::max(worst, std::abs(fast.data[i] - slow.data[i]));
            }
        }
    }
    return {worst <= 1e-9 && sentinel_ok, format_detail("max_abs=%.3g over 50 masks", worst)};
}

Outcome tv_oracle() {
    std::mt19937_64 rng(106);
    double worst = 0.0;
    bool monotone = true;
    int max_iters_used = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const auto x_mid = random_tensor(rng, 1, 16, 16);
        const auto x_src = random_tensor(rng, 1, 16, 16);
        const auto mask = random_mask(rng, 16, 16, 0.4);
        const auto fused = fuse_latents(x_mid, x_src, soften(mask, distance_to_boundary(mask), 3.0, 5.0));
        const auto result = tv_refine_detailed(fused, TvConfig{});
        worst = std::max(worst, max_abs_diff(result.tensor, tv_direct_solve(fused, 50.0)));
        for (std::size_t i = 1; i < result.losses.size(); ++i) monotone = monotone && result.losses[i] <= result.losses[i - 1];
        max_iters_used = std::max(max_iters_used, result.iterations);
    }
    return {worst <= 1e-5 && monotone,
            format_detail("max_abs=%.3g monotone=%g max_iterations=%g", worst, monotone ? 1.0 : 0.0, max_iters_used)};
}

double cross_seam_energy(const LatentTensor& x) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t c = 0; c < x.channels(); ++c) {
        for (std::size_t y = 0; y < x.height(); ++y) {
            for (std::size_t xx = 0; xx + 1 < x.width(); ++xx) {
                const double d = static_cast<double>(x.at(c, y, xx + 1)) - x.at(c, y, xx);
                sum += d * d;
                ++n;
            }
        }
    }
    return sum / static_cast<double>(n);
}

Outcome seam_ablation() {
    const std::size_t h = 16, w = 32;
    const LatentTensor x_mid(2, h, w, 1.0f);
    const LatentTensor x_src(2, h, w, 0.0f);
    BinaryMask region(h, w);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w / 2; ++x) region.at(y, x) = 1;
    }
    const double binary = cross_seam_energy(fuse_binary(x_mid, x_src, region));
    const auto fused = fuse_latents(x_mid, x_src, soften(region, distance_to_boundary(region), 3.0, 5.0));
    const double soft = cross_seam_energy(fused.tensor);
    const double refined = cross_seam_energy(tv_refine(fused, TvConfig{}));
    return {refined < soft && soft < binary, format_detail("soft+tv=%.6g soft=%.6g binary=%.6g", refined, soft, binary)};
}

Outcome adain_moments() {
    std::mt19937_64 rng(107);
    std::uniform_real_distribution<double> scale(0.5, 3.0);
    std::uniform_real_distribution<double> shift(-2.0, 2.0);
    double worst = 0.0;
    int pairs = 0;
    while (pairs < 100) {
        auto make = [&] {
            const double s = scale(rng), m = shift(rng);
            auto t = random_tensor(rng, 4, 16, 16);
            for (auto& v : t.data()) v = static_cast<float>(m + s * v);
            return t;
        };
        const auto v = make();
        const auto ref = make();
        const auto sv = channel_stats(v);
        const auto sr = channel_stats(ref);
        if (*std::min_element(sv.std.begin(), sv.std.end()) <= 0.1 ||
            *std::min_element(sr.std.begin(), sr.std.end()) <= 0.1) {
            continue;
        }
        ++pairs;
        const auto got = channel_stats(adain(v, ref, 1e-6));
        for (std::size_t c = 0; c < 4; ++c) {
            worst = std::max(worst, std::abs(got.mean[c] - sr.mean[c]) / std::max(std::abs(sr.mean[c]), 1e-12));
            worst = std::max(worst, std::abs(got.std[c] - sr.std[c]) / sr.std[c]);
        }
    }
    return {worst <= 1e-4, format_detail("max_relative=%.3g over 100 pairs", worst)};
}

Outcome alpha_schedule() {
    const DamConfig defaults;
    const double at_one = adaptive_alpha(defaults, 1.0, 0.7);
    const double mid = adaptive_alpha(defaults, 0.5, 0.5);

    std::mt19937_64 rng(108);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> wide(-5.0, 20.0);
    int out_of_range = 0;
    for (int i = 0; i < 10000; ++i) {
        const DamConfig c{std::abs(wide(rng)), wide(rng), wide(rng), 1e-6};
        const double a = adaptive_alpha(c, unit(rng), 5.0 * unit(rng));
        if (!(a >= 0.0 && a <= 1.0)) ++out_of_range;
    }
    const bool pass = at_one == 0.0 && std::abs(mid - 0.05) <= 1e-12 && out_of_range == 0;
    return {pass, format_detail("alpha(t=1)=%g alpha(0.5,0.5)=%.15g out_of_range=%g of 10000", at_one, mid, out_of_range)};
}

Outcome euler_order() {
    LinearFlowProvider provider(1.0);
    const LatentTensor x1(1, 1, 1, 1.0f);
    const double exact = provider.closed_form(1.0);
    const double e10 = std::abs(euler_integrate(provider, x1, kSourcePrompt, 10).data()[0] - exact);
    const double e100 = std::abs(euler_integrate(provider, x1, kSourcePrompt, 100).data()[0] - exact);
    const double ratio = e10 / e100;
    return {ratio >= 5.0 && ratio <= 20.0, format_detail("err10=%.4g err100=%.4g ratio=%.4g", e10, e100, ratio)};
}

Outcome metrics_sanity() {
    const double p = psnr_from_mse(0.01, 1.0);
    std::mt19937_64 rng(109);
    const auto x = random_tensor(rng, 3, 16, 16);
    const double self = ssim(x, x);
    int asymmetric = 0;
    for (int i = 0; i < 100; ++i) {
        const auto a = random_tensor(rng, 2, 8, 8);
        const auto b = random_tensor(rng, 2, 8, 8);
        if (mse(a, b) != mse(b, a)) ++asymmetric;
    }
    return {std::abs(p - 20.0) <= 1e-9 && self == 1.0 && asymmetric == 0,
            format_detail("psnr(0.01)=%.12g ssim(x,x)=%.17g asymmetric_pairs=%g", p, self, asymmetric)};
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

Outcome determinism() {
    TempDir dir;
    std::ofstream(dir / "blob.json") << R"({"shape": [4, 32, 32], "rect": [6, 10, 22, 26],
        "offsets": {"src": [0, 0, 0, 0], "tar": [1, -0.5, 0.25, 0.8], "null": [0, 0, 0, 0]}, "decay": 0.5})";
    std::mt19937_64 rng(110);
    write_tensor(random_tensor(rng, 4, 32, 32), dir / "source.npy");
    const std::string base = std::string(FUSIONEDIT_CLI_PATH) + " edit --provider twoblob:" +
                             (dir / "blob.json").string() + " --source " + (dir / "source.npy").string() +
                             " --seed 7 --out ";
    const int rc1 = std::system((base + (dir / "one").string() + " > /dev/null 2>&1").c_str());
    const int rc2 = std::system((base + (dir / "two").string() + " > /dev/null 2>&1").c_str());
    if (rc1 != 0 || rc2 != 0) return {false, "cli exit codes " + std::to_string(rc1) + ", " + std::to_string(rc2)};

    int files = 0, differing = 0;
    for (const auto& entry : std::filesystem::directory_iterator(dir / "one")) {
        ++files;
        const auto other = dir / "two" / entry.path().filename();
        if (!std::filesystem::exists(other) || slurp(entry.path()) != slurp(other)) ++differing;
    }
    return {files > 0 && differing == 0, format_detail("files=%g differing=%g", files, differing)};
}

}  // namespace

int main() {
    spdlog::set_level(spdlog::level::err);
    const std::vector<std::pair<std::string, std::function<Outcome()>>> checks = {
        {"identical-prompt identity", identity_edit},
        {"zero discrepancy", zero_discrepancy},
        {"soft-mask values", soft_mask_values},
        {"region-growing oracle", region_grow_oracle},
        {"distance-transform oracle", distance_oracle},
        {"tv-oracle equivalence", tv_oracle},
        {"seam-smoothness ablation", seam_ablation},
        {"adain moments", adain_moments},
        {"alpha schedule", alpha_schedule},
        {"euler order", euler_order},
        {"metrics sanity", metrics_sanity},
        {"determinism", determinism},
    };

    const auto start = Clock::now();
    int failed = 0;
    for (const auto& [name, run] : checks) {
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass) ++failed;
        std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << "\n";
    }
    std::cout << "acceptance: " << checks.size() - failed << "/" << checks.size() << " passed in "
              << format_detail("%.2fs", seconds_since(start)) << "\n";
    return failed == 0 ? 0 : 1;
}
