// Copyright (C) 2026 FusionEdit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "fusionedit/flow.hpp"

namespace fusionedit {

/// Closed-form field for a point mass at mu_c under the linear path
/// x_t = (1 - t) x_0 + t n:
///
///   x_t - t n = (1 - t) mu_c   =>   data-ward velocity (mu_c - x_t) / t
///
/// The denominator is clamped to max(t, epsilon) for the t -> 0 end.
class AnalyticProvider : public LatentValueProvider {
public:
    AnalyticProvider(std::map<std::string, LatentTensor> means, double epsilon = 1e-4);

    /// {"shape": [C,H,W], "epsilon": 1e-4, "means": {"src": <number | [per-channel] | "file.npy">, ...}}
    static std::unique_ptr<AnalyticProvider> from_json_file(const std::filesystem::path& path);

    std::vector<std::string> conditionings() const override;
    LatentTensor evaluate(const LatentTensor& x, double t, const PromptId& c) const override;

    const LatentTensor& mean(const PromptId& c) const;

private:
    std::map<std::string, LatentTensor> m_means;
    double m_epsilon;
};

/// Replays recorded velocity tensors keyed by (conditioning, step). Queries at
/// time t use step round((1 - t) * steps) clamped to [0, steps - 1]; the
/// input latent is ignored, so there is no value tensor to modulate.
class GridProvider : public VelocityProvider {
public:
    /// Manifest: {"conditionings": [...], "steps": N, "files": {"<cond>/<step>": "path.npy"}}
    /// Relative paths resolve against the manifest's directory. Every
    /// conditioning/step pair must be present and all tensors share one shape.
    static std::unique_ptr<GridProvider> load(const std::filesystem::path& manifest);

    std::vector<std::string> conditionings() const override { return m_conditionings; }
    LatentTensor evaluate(const LatentTensor& x, double t, const PromptId& c) const override;

    int steps() const { return m_steps; }
    int step_for(double t) const;
    const std::filesystem::path& source_path() const { return m_source; }

private:
    std::vector<std::string> m_conditionings;
    int m_steps = 0;
    std::map<std::string, LatentTensor> m_tensors;
    std::filesystem::path m_source;
};

/// Axis-aligned half-open pixel rectangle [y0, y1) x [x0, x1).
struct Rect {
    std::size_t y0 = 0, x0 = 0, y1 = 0, x1 = 0;
    bool contains(std::size_t y, std::size_t x) const { return y >= y0 && y < y1 && x >= x0 && x < x1; }
};

/// v(x, t, c) = offset_c * 1[rect] - decay * box3(x)
///
/// Conditionings differ only inside the rectangle, so the discrepancy map is
/// supported exactly there. The shared 3x3 box term spreads an unmasked edit
/// beyond the rectangle.
/// v(x, c) = offset_c * 1[rect] - decay * box3(x) + coupling * mean_channel(x).
/// Conditionings differ only inside the rectangle for equal inputs; the
/// coupling term lets an unmasked edit drift the whole background.
class TwoBlobProvider : public LatentValueProvider {
public:
    TwoBlobProvider(std::size_t channels, std::size_t height, std::size_t width, Rect rect,
                    std::map<std::string, std::vector<double>> offsets, double decay = 1.0, double coupling = 0.0);

    /// {"shape": [C,H,W], "rect": [y0,x0,y1,x1], "offsets": {"src": [...], ...}, "decay": 1.0, "coupling": 0.0}
    static std::unique_ptr<TwoBlobProvider> from_json_file(const std::filesystem::path& path);

    std::vector<std::string> conditionings() const override;
    LatentTensor evaluate(const LatentTensor& x, double t, const PromptId& c) const override;

    const Rect& rect() const { return m_rect; }

private:
    std::size_t m_channels, m_height, m_width;
    Rect m_rect;
    std::map<std::string, std::vector<double>> m_offsets;
    double m_decay;
    double m_coupling;
};

/// Parses a CLI provider spec: "analytic:<params.json>", "twoblob:<params.json>",
/// "grid:<manifest.json>" or a bare manifest path.
std::unique_ptr<VelocityProvider> load_provider(const std::string& spec);

}  // namespace fusionedit
