// Copyright (C) 2026 FusionEdit Authors
// SPDX-License-Identifier: Apache-2.0

#include "fusionedit/providers.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "fusionedit/errors.hpp"
#include "fusionedit/tensor_io.hpp"

namespace fusionedit {
namespace {

using nlohmann::json;

json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw FormatError("invalid JSON in " + path.string() + ": " + e.what());
    }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& rel) {
    std::filesystem::path p(rel);
    return p.is_absolute() ? p : base.parent_path() / p;
}

std::array<std::size_t, 3> read_shape(const json& j, const std::filesystem::path& path) {
    if (!j.contains("shape") || !j["shape"].is_array() || j["shape"].size() != 3) {
        throw ConfigError("'shape' must be [C, H, W] in " + path.string());
    }
    std::array<std::size_t, 3> shape{};
    for (std::size_t i = 0; i < 3; ++i) {
        const auto v = j["shape"][i].get<long long>();
        if (v <= 0) throw ConfigError("'shape' entries must be positive in " + path.string());
        shape[i] = static_cast<std::size_t>(v);
    }
    return shape;
}

std::vector<double> per_channel(const json& j, std::size_t channels, const std::string& what) {
    std::vector<double> values;
    if (j.is_number()) {
        values.assign(channels, j.get<double>());
    } else if (j.is_array()) {
        values = j.get<std::vector<double>>();
    } else {
        throw ConfigError(what + " must be a number or a per-channel array");
    }
    if (values.size() != channels) {
        throw ConfigError(what + " has " + std::to_string(values.size()) + " entries for " +
                          std::to_string(channels) + " channels");
    }
    return values;
}

// 3x3 box average with replicated borders.
double box3(const LatentTensor& x, std::size_t c, std::size_t y, std::size_t xx) {
    const auto h = static_cast<long>(x.height());
    const auto w = static_cast<long>(x.width());
    double sum = 0.0;
    for (long dy = -1; dy <= 1; ++dy) {
        for (long dx = -1; dx <= 1; ++dx) {
            const long yy = std::clamp(static_cast<long>(y) + dy, 0L, h - 1);
            const long xc = std::clamp(static_cast<long>(xx) + dx, 0L, w - 1);
            sum += x.at(c, static_cast<std::size_t>(yy), static_cast<std::size_t>(xc));
        }
    }
    return sum / 9.0;
}

}  // namespace

// ---------------------------------------------------------------------------
// AnalyticProvider

AnalyticProvider::AnalyticProvider(std::map<std::string, LatentTensor> means, double epsilon)
    : m_means(std::move(means)), m_epsilon(epsilon) {
    if (m_means.empty()) throw ConfigError("analytic provider needs at least one conditioning");
    if (!(epsilon > 0.0)) throw ConfigError("analytic provider epsilon must be positive");
    const auto& first = m_means.begin()->second;
    for (const auto& [tag, mu] : m_means) {
        if (!mu.same_shape(first)) throw ShapeError("analytic provider mean '" + tag + "' has a different shape");
    }
}

std::unique_ptr<AnalyticProvider> AnalyticProvider::from_json_file(const std::filesystem::path& path) {
    const json j = read_json(path);
    const auto shape = read_shape(j, path);
    const double epsilon = j.value("epsilon", 1e-4);
    if (!j.contains("means") || !j["means"].is_object() || j["means"].empty()) {
        throw ConfigError("'means' must be a non-empty object in " + path.string());
    }
    std::map<std::string, LatentTensor> means;
    for (const auto& [tag, spec] : j["means"].items()) {
        if (spec.is_string()) {
            LatentTensor mu = read_tensor(resolve(path, spec.get<std::string>()));
            if (mu.channels() != shape[0] || mu.height() != shape[1] || mu.width() != shape[2]) {
                throw ShapeError("mean '" + tag + "' has shape " + mu.shape_string() + " in " + path.string());
            }
            means.emplace(tag, std::move(mu));
            continue;
        }
        const auto values = per_channel(spec, shape[0], "mean '" + tag + "'");
        LatentTensor mu(shape[0], shape[1], shape[2]);
        for (std::size_t c = 0; c < shape[0]; ++c) {
            std::fill(mu.channel(c).begin(), mu.channel(c).end(), static_cast<float>(values[c]));
        }
        means.emplace(tag, std::move(mu));
    }
    return std::make_unique<AnalyticProvider>(std::move(means), epsilon);
}

std::vector<std::string> AnalyticProvider::conditionings() const {
    std::vector<std::string> tags;
    for (const auto& entry : m_means) tags.push_back(entry.first);
    return tags;
}

const LatentTensor& AnalyticProvider::mean(const PromptId& c) const {
    auto it = m_means.find(c.tag);
    if (it == m_means.end()) throw ConfigError("analytic provider has no conditioning '" + c.tag + "'");
    return it->second;
}

LatentTensor AnalyticProvider::evaluate(const LatentTensor& x, double t, const PromptId& c) const {
    const LatentTensor& mu = mean(c);
    require_same_shape(x, mu, "analytic provider");
    const double denom = std::max(t, m_epsilon);
    LatentTensor v(x.channels(), x.height(), x.width());
    auto dx = x.data();
    auto dm = mu.data();
    auto dv = v.data();
    for (std::size_t i = 0; i < dv.size(); ++i) {
        dv[i] = static_cast<float>((static_cast<double>(dm[i]) - static_cast<double>(dx[i])) / denom);
    }
    return v;
}

// ---------------------------------------------------------------------------
// GridProvider

std::unique_ptr<GridProvider> GridProvider::load(const std::filesystem::path& manifest) {
    const json j = read_json(manifest);
    auto provider = std::unique_ptr<GridProvider>(new GridProvider());
    try {
        provider->m_conditionings = j.at("conditionings").get<std::vector<std::string>>();
        provider->m_steps = j.at("steps").get<int>();
    } catch (const json::exception& e) {
        throw ConfigError("manifest " + manifest.string() + " needs 'conditionings' and 'steps': " + e.what());
    }
    if (provider->m_conditionings.empty()) throw ConfigError("manifest declares no conditionings");
    if (provider->m_steps < 1) throw ConfigError("manifest 'steps' must be >= 1");
    if (!j.contains("files") || !j["files"].is_object()) {
        throw ConfigError("manifest " + manifest.string() + " has no 'files' object");
    }
    if (j.contains("source")) provider->m_source = resolve(manifest, j["source"].get<std::string>());

    const json& files = j["files"];
    const LatentTensor* reference = nullptr;
    for (const auto& cond : provider->m_conditionings) {
        for (int step = 0; step < provider->m_steps; ++step) {
            const std::string key = cond + "/" + std::to_string(step);
            if (!files.contains(key)) throw ConfigError("manifest is missing velocity file for key '" + key + "'");
            const auto file = resolve(manifest, files[key].get<std::string>());
            if (!std::filesystem::exists(file)) {
                throw IoError("velocity file for key '" + key + "' not found: " + file.string());
            }
            LatentTensor v = read_tensor(file);
            if (reference && !v.same_shape(*reference)) {
                throw ShapeError("velocity '" + key + "' has shape " + v.shape_string() + ", expected " +
                                 reference->shape_string());
            }
            auto [it, inserted] = provider->m_tensors.emplace(key, std::move(v));
            reference = &it->second;
        }
    }
    if (j.contains("latent_shape")) {
        const auto shape = j["latent_shape"].get<std::vector<std::size_t>>();
        if (shape.size() != 3 || shape[0] != reference->channels() || shape[1] != reference->height() ||
            shape[2] != reference->width()) {
            throw ShapeError("manifest latent_shape does not match velocity files (" + reference->shape_string() +
                             ")");
        }
    }
    return provider;
}

int GridProvider::step_for(double t) const {
    const long step = std::lround((1.0 - t) * m_steps);
    return static_cast<int>(std::clamp(step, 0L, static_cast<long>(m_steps - 1)));
}

LatentTensor GridProvider::evaluate(const LatentTensor& x, double t, const PromptId& c) const {
    const std::string key = c.tag + "/" + std::to_string(step_for(t));
    auto it = m_tensors.find(key);
    if (it == m_tensors.end()) throw ConfigError("grid provider has no velocity for '" + key + "'");
    require_same_shape(x, it->second, "grid provider");
    return it->second;
}

// ---------------------------------------------------------------------------
// TwoBlobProvider

TwoBlobProvider::TwoBlobProvider(std::size_t channels, std::size_t height, std::size_t width, Rect rect,
                                 std::map<std::string, std::vector<double>> offsets, double decay, double coupling)
    : m_channels(channels), m_height(height), m_width(width), m_rect(rect), m_offsets(std::move(offsets)),
      m_decay(decay), m_coupling(coupling) {
    if (channels == 0 || height == 0 || width == 0) throw ShapeError("two-blob provider shape must be positive");
    if (rect.y0 >= rect.y1 || rect.x0 >= rect.x1 || rect.y1 > height || rect.x1 > width) {
        throw ConfigError("two-blob rectangle is empty or exceeds the latent");
    }
    if (m_offsets.empty()) throw ConfigError("two-blob provider needs at least one conditioning");
    for (const auto& [tag, o] : m_offsets) {
        if (o.size() != channels) throw ConfigError("two-blob offsets for '" + tag + "' need one value per channel");
    }
    if (!std::isfinite(decay)) throw ConfigError("two-blob decay must be finite");
    if (!std::isfinite(coupling)) throw ConfigError("two-blob coupling must be finite");
}

std::unique_ptr<TwoBlobProvider> TwoBlobProvider::from_json_file(const std::filesystem::path& path) {
    const json j = read_json(path);
    const auto shape = read_shape(j, path);
    if (!j.contains("rect") || !j["rect"].is_array() || j["rect"].size() != 4) {
        throw ConfigError("'rect' must be [y0, x0, y1, x1] in " + path.string());
    }
    const auto r = j["rect"].get<std::vector<std::size_t>>();
    if (!j.contains("offsets") || !j["offsets"].is_object()) {
        throw ConfigError("'offsets' must be an object in " + path.string());
    }
    std::map<std::string, std::vector<double>> offsets;
    for (const auto& [tag, spec] : j["offsets"].items()) {
        offsets.emplace(tag, per_channel(spec, shape[0], "offset '" + tag + "'"));
    }
    return std::make_unique<TwoBlobProvider>(shape[0], shape[1], shape[2], Rect{r[0], r[1], r[2], r[3]},
                                             std::move(offsets), j.value("decay", 1.0),
                                             j.value("coupling", 0.0));
}

std::vector<std::string> TwoBlobProvider::conditionings() const {
    std::vector<std::string> tags;
    for (const auto& entry : m_offsets) tags.push_back(entry.first);
    return tags;
}

LatentTensor TwoBlobProvider::evaluate(const LatentTensor& x, double, const PromptId& c) const {
    if (x.channels() != m_channels || x.height() != m_height || x.width() != m_width) {
        throw ShapeError("two-blob provider expects " + std::to_string(m_channels) + "x" + std::to_string(m_height) +
                         "x" + std::to_string(m_width) + ", got " + x.shape_string());
    }
    auto it = m_offsets.find(c.tag);
    if (it == m_offsets.end()) throw ConfigError("two-blob provider has no conditioning '" + c.tag + "'");
    const auto& offset = it->second;

    LatentTensor v(x.channels(), x.height(), x.width());
    for (std::size_t ch = 0; ch < m_channels; ++ch) {
        double drift = 0.0;
        if (m_coupling != 0.0) {
            for (float e : x.channel(ch)) drift += e;
            drift *= m_coupling / static_cast<double>(x.plane_size());
        }
        for (std::size_t y = 0; y < m_height; ++y) {
            for (std::size_t xx = 0; xx < m_width; ++xx) {
                const double blob = m_rect.contains(y, xx) ? offset[ch] : 0.0;
                v.at(ch, y, xx) = static_cast<float>(blob - m_decay * box3(x, ch, y, xx) + drift);
            }
        }
    }
    return v;
}

// ---------------------------------------------------------------------------

std::unique_ptr<VelocityProvider> load_provider(const std::string& spec) {
    auto strip = [&](std::string_view prefix) { return std::filesystem::path(spec.substr(prefix.size())); };
    try {
        if (spec.starts_with("analytic:")) return AnalyticProvider::from_json_file(strip("analytic:"));
        if (spec.starts_with("twoblob:")) return TwoBlobProvider::from_json_file(strip("twoblob:"));
        if (spec.starts_with("grid:")) return GridProvider::load(strip("grid:"));
        return GridProvider::load(spec);
    } catch (const json::exception& e) {
        throw ConfigError("invalid provider parameters in '" + spec + "': " + e.what());
    }
}

}  // namespace fusionedit
