// Copyright (C) 2026 FusionEdit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "fusionedit/config.hpp"
#include "fusionedit/errors.hpp"
#include "fusionedit/flow.hpp"
#include "fusionedit/mask_gen.hpp"
#include "fusionedit/metrics.hpp"

namespace fusionedit {

/// A failure inside a named pipeline stage. Keeps the exit-code class of the
/// original error.
class StageError : public Error {
public:
    StageError(std::string stage, const Error& cause)
        : Error(stage + ": " + cause.what()), m_stage(std::move(stage)), m_usage(cause.is_usage_error()) {}

    const std::string& stage() const { return m_stage; }
    bool is_usage_error() const override { return m_usage; }

private:
    std::string m_stage;
    bool m_usage;
};

struct MaskResult {
    Region region;
    ScalarMap distance;
    SoftMask soft;
};

struct EditResult {
    LatentTensor edited;
    DiscrepancyMap discrepancy;
    MaskResult mask;
    double delta_bar = 0.0;
    RegionStatus status = RegionStatus::ok;
    MetricReport preserved;  // edited vs source over pixels with soft weight < 0.5
};

DiscrepancyMap run_discrepancy(const VelocityProvider& provider, const LatentTensor& x_src, const EditConfig& config);

/// Region growing on the averaged map followed by the soft transition band.
MaskResult build_mask(const ScalarMap& s_bar, const EditConfig& config);

/// Pixels the edit should leave untouched: soft weight below one half.
BinaryMask preserved_region(const SoftMask& soft);

/// discrepancy -> mask -> editing trajectory. An empty edit region returns the
/// source unchanged with status empty_edit_region.
EditResult run_edit(const VelocityProvider& provider, const LatentTensor& x_src, const EditConfig& config,
                    double peak = 1.0);

}  // namespace fusionedit
