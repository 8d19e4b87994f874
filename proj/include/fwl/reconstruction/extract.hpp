// SPDX-License-Identifier: Apache-2.0
//
// fwl: full-wavefield lidar simulation and reconstruction toolkit
// Copyright (C) 2026 The fwl authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "fwl/core.hpp"
#include "fwl/reconstruction/field.hpp"

namespace fwl {

/// One detected surface bin.
struct SurfaceBin {
    int delta = 0;
    double nu = 0.0;
    JonesMatrix jones = JonesMatrix::Zero();
    double norm = 0.0;  // Frobenius norm of jones, or the filter score
    double depth_m = 0.0;
    double velocity_mps = 0.0;
};

/// Strongest surface per pixel plus the next k - 1 ranked bins.
struct Extraction {
    int delta_star = 0;
    double nu_star = 0.0;
    JonesMatrix jones_star = JonesMatrix::Zero();
    double norm = 0.0;
    double depth_m = 0.0;
    double velocity_mps = 0.0;
    std::vector<SurfaceBin> secondary;

    /// Primary plus secondary bins, strongest first.
    std::vector<SurfaceBin> surfaces() const {
        std::vector<SurfaceBin> all;
        all.push_back({delta_star, nu_star, jones_star, norm, depth_m, velocity_mps});
        all.insert(all.end(), secondary.begin(), secondary.end());
        return all;
    }
};

/// True for delays excluded from extraction: delta <= delta_min and the
/// calibrated internal reflection delays.
inline bool delay_masked(int delta, const SystemConfig& cfg) {
    if (delta <= cfg.delta_min) return true;
    return std::find(cfg.internal_reflection_delays.begin(), cfg.internal_reflection_delays.end(), delta) !=
           cfg.internal_reflection_delays.end();
}

namespace detail {

/// Strict ranking: larger norm, then smaller delay, then smaller |nu|, then smaller nu.
inline bool ranks_before(const SurfaceBin& a, const SurfaceBin& b) {
    if (a.norm != b.norm) return a.norm > b.norm;
    if (a.delta != b.delta) return a.delta < b.delta;
    if (std::abs(a.nu) != std::abs(b.nu)) return std::abs(a.nu) < std::abs(b.nu);
    return a.nu < b.nu;
}

inline Extraction from_ranked(std::vector<SurfaceBin>& bins, std::size_t k, const SystemConfig& cfg) {
    if (bins.empty()) throw NoSurfaceError("every candidate bin is masked");
    const std::size_t keep = std::min(k, bins.size());
    std::partial_sort(bins.begin(), bins.begin() + static_cast<std::ptrdiff_t>(keep), bins.end(), ranks_before);
    for (std::size_t i = 0; i < keep; ++i) {
        bins[i].depth_m = delay_to_depth(bins[i].delta, cfg);
        bins[i].velocity_mps = doppler_to_velocity(bins[i].nu, cfg);
    }
    Extraction e;
    e.delta_star = bins[0].delta;
    e.nu_star = bins[0].nu;
    e.jones_star = bins[0].jones;
    e.norm = bins[0].norm;
    e.depth_m = bins[0].depth_m;
    e.velocity_mps = bins[0].velocity_mps;
    e.secondary.assign(bins.begin() + 1, bins.begin() + static_cast<std::ptrdiff_t>(keep));
    return e;
}

}  // namespace detail

/// Top-k unmasked bins of one pixel's field by Frobenius norm.
inline Extraction extract(const JonesField& field, const SystemConfig& cfg, std::size_t k = 1) {
    if (k < 1) throw ConfigError("extract needs k >= 1");
    if (field.values.size() != field.grid.size()) throw ShapeError("field values do not match the grid");
    std::vector<SurfaceBin> bins;
    const auto& g = field.grid;
    for (std::size_t kk = 0; kk < g.doppler_count(); ++kk)
        for (std::size_t d = 0; d < g.delay_count(); ++d) {
            if (delay_masked(g.delays[d], cfg)) continue;
            const JonesMatrix& j = field.at(d, kk);
            bins.push_back({g.delays[d], g.dopplers[kk], j, j.norm(), 0.0, 0.0});
        }
    return detail::from_ranked(bins, k, cfg);
}

/// Top-k unmasked lags of a matched-filter score profile (zero velocity).
inline Extraction extract_profile(const std::vector<double>& profile, const SystemConfig& cfg, std::size_t k = 1) {
    if (k < 1) throw ConfigError("extract needs k >= 1");
    std::vector<SurfaceBin> bins;
    for (std::size_t d = 0; d < profile.size(); ++d) {
        const int delta = static_cast<int>(d);
        if (delay_masked(delta, cfg)) continue;
        bins.push_back({delta, 0.0, JonesMatrix::Zero(), profile[d], 0.0, 0.0});
    }
    return detail::from_ranked(bins, k, cfg);
}

inline std::vector<Extraction> extract_map(const FieldMap& fields, const SystemConfig& cfg, std::size_t k = 1) {
    std::vector<Extraction> out;
    out.reserve(fields.size());
    for (const auto& f : fields.pixels) out.push_back(extract(f, cfg, k));
    return out;
}

}  // namespace fwl
