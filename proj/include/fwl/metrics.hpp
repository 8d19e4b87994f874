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

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <set>
#include <vector>

#include "fwl/core.hpp"
#include "fwl/reconstruction/extract.hpp"
#include "fwl/scenes.hpp"

namespace fwl {

inline constexpr double outlier_threshold_m = 0.050;

struct MetricsReport {
    double mean_depth_error_mm = 0.0;
    double pct_within_2mm = 0.0;
    double pct_within_6mm = 0.0;
    double outlier_fraction = 0.0;  // share of pixels with error > 50 mm
    std::optional<double> velocity_mae_mps;  // unset when no pixel moves
    std::size_t valid_pixels = 0;
    std::size_t moving_pixels = 0;
};

/// Depth error statistics over pixels with a ground-truth surface.
///
/// With plane_fit the reference is the least-squares plane
/// depth = a * row + b * col + c fitted to the extracted depths themselves,
/// and the error is the absolute residual. Otherwise the reference is the
/// ground-truth depth.
inline MetricsReport evaluate_depth(const std::vector<double>& extracted_depth, const GroundTruth& gt,
                                    bool plane_fit) {
    if (extracted_depth.size() != gt.size() || gt.depth_map.size() != gt.size())
        throw ShapeError("extraction map and ground truth differ in size");
    std::vector<std::size_t> valid;
    for (std::size_t p = 0; p < gt.size(); ++p)
        if (std::isfinite(gt.depth_map[p]) && std::isfinite(extracted_depth[p])) valid.push_back(p);

    std::vector<double> err(valid.size());
    if (plane_fit) {
        if (valid.size() < 3) throw MetricError("plane fit needs at least 3 valid pixels");
        Eigen::MatrixXd a(static_cast<Eigen::Index>(valid.size()), 3);
        Eigen::VectorXd b(static_cast<Eigen::Index>(valid.size()));
        for (std::size_t k = 0; k < valid.size(); ++k) {
            const auto row = static_cast<double>(valid[k] / gt.width);
            const auto col = static_cast<double>(valid[k] % gt.width);
            a.row(static_cast<Eigen::Index>(k)) << row, col, 1.0;
            b(static_cast<Eigen::Index>(k)) = extracted_depth[valid[k]];
        }
        const Eigen::Vector3d coef = a.colPivHouseholderQr().solve(b);
        const Eigen::VectorXd fit = a * coef;
        for (std::size_t k = 0; k < valid.size(); ++k)
            err[k] = std::abs(b(static_cast<Eigen::Index>(k)) - fit(static_cast<Eigen::Index>(k)));
    } else {
        for (std::size_t k = 0; k < valid.size(); ++k)
            err[k] = std::abs(extracted_depth[valid[k]] - gt.depth_map[valid[k]]);
    }

    MetricsReport r;
    r.valid_pixels = valid.size();
    if (valid.empty()) return r;
    double sum = 0.0;
    std::size_t in2 = 0, in6 = 0, out = 0;
    for (double e : err) {
        sum += e;
        in2 += e < 0.002;
        in6 += e < 0.006;
        out += e > outlier_threshold_m;
    }
    const double n = static_cast<double>(valid.size());
    r.mean_depth_error_mm = 1e3 * sum / n;
    r.pct_within_2mm = 100.0 * static_cast<double>(in2) / n;
    r.pct_within_6mm = 100.0 * static_cast<double>(in6) / n;
    r.outlier_fraction = static_cast<double>(out) / n;
    return r;
}

inline MetricsReport evaluate_depth(const std::vector<Extraction>& ex, const GroundTruth& gt, bool plane_fit) {
    std::vector<double> d(ex.size());
    for (std::size_t p = 0; p < ex.size(); ++p) d[p] = ex[p].depth_m;
    return evaluate_depth(d, gt, plane_fit);
}

/// Mean absolute radial-velocity error over moving ground-truth pixels.
/// Throws MetricError when no pixel moves.
inline double velocity_mae(const std::vector<double>& extracted_velocity, const GroundTruth& gt) {
    if (extracted_velocity.size() != gt.size()) throw ShapeError("extraction map and ground truth differ in size");
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t p = 0; p < gt.size(); ++p) {
        if (gt.surface_count_map[p] == 0 || gt.velocity_map[p] == 0.0) continue;
        sum += std::abs(extracted_velocity[p] - gt.velocity_map[p]);
        ++n;
    }
    if (n == 0) throw MetricError("velocity error is undefined without moving pixels");
    return sum / static_cast<double>(n);
}

/// Velocity report: the MAE field is left unset when no pixel moves.
inline MetricsReport evaluate_velocity(const std::vector<Extraction>& ex, const GroundTruth& gt) {
    std::vector<double> v(ex.size());
    for (std::size_t p = 0; p < ex.size(); ++p) v[p] = ex[p].velocity_mps;
    MetricsReport r;
    for (std::size_t p = 0; p < gt.size(); ++p) r.moving_pixels += gt.surface_count_map[p] > 0 && gt.velocity_map[p] != 0.0;
    if (r.moving_pixels > 0) r.velocity_mae_mps = velocity_mae(v, gt);
    return r;
}

/// Depth report with the velocity fields filled in when defined.
inline MetricsReport evaluate(const std::vector<Extraction>& ex, const GroundTruth& gt, bool plane_fit) {
    MetricsReport r = evaluate_depth(ex, gt, plane_fit);
    const MetricsReport v = evaluate_velocity(ex, gt);
    r.velocity_mae_mps = v.velocity_mae_mps;
    r.moving_pixels = v.moving_pixels;
    return r;
}

/// Share of pixels whose top-k extracted delays are exactly the ground-truth
/// layer delays (as sets), over pixels with exactly k layers.
inline double layer_recovery_fraction(const std::vector<Extraction>& ex, const GroundTruth& gt, std::size_t k) {
    if (ex.size() != gt.size()) throw ShapeError("extraction map and ground truth differ in size");
    std::size_t total = 0, hit = 0;
    for (std::size_t p = 0; p < gt.size(); ++p) {
        if (gt.layers[p].size() != k) continue;
        ++total;
        std::multiset<int> want, got;
        for (const auto& l : gt.layers[p]) want.insert(l.delay);
        for (const auto& s : ex[p].surfaces()) got.insert(s.delta);
        hit += want == got;
    }
    if (total == 0) throw MetricError("no pixel has the requested layer count");
    return static_cast<double>(hit) / static_cast<double>(total);
}

}  // namespace fwl
