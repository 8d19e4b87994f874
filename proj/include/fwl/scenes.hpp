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

// Analytic scenes and raster-scan acquisition.
//
// The sensor sits at the origin looking along +z. Pixel (i, j) of an H x W
// grid with angular step s looks along normalize(tan(ax), tan(ay), 1) with
// ax = (j - (W - 1) / 2) s and ay = (i - (H - 1) / 2) s. Depth is the true
// distance along the ray. Radial velocity is positive for approaching
// surfaces.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "fwl/channel.hpp"
#include "fwl/core.hpp"
#include "fwl/parallel.hpp"
#include "fwl/reconstruction/field.hpp"
#include "fwl/rng.hpp"

namespace fwl {

using Vec3 = Eigen::Vector3d;

struct PixelGrid {
    std::size_t height = 16;
    std::size_t width = 16;
    double angular_step = 0.005;  // rad between neighbouring pixels

    std::size_t size() const { return height * width; }

    Vec3 ray(std::size_t i, std::size_t j) const {
        const double ax = (static_cast<double>(j) - 0.5 * (static_cast<double>(width) - 1.0)) * angular_step;
        const double ay = (static_cast<double>(i) - 0.5 * (static_cast<double>(height) - 1.0)) * angular_step;
        return Vec3(std::tan(ax), std::tan(ay), 1.0).normalized();
    }
};

enum class SurfaceKind { Plane, Disk };

/// One analytic surface.
///
/// Plane: passes through (0, 0, distance) with its normal tilted by `tilt`
/// about the x axis, optionally clipped to an x/y box on the hit point.
/// Disk: centred at `center`, radius `radius`, normal tilted by `tilt` about
/// the x axis (tilt 0 faces the sensor), spinning about its normal so that
/// the rim moves at `rim_speed`.
struct Surface {
    SurfaceKind kind = SurfaceKind::Plane;
    double distance = 1.0;
    double tilt = 0.0;
    double x_min = -std::numeric_limits<double>::infinity();
    double x_max = std::numeric_limits<double>::infinity();
    double y_min = -std::numeric_limits<double>::infinity();
    double y_max = std::numeric_limits<double>::infinity();
    Vec3 center = Vec3(0.0, 0.0, 1.0);
    double radius = 0.1;
    double rim_speed = 0.0;
    double reflectance = 1.0;
    bool opaque = true;

    Vec3 normal() const { return Vec3(0.0, -std::sin(tilt), -std::cos(tilt)); }
};

struct SurfaceHit {
    double range = 0.0;
    double radial_velocity = 0.0;
    std::size_t surface = 0;
};

/// Ray intersection with one surface, if any (range > 0).
inline bool intersect(const Surface& s, const Vec3& ray, SurfaceHit& hit) {
    const Vec3 n = s.normal();
    const Vec3 anchor = s.kind == SurfaceKind::Plane ? Vec3(0.0, 0.0, s.distance) : s.center;
    const double denom = n.dot(ray);
    if (std::abs(denom) < 1e-12) return false;
    const double t = n.dot(anchor) / denom;
    if (!(t > 0.0)) return false;
    const Vec3 p = t * ray;
    if (s.kind == SurfaceKind::Plane) {
        if (p.x() < s.x_min || p.x() > s.x_max || p.y() < s.y_min || p.y() > s.y_max) return false;
        hit.range = t;
        hit.radial_velocity = 0.0;
        return true;
    }
    const Vec3 offset = p - s.center;
    if (offset.norm() > s.radius) return false;
    hit.range = t;
    hit.radial_velocity = s.radius > 0.0 ? -(s.rim_speed / s.radius * n.cross(offset)).dot(ray) : 0.0;
    return true;
}

enum class SceneKind { Plane, SpinningDisk, TwoLayer, Composite };

inline std::string_view to_string(SceneKind k) {
    switch (k) {
        case SceneKind::Plane: return "plane";
        case SceneKind::SpinningDisk: return "spinning_disk";
        case SceneKind::TwoLayer: return "two_layer";
        case SceneKind::Composite: return "composite";
    }
    return "unknown";
}

struct SceneSpec {
    SceneKind kind = SceneKind::Plane;
    std::vector<Surface> surfaces;
    PixelGrid grid;
    SpeckleKind speckle = SpeckleKind::FullyScrambling;
    std::uint64_t master_seed = 0;

    static SceneSpec plane(double distance, double tilt = 0.0, double reflectance = 1.0) {
        SceneSpec s;
        s.kind = SceneKind::Plane;
        Surface p;
        p.distance = distance;
        p.tilt = tilt;
        p.reflectance = reflectance;
        s.surfaces.push_back(p);
        return s;
    }

    static SceneSpec spinning_disk(const Vec3& center, double radius, double rim_speed, double tilt,
                                   double reflectance = 1.0) {
        SceneSpec s;
        s.kind = SceneKind::SpinningDisk;
        Surface d;
        d.kind = SurfaceKind::Disk;
        d.center = center;
        d.radius = radius;
        d.rim_speed = rim_speed;
        d.tilt = tilt;
        d.reflectance = reflectance;
        s.surfaces.push_back(d);
        return s;
    }

    /// Translucent front plane of reflectance r in front of an opaque back
    /// plane seen through it with reflectance (1 - r)^2.
    static SceneSpec two_layer(double front, double back, double front_reflectance) {
        SceneSpec s;
        s.kind = SceneKind::TwoLayer;
        Surface f;
        f.distance = front;
        f.reflectance = front_reflectance;
        f.opaque = false;
        Surface b;
        b.distance = back;
        b.reflectance = (1.0 - front_reflectance) * (1.0 - front_reflectance);
        s.surfaces = {f, b};
        return s;
    }

    static SceneSpec composite(std::vector<Surface> parts) {
        SceneSpec s;
        s.kind = SceneKind::Composite;
        s.surfaces = std::move(parts);
        return s;
    }

    void validate(const SystemConfig& cfg) const {
        if (grid.height < 1 || grid.width < 1) throw ConfigError("pixel grid must be at least 1 x 1");
        if (!(grid.angular_step >= 0.0) || grid.angular_step * std::max(grid.height, grid.width) >= 3.0)
            throw ConfigError("pixel angular step out of range");
        if (surfaces.empty()) throw SceneError("scene has no surfaces");
        if (kind == SceneKind::TwoLayer && surfaces.size() == 2 &&
            !(surfaces[0].reflectance > 0.0 && surfaces[0].reflectance <= 1.0))
            throw SceneError("front reflectance must lie in (0, 1]");
        for (const auto& s : surfaces) {
            if (!(s.reflectance >= 0.0 && s.reflectance <= 1.0)) throw SceneError("reflectance must lie in [0, 1]");
            if (s.kind == SurfaceKind::Disk) {
                if (!(s.radius > 0.0)) throw SceneError("disk radius must be positive");
                if (std::abs(s.rim_speed) > cfg.max_abs_velocity * (1.0 + 1e-12))
                    throw SceneError("rim speed exceeds max_abs_velocity");
            }
        }
    }
};

/// Ground truth of one surface seen by one pixel.
struct LayerTruth {
    double depth_m = 0.0;
    double velocity_mps = 0.0;
    double reflectance = 0.0;
    int delay = 0;
    double doppler = 0.0;
};

struct GroundTruth {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> depth_map;     // nearest surface, NaN where nothing is hit
    std::vector<double> velocity_map;  // nearest surface, 0 where nothing is hit
    std::vector<int> surface_count_map;
    std::vector<std::vector<LayerTruth>> layers;  // per pixel, nearest first

    std::size_t size() const { return height * width; }

    bool has_motion() const {
        for (double v : velocity_map)
            if (v != 0.0) return true;
        return false;
    }
};

struct SceneRealization {
    GroundTruth truth;
    std::vector<ChannelRealization> channels;  // per pixel, noise unset
};

/// Intersects every pixel ray with the scene, keeps hits up to and
/// including the first opaque surface, and turns each into an echo with a
/// speckle Jones matrix drawn from a per-pixel, per-surface seed. Internal
/// reflections from cfg are appended.
inline SceneRealization realize_scene(const SceneSpec& spec, const SystemConfig& cfg) {
    cfg.validate();
    spec.validate(cfg);
    const std::size_t h = spec.grid.height, w = spec.grid.width;
    SceneRealization out;
    out.truth.height = h;
    out.truth.width = w;
    out.truth.depth_map.assign(h * w, std::numeric_limits<double>::quiet_NaN());
    out.truth.velocity_map.assign(h * w, 0.0);
    out.truth.surface_count_map.assign(h * w, 0);
    out.truth.layers.resize(h * w);
    out.channels.resize(h * w);

    const double min_depth = delay_to_depth(cfg.delta_min, cfg);
    for (std::size_t i = 0; i < h; ++i)
        for (std::size_t j = 0; j < w; ++j) {
            const std::size_t px = i * w + j;
            const Vec3 ray = spec.grid.ray(i, j);
            std::vector<SurfaceHit> hits;
            for (std::size_t s = 0; s < spec.surfaces.size(); ++s) {
                SurfaceHit hit;
                if (intersect(spec.surfaces[s], ray, hit)) {
                    hit.surface = s;
                    hits.push_back(hit);
                }
            }
            std::sort(hits.begin(), hits.end(), [](const SurfaceHit& a, const SurfaceHit& b) {
                return a.range != b.range ? a.range < b.range : a.surface < b.surface;
            });

            ChannelRealization ch;
            const std::uint64_t pixel_seed = derive_seed(spec.master_seed, px, SeedRole::Speckle);
            for (const auto& hit : hits) {
                const Surface& surf = spec.surfaces[hit.surface];
                if (hit.range > cfg.max_range || hit.range <= min_depth)
                    throw SceneError("surface at " + std::to_string(hit.range) + " m is outside the observable range");
                LayerTruth lt;
                lt.depth_m = hit.range;
                lt.velocity_mps = hit.radial_velocity;
                lt.reflectance = surf.reflectance;
                lt.delay = depth_to_delay(hit.range, cfg);
                lt.doppler = hit.radial_velocity == 0.0 ? 0.0 : velocity_to_doppler(hit.radial_velocity, cfg);
                if (static_cast<std::size_t>(lt.delay) >= cfg.n_symbols)
                    throw SceneError("surface delay exceeds the frame length");
                out.truth.layers[px].push_back(lt);

                EchoPath e;
                e.delay = lt.delay;
                e.doppler = lt.doppler;
                e.jones = sample_jones({spec.speckle, surf.reflectance,
                                        derive_seed(pixel_seed, hit.surface, SeedRole::Speckle)});
                ch.echoes.push_back(e);
                if (surf.opaque) break;
            }
            const auto& layers = out.truth.layers[px];
            out.truth.surface_count_map[px] = static_cast<int>(layers.size());
            if (!layers.empty()) {
                out.truth.depth_map[px] = layers.front().depth_m;
                out.truth.velocity_map[px] = layers.front().velocity_mps;
            }
            if (!cfg.internal_reflection_amplitudes.empty() || !cfg.internal_reflection_delays.empty()) {
                std::vector<double> amps = cfg.internal_reflection_amplitudes;
                if (amps.empty()) amps.assign(cfg.internal_reflection_delays.size(), 0.0);
                ch = with_internal_reflections(std::move(ch), cfg, amps);
            }
            out.channels[px] = std::move(ch);
        }
    return out;
}

/// Mean scene echo power sum ||J||_F^2 expected per hit pixel, 2 * sum of
/// layer reflectances averaged over pixels with at least one surface.
inline double mean_echo_power(const GroundTruth& gt) {
    double total = 0.0;
    std::size_t count = 0;
    for (const auto& layers : gt.layers) {
        if (layers.empty()) continue;
        double r = 0.0;
        for (const auto& l : layers) r += l.reflectance;
        total += 2.0 * r;
        ++count;
    }
    if (count == 0) throw ConfigError("SNR is undefined for a scene without surfaces");
    return total / static_cast<double>(count);
}

/// Noise sigma for a scene-level SNR, measured against a nominal echo whose
/// squared Frobenius norm is the mean scene echo power. Internal
/// reflections do not count as signal.
inline double scene_sigma(double snr_db, const GroundTruth& gt, double power_per_pol) {
    EchoPath nominal;
    nominal.jones = std::sqrt(0.5 * mean_echo_power(gt)) * JonesMatrix::Identity();
    return snr_to_sigma(snr_db, {nominal}, power_per_pol);
}

/// Per-pixel received sequences. Pixel p draws noise from
/// derive_seed(noise.seed, p, Noise).
inline Frame acquire_frame(const DualPolSequence& tx, const std::vector<ChannelRealization>& channels,
                           const PixelGrid& grid, const SystemConfig& cfg, const NoiseModel& noise,
                           std::size_t threads = 0) {
    if (channels.size() != grid.size()) throw ShapeError("one channel realization per pixel required");
    Frame f;
    f.height = grid.height;
    f.width = grid.width;
    f.rx.resize(channels.size());
    parallel_for(channels.size(), threads, [&](std::size_t p) {
        ChannelRealization ch = channels[p];
        ch.noise.sigma = noise.sigma;
        ch.noise.seed = derive_seed(noise.seed, p, SeedRole::Noise);
        f.rx[p] = apply_channel(tx, ch, cfg);
    });
    return f;
}

}  // namespace fwl
