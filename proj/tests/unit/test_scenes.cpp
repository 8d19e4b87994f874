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

#include <catch_amalgamated.hpp>

#include <Eigen/Geometry>

#include <cmath>
#include <numbers>

#include "fwl/modulation.hpp"
#include "fwl/reconstruction/matched_filter.hpp"
#include "fwl/scenes.hpp"
#include "support.hpp"

using namespace fwl;
using Catch::Approx;

namespace {

SystemConfig short_range(std::size_t n) { return testing::small_config(n); }

/// Radial velocity of a point on a spinning disk by finite rotation about
/// its axis, independent of the cross-product form.
double rotated_radial_velocity(const Surface& disk, const Vec3& point, const Vec3& ray) {
    const double omega = disk.rim_speed / disk.radius;
    const double dt = 1e-7;
    const Eigen::AngleAxisd fwd(omega * dt, disk.normal()), back(-omega * dt, disk.normal());
    const Vec3 ahead = disk.center + fwd * (point - disk.center);
    const Vec3 behind = disk.center + back * (point - disk.center);
    return -((ahead - behind) / (2.0 * dt)).dot(ray);
}

}  // namespace

TEST_CASE("fronto-parallel plane at one metre", "[scenes]") {
    const SystemConfig cfg = short_range(4096);
    SceneSpec one = SceneSpec::plane(1.0);
    one.grid = {1, 1, 0.0};
    const auto r1 = realize_scene(one, cfg);
    CHECK(r1.truth.depth_map[0] == Approx(1.0).epsilon(1e-15));
    CHECK(r1.truth.layers[0][0].delay == 493);
    CHECK(r1.channels[0].echoes.at(0).delay == 493);

    SceneSpec wide = SceneSpec::plane(1.0);
    wide.grid = {9, 12, 0.02};
    const auto r = realize_scene(wide, cfg);
    for (std::size_t i = 0; i < 9; ++i)
        for (std::size_t j = 0; j < 12; ++j) {
            const double ax = (j - 5.5) * 0.02, ay = (i - 4.0) * 0.02;
            const double want = std::sqrt(std::tan(ax) * std::tan(ax) + std::tan(ay) * std::tan(ay) + 1.0);
            const std::size_t p = i * 12 + j;
            REQUIRE(r.truth.depth_map[p] == Approx(want).epsilon(1e-13));
            REQUIRE(r.truth.layers[p][0].delay == depth_to_delay(want, cfg));
            REQUIRE(r.truth.velocity_map[p] == 0.0);
        }
}

TEST_CASE("tilted plane depths follow the plane equation", "[scenes]") {
    const SystemConfig cfg = short_range(4096);
    SceneSpec s = SceneSpec::plane(2.0, 0.4);
    s.grid = {7, 7, 0.01};
    const auto r = realize_scene(s, cfg);
    for (std::size_t i = 0; i < 7; ++i)
        for (std::size_t j = 0; j < 7; ++j) {
            const Vec3 hit = r.truth.depth_map[i * 7 + j] * s.grid.ray(i, j);
            // Points on the plane satisfy sin(t) y + cos(t) z = 2 cos(t).
            REQUIRE(std::sin(0.4) * hit.y() + std::cos(0.4) * hit.z() == Approx(2.0 * std::cos(0.4)).epsilon(1e-12));
        }
}

TEST_CASE("spinning disk radial velocity", "[scenes]") {
    SystemConfig cfg = short_range(4096);
    cfg.max_abs_velocity = 40.0;
    const double tilt = 1.2;
    SceneSpec s = SceneSpec::spinning_disk(Vec3(0, 0, 1.5), 0.2, 25.0 / std::sin(tilt), tilt);
    s.grid = {41, 41, 0.0065};
    const auto r = realize_scene(s, cfg);
    const Surface& disk = s.surfaces[0];

    double vmax = 0.0;
    for (std::size_t i = 0; i < 41; ++i)
        for (std::size_t j = 0; j < 41; ++j) {
            const std::size_t p = i * 41 + j;
            if (r.truth.surface_count_map[p] == 0) continue;
            const Vec3 ray = s.grid.ray(i, j);
            const Vec3 point = r.truth.depth_map[p] * ray;
            REQUIRE(r.truth.velocity_map[p] == Approx(rotated_radial_velocity(disk, point, ray)).margin(1e-4));
            vmax = std::max(vmax, std::abs(r.truth.velocity_map[p]));
        }
    CHECK(r.truth.velocity_map[20 * 41 + 20] == Approx(0.0).margin(1e-12));
    CHECK(vmax <= 25.0 * 1.001);
    CHECK(vmax > 24.0);

    // Along the central row the hit points lie on a diameter. The line-of-sight
    // velocity times the range is linear in x there, and the radial velocity
    // itself reaches the rim speed times sin(tilt) at the ends.
    std::vector<double> xs, vs;
    for (std::size_t j = 0; j < 41; ++j) {
        const std::size_t p = 20 * 41 + j;
        if (r.truth.surface_count_map[p] == 0) continue;
        xs.push_back((r.truth.depth_map[p] * s.grid.ray(20, j)).x());
        vs.push_back(r.truth.velocity_map[p] * r.truth.depth_map[p]);
    }
    REQUIRE(xs.size() > 10);
    double sxx = 0, sxv = 0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        sxx += xs[k] * xs[k];
        sxv += xs[k] * vs[k];
    }
    const double slope = sxv / sxx;
    for (std::size_t k = 0; k < xs.size(); ++k) REQUIRE(vs[k] == Approx(slope * xs[k]).margin(1e-9));
    // Near the centre the range is the centre distance, so the slope is the
    // rim speed per radius times sin(tilt) times that distance.
    CHECK(std::abs(slope) == Approx(disk.rim_speed / disk.radius * std::sin(tilt) * 1.5).epsilon(1e-9));
}

TEST_CASE("two-layer and composite scenes", "[scenes]") {
    const SystemConfig cfg = short_range(4096);
    SECTION("two layers") {
        SceneSpec s = SceneSpec::two_layer(0.8, 1.1, 0.3);
        s.grid = {3, 3, 0.01};
        const auto r = realize_scene(s, cfg);
        for (std::size_t p = 0; p < 9; ++p) {
            REQUIRE(r.truth.surface_count_map[p] == 2);
            REQUIRE(r.truth.layers[p][0].reflectance == 0.3);
            REQUIRE(r.truth.layers[p][1].reflectance == Approx(0.49));
            REQUIRE(r.truth.layers[p][0].depth_m < r.truth.layers[p][1].depth_m);
            REQUIRE(r.channels[p].echoes.size() == 2);
        }
    }
    SECTION("opaque surfaces hide what is behind them") {
        Surface near;
        near.distance = 0.6;
        near.x_max = 0.0;
        Surface far;
        far.distance = 1.4;
        SceneSpec s = SceneSpec::composite({far, near});
        s.grid = {2, 4, 0.05};
        const auto r = realize_scene(s, cfg);
        for (std::size_t i = 0; i < 2; ++i)
            for (std::size_t j = 0; j < 4; ++j) {
                const std::size_t p = i * 4 + j;
                REQUIRE(r.truth.surface_count_map[p] == 1);
                const double want = j < 2 ? 0.6 : 1.4;
                REQUIRE(r.truth.depth_map[p] * s.grid.ray(i, j).z() == Approx(want).epsilon(1e-12));
            }
    }
    SECTION("pixels that miss everything") {
        Surface patch;
        patch.distance = 1.0;
        patch.x_min = 0.0;
        SceneSpec s = SceneSpec::composite({patch});
        s.grid = {1, 2, 0.1};
        const auto r = realize_scene(s, cfg);
        CHECK(std::isnan(r.truth.depth_map[0]));
        CHECK(r.truth.surface_count_map[0] == 0);
        CHECK(r.channels[0].echoes.empty());
        CHECK(r.truth.surface_count_map[1] == 1);
    }
}

TEST_CASE("scene validation", "[scenes]") {
    SystemConfig cfg = short_range(4096);
    CHECK_THROWS_AS(realize_scene(SceneSpec::plane(9.0), cfg), SceneError);
    cfg.delta_min = 500;
    CHECK_THROWS_AS(realize_scene(SceneSpec::plane(1.0), cfg), SceneError);
    cfg.delta_min = 0;
    CHECK_THROWS_AS(realize_scene(SceneSpec::spinning_disk(Vec3(0, 0, 1), 0.1, 31.0, 1.0), cfg), SceneError);
    CHECK_THROWS_AS(realize_scene(SceneSpec::two_layer(1.0, 2.0, 0.0), cfg), SceneError);
    CHECK_THROWS_AS(realize_scene(SceneSpec::composite({}), cfg), SceneError);
}

TEST_CASE("seeds differ per pixel and are stable", "[scenes][property]") {
    const SystemConfig cfg = short_range(4096);
    SceneSpec s = SceneSpec::plane(1.0);
    s.grid = {2, 2, 0.0};
    s.master_seed = 5;
    const auto a = realize_scene(s, cfg), b = realize_scene(s, cfg);
    for (std::size_t p = 0; p < 4; ++p) REQUIRE(a.channels[p].echoes[0].jones == b.channels[p].echoes[0].jones);
    CHECK(a.channels[0].echoes[0].jones != a.channels[1].echoes[0].jones);

    // Growing the grid keeps the seeds of the pixels already there.
    SceneSpec big = s;
    big.grid = {3, 2, 0.0};
    const auto c = realize_scene(big, cfg);
    for (std::size_t p = 0; p < 4; ++p) REQUIRE(c.channels[p].echoes[0].jones == a.channels[p].echoes[0].jones);

    const auto tx = generate_tx({SchemeKind::FullWavefield, 1, 1.0}, 4096);
    std::vector<ChannelRealization> empty(4);
    const Frame f = acquire_frame(tx, empty, s.grid, cfg, {0.5, 9}, 1);
    CHECK_FALSE(f.rx[0] == f.rx[1]);
    CHECK(acquire_frame(tx, empty, s.grid, cfg, {0.5, 9}, 3).rx == f.rx);
    for (const auto& y : f.rx) CHECK(y.energy() / (2.0 * 4096) == Approx(0.25).epsilon(0.06));
}

TEST_CASE("internal reflections are appended to every pixel", "[scenes]") {
    SystemConfig cfg = short_range(4096);
    cfg.internal_reflection_delays = {2, 7};
    cfg.internal_reflection_amplitudes = {0.3, 0.1};
    SceneSpec s = SceneSpec::plane(1.0);
    s.grid = {2, 2, 0.01};
    const auto r = realize_scene(s, cfg);
    for (const auto& ch : r.channels) {
        REQUIRE(ch.echoes.size() == 3);
        REQUIRE(ch.echoes[1].delay == 2);
        REQUIRE(ch.echoes[2].delay == 7);
    }
}

TEST_CASE("noiseless plane is recovered by the generalized matched filter", "[scenes]") {
    const SystemConfig cfg = short_range(4096);
    SceneSpec s = SceneSpec::plane(1.0, 0.3);
    s.grid = {8, 8, 0.01};
    const auto r = realize_scene(s, cfg);
    const auto tx = generate_tx({SchemeKind::FullWavefield, 2, 1.0}, 4096);
    const Frame f = acquire_frame(tx, r.channels, s.grid, cfg, {0.0, 0});
    const MatchedFilter mf(tx, depth_to_delay(4.0, cfg));
    for (std::size_t p = 0; p < 64; ++p)
        REQUIRE(mf.run(f.rx[p], CorrelationKind::AllPairs).delta_star == r.truth.layers[p][0].delay);
}

TEST_CASE("ground truth matches a brute-force delay-Doppler scan", "[scenes][property]") {
    SystemConfig cfg = short_range(1024);
    const double bin = testing::bin_width(cfg);
    cfg.max_abs_velocity = doppler_to_velocity(2.5 * bin, cfg);
    SceneSpec s = SceneSpec::spinning_disk(Vec3(0, 0, 0.06), 0.02, 0.9 * cfg.max_abs_velocity, 1.0);
    s.grid = {5, 5, 0.1};
    s.speckle = SpeckleKind::UnitaryRotation;
    const auto r = realize_scene(s, cfg);
    const auto tx = testing::random_sequence(3, 1024);
    const Frame f = acquire_frame(tx, r.channels, s.grid, cfg, {0.0, 0});
    std::size_t checked = 0;
    for (std::size_t p = 0; p < 25; ++p) {
        if (r.truth.surface_count_map[p] == 0) continue;
        double best = -1.0;
        int best_d = -1;
        for (int k = -2; k <= 2; ++k) {
            DualPolSequence rot = f.rx[p];
            for (std::size_t n = 0; n < rot.size(); ++n)
                rot[n] *= std::polar(1.0, -k * bin * static_cast<double>(n) * cfg.symbol_period());
            for (int d = 1; d < 60; ++d) {
                double score = 0.0;
                for (int a = 0; a < 2; ++a)
                    for (int b = 0; b < 2; ++b)
                        score += std::norm(testing::brute_correlation(tx, rot, static_cast<std::size_t>(d), a, b));
                if (score > best) {
                    best = score;
                    best_d = d;
                }
            }
        }
        REQUIRE(best_d == r.truth.layers[p][0].delay);
        ++checked;
    }
    CHECK(checked > 5);
}

TEST_CASE("scene SNR uses the mean echo power", "[scenes]") {
    const SystemConfig cfg = short_range(4096);
    SceneSpec s = SceneSpec::two_layer(0.8, 1.1, 0.3);
    s.grid = {2, 2, 0.01};
    const auto r = realize_scene(s, cfg);
    CHECK(mean_echo_power(r.truth) == Approx(2.0 * (0.3 + 0.49)));
    // 2 * 0.79 * P / (2 sigma^2) = 10 at 10 dB.
    CHECK(scene_sigma(10.0, r.truth, 1.0) == Approx(std::sqrt(0.079)).epsilon(1e-12));
}
