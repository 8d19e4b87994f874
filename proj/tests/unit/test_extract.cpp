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

#include "fwl/reconstruction/extract.hpp"
#include "fwl/reconstruction/solver.hpp"
#include "support.hpp"

using namespace fwl;
using Catch::Approx;

namespace {

BinGrid grid_0_to(int max_delay, std::vector<double> dopplers = {0.0}) {
    BinGrid g;
    for (int d = 0; d <= max_delay; ++d) g.delays.push_back(d);
    g.dopplers = std::move(dopplers);
    return g;
}

}  // namespace

TEST_CASE("one-hot field", "[extract]") {
    const SystemConfig cfg;
    JonesField f(grid_0_to(200));
    f.at(100, 0) = JonesMatrix::Identity();
    const Extraction e = extract(f, cfg);
    CHECK(e.delta_star == 100);
    CHECK(e.nu_star == 0.0);
    CHECK(e.norm == Approx(std::sqrt(2.0)));
    CHECK(e.depth_m == delay_to_depth(100, cfg));
    CHECK(e.velocity_mps == 0.0);
    CHECK(e.secondary.empty());
}

TEST_CASE("internal reflections and short delays are masked", "[extract]") {
    SystemConfig cfg;
    cfg.delta_min = 3;
    cfg.internal_reflection_delays = {7};
    JonesField f(grid_0_to(20));
    f.at(7, 0) = 0.9 / std::sqrt(2.0) * JonesMatrix::Identity();
    f.at(2, 0) = 5.0 * JonesMatrix::Identity();
    f.at(3, 0) = 4.0 * JonesMatrix::Identity();
    f.at(12, 0) = 0.5 / std::sqrt(2.0) * JonesMatrix::Identity();
    const Extraction e = extract(f, cfg);
    CHECK(e.delta_star == 12);
    CHECK(e.norm == Approx(0.5));

    JonesField masked(grid_0_to(3));
    masked.at(1, 0) = JonesMatrix::Identity();
    CHECK_THROWS_AS(extract(masked, cfg), NoSurfaceError);
}

TEST_CASE("ranking ties", "[extract]") {
    const SystemConfig cfg;
    JonesField f(grid_0_to(30, {-2.0, -1.0, 0.0, 1.0, 2.0}));
    const JonesMatrix j = JonesMatrix::Identity();
    f.at(20, 0) = j;  // nu = -2
    f.at(20, 3) = j;  // nu = +1
    f.at(20, 1) = j;  // nu = -1
    f.at(25, 2) = j;
    const Extraction e = extract(f, cfg, 4);
    const auto s = e.surfaces();
    REQUIRE(s.size() == 4);
    CHECK(s[0].delta == 20);
    CHECK(s[0].nu == -1.0);
    CHECK(s[1].nu == 1.0);
    CHECK(s[2].nu == -2.0);
    CHECK(s[3].delta == 25);
    CHECK_THROWS_AS(extract(f, cfg, 0), ConfigError);
}

TEST_CASE("velocity follows the Doppler bin", "[extract]") {
    SystemConfig cfg;
    const double nu = two_pi * 1e6;
    JonesField f(grid_0_to(10, {-nu, 0.0, nu}));
    f.at(4, 2) = JonesMatrix::Identity();
    CHECK(extract(f, cfg).velocity_mps == Approx(1.55).epsilon(1e-12));
}

TEST_CASE("two echoes give both delays with k = 2", "[extract]") {
    const SystemConfig cfg = testing::small_config(2048);
    SolverParams p;
    p.static_scene = true;
    p.lambda_sparse = 0.1;
    p.max_depth = delay_to_depth(40, cfg) + 1e-9;
    p.stage2_iters = 0;
    p.threads = 1;
    const auto tx = testing::random_sequence(1, 2048);
    auto rx = testing::brute_echo(tx, 12, 0.0, 0.3 * JonesMatrix::Identity(), cfg.symbol_period());
    const auto back = testing::brute_echo(tx, 27, 0.0, testing::random_jones(2, 0.35), cfg.symbol_period());
    for (std::size_t n = 0; n < rx.size(); ++n) rx[n] += back[n];
    Frame frame;
    frame.height = frame.width = 1;
    frame.rx = {rx};
    const Extraction e = extract(solve_stage1(tx, frame, cfg, p).pixels[0], cfg, 2);
    std::vector<int> got{e.delta_star, e.secondary.at(0).delta};
    std::sort(got.begin(), got.end());
    CHECK(got == std::vector<int>{12, 27});
}

TEST_CASE("profile extraction masks like field extraction", "[extract]") {
    SystemConfig cfg;
    cfg.delta_min = 2;
    cfg.internal_reflection_delays = {5};
    const std::vector<double> profile{9, 9, 9, 1, 2, 8, 3, 2.5};
    const Extraction e = extract_profile(profile, cfg, 3);
    CHECK(e.delta_star == 6);
    CHECK(e.secondary.at(0).delta == 7);
    CHECK(e.secondary.at(1).delta == 4);
    CHECK_THROWS_AS(extract_profile({1.0, 2.0}, cfg), NoSurfaceError);
}

TEST_CASE("extraction of a map keeps pixel order", "[extract]") {
    const SystemConfig cfg;
    FieldMap m;
    m.height = 1;
    m.width = 3;
    for (int d : {4, 9, 2}) {
        JonesField f(grid_0_to(10));
        f.at(static_cast<std::size_t>(d), 0) = JonesMatrix::Identity();
        m.pixels.push_back(f);
    }
    const auto ex = extract_map(m, cfg);
    CHECK(ex[0].delta_star == 4);
    CHECK(ex[1].delta_star == 9);
    CHECK(ex[2].delta_star == 2);
}
