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

#include <cmath>
#include <cstdint>
#include <random>

#include "fwl/core.hpp"

using namespace fwl;
using Catch::Approx;

namespace {

SystemConfig at_rate(double rate, std::size_t n) {
    SystemConfig c;
    c.symbol_rate = rate;
    c.n_symbols = n;
    c.max_range = static_cast<double>(n) * c.depth_resolution();
    return c;
}

}  // namespace

TEST_CASE("delay_to_depth matches the stated resolution and range", "[core]") {
    const SystemConfig cfg;
    CHECK(delay_to_depth(1, cfg) == Approx(299792458.0 / 148e9).epsilon(1e-15));
    // The quoted 2.0257 mm is c / (2 * 74 GHz) = 2.02562 mm rounded up in the last digit.
    CHECK(delay_to_depth(1, cfg) == Approx(2.0257e-3).margin(1e-7));
    CHECK(delay_to_depth(0, cfg) == 0.0);
    CHECK(delay_to_depth(65536, cfg) == Approx(132.8).margin(0.05));
    CHECK_THROWS_AS(delay_to_depth(-1, cfg), RangeError);
}

TEST_CASE("depth_to_delay floors the round-trip time", "[core]") {
    const SystemConfig cfg;
    CHECK(depth_to_delay(2.0257e-3, cfg) == 1);
    CHECK(depth_to_delay(0.0, cfg) == 0);
    // floor(2 * 1 m * 74e9 / c) in exact integer arithmetic.
    const std::int64_t exact = std::int64_t{148'000'000'000} / std::int64_t{299'792'458};
    CHECK(exact == 493);
    CHECK(depth_to_delay(1.0, cfg) == exact);
    CHECK_THROWS_AS(depth_to_delay(-1e-3, cfg), RangeError);
    CHECK_THROWS_AS(depth_to_delay(cfg.max_range + 1.0, cfg), RangeError);
}

TEST_CASE("depth_to_delay agrees with exact rational arithmetic on whole millimetres", "[core][property]") {
    const SystemConfig cfg;
    for (std::int64_t mm = 0; mm <= 130'000; mm += 7) {
        // floor(2 * mm / 1000 * 74e9 / c) = floor(148e6 * mm / 299792458)
        const std::int64_t want = (std::int64_t{148'000'000} * mm) / std::int64_t{299'792'458};
        REQUIRE(depth_to_delay(static_cast<double>(mm) / 1000.0, cfg) == want);
    }
}

TEST_CASE("delay round trip holds for every delay in range", "[core][property]") {
    for (double rate : {74e9, 4.096e9, 1e9, 37.5e9}) {
        const SystemConfig cfg = at_rate(rate, 65536);
        for (int d = 0; d < 65536; ++d) REQUIRE(depth_to_delay(delay_to_depth(d, cfg), cfg) == d);
    }
}

TEST_CASE("depth quantization error stays below one delay step", "[core][property]") {
    const SystemConfig cfg;
    std::mt19937_64 g(11);
    std::uniform_real_distribution<double> u(0.0, cfg.max_range);
    const double step = speed_of_light / (2.0 * cfg.symbol_rate);
    for (int i = 0; i < 100000; ++i) {
        const double d = u(g);
        const double err = std::abs(delay_to_depth(depth_to_delay(d, cfg), cfg) - d);
        REQUIRE(err < step);
    }
}

TEST_CASE("Doppler to velocity conversion", "[core]") {
    SystemConfig cfg;
    CHECK(doppler_to_velocity(0.0, cfg) == 0.0);
    CHECK(doppler_to_velocity(two_pi * 1e6, cfg) == Approx(1.55).epsilon(1e-12));
    CHECK(doppler_to_velocity(velocity_to_doppler(25.0, cfg), cfg) == Approx(25.0).epsilon(1e-14));

    cfg.velocity_convention = VelocityConvention::RoundTrip;
    CHECK(doppler_to_velocity(two_pi * 1e6, cfg) == Approx(0.775).epsilon(1e-12));
    CHECK(doppler_to_velocity(velocity_to_doppler(25.0, cfg), cfg) == Approx(25.0).epsilon(1e-14));
}

TEST_CASE("Doppler to velocity is linear", "[core][property]") {
    const SystemConfig cfg;
    std::mt19937_64 g(5);
    std::uniform_real_distribution<double> u(-1e9, 1e9);
    for (int i = 0; i < 1000; ++i) {
        const double nu = u(g), a = u(g) * 1e-9;
        REQUIRE(doppler_to_velocity(a * nu, cfg) == Approx(a * doppler_to_velocity(nu, cfg)).epsilon(1e-12));
    }
}

TEST_CASE("Doppler grid", "[core]") {
    SystemConfig cfg;
    SECTION("static limit") {
        cfg.max_abs_velocity = 0.0;
        CHECK(doppler_bin_grid(cfg) == std::vector<double>{0.0});
    }
    SECTION("exposure-limited spacing at 1 us") {
        cfg.n_symbols = 74000;
        CHECK(doppler_bin_spacing(cfg) == Approx(two_pi * 1e6).epsilon(1e-12));
        CHECK(doppler_to_velocity(doppler_bin_spacing(cfg), cfg) == Approx(1.55).epsilon(1e-12));
    }
    SECTION("30 m/s at 1 us gives 39 bins") {
        cfg.n_symbols = 74000;
        const auto grid = doppler_bin_grid(cfg);
        // Enumerate every multiple of the spacing inside the velocity bound.
        const double spacing = two_pi / (static_cast<double>(cfg.n_symbols) / cfg.symbol_rate);
        const double nu_max = 30.0 * two_pi / cfg.carrier_wavelength;
        int count = 0;
        for (int k = -1000; k <= 1000; ++k) count += std::abs(k * spacing) <= nu_max;
        CHECK(count == 39);
        CHECK(grid.size() == 39);
        CHECK(grid.front() == Approx(-19 * spacing));
    }
    SECTION("n_symbols < 2 is rejected") {
        cfg.n_symbols = 1;
        cfg.max_range = 0.001;
        CHECK_THROWS_AS(doppler_bin_grid(cfg), ConfigError);
    }
}

TEST_CASE("Doppler grid is symmetric, increasing and holds one zero", "[core][property]") {
    for (std::size_t n : {1024u, 4096u, 9250u, 74000u, 65536u})
        for (double vmax : {0.5, 3.0, 30.0, 100.0})
            for (std::size_t count : {0u, 7u, 8u}) {
                SystemConfig cfg = at_rate(74e9, n);
                cfg.max_abs_velocity = vmax;
                cfg.doppler_bin_count = count;
                const auto g = doppler_bin_grid(cfg);
                int zeros = 0;
                for (std::size_t i = 0; i < g.size(); ++i) {
                    zeros += g[i] == 0.0;
                    REQUIRE(g[i] == -g[g.size() - 1 - i]);
                    if (i > 0) REQUIRE(g[i] > g[i - 1]);
                }
                REQUIRE(zeros == 1);
            }
}

TEST_CASE("SystemConfig validation", "[core]") {
    SystemConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    SystemConfig bad = cfg;
    bad.symbol_rate = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.carrier_wavelength = -1.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.n_symbols = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.n_symbols = 4096;  // 8.3 m unambiguous range < 130 m
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.delta_min = -1;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.delta_min = static_cast<int>(cfg.n_symbols);
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.internal_reflection_delays = {2, 7};
    bad.internal_reflection_amplitudes = {0.3};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("Doppler phasor is exactly one at zero Doppler and unit modulus otherwise", "[core]") {
    CHECK(doppler_phasor(0.0, 12345, 1e-9) == cplx(1.0, 0.0));
    for (std::size_t n = 0; n < 1000; ++n) REQUIRE(std::abs(doppler_phasor(1e7, n, 1e-9)) == Approx(1.0));
}
