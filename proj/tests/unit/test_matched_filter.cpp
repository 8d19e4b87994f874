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

#include <algorithm>
#include <cmath>

#include "fwl/channel.hpp"
#include "fwl/modulation.hpp"
#include "fwl/reconstruction/matched_filter.hpp"
#include "support.hpp"

using namespace fwl;
using Catch::Approx;

namespace {

DualPolSequence echo(const DualPolSequence& tx, int delay, double nu, const JonesMatrix& j, const SystemConfig& cfg) {
    return testing::brute_echo(tx, delay, nu, j, cfg.symbol_period());
}

double median(std::vector<double> v) {
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2), v.end());
    return v[v.size() / 2];
}

}  // namespace

TEST_CASE("matched filter profiles match brute-force correlation", "[matched_filter]") {
    const SystemConfig cfg = testing::small_config(300);
    const auto tx = testing::random_sequence(1, 300);
    const auto rx = testing::random_sequence(2, 300);
    const auto naive = matched_filter_naive(tx, rx, 40).profile;
    const auto gen = matched_filter_generalized(tx, rx, 40).profile;
    REQUIRE(naive.size() == 41);
    for (std::size_t d = 0; d <= 40; ++d) {
        double want_naive = 0.0, want_gen = 0.0;
        for (int p = 0; p < 2; ++p)
            for (int q = 0; q < 2; ++q) {
                const double s = std::norm(testing::brute_correlation(tx, rx, d, p, q));
                want_gen += s;
                if (p == q) want_naive += s;
            }
        REQUIRE(naive[d] == Approx(want_naive).epsilon(1e-10));
        REQUIRE(gen[d] == Approx(want_gen).epsilon(1e-10));
    }
}

TEST_CASE("naive filter finds a co-polarized echo", "[matched_filter]") {
    const SystemConfig cfg = testing::small_config(2048);
    const auto tx = generate_tx({SchemeKind::FullWavefield, 3, 1.0}, 2048);
    const auto rx = echo(tx, 17, 0.0, JonesMatrix::Identity(), cfg);
    CHECK(matched_filter_naive(tx, rx, 100).delta_star == 17);
    CHECK(matched_filter_generalized(tx, rx, 100).delta_star == 17);
}

TEST_CASE("cross-polarized echo defeats the naive filter only", "[matched_filter]") {
    const SystemConfig cfg = testing::small_config(2048);
    const auto tx = generate_tx({SchemeKind::FullWavefield, 4, 1.0}, 2048);
    JonesMatrix swap = JonesMatrix::Zero();
    swap(0, 1) = 1.0;
    swap(1, 0) = 1.0;
    const auto rx = echo(tx, 17, 0.0, swap, cfg);
    const auto naive = matched_filter_naive(tx, rx, 100).profile;
    const auto gen = matched_filter_generalized(tx, rx, 100);
    // A co-polarized echo of the same power scores about N^2 per channel; the
    // naive score here stays at the level of the random off-peak lags.
    CHECK(naive[17] < 10.0 * median(naive));
    CHECK(naive[17] < 0.01 * gen.profile[17]);
    CHECK(gen.delta_star == 17);
}

TEST_CASE("generalized score dominates naive score", "[matched_filter][property]") {
    const SystemConfig cfg = testing::small_config(1024);
    for (std::uint64_t s = 0; s < 20; ++s) {
        const auto tx = testing::random_sequence(s, 1024);
        const int d = static_cast<int>(5 + s * 3);
        const auto rx = echo(tx, d, 0.0, testing::random_jones(s + 100), cfg);
        const auto naive = matched_filter_naive(tx, rx, 80).profile;
        const auto gen = matched_filter_generalized(tx, rx, 80).profile;
        for (std::size_t k = 0; k < naive.size(); ++k) REQUIRE(gen[k] >= naive[k]);
    }
}

TEST_CASE("matched filter scores scale quadratically", "[matched_filter][property]") {
    const auto tx = testing::random_sequence(7, 512);
    const auto rx = testing::random_sequence(8, 512);
    for (double a : {0.5, 3.0, 17.0}) {
        DualPolSequence scaled = rx;
        for (auto& y : scaled) y *= a;
        for (auto kind : {CorrelationKind::SameChannel, CorrelationKind::AllPairs}) {
            const MatchedFilter mf(tx, 60);
            const auto base = mf.run(rx, kind), big = mf.run(scaled, kind);
            REQUIRE(base.delta_star == big.delta_star);
            for (std::size_t d = 0; d < base.profile.size(); ++d)
                REQUIRE(big.profile[d] == Approx(a * a * base.profile[d]).epsilon(1e-10));
        }
    }
}

TEST_CASE("pure noise rarely exceeds five times the median", "[matched_filter]") {
    // Under the null each naive score is a sum of two i.i.d. exponentials
    // (Gamma(2, s)); P(X > 5 median) is computable in closed form.
    const double m = 1.678346990016661;  // median of Gamma(2, 1)
    const double p = std::exp(-5.0 * m) * (1.0 + 5.0 * m);
    std::size_t hits = 0, trials = 0;
    for (std::uint64_t s = 0; s < 50; ++s) {
        const auto tx = testing::random_sequence(1000 + s, 1024);
        const auto rx = testing::random_sequence(2000 + s, 1024);
        const auto prof = matched_filter_naive(tx, rx, 200).profile;
        const double med = median(prof);
        for (double v : prof) hits += v > 5.0 * med;
        trials += prof.size();
    }
    const double expected = p * static_cast<double>(trials);
    CHECK(static_cast<double>(hits) < expected + 5.0 * std::sqrt(expected) + 5.0);
}

TEST_CASE("Doppler shift attenuates the peak like a Dirichlet kernel", "[matched_filter]") {
    const SystemConfig cfg = testing::small_config(2048);
    const auto tx = generate_tx({SchemeKind::DualPolPhaseOnly, 5, 1.0}, 2048);
    const int d = 30;
    const double t = cfg.symbol_period();
    for (double bins : {0.5, 1.0, 3.0, 7.5}) {
        const double nu = bins * testing::bin_width(cfg);
        const auto still = matched_filter_naive(tx, echo(tx, d, 0.0, JonesMatrix::Identity(), cfg), 60).profile;
        const auto moving = matched_filter_naive(tx, echo(tx, d, nu, JonesMatrix::Identity(), cfg), 60).profile;
        // Constant-modulus symbols make the peak an exact geometric sum.
        const double m = static_cast<double>(2048 - d);
        const double gain = std::sin(m * nu * t / 2.0) / (m * std::sin(nu * t / 2.0));
        CHECK(moving[d] / still[d] == Approx(gain * gain).margin(1e-9));
        CHECK(moving[d] < still[d]);
    }
}

TEST_CASE("matched filter ties and shapes", "[matched_filter]") {
    CHECK(MatchedFilter::argmax_lag({1.0, 3.0, 3.0, 2.0}) == 1);
    const auto tx = testing::random_sequence(9, 64);
    CHECK_THROWS_AS(MatchedFilter(tx, 64), ShapeError);
    CHECK_THROWS_AS(matched_filter_naive(DualPolSequence{}, tx, 3), ShapeError);
    CHECK_THROWS_AS(MatchedFilter(tx, 10).profile(testing::random_sequence(1, 63), CorrelationKind::AllPairs),
                    ShapeError);
}
