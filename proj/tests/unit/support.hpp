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

// Reference implementations used as test oracles. They are written for
// clarity, share no code with the library beyond its data types, and are
// only fast enough for small instances.

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "fwl/core.hpp"
#include "fwl/reconstruction/field.hpp"

namespace fwl::testing {

inline DualPolSequence random_sequence(std::uint64_t seed, std::size_t n, double scale = 1.0) {
    std::mt19937_64 g(seed);
    std::normal_distribution<double> d(0.0, std::sqrt(0.5) * scale);
    DualPolSequence s(n);
    for (auto& x : s) x = DualPol(cplx(d(g), d(g)), cplx(d(g), d(g)));
    return s;
}

inline JonesMatrix random_jones(std::uint64_t seed, double scale = 1.0) {
    std::mt19937_64 g(seed);
    std::normal_distribution<double> d(0.0, scale);
    JonesMatrix j;
    for (int k = 0; k < 4; ++k) j(k / 2, k % 2) = cplx(d(g), d(g));
    return j;
}

/// sum_n conj(tx[n - lag][p]) rx[n][q] over the overlap.
inline cplx brute_correlation(const DualPolSequence& tx, const DualPolSequence& rx, std::size_t lag, int p, int q) {
    cplx acc = 0.0;
    for (std::size_t n = lag; n < rx.size(); ++n) acc += std::conj(tx[n - lag](p)) * rx[n](q);
    return acc;
}

/// Single echo applied by a plain loop: J X_{n - d} exp(j nu n T).
inline DualPolSequence brute_echo(const DualPolSequence& tx, int delay, double nu, const JonesMatrix& j,
                                  double period) {
    DualPolSequence out(tx.size());
    for (std::size_t n = static_cast<std::size_t>(delay); n < tx.size(); ++n) {
        const double phase = nu * static_cast<double>(n) * period;
        out[n] = j * tx[n - static_cast<std::size_t>(delay)] * std::complex<double>(std::cos(phase), std::sin(phase));
    }
    return out;
}

inline double max_abs_diff(const DualPolSequence& a, const DualPolSequence& b) {
    double m = 0.0;
    for (std::size_t n = 0; n < a.size(); ++n) m = std::max(m, (a[n] - b[n]).cwiseAbs().maxCoeff());
    return m;
}

inline double relative_error(const DualPolSequence& a, const DualPolSequence& ref) {
    double num = 0.0, den = 0.0;
    for (std::size_t n = 0; n < a.size(); ++n) {
        num += (a[n] - ref[n]).squaredNorm();
        den += ref[n].squaredNorm();
    }
    return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

/// Small configuration whose unambiguous range matches n symbols.
inline SystemConfig small_config(std::size_t n) {
    SystemConfig cfg;
    cfg.n_symbols = n;
    cfg.max_range = static_cast<double>(n) * cfg.depth_resolution();
    return cfg;
}

/// Exposure-limited Doppler bin width for a configuration.
inline double bin_width(const SystemConfig& cfg) {
    return 2.0 * std::numbers::pi * cfg.symbol_rate / static_cast<double>(cfg.n_symbols);
}

/// A random per-pixel problem: transmit sequence, grid, a sparse true field
/// and its noiseless received sequence built by brute_echo.
struct Instance {
    SystemConfig cfg;
    DualPolSequence tx;
    BinGrid grid;
    JonesField truth;
    DualPolSequence rx;
};

inline Instance random_instance(std::uint64_t seed, std::size_t n, int max_delay, int doppler_half,
                                std::size_t echoes) {
    Instance in;
    in.cfg = small_config(n);
    in.tx = random_sequence(seed, n);
    for (int d = 1; d <= max_delay; ++d) in.grid.delays.push_back(d);
    in.grid.dopplers.clear();
    for (int k = -doppler_half; k <= doppler_half; ++k) in.grid.dopplers.push_back(k * bin_width(in.cfg));
    in.truth = JonesField(in.grid);
    in.rx = DualPolSequence(n);
    std::mt19937_64 g(seed ^ 0x5eedULL);
    std::uniform_int_distribution<std::size_t> pick_d(0, in.grid.delay_count() - 1), pick_k(0, in.grid.doppler_count() - 1);
    for (std::size_t e = 0; e < echoes; ++e) {
        const std::size_t d = pick_d(g), k = pick_k(g);
        const JonesMatrix j = random_jones(seed * 31 + e, 0.5);
        in.truth.at(d, k) += j;
        const auto part = brute_echo(in.tx, in.grid.delays[d], in.grid.dopplers[k], j, in.cfg.symbol_period());
        for (std::size_t i = 0; i < n; ++i) in.rx[i] += part[i];
    }
    return in;
}

/// (2 / N) ||sum_n Y_n X_{n-d}^H e^{-j nu n T}||_F per bin, from brute-force sums.
inline double shrink_bound(const DualPolSequence& tx, const DualPolSequence& rx, const BinGrid& g, const SystemConfig& cfg) {
    double worst = 0.0;
    for (std::size_t k = 0; k < g.doppler_count(); ++k) {
        DualPolSequence rot = rx;
        for (std::size_t n = 0; n < rot.size(); ++n)
            rot[n] *= std::polar(1.0, -g.dopplers[k] * static_cast<double>(n) * cfg.symbol_period());
        for (int d : g.delays) {
            double f2 = 0.0;
            for (int p = 0; p < 2; ++p)
                for (int q = 0; q < 2; ++q) f2 += std::norm(testing::brute_correlation(tx, rot, d, q, p));
            worst = std::max(worst, 2.0 / static_cast<double>(tx.size()) * std::sqrt(f2));
        }
    }
    return worst;
}

}  // namespace fwl::testing
