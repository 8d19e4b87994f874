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

// Seeded randomness. The integer stream is std::mt19937_64, whose output
// sequence is fixed by the C++ standard. Distributions are implemented here
// rather than taken from <random>, because the standard leaves those
// implementation-defined.

#include <cmath>
#include <cstdint>
#include <random>
#include <utility>

#include "fwl/core.hpp"

namespace fwl {

/// Roles separate the independent random streams derived from one seed.
enum class SeedRole : std::uint64_t {
    Transmit = 1,
    Speckle = 2,
    Noise = 3,
    BatchSampling = 4,
    Cell = 5,
};

/// SplitMix64 finalizer.
inline constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// seed = mix64(mix64(mix64(master) ^ index) ^ role). Adding pixels never
/// changes the seeds of existing ones.
inline constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index,
                                           SeedRole role) noexcept {
    return mix64(mix64(mix64(master) ^ index) ^ static_cast<std::uint64_t>(role));
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t r;
        do r = engine_(); while (r >= limit);
        return r % n;
    }

    /// Standard normal via Box-Muller; the second value is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const auto [a, b] = box_muller();
        spare_ = b;
        has_spare_ = true;
        return a;
    }

    /// Circularly symmetric complex Gaussian with E|z|^2 = variance.
    cplx complex_normal(double variance = 1.0) {
        const auto [a, b] = box_muller();
        const double s = std::sqrt(0.5 * variance);
        return {s * a, s * b};
    }

private:
    std::pair<double, double> box_muller() {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double t = two_pi * u2;
        return {r * std::cos(t), r * std::sin(t)};
    }

    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace fwl
