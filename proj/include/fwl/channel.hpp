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

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "fwl/core.hpp"
#include "fwl/rng.hpp"

namespace fwl {

struct ChannelRealization {
    std::vector<EchoPath> echoes;
    NoiseModel noise;
};

enum class SpeckleKind { FullyScrambling, UnitaryRotation };

struct SpeckleModel {
    SpeckleKind kind = SpeckleKind::FullyScrambling;
    double mean_reflectance = 1.0;
    std::uint64_t seed = 0;
};

/// Symbol-domain forward model.
///
/// Y_n = sum_s J_s X_{n - delay_s} e^{j nu_s n T} + eta_n, where X_k = 0 for
/// k < 0 and eta is i.i.d. CN(0, sigma^2) per channel drawn from noise.seed.
/// With sigma == 0 no random numbers are drawn.
inline DualPolSequence apply_channel(const DualPolSequence& tx, const ChannelRealization& ch,
                                     const SystemConfig& cfg) {
    if (!(ch.noise.sigma >= 0.0) || !std::isfinite(ch.noise.sigma))
        throw ConfigError("noise sigma must be a finite nonnegative number");
    const std::size_t n = tx.size();
    for (const auto& e : ch.echoes)
        if (e.delay < 0 || static_cast<std::size_t>(e.delay) >= n)
            throw RangeError("echo delay " + std::to_string(e.delay) + " outside the frame");

    const double period = cfg.symbol_period();
    DualPolSequence rx(n);
    for (const auto& e : ch.echoes) {
        const auto d = static_cast<std::size_t>(e.delay);
        for (std::size_t i = d; i < n; ++i) {
            DualPol v = e.jones * tx[i - d];
            if (e.doppler != 0.0) v *= doppler_phasor(e.doppler, i, period);
            rx[i] += v;
        }
    }
    if (ch.noise.sigma > 0.0) {
        Rng rng(ch.noise.seed);
        const double var = ch.noise.sigma * ch.noise.sigma;
        for (auto& y : rx) {
            y(0) += rng.complex_normal(var);
            y(1) += rng.complex_normal(var);
        }
    }
    return rx;
}

/// Draws one Jones matrix from the speckle model, deterministic in model.seed.
///
/// FullyScrambling has four i.i.d. CN(0, r / 2) entries, so E||J||_F^2 = 2 r.
/// UnitaryRotation is a Haar-random unitary scaled by sqrt(r), so
/// ||J||_F^2 = 2 r for every draw.
inline JonesMatrix sample_jones(const SpeckleModel& model) {
    if (!(model.mean_reflectance >= 0.0)) throw ConfigError("mean_reflectance must be nonnegative");
    const double r = model.mean_reflectance;
    Rng rng(model.seed);
    JonesMatrix j;
    if (model.kind == SpeckleKind::FullyScrambling) {
        for (int c = 0; c < 2; ++c)
            for (int k = 0; k < 2; ++k) j(k, c) = rng.complex_normal(0.5 * r);
        return j;
    }
    // Haar measure on U(2): e^{j phi} [[a, b], [-conj(b), conj(a)]] with (a, b)
    // uniform on the unit 3-sphere and phi uniform.
    double g[4];
    double norm2 = 0.0;
    do {
        norm2 = 0.0;
        for (double& v : g) {
            v = rng.normal();
            norm2 += v * v;
        }
    } while (norm2 == 0.0);
    const double inv = 1.0 / std::sqrt(norm2);
    const cplx a(g[0] * inv, g[1] * inv);
    const cplx b(g[2] * inv, g[3] * inv);
    const cplx phase = std::polar(1.0, two_pi * rng.uniform());
    j << a, b, -std::conj(b), std::conj(a);
    return std::sqrt(r) * phase * j;
}

/// Appends one static echo per configured internal reflection delay with
/// Jones matrix amplitude * I.
inline ChannelRealization with_internal_reflections(ChannelRealization ch, const SystemConfig& cfg,
                                                    const std::vector<double>& amplitudes) {
    if (amplitudes.size() != cfg.internal_reflection_delays.size())
        throw ConfigError("internal reflection amplitudes do not match the configured delays");
    for (std::size_t i = 0; i < amplitudes.size(); ++i) {
        EchoPath e;
        e.delay = cfg.internal_reflection_delays[i];
        e.doppler = 0.0;
        e.jones = amplitudes[i] * JonesMatrix::Identity();
        ch.echoes.push_back(e);
    }
    return ch;
}

/// Overload using the amplitudes stored in the config.
inline ChannelRealization with_internal_reflections(ChannelRealization ch, const SystemConfig& cfg) {
    return with_internal_reflections(std::move(ch), cfg, cfg.internal_reflection_amplitudes);
}

/// Noise standard deviation for a given SNR.
///
/// SNR = sum_s ||J_s||_F^2 * power_per_pol / (2 sigma^2), i.e. total echo
/// power over total noise power summed over both channels. An infinite
/// snr_db gives sigma = 0.
inline double snr_to_sigma(double snr_db, const std::vector<EchoPath>& echoes, double power_per_pol) {
    if (echoes.empty()) throw ConfigError("SNR is undefined without echoes");
    if (std::isinf(snr_db) && snr_db > 0.0) return 0.0;
    if (std::isnan(snr_db)) throw ConfigError("snr_db is NaN");
    double signal = 0.0;
    for (const auto& e : echoes) signal += e.jones.squaredNorm();
    signal *= power_per_pol;
    return std::sqrt(signal / (2.0 * std::pow(10.0, snr_db / 10.0)));
}

}  // namespace fwl
