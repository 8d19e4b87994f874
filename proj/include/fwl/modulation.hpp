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
#include <cstdint>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "fwl/core.hpp"
#include "fwl/rng.hpp"

namespace fwl {

/// Transmit modulation. FullWavefield modulates amplitude and phase on both
/// polarizations; the other three are the ablation schemes, each emulated
/// with the same transmitter plus a receiver-side projection.
enum class SchemeKind {
    FullWavefield,
    DualPolPhaseOnly,
    DualPolAmplitudeOnly,
    SinglePolPhaseAmplitude,
};

inline constexpr SchemeKind all_schemes[] = {
    SchemeKind::FullWavefield,
    SchemeKind::DualPolPhaseOnly,
    SchemeKind::DualPolAmplitudeOnly,
    SchemeKind::SinglePolPhaseAmplitude,
};

inline std::string_view to_string(SchemeKind k) {
    switch (k) {
        case SchemeKind::FullWavefield: return "full_wavefield";
        case SchemeKind::DualPolPhaseOnly: return "dual_pol_phase_only";
        case SchemeKind::DualPolAmplitudeOnly: return "dual_pol_amplitude_only";
        case SchemeKind::SinglePolPhaseAmplitude: return "single_pol_phase_amplitude";
    }
    return "unknown";
}

inline SchemeKind scheme_from_string(std::string_view s) {
    for (SchemeKind k : all_schemes)
        if (to_string(k) == s) return k;
    throw ConfigError("unknown modulation scheme '" + std::string(s) + "'");
}

struct ModulationScheme {
    SchemeKind kind = SchemeKind::FullWavefield;
    std::uint64_t seed = 0;
    double power_per_pol = 1.0;  // target mean |X[p]|^2 on a dual-pol scheme
};

/// Fixed carrier phase used by amplitude-only modulation: u = e^{j pi/4}.
inline const cplx amplitude_only_direction = std::polar(1.0, std::numbers::pi / 4.0);

/// Transmit sequence of length n, deterministic in scheme.seed.
///
/// All four kinds carry the same total mean power 2 * power_per_pol:
/// - FullWavefield: i.i.d. CN(0, P) per channel.
/// - DualPolPhaseOnly: amplitude sqrt(P), phase uniform on [0, 2 pi).
/// - DualPolAmplitudeOnly: real normal amplitudes along u, rescaled so each
///   channel's empirical mean power is exactly P. Negative amplitudes are kept.
/// - SinglePolPhaseAmplitude: CN(0, 2P) on channel 0, zeros on channel 1.
inline DualPolSequence generate_tx(const ModulationScheme& scheme, std::size_t n) {
    if (n == 0) throw ConfigError("generate_tx: empty sequence requested");
    if (!(scheme.power_per_pol >= 0.0)) throw ConfigError("power_per_pol must be nonnegative");

    const double p = scheme.power_per_pol;
    Rng rng(scheme.seed);
    DualPolSequence tx(n);

    switch (scheme.kind) {
        case SchemeKind::FullWavefield:
            for (auto& x : tx) {
                x(0) = rng.complex_normal(p);
                x(1) = rng.complex_normal(p);
            }
            break;
        case SchemeKind::DualPolPhaseOnly: {
            const double a = std::sqrt(p);
            for (auto& x : tx) {
                x(0) = std::polar(a, two_pi * rng.uniform());
                x(1) = std::polar(a, two_pi * rng.uniform());
            }
            break;
        }
        case SchemeKind::DualPolAmplitudeOnly: {
            std::vector<double> a0(n), a1(n);
            double e0 = 0.0, e1 = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                a0[i] = rng.normal();
                a1[i] = rng.normal();
                e0 += a0[i] * a0[i];
                e1 += a1[i] * a1[i];
            }
            const double s0 = e0 > 0.0 ? std::sqrt(p * static_cast<double>(n) / e0) : 0.0;
            const double s1 = e1 > 0.0 ? std::sqrt(p * static_cast<double>(n) / e1) : 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                tx[i](0) = s0 * a0[i] * amplitude_only_direction;
                tx[i](1) = s1 * a1[i] * amplitude_only_direction;
            }
            break;
        }
        case SchemeKind::SinglePolPhaseAmplitude:
            for (auto& x : tx) {
                x(0) = rng.complex_normal(2.0 * p);
                x(1) = 0.0;
            }
            break;
    }
    return tx;
}

/// Receiver-side information discarding for the ablation schemes.
///
/// Phase-only normalizes each nonzero symbol to unit modulus. Amplitude-only
/// keeps only the component along the transmit direction u, Re(conj(u) y) u.
/// Single-polarization zeroes channel 1. Full wavefield is the identity.
inline DualPolSequence receiver_projection(const ModulationScheme& scheme, const DualPolSequence& rx) {
    DualPolSequence out = rx;
    switch (scheme.kind) {
        case SchemeKind::FullWavefield:
            break;
        case SchemeKind::DualPolPhaseOnly:
            for (auto& y : out)
                for (int p = 0; p < 2; ++p) {
                    const double m = std::abs(y(p));
                    if (m > 0.0) y(p) /= m;
                }
            break;
        case SchemeKind::DualPolAmplitudeOnly: {
            const cplx u = amplitude_only_direction;
            for (auto& y : out)
                for (int p = 0; p < 2; ++p) y(p) = (std::conj(u) * y(p)).real() * u;
            break;
        }
        case SchemeKind::SinglePolPhaseAmplitude:
            for (auto& y : out) y(1) = 0.0;
            break;
    }
    return out;
}

enum class PulseKind { Rect, RootRaisedCosine };

struct PulseShape {
    PulseKind kind = PulseKind::Rect;
    double rolloff = 0.25;  // root-raised-cosine only, in [0, 1]
    int span = 16;          // root-raised-cosine support in symbols
    int oversampling = 4;   // samples per symbol

    void validate() const {
        if (oversampling < 2) throw ConfigError("pulse oversampling must be >= 2");
        if (kind == PulseKind::RootRaisedCosine) {
            if (!(rolloff >= 0.0 && rolloff <= 1.0)) throw ConfigError("rolloff must lie in [0, 1]");
            if (span < 1) throw ConfigError("pulse span must be >= 1 symbol");
        }
    }
};

/// Root-raised-cosine impulse response at t (in symbol periods), peak
/// 1 - beta + 4 beta / pi; beta = 0 gives sinc(t).
inline double root_raised_cosine(double t, double beta) {
    using std::numbers::pi;
    if (t == 0.0) return 1.0 - beta + 4.0 * beta / pi;
    if (beta > 0.0 && std::abs(std::abs(t) - 1.0 / (4.0 * beta)) < 1e-12) {
        return beta / std::sqrt(2.0) *
               ((1.0 + 2.0 / pi) * std::sin(pi / (4.0 * beta)) + (1.0 - 2.0 / pi) * std::cos(pi / (4.0 * beta)));
    }
    const double num = std::sin(pi * t * (1.0 - beta)) + 4.0 * beta * t * std::cos(pi * t * (1.0 + beta));
    const double den = pi * t * (1.0 - (4.0 * beta * t) * (4.0 * beta * t));
    return num / den;
}

/// Sample offset (in symbol periods) of sample m within the symbol-centred
/// time axis: sample m of a waveform sits at t = (m - (os - 1) / 2) / os,
/// so the samples of symbol n are centred on t = n.
inline double sample_time_in_symbols(std::size_t m, int oversampling) {
    return (static_cast<double>(m) - 0.5 * (oversampling - 1)) / oversampling;
}

/// Sampled pulse taps on the symbol-centred time grid. Tap k sits at
/// t = k_offset(k) = (k - first) / os - (os - 1) / (2 os), with `first`
/// chosen so the taps cover |t| <= span / 2. Rect gives `os` ones. Taps are
/// scaled so their squared sum equals `os`, the rect's energy per symbol.
struct PulseTaps {
    std::vector<double> taps;
    long first = 0;  // sample offset of tap 0 relative to the symbol's first sample
};

inline PulseTaps pulse_taps(const PulseShape& shape) {
    shape.validate();
    const int os = shape.oversampling;
    PulseTaps out;
    if (shape.kind == PulseKind::Rect) {
        out.taps.assign(static_cast<std::size_t>(os), 1.0);
        return out;
    }
    const double half = 0.5 * shape.span;
    const double centre = 0.5 * (os - 1);
    const long lo = static_cast<long>(std::ceil(-half * os + centre));
    const long hi = static_cast<long>(std::floor(half * os + centre));
    out.first = lo;
    double energy = 0.0;
    for (long k = lo; k <= hi; ++k) {
        const double v = root_raised_cosine((static_cast<double>(k) - centre) / os, shape.rolloff);
        out.taps.push_back(v);
        energy += v * v;
    }
    const double gain = std::sqrt(static_cast<double>(os) / energy);
    for (double& v : out.taps) v *= gain;
    return out;
}

/// Oversampled waveform, n * oversampling samples per channel. Each symbol
/// contributes one pulse starting at sample i * os + first; the rect pulse
/// holds the symbol for exactly `oversampling` samples.
inline DualPolSequence pulse_shape(const DualPolSequence& tx, const PulseShape& shape) {
    const PulseTaps h = pulse_taps(shape);
    const long os = shape.oversampling;
    const long total = static_cast<long>(tx.size()) * os;
    DualPolSequence out(static_cast<std::size_t>(total));
    const long ntaps = static_cast<long>(h.taps.size());
    for (std::size_t i = 0; i < tx.size(); ++i) {
        const long base = static_cast<long>(i) * os + h.first;
        for (long k = 0; k < ntaps; ++k) {
            const long m = base + k;
            if (m < 0 || m >= total) continue;
            out[static_cast<std::size_t>(m)] += h.taps[static_cast<std::size_t>(k)] * tx[i];
        }
    }
    return out;
}

/// Inverse of the rect hold: samples each symbol at its centre sample.
inline DualPolSequence sample_symbol_centres(const DualPolSequence& wave, int oversampling) {
    if (oversampling < 1 || wave.size() % static_cast<std::size_t>(oversampling) != 0)
        throw ShapeError("waveform length is not a multiple of the oversampling factor");
    const std::size_t n = wave.size() / static_cast<std::size_t>(oversampling);
    DualPolSequence out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = wave[i * oversampling + oversampling / 2];
    return out;
}

}  // namespace fwl
