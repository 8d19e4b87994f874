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

// Continuous-time homodyne receiver model.
//
// Fields are oversampled analytic-baseband traces. Sample m of a trace with
// `oversampling` samples per symbol sits at t_m = (m - (os - 1) / 2) T / os,
// so the samples of symbol n are centred on t = nT, the instant the
// symbol-domain channel evaluates its Doppler phasor.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "fwl/channel.hpp"
#include "fwl/core.hpp"
#include "fwl/modulation.hpp"

namespace fwl {

/// Baseband traces omit the optical carrier. CarrierExplicit traces carry it
/// as a phase reference that is applied (modulo 2 pi) at detection time.
enum class FieldMode { Baseband, CarrierExplicit };

struct OpticalFieldTrace {
    DualPolSequence samples;
    double sample_rate = 0.0;  // Hz
    double p_tx = 1.0;         // W
    double p_lo = 1.0;         // W
    FieldMode mode = FieldMode::Baseband;
    double carrier_angular_frequency = 0.0;  // rad/s, CarrierExplicit only

    std::size_t size() const { return samples.size(); }
};

struct PhotocurrentPair {
    std::vector<double> in_phase[2];
    std::vector<double> quadrature[2];
    double sample_rate = 0.0;

    std::size_t size() const { return in_phase[0].size(); }
};

/// Incoherent (non-interfering) optical intensity on each photodiode of a
/// polarization's balanced pairs, one value per trace sample.
struct AmbientLight {
    std::vector<double> intensity[2];
};

/// Integer samples per symbol for a trace, or ResolutionError.
inline int samples_per_symbol(double sample_rate, const SystemConfig& cfg) {
    const double ratio = sample_rate / cfg.symbol_rate;
    const double r = std::round(ratio);
    if (r < 1.0 || std::abs(ratio - r) > 1e-9 * r)
        throw ResolutionError("sample rate is not an integer multiple of the symbol rate");
    return static_cast<int>(r);
}

/// Time of trace sample m.
inline double trace_time(std::size_t m, int oversampling, double symbol_period) {
    return sample_time_in_symbols(m, oversampling) * symbol_period;
}

/// Transmit field sqrt(P_TX) X(t) for a symbol sequence.
inline OpticalFieldTrace make_tx_field(const DualPolSequence& tx, const PulseShape& shape, const SystemConfig& cfg,
                                       double p_tx, double p_lo) {
    if (!(p_tx >= 0.0) || !(p_lo >= 0.0)) throw ConfigError("optical powers must be nonnegative");
    OpticalFieldTrace f;
    f.samples = pulse_shape(tx, shape);
    const double a = std::sqrt(p_tx);
    for (auto& s : f.samples) s *= a;
    f.sample_rate = cfg.symbol_rate * shape.oversampling;
    f.p_tx = p_tx;
    f.p_lo = p_lo;
    return f;
}

/// Local oscillator sqrt(P_LO) on both polarizations, matching `like` in
/// length, rate and mode.
inline OpticalFieldTrace make_lo_field(const OpticalFieldTrace& like) {
    OpticalFieldTrace lo = like;
    const double a = std::sqrt(like.p_lo);
    for (auto& s : lo.samples) s = DualPol(cplx(a, 0.0), cplx(a, 0.0));
    return lo;
}

/// E_RX(t) = J E_TX(t - tau) e^{j nu t}, tau = delay * T, zero-filled head.
inline OpticalFieldTrace propagate(const OpticalFieldTrace& txfield, const EchoPath& echo, const SystemConfig& cfg) {
    const int os = samples_per_symbol(txfield.sample_rate, cfg);
    if (echo.delay < 0) throw RangeError("echo delay must be nonnegative");
    const std::size_t shift = static_cast<std::size_t>(echo.delay) * static_cast<std::size_t>(os);
    const std::size_t n = txfield.size();

    OpticalFieldTrace out = txfield;
    out.samples = DualPolSequence(n);
    const bool identity = echo.jones == JonesMatrix::Identity();
    const double period = cfg.symbol_period();
    for (std::size_t m = shift; m < n; ++m) {
        DualPol v = txfield.samples[m - shift];
        if (!identity) v = echo.jones * v;
        if (echo.doppler != 0.0) v *= std::polar(1.0, echo.doppler * trace_time(m, os, period));
        out.samples[m] = v;
    }
    return out;
}

/// Sum of traces sharing rate and length.
inline OpticalFieldTrace superpose(const std::vector<OpticalFieldTrace>& parts) {
    if (parts.empty()) throw ShapeError("nothing to superpose");
    OpticalFieldTrace out = parts.front();
    for (std::size_t i = 1; i < parts.size(); ++i) {
        if (parts[i].size() != out.size() || parts[i].sample_rate != out.sample_rate)
            throw ShapeError("superposed traces differ in length or sample rate");
        for (std::size_t m = 0; m < out.size(); ++m) out.samples[m] += parts[i].samples[m];
    }
    return out;
}

namespace detail {

inline double photodiode(cplx a) { return std::norm(a); }

inline cplx carrier(const OpticalFieldTrace& f, std::size_t m) {
    if (f.mode == FieldMode::Baseband) return {1.0, 0.0};
    const double t = static_cast<double>(m) / f.sample_rate;
    return std::polar(1.0, std::fmod(f.carrier_angular_frequency * t, two_pi));
}

}  // namespace detail

/// Balanced detection per polarization.
///
/// In-phase: I = |E_RX + E_LO|^2 - |E_RX - E_LO|^2. Quadrature uses the LO
/// after a 90 degree shift, Q = |E_RX + j E_LO|^2 - |E_RX - j E_LO|^2, giving
/// I + jQ = 4 E_RX conj(E_LO). Ambient intensity is incoherent and reaches
/// both photodiodes of a pair equally; it is accumulated separately from
/// the interference intensity and cancels in the subtraction.
inline PhotocurrentPair balanced_detect(const OpticalFieldTrace& rx, const OpticalFieldTrace& lo,
                                        const AmbientLight* ambient = nullptr) {
    if (rx.size() != lo.size()) throw ShapeError("rx and lo traces differ in length");
    if (rx.sample_rate != lo.sample_rate) throw ShapeError("rx and lo traces differ in sample rate");
    if (rx.mode != lo.mode) throw ShapeError("rx and lo traces differ in field mode");
    const std::size_t n = rx.size();
    if (ambient)
        for (int p = 0; p < 2; ++p)
            if (ambient->intensity[p].size() != n) throw ShapeError("ambient intensity length mismatch");

    PhotocurrentPair pc;
    pc.sample_rate = rx.sample_rate;
    for (int p = 0; p < 2; ++p) {
        pc.in_phase[p].resize(n);
        pc.quadrature[p].resize(n);
    }

    if (rx.mode == FieldMode::CarrierExplicit && !(rx.carrier_angular_frequency > 0.0))
        throw ConfigError("carrier-explicit trace needs a carrier frequency");
    const cplx shift90(0.0, 1.0);
    for (std::size_t m = 0; m < n; ++m) {
        const cplx c = detail::carrier(rx, m);
        for (int p = 0; p < 2; ++p) {
            const cplx e_rx = rx.samples[m](p) * c;
            const cplx e_lo = lo.samples[m](p) * c;
            const double amb = ambient ? ambient->intensity[p][m] : 0.0;

            const double coh_i = detail::photodiode(e_rx + e_lo) - detail::photodiode(e_rx - e_lo);
            const double coh_q = detail::photodiode(e_rx + shift90 * e_lo) - detail::photodiode(e_rx - shift90 * e_lo);
            const double incoh = amb - amb;
            pc.in_phase[p][m] = coh_i + incoh;
            pc.quadrature[p][m] = coh_q + incoh;
        }
    }
    return pc;
}

/// Symbol integration: the mean of I + jQ over each symbol period.
///
/// The result is proportional to the symbol-domain received sequence with
/// constant demodulation_gain(P_TX, P_LO).
inline DualPolSequence demodulate(const PhotocurrentPair& pc, const SystemConfig& cfg) {
    const int os = samples_per_symbol(pc.sample_rate, cfg);
    const std::size_t n = pc.size();
    for (int p = 0; p < 2; ++p)
        if (pc.in_phase[p].size() != n || pc.quadrature[p].size() != n)
            throw ShapeError("photocurrent arrays differ in length");
    if (n % static_cast<std::size_t>(os) != 0)
        throw ShapeError("photocurrent length is not a whole number of symbols");

    DualPolSequence out(n / static_cast<std::size_t>(os));
    for (std::size_t k = 0; k < out.size(); ++k) {
        for (int p = 0; p < 2; ++p) {
            cplx acc = 0.0;
            for (int s = 0; s < os; ++s) {
                const std::size_t m = k * os + s;
                acc += cplx(pc.in_phase[p][m], pc.quadrature[p][m]);
            }
            out[k](p) = acc / static_cast<double>(os);
        }
    }
    return out;
}

/// 4 sqrt(P_TX P_LO).
inline double demodulation_gain(double p_tx, double p_lo) { return 4.0 * std::sqrt(p_tx * p_lo); }

/// Full oracle: pulse shaping, per-echo propagation, balanced detection and
/// symbol integration, rescaled by the demodulation gain so the result is
/// directly comparable with apply_channel. Noise is not modelled here.
inline DualPolSequence homodyne_receive(const DualPolSequence& tx, const ChannelRealization& ch,
                                        const SystemConfig& cfg, const PulseShape& shape = {}, double p_tx = 1e-3,
                                        double p_lo = 1e-3, const AmbientLight* ambient = nullptr) {
    const OpticalFieldTrace txf = make_tx_field(tx, shape, cfg, p_tx, p_lo);
    std::vector<OpticalFieldTrace> parts;
    parts.reserve(ch.echoes.size() + 1);
    for (const auto& e : ch.echoes) {
        if (static_cast<std::size_t>(e.delay) >= tx.size()) throw RangeError("echo delay outside the frame");
        parts.push_back(propagate(txf, e, cfg));
    }
    if (parts.empty()) {
        OpticalFieldTrace dark = txf;
        dark.samples = DualPolSequence(txf.size());
        parts.push_back(dark);
    }
    const OpticalFieldTrace rx = superpose(parts);
    const PhotocurrentPair pc = balanced_detect(rx, make_lo_field(rx), ambient);
    DualPolSequence y = demodulate(pc, cfg);
    const double g = demodulation_gain(p_tx, p_lo);
    for (auto& s : y) s /= g;
    return y;
}

}  // namespace fwl
