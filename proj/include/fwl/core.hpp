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

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "fwl/errors.hpp"

namespace fwl {

using cplx = std::complex<double>;

/// 2x2 complex polarization transform. Column p maps transmit channel p.
using JonesMatrix = Eigen::Matrix2cd;

/// One dual-polarization symbol (channel 0 = first polarization).
using DualPol = Eigen::Vector2cd;

inline constexpr double speed_of_light = 299'792'458.0;  // m/s, exact
inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// How Doppler frequency maps to radial velocity.
///
/// `Printed` uses v = nu * c / omega, `RoundTrip` includes the monostatic
/// factor of two, v = nu * c / (2 omega). Positive velocity (and positive
/// nu) always means the target approaches the sensor.
enum class VelocityConvention { Printed, RoundTrip };

struct SystemConfig {
    double symbol_rate = 74e9;             // Hz
    double carrier_wavelength = 1550e-9;   // m
    std::size_t n_symbols = 65536;
    int delta_min = 0;                     // samples; extraction keeps delta > delta_min
    double max_range = 130.0;              // m
    double max_abs_velocity = 30.0;        // m/s
    std::size_t doppler_bin_count = 0;     // 0 derives the count from the exposure
    std::vector<int> internal_reflection_delays;
    std::vector<double> internal_reflection_amplitudes;
    VelocityConvention velocity_convention = VelocityConvention::Printed;

    double symbol_period() const { return 1.0 / symbol_rate; }
    double carrier_angular_frequency() const { return two_pi * speed_of_light / carrier_wavelength; }
    /// Depth of one delay step, c / (2 symbol_rate).
    double depth_resolution() const { return speed_of_light / (2.0 * symbol_rate); }
    double exposure() const { return static_cast<double>(n_symbols) / symbol_rate; }

    void validate() const {
        if (!(symbol_rate > 0.0) || !std::isfinite(symbol_rate))
            throw ConfigError("symbol_rate must be positive");
        if (!(carrier_wavelength > 0.0) || !std::isfinite(carrier_wavelength))
            throw ConfigError("carrier_wavelength must be positive");
        if (n_symbols < 1) throw ConfigError("n_symbols must be at least 1");
        if (!(max_range >= 0.0)) throw ConfigError("max_range must be nonnegative");
        if (static_cast<double>(n_symbols) * depth_resolution() < max_range * (1.0 - 1e-12))
            throw ConfigError("max_range exceeds the unambiguous range of n_symbols");
        if (delta_min < 0 || static_cast<std::size_t>(delta_min) >= n_symbols)
            throw ConfigError("delta_min must lie in [0, n_symbols)");
        if (!(max_abs_velocity >= 0.0)) throw ConfigError("max_abs_velocity must be nonnegative");
        if (!internal_reflection_amplitudes.empty() &&
            internal_reflection_amplitudes.size() != internal_reflection_delays.size())
            throw ConfigError("internal_reflection_amplitudes must align with internal_reflection_delays");
        for (int d : internal_reflection_delays)
            if (d < 0 || static_cast<std::size_t>(d) >= n_symbols)
                throw ConfigError("internal reflection delay out of range");
    }
};

/// Delay in whole symbol periods to depth in meters.
inline double delay_to_depth(int delta, const SystemConfig& cfg) {
    if (delta < 0) throw RangeError("delay must be nonnegative");
    return static_cast<double>(delta) * speed_of_light / (2.0 * cfg.symbol_rate);
}

/// floor(2 d / c * symbol_rate), consistent with delay_to_depth so that
/// depth_to_delay(delay_to_depth(k)) == k for every k.
inline int depth_to_delay(double depth_m, const SystemConfig& cfg) {
    if (!(depth_m >= 0.0) || depth_m > cfg.max_range)
        throw RangeError("depth " + std::to_string(depth_m) + " m outside [0, max_range]");
    auto k = static_cast<long long>(std::floor(2.0 * depth_m / speed_of_light * cfg.symbol_rate));
    while (k > 0 && delay_to_depth(static_cast<int>(k), cfg) > depth_m) --k;
    while (delay_to_depth(static_cast<int>(k + 1), cfg) <= depth_m) ++k;
    return static_cast<int>(k);
}

inline double doppler_to_velocity(double nu, const SystemConfig& cfg) {
    const double v = nu * speed_of_light / cfg.carrier_angular_frequency();
    return cfg.velocity_convention == VelocityConvention::RoundTrip ? 0.5 * v : v;
}

inline double velocity_to_doppler(double velocity_mps, const SystemConfig& cfg) {
    const double nu = velocity_mps * cfg.carrier_angular_frequency() / speed_of_light;
    return cfg.velocity_convention == VelocityConvention::RoundTrip ? 2.0 * nu : nu;
}

/// Exposure-limited Doppler resolution, 2 pi / (N T) in rad/s.
inline double doppler_bin_spacing(const SystemConfig& cfg) {
    return two_pi * cfg.symbol_rate / static_cast<double>(cfg.n_symbols);
}

/// Symmetric Doppler grid over [-nu_max, nu_max] holding exactly one zero bin.
///
/// With doppler_bin_count == 0 the spacing is the exposure-limited resolution
/// and the grid keeps every multiple of it inside nu_max. A nonzero count
/// forces that many bins (rounded up to odd) spread evenly over the range.
inline std::vector<double> doppler_bin_grid(const SystemConfig& cfg) {
    if (cfg.n_symbols < 2) throw ConfigError("doppler grid needs n_symbols >= 2");
    const double nu_max = velocity_to_doppler(cfg.max_abs_velocity, cfg);
    if (nu_max <= 0.0) return {0.0};

    long half = 0;
    double spacing = doppler_bin_spacing(cfg);
    if (cfg.doppler_bin_count > 1) {
        half = static_cast<long>(cfg.doppler_bin_count / 2);
        spacing = nu_max / static_cast<double>(half);
    } else if (cfg.doppler_bin_count == 0) {
        half = static_cast<long>(std::floor(nu_max / spacing + 1e-9));
    }

    std::vector<double> grid;
    grid.reserve(static_cast<std::size_t>(2 * half + 1));
    for (long k = -half; k <= half; ++k) grid.push_back(static_cast<double>(k) * spacing);
    return grid;
}

/// e^{j nu t} at the receiver sample time t = n T. Shared by the forward
/// model and every estimator so on-grid noiseless data is exactly realizable.
inline cplx doppler_phasor(double nu, std::size_t n, double symbol_period) {
    if (nu == 0.0) return {1.0, 0.0};
    return std::polar(1.0, nu * static_cast<double>(n) * symbol_period);
}

/// Length-N stream of dual-polarization complex symbols.
class DualPolSequence {
public:
    DualPolSequence() = default;
    explicit DualPolSequence(std::size_t n) : samples_(n, DualPol::Zero()) {}
    explicit DualPolSequence(std::vector<DualPol> samples) : samples_(std::move(samples)) {}

    std::size_t size() const noexcept { return samples_.size(); }
    bool empty() const noexcept { return samples_.empty(); }

    DualPol& operator[](std::size_t n) { return samples_[n]; }
    const DualPol& operator[](std::size_t n) const { return samples_[n]; }

    auto begin() noexcept { return samples_.begin(); }
    auto end() noexcept { return samples_.end(); }
    auto begin() const noexcept { return samples_.begin(); }
    auto end() const noexcept { return samples_.end(); }

    const std::vector<DualPol>& samples() const noexcept { return samples_; }

    std::vector<cplx> channel(int p) const {
        std::vector<cplx> out(samples_.size());
        for (std::size_t n = 0; n < samples_.size(); ++n) out[n] = samples_[n](p);
        return out;
    }

    double energy() const {
        double e = 0.0;
        for (const auto& s : samples_) e += s.squaredNorm();
        return e;
    }

    bool all_finite() const {
        for (const auto& s : samples_)
            if (!s.allFinite()) return false;
        return true;
    }

    friend bool operator==(const DualPolSequence& a, const DualPolSequence& b) {
        if (a.size() != b.size()) return false;
        for (std::size_t n = 0; n < a.size(); ++n)
            if (a[n] != b[n]) return false;
        return true;
    }

private:
    std::vector<DualPol> samples_;
};

/// One reflection: integer delay, angular Doppler shift (rad/s), Jones matrix.
struct EchoPath {
    int delay = 0;
    double doppler = 0.0;
    JonesMatrix jones = JonesMatrix::Identity();
};

/// Per-channel circularly symmetric complex Gaussian noise, E|eta|^2 = sigma^2.
struct NoiseModel {
    double sigma = 0.0;
    std::uint64_t seed = 0;
};

}  // namespace fwl
