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
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "fwl/core.hpp"

namespace fwl {

/// Candidate (delay, Doppler) bins of a Jones field. Delays are strictly
/// increasing; Dopplers are the grid values in rad/s.
struct BinGrid {
    std::vector<int> delays;
    std::vector<double> dopplers{0.0};

    std::size_t delay_count() const { return delays.size(); }
    std::size_t doppler_count() const { return dopplers.size(); }
    std::size_t size() const { return delays.size() * dopplers.size(); }
    int delta_max() const { return delays.empty() ? 0 : delays.back(); }

    /// Flat index of (delay index d, Doppler index k). Doppler-major, so the
    /// delays of one Doppler bin are contiguous.
    std::size_t index(std::size_t d, std::size_t k) const { return k * delays.size() + d; }

    /// Index of the zero-Doppler bin, or doppler_count() if absent.
    std::size_t zero_doppler() const {
        for (std::size_t k = 0; k < dopplers.size(); ++k)
            if (dopplers[k] == 0.0) return k;
        return dopplers.size();
    }

    friend bool operator==(const BinGrid&, const BinGrid&) = default;
};

/// Jones matrices over a BinGrid for one pixel.
struct JonesField {
    BinGrid grid;
    std::vector<JonesMatrix> values;

    JonesField() = default;
    explicit JonesField(BinGrid g) : grid(std::move(g)), values(grid.size(), JonesMatrix::Zero()) {}

    JonesMatrix& at(std::size_t d, std::size_t k) { return values[grid.index(d, k)]; }
    const JonesMatrix& at(std::size_t d, std::size_t k) const { return values[grid.index(d, k)]; }

    int delta_max() const { return grid.delta_max(); }

    bool all_finite() const {
        for (const auto& j : values)
            if (!j.allFinite()) return false;
        return true;
    }

    bool is_zero() const {
        for (const auto& j : values)
            if (j != JonesMatrix::Zero()) return false;
        return true;
    }
};

/// Row-major H x W collection of per-pixel fields sharing one grid.
struct FieldMap {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<JonesField> pixels;

    std::size_t size() const { return pixels.size(); }

    void check() const {
        if (pixels.size() != height * width) throw ShapeError("field map size does not match its dimensions");
        for (const auto& f : pixels) {
            if (!(f.grid == pixels.front().grid)) throw ShapeError("pixels of a field map use different grids");
            if (f.values.size() != f.grid.size()) throw ShapeError("field values do not match the grid");
        }
    }
};

/// Per-pixel received sequences sharing one transmit sequence.
struct Frame {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<DualPolSequence> rx;

    std::size_t size() const { return rx.size(); }

    void check(std::size_t n) const {
        if (rx.size() != height * width) throw ShapeError("frame size does not match its dimensions");
        for (const auto& y : rx)
            if (y.size() != n) throw ShapeError("received sequence length differs from the transmit length");
    }
};

/// Candidate grid: delays (delta_min, delta_max] plus the internal
/// reflection delays, Dopplers {0} for static scenes or the configured grid.
inline BinGrid make_bin_grid(const SystemConfig& cfg, int delta_max, bool static_scene) {
    if (delta_max < 0 || static_cast<std::size_t>(delta_max) >= cfg.n_symbols)
        throw RangeError("delta_max must lie in [0, n_symbols)");
    BinGrid g;
    for (int d = cfg.delta_min + 1; d <= delta_max; ++d) g.delays.push_back(d);
    for (int d : cfg.internal_reflection_delays) g.delays.push_back(d);
    std::sort(g.delays.begin(), g.delays.end());
    g.delays.erase(std::unique(g.delays.begin(), g.delays.end()), g.delays.end());
    if (g.delays.empty()) throw ConfigError("delay grid is empty; raise delta_max above delta_min");
    g.dopplers = static_scene ? std::vector<double>{0.0} : doppler_bin_grid(cfg);
    return g;
}

}  // namespace fwl
