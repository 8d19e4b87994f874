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
#include <cstddef>
#include <vector>

#include "fwl/core.hpp"
#include "fwl/errors.hpp"
#include "fwl/fft.hpp"
#include "fwl/reconstruction/field.hpp"

namespace fwl {

/// Direct evaluation of sum_n ||Y_n - sum_{d,k} J_{d,k} X_{n-d} e^{j nu_k n T}||^2.
inline double data_residual(const DualPolSequence& tx, const DualPolSequence& rx, const JonesField& field,
                            const SystemConfig& cfg) {
    if (tx.size() != rx.size()) throw ShapeError("tx and rx lengths differ");
    if (field.values.size() != field.grid.size()) throw ShapeError("field values do not match the grid");
    const auto& g = field.grid;
    if (!g.delays.empty() && (g.delays.front() < 0 || static_cast<std::size_t>(g.delays.back()) >= tx.size()))
        throw ShapeError("field delays fall outside the frame");

    const double period = cfg.symbol_period();
    double total = 0.0;
    for (std::size_t n = 0; n < rx.size(); ++n) {
        DualPol model = DualPol::Zero();
        for (std::size_t k = 0; k < g.doppler_count(); ++k) {
            DualPol part = DualPol::Zero();
            for (std::size_t d = 0; d < g.delay_count(); ++d) {
                const auto delay = static_cast<std::size_t>(g.delays[d]);
                if (delay > n) break;
                part += field.at(d, k) * tx[n - delay];
            }
            model += part * doppler_phasor(g.dopplers[k], n, period);
        }
        total += (rx[n] - model).squaredNorm();
    }
    return total;
}

/// Group sparsity: sum of Frobenius norms over all bins.
inline double sparsity_penalty(const JonesField& field) {
    double s = 0.0;
    for (const auto& j : field.values) s += j.norm();
    return s;
}

/// Bin indices whose norm maps enter the TV penalty.
inline std::vector<std::size_t> tv_bins(const BinGrid& g, bool static_only) {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < g.doppler_count(); ++k) {
        if (static_only && g.dopplers[k] != 0.0) continue;
        for (std::size_t d = 0; d < g.delay_count(); ++d) out.push_back(g.index(d, k));
    }
    return out;
}

/// Isotropic TV of one H x W scalar map with forward differences and
/// replicate boundary (zero difference past the last row or column).
inline double tv_map(const std::vector<double>& m, std::size_t h, std::size_t w) {
    double total = 0.0;
    for (std::size_t i = 0; i < h; ++i)
        for (std::size_t j = 0; j < w; ++j) {
            const double c = m[i * w + j];
            const double dv = i + 1 < h ? m[(i + 1) * w + j] - c : 0.0;
            const double dh = j + 1 < w ? m[i * w + j + 1] - c : 0.0;
            total += std::sqrt(dv * dv + dh * dh);
        }
    return total;
}

/// Derivative of tv_map with respect to m(i, j).
///
/// Terms whose difference vector vanishes are not differentiable. If
/// m(i, j) > 0 they contribute 0. If m(i, j) == 0 they contribute their
/// one-sided slope for increasing m(i, j), which is what the solver needs
/// to decide whether a zero group may leave zero.
inline double tv_map_slope(const double* m, std::size_t h, std::size_t w, std::size_t i, std::size_t j) {
    const auto at = [&](std::size_t a, std::size_t b) { return m[a * w + b]; };
    const double c = at(i, j);
    const bool at_zero = c == 0.0;
    double slope = 0.0;

    {
        const bool has_v = i + 1 < h, has_h = j + 1 < w;
        const double dv = has_v ? at(i + 1, j) - c : 0.0;
        const double dh = has_h ? at(i, j + 1) - c : 0.0;
        const double t = std::sqrt(dv * dv + dh * dh);
        if (t > 0.0)
            slope -= (dv + dh) / t;
        else if (at_zero)
            slope += std::sqrt(static_cast<double>(has_v) + static_cast<double>(has_h));
    }
    if (i > 0) {
        const double dv = c - at(i - 1, j);
        const double dh = j + 1 < w ? at(i - 1, j + 1) - at(i - 1, j) : 0.0;
        const double t = std::sqrt(dv * dv + dh * dh);
        if (t > 0.0)
            slope += dv / t;
        else if (at_zero)
            slope += 1.0;
    }
    if (j > 0) {
        const double dv = i + 1 < h ? at(i + 1, j - 1) - at(i, j - 1) : 0.0;
        const double dh = c - at(i, j - 1);
        const double t = std::sqrt(dv * dv + dh * dh);
        if (t > 0.0)
            slope += dh / t;
        else if (at_zero)
            slope += 1.0;
    }
    return slope;
}

inline double tv_map_slope(const std::vector<double>& m, std::size_t h, std::size_t w, std::size_t i,
                           std::size_t j) {
    if (m.size() != h * w) throw ShapeError("map size does not match its dimensions");
    return tv_map_slope(m.data(), h, w, i, j);
}

/// Norm map of one bin across the pixels of a field map.
inline std::vector<double> norm_map(const FieldMap& fields, std::size_t bin) {
    std::vector<double> m(fields.size());
    for (std::size_t p = 0; p < fields.size(); ++p) m[p] = fields.pixels[p].values[bin].norm();
    return m;
}

/// Sum over TV bins of the isotropic TV of each bin's norm map.
inline double tv_penalty(const FieldMap& fields, bool static_only = true) {
    fields.check();
    if (fields.size() == 0) return 0.0;
    double total = 0.0;
    for (std::size_t bin : tv_bins(fields.pixels.front().grid, static_only))
        total += tv_map(norm_map(fields, bin), fields.height, fields.width);
    return total;
}

/// Scratch buffers for one ForwardOperator call; one per worker thread.
struct OperatorWorkspace {
    fft::buffer a[4];
    fft::buffer b[2];
};

/// FFT evaluation of the bin-grid forward model and its adjoint for one
/// transmit sequence. The transmit spectra and Doppler phasors are computed
/// once and shared by every pixel.
class ForwardOperator {
public:
    ForwardOperator(const DualPolSequence& tx, BinGrid grid, double symbol_period)
        : n_(tx.size()), grid_(std::move(grid)) {
        if (n_ == 0) throw ShapeError("empty transmit sequence");
        if (grid_.delays.empty()) throw ShapeError("empty delay grid");
        if (grid_.delays.front() < 0 || static_cast<std::size_t>(grid_.delays.back()) >= n_)
            throw ShapeError("grid delays fall outside the frame");
        len_ = fft::good_size(n_ + static_cast<std::size_t>(grid_.delta_max()) + 1);
        for (int q = 0; q < 2; ++q) {
            fx_[q].assign(len_, cplx(0.0));
            for (std::size_t i = 0; i < n_; ++i) fx_[q][i] = tx[i](q);
            fft::forward(fx_[q]);
        }
        phasors_.resize(grid_.doppler_count());
        for (std::size_t k = 0; k < grid_.doppler_count(); ++k) {
            if (grid_.dopplers[k] == 0.0) continue;
            phasors_[k].resize(n_);
            for (std::size_t i = 0; i < n_; ++i) phasors_[k][i] = doppler_phasor(grid_.dopplers[k], i, symbol_period);
        }
    }

    const BinGrid& grid() const { return grid_; }
    std::size_t length() const { return n_; }
    std::size_t fft_length() const { return len_; }

    OperatorWorkspace workspace() const {
        OperatorWorkspace ws;
        for (auto& a : ws.a) a.resize(len_);
        for (auto& b : ws.b) b.resize(len_);
        return ws;
    }

    /// out_n = sum_{d,k} J_{d,k} X_{n-d} e^{j nu_k n T}.
    void apply(const std::vector<JonesMatrix>& values, DualPolSequence& out, OperatorWorkspace& ws) const {
        if (values.size() != grid_.size()) throw ShapeError("field values do not match the operator grid");
        if (out.size() != n_) out = DualPolSequence(n_);
        for (auto& y : out) y.setZero();
        const std::size_t nd = grid_.delay_count();

        for (std::size_t k = 0; k < grid_.doppler_count(); ++k) {
            const JonesMatrix* block = values.data() + k * nd;
            bool any = false;
            for (std::size_t d = 0; d < nd && !any; ++d) any = block[d] != JonesMatrix::Zero();
            if (!any) continue;

            for (int pq = 0; pq < 4; ++pq) {
                auto& a = ws.a[pq];
                std::fill(a.begin(), a.end(), cplx(0.0));
                for (std::size_t d = 0; d < nd; ++d) a[static_cast<std::size_t>(grid_.delays[d])] = block[d](pq / 2, pq % 2);
                fft::forward(a);
            }
            for (int p = 0; p < 2; ++p) {
                auto& b = ws.b[p];
                const auto& a0 = ws.a[2 * p];
                const auto& a1 = ws.a[2 * p + 1];
                for (std::size_t i = 0; i < len_; ++i) b[i] = a0[i] * fx_[0][i] + a1[i] * fx_[1][i];
                fft::inverse(b);
            }
            if (grid_.dopplers[k] == 0.0) {
                for (std::size_t i = 0; i < n_; ++i) {
                    out[i](0) += ws.b[0][i];
                    out[i](1) += ws.b[1][i];
                }
            } else {
                const auto& ph = phasors_[k];
                for (std::size_t i = 0; i < n_; ++i) {
                    out[i](0) += ph[i] * ws.b[0][i];
                    out[i](1) += ph[i] * ws.b[1][i];
                }
            }
        }
    }

    /// C_{d,k} = sum_n r_n X_{n-d}^H e^{-j nu_k n T}, written into `out`.
    void correlate(const DualPolSequence& r, std::vector<JonesMatrix>& out, OperatorWorkspace& ws) const {
        if (r.size() != n_) throw ShapeError("residual length differs from the operator length");
        out.resize(grid_.size());
        const std::size_t nd = grid_.delay_count();

        for (std::size_t k = 0; k < grid_.doppler_count(); ++k) {
            const bool still = grid_.dopplers[k] == 0.0;
            for (int p = 0; p < 2; ++p) {
                auto& b = ws.b[p];
                if (still) {
                    for (std::size_t i = 0; i < n_; ++i) b[i] = r[i](p);
                } else {
                    const auto& ph = phasors_[k];
                    for (std::size_t i = 0; i < n_; ++i) b[i] = r[i](p) * std::conj(ph[i]);
                }
                std::fill(b.begin() + static_cast<std::ptrdiff_t>(n_), b.end(), cplx(0.0));
                fft::forward(b);
            }
            for (int pq = 0; pq < 4; ++pq) {
                const int p = pq / 2, q = pq % 2;
                auto& a = ws.a[pq];
                for (std::size_t i = 0; i < len_; ++i) a[i] = ws.b[p][i] * std::conj(fx_[q][i]);
                fft::inverse(a);
            }
            JonesMatrix* block = out.data() + k * nd;
            for (std::size_t d = 0; d < nd; ++d) {
                const auto lag = static_cast<std::size_t>(grid_.delays[d]);
                block[d] << ws.a[0][lag], ws.a[1][lag], ws.a[2][lag], ws.a[3][lag];
            }
        }
    }

    /// Residual r = rx - model; returns sum_n ||r_n||^2.
    double residual(const std::vector<JonesMatrix>& values, const DualPolSequence& rx, DualPolSequence& r,
                    OperatorWorkspace& ws) const {
        if (rx.size() != n_) throw ShapeError("rx length differs from the operator length");
        apply(values, r, ws);
        double total = 0.0;
        for (std::size_t i = 0; i < n_; ++i) {
            r[i] = rx[i] - r[i];
            total += r[i].squaredNorm();
        }
        return total;
    }

private:
    std::size_t n_ = 0;
    std::size_t len_ = 0;
    BinGrid grid_;
    fft::buffer fx_[2];
    std::vector<std::vector<cplx>> phasors_;
};

enum class DataTermMethod { Auto, Fft, Gram };

/// Per-pixel data term: the loss sum_n ||r_n||^2 and the residual
/// correlation C_b = sum_n r_n X_{n-d_b}^H e^{-j nu_b n T} for every bin.
///
/// The Gram route applies to zero-Doppler grids. It precomputes the blocks
/// G(a, b) = sum_n X_{n-d_a} X_{n-d_b}^H once per transmit sequence and the
/// rx correlation once per pixel, after which
///   C_b  = C_b(rx) - sum_a J_a G(a, b)
///   loss = ||rx||^2 - 2 Re sum_b tr(J_b C_b(rx)^H) + Re sum_b tr(J_b^H sum_a J_a G(a, b)),
/// with zero groups skipped. Auto picks it when the delay count is small
/// against the FFT length.
class DataTerm {
public:
    /// Cached per-pixel quantities.
    struct Pixel {
        const DualPolSequence* rx = nullptr;
        std::vector<JonesMatrix> rx_corr;  // Gram route only
        double energy = 0.0;
    };

    DataTerm(const DualPolSequence& tx, BinGrid grid, double symbol_period,
             DataTermMethod method = DataTermMethod::Auto)
        : op_(tx, std::move(grid), symbol_period) {
        const BinGrid& g = op_.grid();
        bool still = true;
        for (double nu : g.dopplers) still = still && nu == 0.0;
        const auto w = static_cast<double>(g.delay_count());
        const auto len = static_cast<double>(op_.fft_length());
        const bool ordered = std::adjacent_find(g.delays.begin(), g.delays.end(),
                                                [](int a, int b) { return a >= b; }) == g.delays.end();
        const bool cheap = g.delay_count() <= 1024 && w * w <= 4.0 * len * std::log2(len);
        if (method == DataTermMethod::Gram && !ordered) throw ConfigError("the Gram data term needs increasing delays");
        if (method == DataTermMethod::Gram && !still) throw ConfigError("the Gram data term needs a zero-Doppler grid");
        gram_ = method == DataTermMethod::Gram || (method == DataTermMethod::Auto && still && cheap && ordered);
        if (gram_) build_gram(tx);
    }

    bool uses_gram() const { return gram_; }
    const ForwardOperator& op() const { return op_; }
    const BinGrid& grid() const { return op_.grid(); }
    std::size_t length() const { return op_.length(); }
    OperatorWorkspace workspace() const { return gram_ ? OperatorWorkspace{} : op_.workspace(); }

    Pixel prepare(const DualPolSequence& rx) const {
        if (rx.size() != op_.length()) throw ShapeError("rx length differs from the operator length");
        Pixel px;
        px.rx = &rx;
        if (gram_) {
            auto ws = op_.workspace();
            op_.correlate(rx, px.rx_corr, ws);
            for (const auto& y : rx) px.energy += y.squaredNorm();
        }
        return px;
    }

    /// Writes the residual correlation into `corr` and returns the loss.
    double evaluate(const std::vector<JonesMatrix>& values, const Pixel& px, std::vector<JonesMatrix>& corr,
                    OperatorWorkspace& ws) const {
        if (!gram_) {
            DualPolSequence r;
            const double loss = op_.residual(values, *px.rx, r, ws);
            op_.correlate(r, corr, ws);
            return loss;
        }
        const std::size_t w = grid().delay_count();
        if (values.size() != w) throw ShapeError("field values do not match the operator grid");
        corr.assign(w, JonesMatrix::Zero());
        for (std::size_t a = 0; a < w; ++a) {
            if (values[a].isZero(0.0)) continue;
            const JonesMatrix* row = gram_blocks_.data() + a * w;
            for (std::size_t b = 0; b < w; ++b) corr[b].noalias() += values[a] * row[b];
        }
        double cross = 0.0, model = 0.0;
        for (std::size_t b = 0; b < w; ++b) {
            if (values[b].isZero(0.0)) continue;
            cross += (values[b].array() * px.rx_corr[b].array().conjugate()).sum().real();
            model += (values[b].array().conjugate() * corr[b].array()).sum().real();
        }
        for (std::size_t b = 0; b < w; ++b) corr[b] = px.rx_corr[b] - corr[b];
        return std::max(0.0, px.energy - 2.0 * cross + model);
    }

private:
    /// Blocks by lag m = d_b - d_a >= 0:
    /// G(a, b) = sum_{i=0}^{N-1-d_b} X_{i+m} X_i^H, the full lag sum minus a
    /// tail grown as d_a increases. G(b, a) = G(a, b)^H.
    void build_gram(const DualPolSequence& tx) {
        const auto& delays = grid().delays;
        const std::size_t w = delays.size(), n = tx.size();
        gram_blocks_.assign(w * w, JonesMatrix::Zero());
        std::vector<std::size_t> index_of(static_cast<std::size_t>(delays.back()) + 1, w);
        for (std::size_t a = 0; a < w; ++a) index_of[static_cast<std::size_t>(delays[a])] = a;
        const auto outer = [&](std::size_t i, std::size_t m) {
            return JonesMatrix(tx[i + m] * tx[i].adjoint());
        };
        for (std::size_t m = 0; m <= static_cast<std::size_t>(delays.back() - delays.front()); ++m) {
            if (m >= n) break;
            bool needed = false;
            for (std::size_t a = 0; a < w && !needed; ++a) {
                const std::size_t db = static_cast<std::size_t>(delays[a]) + m;
                needed = db < index_of.size() && index_of[db] < w;
            }
            if (!needed) continue;
            JonesMatrix full = JonesMatrix::Zero();
            for (std::size_t i = 0; i + m < n; ++i) full += outer(i, m);
            JonesMatrix tail = JonesMatrix::Zero();
            std::size_t grown = 0;  // tail covers i in [n - m - grown, n - m)
            for (std::size_t a = 0; a < w; ++a) {
                const auto da = static_cast<std::size_t>(delays[a]);
                const std::size_t db = da + m;
                if (db >= index_of.size() || index_of[db] >= w || db >= n) continue;
                while (grown < da) {
                    ++grown;
                    tail += outer(n - m - grown, m);
                }
                const std::size_t b = index_of[db];
                gram_blocks_[a * w + b] = full - tail;
                gram_blocks_[b * w + a] = (full - tail).adjoint();
            }
        }
    }

    ForwardOperator op_;
    bool gram_ = false;
    std::vector<JonesMatrix> gram_blocks_;  // row a, column b
};

/// Gradient of (1 / N) * data_residual with respect to each Jones matrix,
/// in the convention dL/dRe + j dL/dIm: -(2 / N) sum_n r_n X_{n-d}^H e^{-j nu n T}.
inline std::vector<JonesMatrix> data_gradient(const ForwardOperator& op, const JonesField& field,
                                              const DualPolSequence& rx) {
    auto ws = op.workspace();
    DualPolSequence r;
    op.residual(field.values, rx, r, ws);
    std::vector<JonesMatrix> g;
    op.correlate(r, g, ws);
    const double scale = -2.0 / static_cast<double>(op.length());
    for (auto& j : g) j *= scale;
    return g;
}

/// Gradient of sparsity_penalty at nonzero groups (J / ||J||_F); zero
/// groups get the zero matrix.
inline std::vector<JonesMatrix> sparsity_gradient(const JonesField& field) {
    std::vector<JonesMatrix> g(field.values.size(), JonesMatrix::Zero());
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double nrm = field.values[i].norm();
        if (nrm > 0.0) g[i] = field.values[i] / nrm;
    }
    return g;
}

/// Gradient of tv_penalty with respect to every Jones matrix of one pixel,
/// chained through the norm: slope * J / ||J||_F (zero at zero groups).
inline std::vector<JonesMatrix> tv_gradient(const FieldMap& fields, std::size_t pixel, bool static_only = true) {
    fields.check();
    const JonesField& f = fields.pixels[pixel];
    std::vector<JonesMatrix> g(f.values.size(), JonesMatrix::Zero());
    const std::size_t i = pixel / fields.width, j = pixel % fields.width;
    for (std::size_t bin : tv_bins(f.grid, static_only)) {
        const double nrm = f.values[bin].norm();
        if (nrm == 0.0) continue;
        const double s = tv_map_slope(norm_map(fields, bin), fields.height, fields.width, i, j);
        g[bin] = s * f.values[bin] / nrm;
    }
    return g;
}

}  // namespace fwl
