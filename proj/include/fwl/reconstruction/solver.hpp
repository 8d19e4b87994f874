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

// Joint estimation of the per-pixel Jones field.
//
// Objective per pixel: (1 / N) * data_residual + lambda_sparse * sum ||J||_F,
// plus lambda_tv * tv_penalty over the pixel grid in the second stage.
// Parameters are updated with Adam, treating real and imaginary parts as
// independent real coordinates.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <vector>

#include "fwl/core.hpp"
#include "fwl/parallel.hpp"
#include "fwl/reconstruction/field.hpp"
#include "fwl/reconstruction/objective.hpp"
#include "fwl/rng.hpp"

namespace fwl {

struct SolverParams {
    double lambda_sparse = 0.3;
    double lambda_tv = 0.1;
    double learning_rate = 1e-2;
    std::size_t stage1_iters = 50;
    std::size_t stage2_iters = 500;
    std::size_t batch_pixels = 1024;
    bool static_scene = false;
    bool tv_on_static_only = true;
    double max_depth = 4.0;  // m, upper end of the delay search
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t seed = 0;
    std::size_t threads = 0;  // 0 = default_thread_count()
    DataTermMethod data_term = DataTermMethod::Auto;

    /// Defaults for a static or dynamic scene (lambda_sparse 0.1 or 0.3).
    static SolverParams defaults(bool static_scene) {
        SolverParams p;
        p.static_scene = static_scene;
        p.lambda_sparse = static_scene ? 0.1 : 0.3;
        return p;
    }

    void validate() const {
        if (!(lambda_sparse >= 0.0)) throw ConfigError("lambda_sparse must be nonnegative");
        if (!(lambda_tv >= 0.0)) throw ConfigError("lambda_tv must be nonnegative");
        if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
        if (batch_pixels < 1) throw ConfigError("batch_pixels must be at least 1");
        if (!(max_depth > 0.0)) throw ConfigError("max_depth must be positive");
        if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
            throw ConfigError("Adam decay constants must lie in [0, 1)");
        if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
    }
};

/// Largest searched delay: the delay of min(max_depth, max_range).
inline int solver_delta_max(const SystemConfig& cfg, const SolverParams& params) {
    const double depth = std::min(params.max_depth, cfg.max_range);
    const int d = depth_to_delay(depth, cfg);
    return std::min(d, static_cast<int>(cfg.n_symbols) - 1);
}

inline BinGrid solver_grid(const SystemConfig& cfg, const SolverParams& params) {
    return make_bin_grid(cfg, solver_delta_max(cfg, params), params.static_scene);
}

/// First and second moments per real coordinate. The second moments of the
/// real and imaginary parts are kept in the real and imaginary parts of `v`.
struct AdamState {
    std::vector<JonesMatrix> m;
    std::vector<JonesMatrix> v;
    std::size_t step = 0;

    explicit AdamState(std::size_t bins = 0) : m(bins, JonesMatrix::Zero()), v(bins, JonesMatrix::Zero()) {}
};

inline void adam_step(std::vector<JonesMatrix>& values, const std::vector<JonesMatrix>& grad, AdamState& st,
                      const SolverParams& params) {
    ++st.step;
    const double b1 = params.beta1, b2 = params.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(st.step));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(st.step));
    const double lr = params.learning_rate, eps = params.epsilon;
    for (std::size_t i = 0; i < values.size(); ++i) {
        for (int e = 0; e < 4; ++e) {
            const cplx g = grad[i](e);
            cplx& m = st.m[i](e);
            cplx& v = st.v[i](e);
            m = b1 * m + (1.0 - b1) * g;
            v = cplx(b2 * v.real() + (1.0 - b2) * g.real() * g.real(),
                     b2 * v.imag() + (1.0 - b2) * g.imag() * g.imag());
            const double step_re = lr * (m.real() / c1) / (std::sqrt(v.real() / c2) + eps);
            const double step_im = lr * (m.imag() / c1) / (std::sqrt(v.imag() / c2) + eps);
            values[i](e) -= cplx(step_re, step_im);
        }
    }
}

/// Adds the regularizer terms to a data gradient in place.
///
/// `slope[i]` is the derivative of the non-data penalty with respect to
/// ||J_i||_F (lambda_sparse plus any TV contribution). Nonzero groups get
/// G + slope * J / ||J||. At a zero group the penalty is not differentiable;
/// the minimum-norm element of the subdifferential is used, which is zero
/// when ||G|| <= slope and G * (||G|| - slope) / ||G|| otherwise.
inline void add_group_penalty(std::vector<JonesMatrix>& grad, const std::vector<JonesMatrix>& values,
                              const std::vector<double>& slope) {
    for (std::size_t i = 0; i < grad.size(); ++i) {
        const double nrm = values[i].norm();
        if (nrm > 0.0) {
            grad[i] += slope[i] * values[i] / nrm;
            continue;
        }
        const double s = grad[i].norm();
        if (s == 0.0 || s <= slope[i])
            grad[i].setZero();
        else
            grad[i] *= (s - slope[i]) / s;
    }
}

struct SolveStats {
    std::size_t stage1_iters = 0;
    std::size_t stage2_iters = 0;
    std::size_t stage2_pixel_updates = 0;
};

/// Runs `iters` Adam iterations of the per-pixel objective without TV,
/// starting from `field` with the given optimizer state.
inline void optimize_pixel(const DataTerm& data, const DataTerm::Pixel& px, JonesField& field, AdamState& st,
                           const SolverParams& params, std::size_t iters, std::size_t pixel) {
    auto ws = data.workspace();
    std::vector<JonesMatrix> grad;
    const std::vector<double> slope(field.values.size(), params.lambda_sparse);
    const double scale = -2.0 / static_cast<double>(data.length());
    for (std::size_t it = 0; it < iters; ++it) {
        const double loss = data.evaluate(field.values, px, grad, ws);
        if (!std::isfinite(loss)) throw SolverError(it, pixel, "non-finite data residual");
        for (auto& g : grad) g *= scale;
        add_group_penalty(grad, field.values, slope);
        adam_step(field.values, grad, st, params);
        if (!field.all_finite()) throw SolverError(it, pixel, "non-finite Jones field");
    }
}

inline void optimize_pixel(const DataTerm& data, const DualPolSequence& rx, JonesField& field, AdamState& st,
                           const SolverParams& params, std::size_t iters, std::size_t pixel) {
    optimize_pixel(data, data.prepare(rx), field, st, params, iters, pixel);
}

/// Stage 1: independent per-pixel estimation with the sparsity penalty only,
/// starting from the zero field.
inline FieldMap solve_stage1(const DualPolSequence& tx, const Frame& frame, const SystemConfig& cfg,
                             const SolverParams& params, SolveStats* stats = nullptr) {
    params.validate();
    if (params.stage1_iters < 1) throw ConfigError("stage1_iters must be at least 1");
    frame.check(tx.size());
    const DataTerm data(tx, solver_grid(cfg, params), cfg.symbol_period(), params.data_term);

    FieldMap out;
    out.height = frame.height;
    out.width = frame.width;
    out.pixels.assign(frame.size(), JonesField(data.grid()));
    parallel_for(frame.size(), params.threads, [&](std::size_t p) {
        AdamState st(data.grid().size());
        optimize_pixel(data, frame.rx[p], out.pixels[p], st, params, params.stage1_iters, p);
    });
    if (stats) stats->stage1_iters = params.stage1_iters;
    return out;
}

/// Pixels sampled in one stage-2 iteration plus their 4-neighbours, sorted.
inline std::vector<std::size_t> stage2_update_set(const std::vector<std::size_t>& batch, std::size_t h,
                                                  std::size_t w) {
    std::vector<char> mark(h * w, 0);
    for (std::size_t p : batch) {
        const std::size_t i = p / w, j = p % w;
        mark[p] = 1;
        if (i > 0) mark[p - w] = 1;
        if (i + 1 < h) mark[p + w] = 1;
        if (j > 0) mark[p - 1] = 1;
        if (j + 1 < w) mark[p + 1] = 1;
    }
    std::vector<std::size_t> out;
    for (std::size_t p = 0; p < mark.size(); ++p)
        if (mark[p]) out.push_back(p);
    return out;
}

/// Stage 2: continues from the stage-1 fields on the full objective with
/// the TV penalty. Each iteration samples batch_pixels pixels uniformly
/// without replacement; they and their 4-neighbours take one Adam step
/// using gradients evaluated on the same snapshot. Optimizer state starts
/// fresh; each pixel keeps its own step counter.
inline FieldMap solve_stage2(const FieldMap& stage1, const DualPolSequence& tx, const Frame& frame,
                             const SystemConfig& cfg, const SolverParams& params, SolveStats* stats = nullptr) {
    params.validate();
    frame.check(tx.size());
    stage1.check();
    if (stage1.height != frame.height || stage1.width != frame.width)
        throw ShapeError("stage-1 fields and frame differ in dimensions");
    FieldMap fields = stage1;
    if (fields.size() == 0 || params.stage2_iters == 0) {
        if (stats) stats->stage2_iters = 0;
        return fields;
    }

    const DataTerm data(tx, fields.pixels.front().grid, cfg.symbol_period(), params.data_term);
    const BinGrid& grid = data.grid();
    const std::size_t npix = fields.size(), nbins = grid.size();
    const std::size_t h = fields.height, w = fields.width;
    const std::vector<std::size_t> tv = params.lambda_tv > 0.0 ? tv_bins(grid, params.tv_on_static_only)
                                                               : std::vector<std::size_t>{};
    const double scale = -2.0 / static_cast<double>(data.length());
    std::vector<DataTerm::Pixel> cache(npix);
    parallel_for(npix, params.threads, [&](std::size_t p) { cache[p] = data.prepare(frame.rx[p]); });

    std::vector<AdamState> states(npix, AdamState(nbins));
    std::vector<std::vector<JonesMatrix>> grads(npix);
    std::vector<double> losses(npix, 0.0);
    std::vector<std::size_t> order(npix);
    Rng rng(derive_seed(params.seed, 0, SeedRole::BatchSampling));
    const std::size_t batch_size = std::min(params.batch_pixels, npix);
    std::size_t updates = 0;

    for (std::size_t it = 0; it < params.stage2_iters; ++it) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        for (std::size_t i = 0; i < batch_size; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(rng.below(npix - i));
            std::swap(order[i], order[j]);
        }
        std::vector<std::size_t> batch(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(batch_size));
        const std::vector<std::size_t> update = stage2_update_set(batch, h, w);

        // Norm maps of the TV bins on the current snapshot, bin-major.
        std::vector<double> norms(tv.size() * npix);
        for (std::size_t b = 0; b < tv.size(); ++b)
            for (std::size_t p = 0; p < npix; ++p) norms[b * npix + p] = fields.pixels[p].values[tv[b]].norm();

        parallel_for(update.size(), params.threads, [&](std::size_t u) {
            const std::size_t p = update[u];
            auto ws = data.workspace();
            losses[p] = data.evaluate(fields.pixels[p].values, cache[p], grads[p], ws);
            for (auto& g : grads[p]) g *= scale;

            std::vector<double> slope(nbins, params.lambda_sparse);
            if (!tv.empty()) {
                const std::size_t i = p / w, j = p % w;
                for (std::size_t b = 0; b < tv.size(); ++b)
                    slope[tv[b]] += params.lambda_tv * tv_map_slope(norms.data() + b * npix, h, w, i, j);
            }
            add_group_penalty(grads[p], fields.pixels[p].values, slope);
        });

        for (std::size_t p : update)
            if (!std::isfinite(losses[p])) throw SolverError(it, p, "non-finite data residual");
        parallel_for(update.size(), params.threads, [&](std::size_t u) {
            const std::size_t p = update[u];
            adam_step(fields.pixels[p].values, grads[p], states[p], params);
            if (!fields.pixels[p].all_finite()) throw SolverError(it, p, "non-finite Jones field");
        });
        updates += update.size();
    }
    if (stats) {
        stats->stage2_iters = params.stage2_iters;
        stats->stage2_pixel_updates = updates;
    }
    return fields;
}

/// Both stages.
inline FieldMap solve_joint(const DualPolSequence& tx, const Frame& frame, const SystemConfig& cfg,
                            const SolverParams& params, SolveStats* stats = nullptr) {
    const FieldMap s1 = solve_stage1(tx, frame, cfg, params, stats);
    return solve_stage2(s1, tx, frame, cfg, params, stats);
}

}  // namespace fwl
