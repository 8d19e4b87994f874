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

// Experiment pipeline: plan files, frame archives, reconstruction outputs,
// metric reports and parameter sweeps.
//
// All randomness flows from the plan seed s:
//   transmit sequence  derive_seed(s, 0, Transmit)
//   speckle            scene master seed s, per pixel and surface
//   noise              derive_seed(s, 0, Noise), then per pixel
//   stage-2 batches    solver seed s

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fwl/channel.hpp"
#include "fwl/core.hpp"
#include "fwl/errors.hpp"
#include "fwl/io.hpp"
#include "fwl/metrics.hpp"
#include "fwl/modulation.hpp"
#include "fwl/parallel.hpp"
#include "fwl/reconstruction/extract.hpp"
#include "fwl/reconstruction/matched_filter.hpp"
#include "fwl/reconstruction/solver.hpp"
#include "fwl/rng.hpp"
#include "fwl/scenes.hpp"

namespace fwl::pipeline {

using io::json;
namespace fs = std::filesystem;

enum class Method { NaiveMF, GeneralizedMF, Joint };

inline constexpr Method all_methods[] = {Method::NaiveMF, Method::GeneralizedMF, Method::Joint};

inline std::string_view to_string(Method m) {
    switch (m) {
        case Method::NaiveMF: return "naive_mf";
        case Method::GeneralizedMF: return "generalized_mf";
        case Method::Joint: return "joint";
    }
    return "unknown";
}

inline Method method_from_string(std::string_view s) {
    for (Method m : all_methods)
        if (to_string(m) == s) return m;
    throw ConfigError("unknown method '" + std::string(s) + "' (naive_mf, generalized_mf, joint)");
}

/// Optional sweep axes; an empty axis is absent and keeps the plan value.
struct SweepAxes {
    std::vector<std::size_t> n_symbols;
    std::vector<SchemeKind> schemes;
    std::vector<double> snr_db;
    std::vector<Method> methods;
    std::vector<std::uint64_t> seeds;

    bool empty() const {
        return n_symbols.empty() && schemes.empty() && snr_db.empty() && methods.empty() && seeds.empty();
    }

    std::size_t cell_count() const {
        const auto len = [](std::size_t n) { return n == 0 ? std::size_t{1} : n; };
        return len(n_symbols.size()) * len(schemes.size()) * len(snr_db.size()) * len(methods.size()) *
               len(seeds.size());
    }
};

struct ExperimentPlan {
    SystemConfig system;
    SceneSpec scene;
    ModulationScheme scheme;
    std::optional<double> snr_db;  // scene SNR; otherwise noise_sigma applies
    double noise_sigma = 0.0;
    json solver = json::object();  // solver settings as written, resolved per run
    Method method = Method::Joint;
    std::size_t extract_count = 1;
    bool plane_fit = false;
    bool velocity_metric = false;
    std::uint64_t seed = 0;
    std::size_t threads = 0;  // runtime only, never serialized
    fs::path output_dir = "fwl_out";
    SweepAxes sweep;

    SolverParams solver_params() const {
        SolverParams p = io::solver_from_json(solver);
        p.seed = seed;
        p.threads = threads;
        return p;
    }

    void validate() const {
        system.validate();
        scene.validate(system);
        solver_params();
        if (extract_count < 1) throw ConfigError("extract_count must be at least 1");
        if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) throw ConfigError("noise_sigma must be nonnegative");
        if (snr_db && !std::isfinite(*snr_db)) throw ConfigError("snr_db must be finite");
    }
};

inline json to_json(const ExperimentPlan& p) {
    json j = {{"system", io::to_json(p.system)},
              {"scene", io::to_json(p.scene)},
              {"scheme", {{"kind", std::string(to_string(p.scheme.kind))}, {"power_per_pol", p.scheme.power_per_pol}}},
              {"solver", p.solver},
              {"method", std::string(to_string(p.method))},
              {"extract_count", p.extract_count},
              {"plane_fit", p.plane_fit},
              {"velocity_metric", p.velocity_metric},
              {"seed", p.seed}};
    if (p.snr_db)
        j["snr_db"] = *p.snr_db;
    else
        j["noise_sigma"] = p.noise_sigma;
    if (!p.sweep.empty()) {
        json s = json::object();
        if (!p.sweep.n_symbols.empty()) s["n_symbols"] = p.sweep.n_symbols;
        if (!p.sweep.schemes.empty()) {
            s["scheme"] = json::array();
            for (SchemeKind k : p.sweep.schemes) s["scheme"].push_back(std::string(to_string(k)));
        }
        if (!p.sweep.snr_db.empty()) s["snr_db"] = p.sweep.snr_db;
        if (!p.sweep.methods.empty()) {
            s["method"] = json::array();
            for (Method m : p.sweep.methods) s["method"].push_back(std::string(to_string(m)));
        }
        if (!p.sweep.seeds.empty()) s["seed"] = p.sweep.seeds;
        j["sweep"] = s;
    }
    return j;
}

namespace detail {

template <typename T, typename Fn>
std::vector<T> axis(const json& s, const char* key, Fn convert) {
    std::vector<T> out;
    if (!s.contains(key)) return out;
    const json& a = s[key];
    if (!a.is_array() || a.empty()) throw ConfigError(std::string("sweep axis '") + key + "' must be a non-empty list");
    for (const auto& v : a) out.push_back(convert(v));
    return out;
}

}  // namespace detail

inline ExperimentPlan plan_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("plan must be a JSON object");
    try {
        ExperimentPlan p;
        p.system = io::system_from_json(j.value("system", json::object()));
        p.scene = io::scene_from_json(j.value("scene", json::object()));
        p.scheme = io::scheme_from_json(j.value("scheme", json::object()));
        p.solver = j.value("solver", json::object());
        if (!p.solver.is_object()) throw ConfigError("solver must be a JSON object");
        if (j.contains("snr_db") && j.contains("noise_sigma"))
            throw ConfigError("give either snr_db or noise_sigma, not both");
        if (j.contains("snr_db")) p.snr_db = j["snr_db"].get<double>();
        p.noise_sigma = j.value("noise_sigma", 0.0);
        p.method = method_from_string(j.value("method", std::string("joint")));
        p.extract_count = j.value("extract_count", std::size_t{1});
        p.plane_fit = j.value("plane_fit", false);
        p.velocity_metric = j.value("velocity_metric", false);
        p.seed = j.value("seed", std::uint64_t{0});
        if (j.contains("output_dir")) p.output_dir = j["output_dir"].get<std::string>();
        if (j.contains("sweep")) {
            const json& s = j["sweep"];
            if (!s.is_object()) throw ConfigError("sweep must be a JSON object");
            for (const auto& [key, value] : s.items())
                if (key != "n_symbols" && key != "scheme" && key != "snr_db" && key != "method" && key != "seed")
                    throw ConfigError("unknown sweep axis '" + key + "'");
            p.sweep.n_symbols = detail::axis<std::size_t>(s, "n_symbols", [](const json& v) { return v.get<std::size_t>(); });
            p.sweep.schemes = detail::axis<SchemeKind>(
                s, "scheme", [](const json& v) { return scheme_from_string(v.get<std::string>()); });
            p.sweep.snr_db = detail::axis<double>(s, "snr_db", [](const json& v) { return v.get<double>(); });
            p.sweep.methods = detail::axis<Method>(
                s, "method", [](const json& v) { return method_from_string(v.get<std::string>()); });
            p.sweep.seeds = detail::axis<std::uint64_t>(s, "seed", [](const json& v) { return v.get<std::uint64_t>(); });
        }
        p.validate();
        return p;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed plan: ") + e.what());
    }
}

inline ExperimentPlan read_plan(const fs::path& path) { return plan_from_json(io::read_json(path)); }

// ---------------------------------------------------------------- archives

/// A simulated acquisition: everything written to and read from an archive.
struct Archive {
    ExperimentPlan plan;
    DualPolSequence tx;
    GroundTruth truth;
    std::vector<ChannelRealization> channels;
    Frame frame;
    NoiseModel noise;
    json manifest = json::object();
};

inline std::uint64_t transmit_seed(std::uint64_t seed) { return derive_seed(seed, 0, SeedRole::Transmit); }
inline std::uint64_t noise_seed(std::uint64_t seed) { return derive_seed(seed, 0, SeedRole::Noise); }

/// Runs the scene, transmitter and channel for a plan.
inline Archive simulate(const ExperimentPlan& plan) {
    plan.validate();
    Archive a;
    a.plan = plan;
    a.plan.scheme.seed = transmit_seed(plan.seed);
    a.plan.scene.master_seed = plan.seed;
    a.tx = generate_tx(a.plan.scheme, plan.system.n_symbols);
    SceneRealization r = realize_scene(a.plan.scene, plan.system);
    a.truth = std::move(r.truth);
    a.channels = std::move(r.channels);
    a.noise.sigma = plan.snr_db ? scene_sigma(*plan.snr_db, a.truth, plan.scheme.power_per_pol) : plan.noise_sigma;
    a.noise.seed = noise_seed(plan.seed);
    a.frame = acquire_frame(a.tx, a.channels, a.plan.scene.grid, plan.system, a.noise, plan.threads);
    return a;
}

inline std::string frame_stem(std::size_t pixel) {
    std::string digits = std::to_string(pixel);
    if (digits.size() < 5) digits.insert(0, 5 - digits.size(), '0');
    return "frame_" + digits;
}

namespace detail {

/// Removes an earlier output directory before it is replaced. Refuses to
/// touch non-empty directories that do not look like toolkit output.
inline void clear_target(const fs::path& dir) {
    if (!fs::exists(dir)) return;
    if (!fs::is_directory(dir)) throw IoError("output path exists and is not a directory: " + dir.string());
    if (!fs::is_empty(dir) && !fs::exists(dir / "manifest.json"))
        throw IoError("refusing to overwrite a non-empty directory without a manifest: " + dir.string());
    fs::remove_all(dir);
}

/// Writes into a sibling staging directory and renames it into place, so
/// a failed run leaves no partial output behind.
template <typename Fn>
void publish(const fs::path& target, Fn&& write) {
    const fs::path final_dir = fs::absolute(target).lexically_normal();
    fs::path staging = final_dir;
    staging += ".partial";
    try {
        fs::remove_all(staging);
        fs::create_directories(staging);
        write(staging);
        clear_target(final_dir);
        if (final_dir.has_parent_path()) fs::create_directories(final_dir.parent_path());
        fs::rename(staging, final_dir);
    } catch (const fs::filesystem_error& e) {
        std::error_code ec;
        fs::remove_all(staging, ec);
        throw IoError(e.what());
    } catch (...) {
        std::error_code ec;
        fs::remove_all(staging, ec);
        throw;
    }
}

}  // namespace detail

inline void write_archive(const Archive& a, const fs::path& dir) {
    detail::publish(dir, [&](const fs::path& out) {
        io::write_json(out / "plan.json", to_json(a.plan));
        io::write_sequence(out / "tx", a.tx, {{"scheme", io::to_json(a.plan.scheme)}});
        for (std::size_t p = 0; p < a.frame.size(); ++p)
            io::write_sequence(out / "rx" / frame_stem(p), a.frame.rx[p],
                               {{"pixel", p}, {"row", p / a.frame.width}, {"col", p % a.frame.width}});
        io::write_json(out / "ground_truth.json", io::to_json(a.truth));
        json ch = json::array();
        for (const auto& c : a.channels) ch.push_back(io::to_json(c));
        io::write_json(out / "channels.json", ch);
        json m = {{"format_version", io::format_version()},
                  {"kind", "archive"},
                  {"pixels", a.frame.size()},
                  {"height", a.frame.height},
                  {"width", a.frame.width},
                  {"n_symbols", a.tx.size()},
                  {"noise_sigma", a.noise.sigma},
                  {"seeds",
                   {{"plan", a.plan.seed},
                    {"transmit", a.plan.scheme.seed},
                    {"speckle_master", a.plan.scene.master_seed},
                    {"noise", a.noise.seed}}},
                  {"config", to_json(a.plan)}};
        m["files"] = io::digest_tree(out);
        io::write_json(out / "manifest.json", m);
    });
}

/// Verifies the manifest and reads an archive back.
inline Archive load_archive(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw IoError("archive not found: " + dir.string());
    const auto problems = io::verify_manifest(dir);
    if (!problems.empty()) {
        std::string msg = "archive failed verification:";
        for (const auto& p : problems) msg += " [" + p + "]";
        throw IoError(msg);
    }
    Archive a;
    a.manifest = io::read_json(dir / "manifest.json");
    if (a.manifest.value("kind", "") != "archive") throw IoError("not a frame archive: " + dir.string());
    a.plan = plan_from_json(io::read_json(dir / "plan.json"));
    const json& seeds = a.manifest.at("seeds");
    a.plan.scheme.seed = seeds.at("transmit").get<std::uint64_t>();
    a.plan.scene.master_seed = seeds.at("speckle_master").get<std::uint64_t>();
    a.noise.sigma = a.manifest.at("noise_sigma").get<double>();
    a.noise.seed = seeds.at("noise").get<std::uint64_t>();
    a.tx = io::read_sequence(dir / "tx");
    a.truth = io::truth_from_json(io::read_json(dir / "ground_truth.json"));
    for (const auto& c : io::read_json(dir / "channels.json")) a.channels.push_back(io::channel_from_json(c));
    a.frame.height = a.manifest.at("height").get<std::size_t>();
    a.frame.width = a.manifest.at("width").get<std::size_t>();
    const std::size_t n = a.frame.height * a.frame.width;
    if (a.truth.size() != n || a.channels.size() != n) throw IoError("archive parts disagree on the pixel count");
    a.frame.rx.resize(n);
    for (std::size_t p = 0; p < n; ++p) a.frame.rx[p] = io::read_sequence(dir / "rx" / frame_stem(p));
    try {
        a.frame.check(a.tx.size());
    } catch (const ShapeError& e) {
        throw IoError(std::string("archive is inconsistent: ") + e.what());
    }
    return a;
}

// ---------------------------------------------------------------- reconstruction

struct Reconstruction {
    Method method = Method::Joint;
    std::vector<Extraction> extractions;
    SolveStats stats;
    int delta_max = 0;
    double wall_clock_s = 0.0;
};

/// Symbol count at which a normalized frame has unit mean power per symbol.
inline constexpr double normalization_reference_symbols = 1024.0;

/// Scales a frame by one global factor so that the mean power per symbol and
/// polarization channel is N / normalization_reference_symbols. Noise-only
/// correlations then have the same magnitude at every exposure length, so the
/// penalty weights act as detection thresholds that do not depend on the
/// noise level, the received power or N. Returns the factor applied.
inline double normalize_frame(Frame& frame) {
    double energy = 0.0;
    std::size_t count = 0;
    std::size_t symbols = 0;
    for (const auto& y : frame.rx) {
        for (const auto& v : y) energy += v.squaredNorm();
        count += 2 * y.size();
        symbols = y.size();
    }
    if (count == 0 || !(energy > 0.0)) return 1.0;
    const double target = static_cast<double>(symbols) / normalization_reference_symbols;
    const double scale = std::sqrt(target / (energy / static_cast<double>(count)));
    for (auto& y : frame.rx)
        for (auto& v : y) v *= scale;
    return scale;
}

/// Runs one estimator over every pixel of a frame. Each received sequence
/// goes through the receiver projection of the scheme, then the frame is
/// normalized.
inline Reconstruction reconstruct(const DualPolSequence& tx, const Frame& frame, const SystemConfig& cfg,
                                  const ModulationScheme& scheme, Method method, const SolverParams& params,
                                  std::size_t extract_count = 1) {
    const auto start = std::chrono::steady_clock::now();
    params.validate();
    frame.check(tx.size());
    Frame seen = frame;
    for (auto& y : seen.rx) y = receiver_projection(scheme, y);
    normalize_frame(seen);

    Reconstruction r;
    r.method = method;
    r.delta_max = solver_delta_max(cfg, params);
    if (method == Method::Joint) {
        const FieldMap fields = solve_joint(tx, seen, cfg, params, &r.stats);
        r.extractions.resize(fields.size());
        parallel_for(fields.size(), params.threads,
                     [&](std::size_t p) { r.extractions[p] = extract(fields.pixels[p], cfg, extract_count); });
    } else {
        const MatchedFilter mf(tx, r.delta_max);
        const CorrelationKind kind =
            method == Method::NaiveMF ? CorrelationKind::SameChannel : CorrelationKind::AllPairs;
        r.extractions.resize(seen.size());
        parallel_for(seen.size(), params.threads, [&](std::size_t p) {
            r.extractions[p] = extract_profile(mf.profile(seen.rx[p], kind), cfg, extract_count);
        });
    }
    r.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

inline Reconstruction reconstruct(const Archive& a, const ExperimentPlan& plan) {
    return reconstruct(a.tx, a.frame, a.plan.system, a.plan.scheme, plan.method, plan.solver_params(),
                       plan.extract_count);
}

/// Fixed grey-level ranges: depth over [0, depth of the largest searched
/// delay], velocity over [-max_abs_velocity, max_abs_velocity].
inline json render_ranges(const SystemConfig& cfg, int delta_max) {
    const double vmax = cfg.max_abs_velocity > 0.0 ? cfg.max_abs_velocity : 1.0;
    return {{"depth_m", {{"lo", 0.0}, {"hi", delay_to_depth(std::max(delta_max, 1), cfg)}}},
            {"velocity_mps", {{"lo", -vmax}, {"hi", vmax}}}};
}

inline std::string layers_csv(const std::vector<Extraction>& ex) {
    std::ostringstream ss;
    ss << std::setprecision(12) << "pixel,rank,delay,depth_m,velocity_mps,score\n";
    for (std::size_t p = 0; p < ex.size(); ++p) {
        const auto all = ex[p].surfaces();
        for (std::size_t k = 0; k < all.size(); ++k)
            ss << p << ',' << k << ',' << all[k].delta << ',' << all[k].depth_m << ',' << all[k].velocity_mps << ','
               << all[k].norm << '\n';
    }
    return ss.str();
}

/// Writes extraction maps. The manifest's "timing" entry is the only
/// content that differs between identical runs.
inline void write_reconstruction(const Reconstruction& r, const Archive& a, const ExperimentPlan& plan,
                                 const std::string& archive_digest, const fs::path& dir) {
    detail::publish(dir, [&](const fs::path& out) {
        const std::size_t h = a.frame.height, w = a.frame.width;
        std::vector<double> depth(r.extractions.size()), velocity(r.extractions.size());
        for (std::size_t p = 0; p < r.extractions.size(); ++p) {
            depth[p] = r.extractions[p].depth_m;
            velocity[p] = r.extractions[p].velocity_mps;
        }
        const json ranges = render_ranges(a.plan.system, r.delta_max);
        io::write_text(out / "extraction.csv", io::extraction_csv(r.extractions, w));
        if (plan.extract_count > 1) io::write_text(out / "layers.csv", layers_csv(r.extractions));
        io::write_doubles(out / "depth", depth, {{"height", h}, {"width", w}, {"unit", "m"}});
        io::write_doubles(out / "velocity", velocity, {{"height", h}, {"width", w}, {"unit", "m/s"}});
        io::write_text(out / "depth.pgm", io::encode_pgm16(depth, h, w, ranges["depth_m"]["lo"].get<double>(),
                                                           ranges["depth_m"]["hi"].get<double>()));
        io::write_text(out / "velocity.pgm",
                       io::encode_pgm16(velocity, h, w, ranges["velocity_mps"]["lo"].get<double>(),
                                        ranges["velocity_mps"]["hi"].get<double>()));
        io::write_json(out / "render.json", {{"normalization", "linear min/max, clamped, 16-bit"}, {"ranges", ranges}});
        const SolverParams params = plan.solver_params();
        json m = {{"format_version", io::format_version()},
                  {"kind", "reconstruction"},
                  {"method", std::string(to_string(r.method))},
                  {"archive_manifest_sha256", archive_digest},
                  {"extract_count", plan.extract_count},
                  {"delta_max", r.delta_max},
                  {"solver", io::to_json(params)},
                  {"solver_seed", params.seed},
                  {"iterations",
                   {{"stage1", r.stats.stage1_iters},
                    {"stage2", r.stats.stage2_iters},
                    {"stage2_pixel_updates", r.stats.stage2_pixel_updates}}},
                  {"timing", {{"wall_clock_s", r.wall_clock_s}}}};
        m["files"] = io::digest_tree(out);
        io::write_json(out / "manifest.json", m);
    });
}

/// Overrides applied to an archived plan before reconstruction.
struct ReconstructOptions {
    std::optional<Method> method;
    std::optional<bool> static_scene;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> extract_count;
    json solver_overrides = json::object();
    std::size_t threads = 0;
};

inline ExperimentPlan apply(ExperimentPlan plan, const ReconstructOptions& o) {
    if (o.method) plan.method = *o.method;
    if (o.static_scene) plan.solver["static_scene"] = *o.static_scene;
    if (o.seed) plan.seed = *o.seed;
    if (o.extract_count) plan.extract_count = *o.extract_count;
    for (const auto& [key, value] : o.solver_overrides.items()) plan.solver[key] = value;
    plan.threads = o.threads;
    plan.validate();
    return plan;
}

/// Loads an archive, reconstructs it and writes the maps to `out`.
inline Reconstruction run_reconstruct(const fs::path& archive_dir, const ReconstructOptions& options,
                                      const fs::path& out) {
    const Archive a = load_archive(archive_dir);
    const ExperimentPlan plan = apply(a.plan, options);
    const Reconstruction r = reconstruct(a, plan);
    write_reconstruction(r, a, plan, io::sha256_file(archive_dir / "manifest.json"), out);
    return r;
}

inline Archive run_simulate(ExperimentPlan plan, const fs::path& out) {
    const Archive a = simulate(plan);
    write_archive(a, out);
    return a;
}

// ---------------------------------------------------------------- evaluation

struct Evaluation {
    MetricsReport report;
    bool velocity_requested = false;

    /// True when a requested velocity metric could not be computed.
    bool velocity_undefined() const { return velocity_requested && !report.velocity_mae_mps; }
};

inline Evaluation evaluate_maps(const std::vector<double>& depth, const std::vector<double>& velocity,
                                const GroundTruth& gt, bool plane_fit, bool velocity_metric) {
    if (depth.size() != gt.size() || velocity.size() != gt.size())
        throw ShapeError("extraction maps and ground truth differ in size");
    Evaluation e;
    e.velocity_requested = velocity_metric;
    e.report = evaluate_depth(depth, gt, plane_fit);
    for (std::size_t p = 0; p < gt.size(); ++p)
        e.report.moving_pixels += gt.surface_count_map[p] > 0 && gt.velocity_map[p] != 0.0;
    if (e.report.moving_pixels > 0) e.report.velocity_mae_mps = velocity_mae(velocity, gt);
    return e;
}

/// Scores a reconstruction directory against its archive and writes
/// metrics.json and metrics.txt into `out`.
inline Evaluation run_evaluate(const fs::path& recon_dir, const fs::path& archive_dir, const fs::path& out,
                               std::optional<bool> plane_fit = std::nullopt,
                               std::optional<bool> velocity_metric = std::nullopt) {
    if (!fs::is_directory(recon_dir)) throw IoError("reconstruction not found: " + recon_dir.string());
    const auto problems = io::verify_manifest(recon_dir);
    if (!problems.empty()) throw IoError("reconstruction failed verification: " + problems.front());
    const json rm = io::read_json(recon_dir / "manifest.json");
    if (rm.value("kind", "") != "reconstruction") throw IoError("not a reconstruction: " + recon_dir.string());
    if (!fs::is_directory(archive_dir)) throw IoError("archive not found: " + archive_dir.string());
    const auto archive_problems = io::verify_manifest(archive_dir);
    if (!archive_problems.empty()) throw IoError("archive failed verification: " + archive_problems.front());
    if (rm.at("archive_manifest_sha256").get<std::string>() != io::sha256_file(archive_dir / "manifest.json"))
        throw ConfigError("reconstruction was produced from a different archive");

    const ExperimentPlan plan = plan_from_json(io::read_json(archive_dir / "plan.json"));
    const GroundTruth gt = io::truth_from_json(io::read_json(archive_dir / "ground_truth.json"));
    const auto depth = io::read_doubles(recon_dir / "depth");
    const auto velocity = io::read_doubles(recon_dir / "velocity");
    const bool fit = plane_fit.value_or(plan.plane_fit);
    const bool vel = velocity_metric.value_or(plan.velocity_metric);
    const Evaluation e = evaluate_maps(depth, velocity, gt, fit, vel);

    const std::string method = rm.at("method").get<std::string>();
    json j = {{"format_version", io::format_version()},
              {"method", method},
              {"plane_fit", fit},
              {"velocity_requested", vel},
              {"metrics", io::to_json(e.report)}};
    if (e.velocity_undefined()) j["warnings"] = {"velocity metric requested but the scene has no moving pixels"};
    fs::create_directories(out);
    io::write_json(out / "metrics.json", j);
    io::write_text(out / "metrics.txt", io::metrics_table({{method, e.report}}));
    return e;
}

// ---------------------------------------------------------------- sweeps

struct SweepCell {
    std::size_t index = 0;
    std::string label;
    ExperimentPlan plan;
};

/// Cartesian product of the sweep axes in the order n_symbols, scheme,
/// snr_db, method, seed (last axis fastest). Each cell uses its seed-axis
/// value, or the plan seed, directly.
inline std::vector<SweepCell> sweep_cells(const ExperimentPlan& plan) {
    const SweepAxes& ax = plan.sweep;
    const auto len = [](std::size_t n) { return n == 0 ? std::size_t{1} : n; };
    const std::size_t nn = len(ax.n_symbols.size()), ns = len(ax.schemes.size()), nr = len(ax.snr_db.size()),
                      nm = len(ax.methods.size()), nd = len(ax.seeds.size());
    std::vector<SweepCell> cells;
    std::size_t index = 0;
    for (std::size_t a = 0; a < nn; ++a)
        for (std::size_t b = 0; b < ns; ++b)
            for (std::size_t c = 0; c < nr; ++c)
                for (std::size_t d = 0; d < nm; ++d)
                    for (std::size_t e = 0; e < nd; ++e) {
                        SweepCell cell;
                        cell.index = index++;
                        cell.plan = plan;
                        cell.plan.sweep = SweepAxes{};
                        std::vector<std::string> parts;
                        if (!ax.n_symbols.empty()) {
                            SystemConfig& s = cell.plan.system;
                            s.n_symbols = ax.n_symbols[a];
                            s.max_range = std::min(s.max_range, static_cast<double>(s.n_symbols) * s.depth_resolution());
                            parts.push_back("N=" + std::to_string(s.n_symbols));
                        }
                        if (!ax.schemes.empty()) {
                            cell.plan.scheme.kind = ax.schemes[b];
                            parts.emplace_back(to_string(ax.schemes[b]));
                        }
                        if (!ax.snr_db.empty()) {
                            cell.plan.snr_db = ax.snr_db[c];
                            std::ostringstream ss;
                            ss << "snr=" << ax.snr_db[c] << "dB";
                            parts.push_back(ss.str());
                        }
                        if (!ax.methods.empty()) {
                            cell.plan.method = ax.methods[d];
                            parts.emplace_back(to_string(ax.methods[d]));
                        }
                        if (!ax.seeds.empty()) {
                            cell.plan.seed = ax.seeds[e];
                            parts.push_back("seed=" + std::to_string(ax.seeds[e]));
                        }
                        for (const auto& p : parts) cell.label += (cell.label.empty() ? "" : "/") + p;
                        if (cell.label.empty()) cell.label = std::string(to_string(cell.plan.method));
                        cells.push_back(std::move(cell));
                    }
    return cells;
}

inline std::string cell_dir_name(std::size_t index) {
    std::string digits = std::to_string(index);
    if (digits.size() < 4) digits.insert(0, 4 - digits.size(), '0');
    return "cell_" + digits;
}

/// Exit status of a failed run by error class: 1 configuration or usage,
/// 2 input/output, 3 solver, 4 undefined metric.
inline int exit_code_for(const std::exception_ptr& error) {
    try {
        std::rethrow_exception(error);
    } catch (const IoError&) {
        return 2;
    } catch (const fs::filesystem_error&) {
        return 2;
    } catch (const SolverError&) {
        return 3;
    } catch (const NoSurfaceError&) {
        return 3;
    } catch (const MetricError&) {
        return 4;
    } catch (...) {
        return 1;
    }
}

struct SweepResult {
    json summary;
    int exit_code = 0;
};

/// One simulate, reconstruct and evaluate per cell, written under
/// out/cells/cell_NNNN/{archive,reconstruction}, plus sweep.json,
/// sweep.txt and a manifest over both. Failed cells are recorded and set
/// the exit code (the first failing cell's).
inline SweepResult run_sweep(const ExperimentPlan& plan, const fs::path& out, std::size_t threads = 0) {
    plan.validate();
    const auto cells = sweep_cells(plan);
    struct Outcome {
        int code = 0;
        std::string error;
        std::optional<Evaluation> eval;
    };
    std::vector<Outcome> outcomes(cells.size());
    const std::size_t workers = threads == 0 ? default_thread_count() : threads;
    const std::size_t inner = cells.size() > 1 ? 1 : workers;
    const fs::path root = fs::absolute(out).lexically_normal();
    detail::clear_target(root);
    fs::create_directories(root / "cells");

    parallel_for(cells.size(), std::min(workers, cells.size()), [&](std::size_t c) {
        const fs::path dir = root / "cells" / cell_dir_name(c);
        try {
            ExperimentPlan cp = cells[c].plan;
            cp.threads = inner;
            run_simulate(cp, dir / "archive");
            ReconstructOptions o;
            o.threads = inner;
            run_reconstruct(dir / "archive", o, dir / "reconstruction");
            Evaluation e = run_evaluate(dir / "reconstruction", dir / "archive", dir / "reconstruction");
            outcomes[c].eval = e;
            if (e.velocity_undefined()) outcomes[c].code = 4;
        } catch (const std::exception& ex) {
            outcomes[c].code = exit_code_for(std::current_exception());
            outcomes[c].error = ex.what();
        }
    });

    SweepResult res;
    json list = json::array();
    std::vector<std::pair<std::string, MetricsReport>> rows;
    for (std::size_t c = 0; c < cells.size(); ++c) {
        const auto& cp = cells[c].plan;
        json row = {{"index", c},
                    {"label", cells[c].label},
                    {"directory", "cells/" + cell_dir_name(c)},
                    {"n_symbols", cp.system.n_symbols},
                    {"scheme", std::string(to_string(cp.scheme.kind))},
                    {"method", std::string(to_string(cp.method))},
                    {"seed", cp.seed},
                    {"exit_code", outcomes[c].code}};
        row["snr_db"] = cp.snr_db ? json(*cp.snr_db) : json(nullptr);
        if (outcomes[c].eval) {
            row["metrics"] = io::to_json(outcomes[c].eval->report);
            rows.emplace_back(cells[c].label, outcomes[c].eval->report);
        }
        row["status"] = outcomes[c].error.empty() ? "ok" : "failed";
        if (!outcomes[c].error.empty()) row["error"] = outcomes[c].error;
        if (res.exit_code == 0) res.exit_code = outcomes[c].code;
        list.push_back(row);
    }
    res.summary = {{"format_version", io::format_version()}, {"plan", to_json(plan)}, {"cells", list}};
    io::write_json(root / "sweep.json", res.summary);
    io::write_text(root / "sweep.txt", io::metrics_table(rows));
    json m = {{"format_version", io::format_version()},
              {"kind", "sweep"},
              {"cells", cells.size()},
              {"files",
               {{"sweep.json", io::sha256_file(root / "sweep.json")},
                {"sweep.txt", io::sha256_file(root / "sweep.txt")}}}};
    io::write_json(root / "manifest.json", m);
    return res;
}

}  // namespace fwl::pipeline
