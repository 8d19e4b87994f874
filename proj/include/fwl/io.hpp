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

// File formats.
//
// Configuration and metadata are JSON in SI units. Symbol sequences are
// little-endian float32 records (re0, im0, re1, im1), one per symbol, with
// a JSON sidecar. Archives carry a manifest listing SHA-256 digests of
// every file and a "major.minor" format version.

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "fwl/channel.hpp"
#include "fwl/core.hpp"
#include "fwl/metrics.hpp"
#include "fwl/modulation.hpp"
#include "fwl/reconstruction/extract.hpp"
#include "fwl/reconstruction/solver.hpp"
#include "fwl/scenes.hpp"

namespace fwl::io {

using json = nlohmann::json;
namespace fs = std::filesystem;

inline constexpr int format_major = 1;
inline constexpr int format_minor = 0;

inline std::string format_version() { return std::to_string(format_major) + "." + std::to_string(format_minor); }

/// Rejects manifests written by a newer major format.
inline void check_format_version(const json& manifest) {
    if (!manifest.contains("format_version") || !manifest["format_version"].is_string())
        throw IoError("manifest has no format_version");
    const std::string v = manifest["format_version"].get<std::string>();
    int major = 0;
    try {
        major = std::stoi(v.substr(0, v.find('.')));
    } catch (const std::exception&) {
        throw IoError("malformed format_version '" + v + "'");
    }
    if (major > format_major)
        throw IoError("archive format " + v + " is newer than supported " + format_version());
}

// ---------------------------------------------------------------- files

inline std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed for " + path.string());
}

inline json read_json(const fs::path& path) {
    try {
        return json::parse(read_text(path));
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

inline void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

inline std::string sha256_hex(const std::string& bytes) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
        throw IoError("SHA-256 computation failed");
    std::ostringstream ss;
    for (unsigned int i = 0; i < len; ++i) ss << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
    return ss.str();
}

inline std::string sha256_file(const fs::path& path) { return sha256_hex(read_text(path)); }

/// Digests of every regular file under `root` except `skip`, keyed by the
/// generic relative path, in sorted order.
inline json digest_tree(const fs::path& root, const std::vector<std::string>& skip = {"manifest.json"}) {
    std::vector<std::string> names;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) {
            const std::string rel = fs::relative(e.path(), root).generic_string();
            if (std::find(skip.begin(), skip.end(), rel) == skip.end()) names.push_back(rel);
        }
    std::sort(names.begin(), names.end());
    json out = json::object();
    for (const auto& n : names) out[n] = sha256_file(root / n);
    return out;
}

/// Compares the digests in manifest["files"] with the files on disk and
/// returns the list of problems (empty when the archive verifies).
inline std::vector<std::string> verify_manifest(const fs::path& root) {
    const json manifest = read_json(root / "manifest.json");
    check_format_version(manifest);
    std::vector<std::string> problems;
    if (!manifest.contains("files")) {
        problems.push_back("manifest lists no files");
        return problems;
    }
    for (const auto& [name, digest] : manifest["files"].items()) {
        const fs::path p = root / name;
        if (!fs::exists(p)) {
            problems.push_back("missing " + name);
            continue;
        }
        if (sha256_file(p) != digest.get<std::string>()) problems.push_back("digest mismatch " + name);
    }
    return problems;
}

// ---------------------------------------------------------------- binary sequences

namespace detail {

inline void put_f32(std::string& out, double v) {
    const auto f = static_cast<float>(v);
    auto bits = std::bit_cast<std::uint32_t>(f);
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xFFu));
}

inline double get_f32(const std::string& in, std::size_t off) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[off + b])) << (8 * b);
    return static_cast<double>(std::bit_cast<float>(bits));
}

inline void put_f64(std::string& out, double v) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xFFu));
}

inline double get_f64(const std::string& in, std::size_t off) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[off + b])) << (8 * b);
    return std::bit_cast<double>(bits);
}

}  // namespace detail

inline std::string encode_sequence(const DualPolSequence& seq) {
    std::string out;
    out.reserve(seq.size() * 16);
    for (const auto& s : seq) {
        detail::put_f32(out, s(0).real());
        detail::put_f32(out, s(0).imag());
        detail::put_f32(out, s(1).real());
        detail::put_f32(out, s(1).imag());
    }
    return out;
}

inline DualPolSequence decode_sequence(const std::string& bytes) {
    if (bytes.size() % 16 != 0) throw IoError("sequence file size is not a multiple of 16 bytes");
    DualPolSequence seq(bytes.size() / 16);
    for (std::size_t n = 0; n < seq.size(); ++n) {
        const std::size_t o = 16 * n;
        seq[n](0) = cplx(detail::get_f32(bytes, o), detail::get_f32(bytes, o + 4));
        seq[n](1) = cplx(detail::get_f32(bytes, o + 8), detail::get_f32(bytes, o + 12));
    }
    return seq;
}

/// Writes `<stem>.bin` and `<stem>.json`; the sidecar gets "length" and
/// "encoding" added to `meta`.
inline void write_sequence(const fs::path& stem, const DualPolSequence& seq, json meta = json::object()) {
    meta["length"] = seq.size();
    meta["encoding"] = "f32le re0 im0 re1 im1";
    write_text(fs::path(stem.string() + ".bin"), encode_sequence(seq));
    write_json(fs::path(stem.string() + ".json"), meta);
}

inline DualPolSequence read_sequence(const fs::path& stem) {
    const fs::path sidecar(stem.string() + ".json");
    DualPolSequence seq = decode_sequence(read_text(fs::path(stem.string() + ".bin")));
    if (fs::exists(sidecar)) {
        const json meta = read_json(sidecar);
        if (meta.contains("length") && meta["length"].get<std::size_t>() != seq.size())
            throw IoError("sequence length disagrees with its sidecar: " + stem.string());
    }
    if (!seq.all_finite()) throw IoError("sequence contains non-finite values: " + stem.string());
    return seq;
}

inline std::string sequence_csv(const DualPolSequence& seq) {
    std::ostringstream ss;
    ss << std::setprecision(9) << "n,re0,im0,re1,im1\n";
    for (std::size_t n = 0; n < seq.size(); ++n)
        ss << n << ',' << seq[n](0).real() << ',' << seq[n](0).imag() << ',' << seq[n](1).real() << ','
           << seq[n](1).imag() << '\n';
    return ss.str();
}

/// Little-endian float64 array with a JSON sidecar.
inline void write_doubles(const fs::path& stem, const std::vector<double>& v, json meta = json::object()) {
    std::string bytes;
    bytes.reserve(8 * v.size());
    for (double x : v) detail::put_f64(bytes, x);
    meta["length"] = v.size();
    meta["encoding"] = "f64le";
    write_text(fs::path(stem.string() + ".bin"), bytes);
    write_json(fs::path(stem.string() + ".json"), meta);
}

inline std::vector<double> read_doubles(const fs::path& stem) {
    const std::string bytes = read_text(fs::path(stem.string() + ".bin"));
    if (bytes.size() % 8 != 0) throw IoError("float64 file size is not a multiple of 8 bytes");
    std::vector<double> v(bytes.size() / 8);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = detail::get_f64(bytes, 8 * i);
    return v;
}

// ---------------------------------------------------------------- images

/// Binary 16-bit PGM (big-endian samples). Values map linearly from
/// [lo, hi] to [0, 65535] with clamping; NaN maps to 0.
inline std::string encode_pgm16(const std::vector<double>& v, std::size_t h, std::size_t w, double lo, double hi) {
    if (v.size() != h * w) throw ShapeError("image data does not match its dimensions");
    if (!(hi > lo)) throw ConfigError("image range must satisfy hi > lo");
    std::string out = "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n65535\n";
    for (double x : v) {
        double t = std::isfinite(x) ? (x - lo) / (hi - lo) : 0.0;
        t = std::clamp(t, 0.0, 1.0);
        const auto q = static_cast<std::uint16_t>(std::lround(t * 65535.0));
        out.push_back(static_cast<char>(q >> 8));
        out.push_back(static_cast<char>(q & 0xFF));
    }
    return out;
}

// ---------------------------------------------------------------- JSON schema

namespace detail {

template <typename T>
void get_opt(const json& j, const char* key, T& out) {
    if (j.contains(key) && !j[key].is_null()) out = j[key].get<T>();
}

inline json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline double number_or_nan(const json& j) {
    return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

inline std::string convention_name(VelocityConvention c) {
    return c == VelocityConvention::Printed ? "printed" : "round_trip";
}

}  // namespace detail

inline json to_json(const SystemConfig& c) {
    return {{"symbol_rate", c.symbol_rate},
            {"carrier_wavelength", c.carrier_wavelength},
            {"n_symbols", c.n_symbols},
            {"delta_min", c.delta_min},
            {"max_range", c.max_range},
            {"max_abs_velocity", c.max_abs_velocity},
            {"doppler_bin_count", c.doppler_bin_count},
            {"internal_reflection_delays", c.internal_reflection_delays},
            {"internal_reflection_amplitudes", c.internal_reflection_amplitudes},
            {"velocity_convention", detail::convention_name(c.velocity_convention)}};
}

inline SystemConfig system_from_json(const json& j) {
    SystemConfig c;
    detail::get_opt(j, "symbol_rate", c.symbol_rate);
    detail::get_opt(j, "carrier_wavelength", c.carrier_wavelength);
    detail::get_opt(j, "n_symbols", c.n_symbols);
    detail::get_opt(j, "delta_min", c.delta_min);
    detail::get_opt(j, "max_range", c.max_range);
    detail::get_opt(j, "max_abs_velocity", c.max_abs_velocity);
    detail::get_opt(j, "doppler_bin_count", c.doppler_bin_count);
    detail::get_opt(j, "internal_reflection_delays", c.internal_reflection_delays);
    detail::get_opt(j, "internal_reflection_amplitudes", c.internal_reflection_amplitudes);
    if (j.contains("velocity_convention")) {
        const auto v = j["velocity_convention"].get<std::string>();
        if (v == "printed")
            c.velocity_convention = VelocityConvention::Printed;
        else if (v == "round_trip")
            c.velocity_convention = VelocityConvention::RoundTrip;
        else
            throw ConfigError("unknown velocity_convention '" + v + "'");
    }
    c.validate();
    return c;
}

inline json to_json(const ModulationScheme& s) {
    return {{"kind", std::string(to_string(s.kind))}, {"seed", s.seed}, {"power_per_pol", s.power_per_pol}};
}

inline ModulationScheme scheme_from_json(const json& j) {
    ModulationScheme s;
    if (j.contains("kind")) s.kind = scheme_from_string(j["kind"].get<std::string>());
    detail::get_opt(j, "seed", s.seed);
    detail::get_opt(j, "power_per_pol", s.power_per_pol);
    if (!(s.power_per_pol >= 0.0)) throw ConfigError("power_per_pol must be nonnegative");
    return s;
}

inline json to_json(const SolverParams& p) {
    return {{"lambda_sparse", p.lambda_sparse}, {"lambda_tv", p.lambda_tv},
            {"learning_rate", p.learning_rate}, {"stage1_iters", p.stage1_iters},
            {"stage2_iters", p.stage2_iters},   {"batch_pixels", p.batch_pixels},
            {"static_scene", p.static_scene},   {"tv_on_static_only", p.tv_on_static_only},
            {"max_depth", p.max_depth},         {"beta1", p.beta1},
            {"beta2", p.beta2},                 {"epsilon", p.epsilon}};
}

/// Solver settings; lambda_sparse defaults to 0.1 for static scenes and
/// 0.3 otherwise when not given.
inline SolverParams solver_from_json(const json& j) {
    bool is_static = false;
    detail::get_opt(j, "static_scene", is_static);
    SolverParams p = SolverParams::defaults(is_static);
    detail::get_opt(j, "lambda_sparse", p.lambda_sparse);
    detail::get_opt(j, "lambda_tv", p.lambda_tv);
    detail::get_opt(j, "learning_rate", p.learning_rate);
    detail::get_opt(j, "stage1_iters", p.stage1_iters);
    detail::get_opt(j, "stage2_iters", p.stage2_iters);
    detail::get_opt(j, "batch_pixels", p.batch_pixels);
    detail::get_opt(j, "tv_on_static_only", p.tv_on_static_only);
    detail::get_opt(j, "max_depth", p.max_depth);
    detail::get_opt(j, "beta1", p.beta1);
    detail::get_opt(j, "beta2", p.beta2);
    detail::get_opt(j, "epsilon", p.epsilon);
    p.validate();
    return p;
}

inline json to_json(const Surface& s) {
    json j = {{"kind", s.kind == SurfaceKind::Plane ? "plane" : "disk"},
              {"reflectance", s.reflectance},
              {"opaque", s.opaque},
              {"tilt", s.tilt}};
    if (s.kind == SurfaceKind::Plane) {
        j["distance"] = s.distance;
        json bounds = json::object();
        if (std::isfinite(s.x_min)) bounds["x_min"] = s.x_min;
        if (std::isfinite(s.x_max)) bounds["x_max"] = s.x_max;
        if (std::isfinite(s.y_min)) bounds["y_min"] = s.y_min;
        if (std::isfinite(s.y_max)) bounds["y_max"] = s.y_max;
        if (!bounds.empty()) j["bounds"] = bounds;
    } else {
        j["center"] = {s.center.x(), s.center.y(), s.center.z()};
        j["radius"] = s.radius;
        j["rim_speed"] = s.rim_speed;
    }
    return j;
}

inline Surface surface_from_json(const json& j) {
    Surface s;
    const std::string kind = j.value("kind", "plane");
    if (kind == "plane") {
        s.kind = SurfaceKind::Plane;
        detail::get_opt(j, "distance", s.distance);
        if (j.contains("bounds")) {
            const json& b = j["bounds"];
            detail::get_opt(b, "x_min", s.x_min);
            detail::get_opt(b, "x_max", s.x_max);
            detail::get_opt(b, "y_min", s.y_min);
            detail::get_opt(b, "y_max", s.y_max);
        }
    } else if (kind == "disk") {
        s.kind = SurfaceKind::Disk;
        if (j.contains("center")) {
            const auto c = j["center"].get<std::vector<double>>();
            if (c.size() != 3) throw ConfigError("disk center needs three coordinates");
            s.center = Vec3(c[0], c[1], c[2]);
        }
        detail::get_opt(j, "radius", s.radius);
        detail::get_opt(j, "rim_speed", s.rim_speed);
    } else {
        throw ConfigError("unknown surface kind '" + kind + "'");
    }
    detail::get_opt(j, "tilt", s.tilt);
    detail::get_opt(j, "reflectance", s.reflectance);
    detail::get_opt(j, "opaque", s.opaque);
    return s;
}

inline json to_json(const SceneSpec& s) {
    json surfaces = json::array();
    for (const auto& x : s.surfaces) surfaces.push_back(to_json(x));
    return {{"kind", std::string(to_string(s.kind))},
            {"grid", {{"height", s.grid.height}, {"width", s.grid.width}, {"angular_step", s.grid.angular_step}}},
            {"speckle", s.speckle == SpeckleKind::FullyScrambling ? "fully_scrambling" : "unitary_rotation"},
            {"surfaces", surfaces}};
}

/// Scene description. "plane", "spinning_disk" and "two_layer" accept
/// their shorthand parameters; "composite" lists surfaces explicitly.
inline SceneSpec scene_from_json(const json& j) {
    const std::string kind = j.value("kind", "plane");
    SceneSpec s;
    if (kind == "plane") {
        s = SceneSpec::plane(j.value("distance", 1.0), j.value("tilt", 0.0), j.value("reflectance", 1.0));
    } else if (kind == "spinning_disk") {
        std::vector<double> c = j.value("center", std::vector<double>{0.0, 0.0, 1.0});
        if (c.size() != 3) throw ConfigError("disk center needs three coordinates");
        s = SceneSpec::spinning_disk(Vec3(c[0], c[1], c[2]), j.value("radius", 0.1), j.value("rim_speed", 10.0),
                                     j.value("tilt", 0.0), j.value("reflectance", 1.0));
    } else if (kind == "two_layer") {
        s = SceneSpec::two_layer(j.value("front", 1.0), j.value("back", 1.5), j.value("front_reflectance", 0.3));
    } else if (kind == "composite") {
        std::vector<Surface> parts;
        if (j.contains("surfaces"))
            for (const auto& x : j["surfaces"]) parts.push_back(surface_from_json(x));
        s = SceneSpec::composite(std::move(parts));
    } else {
        throw ConfigError("unknown scene kind '" + kind + "'");
    }
    if (j.contains("surfaces") && kind != "composite") {
        s.surfaces.clear();
        for (const auto& x : j["surfaces"]) s.surfaces.push_back(surface_from_json(x));
    }
    if (j.contains("grid")) {
        const json& g = j["grid"];
        detail::get_opt(g, "height", s.grid.height);
        detail::get_opt(g, "width", s.grid.width);
        detail::get_opt(g, "angular_step", s.grid.angular_step);
    }
    const std::string speckle = j.value("speckle", "fully_scrambling");
    if (speckle == "fully_scrambling")
        s.speckle = SpeckleKind::FullyScrambling;
    else if (speckle == "unitary_rotation")
        s.speckle = SpeckleKind::UnitaryRotation;
    else
        throw ConfigError("unknown speckle model '" + speckle + "'");
    return s;
}

inline json to_json(const JonesMatrix& m) {
    json a = json::array();
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) {
            a.push_back(m(r, c).real());
            a.push_back(m(r, c).imag());
        }
    return a;
}

inline JonesMatrix jones_from_json(const json& j) {
    const auto v = j.get<std::vector<double>>();
    if (v.size() != 8) throw ConfigError("a Jones matrix needs 8 numbers");
    JonesMatrix m;
    for (int k = 0; k < 4; ++k) m(k / 2, k % 2) = cplx(v[2 * k], v[2 * k + 1]);
    return m;
}

inline json to_json(const ChannelRealization& ch) {
    json echoes = json::array();
    for (const auto& e : ch.echoes)
        echoes.push_back({{"delay", e.delay}, {"doppler", e.doppler}, {"jones", to_json(e.jones)}});
    return {{"echoes", echoes}, {"noise", {{"sigma", ch.noise.sigma}, {"seed", ch.noise.seed}}}};
}

inline ChannelRealization channel_from_json(const json& j) {
    ChannelRealization ch;
    if (j.contains("echoes"))
        for (const auto& e : j["echoes"]) {
            EchoPath p;
            p.delay = e.at("delay").get<int>();
            p.doppler = e.value("doppler", 0.0);
            p.jones = e.contains("jones") ? jones_from_json(e["jones"]) : JonesMatrix::Identity();
            ch.echoes.push_back(p);
        }
    if (j.contains("noise")) {
        detail::get_opt(j["noise"], "sigma", ch.noise.sigma);
        detail::get_opt(j["noise"], "seed", ch.noise.seed);
    }
    return ch;
}

inline json to_json(const GroundTruth& gt) {
    json depth = json::array(), layers = json::array();
    for (double d : gt.depth_map) depth.push_back(detail::finite_or_null(d));
    for (const auto& px : gt.layers) {
        json l = json::array();
        for (const auto& x : px)
            l.push_back({{"depth_m", x.depth_m},
                         {"velocity_mps", x.velocity_mps},
                         {"reflectance", x.reflectance},
                         {"delay", x.delay},
                         {"doppler", x.doppler}});
        layers.push_back(l);
    }
    return {{"height", gt.height},       {"width", gt.width},
            {"depth_m", depth},          {"velocity_mps", gt.velocity_map},
            {"surface_count", gt.surface_count_map}, {"layers", layers}};
}

inline GroundTruth truth_from_json(const json& j) {
    GroundTruth gt;
    gt.height = j.at("height").get<std::size_t>();
    gt.width = j.at("width").get<std::size_t>();
    for (const auto& d : j.at("depth_m")) gt.depth_map.push_back(detail::number_or_nan(d));
    gt.velocity_map = j.at("velocity_mps").get<std::vector<double>>();
    gt.surface_count_map = j.at("surface_count").get<std::vector<int>>();
    for (const auto& px : j.at("layers")) {
        std::vector<LayerTruth> v;
        for (const auto& x : px) {
            LayerTruth l;
            l.depth_m = x.at("depth_m").get<double>();
            l.velocity_mps = x.at("velocity_mps").get<double>();
            l.reflectance = x.at("reflectance").get<double>();
            l.delay = x.at("delay").get<int>();
            l.doppler = x.at("doppler").get<double>();
            v.push_back(l);
        }
        gt.layers.push_back(std::move(v));
    }
    const std::size_t n = gt.height * gt.width;
    if (gt.depth_map.size() != n || gt.velocity_map.size() != n || gt.surface_count_map.size() != n ||
        gt.layers.size() != n)
        throw ShapeError("ground truth arrays do not match its dimensions");
    return gt;
}

inline json to_json(const MetricsReport& r) {
    return {{"mean_depth_error_mm", r.mean_depth_error_mm},
            {"pct_within_2mm", r.pct_within_2mm},
            {"pct_within_6mm", r.pct_within_6mm},
            {"outlier_fraction", r.outlier_fraction},
            {"velocity_mae_mps", r.velocity_mae_mps ? json(*r.velocity_mae_mps) : json(nullptr)},
            {"velocity_defined", r.velocity_mae_mps.has_value()},
            {"valid_pixels", r.valid_pixels},
            {"moving_pixels", r.moving_pixels}};
}

inline MetricsReport metrics_from_json(const json& j) {
    MetricsReport r;
    r.mean_depth_error_mm = j.at("mean_depth_error_mm").get<double>();
    r.pct_within_2mm = j.at("pct_within_2mm").get<double>();
    r.pct_within_6mm = j.at("pct_within_6mm").get<double>();
    r.outlier_fraction = j.at("outlier_fraction").get<double>();
    if (j.contains("velocity_mae_mps") && !j["velocity_mae_mps"].is_null())
        r.velocity_mae_mps = j["velocity_mae_mps"].get<double>();
    detail::get_opt(j, "valid_pixels", r.valid_pixels);
    detail::get_opt(j, "moving_pixels", r.moving_pixels);
    return r;
}

/// CSV of an extraction map: pixel, row, col, depth_m, velocity_mps,
/// jones_frobenius, one line per pixel.
inline std::string extraction_csv(const std::vector<Extraction>& ex, std::size_t width) {
    std::ostringstream ss;
    ss << std::setprecision(12) << "pixel,row,col,depth_m,velocity_mps,jones_frobenius\n";
    for (std::size_t p = 0; p < ex.size(); ++p)
        ss << p << ',' << p / width << ',' << p % width << ',' << ex[p].depth_m << ',' << ex[p].velocity_mps << ','
           << ex[p].jones_star.norm() << '\n';
    return ss.str();
}

/// One row per labelled report, aligned columns.
inline std::string metrics_table(const std::vector<std::pair<std::string, MetricsReport>>& rows) {
    std::size_t label = 6;
    for (const auto& r : rows) label = std::max(label, r.first.size());
    std::ostringstream ss;
    ss << std::left << std::setw(static_cast<int>(label)) << "method" << std::right << std::setw(14)
       << "mean_err_mm" << std::setw(12) << "<2mm_%" << std::setw(12) << "<6mm_%" << std::setw(12) << "outliers"
       << std::setw(14) << "vel_mae_mps" << '\n';
    ss << std::fixed;
    for (const auto& [name, m] : rows) {
        ss << std::left << std::setw(static_cast<int>(label)) << name << std::right << std::setprecision(3)
           << std::setw(14) << m.mean_depth_error_mm << std::setprecision(2) << std::setw(12) << m.pct_within_2mm
           << std::setw(12) << m.pct_within_6mm << std::setprecision(4) << std::setw(12) << m.outlier_fraction;
        if (m.velocity_mae_mps)
            ss << std::setprecision(4) << std::setw(14) << *m.velocity_mae_mps;
        else
            ss << std::setw(14) << "n/a";
        ss << '\n';
    }
    return ss.str();
}

}  // namespace fwl::io
