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

// fwl: simulate, reconstruct, evaluate, sweep and verify from the shell.
//
// Exit codes: 0 success, 1 configuration or usage error, 2 input/output
// error, 3 solver failure, 4 undefined metric (warning).

#include <CLI11.hpp>

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "fwl/pipeline.hpp"

namespace {

using namespace fwl;
using fwl::pipeline::json;
namespace fs = std::filesystem;

struct SolverFlags {
    std::optional<double> lambda_sparse, lambda_tv, learning_rate, max_depth;
    std::optional<std::size_t> stage1_iters, stage2_iters, batch_pixels;

    void add(CLI::App* cmd) {
        cmd->add_option("--lambda-sparse", lambda_sparse, "Group sparsity weight");
        cmd->add_option("--lambda-tv", lambda_tv, "Total variation weight");
        cmd->add_option("--learning-rate", learning_rate, "Adam step size");
        cmd->add_option("--max-depth", max_depth, "Largest searched depth in meters");
        cmd->add_option("--stage1-iters", stage1_iters, "Per-pixel iterations");
        cmd->add_option("--stage2-iters", stage2_iters, "Spatially coupled iterations");
        cmd->add_option("--batch-pixels", batch_pixels, "Pixels sampled per stage-2 iteration");
    }

    json overrides() const {
        json j = json::object();
        if (lambda_sparse) j["lambda_sparse"] = *lambda_sparse;
        if (lambda_tv) j["lambda_tv"] = *lambda_tv;
        if (learning_rate) j["learning_rate"] = *learning_rate;
        if (max_depth) j["max_depth"] = *max_depth;
        if (stage1_iters) j["stage1_iters"] = *stage1_iters;
        if (stage2_iters) j["stage2_iters"] = *stage2_iters;
        if (batch_pixels) j["batch_pixels"] = *batch_pixels;
        return j;
    }
};

int report_failure(const std::exception& e) {
    const int code = pipeline::exit_code_for(std::current_exception());
    std::cerr << "fwl: error: " << e.what() << '\n';
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Full-wavefield lidar simulation and reconstruction"};
    app.require_subcommand(1);
    std::size_t threads = 0;
    app.add_option("--threads", threads, "Worker threads (default: $FWL_THREADS or all cores)");

    std::string config, out, method_name;
    std::optional<std::uint64_t> seed;
    bool static_scene = false;
    SolverFlags solver;

    auto* simulate = app.add_subcommand("simulate", "Simulate a frame archive from a plan");
    simulate->add_option("--config", config, "Plan JSON")->required()->check(CLI::ExistingFile);
    simulate->add_option("--seed", seed, "Override the plan seed");
    simulate->add_option("--out", out, "Archive directory (default: plan output_dir)");
    simulate->add_option("--threads", threads, "Worker threads");

    std::string archive, recon;
    std::optional<std::size_t> extract_count;
    auto* reconstruct = app.add_subcommand("reconstruct", "Estimate depth and velocity maps from an archive");
    reconstruct->add_option("archive", archive, "Archive directory")->required();
    reconstruct->add_option("--method", method_name, "naive_mf, generalized_mf or joint (default: plan method)");
    reconstruct->add_option("--out", out, "Output directory (default: <archive>-<method>)");
    reconstruct->add_option("--seed", seed, "Override the solver seed");
    reconstruct->add_flag("--static", static_scene, "Static scene: collapse the Doppler grid to zero");
    reconstruct->add_option("--extract-count", extract_count, "Surfaces extracted per pixel");
    reconstruct->add_option("--threads", threads, "Worker threads");
    solver.add(reconstruct);

    std::optional<bool> plane_fit;
    bool velocity = false;
    auto* evaluate = app.add_subcommand("evaluate", "Score a reconstruction against its archive");
    evaluate->add_option("reconstruction", recon, "Reconstruction directory")->required();
    evaluate->add_option("--archive", archive, "Archive directory")->required();
    evaluate->add_option("--out", out, "Report directory (default: the reconstruction directory)");
    evaluate->add_flag("--plane-fit,!--no-plane-fit", plane_fit, "Measure deviation from a fitted plane");
    evaluate->add_flag("--velocity", velocity, "Request the velocity metric");

    auto* sweep = app.add_subcommand("sweep", "Run every cell of a plan's sweep axes");
    sweep->add_option("--config", config, "Plan JSON with sweep axes")->required()->check(CLI::ExistingFile);
    sweep->add_option("--seed", seed, "Override the plan seed");
    sweep->add_option("--out", out, "Sweep directory (default: plan output_dir)");
    sweep->add_option("--threads", threads, "Worker threads");

    std::string target;
    auto* verify = app.add_subcommand("verify", "Check a directory against its manifest");
    verify->add_option("directory", target, "Archive, reconstruction or sweep directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (simulate->parsed()) {
            pipeline::ExperimentPlan plan = pipeline::read_plan(config);
            if (seed) plan.seed = *seed;
            plan.threads = threads;
            const fs::path dir = out.empty() ? plan.output_dir : fs::path(out);
            const auto a = pipeline::run_simulate(plan, dir);
            std::cout << "archive " << dir.string() << ": " << a.frame.size() << " frames of " << a.tx.size()
                      << " symbols, noise sigma " << a.noise.sigma << '\n';
            return 0;
        }
        if (reconstruct->parsed()) {
            pipeline::ReconstructOptions o;
            if (!method_name.empty()) o.method = pipeline::method_from_string(method_name);
            if (static_scene) o.static_scene = true;
            o.seed = seed;
            o.extract_count = extract_count;
            o.solver_overrides = solver.overrides();
            o.threads = threads;
            fs::path dir = out;
            if (dir.empty()) {
                const fs::path a = fs::path(archive).lexically_normal();
                const std::string name = a.filename().empty() ? a.parent_path().filename().string() : a.filename().string();
                const std::string m = method_name.empty() ? "recon" : method_name;
                dir = (a.filename().empty() ? a.parent_path() : a).parent_path() / (name + "-" + m);
            }
            const auto r = pipeline::run_reconstruct(archive, o, dir);
            std::cout << "reconstruction " << dir.string() << ": " << pipeline::to_string(r.method) << ", "
                      << r.extractions.size() << " pixels, " << r.wall_clock_s << " s\n";
            return 0;
        }
        if (evaluate->parsed()) {
            const fs::path dir = out.empty() ? fs::path(recon) : fs::path(out);
            std::optional<bool> vel;
            if (velocity) vel = true;
            const auto e = pipeline::run_evaluate(recon, archive, dir, plane_fit, vel);
            std::cout << io::read_text(dir / "metrics.txt");
            if (e.velocity_undefined()) {
                std::cerr << "fwl: warning: velocity metric is undefined (no moving pixels)\n";
                return 4;
            }
            return 0;
        }
        if (sweep->parsed()) {
            pipeline::ExperimentPlan plan = pipeline::read_plan(config);
            if (seed) plan.seed = *seed;
            const fs::path dir = out.empty() ? plan.output_dir : fs::path(out);
            const auto res = pipeline::run_sweep(plan, dir, threads);
            std::cout << io::read_text(dir / "sweep.txt");
            for (const auto& c : res.summary["cells"])
                if (c["status"] == "failed")
                    std::cerr << "fwl: cell " << c["label"].get<std::string>() << " failed: "
                              << c["error"].get<std::string>() << '\n';
            return res.exit_code;
        }
        if (verify->parsed()) {
            if (!fs::exists(fs::path(target) / "manifest.json")) throw IoError("no manifest in " + target);
            const auto problems = io::verify_manifest(target);
            for (const auto& p : problems) std::cout << p << '\n';
            if (!problems.empty()) {
                std::cerr << "fwl: verification failed: " << problems.size() << " problem(s)\n";
                return 2;
            }
            std::cout << "ok\n";
            return 0;
        }
    } catch (const std::exception& e) {
        return report_failure(e);
    }
    return 1;
}
