// SPDX-License-Identifier: Apache-2.0
//
// nffocus: sparse near-field focused planar array synthesis
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

// nff: command-line front end.
//
//   nff synthesize --config FILE --out DIR [--overwrite] [--s-max N] [--rho-sll-db X] [--trace] [--dump-problem]
//   nff baseline   --config FILE --out DIR [--overwrite] [--rho-sll-db X] [--dump-problem]
//   nff sweep      --config FILE --out DIR [--overwrite] [--s-max-list 2,4,...] [--jobs N]
//   nff evaluate   --config FILE --weights FILE --out DIR [--overwrite]
//
// Exit codes: 0 ok, 1 other failure (e.g. undefined metric), 2 invalid
// configuration or input, 3 infeasible, 4 I/O error.
//
// Outputs are written to a staging directory next to DIR and moved into
// place only after every file has been written, so a failed run leaves no
// partial results behind.
//
// NFF_LOG selects the verbosity: off, error, warn, info (default), debug.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "nff/config.hpp"
#include "nff/io.hpp"
#include "nff/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

enum ExitCode : int { kOk = 0, kOther = 1, kInvalid = 2, kInfeasible = 3, kIo = 4 };

struct Options {
    std::string config;
    std::string out;
    std::string weights;
    bool overwrite = false;
    std::size_t jobs = 1;
    std::optional<double> rho_sll_db;
    std::optional<std::size_t> s_max;
    std::vector<std::size_t> s_max_list;
    bool trace = false;
    bool dump_problem = false;
};

void setup_logging() {
    auto logger = spdlog::stderr_color_st("nff");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%l] %v");
    const char* env = std::getenv("NFF_LOG");
    const std::string level = env ? env : "info";
    const auto parsed = spdlog::level::from_str(level);
    // from_str maps unknown names to "off"; only honour that when asked for.
    if (parsed == spdlog::level::off && level != "off") {
        spdlog::set_level(spdlog::level::info);
        spdlog::warn("unknown NFF_LOG level '{}', using info", level);
    } else {
        spdlog::set_level(parsed);
    }
}

/// Collects output files in a staging directory and publishes them atomically.
class OutputDir {
public:
    OutputDir(const fs::path& target, bool overwrite) : target_(target), overwrite_(overwrite) {
        check_target();
    }
    OutputDir(const OutputDir&) = delete;
    OutputDir& operator=(const OutputDir&) = delete;
    ~OutputDir() {
        std::error_code ec;
        if (!staging_.empty()) fs::remove_all(staging_, ec);
    }

    /// Fails early, before any computation, when the target is unusable.
    void check_target() const {
        std::error_code ec;
        if (fs::exists(target_, ec)) {
            if (!fs::is_directory(target_, ec))
                throw nff::IoError("output path '" + target_.string() + "' exists and is not a directory");
            if (!fs::is_empty(target_, ec) && !overwrite_)
                throw nff::IoError("output directory '" + target_.string() +
                                   "' already contains results; pass --overwrite to replace them");
        }
    }

    fs::path file(const std::string& name) {
        if (staging_.empty()) {
            const fs::path parent = target_.has_parent_path() ? target_.parent_path() : fs::path(".");
            std::error_code ec;
            fs::create_directories(parent, ec);
            if (ec) throw nff::IoError("cannot create '" + parent.string() + "': " + ec.message());
            staging_ = parent / (target_.filename().string() + ".partial");
            fs::remove_all(staging_, ec);
            if (!fs::create_directory(staging_, ec) || ec)
                throw nff::IoError("cannot create staging directory '" + staging_.string() + "'");
        }
        names_.push_back(name);
        return staging_ / name;
    }

    [[nodiscard]] ordered_json inventory() const {
        ordered_json files = ordered_json::array();
        for (const auto& n : names_) {
            std::error_code ec;
            const auto size = fs::file_size(staging_ / n, ec);
            files.push_back({{"file", n}, {"bytes", ec ? 0 : size}});
        }
        return files;
    }

    void publish() {
        check_target();
        std::error_code ec;
        if (fs::exists(target_, ec)) fs::remove_all(target_, ec);
        if (ec) throw nff::IoError("cannot remove '" + target_.string() + "': " + ec.message());
        fs::rename(staging_, target_, ec);
        if (ec) throw nff::IoError("cannot move results into '" + target_.string() + "': " + ec.message());
        staging_.clear();
    }

private:
    fs::path target_;
    bool overwrite_;
    fs::path staging_;
    std::vector<std::string> names_;
};

nff::ExperimentConfig load(const Options& o) {
    nff::ExperimentConfig ec = nff::load_config(o.config);
    if (o.rho_sll_db) ec.synthesis.rho_sll_db = *o.rho_sll_db;
    if (o.s_max) ec.synthesis.omp.s_max = *o.s_max;
    if (!o.s_max_list.empty()) ec.sweep_s_max = o.s_max_list;
    ec.synthesis.validate();
    return ec;
}

ordered_json timings_json(const nff::StageTimings& t) {
    return {{"matrix_build_s", t.matrix_build},
            {"omp_s", t.omp},
            {"solve_s", t.solve},
            {"algorithm_s", t.algorithm()},
            {"total_s", t.total}};
}

ordered_json finite_or_null(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(); }

ordered_json extras_json(const nff::SynthesisResult& r) {
    ordered_json j;
    j["active_elements"] = r.active;
    j["elements"] = r.geometry.size();
    j["beamwidth_y"] = finite_or_null(r.beamwidth_y);
    j["peak_field_raw"] = finite_or_null(r.peak_field_raw);
    j["axial_peak_z"] = finite_or_null(r.axial_peak_z);
    j["focal_shift_bracketed"] = r.focal_shift_bracketed;
    j["objective_l1"] = finite_or_null(r.objective);
    j["status"] = r.status;
    j["notes"] = r.notes;
    return j;
}

/// Files shared by synthesize, baseline and evaluate.
void write_solution(OutputDir& out, const nff::SynthesisConfig& cfg, const nff::SynthesisResult& r) {
    nff::write_layout(out.file("layout.csv"), r.geometry);
    nff::write_weights(out.file("weights.csv"), r.weights);
    nff::write_field(out.file("field_xy.csv"), r.grids.focal_plane, r.focal_plane_field);
    const auto xz = nff::xz_map_points(cfg);
    spdlog::debug("evaluating the xoz map on {} points", xz.size());
    nff::write_field(out.file("field_xz.csv"), xz, nff::evaluate_field_at(r.geometry, xz, r.pattern, r.weights));
    nff::write_field(out.file("axial_cut.csv"), r.grids.axial, r.axial_field);
    nff::write_lateral_cuts(out.file("lateral_cut.csv"), r);
    nff::write_json(out.file("metrics.json"), nff::metrics_json(r.metrics));
}

void finish(OutputDir& out, const std::string& command, const nff::ExperimentConfig& ec, ordered_json manifest) {
    manifest["command"] = command;
    manifest["version"] = nff::kVersion;
    manifest["config"] = nff::to_ini(ec);
    {
        const fs::path ipath = out.file("config.ini");
        std::ofstream ini(ipath, std::ios::binary | std::ios::trunc);
        ini << nff::to_ini(ec);
        ini.flush();
        if (!ini) throw nff::IoError("cannot write '" + ipath.string() + "'");
    }
    // The inventory covers every other output; the manifest does not list itself.
    manifest["outputs"] = out.inventory();
    nff::write_json(out.file("manifest.json"), manifest);
    out.publish();
}

void log_metrics(const nff::SynthesisResult& r) {
    const auto& m = r.metrics;
    spdlog::info("status {}, active {} of {} ({:.2f}%)", r.status, r.active, r.geometry.size(), m.sparsity_pct);
    spdlog::info("BW {:.4f} lambda, SLL {:.3f} dB, |E_p| {:.4g}, dz {:.4f} lambda, time {:.3f} s", m.beamwidth,
                 m.sll_db, m.peak_field, m.focal_shift, m.runtime);
    for (const auto& n : r.notes) spdlog::warn("{}", n);
}

int cmd_run(const Options& o, bool proposed) {
    OutputDir out(o.out, o.overwrite);
    const nff::ExperimentConfig ec = load(o);
    const nff::SynthesisConfig& cfg = ec.synthesis;
    spdlog::info("{} on a {}x{} array", proposed ? "proposed synthesis" : "full-array baseline", cfg.nx, cfg.ny);
    const nff::SynthesisContext ctx = nff::prepare(cfg);
    const nff::RunOutput run = proposed ? nff::run_proposed(cfg, ctx) : nff::run_baseline(cfg, ctx);
    log_metrics(run.result);

    write_solution(out, cfg, run.result);
    if (proposed && o.trace && run.omp) nff::write_trace(out.file("trace.csv"), *run.omp);
    if (o.dump_problem) {
        nff::IndexList active;
        if (proposed && run.omp) {
            active = run.omp->active_set;
            std::sort(active.begin(), active.end());
        } else {
            for (std::size_t q = 0; q < ctx.geometry.size(); ++q) active.push_back(q);
        }
        nff::dump_problem(out.file("problem.txt"),
                          nff::assemble_problem(ctx.matrices, ctx.grids, active, cfg.rho_sll_db));
    }

    ordered_json manifest;
    manifest["metrics"] = nff::metrics_json(run.result.metrics);
    manifest["timings"] = timings_json(run.result.timings);
    manifest["extras"] = extras_json(run.result);
    manifest["solver"] = {{"method", nff::to_string(cfg.solver.method)},
                          {"iterations", run.solve.iterations},
                          {"primal_residual", run.solve.primal_residual},
                          {"dual_residual", run.solve.dual_residual},
                          {"symmetrized", run.solve.symmetrized}};
    if (proposed) {
        manifest["final_s_max"] = run.final_s_max;
        ordered_json esc = ordered_json::array();
        for (const auto& s : run.escalation) esc.push_back({{"s_max", s.s_max}, {"active", s.active}, {"outcome", s.outcome}});
        manifest["escalation"] = esc;
    }
    finish(out, proposed ? "synthesize" : "baseline", ec, std::move(manifest));
    return kOk;
}

int cmd_sweep(const Options& o) {
    OutputDir out(o.out, o.overwrite);
    const nff::ExperimentConfig ec = load(o);
    if (ec.sweep_s_max.empty())
        throw nff::InvalidConfiguration("sweep needs an s_max list ([sweep] s_max or --s-max-list)");
    const nff::SweepSpec spec{ec.synthesis, ec.sweep_s_max};
    spec.validate();
    spdlog::info("sweep over {} s_max values with {} job(s)", spec.s_max_values.size(), o.jobs);
    const nff::SynthesisContext ctx = nff::prepare(ec.synthesis);
    const auto points = nff::run_sweep(spec, o.jobs, &ctx);

    std::size_t ok = 0;
    for (const auto& p : points) {
        if (p.ok()) ++ok;
        spdlog::info("s_max {:3d}: {} active {:4d} SLL {:8.3f} dB BW {:.4f} time {:.3f} s", p.s_max, p.status,
                     p.active, p.sll_db, p.beamwidth, p.time);
    }
    if (ok == 0) throw nff::Infeasible("no sweep point succeeded");

    nff::write_sweep(out.file("sweep.csv"), points);
    ordered_json manifest;
    manifest["points"] = points.size();
    manifest["succeeded"] = ok;
    manifest["jobs"] = o.jobs;
    manifest["timings"] = {{"matrix_build_s", ctx.build_seconds}};
    finish(out, "sweep", ec, std::move(manifest));
    return kOk;
}

int cmd_evaluate(const Options& o) {
    OutputDir out(o.out, o.overwrite);
    const nff::ExperimentConfig ec = load(o);
    const nff::SynthesisConfig& cfg = ec.synthesis;
    nff::Stopwatch clock;
    const nff::SynthesisContext ctx = nff::prepare(cfg);
    const nff::CVector w = nff::read_weights(o.weights, ctx.geometry.size());
    nff::SynthesisResult r = nff::evaluate_solution(ctx.geometry, ctx.grids, cfg.pattern, w, cfg.metrics, &ctx.matrices);
    r.status = "evaluated";
    r.objective = w.cwiseAbs().sum();
    r.timings.matrix_build = ctx.build_seconds;
    r.timings.total = clock.seconds();
    r.metrics.runtime = r.timings.total;
    log_metrics(r);

    write_solution(out, cfg, r);
    ordered_json manifest;
    manifest["weights_source"] = fs::absolute(o.weights).string();
    manifest["metrics"] = nff::metrics_json(r.metrics);
    manifest["timings"] = timings_json(r.timings);
    manifest["extras"] = extras_json(r);
    finish(out, "evaluate", ec, std::move(manifest));
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    setup_logging();
    CLI::App app{"Sparse near-field focused planar array synthesis"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(nff::kVersion));

    Options o;
    auto common = [&](CLI::App* c) {
        c->add_option("--config", o.config, "experiment configuration file")->required();
        c->add_option("--out", o.out, "output directory")->required();
        c->add_flag("--overwrite", o.overwrite, "replace an existing output directory");
        c->add_option("--rho-sll-db", o.rho_sll_db, "sidelobe bound in dB (overrides the config)");
    };
    auto* synth = app.add_subcommand("synthesize", "OMP pre-selection followed by L1 refinement");
    common(synth);
    synth->add_option("--s-max", o.s_max, "selection budget (overrides the config)")->check(CLI::PositiveNumber);
    synth->add_flag("--trace", o.trace, "write the OMP selection trace to trace.csv");
    synth->add_flag("--dump-problem", o.dump_problem, "write the refinement problem to problem.txt");

    auto* base = app.add_subcommand("baseline", "full-array L1 synthesis");
    common(base);
    base->add_flag("--dump-problem", o.dump_problem, "write the full-array problem to problem.txt");

    auto* sweep = app.add_subcommand("sweep", "proposed synthesis over a list of s_max values");
    common(sweep);
    sweep->add_option("--s-max-list", o.s_max_list, "comma-separated s_max values (overrides [sweep])")
        ->delimiter(',');
    sweep->add_option("--jobs", o.jobs, "concurrent sweep points")->check(CLI::PositiveNumber);

    auto* eval = app.add_subcommand("evaluate", "score externally supplied weights");
    common(eval);
    eval->add_option("--weights", o.weights, "weights CSV (index, re, im, ...)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kInvalid;
    }

    try {
        if (synth->parsed()) return cmd_run(o, true);
        if (base->parsed()) return cmd_run(o, false);
        if (sweep->parsed()) return cmd_sweep(o);
        return cmd_evaluate(o);
    } catch (const nff::IoError& e) {
        spdlog::error("{}", e.what());
        return kIo;
    } catch (const nff::Infeasible& e) {
        spdlog::error("infeasible: {}", e.what());
        return kInfeasible;
    } catch (const nff::InvalidConfiguration& e) {
        spdlog::error("invalid configuration: {}", e.what());
        return kInvalid;
    } catch (const nff::InvalidInput& e) {
        spdlog::error("invalid input: {}", e.what());
        return kInvalid;
    } catch (const std::invalid_argument& e) {
        spdlog::error("invalid argument: {}", e.what());
        return kInvalid;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return kOther;
    }
}
