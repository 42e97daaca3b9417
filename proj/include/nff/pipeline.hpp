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

#pragma once

// End-to-end synthesis runs.
//
//   prepare      : layout, sampling grids, transfer matrices, mirror orbits
//   run_proposed : symmetric OMP pre-selection -> L1 refinement over the
//                  selected elements, extending the pre-selection when the
//                  refinement is infeasible
//   run_baseline : the same L1 problem over the full array, no symmetry
//   run_sweep    : run_proposed over a list of s_max values on one context
//
// Timings are wall clock per stage. The "total" of a run includes building
// the matrices; sweep points share one context and report omp + solve.

#include <algorithm>
#include <atomic>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "nff/common.hpp"
#include "nff/conic.hpp"
#include "nff/field.hpp"
#include "nff/geometry.hpp"
#include "nff/metrics.hpp"
#include "nff/omp.hpp"

namespace nff {

struct SynthesisConfig {
    // Array
    std::size_t nx = 11;
    std::size_t ny = 11;
    double spacing = 0.5;
    ElementPattern pattern = ElementPattern::y_dipole;
    // Focus (on the array axis)
    double focus_x = 0.0;
    double focus_y = 0.0;
    double z0 = 5.0;
    // Focal-plane grid
    double extent = 5.0;
    std::size_t points_per_side = 50;
    double desired_beamwidth = 1.08;
    std::optional<double> exclusion_radius; // defaults to desired_beamwidth
    // Axial grid
    double z_min = 0.1;
    double z_max = 10.0;
    std::size_t axial_count = 100;
    // Synthesis
    double rho_sll_db = -20.0;
    OmpConfig omp;
    SolverConfig solver;
    // Escalation when the refinement is infeasible
    std::size_t escalation_increment = 2;
    std::size_t max_retries = 5;
    // Metrics
    MetricOptions metrics;

    [[nodiscard]] double exclusion() const { return exclusion_radius.value_or(desired_beamwidth); }

    /// Cross-field checks; throws InvalidConfiguration.
    void validate() const {
        auto fail = [](const std::string& m) { throw InvalidConfiguration(m); };
        if (nx < 1 || ny < 1) fail("array.nx and array.ny must be at least 1");
        if (!(spacing > 0.0)) fail("array.spacing must be positive");
        if (focus_x != 0.0 || focus_y != 0.0)
            fail("only on-axis focal points (x = y = 0) are supported; the symmetric selection relies on it");
        if (!(z0 > 0.0)) fail("focus.z0 must be positive");
        if (!(extent > 0.0)) fail("focal_plane.extent must be positive");
        if (points_per_side < 2) fail("focal_plane.points_per_side must be at least 2");
        if (!(exclusion() >= 0.0)) fail("exclusion radius must be non-negative");
        if (!(exclusion() < extent / 2.0)) fail("exclusion radius must be smaller than half the focal-plane extent");
        if (!(z_min > 0.0) || !(z_max > z_min)) fail("axial grid needs 0 < z_min < z_max");
        if (axial_count < 2) fail("axial.count must be at least 2");
        if (z0 < z_min || z0 > z_max) fail("focus.z0 must lie within the axial span");
        if (!std::isfinite(rho_sll_db) || !(rho_sll_db < 0.0)) fail("sidelobe bound must be a negative dB value");
        if (omp.s_max < 1) fail("omp.s_max must be at least 1");
        if (!(omp.epsilon > 0.0)) fail("omp.epsilon must be positive");
        if (escalation_increment < 1) fail("escalation increment must be at least 1");
        if (!(solver.eps_abs > 0.0) || !(solver.eps_rel > 0.0) || !(solver.feasibility_slack > 0.0))
            fail("solver tolerances must be positive");
        if (!(metrics.activity_threshold > 0.0 && metrics.activity_threshold < 1.0))
            fail("activity threshold must lie in (0, 1)");
    }

    /// True when two configs describe the same synthesis problem (same array,
    /// grids, pattern and constraints); selection and solver knobs may differ.
    [[nodiscard]] bool same_problem(const SynthesisConfig& o) const {
        return nx == o.nx && ny == o.ny && spacing == o.spacing && pattern == o.pattern && focus_x == o.focus_x &&
               focus_y == o.focus_y && z0 == o.z0 && extent == o.extent && points_per_side == o.points_per_side &&
               exclusion() == o.exclusion() && z_min == o.z_min && z_max == o.z_max &&
               axial_count == o.axial_count && rho_sll_db == o.rho_sll_db;
    }
};

/// Everything derived from the config before any selection happens.
struct SynthesisContext {
    ArrayGeometry geometry;
    SamplingGrids grids;
    SynthesisMatrices matrices;
    std::vector<SymmetryOrbit> orbits;
    IndexList quadrant;
    double build_seconds = 0.0;
};

inline SynthesisContext prepare(const SynthesisConfig& cfg) {
    cfg.validate();
    Stopwatch clock;
    SynthesisContext ctx;
    ctx.geometry = build_grid_layout(cfg.nx, cfg.ny, cfg.spacing);
    ctx.grids = build_focal_plane_grid(cfg.extent, cfg.points_per_side, cfg.z0, cfg.exclusion());
    ctx.grids.axial = build_axial_grid(cfg.z_min, cfg.z_max, cfg.axial_count);
    ctx.matrices = build_synthesis_matrices(ctx.geometry, ctx.grids, cfg.pattern);
    ctx.orbits = symmetry_orbits(ctx.geometry);
    ctx.quadrant = first_quadrant_indices(ctx.geometry);
    ctx.build_seconds = clock.seconds();
    return ctx;
}

struct EscalationStep {
    std::size_t s_max = 0;
    std::size_t active = 0;
    std::string outcome; // solver status or "infeasible"
};

struct RunOutput {
    SynthesisConfig config;
    SynthesisResult result;
    SolveReport solve;
    std::optional<OmpState> omp;
    std::vector<EscalationStep> escalation;
    std::size_t final_s_max = 0;
};

namespace detail {

inline std::string escalation_trace(const std::vector<EscalationStep>& steps) {
    std::ostringstream os;
    for (std::size_t i = 0; i < steps.size(); ++i)
        os << (i ? "; " : "") << "s_max=" << steps[i].s_max << " active=" << steps[i].active << " -> "
           << steps[i].outcome;
    return os.str();
}

// A one-element array cannot focus; its only excitation meeting the focal
// equality is reported as is, without constraint checks.
inline RunOutput degenerate_single_element(const SynthesisConfig& cfg, const SynthesisContext& ctx, Stopwatch& clock) {
    RunOutput out;
    out.config = cfg;
    const cplx a = ctx.matrices.focal.entries(Eigen::Index(ctx.grids.focal_index), 0);
    const CVector w = CVector::Constant(1, 1.0 / a);
    out.solve.weights = w;
    out.solve.objective = std::abs(w(0));
    out.result = evaluate_solution(ctx.geometry, ctx.grids, cfg.pattern, w, cfg.metrics, &ctx.matrices);
    out.result.status = "degenerate";
    out.result.objective = out.solve.objective;
    out.result.notes.push_back("single-element array: no selection or optimisation performed");
    out.result.timings.matrix_build = ctx.build_seconds;
    out.result.timings.total = ctx.build_seconds + clock.seconds();
    out.result.metrics.runtime = out.result.timings.total;
    return out;
}

} // namespace detail

/// Proposed method on a prepared context. `s_max` overrides cfg.omp.s_max.
/// The result's total time counts the context build plus this run.
inline RunOutput run_proposed(const SynthesisConfig& cfg, const SynthesisContext& ctx,
                              std::optional<std::size_t> s_max = std::nullopt) {
    Stopwatch clock;
    if (ctx.geometry.size() == 1) return detail::degenerate_single_element(cfg, ctx, clock);

    OmpConfig oc = cfg.omp;
    if (s_max) oc.s_max = *s_max;
    if (oc.s_max < 1) throw InvalidConfiguration("s_max must be at least 1");

    RunOutput out;
    out.config = cfg;
    out.config.omp.s_max = oc.s_max;
    StageTimings t;
    t.matrix_build = ctx.build_seconds;

    Stopwatch stage;
    OmpSolver omp(ctx.matrices.focal, build_target_field(ctx.grids), ctx.orbits, ctx.quadrant, oc);
    std::size_t target = oc.s_max;
    omp.run(target);
    t.omp += stage.seconds();
    if (omp.state().degenerate)
        throw InvalidConfiguration("OMP threshold epsilon exceeds the target norm; nothing would be selected");

    std::optional<RefineResult> refined;
    for (std::size_t attempt = 0;; ++attempt) {
        const std::size_t active = omp.state().active_set.size();
        stage.reset();
        std::string outcome;
        try {
            RefineResult r = refine(ctx.matrices, ctx.grids, omp.state(), cfg.rho_sll_db, cfg.solver, &ctx.orbits);
            outcome = to_string(r.report.status);
            if (r.report.status == SolveStatus::optimal) refined = std::move(r);
        } catch (const Infeasible&) {
            outcome = "infeasible";
        }
        t.solve += stage.seconds();
        out.escalation.push_back({target, active, outcome});
        if (refined) break;
        if (attempt >= cfg.max_retries)
            throw Infeasible("no feasible refinement after " + std::to_string(cfg.max_retries) +
                             " escalations (" + detail::escalation_trace(out.escalation) +
                             "); raise rho_SL or s_max");
        if (omp.exhausted())
            throw Infeasible("refinement infeasible and OMP cannot add elements (" +
                             detail::escalation_trace(out.escalation) + "); raise rho_SL");
        stage.reset();
        target += cfg.escalation_increment;
        omp.run(target);
        t.omp += stage.seconds();
        if (omp.state().active_set.size() <= active)
            throw Infeasible("escalation did not enlarge the active set (" +
                             detail::escalation_trace(out.escalation) + ")");
    }

    out.final_s_max = target;
    out.omp = omp.state();
    out.solve = refined->report;
    out.result = evaluate_solution(ctx.geometry, ctx.grids, cfg.pattern, refined->weights, cfg.metrics, &ctx.matrices);
    out.result.status = to_string(refined->report.status);
    out.result.objective = refined->report.objective;
    if (out.escalation.size() > 1)
        out.result.notes.push_back("escalated: " + detail::escalation_trace(out.escalation));
    t.total = ctx.build_seconds + clock.seconds();
    out.result.timings = t;
    out.result.metrics.runtime = t.total;
    return out;
}

inline RunOutput run_proposed(const SynthesisConfig& cfg) { return run_proposed(cfg, prepare(cfg)); }

/// Conventional full-array L1 synthesis on a prepared context.
inline RunOutput run_baseline(const SynthesisConfig& cfg, const SynthesisContext& ctx) {
    Stopwatch clock;
    if (ctx.geometry.size() == 1) return detail::degenerate_single_element(cfg, ctx, clock);
    RunOutput out;
    out.config = cfg;
    StageTimings t;
    t.matrix_build = ctx.build_seconds;
    Stopwatch stage;
    RefineResult r = baseline_full_l1(ctx.matrices, ctx.grids, cfg.rho_sll_db, cfg.solver);
    t.solve = stage.seconds();
    out.escalation.push_back({0, std::size_t(ctx.geometry.size()), to_string(r.report.status)});
    if (r.report.status == SolveStatus::infeasible)
        throw Infeasible("sidelobe bound " + std::to_string(cfg.rho_sll_db) +
                         " dB is infeasible even over the full array; raise rho_SL");
    if (r.report.status != SolveStatus::optimal)
        throw Infeasible("full-array solve did not converge (" + to_string(r.report.status) + ")");
    out.solve = r.report;
    out.result = evaluate_solution(ctx.geometry, ctx.grids, cfg.pattern, r.weights, cfg.metrics, &ctx.matrices);
    out.result.status = to_string(r.report.status);
    out.result.objective = r.report.objective;
    t.total = ctx.build_seconds + clock.seconds();
    out.result.timings = t;
    out.result.metrics.runtime = t.total;
    return out;
}

inline RunOutput run_baseline(const SynthesisConfig& cfg) { return run_baseline(cfg, prepare(cfg)); }

struct SweepSpec {
    SynthesisConfig base;
    std::vector<std::size_t> s_max_values;

    void validate() const {
        if (s_max_values.empty()) throw InvalidArgument("sweep needs at least one s_max value");
        for (std::size_t i = 0; i < s_max_values.size(); ++i) {
            if (s_max_values[i] < 1) throw InvalidArgument("sweep s_max values must be at least 1");
            if (i && s_max_values[i] <= s_max_values[i - 1])
                throw InvalidArgument("sweep s_max values must be strictly increasing");
        }
    }
};

struct SweepPoint {
    std::size_t s_max = 0;
    std::size_t final_s_max = 0;
    std::size_t active = 0;
    double sll_db = std::numeric_limits<double>::quiet_NaN();
    double beamwidth = std::numeric_limits<double>::quiet_NaN();
    double sparsity_pct = std::numeric_limits<double>::quiet_NaN();
    // Wall time of the point: selection, refinement including retries and
    // metric evaluation. Matrices are shared and not included.
    double time = std::numeric_limits<double>::quiet_NaN();
    std::string status;
    std::string message;
    [[nodiscard]] bool ok() const { return status == "optimal" || status == "degenerate"; }
};

/// Runs every sweep point on one shared context. Points fail independently.
/// With jobs > 1 points run concurrently; results are identical, only the
/// per-point timings are affected by contention.
inline std::vector<SweepPoint> run_sweep(const SweepSpec& spec, std::size_t jobs = 1,
                                         const SynthesisContext* shared = nullptr) {
    spec.validate();
    std::optional<SynthesisContext> own;
    if (!shared) own = prepare(spec.base);
    const SynthesisContext& ctx = shared ? *shared : *own;

    std::vector<SweepPoint> points(spec.s_max_values.size());
    auto run_point = [&](std::size_t i) {
        SweepPoint& p = points[i];
        p.s_max = spec.s_max_values[i];
        Stopwatch clock;
        try {
            const RunOutput r = run_proposed(spec.base, ctx, p.s_max);
            p.final_s_max = r.final_s_max;
            p.active = r.result.active;
            p.sll_db = r.result.metrics.sll_db;
            p.beamwidth = r.result.metrics.beamwidth;
            p.sparsity_pct = r.result.metrics.sparsity_pct;
            p.status = r.result.status;
        } catch (const Infeasible& e) {
            p.status = "infeasible";
            p.message = e.what();
        } catch (const std::exception& e) {
            p.status = "error";
            p.message = e.what();
        }
        p.time = clock.seconds();
    };

    jobs = std::max<std::size_t>(1, std::min(jobs, points.size()));
    if (jobs == 1) {
        for (std::size_t i = 0; i < points.size(); ++i) run_point(i);
        return points;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < jobs; ++j)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < points.size(); i = next++) run_point(i);
        });
    for (auto& th : pool) th.join();
    return points;
}

/// Baseline total time over proposed total time.
inline double speedup(const RunOutput& proposed, const RunOutput& baseline) {
    if (!proposed.config.same_problem(baseline.config))
        throw InvalidComparison("proposed and baseline runs were made on different problem configurations");
    const double tp = proposed.result.timings.total;
    const double tb = baseline.result.timings.total;
    if (!(tp > 0.0) || !(tb > 0.0)) throw InvalidComparison("run timings must be positive");
    return tb / tp;
}

} // namespace nff
