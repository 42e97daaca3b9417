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

// Sparse refinement by complex L1 minimisation:
//
//     minimise    sum_q |w_q|
//     subject to  A_main w = 1
//                 |A_SL w| <= rho_SL    (sidelobe samples of the focal plane)
//                 |A_Z  w| <= 1         (axial samples, focal depth excluded)

#include <optional>
#include <string>
#include <vector>

#include "nff/admm.hpp"
#include "nff/ipm.hpp"
#include "nff/common.hpp"
#include "nff/field.hpp"
#include "nff/geometry.hpp"
#include "nff/omp.hpp"
#include "nff/symmetry.hpp"

namespace nff {

inline double db_to_linear(double db) { return std::pow(10.0, db / 20.0); }

struct ConicProblem {
    CRowVector main_row;
    CMatrix sidelobe;
    CMatrix axial;
    double rho_sl = 0.1;
    double axial_bound = 1.0;
    IndexList columns;        // element index of every column
    IndexList sidelobe_rows;  // focal-plane sample index of every sidelobe row
    IndexList axial_rows;     // axial sample index of every axial row

    // Mirror structure, present when the columns are orbit-closed and both
    // row sets are mirror-closed.
    std::optional<std::vector<IndexList>> column_groups;
    std::optional<std::vector<SymmetryOrbit>> sidelobe_orbits;
    std::optional<std::vector<SymmetryOrbit>> axial_orbits;

    [[nodiscard]] Eigen::Index variables() const { return main_row.size(); }
    [[nodiscard]] bool symmetric() const { return column_groups && sidelobe_orbits && axial_orbits; }
};

enum class SolverMethod { interior_point, admm };

inline std::string to_string(SolverMethod m) { return m == SolverMethod::admm ? "admm" : "interior_point"; }

inline SolverMethod parse_solver_method(const std::string& s) {
    if (s == "interior_point" || s == "ipm") return SolverMethod::interior_point;
    if (s == "admm") return SolverMethod::admm;
    throw InvalidConfiguration("unknown solver method '" + s + "' (expected interior_point or admm)");
}

struct SolverConfig {
    SolverMethod method = SolverMethod::interior_point;
    double eps_abs = 1e-8;
    double eps_rel = 1e-6;
    std::size_t max_iterations = 100;   // interior-point iterations
    // First-order (ADMM) settings.
    std::size_t admm_max_iterations = 20000;
    double penalty = 0.1;
    bool adaptive_penalty = true;
    double relaxation = 1.6;
    double eps_infeasible = 1e-6;
    double feasibility_slack = 1e-6;
    bool symmetrize = true;
    // ADMM tightening rounds used when a converged iterate misses the
    // feasibility post-check.
    int polish_rounds = 3;
};

enum class SolveStatus { optimal, max_iterations, infeasible, numerical_error };

inline std::string to_string(SolveStatus s) {
    switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::max_iterations: return "max-iterations";
    case SolveStatus::numerical_error: return "numerical-error";
    default: return "infeasible";
    }
}

struct SolveReport {
    CVector weights; // one entry per problem column
    double objective = 0.0;
    SolveStatus status = SolveStatus::infeasible;
    std::size_t iterations = 0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    double wall_time = 0.0;
    bool symmetrized = false;
    std::size_t reduced_variables = 0;
    std::size_t reduced_rows = 0;
};

struct FeasibilityCheck {
    double equality_error = 0.0;
    double max_sidelobe = 0.0;
    double max_axial = 0.0;
    bool ok = false;
};

/// Constraint check on the full (unreduced) rows, independent of the solver.
inline FeasibilityCheck check_feasibility(const ConicProblem& p, const CVector& w, double slack = 1e-6) {
    if (w.size() != p.variables()) throw DimensionMismatch("weight length does not match problem columns");
    FeasibilityCheck f;
    f.equality_error = std::abs((p.main_row * w)(0) - 1.0);
    f.max_sidelobe = p.sidelobe.rows() > 0 ? (p.sidelobe * w).cwiseAbs().maxCoeff() : 0.0;
    f.max_axial = p.axial.rows() > 0 ? (p.axial * w).cwiseAbs().maxCoeff() : 0.0;
    f.ok = f.equality_error <= slack && f.max_sidelobe <= p.rho_sl * (1.0 + slack) + 1e-8 &&
           f.max_axial <= p.axial_bound * (1.0 + slack);
    return f;
}

/// Builds the refinement problem over the `active` element columns. With
/// `orbits` supplied, records the mirror structure used by solve_conic.
inline ConicProblem assemble_problem(const SynthesisMatrices& M, const SamplingGrids& grids, const IndexList& active,
                                     double rho_sl_db, const std::vector<SymmetryOrbit>* orbits = nullptr) {
    if (active.empty()) throw InvalidArgument("active set is empty");
    if (!std::isfinite(rho_sl_db)) throw InvalidArgument("sidelobe bound must be finite");
    if (M.focal.rows() != Eigen::Index(grids.focal_plane.size()) || M.axial.rows() != Eigen::Index(grids.axial.size()))
        throw DimensionMismatch("matrices do not match the sampling grids");
    const auto n_el = std::size_t(M.focal.cols());
    for (std::size_t q : active)
        if (q >= n_el) throw InvalidArgument("active index " + std::to_string(q) + " out of range");

    ConicProblem p;
    p.rho_sl = db_to_linear(rho_sl_db);
    p.columns = active;
    p.sidelobe_rows = grids.sidelobe_indices();
    if (p.sidelobe_rows.empty()) throw InvalidConfiguration("no sidelobe samples to constrain");
    for (std::size_t i = 0; i < grids.axial.size(); ++i)
        if (std::abs(grids.axial[i].z - grids.z0) > 1e-9) p.axial_rows.push_back(i);

    const auto n = Eigen::Index(active.size());
    p.main_row.resize(n);
    p.sidelobe.resize(Eigen::Index(p.sidelobe_rows.size()), n);
    p.axial.resize(Eigen::Index(p.axial_rows.size()), n);
    for (Eigen::Index c = 0; c < n; ++c) {
        const auto q = Eigen::Index(active[std::size_t(c)]);
        p.main_row(c) = M.focal.entries(Eigen::Index(grids.focal_index), q);
        for (std::size_t r = 0; r < p.sidelobe_rows.size(); ++r)
            p.sidelobe(Eigen::Index(r), c) = M.focal.entries(Eigen::Index(p.sidelobe_rows[r]), q);
        for (std::size_t r = 0; r < p.axial_rows.size(); ++r)
            p.axial(Eigen::Index(r), c) = M.axial.entries(Eigen::Index(p.axial_rows[r]), q);
    }

    if (orbits) {
        p.column_groups = local_orbit_groups(active, *orbits, n_el);
        std::vector<Point3> pts;
        for (std::size_t r : p.sidelobe_rows) pts.push_back(grids.focal_plane[r]);
        p.sidelobe_orbits = try_mirror_orbits(pts);
        pts.clear();
        for (std::size_t r : p.axial_rows) pts.push_back(grids.axial[r]);
        p.axial_orbits = try_mirror_orbits(pts);
        if (!p.symmetric()) {
            p.column_groups.reset();
            p.sidelobe_orbits.reset();
            p.axial_orbits.reset();
        }
    }
    return p;
}

namespace detail {

struct StackedProblem {
    CMatrix G;
    RVector upper;
    RVector cost;
};

inline StackedProblem stack_full(const ConicProblem& p) {
    const Eigen::Index n = p.variables();
    StackedProblem s;
    s.G.resize(1 + p.sidelobe.rows() + p.axial.rows(), n);
    s.G.row(0) = p.main_row;
    s.G.middleRows(1, p.sidelobe.rows()) = p.sidelobe;
    s.G.bottomRows(p.axial.rows()) = p.axial;
    s.upper.resize(s.G.rows());
    s.upper(0) = 0.0;
    s.upper.segment(1, p.sidelobe.rows()).setConstant(p.rho_sl);
    s.upper.tail(p.axial.rows()).setConstant(p.axial_bound);
    s.cost = RVector::Ones(n);
    return s;
}

// One row per row orbit, one orbit-summed column per column group; the cost
// of a group is its size, so the objective equals sum_q |w_q| on expansion.
inline StackedProblem stack_reduced(const ConicProblem& p) {
    const auto& groups = *p.column_groups;
    const IndexList sl = orbit_representatives(*p.sidelobe_orbits);
    const IndexList ax = orbit_representatives(*p.axial_orbits);
    StackedProblem s;
    const auto k = Eigen::Index(groups.size());
    s.G.resize(Eigen::Index(1 + sl.size() + ax.size()), k);
    s.G.row(0) = orbit_summed_columns(CMatrix(p.main_row), IndexList{0}, groups);
    s.G.middleRows(1, Eigen::Index(sl.size())) = orbit_summed_columns(p.sidelobe, sl, groups);
    s.G.bottomRows(Eigen::Index(ax.size())) = orbit_summed_columns(p.axial, ax, groups);
    s.upper.resize(s.G.rows());
    s.upper(0) = 0.0;
    s.upper.segment(1, Eigen::Index(sl.size())).setConstant(p.rho_sl);
    s.upper.tail(Eigen::Index(ax.size())).setConstant(p.axial_bound);
    s.cost.resize(k);
    for (Eigen::Index g = 0; g < k; ++g) s.cost(g) = double(groups[std::size_t(g)].size());
    return s;
}

inline CVector expand_groups(const CVector& reduced, const std::vector<IndexList>& groups, Eigen::Index n) {
    CVector w = CVector::Zero(n);
    for (std::size_t g = 0; g < groups.size(); ++g)
        for (std::size_t c : groups[g]) w(Eigen::Index(c)) = reduced(Eigen::Index(g));
    return w;
}

} // namespace detail

/// Solves the refinement problem. When the problem carries mirror structure
/// and symmetrisation is enabled, the iterate is restricted to the fixed
/// subspace of the mirror group (weights equal across every orbit); by
/// convexity and invariance this subspace contains an optimal point.
inline SolveReport solve_conic(const ConicProblem& p, const SolverConfig& cfg = {}) {
    if (!(cfg.eps_abs > 0.0) || !(cfg.eps_rel > 0.0) || !(cfg.feasibility_slack > 0.0))
        throw InvalidArgument("solver tolerances must be positive");
    if (p.variables() < 1) throw InvalidArgument("problem has no variables");
    Stopwatch clock;
    SolveReport rep;

    if (p.variables() == 1) {
        // The equality alone fixes the only weight.
        if (std::abs(p.main_row(0)) == 0.0) {
            rep.status = SolveStatus::infeasible;
            rep.weights = CVector::Zero(1);
        } else {
            rep.weights = CVector::Constant(1, 1.0 / p.main_row(0));
            rep.status = check_feasibility(p, rep.weights, cfg.feasibility_slack).ok ? SolveStatus::optimal
                                                                                      : SolveStatus::infeasible;
        }
        rep.objective = rep.weights.cwiseAbs().sum();
        rep.wall_time = clock.seconds();
        return rep;
    }

    rep.symmetrized = cfg.symmetrize && p.symmetric();
    const detail::StackedProblem s = rep.symmetrized ? detail::stack_reduced(p) : detail::stack_full(p);
    rep.reduced_variables = std::size_t(s.G.cols());
    rep.reduced_rows = std::size_t(s.G.rows());

    auto expand = [&](CVector x) {
        // Remove the residual equality error with a complex rescale.
        const cplx main = (s.G.row(0) * x)(0);
        if (std::abs(main) > 0.0) x /= main;
        return rep.symmetrized ? detail::expand_groups(x, *p.column_groups, p.variables()) : x;
    };

    if (cfg.method == SolverMethod::interior_point) {
        detail::IpmSettings st;
        st.feastol = cfg.eps_abs;
        st.abstol = cfg.eps_abs;
        st.reltol = cfg.eps_rel;
        st.max_iterations = cfg.max_iterations;
        detail::Ipm ipm(s.G, cplx(1.0), s.upper, s.cost, st);
        const auto status = ipm.solve();
        rep.iterations = ipm.iterations();
        rep.primal_residual = ipm.primal_residual();
        rep.dual_residual = ipm.dual_residual();
        switch (status) {
        case detail::IpmStatus::optimal: rep.status = SolveStatus::optimal; break;
        case detail::IpmStatus::infeasible: rep.status = SolveStatus::infeasible; break;
        case detail::IpmStatus::max_iterations: rep.status = SolveStatus::max_iterations; break;
        default: rep.status = SolveStatus::numerical_error; break;
        }
        rep.weights = rep.status == SolveStatus::infeasible ? CVector::Zero(p.variables()) : expand(ipm.solution());
    } else {
        detail::AdmmSettings st;
        st.eps_abs = cfg.eps_abs;
        st.eps_rel = cfg.eps_rel;
        st.eps_infeasible = cfg.eps_infeasible;
        st.max_iterations = cfg.admm_max_iterations;
        st.rho = cfg.penalty;
        st.adaptive_rho = cfg.adaptive_penalty;
        st.alpha = cfg.relaxation;
        detail::Admm admm(s.G, cplx(1.0), s.upper, s.cost, st);
        auto finish = [&](detail::AdmmStatus status) {
            rep.weights = expand(admm.solution());
            rep.status = status == detail::AdmmStatus::optimal      ? SolveStatus::optimal
                         : status == detail::AdmmStatus::infeasible ? SolveStatus::infeasible
                                                                    : SolveStatus::max_iterations;
        };
        finish(admm.solve());
        double eps_abs = cfg.eps_abs;
        double eps_rel = cfg.eps_rel;
        for (int round = 0; round < cfg.polish_rounds && rep.status == SolveStatus::optimal &&
                            !check_feasibility(p, rep.weights, cfg.feasibility_slack).ok;
             ++round) {
            eps_abs *= 0.1;
            eps_rel *= 0.1;
            finish(admm.solve(eps_abs, eps_rel));
        }
        rep.iterations = admm.iterations();
        rep.primal_residual = admm.primal_residual();
        rep.dual_residual = admm.dual_residual();
    }
    // A converged iterate must also pass the independent check on the full rows.
    if (rep.status == SolveStatus::optimal && !check_feasibility(p, rep.weights, cfg.feasibility_slack).ok)
        rep.status = SolveStatus::max_iterations;

    rep.objective = rep.weights.cwiseAbs().sum();
    rep.wall_time = clock.seconds();
    return rep;
}

struct RefineResult {
    CVector weights; // full-array length, zero outside the active set
    SolveReport report;
    ConicProblem problem;
};

/// Solves the problem over the OMP active set and embeds the result into a
/// full-length weight vector. Throws Infeasible when no weights over the
/// active set meet the constraints.
inline RefineResult refine(const SynthesisMatrices& M, const SamplingGrids& grids, const OmpState& omp, double rho_sl_db,
                           const SolverConfig& cfg, const std::vector<SymmetryOrbit>* orbits = nullptr) {
    if (omp.active_set.empty()) throw InvalidArgument("OMP active set is empty; nothing to refine");
    IndexList active = omp.active_set;
    std::sort(active.begin(), active.end());
    RefineResult out;
    out.problem = assemble_problem(M, grids, active, rho_sl_db, orbits);
    out.report = solve_conic(out.problem, cfg);
    if (out.report.status == SolveStatus::infeasible)
        throw Infeasible("sidelobe bound " + std::to_string(rho_sl_db) + " dB is infeasible over " +
                         std::to_string(active.size()) + " active elements; raise rho_SL or s_max");
    out.weights = CVector::Zero(M.focal.cols());
    for (std::size_t c = 0; c < active.size(); ++c) out.weights(Eigen::Index(active[c])) = out.report.weights(Eigen::Index(c));
    return out;
}

/// Conventional full-array L1 synthesis: every element is a candidate and no
/// symmetry is imposed.
inline RefineResult baseline_full_l1(const SynthesisMatrices& M, const SamplingGrids& grids, double rho_sl_db,
                                     SolverConfig cfg) {
    cfg.symmetrize = false;
    IndexList all(std::size_t(M.focal.cols()));
    for (std::size_t q = 0; q < all.size(); ++q) all[q] = q;
    RefineResult out;
    out.problem = assemble_problem(M, grids, all, rho_sl_db);
    out.report = solve_conic(out.problem, cfg);
    out.weights = out.report.weights;
    return out;
}

} // namespace nff
