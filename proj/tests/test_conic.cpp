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

#include <catch_amalgamated.hpp>

#include "nff/conic.hpp"
#include "oracle.hpp"
#include "support.hpp"

using namespace nff;
using Catch::Approx;

namespace {

SolverConfig admm_config() {
    SolverConfig c;
    c.method = SolverMethod::admm;
    c.admm_max_iterations = 200000;
    return c;
}

// Conic feasibility with the tolerances of the independent post-check.
void require_feasible(const ConicProblem& p, const SolveReport& r) {
    const auto f = check_feasibility(p, r.weights, 1e-6);
    INFO("equality error " << f.equality_error << ", max sidelobe " << f.max_sidelobe << ", max axial "
                           << f.max_axial);
    REQUIRE(f.equality_error <= 1e-6);
    REQUIRE(f.max_sidelobe <= p.rho_sl * (1.0 + 1e-6) + 1e-8);
    REQUIRE(f.max_axial <= p.axial_bound * (1.0 + 1e-6));
}

OmpState active_state(IndexList active) {
    OmpState s;
    s.active_set = std::move(active);
    return s;
}

const SynthesisContext& table1_context() {
    static const SynthesisContext ctx = prepare(load_config(test::config_path("table1_proposed.ini")).synthesis);
    return ctx;
}

const SynthesisContext& small_context() {
    static const SynthesisContext ctx = prepare(test::small_config());
    return ctx;
}

} // namespace

TEST_CASE("dB bounds convert to linear magnitudes", "[conic]") {
    CHECK(db_to_linear(-20.0) == Approx(0.1).epsilon(1e-15));
    CHECK(db_to_linear(0.0) == 1.0);
    CHECK(db_to_linear(-6.0) == Approx(0.501187233627272).epsilon(1e-12));
}

TEST_CASE("assembled blocks of the 11x11 full-array problem", "[conic]") {
    const auto& ctx = table1_context();
    IndexList all(121);
    for (std::size_t q = 0; q < 121; ++q) all[q] = q;
    const ConicProblem p = assemble_problem(ctx.matrices, ctx.grids, all, -20.0);
    CHECK(p.rho_sl == Approx(0.1));
    CHECK(p.main_row.size() == 121);

    // Independent counts from the sample coordinates.
    std::size_t sidelobe = 0;
    for (const auto& pt : ctx.grids.focal_plane) sidelobe += std::hypot(pt.x, pt.y) >= 1.08;
    std::size_t axial = 0;
    for (const auto& pt : ctx.grids.axial) axial += std::abs(pt.z - 5.0) > 1e-9;
    CHECK(p.sidelobe.rows() == Eigen::Index(sidelobe));
    CHECK(p.sidelobe.rows() < 2500);
    CHECK(p.sidelobe.cols() == 121);
    // The axial sample at z0 duplicates the equality row and is left out.
    CHECK(p.axial.rows() == Eigen::Index(axial));
    CHECK(axial == 99);

    // The main row is the focal sample.
    for (Eigen::Index q = 0; q < 121; ++q)
        CHECK(p.main_row(q) == ctx.matrices.focal.entries(Eigen::Index(ctx.grids.focal_index), q));

    CHECK(assemble_problem(ctx.matrices, ctx.grids, all, 0.0).rho_sl == 1.0);
    CHECK_THROWS_AS(assemble_problem(ctx.matrices, ctx.grids, {}, -20.0), InvalidArgument);
    CHECK_THROWS_AS(assemble_problem(ctx.matrices, ctx.grids, {500}, -20.0), InvalidArgument);
}

TEST_CASE("a single variable is fixed by the equality", "[conic]") {
    ConicProblem p;
    p.main_row = CRowVector::Constant(1, cplx(0.0, 0.5));
    p.sidelobe = CMatrix::Constant(1, 1, cplx(0.04, 0.0));
    p.axial = CMatrix(0, 1);
    p.rho_sl = 0.1;
    p.columns = {0};
    auto r = solve_conic(p);
    CHECK(r.status == SolveStatus::optimal);
    CHECK(std::abs(r.weights(0) - cplx(0.0, -2.0)) < 1e-15);
    CHECK(r.objective == Approx(2.0));

    p.sidelobe(0, 0) = 0.06; // |0.06 * 2| > 0.1
    r = solve_conic(p);
    CHECK(r.status == SolveStatus::infeasible);
}

TEST_CASE("single equality: objective 1/max|a_q| on the argmax column", "[conic]") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int trial = 0; trial < 40; ++trial) {
        const Eigen::Index n = 2 + trial % 3;
        ConicProblem p;
        p.main_row.resize(n);
        for (Eigen::Index j = 0; j < n; ++j) p.main_row(j) = cplx(normal(rng), normal(rng));
        p.sidelobe = CMatrix(0, n);
        p.axial = CMatrix(0, n);
        Eigen::Index arg = 0;
        const double amax = p.main_row.cwiseAbs().maxCoeff(&arg);

        for (auto method : {SolverMethod::interior_point, SolverMethod::admm}) {
            SolverConfig cfg = method == SolverMethod::admm ? admm_config() : SolverConfig{};
            const SolveReport r = solve_conic(p, cfg);
            INFO("method " << to_string(method) << ", n = " << n);
            REQUIRE(r.status == SolveStatus::optimal);
            const double tol = method == SolverMethod::interior_point ? 1e-6 : 1e-4;
            CHECK(test::relative_difference(r.objective, 1.0 / amax) <= tol);
            // Support on the argmax column, up to the interior-point residue.
            CHECK(std::abs(r.weights(arg)) >= (1.0 - 1e-4) * r.weights.cwiseAbs().sum());

            // Brute force over supports: each single column q costs 1/|a_q|.
            double best = std::numeric_limits<double>::infinity();
            for (Eigen::Index q = 0; q < n; ++q) best = std::min(best, 1.0 / std::abs(p.main_row(q)));
            CHECK(test::relative_difference(r.objective, best) <= tol);
        }
    }
}

TEST_CASE("solver objective matches the brute-force oracle on tiny instances", "[conic][oracle]") {
    std::mt19937_64 rng(2024);
    int compared = 0;
    for (int k = 0; k < 120; ++k) {
        const Eigen::Index n = 1 + k % 4;
        const Eigen::Index m = n == 1 ? k % 3 : 1 + (k / 4) % 3;
        const auto t = test::random_instance(rng, n, m);
        const ConicProblem p = t.problem();
        const auto [oracle, w] = test::BruteForceOracle(t).solve();
        const SolveReport r = solve_conic(p);
        INFO("instance " << k << ": n = " << n << ", m = " << m);
        REQUIRE(r.status == SolveStatus::optimal);
        require_feasible(p, r);
        CHECK(test::relative_difference(r.objective, oracle) <= 1e-3);
        // The oracle value is attained at a feasible point, so it can only be
        // lower than the solver's by the solver's tolerance.
        CHECK(r.objective <= oracle * (1.0 + 1e-6));
        ++compared;
    }
    CHECK(compared >= 100);
}

TEST_CASE("ADMM agrees with the oracle on tiny instances", "[conic][oracle][admm]") {
    std::mt19937_64 rng(99);
    for (int k = 0; k < 30; ++k) {
        const Eigen::Index n = 2 + k % 3;
        const Eigen::Index m = 1 + k % 3;
        const auto t = test::random_instance(rng, n, m);
        const ConicProblem p = t.problem();
        const auto [oracle, w] = test::BruteForceOracle(t).solve();
        const SolveReport r = solve_conic(p, admm_config());
        INFO("instance " << k);
        if (r.status != SolveStatus::optimal) continue; // covered by the status test below
        require_feasible(p, r);
        CHECK(test::relative_difference(r.objective, oracle) <= 1e-3);
    }
}

TEST_CASE("infeasible tiny instance is certified", "[conic]") {
    // |w_1 + w_2| <= 0.5 together with w_1 + w_2 = 1 has no solution.
    ConicProblem p;
    p.main_row = CRowVector::Ones(2);
    p.sidelobe = CMatrix::Ones(1, 2);
    p.axial = CMatrix(0, 2);
    p.rho_sl = 0.5;
    p.columns = {0, 1};
    CHECK(solve_conic(p).status == SolveStatus::infeasible);
    CHECK(solve_conic(p, admm_config()).status != SolveStatus::optimal);
}

TEST_CASE("solution dominates the scaled conjugate-phase point", "[conic]") {
    const auto& ctx = table1_context();
    IndexList all(121);
    for (std::size_t q = 0; q < 121; ++q) all[q] = q;
    ConicProblem p = assemble_problem(ctx.matrices, ctx.grids, all, 0.0);
    // Keep the focal-plane constraints only: the conjugate-phase field peaks
    // at the focus there, but not necessarily on the axis.
    p.axial = CMatrix(0, 121);
    CVector w = conjugate_phase_weights(ctx.geometry, ctx.grids.focus());
    w /= (p.main_row * w)(0);
    REQUIRE(check_feasibility(p, w).ok);
    const SolveReport r = solve_conic(p);
    REQUIRE(r.status == SolveStatus::optimal);
    CHECK(r.objective <= w.cwiseAbs().sum() * (1.0 + 1e-9));
}

TEST_CASE("refinement of the 11x11 pre-selection", "[conic]") {
    const auto& ctx = table1_context();
    const SynthesisConfig cfg = load_config(test::config_path("table1_proposed.ini")).synthesis;
    const OmpState omp = omp_preselect(ctx.matrices.focal, build_target_field(ctx.grids), ctx.orbits, ctx.quadrant,
                                       cfg.omp);
    const RefineResult r = refine(ctx.matrices, ctx.grids, omp, -20.0, cfg.solver, &ctx.orbits);
    REQUIRE(r.report.status == SolveStatus::optimal);
    CHECK(r.report.symmetrized);
    require_feasible(r.problem, r.report);
    const CVector field = evaluate_field(ctx.matrices.focal, r.weights);
    const double focus = std::abs(field(Eigen::Index(ctx.grids.focal_index)));
    double peak = 0.0;
    for (std::size_t i : ctx.grids.sidelobe_indices()) peak = std::max(peak, std::abs(field(Eigen::Index(i))));
    CHECK(20.0 * std::log10(peak / focus) <= -19.0);
    // Weights vanish outside the pre-selected set.
    std::vector<char> in(121, 0);
    for (std::size_t q : omp.active_set) in[q] = 1;
    for (Eigen::Index q = 0; q < 121; ++q)
        if (!in[std::size_t(q)]) CHECK(r.weights(q) == cplx(0.0, 0.0));
}

TEST_CASE("full active set reproduces the baseline problem", "[conic]") {
    const auto& ctx = small_context();
    const SynthesisConfig cfg = test::small_config();
    IndexList all(ctx.geometry.size());
    for (std::size_t q = 0; q < all.size(); ++q) all[q] = q;
    const RefineResult full = refine(ctx.matrices, ctx.grids, active_state(all), cfg.rho_sll_db, cfg.solver);
    const RefineResult base = baseline_full_l1(ctx.matrices, ctx.grids, cfg.rho_sll_db, cfg.solver);
    REQUIRE(full.report.status == SolveStatus::optimal);
    REQUIRE(base.report.status == SolveStatus::optimal);
    CHECK(full.problem.main_row == base.problem.main_row);
    CHECK(full.problem.sidelobe == base.problem.sidelobe);
    CHECK(full.problem.axial == base.problem.axial);
    CHECK(test::relative_difference(full.report.objective, base.report.objective) <= 1e-6);
}

TEST_CASE("a -60 dB bound over one 4-element orbit is infeasible", "[conic]") {
    const auto& ctx = table1_context();
    const SynthesisConfig cfg = load_config(test::config_path("table1_proposed.ini")).synthesis;
    IndexList orbit;
    for (const auto& o : ctx.orbits)
        if (o.members.size() == 4) {
            orbit = o.members;
            break;
        }
    REQUIRE(orbit.size() == 4);
    CHECK_THROWS_AS(refine(ctx.matrices, ctx.grids, active_state(orbit), -60.0, cfg.solver, &ctx.orbits), Infeasible);
    CHECK_THROWS_AS(refine(ctx.matrices, ctx.grids, active_state(orbit), -60.0, cfg.solver), Infeasible);

    // Coarse amplitude/phase scan: the best sidelobe ratio over four elements
    // stays far above -60 dB.
    const ConicProblem p = assemble_problem(ctx.matrices, ctx.grids, orbit, -60.0);
    const std::array<double, 4> amps{0.25, 0.5, 1.0, 2.0};
    double best = std::numeric_limits<double>::infinity();
    CVector w(4);
    w(0) = 1.0;
    for (int a1 = 0; a1 < 4; ++a1)
        for (int a2 = 0; a2 < 4; ++a2)
            for (int a3 = 0; a3 < 4; ++a3)
                for (int p1 = 0; p1 < 6; ++p1)
                    for (int p2 = 0; p2 < 6; ++p2)
                        for (int p3 = 0; p3 < 6; ++p3) {
                            const double step = std::numbers::pi / 3.0;
                            w(1) = std::polar(amps[std::size_t(a1)], p1 * step);
                            w(2) = std::polar(amps[std::size_t(a2)], p2 * step);
                            w(3) = std::polar(amps[std::size_t(a3)], p3 * step);
                            const double main = std::abs((p.main_row * w)(0));
                            if (main == 0.0) continue;
                            best = std::min(best, (p.sidelobe * w).cwiseAbs().maxCoeff() / main);
                        }
    CHECK(20.0 * std::log10(best) > -40.0);
}

TEST_CASE("a subset can never beat the full-array objective", "[conic][property]") {
    const auto& ctx = small_context();
    const SynthesisConfig cfg = test::small_config();
    const double base = baseline_full_l1(ctx.matrices, ctx.grids, cfg.rho_sll_db, cfg.solver).report.objective;
    for (std::size_t s : {6u, 8u, 10u, 12u}) {
        OmpConfig oc = cfg.omp;
        oc.s_max = s;
        const OmpState omp = omp_preselect(ctx.matrices.focal, build_target_field(ctx.grids), ctx.orbits,
                                           ctx.quadrant, oc);
        try {
            const RefineResult r = refine(ctx.matrices, ctx.grids, omp, cfg.rho_sll_db, cfg.solver, &ctx.orbits);
            if (r.report.status != SolveStatus::optimal) continue;
            require_feasible(r.problem, r.report);
            CHECK(r.report.objective >= base * (1.0 - 1e-6));
        } catch (const Infeasible&) {
        }
    }
}

TEST_CASE("symmetric data give orbit-constant magnitudes", "[conic][property]") {
    const auto& ctx = small_context();
    const SynthesisConfig cfg = test::small_config();
    OmpConfig oc = cfg.omp;
    oc.s_max = 10;
    const OmpState omp = omp_preselect(ctx.matrices.focal, build_target_field(ctx.grids), ctx.orbits, ctx.quadrant, oc);
    SolverConfig plain = cfg.solver;
    plain.symmetrize = false;
    const RefineResult sym = refine(ctx.matrices, ctx.grids, omp, cfg.rho_sll_db, cfg.solver, &ctx.orbits);
    const RefineResult full = refine(ctx.matrices, ctx.grids, omp, cfg.rho_sll_db, plain, &ctx.orbits);
    REQUIRE(sym.report.status == SolveStatus::optimal);
    REQUIRE(full.report.status == SolveStatus::optimal);
    CHECK(sym.report.symmetrized);
    CHECK_FALSE(full.report.symmetrized);
    CHECK(test::relative_difference(sym.report.objective, full.report.objective) <= 1e-6);
    for (const auto& o : ctx.orbits) {
        const double ref = std::abs(sym.weights(Eigen::Index(o.members.front())));
        for (std::size_t m : o.members)
            CHECK(std::abs(std::abs(sym.weights(Eigen::Index(m))) - ref) <= 1e-6 * std::max(ref, 1e-12));
    }
}

TEST_CASE("a common unit-modulus row factor leaves |w| unchanged", "[conic][property]") {
    std::mt19937_64 rng(17);
    for (int k = 0; k < 10; ++k) {
        const auto t = test::random_instance(rng, 3, 2);
        ConicProblem p = t.problem();
        const SolveReport a = solve_conic(p);
        const cplx phase = std::polar(1.0, 0.7 + 0.3 * k);
        p.main_row *= phase;
        p.sidelobe *= phase;
        const SolveReport b = solve_conic(p);
        REQUIRE(a.status == SolveStatus::optimal);
        REQUIRE(b.status == SolveStatus::optimal);
        CHECK((a.weights.cwiseAbs() - b.weights.cwiseAbs()).cwiseAbs().maxCoeff() <= 1e-6 * a.weights.norm());
    }
}

TEST_CASE("every optimal solution passes the independent post-check", "[conic][property]") {
    const auto& ctx = small_context();
    const SynthesisConfig cfg = test::small_config();
    int optimal = 0;
    for (double rho : {-10.0, -12.0, -13.0, -15.0})
        for (std::size_t s : {4u, 8u, 12u, 16u})
            for (auto method : {SolverMethod::interior_point, SolverMethod::admm}) {
                OmpConfig oc = cfg.omp;
                oc.s_max = s;
                const OmpState omp = omp_preselect(ctx.matrices.focal, build_target_field(ctx.grids), ctx.orbits,
                                                   ctx.quadrant, oc);
                SolverConfig sc = method == SolverMethod::admm ? admm_config() : cfg.solver;
                try {
                    const RefineResult r = refine(ctx.matrices, ctx.grids, omp, rho, sc, &ctx.orbits);
                    if (r.report.status != SolveStatus::optimal) continue;
                    INFO("rho " << rho << " s_max " << s << " method " << to_string(method));
                    require_feasible(r.problem, r.report);
                    ++optimal;
                } catch (const Infeasible&) {
                }
            }
    CHECK(optimal >= 10);
}

TEST_CASE("interior point and ADMM reach the same optimum", "[conic][admm]") {
    const auto& ctx = small_context();
    const SynthesisConfig cfg = test::small_config();
    const OmpState omp = omp_preselect(ctx.matrices.focal, build_target_field(ctx.grids), ctx.orbits, ctx.quadrant,
                                       cfg.omp);
    const RefineResult ipm = refine(ctx.matrices, ctx.grids, omp, cfg.rho_sll_db, cfg.solver, &ctx.orbits);
    const RefineResult admm = refine(ctx.matrices, ctx.grids, omp, cfg.rho_sll_db, admm_config(), &ctx.orbits);
    REQUIRE(ipm.report.status == SolveStatus::optimal);
    REQUIRE(admm.report.status == SolveStatus::optimal);
    CHECK(test::relative_difference(ipm.report.objective, admm.report.objective) <= 1e-3);
}

TEST_CASE("solver settings are validated", "[conic]") {
    const auto t = [] {
        std::mt19937_64 rng(1);
        return test::random_instance(rng, 2, 1);
    }();
    SolverConfig bad;
    bad.eps_abs = 0.0;
    CHECK_THROWS_AS(solve_conic(t.problem(), bad), InvalidArgument);
    CHECK(parse_solver_method("ipm") == SolverMethod::interior_point);
    CHECK(parse_solver_method("admm") == SolverMethod::admm);
    CHECK_THROWS_AS(parse_solver_method("simplex"), InvalidConfiguration);
}
