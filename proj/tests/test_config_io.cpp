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

#include <filesystem>
#include <fstream>
#include <random>

#include "nff/config.hpp"
#include "nff/io.hpp"
#include "support.hpp"

using namespace nff;
using Catch::Approx;
namespace fs = std::filesystem;

namespace {

// Fresh per-test directory under the system temp dir, removed afterwards.
struct ScratchDir {
    fs::path path;
    ScratchDir() {
        std::random_device rd;
        path = fs::temp_directory_path() / ("nff_test_" + std::to_string(rd()) + std::to_string(rd()));
        fs::create_directories(path);
    }
    ~ScratchDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    fs::path operator/(const std::string& name) const { return path / name; }
};

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

const std::string kMinimal = "[array]\nnx = 7\nny = 7\n[focus]\nz0 = 3\n[focal_plane]\nextent = 4\n"
                             "points_per_side = 20\ndesired_beamwidth = 1.0\n[axial]\nz_min = 0.5\nz_max = 6\n"
                             "count = 40\n[synthesis]\nrho_sll_db = -12\ns_max = 8\n";

void check_same(const SynthesisConfig& a, const SynthesisConfig& b) {
    CHECK(a.same_problem(b));
    CHECK(a.omp.s_max == b.omp.s_max);
    CHECK(a.omp.epsilon == b.omp.epsilon);
    CHECK(a.omp.correlation_tie_tol == b.omp.correlation_tie_tol);
    CHECK(a.omp.use_symmetry_reduction == b.omp.use_symmetry_reduction);
    CHECK(a.escalation_increment == b.escalation_increment);
    CHECK(a.max_retries == b.max_retries);
    CHECK(a.solver.method == b.solver.method);
    CHECK(a.solver.eps_abs == b.solver.eps_abs);
    CHECK(a.solver.eps_rel == b.solver.eps_rel);
    CHECK(a.solver.max_iterations == b.solver.max_iterations);
    CHECK(a.solver.admm_max_iterations == b.solver.admm_max_iterations);
    CHECK(a.solver.penalty == b.solver.penalty);
    CHECK(a.solver.adaptive_penalty == b.solver.adaptive_penalty);
    CHECK(a.solver.relaxation == b.solver.relaxation);
    CHECK(a.solver.eps_infeasible == b.solver.eps_infeasible);
    CHECK(a.solver.feasibility_slack == b.solver.feasibility_slack);
    CHECK(a.solver.symmetrize == b.solver.symmetrize);
    CHECK(a.metrics.normalization == b.metrics.normalization);
    CHECK(a.metrics.activity_threshold == b.metrics.activity_threshold);
    CHECK(a.metrics.beamwidth_level == b.metrics.beamwidth_level);
    CHECK(a.exclusion_radius == b.exclusion_radius);
    CHECK(a.desired_beamwidth == b.desired_beamwidth);
}

} // namespace

TEST_CASE("shipped configurations load and round-trip", "[config]") {
    for (const char* name : {"table1_proposed.ini", "table1_baseline.ini", "table2_proposed.ini", "table2_baseline.ini"}) {
        INFO(name);
        const ExperimentConfig ec = load_config(test::config_path(name));
        const ExperimentConfig back = parse_config(to_ini(ec));
        check_same(ec.synthesis, back.synthesis);
        CHECK(back.sweep_s_max == ec.sweep_s_max);
        CHECK(to_ini(back) == to_ini(ec));
    }
    const auto t1 = load_config(test::config_path("table1_proposed.ini")).synthesis;
    CHECK(t1.nx == 11);
    CHECK(t1.z0 == 5.0);
    CHECK(t1.omp.s_max == 20);
    CHECK(t1.rho_sll_db == -20.0);
    const auto t2 = load_config(test::config_path("table2_proposed.ini"));
    CHECK(t2.synthesis.nx == 21);
    CHECK(t2.sweep_s_max == std::vector<std::size_t>{2, 4, 6, 8, 10, 12, 14, 16, 18, 20, 22, 24, 26, 28, 30});
}

TEST_CASE("non-default values survive the round trip exactly", "[config]") {
    ExperimentConfig ec = parse_config(kMinimal);
    SynthesisConfig& c = ec.synthesis;
    c.spacing = 0.1 + 0.2; // not representable in a short decimal
    c.pattern = ElementPattern::isotropic;
    c.exclusion_radius = 1.0 / 3.0;
    c.omp.epsilon = 1e-7;
    c.omp.use_symmetry_reduction = false;
    c.solver.method = SolverMethod::admm;
    c.solver.adaptive_penalty = false;
    c.solver.penalty = 2.5;
    c.metrics.normalization = PeakNormalization::raw;
    c.metrics.beamwidth_level = 0.5;
    ec.sweep_s_max = {3, 5, 9};
    const ExperimentConfig back = parse_config(to_ini(ec));
    check_same(c, back.synthesis);
    CHECK(back.synthesis.spacing == c.spacing);
    CHECK(back.sweep_s_max == ec.sweep_s_max);
}

TEST_CASE("defaults and comments", "[config]") {
    const ExperimentConfig ec = parse_config("; leading comment\n# hash comment\n" + kMinimal);
    CHECK(ec.synthesis.spacing == 0.5);
    CHECK(ec.synthesis.pattern == ElementPattern::y_dipole);
    CHECK(ec.synthesis.exclusion() == 1.0); // falls back to the desired beamwidth
    CHECK(ec.synthesis.solver.method == SolverMethod::interior_point);
    CHECK(ec.sweep_s_max.empty());
}

TEST_CASE("configuration errors name the offending entry", "[config]") {
    // Replaces the first occurrence of `from` in the minimal config.
    auto edit = [](const std::string& from, const std::string& to) {
        std::string t = kMinimal;
        t.replace(t.find(from), from.size(), to);
        return t;
    };
    auto message = [](const std::string& text) {
        try {
            parse_config(text);
        } catch (const InvalidConfiguration& e) {
            return std::string(e.what());
        }
        return std::string("no error");
    };
    using Catch::Matchers::ContainsSubstring;
    CHECK_THAT(message(kMinimal + "[bogus]\nx = 1\n"), ContainsSubstring("[bogus]"));
    CHECK_THAT(message(kMinimal + "[solver]\ntolerance = 1\n"), ContainsSubstring("tolerance"));
    CHECK_THAT(message(kMinimal + "[solver]\neps_abs = tiny\n"), ContainsSubstring("solver.eps_abs"));
    CHECK_THAT(message(kMinimal + "[solver]\nmax_iterations = -3\n"), ContainsSubstring("solver.max_iterations"));
    CHECK_THAT(message(kMinimal + "[solver]\nsymmetrize = maybe\n"), ContainsSubstring("solver.symmetrize"));
    CHECK_THAT(message(kMinimal + "[solver]\nmethod = simplex\n"), ContainsSubstring("simplex"));
    CHECK_THAT(message(edit("nx = 7", "pattern = horn\nnx = 7")), ContainsSubstring("horn"));
    CHECK_THAT(message(kMinimal + "[sweep]\ns_max = 4, x\n"), ContainsSubstring("sweep.s_max"));
    CHECK_THAT(message(kMinimal + "[sweep]\ns_max = 4, 2\n"), ContainsSubstring("increasing"));
    CHECK_THAT(message(kMinimal + "[metrics]\nbeamwidth_level = 1.5\n"), ContainsSubstring("beamwidth_level"));
    CHECK_THAT(message(edit("z0 = 3", "x = 1\nz0 = 3")), ContainsSubstring("on-axis"));
    CHECK_THAT(message("stray = 1\n" + kMinimal), ContainsSubstring("stray"));
    CHECK_THAT(message("[array\nnx = 3\n"), ContainsSubstring("malformed"));
    CHECK_THAT(message(edit("rho_sll_db = -12", "rho_sll_db = 3")), ContainsSubstring("sidelobe"));
    CHECK_THROWS_AS(load_config("/nonexistent/dir/config.ini"), IoError);
}

TEST_CASE("weights CSV round trip is exact", "[io]") {
    ScratchDir dir;
    std::mt19937_64 rng(7);
    std::normal_distribution<double> n(0.0, 1.0);
    CVector w(121);
    for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = cplx(n(rng), n(rng)) * std::pow(10.0, n(rng) * 5.0);
    w(3) = 0.0;
    w(7) = cplx(-0.0, 1e-300);
    write_weights(dir / "w.csv", w);
    const CVector back = read_weights(dir / "w.csv", 121);
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        CHECK(back(i).real() == w(i).real());
        CHECK(back(i).imag() == w(i).imag());
    }
}

TEST_CASE("malformed weights files are rejected", "[io]") {
    ScratchDir dir;
    const std::string header = "index,re,im,abs,phase\n";
    auto bad = [&](const std::string& body, std::size_t expected = 2) {
        write_text(dir / "w.csv", body);
        return read_weights(dir / "w.csv", expected);
    };
    CHECK_NOTHROW(bad(header + "0,1,0,1,0\n1,0.5,-0.5,0,0\n"));
    CHECK_NOTHROW(bad(header + "0,1,0\n1,2,3\n")); // the derived columns are optional
    CHECK_THROWS_AS(bad(""), InvalidInput);
    CHECK_THROWS_AS(bad(header), InvalidInput);
    CHECK_THROWS_AS(bad(header + "0,1,0\n"), InvalidInput);               // too few
    CHECK_THROWS_AS(bad(header + "0,1,0\n2,1,0\n"), InvalidInput);        // gap
    CHECK_THROWS_AS(bad(header + "0,1,0\n1,nan,0\n"), InvalidInput);      // non-finite
    CHECK_THROWS_AS(bad(header + "0,1,0\n1,1x,0\n"), InvalidInput);       // trailing text
    CHECK_THROWS_AS(bad(header + "0,1\n1,1,0\n"), InvalidInput);          // missing column
    CHECK_THROWS_AS(read_weights(dir / "absent.csv", 2), IoError);
}

TEST_CASE("metrics JSON has exactly the six summary keys", "[io]") {
    MetricSet m;
    m.sparsity_pct = 45.45;
    m.beamwidth = std::numeric_limits<double>::quiet_NaN();
    m.sll_db = -20.0;
    m.peak_field = 1.5;
    m.focal_shift = 0.05;
    m.runtime = 0.1;
    const auto j = metrics_json(m);
    std::vector<std::string> keys;
    for (const auto& [k, v] : j.items()) keys.push_back(k);
    CHECK(keys == std::vector<std::string>{"S(%)", "BW/lambda", "SLL (dB)", "|E_p| (V/m)", "dz/lambda", "Time (s)"});
    CHECK(j["BW/lambda"].is_null());
    CHECK(j["SLL (dB)"].get<double>() == -20.0);

    ScratchDir dir;
    write_json(dir / "m.json", j);
    CHECK(read_json(dir / "m.json") == j);
    write_text(dir / "bad.json", "{ nope");
    CHECK_THROWS_AS(read_json(dir / "bad.json"), InvalidInput);
    CHECK_THROWS_AS(read_json(dir / "absent.json"), IoError);
}

TEST_CASE("conic problem dump round trip", "[io]") {
    const SynthesisConfig cfg = test::small_config();
    const SynthesisContext ctx = prepare(cfg);
    const RunOutput run = run_proposed(cfg, ctx);
    IndexList active = run.omp->active_set;
    std::sort(active.begin(), active.end());
    const ConicProblem p = assemble_problem(ctx.matrices, ctx.grids, active, cfg.rho_sll_db);

    ScratchDir dir;
    dump_problem(dir / "p.txt", p);
    const ConicProblem q = load_problem(dir / "p.txt");
    CHECK(q.rho_sl == p.rho_sl);
    CHECK(q.axial_bound == p.axial_bound);
    CHECK(q.columns == p.columns);
    CHECK(q.main_row == p.main_row);
    CHECK(q.sidelobe == p.sidelobe);
    CHECK(q.axial == p.axial);

    // The reloaded problem solves to the same optimum.
    const SolveReport a = solve_conic(p, cfg.solver);
    const SolveReport b = solve_conic(q, cfg.solver);
    CHECK(b.status == SolveStatus::optimal);
    CHECK(b.objective == Approx(a.objective).epsilon(1e-9));

    write_text(dir / "bad.txt", "nff-conic-problem 2\n");
    CHECK_THROWS_AS(load_problem(dir / "bad.txt"), InvalidInput);
    write_text(dir / "trunc.txt", "nff-conic-problem 1\nrho_sl 0.1\naxial_bound 1\ncolumns 2 0 1\nmain 1 2\n1 0\n");
    CHECK_THROWS_AS(load_problem(dir / "trunc.txt"), InvalidInput);
    CHECK_THROWS_AS(load_problem(dir / "absent.txt"), IoError);
}

TEST_CASE("CSV exports have the documented columns", "[io]") {
    const SynthesisConfig cfg = test::small_config();
    const RunOutput run = run_proposed(cfg);
    ScratchDir dir;
    auto lines = [](const fs::path& p) {
        std::ifstream in(p);
        std::vector<std::string> out;
        for (std::string l; std::getline(in, l);) out.push_back(l);
        return out;
    };
    write_layout(dir / "layout.csv", run.result.geometry);
    auto l = lines(dir / "layout.csv");
    CHECK(l.front() == "index,x,y,z");
    CHECK(l.size() == 50);

    write_field(dir / "f.csv", run.result.grids.focal_plane, run.result.focal_plane_field);
    l = lines(dir / "f.csv");
    CHECK(l.front() == "x,y,z,re,im,abs,db");
    CHECK(l.size() == run.result.grids.focal_plane.size() + 1);
    // The strongest sample sits at 0 dB.
    bool zero_db = false;
    for (std::size_t i = 1; i < l.size(); ++i) zero_db = zero_db || l[i].ends_with(",0");
    CHECK(zero_db);

    write_lateral_cuts(dir / "cuts.csv", run.result);
    l = lines(dir / "cuts.csv");
    CHECK(l.front() == "axis,x,y,z,re,im,abs,db");
    CHECK(l.size() == run.result.grids.x_cut.size() + run.result.grids.y_cut.size() + 1);

    write_trace(dir / "trace.csv", *run.omp);
    l = lines(dir / "trace.csv");
    CHECK(l.front() == "iteration,representative,orbit_size,members,residual_norm");
    CHECK(l.size() == run.omp->trace.size() + 1);

    const auto xz = xz_map_points(cfg, 11);
    CHECK(xz.size() == 11 * cfg.axial_count);
    CHECK_THROWS_AS(write_layout(dir / "missing" / "x.csv", run.result.geometry), IoError);
}
