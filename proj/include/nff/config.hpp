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

// Experiment configuration files: INI sections with key = value pairs.
// Full-line comments start with ';' or '#'. Unknown sections or keys are
// rejected so a typo cannot silently fall back to a default.
//
//   [array]        nx, ny, spacing, pattern
//   [focus]        x, y, z0
//   [focal_plane]  extent, points_per_side, desired_beamwidth, exclusion_radius
//   [axial]        z_min, z_max, count
//   [synthesis]    rho_sll_db, s_max, epsilon, tie_tolerance, symmetry_reduction,
//                  escalation_increment, max_retries
//   [solver]       method, eps_abs, eps_rel, max_iterations, admm_max_iterations,
//                  penalty, adaptive_penalty, relaxation, eps_infeasible,
//                  feasibility_slack, symmetrize
//   [metrics]      normalization, activity_threshold, beamwidth_level
//   [sweep]        s_max (comma-separated, strictly increasing)

#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "nff/pipeline.hpp"

namespace nff {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
    SynthesisConfig synthesis;
    std::vector<std::size_t> sweep_s_max;
};

namespace detail {

inline const std::map<std::string, std::set<std::string>>& config_schema() {
    static const std::map<std::string, std::set<std::string>> schema{
        {"array", {"nx", "ny", "spacing", "pattern"}},
        {"focus", {"x", "y", "z0"}},
        {"focal_plane", {"extent", "points_per_side", "desired_beamwidth", "exclusion_radius"}},
        {"axial", {"z_min", "z_max", "count"}},
        {"synthesis",
         {"rho_sll_db", "s_max", "epsilon", "tie_tolerance", "symmetry_reduction", "escalation_increment",
          "max_retries"}},
        {"solver",
         {"method", "eps_abs", "eps_rel", "max_iterations", "admm_max_iterations", "penalty", "adaptive_penalty",
          "relaxation", "eps_infeasible", "feasibility_slack", "symmetrize"}},
        {"metrics", {"normalization", "activity_threshold", "beamwidth_level"}},
        {"sweep", {"s_max"}},
    };
    return schema;
}

inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::vector<std::size_t> parse_index_list(const std::string& text, const std::string& what) {
    std::vector<std::size_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        if (b == std::string::npos) throw InvalidConfiguration(what + ": empty list entry");
        item = item.substr(b, e - b + 1);
        std::size_t pos = 0;
        long long v = 0;
        try {
            v = std::stoll(item, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos != item.size() || v < 1) throw InvalidConfiguration(what + ": '" + item + "' is not a positive integer");
        out.push_back(std::size_t(v));
    }
    return out;
}

} // namespace detail

/// Parses configuration text. Throws InvalidConfiguration with the offending
/// key on any error, including failed cross-field validation.
inline ExperimentConfig parse_config(const std::string& text) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        std::istringstream in(text);
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw InvalidConfiguration(std::string("malformed configuration: ") + e.message() + " (line " +
                                   std::to_string(e.line()) + ")");
    }
    const auto& schema = detail::config_schema();
    for (const auto& [section, body] : tree) {
        if (!body.data().empty()) throw InvalidConfiguration("entry '" + section + "' must be inside a section");
        const auto it = schema.find(section);
        if (it == schema.end()) throw InvalidConfiguration("unknown configuration section [" + section + "]");
        for (const auto& kv : body)
            if (!it->second.count(kv.first))
                throw InvalidConfiguration("unknown key '" + kv.first + "' in section [" + section + "]");
    }

    auto get = [&]<typename T>(const std::string& path, T& target) {
        const auto v = tree.get_optional<std::string>(path);
        if (!v) return;
        try {
            if constexpr (std::is_same_v<T, bool>) {
                if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") target = true;
                else if (*v == "false" || *v == "0" || *v == "no" || *v == "off") target = false;
                else throw std::invalid_argument("not a boolean");
            } else if constexpr (std::is_same_v<T, std::size_t>) {
                std::size_t pos = 0;
                const long long x = std::stoll(*v, &pos);
                if (pos != v->size() || x < 0) throw std::invalid_argument("not a non-negative integer");
                target = std::size_t(x);
            } else {
                std::size_t pos = 0;
                const double x = std::stod(*v, &pos);
                if (pos != v->size() || !std::isfinite(x)) throw std::invalid_argument("not a finite number");
                target = x;
            }
        } catch (const std::exception&) {
            throw InvalidConfiguration("invalid value '" + *v + "' for " + path);
        }
    };

    ExperimentConfig ec;
    SynthesisConfig& c = ec.synthesis;
    get("array.nx", c.nx);
    get("array.ny", c.ny);
    get("array.spacing", c.spacing);
    if (auto p = tree.get_optional<std::string>("array.pattern")) c.pattern = parse_element_pattern(*p);
    get("focus.x", c.focus_x);
    get("focus.y", c.focus_y);
    get("focus.z0", c.z0);
    get("focal_plane.extent", c.extent);
    get("focal_plane.points_per_side", c.points_per_side);
    get("focal_plane.desired_beamwidth", c.desired_beamwidth);
    if (tree.get_optional<std::string>("focal_plane.exclusion_radius")) {
        double r = 0.0;
        get("focal_plane.exclusion_radius", r);
        c.exclusion_radius = r;
    }
    get("axial.z_min", c.z_min);
    get("axial.z_max", c.z_max);
    get("axial.count", c.axial_count);
    get("synthesis.rho_sll_db", c.rho_sll_db);
    get("synthesis.s_max", c.omp.s_max);
    get("synthesis.epsilon", c.omp.epsilon);
    get("synthesis.tie_tolerance", c.omp.correlation_tie_tol);
    get("synthesis.symmetry_reduction", c.omp.use_symmetry_reduction);
    get("synthesis.escalation_increment", c.escalation_increment);
    get("synthesis.max_retries", c.max_retries);
    if (auto m = tree.get_optional<std::string>("solver.method")) c.solver.method = parse_solver_method(*m);
    get("solver.eps_abs", c.solver.eps_abs);
    get("solver.eps_rel", c.solver.eps_rel);
    get("solver.max_iterations", c.solver.max_iterations);
    get("solver.admm_max_iterations", c.solver.admm_max_iterations);
    get("solver.penalty", c.solver.penalty);
    get("solver.adaptive_penalty", c.solver.adaptive_penalty);
    get("solver.relaxation", c.solver.relaxation);
    get("solver.eps_infeasible", c.solver.eps_infeasible);
    get("solver.feasibility_slack", c.solver.feasibility_slack);
    get("solver.symmetrize", c.solver.symmetrize);
    if (auto n = tree.get_optional<std::string>("metrics.normalization"))
        c.metrics.normalization = parse_peak_normalization(*n);
    get("metrics.activity_threshold", c.metrics.activity_threshold);
    get("metrics.beamwidth_level", c.metrics.beamwidth_level);
    if (auto s = tree.get_optional<std::string>("sweep.s_max")) {
        ec.sweep_s_max = detail::parse_index_list(*s, "sweep.s_max");
        try {
            SweepSpec{c, ec.sweep_s_max}.validate();
        } catch (const InvalidArgument& e) {
            throw InvalidConfiguration(std::string("sweep.s_max: ") + e.what());
        }
    }
    if (!(c.metrics.beamwidth_level > 0.0 && c.metrics.beamwidth_level < 1.0))
        throw InvalidConfiguration("metrics.beamwidth_level must lie in (0, 1)");
    if (c.solver.max_iterations < 1 || c.solver.admm_max_iterations < 1)
        throw InvalidConfiguration("solver iteration limits must be at least 1");
    c.validate();
    return ec;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read configuration file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

/// Complete INI text of a configuration; parse_config(to_ini(c)) == c.
inline std::string to_ini(const ExperimentConfig& ec) {
    using detail::fmt;
    const SynthesisConfig& c = ec.synthesis;
    std::ostringstream os;
    os << "[array]\nnx = " << c.nx << "\nny = " << c.ny << "\nspacing = " << fmt(c.spacing)
       << "\npattern = " << to_string(c.pattern) << "\n\n";
    os << "[focus]\nx = " << fmt(c.focus_x) << "\ny = " << fmt(c.focus_y) << "\nz0 = " << fmt(c.z0) << "\n\n";
    os << "[focal_plane]\nextent = " << fmt(c.extent) << "\npoints_per_side = " << c.points_per_side
       << "\ndesired_beamwidth = " << fmt(c.desired_beamwidth) << "\n";
    if (c.exclusion_radius) os << "exclusion_radius = " << fmt(*c.exclusion_radius) << "\n";
    os << "\n[axial]\nz_min = " << fmt(c.z_min) << "\nz_max = " << fmt(c.z_max) << "\ncount = " << c.axial_count
       << "\n\n";
    os << "[synthesis]\nrho_sll_db = " << fmt(c.rho_sll_db) << "\ns_max = " << c.omp.s_max
       << "\nepsilon = " << fmt(c.omp.epsilon) << "\ntie_tolerance = " << fmt(c.omp.correlation_tie_tol)
       << "\nsymmetry_reduction = " << (c.omp.use_symmetry_reduction ? "true" : "false")
       << "\nescalation_increment = " << c.escalation_increment << "\nmax_retries = " << c.max_retries << "\n\n";
    os << "[solver]\nmethod = " << to_string(c.solver.method) << "\neps_abs = " << fmt(c.solver.eps_abs)
       << "\neps_rel = " << fmt(c.solver.eps_rel) << "\nmax_iterations = " << c.solver.max_iterations
       << "\nadmm_max_iterations = " << c.solver.admm_max_iterations << "\npenalty = " << fmt(c.solver.penalty)
       << "\nadaptive_penalty = " << (c.solver.adaptive_penalty ? "true" : "false")
       << "\nrelaxation = " << fmt(c.solver.relaxation) << "\neps_infeasible = " << fmt(c.solver.eps_infeasible)
       << "\nfeasibility_slack = " << fmt(c.solver.feasibility_slack)
       << "\nsymmetrize = " << (c.solver.symmetrize ? "true" : "false") << "\n\n";
    os << "[metrics]\nnormalization = " << to_string(c.metrics.normalization)
       << "\nactivity_threshold = " << fmt(c.metrics.activity_threshold)
       << "\nbeamwidth_level = " << fmt(c.metrics.beamwidth_level) << "\n";
    if (!ec.sweep_s_max.empty()) {
        os << "\n[sweep]\ns_max = ";
        for (std::size_t i = 0; i < ec.sweep_s_max.size(); ++i) os << (i ? ", " : "") << ec.sweep_s_max[i];
        os << "\n";
    }
    return os.str();
}

} // namespace nff
