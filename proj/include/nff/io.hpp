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

// File formats.
//
// CSV: comma separated, header row, LF line endings, numbers printed with
// %.17g so every double reads back bit-exactly.
//
// Problem dump (plain text, whitespace separated):
//
//   nff-conic-problem 1
//   rho_sl <value>
//   axial_bound <value>
//   columns <n> <element index> ...
//   main 1 <n>
//   <re> <im> ... (one matrix row per line, row-major)
//   sidelobe <m_s> <n>
//   ...
//   axial <m_z> <n>
//   ...
//
// Lines starting with '#' are comments.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nff/common.hpp"
#include "nff/config.hpp"
#include "nff/conic.hpp"
#include "nff/metrics.hpp"
#include "nff/omp.hpp"
#include "nff/pipeline.hpp"

namespace nff {

inline constexpr const char* kVersion = "1.0.0";

struct InvalidInput : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

namespace detail {

inline std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    return out;
}

inline void close_output(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) throw IoError("error while writing '" + path.string() + "'");
}

inline std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c == '\n' ? ' ' : c);
    return q + "\"";
}

inline double db_relative(double v, double peak) {
    return peak > 0.0 && v > 0.0 ? 20.0 * std::log10(v / peak) : -std::numeric_limits<double>::infinity();
}

} // namespace detail

/// Layout export: index, x, y, z.
inline void write_layout(const std::filesystem::path& path, const ArrayGeometry& g) {
    auto out = detail::open_output(path);
    out << "index,x,y,z\n";
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Point3& p = g.position(i);
        out << i << ',' << detail::fmt(p.x) << ',' << detail::fmt(p.y) << ',' << detail::fmt(p.z) << '\n';
    }
    detail::close_output(out, path);
}

/// Weights export: index, re, im, abs, phase (radians).
inline void write_weights(const std::filesystem::path& path, const CVector& w) {
    auto out = detail::open_output(path);
    out << "index,re,im,abs,phase\n";
    for (Eigen::Index i = 0; i < w.size(); ++i)
        out << i << ',' << detail::fmt(w(i).real()) << ',' << detail::fmt(w(i).imag()) << ','
            << detail::fmt(std::abs(w(i))) << ',' << detail::fmt(std::arg(w(i))) << '\n';
    detail::close_output(out, path);
}

/// Reads a weights CSV (index, re, im, ...). Indices must run 0..n-1 and n
/// must equal `expected`.
inline CVector read_weights(const std::filesystem::path& path, std::size_t expected) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read weights file '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line)) throw InvalidInput("weights file '" + path.string() + "' is empty");
    std::vector<cplx> w;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string idx, re, im;
        if (!std::getline(ss, idx, ',') || !std::getline(ss, re, ',') || !std::getline(ss, im, ','))
            throw InvalidInput("weights file line " + std::to_string(lineno) + ": expected index,re,im");
        try {
            std::size_t p1 = 0, p2 = 0, p3 = 0;
            const long long i = std::stoll(idx, &p1);
            const double r = std::stod(re, &p2);
            const double m = std::stod(im, &p3);
            if (p1 != idx.size() || p2 != re.size() || p3 != im.size()) throw std::invalid_argument("trailing text");
            if (i != (long long)w.size()) throw std::invalid_argument("indices must run 0, 1, 2, ...");
            if (!std::isfinite(r) || !std::isfinite(m)) throw std::invalid_argument("non-finite weight");
            w.emplace_back(r, m);
        } catch (const std::exception& e) {
            throw InvalidInput("weights file line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    if (w.size() != expected)
        throw InvalidInput("weights file has " + std::to_string(w.size()) + " entries, array has " +
                           std::to_string(expected) + " elements");
    CVector out(Eigen::Index(w.size()));
    for (std::size_t i = 0; i < w.size(); ++i) out(Eigen::Index(i)) = w[i];
    return out;
}

/// Field export: x, y, z, re, im, abs, db (relative to the largest |E| in the file).
inline void write_field(const std::filesystem::path& path, std::span<const Point3> pts, const CVector& field) {
    if (std::size_t(field.size()) != pts.size()) throw DimensionMismatch("field does not match its points");
    const double peak = field.size() ? field.cwiseAbs().maxCoeff() : 0.0;
    auto out = detail::open_output(path);
    out << "x,y,z,re,im,abs,db\n";
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const cplx e = field(Eigen::Index(i));
        out << detail::fmt(pts[i].x) << ',' << detail::fmt(pts[i].y) << ',' << detail::fmt(pts[i].z) << ','
            << detail::fmt(e.real()) << ',' << detail::fmt(e.imag()) << ',' << detail::fmt(std::abs(e)) << ','
            << detail::fmt(detail::db_relative(std::abs(e), peak)) << '\n';
    }
    detail::close_output(out, path);
}

/// Lateral cuts through the focus: axis, then the field columns.
inline void write_lateral_cuts(const std::filesystem::path& path, const SynthesisResult& r) {
    const double peak = std::max(r.x_cut_field.cwiseAbs().maxCoeff(), r.y_cut_field.cwiseAbs().maxCoeff());
    auto out = detail::open_output(path);
    out << "axis,x,y,z,re,im,abs,db\n";
    auto rows = [&](const char* axis, const std::vector<Point3>& pts, const CVector& f) {
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const cplx e = f(Eigen::Index(i));
            out << axis << ',' << detail::fmt(pts[i].x) << ',' << detail::fmt(pts[i].y) << ','
                << detail::fmt(pts[i].z) << ',' << detail::fmt(e.real()) << ',' << detail::fmt(e.imag()) << ','
                << detail::fmt(std::abs(e)) << ',' << detail::fmt(detail::db_relative(std::abs(e), peak)) << '\n';
        }
    };
    rows("x", r.grids.x_cut, r.x_cut_field);
    rows("y", r.grids.y_cut, r.y_cut_field);
    detail::close_output(out, path);
}

/// Sample points of the xoz map: x across twice the focal-plane extent,
/// z over the axial span.
inline std::vector<Point3> xz_map_points(const SynthesisConfig& c, std::size_t nx_samples = 101) {
    std::vector<Point3> pts;
    const auto xs = centered_coordinates(nx_samples, 2.0 * c.extent / double(nx_samples - 1));
    const auto zs = build_axial_grid(c.z_min, c.z_max, c.axial_count);
    pts.reserve(xs.size() * zs.size());
    for (const Point3& z : zs)
        for (double x : xs) pts.push_back({x, 0.0, z.z});
    return pts;
}

/// OMP trace: iteration, representative, orbit size, members, residual norm.
inline void write_trace(const std::filesystem::path& path, const OmpState& s) {
    auto out = detail::open_output(path);
    out << "iteration,representative,orbit_size,members,residual_norm\n";
    for (const auto& it : s.trace) {
        std::string members;
        for (std::size_t k = 0; k < it.orbit.members.size(); ++k)
            members += (k ? " " : "") + std::to_string(it.orbit.members[k]);
        out << it.iteration << ',' << it.orbit.representative << ',' << it.orbit.members.size() << ',' << members
            << ',' << detail::fmt(it.residual_norm) << '\n';
    }
    detail::close_output(out, path);
}

/// The six summary columns.
inline nlohmann::ordered_json metrics_json(const MetricSet& m) {
    auto num = [](double v) { return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(); };
    nlohmann::ordered_json j;
    j["S(%)"] = num(m.sparsity_pct);
    j["BW/lambda"] = num(m.beamwidth);
    j["SLL (dB)"] = num(m.sll_db);
    j["|E_p| (V/m)"] = num(m.peak_field);
    j["dz/lambda"] = num(m.focal_shift);
    j["Time (s)"] = num(m.runtime);
    return j;
}

inline void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& j) {
    auto out = detail::open_output(path);
    out << j.dump(2) << '\n';
    detail::close_output(out, path);
}

inline nlohmann::ordered_json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read '" + path.string() + "'");
    try {
        return nlohmann::ordered_json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput("'" + path.string() + "' is not valid JSON: " + e.what());
    }
}

/// Sweep table: one row per s_max.
inline void write_sweep(const std::filesystem::path& path, const std::vector<SweepPoint>& pts) {
    auto out = detail::open_output(path);
    out << "s_max,final_s_max,active,sll_db,beamwidth,sparsity_pct,time_s,status,message\n";
    for (const auto& p : pts)
        out << p.s_max << ',' << p.final_s_max << ',' << p.active << ',' << detail::fmt(p.sll_db) << ','
            << detail::fmt(p.beamwidth) << ',' << detail::fmt(p.sparsity_pct) << ',' << detail::fmt(p.time) << ','
            << p.status << ',' << detail::csv_quote(p.message) << '\n';
    detail::close_output(out, path);
}

inline void dump_problem(const std::filesystem::path& path, const ConicProblem& p) {
    auto out = detail::open_output(path);
    out << "nff-conic-problem 1\n";
    out << "rho_sl " << detail::fmt(p.rho_sl) << "\naxial_bound " << detail::fmt(p.axial_bound) << "\n";
    out << "columns " << p.columns.size();
    for (std::size_t c : p.columns) out << ' ' << c;
    out << '\n';
    auto block = [&](const char* name, const auto& M) {
        out << name << ' ' << M.rows() << ' ' << M.cols() << '\n';
        for (Eigen::Index r = 0; r < M.rows(); ++r) {
            for (Eigen::Index c = 0; c < M.cols(); ++c)
                out << (c ? " " : "") << detail::fmt(M(r, c).real()) << ' ' << detail::fmt(M(r, c).imag());
            out << '\n';
        }
    };
    block("main", p.main_row);
    block("sidelobe", p.sidelobe);
    block("axial", p.axial);
    detail::close_output(out, path);
}

inline ConicProblem load_problem(const std::filesystem::path& path) {
    std::ifstream file(path);
    if (!file) throw IoError("cannot read problem file '" + path.string() + "'");
    std::stringstream in;
    for (std::string line; std::getline(file, line);)
        if (line.empty() || line[0] != '#') in << line << '\n';
    auto expect = [&](const std::string& word) {
        std::string w;
        if (!(in >> w) || w != word) throw InvalidInput("problem file: expected '" + word + "', found '" + w + "'");
    };
    ConicProblem p;
    int version = 0;
    expect("nff-conic-problem");
    if (!(in >> version) || version != 1) throw InvalidInput("problem file: unsupported version");
    expect("rho_sl");
    in >> p.rho_sl;
    expect("axial_bound");
    in >> p.axial_bound;
    std::size_t n = 0;
    expect("columns");
    in >> n;
    p.columns.resize(n);
    for (auto& c : p.columns) in >> c;
    auto block = [&](const std::string& name, CMatrix& M) {
        expect(name);
        Eigen::Index r = 0, c = 0;
        in >> r >> c;
        if (!in || r < 0 || c != Eigen::Index(n)) throw InvalidInput("problem file: bad shape for block " + name);
        M.resize(r, c);
        for (Eigen::Index i = 0; i < r; ++i)
            for (Eigen::Index j = 0; j < c; ++j) {
                double re = 0.0, im = 0.0;
                in >> re >> im;
                M(i, j) = cplx(re, im);
            }
    };
    CMatrix main;
    block("main", main);
    if (main.rows() != 1) throw InvalidInput("problem file: main block must have one row");
    p.main_row = main.row(0);
    block("sidelobe", p.sidelobe);
    block("axial", p.axial);
    if (!in) throw InvalidInput("problem file: truncated or malformed numbers");
    return p;
}

} // namespace nff
