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

#include <algorithm>
#include <span>
#include <string>
#include <vector>

#include "nff/common.hpp"
#include "nff/geometry.hpp"

namespace nff {

enum class ElementPattern { isotropic, y_dipole };

inline std::string to_string(ElementPattern p) { return p == ElementPattern::isotropic ? "isotropic" : "y_dipole"; }

inline ElementPattern parse_element_pattern(const std::string& s) {
    if (s == "isotropic") return ElementPattern::isotropic;
    if (s == "y_dipole" || s == "dipole") return ElementPattern::y_dipole;
    throw InvalidConfiguration("unknown element pattern '" + s + "'");
}

/// Copolar pattern magnitude of an element at `element` seen from `obs`.
/// For the y-oriented dipole this is sin of the angle to the y axis.
inline double element_pattern(ElementPattern model, const Point3& element, const Point3& obs) {
    const double r = distance(element, obs);
    if (!(r > 0.0)) throw SingularGeometry("observation point coincides with element", 0, 0);
    if (model == ElementPattern::isotropic) return 1.0;
    const double uy = (obs.y - element.y) / r;
    return std::sqrt(std::clamp(1.0 - uy * uy, 0.0, 1.0));
}

/// Observation points of one synthesis run.
///
/// The focal plane is a uniform lattice over [-extent/2, extent/2]^2 at z0,
/// with the focus (0, 0, z0) appended when the lattice misses it. Samples
/// closer to the axis than the exclusion radius are tagged mainlobe; all
/// others are sidelobe samples. x_cut / y_cut are the lattice abscissas along
/// the two axes through the focus (focus inserted), used for beamwidths.
struct SamplingGrids {
    std::vector<Point3> focal_plane;
    std::vector<char> mainlobe;
    std::size_t focal_index = 0;
    double z0 = 0.0;
    double extent = 0.0;
    std::size_t points_per_side = 0;
    double exclusion_radius = 0.0;

    std::vector<Point3> axial;

    std::vector<Point3> x_cut;
    std::vector<Point3> y_cut;
    std::size_t x_cut_focus = 0;
    std::size_t y_cut_focus = 0;

    [[nodiscard]] IndexList sidelobe_indices() const {
        IndexList out;
        for (std::size_t i = 0; i < focal_plane.size(); ++i)
            if (!mainlobe[i]) out.push_back(i);
        return out;
    }
    [[nodiscard]] Point3 focus() const { return focal_plane.at(focal_index); }
};

namespace detail {

inline std::vector<double> cut_abscissas(std::size_t count, double step, std::size_t& focus_pos) {
    auto c = centered_coordinates(count, step);
    auto it = std::find(c.begin(), c.end(), 0.0);
    if (it == c.end()) it = c.insert(std::lower_bound(c.begin(), c.end(), 0.0), 0.0);
    focus_pos = std::size_t(it - c.begin());
    return c;
}

} // namespace detail

inline SamplingGrids build_focal_plane_grid(double extent, std::size_t points_per_side, double z0,
                                            double exclusion_radius) {
    if (points_per_side < 2) throw InvalidArgument("focal-plane grid needs at least 2 points per side");
    if (!(extent > 0.0)) throw InvalidArgument("focal-plane extent must be positive");
    if (!(z0 > 0.0)) throw InvalidArgument("focal distance z0 must be positive");
    if (!(exclusion_radius >= 0.0)) throw InvalidArgument("exclusion radius must be non-negative");
    if (exclusion_radius >= 0.5 * extent)
        throw InvalidConfiguration("exclusion radius " + std::to_string(exclusion_radius) +
                                   " leaves no sidelobe samples inside an extent of " + std::to_string(extent));

    SamplingGrids g;
    g.z0 = z0;
    g.extent = extent;
    g.points_per_side = points_per_side;
    g.exclusion_radius = exclusion_radius;

    const double step = extent / double(points_per_side - 1);
    const auto c = centered_coordinates(points_per_side, step);
    bool has_focus = false;
    g.focal_plane.reserve(points_per_side * points_per_side + 1);
    for (double y : c)
        for (double x : c) {
            if (x == 0.0 && y == 0.0) {
                g.focal_index = g.focal_plane.size();
                has_focus = true;
            }
            g.focal_plane.push_back({x, y, z0});
        }
    if (!has_focus) {
        g.focal_index = g.focal_plane.size();
        g.focal_plane.push_back({0.0, 0.0, z0});
    }
    g.mainlobe.resize(g.focal_plane.size());
    for (std::size_t i = 0; i < g.focal_plane.size(); ++i)
        g.mainlobe[i] = std::hypot(g.focal_plane[i].x, g.focal_plane[i].y) < exclusion_radius ? 1 : 0;
    // The focus always belongs to the mainlobe, even with a zero radius.
    g.mainlobe[g.focal_index] = 1;
    if (g.sidelobe_indices().empty()) throw InvalidConfiguration("focal-plane grid has no sidelobe samples");

    for (double x : detail::cut_abscissas(points_per_side, step, g.x_cut_focus)) g.x_cut.push_back({x, 0.0, z0});
    for (double y : detail::cut_abscissas(points_per_side, step, g.y_cut_focus)) g.y_cut.push_back({0.0, y, z0});
    return g;
}

/// Uniform on-axis samples (0, 0, z) with both endpoints included.
inline std::vector<Point3> build_axial_grid(double z_min, double z_max, std::size_t count) {
    if (!(z_min > 0.0)) throw InvalidArgument("axial grid must start above the array plane (z_min > 0)");
    if (!(z_max > z_min)) throw InvalidArgument("axial grid needs z_max > z_min");
    if (count < 2) throw InvalidArgument("axial grid needs at least 2 points");
    std::vector<Point3> pts(count);
    const double step = (z_max - z_min) / double(count - 1);
    for (std::size_t i = 0; i < count; ++i) pts[i] = {0.0, 0.0, i + 1 == count ? z_max : z_min + double(i) * step};
    return pts;
}

/// Dense near-field transfer matrix: rows are observation points, columns are
/// array elements, entry = f(r) exp(-jkR) / R.
struct PropagationMatrix {
    CMatrix entries;
    std::vector<Point3> row_points;
    IndexList col_elements;

    [[nodiscard]] Eigen::Index rows() const { return entries.rows(); }
    [[nodiscard]] Eigen::Index cols() const { return entries.cols(); }
};

inline cplx propagation_kernel(ElementPattern model, const Point3& element, const Point3& obs) {
    const double r = distance(element, obs);
    const double f = model == ElementPattern::isotropic ? 1.0 : element_pattern(model, element, obs);
    return std::polar(f / r, -kWavenumber * r);
}

inline PropagationMatrix build_propagation_matrix(const ArrayGeometry& geometry, std::span<const Point3> points,
                                                  ElementPattern model) {
    PropagationMatrix A;
    A.row_points.assign(points.begin(), points.end());
    A.col_elements.resize(geometry.size());
    for (std::size_t q = 0; q < geometry.size(); ++q) A.col_elements[q] = q;
    A.entries.resize(Eigen::Index(points.size()), Eigen::Index(geometry.size()));
    for (std::size_t q = 0; q < geometry.size(); ++q) {
        const Point3& e = geometry.position(q);
        for (std::size_t p = 0; p < points.size(); ++p) {
            if (!(distance(e, points[p]) > 1e-12))
                throw SingularGeometry("observation point " + std::to_string(p) + " coincides with element " +
                                           std::to_string(q),
                                       p, q);
            A.entries(Eigen::Index(p), Eigen::Index(q)) = propagation_kernel(model, e, points[p]);
        }
    }
    return A;
}

/// Transfer matrices over the two sample sets a synthesis run constrains.
struct SynthesisMatrices {
    PropagationMatrix focal;
    PropagationMatrix axial;
};

inline SynthesisMatrices build_synthesis_matrices(const ArrayGeometry& g, const SamplingGrids& grids,
                                                  ElementPattern model) {
    return {build_propagation_matrix(g, grids.focal_plane, model), build_propagation_matrix(g, grids.axial, model)};
}

inline CVector evaluate_field(const PropagationMatrix& A, const CVector& weights) {
    if (weights.size() != A.cols())
        throw DimensionMismatch("weight vector has " + std::to_string(weights.size()) + " entries, matrix has " +
                                std::to_string(A.cols()) + " columns");
    return A.entries * weights;
}

/// Field at arbitrary points without storing the transfer matrix; only
/// nonzero weights contribute. Summation runs in element order, as in the
/// matrix product.
inline CVector evaluate_field_at(const ArrayGeometry& geometry, std::span<const Point3> points, ElementPattern model,
                                 const CVector& weights) {
    if (weights.size() != Eigen::Index(geometry.size()))
        throw DimensionMismatch("weight vector has " + std::to_string(weights.size()) + " entries, array has " +
                                std::to_string(geometry.size()) + " elements");
    CVector out = CVector::Zero(Eigen::Index(points.size()));
    for (std::size_t p = 0; p < points.size(); ++p) {
        cplx acc = 0.0;
        for (std::size_t q = 0; q < geometry.size(); ++q) {
            const cplx w = weights(Eigen::Index(q));
            if (w == 0.0) continue;
            if (!(distance(geometry.position(q), points[p]) > 1e-12))
                throw SingularGeometry("observation point " + std::to_string(p) + " coincides with element " +
                                           std::to_string(q),
                                       p, q);
            acc += propagation_kernel(model, geometry.position(q), points[p]) * w;
        }
        out(Eigen::Index(p)) = acc;
    }
    return out;
}

/// Unit impulse at the focal sample over the focal-plane grid.
inline CVector build_target_field(const SamplingGrids& grids) {
    CVector y = CVector::Zero(Eigen::Index(grids.focal_plane.size()));
    y(Eigen::Index(grids.focal_index)) = 1.0;
    return y;
}

/// Phase-conjugate excitation focusing every element's contribution at `focus`.
inline CVector conjugate_phase_weights(const ArrayGeometry& g, const Point3& focus) {
    CVector w(Eigen::Index(g.size()));
    for (std::size_t q = 0; q < g.size(); ++q)
        w(Eigen::Index(q)) = std::polar(1.0, kWavenumber * distance(g.position(q), focus));
    return w;
}

} // namespace nff
