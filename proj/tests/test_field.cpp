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

#include "nff/field.hpp"
#include "nff/symmetry.hpp"
#include "support.hpp"

using namespace nff;
using Catch::Approx;

TEST_CASE("focal-plane grid with an even side appends the focus", "[field]") {
    const auto g = build_focal_plane_grid(5.0, 50, 5.0, 1.08);
    REQUIRE(g.focal_plane.size() == 2501);
    CHECK(g.focal_index == 2500);
    CHECK(g.focus() == Point3{0.0, 0.0, 5.0});

    // Independent count of lattice samples at or beyond the exclusion radius.
    std::size_t sidelobe = 0;
    for (std::size_t i = 0; i < 50; ++i)
        for (std::size_t j = 0; j < 50; ++j) {
            const double x = -2.5 + 5.0 * double(i) / 49.0;
            const double y = -2.5 + 5.0 * double(j) / 49.0;
            sidelobe += std::sqrt(x * x + y * y) >= 1.08;
        }
    CHECK(g.sidelobe_indices().size() == sidelobe);
    for (std::size_t i = 0; i < g.focal_plane.size(); ++i) {
        const auto& p = g.focal_plane[i];
        CHECK(p.z == 5.0);
        CHECK(bool(g.mainlobe[i]) == (std::hypot(p.x, p.y) < 1.08));
    }
    // Cuts carry the focus at the centre of an even lattice.
    CHECK(g.x_cut.size() == 51);
    CHECK(g.x_cut[g.x_cut_focus] == Point3{0.0, 0.0, 5.0});
    CHECK(g.y_cut[g.y_cut_focus] == Point3{0.0, 0.0, 5.0});
}

TEST_CASE("focal-plane grid corner case and the 100-per-side grid", "[field]") {
    const auto tiny = build_focal_plane_grid(2.0, 2, 5.0, 0.5);
    REQUIRE(tiny.focal_plane.size() == 5);
    CHECK(tiny.sidelobe_indices() == IndexList{0, 1, 2, 3});
    CHECK(tiny.mainlobe[4] == 1);

    const auto large = build_focal_plane_grid(10.0, 100, 5.0, 0.9);
    CHECK(large.focal_plane.size() == 10001);

    const auto odd = build_focal_plane_grid(4.0, 21, 3.0, 0.5);
    CHECK(odd.focal_plane.size() == 441);
    CHECK(odd.focus() == Point3{0.0, 0.0, 3.0});
    CHECK(odd.x_cut.size() == 21);
}

TEST_CASE("focal-plane grid validation", "[field]") {
    CHECK_THROWS_AS(build_focal_plane_grid(5.0, 1, 5.0, 1.0), InvalidArgument);
    CHECK_THROWS_AS(build_focal_plane_grid(0.0, 10, 5.0, 1.0), InvalidArgument);
    CHECK_THROWS_AS(build_focal_plane_grid(5.0, 10, 0.0, 1.0), InvalidArgument);
    CHECK_THROWS_AS(build_focal_plane_grid(5.0, 10, 5.0, 3.0), InvalidConfiguration);
}

TEST_CASE("axial grids include both endpoints", "[field]") {
    const auto a = build_axial_grid(0.1, 10.0, 100);
    REQUIRE(a.size() == 100);
    CHECK(a.front().z == 0.1);
    CHECK(a.back().z == 10.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].x == 0.0);
        CHECK(a[i].y == 0.0);
        CHECK(a[i].z > 0.0);
        if (i) CHECK(a[i].z > a[i - 1].z);
    }
    CHECK(build_axial_grid(0.1, 10.0, 200).size() == 200);
    const auto two = build_axial_grid(1.0, 1.0 + 1e-9, 2);
    REQUIRE(two.size() == 2);
    CHECK(two[1].z > two[0].z);
    CHECK_THROWS_AS(build_axial_grid(0.0, 1.0, 10), InvalidArgument);
    CHECK_THROWS_AS(build_axial_grid(1.0, 1.0, 10), InvalidArgument);
    CHECK_THROWS_AS(build_axial_grid(1.0, 2.0, 1), InvalidArgument);
}

TEST_CASE("y-dipole element pattern", "[field]") {
    const Point3 o{0, 0, 0};
    CHECK(element_pattern(ElementPattern::y_dipole, o, {0, 0, 5}) == Approx(1.0));
    CHECK(element_pattern(ElementPattern::y_dipole, o, {0, 5, 0}) == Approx(0.0).margin(1e-15));
    CHECK(element_pattern(ElementPattern::y_dipole, o, {0, 1, 1}) == Approx(std::sqrt(0.5)).epsilon(1e-12));
    CHECK(element_pattern(ElementPattern::y_dipole, o, {3, 0, 4}) == Approx(1.0));
    CHECK(element_pattern(ElementPattern::isotropic, o, {0, 5, 0}) == 1.0);
    CHECK_THROWS_AS(element_pattern(ElementPattern::y_dipole, o, o), SingularGeometry);
}

TEST_CASE("kernel at integer and quarter-wavelength distances", "[field]") {
    const auto g = build_grid_layout(1, 1, 0.5);
    const std::vector<Point3> far{{0, 0, 5}};
    const auto A = build_propagation_matrix(g, far, ElementPattern::isotropic);
    CHECK(std::abs(A.entries(0, 0) - cplx(0.2, 0.0)) < 1e-12);

    const std::vector<Point3> near{{0, 0, 0.25}};
    const auto B = build_propagation_matrix(g, near, ElementPattern::isotropic);
    CHECK(std::abs(B.entries(0, 0) - cplx(0.0, -4.0)) < 1e-12);

    const std::vector<Point3> bad{{0, 0, 0}};
    CHECK_THROWS_AS(build_propagation_matrix(g, bad, ElementPattern::isotropic), SingularGeometry);
}

TEST_CASE("propagation matrix of the 11x11 array over the focal plane", "[field]") {
    const auto g = build_grid_layout(11, 11, 0.5);
    const auto grids = build_focal_plane_grid(5.0, 50, 5.0, 1.08);
    const auto A = build_propagation_matrix(g, grids.focal_plane, ElementPattern::y_dipole);
    REQUIRE(A.rows() == 2501);
    REQUIRE(A.cols() == 121);
    CHECK(A.entries.allFinite());
    // |entry| = pattern / distance.
    for (Eigen::Index p = 0; p < A.rows(); p += 37)
        for (Eigen::Index q = 0; q < A.cols(); ++q) {
            const Point3& e = g.position(std::size_t(q));
            const Point3& r = grids.focal_plane[std::size_t(p)];
            const double expected = element_pattern(ElementPattern::y_dipole, e, r) / distance(e, r);
            REQUIRE(test::relative_difference(std::abs(A.entries(p, q)), expected) < 1e-12);
        }
}

TEST_CASE("isotropic kernel is reciprocal", "[field][property]") {
    const Point3 a{0.3, -0.2, 0.0}, b{1.1, 0.7, 2.5};
    CHECK(std::abs(propagation_kernel(ElementPattern::isotropic, a, b) -
                   propagation_kernel(ElementPattern::isotropic, b, a)) < 1e-15);
}

TEST_CASE("field evaluation basics", "[field]") {
    PropagationMatrix one;
    one.entries = CMatrix::Constant(1, 1, cplx(0.2, 0.0));
    CHECK(evaluate_field(one, CVector::Constant(1, 1.0))(0) == cplx(0.2, 0.0));

    const auto g = build_grid_layout(5, 5, 0.5);
    const auto grids = build_focal_plane_grid(4.0, 10, 3.0, 0.8);
    const auto A = build_propagation_matrix(g, grids.focal_plane, ElementPattern::y_dipole);
    CHECK(evaluate_field(A, CVector::Zero(25)).cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(evaluate_field(A, CVector::Zero(24)), DimensionMismatch);

    // The matrix-free path agrees with the matrix product.
    CVector w(25);
    for (Eigen::Index i = 0; i < 25; ++i) w(i) = std::polar(1.0 + 0.1 * double(i), 0.3 * double(i));
    const CVector direct = evaluate_field_at(g, grids.focal_plane, ElementPattern::y_dipole, w);
    CHECK((direct - evaluate_field(A, w)).norm() <= 1e-12 * direct.norm());
}

TEST_CASE("symmetric weights give a mirror-symmetric field", "[field][property]") {
    const auto g = build_grid_layout(11, 11, 0.5);
    const auto orbits = symmetry_orbits(g);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    CVector w(121);
    for (const auto& o : orbits) {
        const cplx v(u(rng), u(rng));
        for (std::size_t m : o.members) w(Eigen::Index(m)) = v;
    }
    std::vector<Point3> pts;
    for (double x : {0.3, 1.7, 2.2})
        for (double y : {0.0, 0.4, 1.9})
            for (const auto& img : test::mirror_images({x, y, 5.0})) pts.push_back(img);
    const CVector f = evaluate_field_at(g, pts, ElementPattern::y_dipole, w);
    for (std::size_t k = 0; k < pts.size(); k += 4)
        for (std::size_t j = 1; j < 4; ++j)
            CHECK(test::relative_difference(std::abs(f(Eigen::Index(k))), std::abs(f(Eigen::Index(k + j)))) < 1e-9);
}

TEST_CASE("target field is a unit impulse at the focus", "[field]") {
    const auto grids = build_focal_plane_grid(5.0, 50, 5.0, 1.08);
    const CVector y = build_target_field(grids);
    REQUIRE(y.size() == 2501);
    CHECK(y(Eigen::Index(grids.focal_index)) == cplx(1.0, 0.0));
    CHECK(y.norm() == 1.0);
    CHECK(y.dot(y) == cplx(1.0, 0.0));
    CHECK(y.cwiseAbs().sum() == 1.0);
}

TEST_CASE("conjugate-phase weights put the focal-plane maximum at the focus", "[field]") {
    for (auto [n, pps] : {std::pair{11u, 50u}, std::pair{21u, 100u}, std::pair{6u, 31u}}) {
        const auto g = build_grid_layout(n, n, 0.5);
        const auto grids = build_focal_plane_grid(n == 21 ? 10.0 : 5.0, pps, 5.0, 1.0);
        const auto A = build_propagation_matrix(g, grids.focal_plane, ElementPattern::y_dipole);
        const CVector f = evaluate_field(A, conjugate_phase_weights(g, grids.focus()));
        Eigen::Index arg = 0;
        f.cwiseAbs().maxCoeff(&arg);
        CHECK(std::size_t(arg) == grids.focal_index);
        // All contributions arrive in phase at the focus.
        CHECK(std::abs(std::arg(f(Eigen::Index(grids.focal_index)))) < 1e-9);
    }
}
