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
#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "nff/common.hpp"

namespace nff {

inline constexpr double kDefaultMirrorTolerance = 1e-9;

/// Planar array on the xoy plane. Positions are in wavelengths.
class ArrayGeometry {
public:
    ArrayGeometry() = default;
    ArrayGeometry(std::vector<Point3> positions, std::size_t nx, std::size_t ny, double spacing)
        : positions_(std::move(positions)), nx_(nx), ny_(ny), spacing_(spacing) {}

    [[nodiscard]] const std::vector<Point3>& positions() const { return positions_; }
    [[nodiscard]] const Point3& position(std::size_t i) const { return positions_.at(i); }
    [[nodiscard]] std::size_t size() const { return positions_.size(); }
    [[nodiscard]] std::size_t nx() const { return nx_; }
    [[nodiscard]] std::size_t ny() const { return ny_; }
    [[nodiscard]] double spacing() const { return spacing_; }
    [[nodiscard]] double aperture_x() const { return nx_ > 0 ? double(nx_ - 1) * spacing_ : 0.0; }
    [[nodiscard]] double aperture_y() const { return ny_ > 0 ? double(ny_ - 1) * spacing_ : 0.0; }

private:
    std::vector<Point3> positions_;
    std::size_t nx_ = 0;
    std::size_t ny_ = 0;
    double spacing_ = 0.0;
};

/// Coordinates of `count` samples with step `step`, centred on zero. Mirror
/// pairs are exact negatives of each other and an odd count hits 0 exactly.
inline std::vector<double> centered_coordinates(std::size_t count, double step) {
    std::vector<double> c(count);
    const double mid = 0.5 * double(count - 1);
    for (std::size_t i = 0; i < count; ++i) c[i] = (double(i) - mid) * step;
    return c;
}

/// Uniform nx-by-ny grid centred on the origin, x index running fastest.
inline ArrayGeometry build_grid_layout(std::size_t nx, std::size_t ny, double spacing) {
    if (nx == 0 || ny == 0) throw InvalidArgument("grid layout needs nx >= 1 and ny >= 1");
    if (!(spacing > 0.0) || !std::isfinite(spacing))
        throw InvalidArgument("grid layout needs a positive element spacing");
    const auto xs = centered_coordinates(nx, spacing);
    const auto ys = centered_coordinates(ny, spacing);
    std::vector<Point3> pos;
    pos.reserve(nx * ny);
    for (double y : ys)
        for (double x : xs) pos.push_back({x, y, 0.0});
    return ArrayGeometry(std::move(pos), nx, ny, spacing);
}

/// Elements related by the mirror maps (x, y) -> (+-x, +-y).
struct SymmetryOrbit {
    std::size_t representative = 0;
    IndexList members; // sorted ascending, 1, 2 or 4 entries
};

namespace detail {

// Spatial hash with tolerance-sized cells; a lookup scans the 3x3 neighbourhood
// so points straddling a cell boundary are still found.
class PointIndex {
public:
    PointIndex(std::span<const Point3> pts, double tol) : pts_(pts), tol_(tol) {
        cell_ = std::max(tol, 1e-12) * 4.0;
        for (std::size_t i = 0; i < pts.size(); ++i) map_[key(cell_of(pts[i].x), cell_of(pts[i].y))].push_back(i);
    }

    [[nodiscard]] std::optional<std::size_t> find(double x, double y, double z) const {
        const auto cx = cell_of(x);
        const auto cy = cell_of(y);
        std::optional<std::size_t> best;
        for (std::int64_t dx = -1; dx <= 1; ++dx)
            for (std::int64_t dy = -1; dy <= 1; ++dy) {
                auto it = map_.find(key(cx + dx, cy + dy));
                if (it == map_.end()) continue;
                for (std::size_t i : it->second) {
                    const auto& p = pts_[i];
                    if (std::abs(p.x - x) <= tol_ && std::abs(p.y - y) <= tol_ && std::abs(p.z - z) <= tol_)
                        if (!best || i < *best) best = i;
                }
            }
        return best;
    }

private:
    [[nodiscard]] std::int64_t cell_of(double v) const { return std::int64_t(std::floor(v / cell_)); }
    static std::uint64_t key(std::int64_t a, std::int64_t b) {
        return (std::uint64_t(a) * 0x9E3779B97F4A7C15ULL) ^ (std::uint64_t(b) + 0x632BE59BD9B4E019ULL + (std::uint64_t(a) << 6));
    }

    std::span<const Point3> pts_;
    double tol_;
    double cell_;
    std::unordered_map<std::uint64_t, std::vector<std::size_t>> map_;
};

} // namespace detail

/// Partition of a point set into mirror orbits. Works for element positions as
/// well as observation points; z is carried through unchanged by the mirrors.
/// Throws SymmetryViolation naming the first point whose image is missing.
inline std::vector<SymmetryOrbit> mirror_orbits(std::span<const Point3> pts, double tol = kDefaultMirrorTolerance) {
    detail::PointIndex index(pts, tol);
    constexpr std::array<std::array<double, 2>, 4> signs{{{1, 1}, {-1, 1}, {1, -1}, {-1, -1}}};
    std::vector<std::int64_t> owner(pts.size(), -1);
    std::vector<SymmetryOrbit> orbits;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (owner[i] >= 0) continue;
        SymmetryOrbit orb;
        for (const auto& s : signs) {
            auto j = index.find(s[0] * pts[i].x, s[1] * pts[i].y, pts[i].z);
            if (!j)
                throw SymmetryViolation("point " + std::to_string(i) + " has no mirror image under (" +
                                            std::to_string(int(s[0])) + "x, " + std::to_string(int(s[1])) + "y)",
                                        i);
            orb.members.push_back(*j);
        }
        std::sort(orb.members.begin(), orb.members.end());
        orb.members.erase(std::unique(orb.members.begin(), orb.members.end()), orb.members.end());
        for (std::size_t m : orb.members) {
            if (owner[m] >= 0)
                throw SymmetryViolation("point " + std::to_string(m) + " maps into two different orbits", m);
            owner[m] = std::int64_t(orbits.size());
        }
        orb.representative = orb.members.front();
        for (std::size_t m : orb.members)
            if (pts[m].x >= -tol && pts[m].y >= -tol) {
                orb.representative = m;
                break;
            }
        orbits.push_back(std::move(orb));
    }
    return orbits;
}

inline std::vector<SymmetryOrbit> symmetry_orbits(const ArrayGeometry& g, double tol = kDefaultMirrorTolerance) {
    return mirror_orbits(g.positions(), tol);
}

/// Closed first quadrant: x >= 0 and y >= 0, axes included.
inline IndexList first_quadrant_indices(const ArrayGeometry& g, double tol = kDefaultMirrorTolerance) {
    IndexList out;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (g.position(i).x >= -tol && g.position(i).y >= -tol) out.push_back(i);
    return out;
}

/// orbit id for every element, -1 if the element is in no orbit.
inline std::vector<std::int64_t> orbit_lookup(const std::vector<SymmetryOrbit>& orbits, std::size_t n) {
    std::vector<std::int64_t> id(n, -1);
    for (std::size_t k = 0; k < orbits.size(); ++k)
        for (std::size_t m : orbits[k].members) id.at(m) = std::int64_t(k);
    return id;
}

/// True when `set` is a union of whole orbits.
inline bool is_orbit_closed(const IndexList& set, const std::vector<SymmetryOrbit>& orbits, std::size_t n) {
    std::vector<char> in(n, 0);
    for (std::size_t i : set) in.at(i) = 1;
    for (const auto& o : orbits) {
        const bool first = in[o.members.front()] != 0;
        for (std::size_t m : o.members)
            if ((in[m] != 0) != first) return false;
    }
    return true;
}

} // namespace nff
