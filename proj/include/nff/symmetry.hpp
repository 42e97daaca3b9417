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

// Helpers for working in the fixed subspace of the four-element mirror group.
//
// With a mirror-symmetric layout and a mirror-closed set of observation
// points, the transfer matrix satisfies A(s p, s q) = A(p, q) for every mirror
// s. Weights that are constant over each element orbit then produce fields
// that are constant over each point orbit, so a problem can be written over
// one representative row per point orbit and one orbit-summed column per
// element orbit without changing its value.

#include <optional>
#include <span>
#include <vector>

#include "nff/common.hpp"
#include "nff/geometry.hpp"

namespace nff {

/// Groups of local column positions, one per element orbit of an orbit-closed
/// column set. Returns nullopt if `columns` is not a union of whole orbits.
inline std::optional<std::vector<IndexList>> local_orbit_groups(const IndexList& columns,
                                                                const std::vector<SymmetryOrbit>& orbits,
                                                                std::size_t n_elements) {
    if (!is_orbit_closed(columns, orbits, n_elements)) return std::nullopt;
    const auto id = orbit_lookup(orbits, n_elements);
    std::vector<std::int64_t> group_of_orbit(orbits.size(), -1);
    std::vector<IndexList> groups;
    for (std::size_t local = 0; local < columns.size(); ++local) {
        const auto o = id.at(columns[local]);
        if (o < 0) return std::nullopt;
        if (group_of_orbit[std::size_t(o)] < 0) {
            group_of_orbit[std::size_t(o)] = std::int64_t(groups.size());
            groups.emplace_back();
        }
        groups[std::size_t(group_of_orbit[std::size_t(o)])].push_back(local);
    }
    return groups;
}

/// out(r, g) = sum over c in groups[g] of M(rows[r], c).
inline CMatrix orbit_summed_columns(const CMatrix& M, const IndexList& rows, const std::vector<IndexList>& groups) {
    CMatrix out = CMatrix::Zero(Eigen::Index(rows.size()), Eigen::Index(groups.size()));
    for (std::size_t g = 0; g < groups.size(); ++g)
        for (std::size_t c : groups[g])
            for (std::size_t r = 0; r < rows.size(); ++r)
                out(Eigen::Index(r), Eigen::Index(g)) += M(Eigen::Index(rows[r]), Eigen::Index(c));
    return out;
}

/// Mirror orbits of a point set, or nullopt when the set is not mirror-closed.
inline std::optional<std::vector<SymmetryOrbit>> try_mirror_orbits(std::span<const Point3> pts,
                                                                  double tol = kDefaultMirrorTolerance) {
    try {
        return mirror_orbits(pts, tol);
    } catch (const SymmetryViolation&) {
        return std::nullopt;
    }
}

inline IndexList orbit_representatives(const std::vector<SymmetryOrbit>& orbits) {
    IndexList reps;
    reps.reserve(orbits.size());
    for (const auto& o : orbits) reps.push_back(o.representative);
    return reps;
}

/// Checks that the orbit-summed column `col_sum` (length = all rows) is
/// constant over every row orbit, i.e. that the mirror invariance holds for
/// this column group.
inline bool constant_on_orbits(const CVector& v, const std::vector<SymmetryOrbit>& row_orbits, double rel_tol = 1e-9) {
    const double scale = std::max(v.cwiseAbs().maxCoeff(), 1e-300);
    for (const auto& o : row_orbits) {
        const cplx ref = v(Eigen::Index(o.representative));
        for (std::size_t m : o.members)
            if (std::abs(v(Eigen::Index(m)) - ref) > rel_tol * scale) return false;
    }
    return true;
}

} // namespace nff
