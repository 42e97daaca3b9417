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

// Shared fixtures for the unit tests.

#include <cmath>
#include <random>
#include <string>

#include "nff/config.hpp"
#include "nff/pipeline.hpp"

namespace nff::test {

inline std::string config_path(const std::string& name) { return std::string(NFF_CONFIG_DIR) + "/" + name; }

/// Small problem that solves in a fraction of a second: 7x7 array focused at
/// 3 wavelengths with a -12 dB sidelobe target (feasible from s_max = 8).
inline SynthesisConfig small_config() {
    SynthesisConfig c;
    c.nx = 7;
    c.ny = 7;
    c.z0 = 3.0;
    c.extent = 4.0;
    c.points_per_side = 20;
    c.desired_beamwidth = 1.0;
    c.exclusion_radius = 1.0;
    c.z_min = 0.5;
    c.z_max = 6.0;
    c.axial_count = 40;
    c.rho_sll_db = -12.0;
    c.omp.s_max = 8;
    return c;
}

/// Mirror images of a point: (x, y), (-x, y), (x, -y), (-x, -y).
inline std::array<Point3, 4> mirror_images(const Point3& p) {
    return {{{p.x, p.y, p.z}, {-p.x, p.y, p.z}, {p.x, -p.y, p.z}, {-p.x, -p.y, p.z}}};
}

inline double relative_difference(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

} // namespace nff::test
