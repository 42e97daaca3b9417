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

#include <chrono>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace nff {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CRowVector = Eigen::RowVectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using IndexList = std::vector<std::size_t>;

// All lengths are in wavelengths, so the free-space wavenumber is 2*pi.
inline constexpr double kWavenumber = 2.0 * std::numbers::pi;

struct Point3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    friend bool operator==(const Point3&, const Point3&) = default;
};

inline double distance(const Point3& a, const Point3& b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    const double dz = a.z - b.z;
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

// Error taxonomy. Every failure a caller may want to distinguish has its own
// type; all derive from std::runtime_error or std::invalid_argument so generic
// handlers keep working.
struct InvalidArgument : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct InvalidConfiguration : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct DimensionMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct SymmetryViolation : std::runtime_error {
    SymmetryViolation(const std::string& what, std::size_t element)
        : std::runtime_error(what), element_index(element) {}
    std::size_t element_index;
};
struct SingularGeometry : std::runtime_error {
    SingularGeometry(const std::string& what, std::size_t point, std::size_t element)
        : std::runtime_error(what), point_index(point), element_index(element) {}
    std::size_t point_index;
    std::size_t element_index;
};
struct Stagnation : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct UndefinedMetric : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct MetricOutOfRange : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct Infeasible : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InvalidComparison : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

class Stopwatch {
public:
    Stopwatch() : start_(clock::now()) {}
    void reset() { start_ = clock::now(); }
    [[nodiscard]] double seconds() const {
        return std::chrono::duration<double>(clock::now() - start_).count();
    }

private:
    using clock = std::chrono::steady_clock;
    clock::time_point start_;
};

} // namespace nff
