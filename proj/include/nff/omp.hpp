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

// Quadrant-symmetric orthogonal matching pursuit.
//
// Each iteration correlates the residual with the first-quadrant columns,
// adds the whole mirror orbit of the best column to the active set, refits
// all active weights by least squares and recomputes the residual from
// scratch. s_max counts iterations (orbit picks), not elements.

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "nff/common.hpp"
#include "nff/field.hpp"
#include "nff/geometry.hpp"
#include "nff/symmetry.hpp"

namespace nff {

struct OmpConfig {
    std::size_t s_max = 20;
    double epsilon = 1e-3;
    double correlation_tie_tol = 1e-12;
    // Solve the refit in orbit-reduced coordinates when the rows and target are
    // mirror-symmetric. Gives the same minimiser as the full fit.
    bool use_symmetry_reduction = true;
};

enum class OmpStop { none, tolerance, max_selections, stagnation, degenerate };

inline std::string to_string(OmpStop s) {
    switch (s) {
    case OmpStop::tolerance: return "tolerance";
    case OmpStop::max_selections: return "max_selections";
    case OmpStop::stagnation: return "stagnation";
    case OmpStop::degenerate: return "degenerate";
    default: return "none";
    }
}

struct OmpIteration {
    std::size_t iteration = 0;
    SymmetryOrbit orbit;
    double residual_norm = 0.0;
};

struct OmpState {
    CVector residual;
    IndexList active_set;  // element indices in selection order
    CVector weights;       // aligned with active_set
    std::size_t iteration = 0;
    std::vector<OmpIteration> trace;
    OmpStop stop = OmpStop::none;
    bool degenerate = false;
    bool rank_deficient = false;
    bool reduced_refit = false;

    [[nodiscard]] double residual_norm() const { return residual.norm(); }

    [[nodiscard]] CVector full_weights(std::size_t n) const {
        CVector w = CVector::Zero(Eigen::Index(n));
        for (std::size_t k = 0; k < active_set.size(); ++k) w(Eigen::Index(active_set[k])) = weights(Eigen::Index(k));
        return w;
    }
};

/// c_j = |a_j^H r| for every column not in `excluded`, 0 otherwise.
/// `excluded` is a per-column mask (nonzero = excluded); empty means none.
inline RVector correlations(const PropagationMatrix& A, const CVector& residual, const std::vector<char>& excluded = {}) {
    if (residual.size() != A.rows())
        throw DimensionMismatch("residual length " + std::to_string(residual.size()) + " does not match " +
                                std::to_string(A.rows()) + " matrix rows");
    if (!excluded.empty() && excluded.size() != std::size_t(A.cols()))
        throw DimensionMismatch("exclusion mask length does not match the column count");
    RVector c = RVector::Zero(A.cols());
    for (Eigen::Index j = 0; j < A.cols(); ++j) {
        if (!excluded.empty() && excluded[std::size_t(j)]) continue;
        c(j) = std::abs(A.entries.col(j).dot(residual));
    }
    return c;
}

/// Orbit of the strongest first-quadrant column. Candidates within the
/// relative tie tolerance of the maximum resolve to the lowest index.
inline SymmetryOrbit select_orbit(const RVector& c, const std::vector<SymmetryOrbit>& orbits, const IndexList& quadrant,
                                  double tie_tol = 1e-12) {
    double best = 0.0;
    for (std::size_t i : quadrant) best = std::max(best, c(Eigen::Index(i)));
    if (!(best > 0.0)) throw Stagnation("all first-quadrant correlations are zero");
    std::optional<std::size_t> pick;
    for (std::size_t i : quadrant)
        if (c(Eigen::Index(i)) >= best * (1.0 - tie_tol) && (!pick || i < *pick)) pick = i;
    for (const auto& o : orbits)
        if (std::binary_search(o.members.begin(), o.members.end(), *pick)) return o;
    throw InvalidArgument("selected index " + std::to_string(*pick) + " belongs to no orbit");
}

struct LeastSquaresFit {
    CVector weights;
    Eigen::Index rank = 0;
    bool rank_deficient = false;
};

/// Minimum-norm least-squares solution via a complete orthogonal decomposition.
inline LeastSquaresFit least_squares_fit(const CMatrix& matrix_S, const CVector& target) {
    if (matrix_S.cols() < 1) throw InvalidArgument("least squares needs at least one column");
    if (matrix_S.rows() != target.size()) throw DimensionMismatch("target length does not match the row count");
    Eigen::CompleteOrthogonalDecomposition<CMatrix> cod(matrix_S);
    LeastSquaresFit fit;
    fit.weights = cod.solve(target);
    fit.rank = cod.rank();
    fit.rank_deficient = fit.rank < matrix_S.cols();
    return fit;
}

/// Incremental OMP driver. `run(s_max)` continues from the current state, so
/// the pipeline can extend a pre-selection without repeating earlier picks.
class OmpSolver {
public:
    OmpSolver(const PropagationMatrix& A, CVector target, std::vector<SymmetryOrbit> orbits, IndexList quadrant,
              OmpConfig config)
        : A_(A), target_(std::move(target)), orbits_(std::move(orbits)), quadrant_(std::move(quadrant)),
          config_(config) {
        if (target_.size() != A_.rows()) throw DimensionMismatch("target length does not match matrix rows");
        if (config_.s_max < 1) throw InvalidArgument("s_max must be at least 1");
        if (!(config_.epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");
        state_.residual = target_;
        state_.weights = CVector(0);
        excluded_.assign(std::size_t(A_.cols()), 1);
        for (std::size_t i : quadrant_) excluded_.at(i) = 0;
        if (config_.use_symmetry_reduction) setup_reduction();
        if (target_.norm() < config_.epsilon) {
            state_.degenerate = true;
            state_.stop = OmpStop::degenerate;
        }
    }

    const OmpState& run() { return run(config_.s_max); }

    const OmpState& run(std::size_t s_max) {
        if (state_.degenerate) return state_;
        while (state_.iteration < s_max) {
            const RVector c = correlations(A_, state_.residual, excluded_);
            SymmetryOrbit orbit;
            try {
                orbit = select_orbit(c, orbits_, quadrant_, config_.correlation_tie_tol);
            } catch (const Stagnation&) {
                if (state_.iteration == 0) throw;
                state_.stop = OmpStop::stagnation;
                return state_;
            }
            add_orbit(orbit);
            refit();
            ++state_.iteration;
            state_.trace.push_back({state_.iteration, orbit, state_.residual.norm()});
            if (state_.residual.norm() < config_.epsilon) {
                state_.stop = OmpStop::tolerance;
                return state_;
            }
        }
        state_.stop = OmpStop::max_selections;
        return state_;
    }

    [[nodiscard]] const OmpState& state() const { return state_; }
    [[nodiscard]] bool exhausted() const {
        return state_.stop == OmpStop::stagnation || state_.stop == OmpStop::tolerance || state_.degenerate;
    }

private:
    void setup_reduction() {
        if (A_.col_elements.size() != std::size_t(A_.cols())) return;
        for (std::size_t j = 0; j < A_.col_elements.size(); ++j)
            if (A_.col_elements[j] != j) return;
        auto rows = try_mirror_orbits(A_.row_points);
        if (!rows) return;
        // The target must be constant over each row orbit.
        if (!constant_on_orbits(target_, *rows, 0.0)) return;
        row_orbits_ = std::move(*rows);
        row_reps_ = orbit_representatives(row_orbits_);
        row_scale_.resize(Eigen::Index(row_reps_.size()));
        reduced_target_.resize(Eigen::Index(row_reps_.size()));
        for (std::size_t r = 0; r < row_reps_.size(); ++r) {
            row_scale_(Eigen::Index(r)) = std::sqrt(double(row_orbits_[r].members.size()));
            reduced_target_(Eigen::Index(r)) = target_(Eigen::Index(row_reps_[r])) * row_scale_(Eigen::Index(r));
        }
        reduced_ = true;
    }

    void add_orbit(const SymmetryOrbit& orbit) {
        for (std::size_t m : orbit.members) {
            state_.active_set.push_back(m);
            excluded_.at(m) = 1;
        }
        picked_.push_back(orbit);
        if (!reduced_) return;
        CVector col = CVector::Zero(A_.rows());
        for (std::size_t m : orbit.members) col += A_.entries.col(Eigen::Index(m));
        if (!constant_on_orbits(col, row_orbits_)) {
            reduced_ = false;
            return;
        }
        const double s = 1.0 / std::sqrt(double(orbit.members.size()));
        reduced_matrix_.conservativeResize(Eigen::Index(row_reps_.size()), Eigen::Index(picked_.size()));
        for (std::size_t r = 0; r < row_reps_.size(); ++r)
            reduced_matrix_(Eigen::Index(r), Eigen::Index(picked_.size() - 1)) =
                col(Eigen::Index(row_reps_[r])) * (row_scale_(Eigen::Index(r)) * s);
    }

    void refit() {
        const std::size_t k = state_.active_set.size();
        CMatrix A_S(A_.rows(), Eigen::Index(k));
        for (std::size_t j = 0; j < k; ++j) A_S.col(Eigen::Index(j)) = A_.entries.col(Eigen::Index(state_.active_set[j]));
        if (reduced_) {
            const auto fit = least_squares_fit(reduced_matrix_, reduced_target_);
            state_.rank_deficient = fit.rank_deficient;
            state_.weights.resize(Eigen::Index(k));
            std::size_t pos = 0;
            for (std::size_t o = 0; o < picked_.size(); ++o) {
                const cplx w = fit.weights(Eigen::Index(o)) / std::sqrt(double(picked_[o].members.size()));
                for (std::size_t m = 0; m < picked_[o].members.size(); ++m) state_.weights(Eigen::Index(pos++)) = w;
            }
            state_.reduced_refit = true;
        } else {
            const auto fit = least_squares_fit(A_S, target_);
            state_.rank_deficient = fit.rank_deficient;
            state_.weights = fit.weights;
            state_.reduced_refit = false;
        }
        state_.residual = target_ - A_S * state_.weights;
    }

    const PropagationMatrix& A_;
    CVector target_;
    std::vector<SymmetryOrbit> orbits_;
    IndexList quadrant_;
    OmpConfig config_;
    OmpState state_;
    std::vector<char> excluded_;
    std::vector<SymmetryOrbit> picked_;

    bool reduced_ = false;
    std::vector<SymmetryOrbit> row_orbits_;
    IndexList row_reps_;
    RVector row_scale_;
    CVector reduced_target_;
    CMatrix reduced_matrix_;
};

inline OmpState omp_preselect(const PropagationMatrix& A, const CVector& target, const std::vector<SymmetryOrbit>& orbits,
                              const IndexList& quadrant, const OmpConfig& config) {
    OmpSolver solver(A, target, orbits, quadrant, config);
    return solver.run();
}

} // namespace nff
