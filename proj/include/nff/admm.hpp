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

// Alternating-direction solver for the weighted complex L1 problem
//
//     minimise    sum_j c_j |x_j|
//     subject to  g_0 x = b_0,   |g_i x| <= u_i  (i >= 1)
//
// Every complex weight is an (Re, Im) pair and every |.| term a three
// dimensional second-order cone; the iteration works directly in complex
// arithmetic, which is the same lifted problem written with C-linear maps.
//
// Splitting:  x = v (objective block),  G x = z (constraint block).
//   x-update : (I + G^H W G) x = v - lam/rho + G^H (W z - y/rho)
//   v-update : complex soft threshold with level c/rho
//   z-update : projection onto {z_0 = b_0, |z_i| <= u_i}
// W weights the equality row by kEqualityWeight. The penalty of both blocks
// is the same rho, so the factorisation of I + G^H W G never changes and rho
// can adapt freely. Rows and columns are equilibrated before iterating.

#include <algorithm>
#include <limits>

#include "nff/common.hpp"

namespace nff::detail {

struct AdmmSettings {
    double eps_abs = 1e-8;
    double eps_rel = 1e-6;
    double eps_infeasible = 1e-6;
    std::size_t max_iterations = 20000;
    std::size_t check_interval = 10;
    double rho = 0.1;
    bool adaptive_rho = true;
    double alpha = 1.6;
};

enum class AdmmStatus { running, optimal, max_iterations, infeasible };

class Admm {
public:
    static constexpr double kEqualityWeight = 1e3;

    Admm(const CMatrix& G, cplx b0, const RVector& upper, const RVector& cost, const AdmmSettings& settings)
        : settings_(settings), b0_(b0) {
        const Eigen::Index m = G.rows();
        const Eigen::Index n = G.cols();
        if (m < 1 || n < 1) throw InvalidArgument("solver needs at least one row and one column");
        if (upper.size() != m || cost.size() != n) throw DimensionMismatch("bound or cost length mismatch");

        // Modified Ruiz equilibration with 2-norms.
        Gs_ = G;
        row_scale_ = RVector::Ones(m);
        col_scale_ = RVector::Ones(n);
        for (int pass = 0; pass < 5; ++pass) {
            for (Eigen::Index i = 0; i < m; ++i) {
                const double r = Gs_.row(i).norm();
                if (r > 0.0) {
                    Gs_.row(i) /= std::sqrt(r);
                    row_scale_(i) /= std::sqrt(r);
                }
            }
            for (Eigen::Index j = 0; j < n; ++j) {
                const double c = Gs_.col(j).norm();
                if (c > 0.0) {
                    Gs_.col(j) /= std::sqrt(c);
                    col_scale_(j) /= std::sqrt(c);
                }
            }
        }
        for (Eigen::Index i = 0; i < m; ++i) {
            const double r = Gs_.row(i).norm();
            if (r > 0.0) {
                Gs_.row(i) /= r;
                row_scale_(i) /= r;
            }
        }

        cost_ = cost.cwiseProduct(col_scale_);
        cost_scale_ = 1.0 / std::max(cost_.maxCoeff(), std::numeric_limits<double>::min());
        cost_ *= cost_scale_;

        b0s_ = b0 * row_scale_(0);
        upper_s_ = upper.cwiseProduct(row_scale_);
        weight_ = RVector::Ones(m);
        weight_(0) = kEqualityWeight;

        CMatrix K = Gs_.adjoint() * weight_.asDiagonal() * Gs_;
        K.diagonal().array() += 1.0;
        llt_.compute(K);
        if (llt_.info() != Eigen::Success) throw std::runtime_error("KKT factorisation failed");

        x_ = CVector::Zero(n);
        v_ = CVector::Zero(n);
        lam_ = CVector::Zero(n);
        z_ = CVector::Zero(m);
        y_ = CVector::Zero(m);
        gx_ = CVector::Zero(m);
        y_check_ = y_;
        rho_ = settings_.rho;
    }

    AdmmStatus solve() { return solve(settings_.eps_abs, settings_.eps_rel); }

    /// Iterate until the residuals meet the given tolerances. Can be called
    /// again with tighter tolerances and continues from the current iterate.
    AdmmStatus solve(double eps_abs, double eps_rel) {
        const double alpha = settings_.alpha;
        status_ = AdmmStatus::running;
        while (iterations_ < settings_.max_iterations) {
            const CVector rhs = v_ - lam_ / rho_ + Gs_.adjoint() * (weight_.cast<cplx>().cwiseProduct(z_) - y_ / rho_);
            x_ = llt_.solve(rhs);
            gx_.noalias() = Gs_ * x_;
            const CVector xh = alpha * x_ + (1.0 - alpha) * v_;
            const CVector gh = alpha * gx_ + (1.0 - alpha) * z_;

            const CVector t = xh + lam_ / rho_;
            for (Eigen::Index j = 0; j < t.size(); ++j) {
                const double a = std::abs(t(j));
                const double level = cost_(j) / rho_;
                v_(j) = a > level ? t(j) * (1.0 - level / a) : cplx(0.0);
            }
            lam_ += rho_ * (xh - v_);

            const CVector s = gh + y_.cwiseQuotient(weight_.cast<cplx>()) / rho_;
            z_(0) = b0s_;
            for (Eigen::Index i = 1; i < s.size(); ++i) {
                const double a = std::abs(s(i));
                z_(i) = a > upper_s_(i) ? s(i) * (upper_s_(i) / a) : s(i);
            }
            y_ += rho_ * weight_.cast<cplx>().cwiseProduct(gh - z_);
            ++iterations_;

            if (iterations_ % settings_.check_interval == 0 && check(eps_abs, eps_rel)) return status_;
        }
        status_ = AdmmStatus::max_iterations;
        return status_;
    }

    /// Solution in the caller's (unscaled) variables, taken from the sparse v block.
    [[nodiscard]] CVector solution() const { return col_scale_.cast<cplx>().cwiseProduct(v_); }
    [[nodiscard]] std::size_t iterations() const { return iterations_; }
    [[nodiscard]] double primal_residual() const { return primal_; }
    [[nodiscard]] double dual_residual() const { return dual_; }
    [[nodiscard]] double rho() const { return rho_; }
    [[nodiscard]] std::size_t rho_updates() const { return rho_updates_; }
    [[nodiscard]] AdmmStatus status() const { return status_; }

private:
    bool check(double eps_abs, double eps_rel) {
        const CVector gty = Gs_.adjoint() * y_;

        // Unscaled residuals: x = E xs, G x = D^-1 Gs xs, dual = E^-1 (.) / cost_scale.
        const RVector einv = col_scale_.cwiseInverse();
        const RVector dinv = row_scale_.cwiseInverse();
        const double r_cons = (col_scale_.cwiseProduct((x_ - v_).cwiseAbs())).maxCoeff();
        const double r_rows = (dinv.cwiseProduct((gx_ - z_).cwiseAbs())).maxCoeff();
        primal_ = std::max(r_cons, r_rows);
        const double p_scale = std::max({(col_scale_.cwiseProduct(x_.cwiseAbs())).maxCoeff(),
                                         (col_scale_.cwiseProduct(v_.cwiseAbs())).maxCoeff(),
                                         (dinv.cwiseProduct(gx_.cwiseAbs())).maxCoeff(),
                                         (dinv.cwiseProduct(z_.cwiseAbs())).maxCoeff()});
        dual_ = (einv.cwiseProduct((lam_ + gty).cwiseAbs())).maxCoeff() / cost_scale_;
        const double d_scale = std::max((einv.cwiseProduct(lam_.cwiseAbs())).maxCoeff(),
                                        (einv.cwiseProduct(gty.cwiseAbs())).maxCoeff()) /
                               cost_scale_;

        if (primal_ <= eps_abs + eps_rel * p_scale && dual_ <= eps_abs + eps_rel * d_scale) {
            status_ = AdmmStatus::optimal;
            return true;
        }

        // Diverging multipliers of the constraint block certify infeasibility.
        const CVector dy = y_ - y_check_;
        y_check_ = y_;
        const double dy_norm = dy.cwiseAbs().maxCoeff();
        if (dy_norm > 1e-12 && iterations_ >= 5 * settings_.check_interval) {
            const double gt = (Gs_.adjoint() * dy).cwiseAbs().maxCoeff();
            double support = (std::conj(dy(0)) * b0s_).real();
            for (Eigen::Index i = 1; i < dy.size(); ++i) support += upper_s_(i) * std::abs(dy(i));
            if (gt <= settings_.eps_infeasible * dy_norm && support < -settings_.eps_infeasible * dy_norm) {
                status_ = AdmmStatus::infeasible;
                return true;
            }
        }

        if (settings_.adaptive_rho) {
            // Balance the scaled residuals.
            const double sp = std::max((x_ - v_).cwiseAbs().maxCoeff(), (gx_ - z_).cwiseAbs().maxCoeff()) /
                              std::max({x_.cwiseAbs().maxCoeff(), gx_.cwiseAbs().maxCoeff(),
                                        z_.cwiseAbs().maxCoeff(), 1e-12});
            const double sd = (lam_ + gty).cwiseAbs().maxCoeff() /
                              std::max({lam_.cwiseAbs().maxCoeff(), gty.cwiseAbs().maxCoeff(), 1e-12});
            if (sp > 0.0 && sd > 0.0) {
                const double ratio = std::sqrt(sp / sd);
                if (ratio > 5.0 || ratio < 0.2) {
                    rho_ = std::clamp(rho_ * ratio, 1e-6, 1e6);
                    ++rho_updates_;
                }
            }
        }
        return false;
    }

    AdmmSettings settings_;
    cplx b0_;
    CMatrix Gs_;
    RVector row_scale_;
    RVector col_scale_;
    RVector cost_;
    double cost_scale_ = 1.0;
    cplx b0s_;
    RVector upper_s_;
    RVector weight_;
    Eigen::LLT<CMatrix> llt_;

    CVector x_, v_, lam_, z_, y_, gx_, y_check_;
    double rho_ = 0.1;
    std::size_t iterations_ = 0;
    std::size_t rho_updates_ = 0;
    double primal_ = std::numeric_limits<double>::infinity();
    double dual_ = std::numeric_limits<double>::infinity();
    AdmmStatus status_ = AdmmStatus::running;
};

} // namespace nff::detail
