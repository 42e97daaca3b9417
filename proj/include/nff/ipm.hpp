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

// Primal-dual interior-point solver for the weighted complex L1 problem
//
//     minimise    sum_j c_j |x_j|
//     subject to  g_0 x = b_0,   |g_i x| <= u_i  (i >= 1)
//
// lifted to a real second-order cone program. With x_j = a_j + i b_j the
// real variables are [t; a; b] and every cone is three dimensional:
//
//     (t_j, a_j, b_j)                 in Q3    (epigraph of |x_j|)
//     (u_i, Re g_i x, Im g_i x)       in Q3    (magnitude bound)
//     Re g_0 x = Re b_0,  Im g_0 x = Im b_0
//
// The iteration is the homogeneous self-dual embedding with Nesterov-Todd
// scaling and a Mehrotra predictor-corrector, so a primal infeasible problem
// ends with a Farkas certificate instead of stalling. Newton systems are
// reduced to the normal equations G^T W^-2 G, formed densely.

#include <algorithm>
#include <limits>

#include "nff/common.hpp"

namespace nff::detail {

struct IpmSettings {
    double feastol = 1e-8;
    double abstol = 1e-8;
    double reltol = 1e-6;
    std::size_t max_iterations = 100;
    double step_fraction = 0.99;
    int refinement_steps = 3;
    // Near the optimum the normal equations lose accuracy and iterates can
    // drift. The best iterate is kept; the solve stops after this many
    // iterations without improvement and accepts the best one if it is
    // within `inaccurate_factor` of every tolerance.
    std::size_t stall_iterations = 10;
    double inaccurate_factor = 1e3;
};

enum class IpmStatus { running, optimal, infeasible, max_iterations, numerical_error };

class Ipm {
    using Cones = Eigen::Matrix<double, 3, Eigen::Dynamic>;
    using RMatrix = Eigen::MatrixXd;

public:
    Ipm(const CMatrix& G, cplx b0, const RVector& upper, const RVector& cost, const IpmSettings& settings)
        : settings_(settings) {
        const Eigen::Index m = G.rows();
        n_ = G.cols();
        if (m < 1 || n_ < 1) throw InvalidArgument("solver needs at least one row and one column");
        if (upper.size() != m || cost.size() != n_) throw DimensionMismatch("bound or cost length mismatch");
        mc_ = m - 1;
        k_ = n_ + mc_;

        // Equilibrate rows and columns (2-norms), then the objective.
        CMatrix Gs = G;
        row_scale_ = RVector::Ones(m);
        col_scale_ = RVector::Ones(n_);
        for (int pass = 0; pass < 5; ++pass) {
            for (Eigen::Index i = 0; i < m; ++i)
                if (const double r = Gs.row(i).norm(); r > 0.0) {
                    Gs.row(i) /= std::sqrt(r);
                    row_scale_(i) /= std::sqrt(r);
                }
            for (Eigen::Index j = 0; j < n_; ++j)
                if (const double c = Gs.col(j).norm(); c > 0.0) {
                    Gs.col(j) /= std::sqrt(c);
                    col_scale_(j) /= std::sqrt(c);
                }
        }
        for (Eigen::Index i = 0; i < m; ++i)
            if (const double r = Gs.row(i).norm(); r > 0.0) {
                Gs.row(i) /= r;
                row_scale_(i) /= r;
            }
        g0_ = Gs.row(0);
        Gc_ = Gs.bottomRows(mc_);
        cost_ = cost.cwiseProduct(col_scale_);
        cost_scale_ = 1.0 / std::max(cost_.maxCoeff(), std::numeric_limits<double>::min());
        cost_ *= cost_scale_;
        const cplx b0s = b0 * row_scale_(0);
        b_ = Eigen::Vector2d(b0s.real(), b0s.imag());
        upper_ = upper.tail(mc_).cwiseProduct(row_scale_.tail(mc_));

        c_ = RVector::Zero(3 * n_);
        c_.head(n_) = cost_;
        h_ = Cones::Zero(3, k_);
        for (Eigen::Index i = 0; i < mc_; ++i) h_(0, n_ + i) = upper_(i);
    }

    IpmStatus solve() {
        if (g0_.norm() == 0.0) return status_ = IpmStatus::infeasible;
        if (!initialise()) return status_ = IpmStatus::numerical_error;

        const double denom = double(k_ + 1);
        while (iterations_ < settings_.max_iterations) {
            // Residuals of the embedding.
            const RVector rx = At(y_) + Gt(z_) + c_ * tau_;
            const Eigen::Vector2d ry = -A(x_) + b_ * tau_;
            const Cones rz = -Gx(x_) + h_ * tau_ - s_;
            const double cx = c_.dot(x_);
            const double by = b_.dot(y_);
            const double hz = dot(h_, z_);
            const double rtau = -cx - by - hz - kappa_;

            pres_ = std::max((A(x_) / tau_ - b_).cwiseAbs().maxCoeff() / (1.0 + b_.cwiseAbs().maxCoeff()),
                             (Gx(x_) / tau_ + s_ / tau_ - h_).cwiseAbs().maxCoeff() /
                                 (1.0 + h_.cwiseAbs().maxCoeff()));
            dres_ = (At(y_) / tau_ + Gt(z_) / tau_ + c_).cwiseAbs().maxCoeff() / (1.0 + c_.cwiseAbs().maxCoeff());
            const double pcost = cx / tau_;
            const double dcost = -(by + hz) / tau_;
            gap_ = dot(s_, z_) / (tau_ * tau_);
            const double relgap = gap_ / std::max(std::min(std::abs(pcost), std::abs(dcost)), 1e-12);
            const double merit = std::max({pres_ / settings_.feastol, dres_ / settings_.feastol,
                                           std::min(gap_ / settings_.abstol, relgap / settings_.reltol)});
            if (merit <= 1.0) return status_ = IpmStatus::optimal;
            // Farkas certificate: G^T z + A^T y = 0 with h^T z + b^T y < 0.
            const double infeas = by + hz < 0.0 ? (At(y_) + Gt(z_)).cwiseAbs().maxCoeff() /
                                                      (settings_.feastol * -(by + hz))
                                                : std::numeric_limits<double>::infinity();
            if (infeas <= 1.0 && tau_ < kappa_) return status_ = IpmStatus::infeasible;
            if (merit < best_merit_) {
                best_merit_ = merit;
                best_ = {x_ / tau_, pres_, dres_, gap_};
            }
            if (std::min(merit, infeas) < best_progress_) {
                best_progress_ = std::min(merit, infeas);
                since_best_ = 0;
            } else if (++since_best_ >= settings_.stall_iterations) {
                return finish_inaccurate(IpmStatus::max_iterations);
            }

            if (!scale() || !factor()) return finish_inaccurate(IpmStatus::numerical_error);
            const double mu = (dot(s_, z_) + tau_ * kappa_) / denom;

            // Direction for the tau column: K d1 = [-c; b; h].
            RVector dx1;
            Eigen::Vector2d dy1;
            Cones dz1;
            kkt_solve(-c_, b_, h_, dx1, dy1, dz1);
            const double tau_den = -c_.dot(dx1) - b_.dot(dy1) - dot(h_, dz1) + kappa_ / tau_;

            // Predictor.
            Cones xi = -lambda_;
            RVector dx;
            Eigen::Vector2d dy;
            Cones dz, ds;
            double dtau = 0.0, dkappa = 0.0;
            direction(1.0, xi, rx, ry, rz, rtau, 0.0, mu, 0.0, dx1, dy1, dz1, tau_den, dx, dy, dz, ds, dtau, dkappa);
            const double a_aff = std::min(1.0, max_step(ds, dz, dtau, dkappa));
            const double sigma = std::clamp(std::pow(1.0 - a_aff, 3), 0.0, 1.0);

            // Corrector with Mehrotra's second-order term.
            Cones corr(3, k_);
            for (Eigen::Index k = 0; k < k_; ++k) {
                const Eigen::Vector3d a = w_inv(k, ds.col(k));
                const Eigen::Vector3d b = w_apply(k, dz.col(k));
                corr.col(k) = jordan(a, b);
            }
            const double corr_tau = dtau * dkappa;
            for (Eigen::Index k = 0; k < k_; ++k) {
                Eigen::Vector3d target = -jordan(lambda_.col(k), lambda_.col(k)) - corr.col(k);
                target(0) += sigma * mu;
                xi.col(k) = jordan_solve(lambda_.col(k), target);
            }
            direction(1.0 - sigma, xi, rx, ry, rz, rtau, sigma, mu, corr_tau, dx1, dy1, dz1, tau_den, dx, dy, dz, ds,
                      dtau, dkappa);
            const double alpha = std::min(1.0, settings_.step_fraction * max_step(ds, dz, dtau, dkappa));

            x_ += alpha * dx;
            y_ += alpha * dy;
            z_ += alpha * dz;
            s_ += alpha * ds;
            tau_ += alpha * dtau;
            kappa_ += alpha * dkappa;
            ++iterations_;
            if (!(tau_ > 0.0) || !(kappa_ > 0.0) || !x_.allFinite()) return finish_inaccurate(IpmStatus::numerical_error);
        }
        return finish_inaccurate(IpmStatus::max_iterations);
    }

    /// Complex solution in the caller's variables.
    [[nodiscard]] CVector solution() const {
        const RVector& x = use_best_ ? best_.x : x_;
        const double tau = use_best_ ? 1.0 : tau_;
        CVector w(n_);
        for (Eigen::Index j = 0; j < n_; ++j) w(j) = cplx(x(n_ + j), x(2 * n_ + j)) * (col_scale_(j) / tau);
        return w;
    }
    /// True when the solve stopped on stagnation and returned its best
    /// iterate, which met the tolerances only within `inaccurate_factor`.
    [[nodiscard]] bool inaccurate() const { return use_best_; }
    [[nodiscard]] std::size_t iterations() const { return iterations_; }
    [[nodiscard]] double primal_residual() const { return pres_; }
    [[nodiscard]] double dual_residual() const { return dres_; }
    [[nodiscard]] double gap() const { return gap_; }
    [[nodiscard]] IpmStatus status() const { return status_; }

private:
    struct Best {
        RVector x;
        double pres = 0.0, dres = 0.0, gap = 0.0;
    };

    IpmStatus finish_inaccurate(IpmStatus fallback) {
        if (best_merit_ <= settings_.inaccurate_factor) {
            use_best_ = true;
            pres_ = best_.pres;
            dres_ = best_.dres;
            gap_ = best_.gap;
            return status_ = IpmStatus::optimal;
        }
        return status_ = fallback;
    }

    static double dot(const Cones& a, const Cones& b) { return (a.array() * b.array()).sum(); }

    CVector complex_part(const RVector& x) const {
        CVector w(n_);
        for (Eigen::Index j = 0; j < n_; ++j) w(j) = cplx(x(n_ + j), x(2 * n_ + j));
        return w;
    }

    Eigen::Vector2d A(const RVector& x) const {
        const cplx v = (g0_ * complex_part(x))(0);
        return {v.real(), v.imag()};
    }

    RVector At(const Eigen::Vector2d& y) const {
        RVector out = RVector::Zero(3 * n_);
        const cplx eta(y(0), y(1));
        for (Eigen::Index j = 0; j < n_; ++j) {
            const cplx v = std::conj(g0_(j)) * eta;
            out(n_ + j) = v.real();
            out(2 * n_ + j) = v.imag();
        }
        return out;
    }

    Cones Gx(const RVector& x) const {
        Cones out(3, k_);
        for (Eigen::Index j = 0; j < n_; ++j) out.col(j) = -Eigen::Vector3d(x(j), x(n_ + j), x(2 * n_ + j));
        if (mc_ > 0) {
            const CVector gw = Gc_ * complex_part(x);
            for (Eigen::Index i = 0; i < mc_; ++i) out.col(n_ + i) = Eigen::Vector3d(0.0, -gw(i).real(), -gw(i).imag());
        }
        return out;
    }

    RVector Gt(const Cones& z) const {
        RVector out(3 * n_);
        for (Eigen::Index j = 0; j < n_; ++j) {
            out(j) = -z(0, j);
            out(n_ + j) = -z(1, j);
            out(2 * n_ + j) = -z(2, j);
        }
        if (mc_ > 0) {
            CVector zeta(mc_);
            for (Eigen::Index i = 0; i < mc_; ++i) zeta(i) = cplx(z(1, n_ + i), z(2, n_ + i));
            const CVector g = Gc_.adjoint() * zeta;
            for (Eigen::Index j = 0; j < n_; ++j) {
                out(n_ + j) -= g(j).real();
                out(2 * n_ + j) -= g(j).imag();
            }
        }
        return out;
    }

    static Eigen::Vector3d jordan(const Eigen::Vector3d& u, const Eigen::Vector3d& v) {
        return {u.dot(v), u(0) * v(1) + v(0) * u(1), u(0) * v(2) + v(0) * u(2)};
    }

    // Solves u o x = v.
    static Eigen::Vector3d jordan_solve(const Eigen::Vector3d& u, const Eigen::Vector3d& v) {
        const double det = u(0) * u(0) - u(1) * u(1) - u(2) * u(2);
        const double x0 = (u(0) * v(0) - u(1) * v(1) - u(2) * v(2)) / det;
        return {x0, (v(1) - x0 * u(1)) / u(0), (v(2) - x0 * u(2)) / u(0)};
    }

    static double cone_det(const Eigen::Vector3d& u) { return u(0) * u(0) - u(1) * u(1) - u(2) * u(2); }

    // Largest alpha with u + alpha du in the cone.
    static double cone_step(const Eigen::Vector3d& u, const Eigen::Vector3d& du) {
        const double a = cone_det(du);
        const double b = 2.0 * (u(0) * du(0) - u(1) * du(1) - u(2) * du(2));
        const double c = std::max(cone_det(u), 0.0);
        double best = std::numeric_limits<double>::infinity();
        if (du(0) < 0.0) best = -u(0) / du(0);
        if (a == 0.0) {
            if (b < 0.0) best = std::min(best, -c / b);
            return best;
        }
        const double disc = b * b - 4.0 * a * c;
        if (disc < 0.0) return best;
        const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
        for (double r : {q / a, q != 0.0 ? c / q : std::numeric_limits<double>::infinity()})
            if (r > 0.0) best = std::min(best, r);
        return best;
    }

    double max_step(const Cones& ds, const Cones& dz, double dtau, double dkappa) const {
        double alpha = std::numeric_limits<double>::infinity();
        for (Eigen::Index k = 0; k < k_; ++k) {
            alpha = std::min(alpha, cone_step(s_.col(k), ds.col(k)));
            alpha = std::min(alpha, cone_step(z_.col(k), dz.col(k)));
        }
        if (dtau < 0.0) alpha = std::min(alpha, -tau_ / dtau);
        if (dkappa < 0.0) alpha = std::min(alpha, -kappa_ / dkappa);
        return alpha;
    }

    // Nesterov-Todd scaling point of every cone.
    bool scale() {
        eta_.resize(k_);
        wbar_.resize(3, k_);
        lambda_.resize(3, k_);
        for (Eigen::Index k = 0; k < k_; ++k) {
            const Eigen::Vector3d s = s_.col(k);
            const Eigen::Vector3d z = z_.col(k);
            const double sd = cone_det(s);
            const double zd = cone_det(z);
            if (!(sd > 0.0) || !(zd > 0.0) || s(0) <= 0.0 || z(0) <= 0.0) return false;
            const double sn = std::sqrt(sd);
            const double zn = std::sqrt(zd);
            const Eigen::Vector3d sb = s / sn;
            const Eigen::Vector3d zb = z / zn;
            const double gamma = std::sqrt(0.5 * (1.0 + sb.dot(zb)));
            Eigen::Vector3d w;
            w(0) = (sb(0) + zb(0)) / (2.0 * gamma);
            w(1) = (sb(1) - zb(1)) / (2.0 * gamma);
            w(2) = (sb(2) - zb(2)) / (2.0 * gamma);
            wbar_.col(k) = w;
            eta_(k) = std::sqrt(sn / zn);
            lambda_.col(k) = w_apply(k, z);
        }
        return true;
    }

    Eigen::Vector3d w_apply(Eigen::Index k, const Eigen::Vector3d& u) const {
        const Eigen::Vector3d w = wbar_.col(k);
        const double w1u1 = w(1) * u(1) + w(2) * u(2);
        const double f = w1u1 / (1.0 + w(0)) + u(0);
        return eta_(k) * Eigen::Vector3d(w(0) * u(0) + w1u1, u(1) + f * w(1), u(2) + f * w(2));
    }

    Eigen::Vector3d w_inv(Eigen::Index k, const Eigen::Vector3d& u) const {
        const Eigen::Vector3d w = wbar_.col(k);
        const double w1u1 = w(1) * u(1) + w(2) * u(2);
        const double f = w1u1 / (1.0 + w(0)) - u(0);
        return Eigen::Vector3d(w(0) * u(0) - w1u1, u(1) + f * w(1), u(2) + f * w(2)) / eta_(k);
    }

    // V^-1 u with V = W^T W:  eta^-2 (2 wh wh^T - J) u,  wh = J wbar.
    Eigen::Vector3d v_inv(Eigen::Index k, const Eigen::Vector3d& u) const {
        const Eigen::Vector3d w = wbar_.col(k);
        const Eigen::Vector3d wh(w(0), -w(1), -w(2));
        const Eigen::Vector3d ju(u(0), -u(1), -u(2));
        return (2.0 * wh.dot(u) * wh - ju) / (eta_(k) * eta_(k));
    }

    Eigen::Vector3d v_apply(Eigen::Index k, const Eigen::Vector3d& u) const {
        return w_apply(k, w_apply(k, u));
    }

    bool factor() {
        const Eigen::Index N = 3 * n_;
        H_ = RMatrix::Zero(N, N);
        // Epigraph cones act on (t_j, a_j, b_j) directly.
        for (Eigen::Index j = 0; j < n_; ++j) {
            const Eigen::Index idx[3] = {j, n_ + j, 2 * n_ + j};
            for (int c = 0; c < 3; ++c) {
                Eigen::Vector3d e = Eigen::Vector3d::Zero();
                e(c) = 1.0;
                const Eigen::Vector3d col = v_inv(j, e);
                for (int r = 0; r < 3; ++r) H_(idx[r], idx[c]) += col(r);
            }
        }
        // Magnitude cones: sum_i R_i^T Q_i R_i with Q_i = eta^-2 (I + 2 w1 w1^T).
        if (mc_ > 0) {
            RMatrix C(2 * mc_, 2 * n_);
            for (Eigen::Index i = 0; i < mc_; ++i) {
                const Eigen::Index k = n_ + i;
                const double e2 = 1.0 / (eta_(k) * eta_(k));
                const double w1 = wbar_(1, k);
                const double w2 = wbar_(2, k);
                // Cholesky factor of Q (2x2): Q = L L^T.
                const double q11 = e2 * (1.0 + 2.0 * w1 * w1);
                const double q21 = e2 * 2.0 * w1 * w2;
                const double q22 = e2 * (1.0 + 2.0 * w2 * w2);
                const double l11 = std::sqrt(q11);
                const double l21 = q21 / l11;
                const double l22 = std::sqrt(std::max(q22 - l21 * l21, 0.0));
                // Row pair of R_i: [Re g, -Im g] and [Im g, Re g]; rows of L^T R_i.
                for (Eigen::Index j = 0; j < n_; ++j) {
                    const double gr = Gc_(i, j).real();
                    const double gi = Gc_(i, j).imag();
                    C(2 * i, j) = l11 * gr + l21 * gi;
                    C(2 * i, n_ + j) = -l11 * gi + l21 * gr;
                    C(2 * i + 1, j) = l22 * gi;
                    C(2 * i + 1, n_ + j) = l22 * gr;
                }
            }
            H_.bottomRightCorner(2 * n_, 2 * n_).selfadjointView<Eigen::Lower>().rankUpdate(C.transpose());
            H_.bottomRightCorner(2 * n_, 2 * n_).triangularView<Eigen::StrictlyUpper>() =
                H_.bottomRightCorner(2 * n_, 2 * n_).transpose();
        }
        double reg = 0.0;
        for (int attempt = 0; attempt < 6; ++attempt) {
            RMatrix Hr = H_;
            if (reg > 0.0) Hr.diagonal().array() += reg;
            llt_.compute(Hr);
            if (llt_.info() == Eigen::Success) break;
            reg = reg == 0.0 ? 1e-14 * H_.diagonal().cwiseAbs().maxCoeff() : reg * 100.0;
            if (attempt == 5) return false;
        }
        // Schur complement of the two equality rows.
        RMatrix At2(3 * n_, 2);
        At2.col(0) = At(Eigen::Vector2d(1.0, 0.0));
        At2.col(1) = At(Eigen::Vector2d(0.0, 1.0));
        HinvAt_ = llt_.solve(At2);
        S_ = At2.transpose() * HinvAt_;
        return true;
    }

    void kkt_once(const RVector& r1, const Eigen::Vector2d& r2, const Cones& r3, RVector& dx, Eigen::Vector2d& dy,
                  Cones& dz) const {
        Cones vr3(3, k_);
        for (Eigen::Index k = 0; k < k_; ++k) vr3.col(k) = v_inv(k, r3.col(k));
        const RVector rt = r1 + Gt(vr3);
        const RVector hr = llt_.solve(rt);
        dy = S_.ldlt().solve(Eigen::Vector2d(A(hr) - r2));
        dx = hr - HinvAt_ * dy;
        const Cones gdx = Gx(dx) - r3;
        dz.resize(3, k_);
        for (Eigen::Index k = 0; k < k_; ++k) dz.col(k) = v_inv(k, gdx.col(k));
    }

    // [0 A^T G^T; A 0 0; G 0 -V] [dx; dy; dz] = [r1; r2; r3], with refinement.
    void kkt_solve(const RVector& r1, const Eigen::Vector2d& r2, const Cones& r3, RVector& dx, Eigen::Vector2d& dy,
                   Cones& dz) const {
        kkt_once(r1, r2, r3, dx, dy, dz);
        for (int it = 0; it < settings_.refinement_steps; ++it) {
            const RVector e1 = r1 - At(dy) - Gt(dz);
            const Eigen::Vector2d e2 = r2 - A(dx);
            Cones e3 = r3 - Gx(dx);
            for (Eigen::Index k = 0; k < k_; ++k) e3.col(k) += v_apply(k, dz.col(k));
            RVector cx;
            Eigen::Vector2d cy;
            Cones cz;
            kkt_once(e1, e2, e3, cx, cy, cz);
            dx += cx;
            dy += cy;
            dz += cz;
        }
    }

    void direction(double keep, const Cones& xi, const RVector& rx, const Eigen::Vector2d& ry, const Cones& rz,
                   double rtau, double sigma, double mu, double corr_tau, const RVector& dx1,
                   const Eigen::Vector2d& dy1, const Cones& dz1, double tau_den, RVector& dx, Eigen::Vector2d& dy,
                   Cones& dz, Cones& ds, double& dtau, double& dkappa) const {
        Cones wxi(3, k_);
        for (Eigen::Index k = 0; k < k_; ++k) wxi.col(k) = w_apply(k, xi.col(k));
        RVector dx2;
        Eigen::Vector2d dy2;
        Cones dz2;
        kkt_solve(-keep * rx, keep * ry, -wxi + keep * rz, dx2, dy2, dz2);
        const double rhs_comp = (sigma * mu - kappa_ * tau_ - corr_tau) / tau_;
        dtau = (-keep * rtau + c_.dot(dx2) + b_.dot(dy2) + dot(h_, dz2) + rhs_comp) / tau_den;
        dx = dx2 + dtau * dx1;
        dy = dy2 + dtau * dy1;
        dz = dz2 + dtau * dz1;
        dkappa = (sigma * mu - kappa_ * tau_ - corr_tau - kappa_ * dtau) / tau_;
        ds.resize(3, k_);
        for (Eigen::Index k = 0; k < k_; ++k) ds.col(k) = w_apply(k, xi.col(k) - w_apply(k, dz.col(k)));
    }

    // Least-norm starting point shifted into the cone interior.
    bool initialise() {
        x_ = RVector::Zero(3 * n_);
        y_ = Eigen::Vector2d::Zero();
        s_ = Cones::Zero(3, k_);
        z_ = Cones::Zero(3, k_);
        // Identity scaling: eta = 1, wbar = e.
        eta_ = RVector::Ones(k_);
        wbar_ = Cones::Zero(3, k_);
        wbar_.row(0).setOnes();
        if (!factor()) return false;
        RVector dx;
        Eigen::Vector2d dy;
        Cones dz;
        // Primal: minimise ||s|| subject to Gx + s = h, Ax = b.
        kkt_solve(RVector::Zero(3 * n_), b_, h_, dx, dy, dz);
        x_ = dx;
        s_ = -dz;
        // Dual: minimise ||z|| subject to G^T z + A^T y + c = 0.
        kkt_solve(-c_, Eigen::Vector2d::Zero(), Cones::Zero(3, k_), dx, dy, dz);
        y_ = dy;
        z_ = dz;
        auto shift = [this](Cones& u) {
            double alpha = -std::numeric_limits<double>::infinity();
            for (Eigen::Index k = 0; k < k_; ++k)
                alpha = std::max(alpha, std::hypot(u(1, k), u(2, k)) - u(0, k));
            if (alpha >= 0.0) u.row(0).array() += 1.0 + alpha;
        };
        shift(s_);
        shift(z_);
        tau_ = 1.0;
        kappa_ = 1.0;
        return true;
    }

    IpmSettings settings_;
    Eigen::Index n_ = 0, mc_ = 0, k_ = 0;
    CRowVector g0_;
    CMatrix Gc_;
    RVector row_scale_, col_scale_, cost_, upper_;
    double cost_scale_ = 1.0;
    Eigen::Vector2d b_;
    RVector c_;
    Cones h_;

    RVector x_;
    Eigen::Vector2d y_;
    Cones s_, z_;
    double tau_ = 1.0, kappa_ = 1.0;

    RVector eta_;
    Cones wbar_, lambda_;
    RMatrix H_, HinvAt_;
    Eigen::Matrix2d S_;
    Eigen::LLT<RMatrix> llt_;

    Best best_;
    double best_merit_ = std::numeric_limits<double>::infinity();
    double best_progress_ = std::numeric_limits<double>::infinity();
    std::size_t since_best_ = 0;
    bool use_best_ = false;

    std::size_t iterations_ = 0;
    double pres_ = 0.0, dres_ = 0.0, gap_ = 0.0;
    IpmStatus status_ = IpmStatus::running;
};

} // namespace nff::detail
