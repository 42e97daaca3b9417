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

// Figures of merit of a focused excitation: sparsity, 3 dB beamwidth,
// sidelobe level, normalised peak field, focal shift and runtime.

#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "nff/common.hpp"
#include "nff/field.hpp"
#include "nff/geometry.hpp"

namespace nff {

inline constexpr double kHalfPowerLevel = 1.0 / std::numbers::sqrt2;
inline constexpr double kDefaultActivityThreshold = 1e-4;

enum class CutAxis { x, y };

enum class PeakNormalization {
    unit_mean_amplitude, // sum |w| = number of active elements
    unit_max_amplitude,  // max |w| = 1
    raw,                 // weights as solved (unit field at the focus)
};

inline std::string to_string(PeakNormalization n) {
    switch (n) {
    case PeakNormalization::unit_max_amplitude: return "unit_max_amplitude";
    case PeakNormalization::raw: return "raw";
    default: return "unit_mean_amplitude";
    }
}

inline PeakNormalization parse_peak_normalization(const std::string& s) {
    if (s == "unit_mean_amplitude") return PeakNormalization::unit_mean_amplitude;
    if (s == "unit_max_amplitude") return PeakNormalization::unit_max_amplitude;
    if (s == "raw") return PeakNormalization::raw;
    throw InvalidConfiguration("unknown peak normalization '" + s +
                               "' (expected unit_mean_amplitude, unit_max_amplitude or raw)");
}

/// Number of weights with |w| > threshold * max|w|.
inline std::size_t active_count(const CVector& w, double threshold = kDefaultActivityThreshold) {
    if (w.size() == 0) throw UndefinedMetric("empty weight vector");
    const double peak = w.cwiseAbs().maxCoeff();
    if (!(peak > 0.0)) throw UndefinedMetric("all weights are zero; sparsity is undefined");
    std::size_t n = 0;
    for (Eigen::Index i = 0; i < w.size(); ++i) n += std::abs(w(i)) > threshold * peak;
    return n;
}

inline IndexList active_indices(const CVector& w, double threshold = kDefaultActivityThreshold) {
    const double peak = w.size() ? w.cwiseAbs().maxCoeff() : 0.0;
    if (!(peak > 0.0)) throw UndefinedMetric("all weights are zero; active set is undefined");
    IndexList out;
    for (Eigen::Index i = 0; i < w.size(); ++i)
        if (std::abs(w(i)) > threshold * peak) out.push_back(std::size_t(i));
    return out;
}

/// Percentage of active elements.
inline double sparsity(const CVector& w, double threshold = kDefaultActivityThreshold) {
    return 100.0 * double(active_count(w, threshold)) / double(w.size());
}

/// Width of the interval around the focus where |E| >= level * |E(focus)|,
/// with the crossings located by linear interpolation between samples.
inline double beamwidth(const std::vector<double>& abscissa, const RVector& magnitude, std::size_t focus_pos,
                        double level = kHalfPowerLevel) {
    if (abscissa.size() != std::size_t(magnitude.size())) throw DimensionMismatch("cut abscissa/field length mismatch");
    if (focus_pos >= abscissa.size()) throw InvalidArgument("focus position outside the cut");
    if (!(level > 0.0 && level < 1.0)) throw InvalidArgument("beamwidth level must lie in (0, 1)");
    const double peak = magnitude(Eigen::Index(focus_pos));
    if (!(peak > 0.0)) throw UndefinedMetric("field at the focus is zero; beamwidth is undefined");
    const double target = level * peak;

    auto crossing = [&](int dir) {
        auto i = std::ptrdiff_t(focus_pos);
        while (true) {
            const std::ptrdiff_t j = i + dir;
            if (j < 0 || j >= std::ptrdiff_t(abscissa.size()))
                throw MetricOutOfRange("field does not fall to the beamwidth level within the sampled cut");
            const double mi = magnitude(Eigen::Index(i));
            const double mj = magnitude(Eigen::Index(j));
            if (mj < target) {
                const double t = (mi - target) / (mi - mj);
                return abscissa[std::size_t(i)] + t * (abscissa[std::size_t(j)] - abscissa[std::size_t(i)]);
            }
            i = j;
        }
    };
    return crossing(+1) - crossing(-1);
}

/// 3 dB beamwidth of a focal-plane cut; `cut_field` is sampled on
/// grids.x_cut or grids.y_cut.
inline double beamwidth_3db(const CVector& cut_field, const SamplingGrids& grids, CutAxis axis = CutAxis::x,
                            double level = kHalfPowerLevel) {
    const auto& pts = axis == CutAxis::x ? grids.x_cut : grids.y_cut;
    const std::size_t focus = axis == CutAxis::x ? grids.x_cut_focus : grids.y_cut_focus;
    if (std::size_t(cut_field.size()) != pts.size()) throw DimensionMismatch("cut field does not match the cut grid");
    std::vector<double> s(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) s[i] = axis == CutAxis::x ? pts[i].x : pts[i].y;
    return beamwidth(s, cut_field.cwiseAbs(), focus, level);
}

/// Peak sidelobe over the sidelobe-tagged focal-plane samples, in dB relative
/// to the focal sample.
inline double sidelobe_level(const CVector& focal_field, const SamplingGrids& grids) {
    if (std::size_t(focal_field.size()) != grids.focal_plane.size())
        throw DimensionMismatch("field does not match the focal-plane grid");
    const double focus = std::abs(focal_field(Eigen::Index(grids.focal_index)));
    if (!(focus > 0.0)) throw UndefinedMetric("field at the focus is zero; sidelobe level is undefined");
    double peak = 0.0;
    for (std::size_t i = 0; i < grids.focal_plane.size(); ++i)
        if (!grids.mainlobe[i]) peak = std::max(peak, std::abs(focal_field(Eigen::Index(i))));
    return 20.0 * std::log10(peak / focus);
}

struct AxialPeak {
    double z = 0.0;          // refined peak location
    double magnitude = 0.0;  // refined peak |E|
    std::size_t sample = 0;  // index of the largest sample
    bool bracketed = true;   // false when the largest sample is a grid endpoint
};

/// Largest |E| on the axial grid with three-point parabolic refinement.
inline AxialPeak axial_peak(const CVector& axial_field, const std::vector<Point3>& axial) {
    if (std::size_t(axial_field.size()) != axial.size() || axial.size() < 2)
        throw DimensionMismatch("axial field does not match the axial grid");
    const RVector m = axial_field.cwiseAbs();
    AxialPeak p;
    Eigen::Index i = 0;
    m.maxCoeff(&i);
    p.sample = std::size_t(i);
    p.z = axial[p.sample].z;
    p.magnitude = m(i);
    if (i == 0 || i + 1 == m.size()) {
        p.bracketed = false;
        return p;
    }
    const double a = m(i - 1), b = m(i), c = m(i + 1);
    const double den = a - 2.0 * b + c;
    if (den < 0.0) {
        const double delta = 0.5 * (a - c) / den;  // in units of the local spacing, |delta| <= 1/2
        const double h = delta >= 0.0 ? axial[p.sample + 1].z - p.z : p.z - axial[p.sample - 1].z;
        p.z += delta * h;
        p.magnitude = b - 0.25 * (a - c) * delta;
    }
    return p;
}

/// |z_peak - z0|. The peak must be bracketed by the grid; callers that want
/// the endpoint value anyway can use axial_peak directly.
inline double focal_shift(const CVector& axial_field, const SamplingGrids& grids) {
    if (grids.axial.empty() || grids.z0 < grids.axial.front().z || grids.z0 > grids.axial.back().z)
        throw InvalidArgument("axial grid does not span the focal distance");
    const AxialPeak p = axial_peak(axial_field, grids.axial);
    if (!p.bracketed) throw MetricOutOfRange("axial peak lies on the grid boundary; focal shift is not bracketed");
    return std::abs(p.z - grids.z0);
}

/// Scale applied to the weights before reading |E_p|.
inline double normalization_scale(const CVector& w, PeakNormalization rule,
                                   double threshold = kDefaultActivityThreshold) {
    const double l1 = w.cwiseAbs().sum();
    if (!(l1 > 0.0)) throw UndefinedMetric("all weights are zero; peak field is undefined");
    switch (rule) {
    case PeakNormalization::unit_mean_amplitude: return double(active_count(w, threshold)) / l1;
    case PeakNormalization::unit_max_amplitude: return 1.0 / w.cwiseAbs().maxCoeff();
    default: return 1.0;
    }
}

/// Axial peak field after normalising the excitation.
inline double peak_field(const CVector& axial_field, const CVector& weights, const SamplingGrids& grids,
                         PeakNormalization rule = PeakNormalization::unit_mean_amplitude,
                         double threshold = kDefaultActivityThreshold) {
    return axial_peak(axial_field, grids.axial).magnitude * normalization_scale(weights, rule, threshold);
}

/// The six reported quantities. Metrics that cannot be measured for a
/// solution (e.g. no beamwidth crossing) are NaN and explained in the notes.
struct MetricSet {
    double sparsity_pct = std::numeric_limits<double>::quiet_NaN();
    double beamwidth = std::numeric_limits<double>::quiet_NaN();
    double sll_db = std::numeric_limits<double>::quiet_NaN();
    double peak_field = std::numeric_limits<double>::quiet_NaN();
    double focal_shift = std::numeric_limits<double>::quiet_NaN();
    double runtime = std::numeric_limits<double>::quiet_NaN();
};

struct StageTimings {
    double matrix_build = 0.0;
    double omp = 0.0;
    double solve = 0.0;
    double total = 0.0;
    [[nodiscard]] double algorithm() const { return omp + solve; }
};

struct MetricOptions {
    PeakNormalization normalization = PeakNormalization::unit_mean_amplitude;
    double activity_threshold = kDefaultActivityThreshold;
    double beamwidth_level = kHalfPowerLevel;
};

struct SynthesisResult {
    ArrayGeometry geometry;
    SamplingGrids grids;
    ElementPattern pattern = ElementPattern::y_dipole;
    CVector weights;
    CVector focal_plane_field;
    CVector axial_field;
    CVector x_cut_field;
    CVector y_cut_field;
    MetricSet metrics;
    StageTimings timings;

    // Supplementary values not in the six-column summary.
    std::size_t active = 0;
    double beamwidth_y = std::numeric_limits<double>::quiet_NaN();
    double peak_field_raw = std::numeric_limits<double>::quiet_NaN();
    double axial_peak_z = std::numeric_limits<double>::quiet_NaN();
    bool focal_shift_bracketed = true;
    double objective = std::numeric_limits<double>::quiet_NaN();
    std::string status;
    std::vector<std::string> notes;
};

/// Evaluates every field and metric of `weights`. Uses the supplied focal and
/// axial matrices when given, so a pipeline does not rebuild them.
inline SynthesisResult evaluate_solution(const ArrayGeometry& geometry, const SamplingGrids& grids,
                                         ElementPattern pattern, const CVector& weights,
                                         const MetricOptions& opt = {}, const SynthesisMatrices* matrices = nullptr) {
    if (weights.size() != Eigen::Index(geometry.size()))
        throw DimensionMismatch("weight vector has " + std::to_string(weights.size()) + " entries, array has " +
                                std::to_string(geometry.size()) + " elements");
    SynthesisResult r;
    r.geometry = geometry;
    r.grids = grids;
    r.pattern = pattern;
    r.weights = weights;
    if (matrices) {
        r.focal_plane_field = evaluate_field(matrices->focal, weights);
        r.axial_field = evaluate_field(matrices->axial, weights);
    } else {
        r.focal_plane_field = evaluate_field(build_propagation_matrix(geometry, grids.focal_plane, pattern), weights);
        r.axial_field = evaluate_field(build_propagation_matrix(geometry, grids.axial, pattern), weights);
    }
    r.x_cut_field = evaluate_field(build_propagation_matrix(geometry, grids.x_cut, pattern), weights);
    r.y_cut_field = evaluate_field(build_propagation_matrix(geometry, grids.y_cut, pattern), weights);

    r.active = active_count(weights, opt.activity_threshold);  // throws on all-zero weights
    r.metrics.sparsity_pct = 100.0 * double(r.active) / double(weights.size());
    r.metrics.sll_db = sidelobe_level(r.focal_plane_field, grids);
    try {
        r.metrics.beamwidth = beamwidth_3db(r.x_cut_field, grids, CutAxis::x, opt.beamwidth_level);
    } catch (const MetricOutOfRange& e) {
        r.notes.push_back(std::string("beamwidth (x): ") + e.what());
    }
    try {
        r.beamwidth_y = beamwidth_3db(r.y_cut_field, grids, CutAxis::y, opt.beamwidth_level);
    } catch (const MetricOutOfRange& e) {
        r.notes.push_back(std::string("beamwidth (y): ") + e.what());
    }
    const AxialPeak peak = axial_peak(r.axial_field, grids.axial);
    r.axial_peak_z = peak.z;
    r.focal_shift_bracketed = peak.bracketed;
    r.metrics.focal_shift = std::abs(peak.z - grids.z0);
    if (!peak.bracketed) r.notes.push_back("focal shift: axial peak on the grid boundary (not bracketed)");
    r.peak_field_raw = peak.magnitude;
    r.metrics.peak_field = peak.magnitude * normalization_scale(weights, opt.normalization, opt.activity_threshold);
    return r;
}

} // namespace nff
