#pragma once

// Scalar kernels shared by the dispersion relation and the vertex-reduction
// entries: argument reduction against multiples of pi (keeps sin(l*sqrt(E))
// accurate near its zeros) and small-|E| series so every entry is evaluated
// as a real-analytic function of E across E = 0.

#include <cmath>
#include <limits>
#include <utility>

#include "qgl/common.hpp"

namespace qgl::num {

// Three-part Cody-Waite split of pi; k*kPi1 and k*kPi2 are exact for the
// integer factors that occur here (k < 2^26).
inline constexpr double kPi1 = 3.141592651605606;
inline constexpr double kPi2 = 1.984187036896401e-09;
inline constexpr double kPi3 = 1.2246467991473532e-16;

struct PhaseReduced {
    long k;        // nearest multiple of pi
    double delta;  // x - k*pi, |delta| <= pi/2 (+ tiny slack)
};

inline PhaseReduced phase_reduce(double x) {
    long k = std::lround(x / kPi1);
    double kd = static_cast<double>(k);
    double d = ((x - kd * kPi1) - kd * kPi2) - kd * kPi3;
    return {k, d};
}

// sin(x), cos(x) through the reduction; needed where x sits within ~1e-8 of
// a multiple of pi and the naive call would lose all relative accuracy.
inline double sin_pr(double x) {
    auto [k, d] = phase_reduce(x);
    double s = std::sin(d);
    return (k & 1L) ? -s : s;
}

inline double cos_pr(double x) {
    auto [k, d] = phase_reduce(x);
    double c = std::cos(d);
    return (k & 1L) ? -c : c;
}

// Series threshold in z = E*l^2; below it the z^3 truncation error is < 1e-16.
inline constexpr double kSeriesZ = 1e-4;

// w/sin(w) as a function of z = w^2 (analytic continuation: z<0 means w = i*kappa
// and the same series evaluates kappa/sinh(kappa)).
inline double w_over_sin_series(double z) {
    return 1.0 + z * (1.0 / 6.0 + z * (7.0 / 360.0 + z * (31.0 / 15120.0)));
}

inline double sin_over_w_series(double z) {
    return 1.0 - z * (1.0 / 6.0 - z * (1.0 / 120.0 - z * (1.0 / 5040.0)));
}

inline double cos_w_series(double z) {
    return 1.0 - z * (0.5 - z * (1.0 / 24.0 - z * (1.0 / 720.0)));
}

inline double w_cot_w_series(double z) {
    return 1.0 - z * (1.0 / 3.0 + z * (1.0 / 45.0 + z * (2.0 / 945.0)));
}

inline double w_over_sin_sq_series(double z) {
    return 1.0 + z * (1.0 / 3.0 + z * (1.0 / 15.0 + z * (2.0 / 189.0)));
}

inline double w2_cos_over_sin2_series(double z) {
    return 1.0 - z * (1.0 / 6.0 + z * (7.0 / 120.0 + z * (31.0 / 3024.0)));
}

// Off-diagonal reduction entry for an edge of length l at energy E:
//   E > 0:  sqrt(E)/sin(l*sqrt(E))      E < 0:  sqrt(-E)/sinh(l*sqrt(-E))
//   E -> 0: 1/l
inline double edge_off_entry(double l, double E) {
    double z = E * l * l;
    if (std::abs(z) < kSeriesZ) return w_over_sin_series(z) / l;
    if (E > 0.0) {
        double k = std::sqrt(E);
        return k / sin_pr(l * k);
    }
    double kap = std::sqrt(-E);
    return kap / std::sinh(l * kap);
}

// Per-edge diagonal contribution at either endpoint:
//   E > 0:  -sqrt(E)*cot(l*sqrt(E))     E < 0:  -sqrt(-E)*coth(l*sqrt(-E))
//   E -> 0: -1/l
inline double edge_diag_entry(double l, double E) {
    double z = E * l * l;
    if (std::abs(z) < kSeriesZ) return -w_cot_w_series(z) / l;
    if (E > 0.0) {
        double k = std::sqrt(E);
        return -k * cos_pr(l * k) / sin_pr(l * k);
    }
    double kap = std::sqrt(-E);
    return -kap / std::tanh(l * kap);
}

// d/dl of the off-diagonal entry:  -E*cos(l*sqrt(E))/sin^2(l*sqrt(E))
inline double edge_doff_dl(double l, double E) {
    double z = E * l * l;
    if (std::abs(z) < kSeriesZ) return -w2_cos_over_sin2_series(z) / (l * l);
    if (E > 0.0) {
        double k = std::sqrt(E);
        double s = sin_pr(l * k);
        return -E * cos_pr(l * k) / (s * s);
    }
    double kap = std::sqrt(-E);
    double sh = std::sinh(l * kap);
    return -kap * kap * std::cosh(l * kap) / (sh * sh);
}

// d/dl of the diagonal contribution:  E/sin^2(l*sqrt(E))
inline double edge_ddiag_dl(double l, double E) {
    double z = E * l * l;
    if (std::abs(z) < kSeriesZ) return w_over_sin_sq_series(z) / (l * l);
    if (E > 0.0) {
        double k = std::sqrt(E);
        double s = sin_pr(l * k);
        return E / (s * s);
    }
    double kap = std::sqrt(-E);
    double sh = std::sinh(l * kap);
    return kap * kap / (sh * sh);
}

// d/dE of the off-diagonal entry, E > 0 away from the Dirichlet set:
//   [sin(lk) - l*k*cos(lk)] / (2k sin^2(lk)),  k = sqrt(E)
inline double edge_doff_dE(double l, double E) {
    double k = std::sqrt(E);
    double s = sin_pr(l * k), c = cos_pr(l * k);
    return (s - l * k * c) / (2.0 * k * s * s);
}

// d/dE of the diagonal contribution, E > 0:
//   [l*k - sin(lk)cos(lk)] / (2k sin^2(lk))
inline double edge_ddiag_dE(double l, double E) {
    double k = std::sqrt(E);
    double s = sin_pr(l * k), c = cos_pr(l * k);
    return (l * k - s * c) / (2.0 * k * s * s);
}

// sin(sqrt(E)*a)/sin(sqrt(E)*b), hyperbolic for E<0, (a/b) in the E->0 limit.
inline double sin_ratio(double E, double a, double b) {
    double zb = E * b * b;
    if (std::abs(zb) < kSeriesZ) {
        return (a / b) * sin_over_w_series(E * a * a) / sin_over_w_series(zb);
    }
    if (E > 0.0) {
        double k = std::sqrt(E);
        return sin_pr(k * a) / sin_pr(k * b);
    }
    double kap = std::sqrt(-E);
    return std::sinh(kap * a) / std::sinh(kap * b);
}

// |sin(l*sqrt(E))| for E > 0: the distance-to-Dirichlet metric.
inline double dirichlet_sin_abs(double l, double E) {
    if (E <= 0.0) return std::numeric_limits<double>::infinity();
    return std::abs(sin_pr(l * std::sqrt(E)));
}

}  // namespace qgl::num
