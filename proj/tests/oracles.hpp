#pragma once

// Test-only oracles, independent of the library's solution paths: brute-force
// lattice enumeration, a Jacobi eigensolver, dense dispersion scans, and small
// statistics helpers.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include "qgl/lattice.hpp"

namespace oracle {

// Direct enumeration of the cube's edge set from the definition: every lattice
// edge (m, m+h_j) with at least one endpoint of sup-norm <= n, scanning a box
// two steps wider than could possibly contribute.
inline std::set<std::pair<std::vector<int>, int>> enumerate_edges(int d, int n) {
    std::set<std::pair<std::vector<int>, int>> out;
    std::vector<int> m(static_cast<std::size_t>(d), -n - 2);
    while (true) {
        for (int j = 1; j <= d; ++j) {
            auto sup = [&](const std::vector<int>& v) {
                int s = 0;
                for (int c : v) s = std::max(s, std::abs(c));
                return s;
            };
            std::vector<int> tau = m;
            tau[static_cast<std::size_t>(j - 1)] += 1;
            if (sup(m) <= n || sup(tau) <= n) out.insert({m, j});
        }
        int a = d - 1;
        while (a >= 0) {
            if (++m[static_cast<std::size_t>(a)] <= n + 2) break;
            m[static_cast<std::size_t>(a)] = -n - 2;
            --a;
        }
        if (a < 0) break;
    }
    return out;
}

// Cyclic Jacobi for symmetric matrices; deliberately unrelated to Eigen's path.
inline std::vector<double> jacobi_eigenvalues(Eigen::MatrixXd A, int sweeps = 60) {
    const auto n = A.rows();
    for (int s = 0; s < sweeps; ++s) {
        double off = 0.0;
        for (Eigen::Index p = 0; p < n; ++p)
            for (Eigen::Index q = p + 1; q < n; ++q) off += A(p, q) * A(p, q);
        if (off < 1e-26) break;
        for (Eigen::Index p = 0; p < n; ++p)
            for (Eigen::Index q = p + 1; q < n; ++q) {
                if (std::abs(A(p, q)) < 1e-300) continue;
                double theta = (A(q, q) - A(p, p)) / (2.0 * A(p, q));
                double t = (theta >= 0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0), sn = t * c;
                for (Eigen::Index k = 0; k < n; ++k) {
                    double akp = A(k, p), akq = A(k, q);
                    A(k, p) = c * akp - sn * akq;
                    A(k, q) = sn * akp + c * akq;
                }
                for (Eigen::Index k = 0; k < n; ++k) {
                    double apk = A(p, k), aqk = A(q, k);
                    A(p, k) = c * apk - sn * aqk;
                    A(q, k) = sn * apk + c * aqk;
                }
            }
    }
    std::vector<double> ev(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) ev[static_cast<std::size_t>(i)] = A(i, i);
    std::sort(ev.begin(), ev.end());
    return ev;
}

struct LinFit {
    double slope = 0.0, intercept = 0.0, r2 = 0.0;
};

inline LinFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    auto n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
        syy += y[i] * y[i];
    }
    LinFit f;
    f.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    f.intercept = (sy - f.slope * sx) / n;
    double ss_tot = syy - sy * sy / n;
    double ss_res = ss_tot - f.slope * (sxy - sx * sy / n);
    f.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
    return f;
}

// chi-square p-value for a 2x2 contingency table (1 dof)
inline double chi2_p_2x2(long a, long b, long c, long d) {
    double n = static_cast<double>(a + b + c + d);
    double r1 = a + b, r2 = c + d, c1 = a + c, c2 = b + d;
    if (r1 == 0 || r2 == 0 || c1 == 0 || c2 == 0) return 1.0;
    double stat = n * qgl::sq(a * d - b * c) / (r1 * r2 * c1 * c2);
    return std::erfc(std::sqrt(stat / 2.0));  // survival of chi2(1)
}

}  // namespace oracle
