#pragma once

// Independent verification oracle for the reduction: a P1 Galerkin
// discretization of -f'' on every edge with shared vertex values and the
// delta-coupling term alpha sum_v |f(v)|^2 in the form. The generalized
// symmetric eigenproblem K f = E B f is solved by LDL^T inertia bisection
// (spectrum slicing), which yields exact eigenvalue counts in a window;
// optional Richardson extrapolation combines resolutions m and 2m.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <vector>

#include "qgl/spectra.hpp"

namespace qgl {

namespace detail {

struct FdSystem {
    // tridiagonal storage for d = 1 (path ordering), sparse otherwise
    bool tridiag = false;
    Eigen::VectorXd kd, ks, bd, bs;  // diagonals / subdiagonals of K and B
    Eigen::SparseMatrix<double> K, B;
    int dofs = 0;
};

inline FdSystem build_fd_system(const Cube& cube, const LengthField& lengths, double alpha,
                                int m) {
    FdSystem sys;
    auto nv = cube.n_vertices();
    auto ne = cube.n_edges();
    sys.dofs = static_cast<int>(nv + ne * static_cast<std::size_t>(m - 1));
    sys.tridiag = (cube.d == 1);

    // dof ids: d = 1 interleaves vertices and edge interiors along the path so
    // the matrices are tridiagonal; otherwise vertices first, interiors after.
    auto interior_id = [&](std::size_t e, int s) {  // s = 1..m-1
        if (cube.d == 1) {
            auto [i, j] = cube.ends[e];
            (void)j;
            return static_cast<int>(i) * m + s;  // vertex v sits at dof v*m
        }
        return static_cast<int>(nv + e * static_cast<std::size_t>(m - 1)) + s - 1;
    };
    auto vertex_id = [&](int v) { return cube.d == 1 ? v * m : v; };

    std::vector<Eigen::Triplet<double>> tk, tb;
    auto add = [&](std::vector<Eigen::Triplet<double>>& t, int i, int j, double v) {
        t.emplace_back(i, j, v);
        if (i != j) t.emplace_back(j, i, v);
    };
    for (std::size_t e = 0; e < ne; ++e) {
        double h = lengths[e] / m;
        auto [iv, jv] = cube.ends[e];
        int prev = vertex_id(iv);
        for (int s = 1; s <= m; ++s) {
            int cur = (s == m) ? vertex_id(jv) : interior_id(e, s);
            // element stiffness (1/h)[[1,-1],[-1,1]], mass (h/6)[[2,1],[1,2]]
            add(tk, prev, prev, 1.0 / h);
            add(tk, cur, cur, 1.0 / h);
            add(tk, prev, cur, -1.0 / h);
            add(tb, prev, prev, h / 3.0);
            add(tb, cur, cur, h / 3.0);
            add(tb, prev, cur, h / 6.0);
            prev = cur;
        }
    }
    for (std::size_t v = 0; v < nv; ++v)
        add(tk, vertex_id(static_cast<int>(v)), vertex_id(static_cast<int>(v)), alpha);

    if (sys.tridiag) {
        sys.kd.setZero(sys.dofs);
        sys.ks.setZero(sys.dofs - 1);
        sys.bd.setZero(sys.dofs);
        sys.bs.setZero(sys.dofs - 1);
        auto scatter = [&](const std::vector<Eigen::Triplet<double>>& t, Eigen::VectorXd& d,
                           Eigen::VectorXd& s) {
            for (const auto& x : t) {
                if (x.row() == x.col())
                    d(x.row()) += x.value();
                else if (x.row() + 1 == x.col())
                    s(x.row()) += x.value();
            }
        };
        scatter(tk, sys.kd, sys.ks);
        scatter(tb, sys.bd, sys.bs);
    } else {
        sys.K.resize(sys.dofs, sys.dofs);
        sys.B.resize(sys.dofs, sys.dofs);
        sys.K.setFromTriplets(tk.begin(), tk.end());
        sys.B.setFromTriplets(tb.begin(), tb.end());
    }
    return sys;
}

// negative-pivot count of K - sigma*B: the number of pencil eigenvalues < sigma
class InertiaCounter {
   public:
    explicit InertiaCounter(const FdSystem& sys) : sys_(sys) {
        if (!sys_.tridiag) {
            pattern_ = sys_.K + sys_.B;  // united sparsity pattern
            solver_.analyzePattern(pattern_);
        }
    }

    int count_below(double sigma) {
        ++factorizations_;
        for (int attempt = 0; attempt < 6; ++attempt) {
            double s = sigma * (1.0 + attempt * 3e-13) + attempt * 1e-300;
            int c = sys_.tridiag ? tridiag_count(s) : sparse_count(s);
            if (c >= 0) return c;
        }
        throw SolverError("fd oracle: inertia factorization kept hitting zero pivots");
    }

    long factorizations() const { return factorizations_; }

   private:
    int tridiag_count(double sigma) {
        const auto& kd = sys_.kd;
        const auto& ks = sys_.ks;
        const auto& bd = sys_.bd;
        const auto& bs = sys_.bs;
        int neg = 0;
        double dprev = 0.0;
        for (Eigen::Index i = 0; i < kd.size(); ++i) {
            double a = kd(i) - sigma * bd(i);
            if (i > 0) {
                double b = ks(i - 1) - sigma * bs(i - 1);
                a -= b * b / dprev;
            }
            if (a == 0.0 || !std::isfinite(a)) return -1;
            if (a < 0.0) ++neg;
            dprev = a;
        }
        return neg;
    }

    int sparse_count(double sigma) {
        pattern_ = sys_.K - sigma * sys_.B;
        solver_.factorize(pattern_);
        if (solver_.info() != Eigen::Success) return -1;
        auto d = solver_.vectorD();
        int neg = 0;
        for (Eigen::Index i = 0; i < d.size(); ++i) {
            if (d(i) == 0.0 || !std::isfinite(d(i))) return -1;
            if (d(i) < 0.0) ++neg;
        }
        return neg;
    }

    const FdSystem& sys_;
    Eigen::SparseMatrix<double> pattern_;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver_;
    long factorizations_ = 0;
};

struct SlicedEig {
    double E;
    int mult;
};

inline void slice_recursive(InertiaCounter& ic, double a, double b, int ca, int cb, double tol,
                            std::vector<SlicedEig>& out) {
    if (cb == ca) return;
    if (b - a <= tol) {
        out.push_back({0.5 * (a + b), cb - ca});
        return;
    }
    double m = 0.5 * (a + b);
    int cm = ic.count_below(m);
    slice_recursive(ic, a, m, ca, cm, tol, out);
    slice_recursive(ic, m, b, cm, cb, tol, out);
}

inline std::vector<SlicedEig> slice_window(InertiaCounter& ic, Interval w, double tol) {
    std::vector<SlicedEig> out;
    slice_recursive(ic, w.lo, w.hi, ic.count_below(w.lo), ic.count_below(w.hi), tol, out);
    return out;
}

}  // namespace detail

// Eigenvalues of the Galerkin discretization in the window. With richardson
// the (m, 2m) spectra are paired in order and extrapolated, cancelling the
// h^2 dispersion error. No Dirichlet exclusions: the discretization has no
// sin(l sqrt(E)) singularity.
inline SpectrumResult fd_oracle_spectrum(const Cube& cube, const LengthField& lengths,
                                         double alpha, int m, Interval window,
                                         bool richardson = true) {
    if (m < 16) throw std::invalid_argument("fd_oracle_spectrum: m >= 16 violated");
    SpectrumResult res;
    res.method = "fd_oracle";
    double h = lengths.l_max / m;
    res.diag.resolution_warning = window.hi * h * h > 0.01;

    double scale = std::max({1.0, std::abs(window.lo), std::abs(window.hi)});
    double slice_tol = 1e-10 * scale;
    // enlarge so boundary eigenvalues pair up between resolutions
    double margin = 0.02 * window.width() + 0.25 * window.hi * window.hi * h * h / 12.0;
    Interval wide{window.lo - margin, window.hi + margin};

    auto sys_m = detail::build_fd_system(cube, lengths, alpha, m);
    detail::InertiaCounter ic_m(sys_m);
    auto eig_m = detail::slice_window(ic_m, wide, slice_tol);
    res.diag.dofs = sys_m.dofs;

    std::vector<detail::SlicedEig> final_eigs;
    if (!richardson) {
        final_eigs = eig_m;
    } else {
        auto sys_2m = detail::build_fd_system(cube, lengths, alpha, 2 * m);
        detail::InertiaCounter ic_2m(sys_2m);
        auto eig_2m = detail::slice_window(ic_2m, wide, slice_tol);
        res.diag.dofs = sys_2m.dofs;
        res.diag.matrix_evals = ic_m.factorizations() + ic_2m.factorizations();

        // flatten multiplicities, then pair in ascending order: consistent-mass
        // eigenvalues decrease toward the limit as h decreases, so order is stable
        std::vector<double> flat_m, flat_2m;
        for (auto& s : eig_m) flat_m.insert(flat_m.end(), static_cast<std::size_t>(s.mult), s.E);
        for (auto& s : eig_2m)
            flat_2m.insert(flat_2m.end(), static_cast<std::size_t>(s.mult), s.E);
        std::size_t i = 0;
        for (double l2 : flat_2m) {
            double err_est = std::abs(l2) * l2 * h * h / 12.0;  // coarse-grid error scale
            double tol_pair = 3.0 * std::abs(err_est) + 1e-6 * scale;
            while (i < flat_m.size() && flat_m[i] < l2 - tol_pair) ++i;
            double val;
            if (i < flat_m.size() && std::abs(flat_m[i] - l2) <= tol_pair) {
                val = l2 + (l2 - flat_m[i]) / 3.0;
                ++i;
            } else {
                val = l2;  // entered the window only at the finer resolution
            }
            final_eigs.push_back({val, 1});
        }
        // re-merge extrapolated coincidences
        std::sort(final_eigs.begin(), final_eigs.end(),
                  [](const detail::SlicedEig& a, const detail::SlicedEig& b) { return a.E < b.E; });
        std::vector<detail::SlicedEig> merged;
        for (auto& s : final_eigs) {
            if (!merged.empty() && s.E - merged.back().E <= 40.0 * slice_tol)
                merged.back().mult += s.mult;
            else
                merged.push_back(s);
        }
        final_eigs = std::move(merged);
    }

    for (const auto& s : final_eigs)
        if (window.contains(s.E)) res.eigenvalues.push_back({s.E, s.mult, 0, 0.0});
    return res;
}

// ---- kernel dimensions (the multiplicity identity) --------------------------

struct KernelDims {
    int dim_ker_h = 0;
    int dim_ker_m = 0;
};

// dim ker(M(E) - alpha) counted at tol_eig; dim ker(H - E) counted from the
// extrapolated oracle at a resolution-scaled tolerance.
inline KernelDims kernel_dims(const Cube& cube, const LengthField& lengths, double E,
                              double alpha, const SpectrumOptions& opts = {}, int fd_m = 32) {
    KernelDims kd;
    ReducedOperator op = assemble_M(cube, lengths, E, opts.delta_dir);
    EigResult er = eigs_M(op);
    for (Eigen::Index j = 0; j < er.values.size(); ++j)
        if (std::abs(er.values(j) - alpha) <= opts.tol_eig) ++kd.dim_ker_m;

    double tol_h = 1e-3 * std::max(1.0, std::abs(E));
    Interval w{E - 20.0 * tol_h, E + 20.0 * tol_h};
    SpectrumResult fd = fd_oracle_spectrum(cube, lengths, alpha, fd_m, w, true);
    for (const auto& item : fd.eigenvalues)
        if (std::abs(item.E - E) <= tol_h) kd.dim_ker_h += item.multiplicity;
    return kd;
}

}  // namespace qgl
