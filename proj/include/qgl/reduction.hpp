#pragma once

// The vertex-reduction operator M_Lambda(l, E) on a cube, its Dirichlet
// singularities, the length-derivative blocks, the gap constants behind the
// positive-energy monotonicity, the negative-energy factorization, and the
// reconstruction of metric-graph eigenfunctions from vertex data.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <ostream>
#include <vector>

#include "qgl/kp_bands.hpp"
#include "qgl/length_field.hpp"
#include "qgl/num.hpp"

namespace qgl {

inline constexpr double kDeltaDir = 1e-8;  // |sin l sqrt(E)| proximity threshold

// All Dirichlet energies (pi k / l_e)^2 <= E_max, with multiplicity.
inline std::vector<double> dirichlet_spectrum(const LengthField& lengths, double E_max) {
    if (!(E_max > 0.0)) throw std::invalid_argument("dirichlet_spectrum: E_max > 0 violated");
    std::vector<double> out;
    for (double l : lengths.value)
        for (int k = 1; sq(M_PI * k / l) <= E_max; ++k) out.push_back(sq(M_PI * k / l));
    std::sort(out.begin(), out.end());
    return out;
}

struct ReducedOperator {
    double energy = 0.0;
    double dirichlet_distance = 0.0;  // min_e |sin(l_e sqrt(E))|, +inf for E <= 0
    Eigen::MatrixXd mat;
    bool tridiagonal = false;  // d = 1 path ordering makes the matrix tridiagonal
};

inline double dirichlet_distance_of(const LengthField& lengths, double E) {
    double dmin = std::numeric_limits<double>::infinity();
    for (double l : lengths.value) dmin = std::min(dmin, num::dirichlet_sin_abs(l, E));
    return dmin;
}

// Assembles the symmetric vertex matrix: off-diagonal sqrt(E)/sin(l_e sqrt(E))
// per edge, diagonal -sqrt(E) sum_e cot(l_e sqrt(E)); hyperbolic entries for
// E < 0 and the analytic limit (+-1/l_e) at E = 0.
inline ReducedOperator assemble_M(const Cube& cube, const LengthField& lengths, double E,
                                  double delta_dir = kDeltaDir) {
    if (lengths.value.size() != cube.n_edges())
        throw std::invalid_argument("assemble_M: field does not match cube");
    ReducedOperator op;
    op.energy = E;
    op.dirichlet_distance = dirichlet_distance_of(lengths, E);
    if (E > 0.0 && op.dirichlet_distance <= delta_dir)
        throw DirichletProximity("assemble_M: E within " + fmt_g17(delta_dir) +
                                 " of the Dirichlet spectrum (|sin| = " +
                                 fmt_g17(op.dirichlet_distance) + ")");
    auto nv = static_cast<Eigen::Index>(cube.n_vertices());
    op.mat = Eigen::MatrixXd::Zero(nv, nv);
    for (std::size_t e = 0; e < cube.n_edges(); ++e) {
        auto [i, j] = cube.ends[e];
        double off = num::edge_off_entry(lengths[e], E);
        double dia = num::edge_diag_entry(lengths[e], E);
        op.mat(i, j) += off;
        op.mat(j, i) += off;
        op.mat(i, i) += dia;
        op.mat(j, j) += dia;
    }
    op.tridiagonal = cube.d == 1;
    return op;
}

// d = 1 fast path: diagonal and subdiagonal only (the lexicographic vertex
// order is the path order).
inline void assemble_M_tridiagonal(const Cube& cube, const LengthField& lengths, double E,
                                   Eigen::VectorXd& diag, Eigen::VectorXd& sub) {
    auto nv = static_cast<Eigen::Index>(cube.n_vertices());
    diag.setZero(nv);
    sub.setZero(nv - 1);
    for (std::size_t e = 0; e < cube.n_edges(); ++e) {
        auto [i, j] = cube.ends[e];
        double off = num::edge_off_entry(lengths[e], E);
        double dia = num::edge_diag_entry(lengths[e], E);
        sub(std::min(i, j)) += off;
        diag(i) += dia;
        diag(j) += dia;
    }
}

// Rank-<=2 block of dM/dl_e supported on {iota e, tau e}:
// [[diag, off], [off, diag]] with diag = E/sin^2(l sqrt(E)) and
// off = -E cos(l sqrt(E))/sin^2(l sqrt(E)) (hyperbolic for E < 0).
struct EdgeBlock {
    int i = 0, j = 0;
    double diag = 0.0;
    double off = 0.0;
};

inline EdgeBlock dM_dl(const Cube& cube, const LengthField& lengths, double E,
                       std::size_t edge_index, double delta_dir = kDeltaDir) {
    if (edge_index >= cube.n_edges()) throw std::invalid_argument("dM_dl: edge index out of range");
    double l = lengths[edge_index];
    if (E > 0.0 && num::dirichlet_sin_abs(l, E) <= delta_dir)
        throw DirichletProximity("dM_dl: E within guard of the edge Dirichlet spectrum");
    EdgeBlock b;
    b.i = cube.ends[edge_index].first;
    b.j = cube.ends[edge_index].second;
    b.diag = num::edge_ddiag_dl(l, E);
    b.off = num::edge_doff_dl(l, E);
    return b;
}

inline Eigen::MatrixXd block_to_dense(const EdgeBlock& b, std::size_t n_vertices) {
    auto nv = static_cast<Eigen::Index>(n_vertices);
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(nv, nv);
    m(b.i, b.i) += b.diag;
    m(b.j, b.j) += b.diag;
    m(b.i, b.j) += b.off;
    m(b.j, b.i) += b.off;
    return m;
}

// sum over all edges of dM/dl_e, dense (for the monotonicity checks)
inline Eigen::MatrixXd sum_dM_dl(const Cube& cube, const LengthField& lengths, double E,
                                 double delta_dir = kDeltaDir) {
    auto nv = static_cast<Eigen::Index>(cube.n_vertices());
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(nv, nv);
    for (std::size_t e = 0; e < cube.n_edges(); ++e) {
        EdgeBlock b = dM_dl(cube, lengths, E, e, delta_dir);
        m(b.i, b.i) += b.diag;
        m(b.j, b.j) += b.diag;
        m(b.i, b.j) += b.off;
        m(b.j, b.i) += b.off;
    }
    return m;
}

// ---- gap constants on a Delta-free interval ---------------------------------

struct GapBounds {
    Interval I;
    double c1 = 0.0;    // lower bound for 1 - |cos(l sqrt(E))|
    double c2 = 0.0;    // lower bound for E / sin^2(l sqrt(E))
    double beta = 0.0;  // c1 * c2
    double b = 0.0;     // upper bound for ||dM/dE||
};

// c1 is exact: on a Delta-free interval the phase l*sqrt(E) crosses no
// multiple of pi, so |cos| attains its maximum at a corner of the (E, l) box.
// c2 and b come from grid extremization with a measured-Lipschitz padding.
inline GapBounds gap_constants(Interval I, double l_min, double l_max, int d,
                               int grid = 513) {
    if (!(I.lo > 0.0) || !(I.hi > I.lo))
        throw std::invalid_argument("gap_constants: need 0 < I.lo < I.hi");
    DeltaSet ds = delta_set(l_min, l_max, 4.0 * I.hi);
    for (const auto& iv : ds.intervals)
        if (iv.overlaps({I.lo, I.hi}))
            throw IntervalMeetsDelta("gap_constants: interval meets the forbidden set");

    GapBounds gb;
    gb.I = I;
    double phi_lo = l_min * std::sqrt(I.lo), phi_hi = l_max * std::sqrt(I.hi);
    gb.c1 = 1.0 - std::max(std::abs(num::cos_pr(phi_lo)), std::abs(num::cos_pr(phi_hi)));

    double hE = (I.hi - I.lo) / (grid - 1);
    double hl = (l_max - l_min) / (grid - 1);
    Eigen::MatrixXd f(grid, grid);
    double c2 = std::numeric_limits<double>::infinity();
    double doff_max = 0.0, ddiag_max = 0.0;
    for (int a = 0; a < grid; ++a) {
        double E = I.lo + hE * a;
        for (int b2 = 0; b2 < grid; ++b2) {
            double l = l_min + hl * b2;
            double s = num::sin_pr(l * std::sqrt(E));
            f(a, b2) = E / (s * s);
            c2 = std::min(c2, f(a, b2));
            doff_max = std::max(doff_max, std::abs(num::edge_doff_dE(l, E)));
            ddiag_max = std::max(ddiag_max, std::abs(num::edge_ddiag_dE(l, E)));
        }
    }
    // measured Lipschitz constants of E/sin^2 on the grid, 1.5x safety
    double LE = 0.0, Ll = 0.0;
    for (int a = 0; a + 1 < grid; ++a)
        for (int b2 = 0; b2 < grid; ++b2) LE = std::max(LE, std::abs(f(a + 1, b2) - f(a, b2)) / hE);
    for (int a = 0; a < grid; ++a)
        for (int b2 = 0; b2 + 1 < grid; ++b2) Ll = std::max(Ll, std::abs(f(a, b2 + 1) - f(a, b2)) / hl);
    double pad = 0.75 * (LE * hE + Ll * hl);
    gb.c2 = c2 - pad;
    if (!(gb.c2 > 0.0))
        throw IntervalMeetsDelta("gap_constants: grid too coarse for a positive c2");
    gb.beta = gb.c1 * gb.c2;
    // row-sum bound: up to 2d off-diagonal entries and 2d diagonal contributions
    gb.b = 2.0 * d * (doff_max + ddiag_max) * 1.02;
    return gb;
}

// ---- negative-energy factorization ------------------------------------------

struct NegativeGapResult {
    double gamma = 0.0;
    double margin = 0.0;                  // smallest eigenvalue of K - gamma id
    double factorization_residual = 0.0;  // max |(F M - M - K)_{vw}|
};

// For E in [-E_plus, -E_minus] assembles K = sqrt(-E) sum_e tanh(l_e sqrt(-E)) I^e,
// the unique diagonal partner with F M = M + K for the first-order operator
// F = -(1/sqrt(-E)) sum_e tanh(l_e sqrt(-E)) d/dl_e, and returns the uniform
// bound gamma = sqrt(E_minus) tanh(l_min sqrt(E_minus)) together with the
// eigenvalue margin of K - gamma id and the entrywise factorization residual.
inline NegativeGapResult negative_gap_check(const Cube& cube, const LengthField& lengths,
                                            double E, double E_minus, double E_plus) {
    if (!(E < 0.0) || !(0.0 < E_minus && E_minus <= -E && -E <= E_plus))
        throw std::invalid_argument("negative_gap_check: need -E_plus <= E <= -E_minus < 0");
    double kap = std::sqrt(-E);

    NegativeGapResult res;
    res.gamma = std::sqrt(E_minus) * std::tanh(lengths.l_min * std::sqrt(E_minus));

    std::vector<double> kdiag(cube.n_vertices(), 0.0);
    std::vector<double> fm_minus_m_diag(cube.n_vertices(), 0.0);
    double off_resid = 0.0;
    for (std::size_t e = 0; e < cube.n_edges(); ++e) {
        double l = lengths[e];
        double w = -std::tanh(l * kap) / kap;  // F weight on this edge
        auto [i, j] = cube.ends[e];
        double kentry = kap * std::tanh(l * kap);
        kdiag[static_cast<std::size_t>(i)] += kentry;
        kdiag[static_cast<std::size_t>(j)] += kentry;
        // (F M)_e - M_e, entrywise
        double off = w * num::edge_doff_dl(l, E) - num::edge_off_entry(l, E);
        double dia = w * num::edge_ddiag_dl(l, E) - num::edge_diag_entry(l, E);
        off_resid = std::max(off_resid, std::abs(off));
        fm_minus_m_diag[static_cast<std::size_t>(i)] += dia;
        fm_minus_m_diag[static_cast<std::size_t>(j)] += dia;
    }
    double margin = std::numeric_limits<double>::infinity();
    double diag_resid = 0.0;
    for (std::size_t v = 0; v < cube.n_vertices(); ++v) {
        margin = std::min(margin, kdiag[v] - res.gamma);
        diag_resid = std::max(diag_resid, std::abs(fm_minus_m_diag[v] - kdiag[v]));
    }
    res.margin = margin;
    res.factorization_residual = std::max(off_resid, diag_resid);
    return res;
}

// ---- eigenfunction reconstruction -------------------------------------------

struct ReconstructedFunction {
    int samples_per_edge = 0;  // number of sub-intervals; samples = this + 1
    std::vector<std::vector<double>> edge_values;
};

// f_e(t) = f(iota e) sin(sqrt(E)(l - t))/sin(sqrt(E) l)
//        + f(tau e)  sin(sqrt(E) t)/sin(sqrt(E) l), sampled uniformly.
inline ReconstructedFunction reconstruct_eigenfunction(const Cube& cube,
                                                       const LengthField& lengths, double E,
                                                       const Eigen::VectorXd& vertex_values,
                                                       int samples_per_edge,
                                                       double delta_dir = kDeltaDir) {
    if (vertex_values.size() != static_cast<Eigen::Index>(cube.n_vertices()))
        throw std::invalid_argument("reconstruct_eigenfunction: vertex vector size mismatch");
    if (samples_per_edge < 1)
        throw std::invalid_argument("reconstruct_eigenfunction: samples_per_edge >= 1");
    if (E > 0.0 && dirichlet_distance_of(lengths, E) <= delta_dir)
        throw DirichletProximity("reconstruct_eigenfunction: E too close to the Dirichlet spectrum");

    ReconstructedFunction out;
    out.samples_per_edge = samples_per_edge;
    out.edge_values.resize(cube.n_edges());
    for (std::size_t e = 0; e < cube.n_edges(); ++e) {
        double l = lengths[e];
        auto [i, j] = cube.ends[e];
        double fi = vertex_values(i), fj = vertex_values(j);
        auto& vals = out.edge_values[e];
        vals.resize(static_cast<std::size_t>(samples_per_edge) + 1);
        vals.front() = fi;
        vals.back() = fj;
        for (int s = 1; s < samples_per_edge; ++s) {
            double t = l * static_cast<double>(s) / samples_per_edge;
            vals[static_cast<std::size_t>(s)] =
                fi * num::sin_ratio(E, l - t, l) + fj * num::sin_ratio(E, t, l);
        }
    }
    return out;
}

// Debug dump: "# qgl M dump: <n> <n> <nnz> (row col value)" then one
// coordinate triplet per nonzero entry, row-major.
inline void dump_matrix(const ReducedOperator& op, std::ostream& os) {
    Eigen::Index n = op.mat.rows();
    Eigen::Index nnz = 0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            if (op.mat(i, j) != 0.0) ++nnz;
    os << "# qgl M dump: " << n << " " << n << " " << nnz << " (row col value)\n";
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            if (op.mat(i, j) != 0.0)
                os << i << " " << j << " " << fmt_g17(op.mat(i, j)) << "\n";
}

}  // namespace qgl
