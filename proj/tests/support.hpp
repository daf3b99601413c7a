#pragma once

#include "analysis.hpp"
#include "kcf.hpp"
#include "model.hpp"
#include "oracle.hpp"

#include <algorithm>
#include <vector>

namespace ndsa::test {

inline Matrix random_complex_matrix(Rng& rng, Index rows, Index cols) {
    Matrix M(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) M(i, j) = rng.uniform_complex(1.0);
    return M;
}

inline Matrix random_unitary(Rng& rng, Index n) {
    if (n == 0) return Matrix(0, 0);
    const Matrix A = random_complex_matrix(rng, n, n);
    Eigen::HouseholderQR<Matrix> qr(A);
    Matrix Q = Matrix::Identity(n, n);
    Q = qr.householderQ() * Q;
    return Q;
}

// Invertible with singular values in [0.6, 1.5]; keeps planted structures
// well separated from the rank tolerance.
inline Matrix random_wellcond(Rng& rng, Index n) {
    if (n == 0) return Matrix(0, 0);
    const Matrix Q1 = random_unitary(rng, n);
    const Matrix Q2 = random_unitary(rng, n);
    Vector d(n);
    for (Index i = 0; i < n; ++i) d(i) = rng.uniform(0.6, 1.5);
    return Q1 * d.asDiagonal() * Q2;
}

struct PlantedStructure {
    Index mu = 0;
    std::vector<Index> xi, eta, kappa, rho;

    Index rows() const {
        Index r = mu;
        for (Index s : xi) r += s;
        for (Index s : kappa) r += s;
        for (Index s : eta) r += s;
        for (Index s : rho) r += s + 1;
        return r;
    }
    Index cols() const {
        Index c = mu;
        for (Index s : xi) c += s;
        for (Index s : kappa) c += s + 1;
        for (Index s : eta) c += s;
        for (Index s : rho) c += s;
        return c;
    }
};

inline PlantedStructure random_structure(Rng& rng, Index max_dim = 8) {
    while (true) {
        PlantedStructure ps;
        ps.mu = rng.uniform_int(0, 3);
        for (Index k = rng.uniform_int(0, 2); k > 0; --k) ps.xi.push_back(rng.uniform_int(1, 2));
        for (Index k = rng.uniform_int(0, 1); k > 0; --k) ps.eta.push_back(rng.uniform_int(1, 2));
        for (Index k = rng.uniform_int(0, 2); k > 0; --k) ps.kappa.push_back(rng.uniform_int(0, 2));
        for (Index k = rng.uniform_int(0, 2); k > 0; --k) ps.rho.push_back(rng.uniform_int(0, 2));
        if (ps.rows() > max_dim || ps.cols() > max_dim) continue;
        if (ps.rows() + ps.cols() == 0) continue;
        return ps;
    }
}

// Strictly regular part with eigenvalues in the annulus 0.4 <= |l| <= 2.5.
inline Pencil random_strictly_regular(Rng& rng, Index mu) {
    if (mu == 0) return Pencil(Matrix(0, 0), Matrix(0, 0));
    const Matrix R1 = random_wellcond(rng, mu);
    const Matrix R2 = random_wellcond(rng, mu);
    Vector d(mu);
    for (Index i = 0; i < mu; ++i) {
        const double mag = rng.uniform(0.4, 2.5);
        const double ang = rng.uniform(0.0, 6.283185307179586);
        d(i) = Complex(mag * std::cos(ang), mag * std::sin(ang));
    }
    return Pencil(R1 * R2, R1 * d.asDiagonal() * R2);
}

inline Pencil canonical_of(const PlantedStructure& ps, Rng& rng) {
    KroneckerStructure ks;
    ks.mu = ps.mu;
    ks.xi = ps.xi;
    ks.eta = ps.eta;
    ks.kappa = ps.kappa;
    ks.rho = ps.rho;
    ks.h_reg = random_strictly_regular(rng, ps.mu);
    return canonical_pencil(ks);
}

inline Pencil plant_pencil(const PlantedStructure& ps, Rng& rng) {
    const Pencil can = canonical_of(ps, rng);
    const Matrix U = random_wellcond(rng, ps.rows());
    const Matrix V = random_wellcond(rng, ps.cols());
    return Pencil(U * can.G * V, U * can.H * V);
}

template <typename T>
std::vector<T> sorted(std::vector<T> v) {
    std::sort(v.begin(), v.end());
    return v;
}

inline bool same_structure(const PlantedStructure& ps, const KroneckerStructure& ks) {
    return ps.mu == ks.mu && sorted(ps.xi) == sorted(ks.xi) && sorted(ps.eta) == sorted(ks.eta) &&
           sorted(ps.kappa) == sorted(ks.kappa) && sorted(ps.rho) == sorted(ks.rho);
}

// Two-subsystem chain: subsystem 0 feeds its internal output into subsystem
// 1's internal input; only subsystem 1 measures, only subsystem 0 is driven.
inline NdsModel chain2() {
    NdsModel m;
    m.mode = ModelMode::numeric;
    SubsystemNumeric s1;
    s1.m_x = 1;
    s1.m_v = 1;
    s1.m_z = 1;
    s1.m_u = 1;
    s1.m_y = 0;
    s1.E = RealMatrix::Identity(1, 1);
    s1.A_xx = RealMatrix::Zero(1, 1);
    s1.A_xv = RealMatrix::Zero(1, 1);
    s1.B_x = RealMatrix::Identity(1, 1);
    s1.A_zx = RealMatrix::Identity(1, 1);
    s1.A_zv = RealMatrix::Zero(1, 1);
    s1.B_z = RealMatrix::Zero(1, 1);
    s1.C_x = RealMatrix(0, 1);
    s1.C_v = RealMatrix(0, 1);
    s1.D_u = RealMatrix(0, 1);
    SubsystemNumeric s2;
    s2.m_x = 1;
    s2.m_v = 1;
    s2.m_z = 1;
    s2.m_u = 0;
    s2.m_y = 1;
    s2.E = RealMatrix::Identity(1, 1);
    s2.A_xx = RealMatrix::Zero(1, 1);
    s2.A_xv = RealMatrix::Identity(1, 1);
    s2.B_x = RealMatrix(1, 0);
    s2.A_zx = RealMatrix::Zero(1, 1);
    s2.A_zv = RealMatrix::Zero(1, 1);
    s2.B_z = RealMatrix(1, 0);
    s2.C_x = RealMatrix::Identity(1, 1);
    s2.C_v = RealMatrix::Zero(1, 1);
    s2.D_u = RealMatrix(1, 0);
    m.numeric = {s1, s2};
    m.scm.rows = 2;
    m.scm.cols = 2;
    m.scm.entries = {{1, 0, 1.0}};  // v(sub2) <- z(sub1)
    return m;
}

}  // namespace ndsa::test
