#pragma once

#include "common.hpp"

#include <vector>

namespace ndsa {

struct ToleranceConfig {
    double rel_rank_tol = 1e-9;
    double residual_tol = 1e-8;
};

// First degree matrix polynomial lambda*G + H. Analysis pencils follow the
// sign convention lambda*E - A, so callers pass H = -A.
struct Pencil {
    Matrix G;
    Matrix H;

    Pencil() = default;
    Pencil(Matrix g, Matrix h) : G(std::move(g)), H(std::move(h)) {
        if (G.rows() != H.rows() || G.cols() != H.cols())
            throw DimensionError("pencil parts must have equal shape");
    }

    Index rows() const { return G.rows(); }
    Index cols() const { return G.cols(); }
    Matrix at(Complex lambda) const { return lambda * G + H; }
};

enum class BlockKind { K, N, L, J };

// Rank threshold tau = rel_rank_tol * sigma_max * max(rows, cols).
double rank_threshold(const Matrix& M, const ToleranceConfig& cfg);

Index rank_of(const Matrix& M, const ToleranceConfig& cfg);
bool is_fcr(const Matrix& M, const ToleranceConfig& cfg);

// Orthonormal basis of the right null space, cols x (cols - rank).
Matrix null_basis(const Matrix& M, const ToleranceConfig& cfg);

// Same primitives against a fixed absolute singular value threshold. The KCF
// staircase anchors all its rank decisions to the norm of the input pencil,
// so exact zeros that picked up roundoff from earlier transforms stay zero.
Index rank_of_abs(const Matrix& M, double tau);
Matrix null_basis_abs(const Matrix& M, double tau);

// Like rank_of_abs but refuses ambiguous decisions: if the singular values
// bracketing tau are separated by less than a factor 10 the structure is not
// trustworthy at this tolerance.
Index rank_of_abs_checked(const Matrix& M, double tau, const char* where);

// Canonical pencil blocks. K_m = lambda*I + shift, N_m = lambda*shift + I,
// L_m = [K_m | e_m] (m x m+1), J_m = L_m^T. L_0 is the 0x1 zero pencil and
// J_0 the 1x0 zero pencil.
Pencil make_canonical_block(BlockKind kind, Index m);

// Null(K_m(0)) = span(e_1).
Matrix analytic_null_K_at_zero(Index m);

// Null(L_m(lambda)) = span(col{1, (-lambda)^j | j=1..m}). The powers are
// built by repeated multiplication so L_m(lambda) * result is exactly zero.
Matrix analytic_null_L(Index m, Complex lambda);

// [M1; M2] is FCR iff M2 * null_basis(M1) is FCR.
bool fcr_after_reduction(const Matrix& M1, const Matrix& M2, const ToleranceConfig& cfg);

// null([M1; M2]) = null_basis(M1) * null_basis(M2 * null_basis(M1)).
Matrix null_via_composition(const Matrix& M1, const Matrix& M2, const ToleranceConfig& cfg);

Matrix hstack(const Matrix& A, const Matrix& B);
Matrix vstack(const Matrix& A, const Matrix& B);
RealMatrix hstack_real(const RealMatrix& A, const RealMatrix& B);
RealMatrix vstack_real(const RealMatrix& A, const RealMatrix& B);
Matrix block_diag(const std::vector<Matrix>& blocks);
RealMatrix block_diag_real(const std::vector<RealMatrix>& blocks);

}  // namespace ndsa
