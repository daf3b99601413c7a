#pragma once

#include "pencil.hpp"

#include <optional>
#include <vector>

namespace ndsa {

// Kronecker canonical form of a pencil: P(lambda) = U * Psi(lambda) * V with
// Psi = diag{H_reg, K_xi..., L_kappa..., N_eta..., J_rho...}.
struct KroneckerStructure {
    Index mu = 0;                 // size of the strictly regular part
    std::vector<Index> xi;        // K block sizes (positive)
    std::vector<Index> eta;       // N block sizes (positive)
    std::vector<Index> kappa;     // L block sizes (nonnegative)
    std::vector<Index> rho;       // J block sizes (nonnegative)
    Matrix U;                     // rows x rows, invertible
    Matrix V;                     // cols x cols, invertible
    Pencil h_reg;                 // mu x mu strictly regular

    Index a() const { return static_cast<Index>(xi.size()); }
    Index b() const { return static_cast<Index>(eta.size()); }
    Index c() const { return static_cast<Index>(kappa.size()); }
    Index d() const { return static_cast<Index>(rho.size()); }
    Index rows() const;
    Index cols() const;
};

struct SingularPointSet {
    bool whole_plane = false;
    std::vector<Complex> points;
};

KroneckerStructure compute_kcf(const Pencil& P, const ToleranceConfig& cfg);

// The block diagonal Psi(lambda) determined by the structure.
Pencil canonical_pencil(const KroneckerStructure& ks);

// max over samples of ||U*Psi(lambda)*V - (lambda*G + H)||_F
//                     / ((1+|lambda|) * (||G||_F + ||H||_F))
double reconstruct_residual(const KroneckerStructure& ks, const Pencil& P,
                            const std::vector<Complex>& samples);

// m = mu + sum(xi) + sum(kappa): rows of the leading diag{H, K, L} group.
Index leading_width(const KroneckerStructure& ks);

// Columns of the same group, mu + sum(xi) + sum(kappa + 1). Differs from
// leading_width by c because every L block is one column wider than tall.
Index leading_cols(const KroneckerStructure& ks);

// Complex numbers where diag{H_reg, K, L} loses column rank: the whole plane
// as soon as an L block exists, otherwise eig(H_reg) plus 0 if K blocks exist.
SingularPointSet singular_points(const KroneckerStructure& ks, const ToleranceConfig& cfg);

// FCR basis of Null(diag{H_reg(l0), K(l0), L(l0)}), assembled blockwise:
// numeric null for H_reg, analytic formulas for K and L blocks.
Matrix reduced_null_basis(const KroneckerStructure& ks, Complex lambda0, const ToleranceConfig& cfg);

// First leading_width(ks) columns of V^{-1}.
Matrix v_inverse_leading(const KroneckerStructure& ks);

// First leading_cols(ks) columns of V^{-1}; maps reduced null vectors back to
// original coordinates. Equals v_inverse_leading when no L blocks exist.
Matrix v_inverse_leading_cols(const KroneckerStructure& ks);

// Rank at generic lambda, probed at fixed quasi-random points.
Index pencil_normal_rank(const Pencil& P, const ToleranceConfig& cfg);

// FCR at every lambda iff the KCF has only N and J blocks. When it does not,
// drop_point is one lambda where column rank is lost. Computed through the
// KCF; if the left singular structure is too ill conditioned to resolve, an
// eigenvalue-candidate enumeration answers the same question (rank drops of
// a pencil with full normal column rank happen only at the finite
// eigenvalues of its regular part, and each candidate is verified by a
// direct rank test).
struct PencilFcrEverywhere {
    bool fcr = false;
    std::optional<Complex> drop_point;
};
PencilFcrEverywhere pencil_fcr_everywhere(const Pencil& P, const ToleranceConfig& cfg);

}  // namespace ndsa
