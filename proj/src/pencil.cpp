#include "pencil.hpp"

#include <Eigen/SVD>

#include <algorithm>

namespace ndsa {

namespace {

Eigen::VectorXd singular_values(const Matrix& M) {
    Eigen::JacobiSVD<Matrix> svd(M);
    return svd.singularValues();
}

}  // namespace

double rank_threshold(const Matrix& M, const ToleranceConfig& cfg) {
    if (M.rows() == 0 || M.cols() == 0) return 0.0;
    const double smax = singular_values(M)(0);
    return cfg.rel_rank_tol * smax * static_cast<double>(std::max(M.rows(), M.cols()));
}

Index rank_of(const Matrix& M, const ToleranceConfig& cfg) {
    if (M.rows() == 0 || M.cols() == 0) return 0;
    const Eigen::VectorXd sv = singular_values(M);
    const double tau = cfg.rel_rank_tol * sv(0) * static_cast<double>(std::max(M.rows(), M.cols()));
    Index r = 0;
    while (r < sv.size() && sv(r) > tau) ++r;
    return r;
}

bool is_fcr(const Matrix& M, const ToleranceConfig& cfg) {
    return rank_of(M, cfg) == M.cols();
}

Matrix null_basis(const Matrix& M, const ToleranceConfig& cfg) {
    if (M.cols() == 0) return Matrix(0, 0);
    if (M.rows() == 0) return Matrix::Identity(M.cols(), M.cols());
    Eigen::JacobiSVD<Matrix> svd(M, Eigen::ComputeFullV);
    const Eigen::VectorXd sv = svd.singularValues();
    const double tau = cfg.rel_rank_tol * sv(0) * static_cast<double>(std::max(M.rows(), M.cols()));
    Index r = 0;
    while (r < sv.size() && sv(r) > tau) ++r;
    return svd.matrixV().rightCols(M.cols() - r);
}

Index rank_of_abs(const Matrix& M, double tau) {
    if (M.rows() == 0 || M.cols() == 0) return 0;
    const Eigen::VectorXd sv = singular_values(M);
    Index r = 0;
    while (r < sv.size() && sv(r) > tau) ++r;
    return r;
}

Matrix null_basis_abs(const Matrix& M, double tau) {
    if (M.cols() == 0) return Matrix(0, 0);
    if (M.rows() == 0) return Matrix::Identity(M.cols(), M.cols());
    Eigen::JacobiSVD<Matrix> svd(M, Eigen::ComputeFullV);
    const Eigen::VectorXd sv = svd.singularValues();
    Index r = 0;
    while (r < sv.size() && sv(r) > tau) ++r;
    return svd.matrixV().rightCols(M.cols() - r);
}

Index rank_of_abs_checked(const Matrix& M, double tau, const char* where) {
    if (M.rows() == 0 || M.cols() == 0) return 0;
    const Eigen::VectorXd sv = singular_values(M);
    Index r = 0;
    while (r < sv.size() && sv(r) > tau) ++r;
    if (r > 0 && r < sv.size() && sv(r) > 0.0 && sv(r - 1) < 10.0 * sv(r)) {
        throw ConditioningError(std::string("ambiguous rank decision in ") + where +
                                ": singular values " + std::to_string(sv(r - 1)) + " and " +
                                std::to_string(sv(r)) + " straddle tau=" + std::to_string(tau) +
                                " with gap below 10");
    }
    return r;
}

Pencil make_canonical_block(BlockKind kind, Index m) {
    if (m < 0) throw DimensionError("block size must be nonnegative");
    switch (kind) {
        case BlockKind::K: {
            if (m < 1) throw DimensionError("K blocks require m >= 1");
            Matrix G = Matrix::Identity(m, m);
            Matrix H = Matrix::Zero(m, m);
            for (Index i = 0; i + 1 < m; ++i) H(i, i + 1) = 1.0;
            return Pencil(std::move(G), std::move(H));
        }
        case BlockKind::N: {
            if (m < 1) throw DimensionError("N blocks require m >= 1");
            Matrix G = Matrix::Zero(m, m);
            for (Index i = 0; i + 1 < m; ++i) G(i, i + 1) = 1.0;
            Matrix H = Matrix::Identity(m, m);
            return Pencil(std::move(G), std::move(H));
        }
        case BlockKind::L: {
            Matrix G = Matrix::Zero(m, m + 1);
            Matrix H = Matrix::Zero(m, m + 1);
            G.leftCols(m) = Matrix::Identity(m, m);
            for (Index i = 0; i < m; ++i) H(i, i + 1) = 1.0;
            return Pencil(std::move(G), std::move(H));
        }
        case BlockKind::J: {
            Pencil L = make_canonical_block(BlockKind::L, m);
            return Pencil(L.G.transpose(), L.H.transpose());
        }
    }
    throw DimensionError("unknown block kind");
}

Matrix analytic_null_K_at_zero(Index m) {
    if (m < 1) throw DimensionError("K blocks require m >= 1");
    Matrix v = Matrix::Zero(m, 1);
    v(0, 0) = 1.0;
    return v;
}

Matrix analytic_null_L(Index m, Complex lambda) {
    Matrix v(m + 1, 1);
    Complex p = 1.0;
    v(0, 0) = p;
    for (Index j = 1; j <= m; ++j) {
        p *= -lambda;
        v(j, 0) = p;
    }
    return v;
}

bool fcr_after_reduction(const Matrix& M1, const Matrix& M2, const ToleranceConfig& cfg) {
    if (M1.cols() != M2.cols()) throw DimensionError("column counts must agree");
    const Matrix n1 = null_basis(M1, cfg);
    return is_fcr(M2 * n1, cfg);
}

Matrix null_via_composition(const Matrix& M1, const Matrix& M2, const ToleranceConfig& cfg) {
    if (M1.cols() != M2.cols()) throw DimensionError("column counts must agree");
    const Matrix n1 = null_basis(M1, cfg);
    const Matrix n2 = null_basis(M2 * n1, cfg);
    return n1 * n2;
}

Matrix hstack(const Matrix& A, const Matrix& B) {
    if (A.rows() != B.rows()) throw DimensionError("hstack row mismatch");
    Matrix R(A.rows(), A.cols() + B.cols());
    R.leftCols(A.cols()) = A;
    R.rightCols(B.cols()) = B;
    return R;
}

Matrix vstack(const Matrix& A, const Matrix& B) {
    if (A.cols() != B.cols()) throw DimensionError("vstack column mismatch");
    Matrix R(A.rows() + B.rows(), A.cols());
    R.topRows(A.rows()) = A;
    R.bottomRows(B.rows()) = B;
    return R;
}

RealMatrix hstack_real(const RealMatrix& A, const RealMatrix& B) {
    if (A.rows() != B.rows()) throw DimensionError("hstack row mismatch");
    RealMatrix R(A.rows(), A.cols() + B.cols());
    R.leftCols(A.cols()) = A;
    R.rightCols(B.cols()) = B;
    return R;
}

RealMatrix vstack_real(const RealMatrix& A, const RealMatrix& B) {
    if (A.cols() != B.cols()) throw DimensionError("vstack column mismatch");
    RealMatrix R(A.rows() + B.rows(), A.cols());
    R.topRows(A.rows()) = A;
    R.bottomRows(B.rows()) = B;
    return R;
}

Matrix block_diag(const std::vector<Matrix>& blocks) {
    Index r = 0, c = 0;
    for (const Matrix& b : blocks) {
        r += b.rows();
        c += b.cols();
    }
    Matrix R = Matrix::Zero(r, c);
    Index ro = 0, co = 0;
    for (const Matrix& b : blocks) {
        R.block(ro, co, b.rows(), b.cols()) = b;
        ro += b.rows();
        co += b.cols();
    }
    return R;
}

RealMatrix block_diag_real(const std::vector<RealMatrix>& blocks) {
    Index r = 0, c = 0;
    for (const RealMatrix& b : blocks) {
        r += b.rows();
        c += b.cols();
    }
    RealMatrix R = RealMatrix::Zero(r, c);
    Index ro = 0, co = 0;
    for (const RealMatrix& b : blocks) {
        R.block(ro, co, b.rows(), b.cols()) = b;
        ro += b.rows();
        co += b.cols();
    }
    return R;
}

}  // namespace ndsa
