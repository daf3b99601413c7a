#include "kcf.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <utility>

namespace ndsa {

namespace {

// Deterministic probe points for normal-rank estimates, away from small
// integers and the unit circle roots used elsewhere.
const Complex kProbes[3] = {Complex(0.8374591226, 0.5489322051),
                            Complex(-0.4123456789, -0.9110135791),
                            Complex(1.0471975512, -0.3183098862)};

enum class PeelKind { Reg, K, L, N, J };

struct DoneBlock {
    PeelKind kind;
    Index size;       // block parameter m
    Index rows_ext;   // extent in rows
    Index cols_ext;   // extent in cols
};

struct Work {
    Matrix remG, remH;  // remainder pencil
    Matrix U, V;        // accumulated transforms, P ~ U * diag(done, rem) * V
    Index done_r = 0;
    Index done_c = 0;
    double tau = 0.0;    // absolute singular value threshold
    double scale = 0.0;  // norm of the input pencil
    std::vector<DoneBlock> done;
};

void apply_step(Work& w, const Matrix& S_u, const Matrix& S_v, Matrix newG, Matrix newH) {
    const Index m = w.U.rows();
    const Index n = w.V.cols();
    const Index mr = m - w.done_r;
    const Index nc = n - w.done_c;
    w.U.block(0, w.done_r, m, mr) = (w.U.block(0, w.done_r, m, mr) * S_u).eval();
    w.V.block(w.done_c, 0, nc, n) = (S_v * w.V.block(w.done_c, 0, nc, n)).eval();
    w.remG = std::move(newG);
    w.remH = std::move(newH);
}

double eval_tau(const Work& w, Complex lambda) {
    return w.tau * (1.0 + std::abs(lambda));
}

Index normal_rank(const Work& w, const Matrix& G, const Matrix& H) {
    Index r = 0;
    for (const Complex& l : kProbes) {
        r = std::max(r, rank_of_abs_checked(l * G + H, eval_tau(w, l), "normal rank probe"));
    }
    return r;
}

// Full unitary whose first cols(B) columns span range(B).
Matrix complete_unitary(const Matrix& B, Index rows) {
    if (B.cols() == 0) return Matrix::Identity(rows, rows);
    Eigen::HouseholderQR<Matrix> qr(B);
    Matrix Q = Matrix::Identity(rows, rows);
    Q = qr.householderQ() * Q;
    return Q;
}

Matrix kron(const Matrix& A, const Matrix& B) {
    Matrix R(A.rows() * B.rows(), A.cols() * B.cols());
    for (Index i = 0; i < A.rows(); ++i)
        for (Index j = 0; j < A.cols(); ++j)
            R.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
    return R;
}

// Coefficient-wise solve of A(l)*Y + X*C(l) = B(l) for pencils
// A = l*GA+HA (pa x qa), C = l*GC+HC (pc x qc), B (pa x qc).
std::pair<Matrix, Matrix> solve_coupling(const Matrix& GA, const Matrix& HA, const Matrix& GC,
                                         const Matrix& HC, const Matrix& BG, const Matrix& BH,
                                         double scale, const ToleranceConfig& cfg,
                                         const char* where) {
    const Index pa = GA.rows(), qa = GA.cols();
    const Index pc = GC.rows(), qc = GC.cols();
    Matrix Y = Matrix::Zero(qa, qc);
    Matrix X = Matrix::Zero(pa, pc);
    const Index neq = 2 * pa * qc;
    if (neq == 0) return {Y, X};
    const Index nun = qa * qc + pa * pc;
    Matrix M = Matrix::Zero(neq, nun);
    const Matrix Ipa = Matrix::Identity(pa, pa);
    const Matrix Iqc = Matrix::Identity(qc, qc);
    M.block(0, 0, pa * qc, qa * qc) = kron(Iqc, GA);
    M.block(pa * qc, 0, pa * qc, qa * qc) = kron(Iqc, HA);
    if (pa * pc > 0) {
        M.block(0, qa * qc, pa * qc, pa * pc) = kron(GC.transpose(), Ipa);
        M.block(pa * qc, qa * qc, pa * qc, pa * pc) = kron(HC.transpose(), Ipa);
    }
    Vector rhs(neq);
    rhs.head(pa * qc) = BG.reshaped();
    rhs.tail(pa * qc) = BH.reshaped();
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(M);
    Vector sol = cod.solve(rhs);
    const double res = (M * sol - rhs).norm();
    if (res > cfg.residual_tol * (1.0 + scale)) {
        throw ConditioningError(std::string("block decoupling equation inconsistent in ") + where +
                                " (residual " + std::to_string(res) + ")");
    }
    if (qa * qc > 0) Y = sol.head(qa * qc).reshaped(qa, qc);
    if (pa * pc > 0) X = sol.segment(qa * qc, pa * pc).reshaped(pa, pc);
    return {Y, X};
}

struct PeelResult {
    Index delta = 0;
    Matrix S_u, S_v;    // rem = S_u * diag(L_delta, rem') * S_v
    Matrix newG, newH;  // rem'
};

// Splits one L block of minimal index off the pencil (G, H). Requires that
// the pencil is not of full normal column rank.
PeelResult peel_one_L(const Matrix& G, const Matrix& H, const Work& w, const ToleranceConfig& cfg) {
    const Index mr = G.rows();
    const Index nc = G.cols();
    bool rejected_candidates = false;
    for (Index delta = 0; delta < nc; ++delta) {
        // T maps stacked chain coefficients (v_0..v_delta) to the lambda^i
        // coefficients of (lambda*G + H) * sum lambda^j v_j.
        Matrix T = Matrix::Zero((delta + 2) * mr, (delta + 1) * nc);
        for (Index i = 0; i <= delta; ++i) {
            T.block(i * mr, i * nc, mr, nc) = H;
            T.block((i + 1) * mr, i * nc, mr, nc) = G;
        }
        const Matrix nulls = null_basis_abs(T, w.tau);
        if (delta > mr && nulls.cols() > 0) {
            // every right minimal index is bounded by the row count, so a
            // first null appearing only here cannot be a genuine chain
            rejected_candidates = true;
            continue;
        }
        for (Index cand = 0; cand < nulls.cols(); ++cand) {
            Matrix Cv(nc, delta + 1);
            for (Index i = 0; i <= delta; ++i) Cv.col(i) = nulls.col(cand).segment(i * nc, nc);
            {
                Eigen::JacobiSVD<Matrix> svd(Cv);
                if (svd.singularValues()(delta) < 1e-8) {
                    rejected_candidates = true;
                    continue;
                }
            }
            Matrix Cu(mr, delta);
            double sgn = 1.0;
            for (Index i = 0; i < delta; ++i) {
                Cu.col(i) = sgn * (G * Cv.col(i));
                sgn = -sgn;
            }
            if (delta > 0) {
                Eigen::JacobiSVD<Matrix> svd(Cu);
                if (svd.singularValues()(delta - 1) < 100.0 * w.tau) {
                    rejected_candidates = true;
                    continue;
                }
            }

            // V-side columns carry alternating signs so the transformed
            // block comes out exactly in the L_delta pattern.
            Matrix Vcols(nc, delta + 1);
            sgn = 1.0;
            for (Index i = 0; i <= delta; ++i) {
                Vcols.col(i) = sgn * Cv.col(i);
                sgn = -sgn;
            }
            Matrix Vinv_step(nc, nc);
            Vinv_step.leftCols(delta + 1) = Vcols;
            if (nc - delta - 1 > 0) {
                Eigen::JacobiSVD<Matrix> svd(Vcols, Eigen::ComputeFullU);
                Vinv_step.rightCols(nc - delta - 1) = svd.matrixU().rightCols(nc - delta - 1);
            }
            Matrix U_step = Matrix::Identity(mr, mr);
            if (delta > 0) {
                U_step.leftCols(delta) = Cu;
                Eigen::JacobiSVD<Matrix> svd(Cu, Eigen::ComputeFullU);
                U_step.rightCols(mr - delta) = svd.matrixU().rightCols(mr - delta);
            }

            Eigen::PartialPivLU<Matrix> ulu(U_step);
            const Matrix TG = ulu.solve(G * Vinv_step);
            const Matrix TH = ulu.solve(H * Vinv_step);

            const Index qr = mr - delta;
            const Index qc = nc - delta - 1;
            const Pencil Lblk = make_canonical_block(BlockKind::L, delta);
            const Matrix AG = TG.block(delta, delta + 1, qr, qc);
            const Matrix AH = TH.block(delta, delta + 1, qr, qc);
            const Matrix BG = TG.block(0, delta + 1, delta, qc);
            const Matrix BH = TH.block(0, delta + 1, delta, qc);
            auto [Y, X] = solve_coupling(Lblk.G, Lblk.H, AG, AH, BG, BH, w.scale, cfg, "L peel");

            PeelResult res;
            res.delta = delta;
            res.newG = AG - TG.block(delta, 0, qr, delta + 1) * Y;
            res.newH = AH - TH.block(delta, 0, qr, delta + 1) * Y;
            Matrix XI = Matrix::Identity(mr, mr);
            if (delta > 0 && qr > 0) XI.block(0, delta, delta, qr) = X;
            res.S_u = U_step * XI;
            Matrix YI = Matrix::Identity(nc, nc);
            if (qc > 0) YI.block(0, delta + 1, delta + 1, qc) = Y;
            res.S_v = YI * Vinv_step.partialPivLu().solve(Matrix::Identity(nc, nc));
            return res;
        }
    }
    if (rejected_candidates)
        throw ConditioningError(
            "minimal null chain has numerically dependent coefficients; the canonical "
            "transforms are not representable at this tolerance");
    throw ConditioningError("right null chain search failed despite rank deficiency");
}

struct SpectralSplit {
    std::vector<Index> sizes;  // Jordan sizes at the deflated eigenvalue, descending
    Matrix S_u, S_v;
    Matrix newG, newH;
};

// Nilpotent Jordan chains: returns T with T^{-1} W T an exact direct sum of
// upper shift blocks, sizes descending. The Weyr characteristic comes from
// the staircase (level t deflated weyr[t-1] directions = number of blocks of
// size >= t), so the structure is fixed here and only the chain vectors are
// computed; thresholding powers of a numerically zero W would misread it.
std::pair<Matrix, std::vector<Index>> nilpotent_jordan(const Matrix& W,
                                                       const std::vector<Index>& weyr_in,
                                                       const ToleranceConfig& cfg) {
    const Index q = W.rows();
    if (q == 0) return {Matrix(0, 0), {}};
    const Index p = static_cast<Index>(weyr_in.size());
    std::vector<Index> weyr(static_cast<std::size_t>(p) + 2, 0);
    std::vector<Index> kdim(static_cast<std::size_t>(p) + 1, 0);
    for (Index j = 1; j <= p; ++j) {
        weyr[j] = weyr_in[j - 1];
        kdim[j] = kdim[j - 1] + weyr[j];
        if (j > 1 && weyr[j] > weyr[j - 1])
            throw ConditioningError("Weyr sequence of nilpotent part is not monotone");
    }
    if (kdim[p] != q) throw ConditioningError("staircase Weyr counts do not cover the block");
    if (p == 1) {
        std::vector<Index> sizes(static_cast<std::size_t>(q), 1);
        return {Matrix::Identity(q, q), sizes};
    }
    const double wnorm = Eigen::JacobiSVD<Matrix>(W).singularValues()(0);
    if (wnorm == 0.0)
        throw ConditioningError("staircase announced chains of length > 1 for a zero block");
    const Matrix Wn = W / wnorm;

    // Null bases of Wn^j with dimensions forced by the Weyr counts.
    std::vector<Matrix> null_of_power;
    null_of_power.push_back(Matrix(q, 0));
    Matrix P = Matrix::Identity(q, q);
    for (Index j = 1; j < p; ++j) {
        P = (Wn * P).eval();
        Eigen::JacobiSVD<Matrix> svd(P, Eigen::ComputeFullV);
        null_of_power.push_back(svd.matrixV().rightCols(kdim[j]));
    }
    P = (Wn * P).eval();
    if (P.norm() > 1e-6 * static_cast<double>(q))
        throw ConditioningError("zero/infinity part is not nilpotent at tolerance");
    null_of_power.push_back(Matrix::Identity(q, q));

    std::vector<std::vector<Vector>> level(static_cast<std::size_t>(p) + 2);
    Matrix T(q, q);
    std::vector<Index> sizes;
    Index col = 0;
    for (Index h = p; h >= 1; --h) {
        std::vector<Vector> carried;
        for (const Vector& v : level[h + 1]) carried.push_back(Wn * v);
        const Index need = weyr[h] - weyr[h + 1];
        std::vector<Vector> tops;
        if (need > 0) {
            Matrix keep(q, null_of_power[h - 1].cols() + static_cast<Index>(carried.size()));
            keep.leftCols(null_of_power[h - 1].cols()) = null_of_power[h - 1];
            for (std::size_t i = 0; i < carried.size(); ++i)
                keep.col(null_of_power[h - 1].cols() + static_cast<Index>(i)) = carried[i];
            Matrix keep_orth(q, 0);
            if (keep.cols() > 0) {
                Eigen::HouseholderQR<Matrix> qr(keep);
                Matrix Q = Matrix::Identity(q, q);
                Q = qr.householderQ() * Q;
                keep_orth = Q.leftCols(std::min(keep.cols(), q));
            }
            Matrix cand = null_of_power[h];
            if (keep_orth.cols() > 0) cand -= keep_orth * (keep_orth.adjoint() * cand);
            Eigen::JacobiSVD<Matrix> svd(cand, Eigen::ComputeFullU);
            if (svd.singularValues().size() < need || svd.singularValues()(need - 1) < 1e-6)
                throw ConditioningError("Jordan chain tops could not be separated at tolerance");
            for (Index i = 0; i < need; ++i) tops.push_back(svd.matrixU().col(i));
        }
        for (const Vector& t : tops) {
            // Chain columns W^{h-1} t, ..., W t, t scaled so the original W
            // (not the normalized one) maps each column to its predecessor.
            std::vector<Vector> chain(static_cast<std::size_t>(h));
            chain[static_cast<std::size_t>(h) - 1] = t;
            for (Index i = h - 2; i >= 0; --i) chain[static_cast<std::size_t>(i)] = Wn * chain[static_cast<std::size_t>(i) + 1];
            double s = 1.0;
            for (Index i = 0; i < h; ++i) {
                T.col(col + i) = chain[static_cast<std::size_t>(i)] / s;
                s *= wnorm;
            }
            col += h;
            sizes.push_back(h);
        }
        for (const Vector& v : carried) level[h].push_back(v);
        for (const Vector& t : tops) level[h].push_back(t);
    }
    if (col != q) throw ConditioningError("Jordan chain count mismatch");
    {
        Eigen::JacobiSVD<Matrix> svd(T);
        const auto& sv = svd.singularValues();
        if (sv(q - 1) < 1e-12 * sv(0)) throw ConditioningError("Jordan transform nearly singular");
    }
    return {T, sizes};
}

// Deflates the eigenvalue-0 (or infinite) structure of a square regular
// pencil into exact K (or N) blocks.
std::optional<SpectralSplit> extract_spectral(const Matrix& G, const Matrix& H, bool infinite,
                                              const Work& w, const ToleranceConfig& cfg) {
    const Index q = G.rows();
    if (q == 0) return std::nullopt;
    Matrix Gt = G, Ht = H;
    Matrix Qstage = Matrix::Identity(q, q);
    Matrix Zstage = Matrix::Identity(q, q);
    Index s = 0;
    Index prev = q + 1;
    std::vector<Index> weyr;
    while (s < q) {
        const Index win = q - s;
        const Matrix& Qpart = infinite ? Gt : Ht;
        const Matrix Nw = null_basis_abs(Qpart.block(s, s, win, win), w.tau);
        const Index nt = Nw.cols();
        if (nt == 0) break;
        if (nt > prev) throw ConditioningError("spectral staircase is not monotone");
        prev = nt;
        weyr.push_back(nt);
        const Matrix Zw = complete_unitary(Nw, win);
        const Matrix& Ppart = infinite ? Ht : Gt;
        const Matrix Bw = Ppart.block(s, s, win, win) * Zw.leftCols(nt);
        if (rank_of_abs_checked(Bw, w.tau, "spectral staircase compression") != nt)
            throw ConditioningError("pencil regular part compression failed (common null space)");
        const Matrix Qw = complete_unitary(Bw, win);
        Gt.block(0, s, q, win) = (Gt.block(0, s, q, win) * Zw).eval();
        Ht.block(0, s, q, win) = (Ht.block(0, s, q, win) * Zw).eval();
        Gt.block(s, 0, win, q) = (Qw.adjoint() * Gt.block(s, 0, win, q)).eval();
        Ht.block(s, 0, win, q) = (Qw.adjoint() * Ht.block(s, 0, win, q)).eval();
        Qstage.block(0, s, q, win) = (Qstage.block(0, s, q, win) * Qw).eval();
        Zstage.block(s, 0, win, q) = (Zw.adjoint() * Zstage.block(s, 0, win, q)).eval();
        s += nt;
    }
    if (s == 0) return std::nullopt;
    const Index k = s;
    const Index rest = q - k;
    const Matrix GA = Gt.topLeftCorner(k, k);
    const Matrix HA = Ht.topLeftCorner(k, k);
    const Matrix GC = Gt.bottomRightCorner(rest, rest);
    const Matrix HC = Ht.bottomRightCorner(rest, rest);
    auto [Y, X] = solve_coupling(GA, HA, GC, HC, Gt.topRightCorner(k, rest),
                                 Ht.topRightCorner(k, rest), w.scale, cfg, "spectral split");

    const Matrix& inv_part = infinite ? HA : GA;
    Eigen::PartialPivLU<Matrix> lu(inv_part);
    const Matrix W = infinite ? Matrix(lu.solve(GA)) : Matrix(lu.solve(HA));
    auto [T, sizes] = nilpotent_jordan(W, weyr, cfg);
    const Matrix Ublk = inv_part * T;
    const Matrix Vblk = T.partialPivLu().solve(Matrix::Identity(k, k));

    SpectralSplit out;
    out.sizes = std::move(sizes);
    out.newG = GC - Gt.bottomLeftCorner(rest, k) * Y;
    out.newH = HC - Ht.bottomLeftCorner(rest, k) * Y;
    Matrix XI = Matrix::Identity(q, q);
    if (k > 0 && rest > 0) XI.block(0, k, k, rest) = X;
    Matrix Ublk_full = Matrix::Identity(q, q);
    Ublk_full.topLeftCorner(k, k) = Ublk;
    out.S_u = Qstage * XI * Ublk_full;
    Matrix YI = Matrix::Identity(q, q);
    if (k > 0 && rest > 0) YI.block(0, k, k, rest) = Y;
    Matrix Vblk_full = Matrix::Identity(q, q);
    Vblk_full.topLeftCorner(k, k) = Vblk;
    out.S_v = Vblk_full * YI * Zstage;
    return out;
}

int kind_priority(PeelKind k) {
    switch (k) {
        case PeelKind::Reg: return 0;
        case PeelKind::K: return 1;
        case PeelKind::L: return 2;
        case PeelKind::N: return 3;
        case PeelKind::J: return 4;
    }
    return 5;
}

}  // namespace

Index KroneckerStructure::rows() const {
    Index r = mu;
    for (Index s : xi) r += s;
    for (Index s : kappa) r += s;
    for (Index s : eta) r += s;
    for (Index s : rho) r += s + 1;
    return r;
}

Index KroneckerStructure::cols() const {
    Index c = mu;
    for (Index s : xi) c += s;
    for (Index s : kappa) c += s + 1;
    for (Index s : eta) c += s;
    for (Index s : rho) c += s;
    return c;
}

KroneckerStructure compute_kcf(const Pencil& P, const ToleranceConfig& cfg) {
    const Index m = P.rows();
    const Index n = P.cols();
    Work w;
    w.scale = std::max(P.G.norm(), P.H.norm());
    w.tau = cfg.rel_rank_tol * static_cast<double>(std::max<Index>(std::max(m, n), 1)) * w.scale;
    w.remG = P.G;
    w.remH = P.H;
    w.U = Matrix::Identity(m, m);
    w.V = Matrix::Identity(n, n);

    // Right singular structure, smallest minimal index first.
    while (w.remG.cols() > 0) {
        if (w.remG.cols() - normal_rank(w, w.remG, w.remH) == 0) break;
        PeelResult r = peel_one_L(w.remG, w.remH, w, cfg);
        w.done.push_back({PeelKind::L, r.delta, r.delta, r.delta + 1});
        Index consumed_r = r.delta, consumed_c = r.delta + 1;
        apply_step(w, r.S_u, r.S_v, std::move(r.newG), std::move(r.newH));
        w.done_r += consumed_r;
        w.done_c += consumed_c;
    }
    // Left singular structure via the transposed pencil.
    while (w.remG.rows() > 0) {
        if (w.remG.rows() - normal_rank(w, w.remG, w.remH) == 0) break;
        PeelResult r = peel_one_L(w.remG.transpose(), w.remH.transpose(), w, cfg);
        w.done.push_back({PeelKind::J, r.delta, r.delta + 1, r.delta});
        Matrix S_u = r.S_v.transpose();
        Matrix S_v = r.S_u.transpose();
        Matrix nG = r.newG.transpose();
        Matrix nH = r.newH.transpose();
        Index consumed_r = r.delta + 1, consumed_c = r.delta;
        apply_step(w, S_u, S_v, std::move(nG), std::move(nH));
        w.done_r += consumed_r;
        w.done_c += consumed_c;
    }
    if (w.remG.rows() != w.remG.cols())
        throw ConditioningError("singular structure extraction left a non-square regular part");

    // Zero eigenvalue structure (K blocks), then infinite (N blocks).
    for (int pass = 0; pass < 2; ++pass) {
        const bool infinite = pass == 1;
        auto split = extract_spectral(w.remG, w.remH, infinite, w, cfg);
        if (!split) continue;
        Index k = 0;
        for (Index s : split->sizes) {
            w.done.push_back({infinite ? PeelKind::N : PeelKind::K, s, s, s});
            k += s;
        }
        apply_step(w, split->S_u, split->S_v, std::move(split->newG), std::move(split->newH));
        w.done_r += k;
        w.done_c += k;
    }

    KroneckerStructure ks;
    ks.mu = w.remG.rows();
    if (ks.mu > 0) {
        if (rank_of_abs(w.remG, w.tau) < ks.mu || rank_of_abs(w.remH, w.tau) < ks.mu)
            throw ConditioningError("trailing part is not strictly regular at tolerance");
        w.done.push_back({PeelKind::Reg, ks.mu, ks.mu, ks.mu});
        ks.h_reg = Pencil(w.remG, w.remH);
    } else {
        ks.h_reg = Pencil(Matrix(0, 0), Matrix(0, 0));
        w.done.push_back({PeelKind::Reg, 0, 0, 0});
    }

    // Reorder blocks to (H_reg, K, L, N, J); K and N sizes descending, L and
    // J ascending. Permutations fold into U and V exactly.
    std::vector<std::size_t> order(w.done.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const DoneBlock& A = w.done[a];
        const DoneBlock& B = w.done[b];
        if (kind_priority(A.kind) != kind_priority(B.kind))
            return kind_priority(A.kind) < kind_priority(B.kind);
        if (A.kind == PeelKind::K || A.kind == PeelKind::N) return A.size > B.size;
        return A.size < B.size;
    });
    std::vector<Index> cur_roff(w.done.size()), cur_coff(w.done.size());
    {
        Index ro = 0, co = 0;
        for (std::size_t i = 0; i < w.done.size(); ++i) {
            cur_roff[i] = ro;
            cur_coff[i] = co;
            ro += w.done[i].rows_ext;
            co += w.done[i].cols_ext;
        }
    }
    Matrix Ufin(m, m), Vfin(n, n);
    {
        Index ro = 0, co = 0;
        for (std::size_t t = 0; t < order.size(); ++t) {
            const DoneBlock& blk = w.done[order[t]];
            if (blk.rows_ext > 0)
                Ufin.middleCols(ro, blk.rows_ext) = w.U.middleCols(cur_roff[order[t]], blk.rows_ext);
            if (blk.cols_ext > 0)
                Vfin.middleRows(co, blk.cols_ext) = w.V.middleRows(cur_coff[order[t]], blk.cols_ext);
            ro += blk.rows_ext;
            co += blk.cols_ext;
            switch (blk.kind) {
                case PeelKind::K: ks.xi.push_back(blk.size); break;
                case PeelKind::N: ks.eta.push_back(blk.size); break;
                case PeelKind::L: ks.kappa.push_back(blk.size); break;
                case PeelKind::J: ks.rho.push_back(blk.size); break;
                case PeelKind::Reg: break;
            }
        }
    }
    ks.U = std::move(Ufin);
    ks.V = std::move(Vfin);

    if (ks.rows() != m || ks.cols() != n)
        throw ConditioningError("block size bookkeeping mismatch");
    const double res = reconstruct_residual(ks, P, {kProbes[0], kProbes[1], kProbes[2]});
    if (res > cfg.residual_tol)
        throw ConditioningError("canonical form reconstruction residual " + std::to_string(res) +
                                " exceeds tolerance; retry with different tolerances");
    return ks;
}

Pencil canonical_pencil(const KroneckerStructure& ks) {
    std::vector<Matrix> gs, hs;
    gs.push_back(ks.h_reg.G);
    hs.push_back(ks.h_reg.H);
    for (Index s : ks.xi) {
        Pencil b = make_canonical_block(BlockKind::K, s);
        gs.push_back(b.G);
        hs.push_back(b.H);
    }
    for (Index s : ks.kappa) {
        Pencil b = make_canonical_block(BlockKind::L, s);
        gs.push_back(b.G);
        hs.push_back(b.H);
    }
    for (Index s : ks.eta) {
        Pencil b = make_canonical_block(BlockKind::N, s);
        gs.push_back(b.G);
        hs.push_back(b.H);
    }
    for (Index s : ks.rho) {
        Pencil b = make_canonical_block(BlockKind::J, s);
        gs.push_back(b.G);
        hs.push_back(b.H);
    }
    return Pencil(block_diag(gs), block_diag(hs));
}

double reconstruct_residual(const KroneckerStructure& ks, const Pencil& P,
                            const std::vector<Complex>& samples) {
    if (samples.empty()) throw DimensionError("reconstruct_residual requires samples");
    const Pencil can = canonical_pencil(ks);
    const double norms = P.G.norm() + P.H.norm();
    double worst = 0.0;
    for (const Complex& l : samples) {
        const double num = (ks.U * can.at(l) * ks.V - P.at(l)).norm();
        const double den = (1.0 + std::abs(l)) * norms;
        if (den == 0.0) {
            if (num > 0.0) return std::numeric_limits<double>::infinity();
            continue;
        }
        worst = std::max(worst, num / den);
    }
    return worst;
}

Index leading_width(const KroneckerStructure& ks) {
    Index r = ks.mu;
    for (Index s : ks.xi) r += s;
    for (Index s : ks.kappa) r += s;
    return r;
}

Index leading_cols(const KroneckerStructure& ks) {
    return leading_width(ks) + ks.c();
}

SingularPointSet singular_points(const KroneckerStructure& ks, const ToleranceConfig& cfg) {
    SingularPointSet out;
    if (ks.c() > 0) {
        out.whole_plane = true;
        return out;
    }
    std::vector<Complex> pts;
    if (ks.a() > 0) pts.push_back(Complex(0.0, 0.0));
    if (ks.mu > 0) {
        const Matrix W = ks.h_reg.G.partialPivLu().solve(ks.h_reg.H);
        Eigen::ComplexEigenSolver<Matrix> es(W);
        for (Index i = 0; i < es.eigenvalues().size(); ++i) pts.push_back(-es.eigenvalues()(i));
    }
    for (const Complex& p : pts) {
        bool dup = false;
        for (const Complex& q : out.points) {
            if (std::abs(p - q) <= cfg.rel_rank_tol * (1.0 + std::max(std::abs(p), std::abs(q)))) {
                dup = true;
                break;
            }
        }
        if (!dup) out.points.push_back(p);
    }
    std::sort(out.points.begin(), out.points.end(), [](const Complex& a, const Complex& b) {
        if (a.real() != b.real()) return a.real() < b.real();
        return a.imag() < b.imag();
    });
    return out;
}

Matrix reduced_null_basis(const KroneckerStructure& ks, Complex lambda0, const ToleranceConfig& cfg) {
    struct Piece {
        Index row_off;
        Matrix basis;
    };
    std::vector<Piece> pieces;
    Index roff = 0;
    Index total_cols = 0;
    if (ks.mu > 0) {
        // Threshold anchored to the pencil coefficients: evaluated at one of
        // its own eigenvalues the matrix is tiny but rarely exactly zero, so
        // a threshold relative to the evaluated matrix would miss the null
        // space entirely.
        const double tau = cfg.rel_rank_tol * static_cast<double>(ks.mu) *
                           (1.0 + std::abs(lambda0)) *
                           std::max(ks.h_reg.G.norm(), ks.h_reg.H.norm());
        Matrix nb = null_basis_abs(ks.h_reg.at(lambda0), tau);
        total_cols += nb.cols();
        pieces.push_back({roff, std::move(nb)});
        roff += ks.mu;
    }
    for (Index s : ks.xi) {
        if (std::abs(lambda0) <= cfg.rel_rank_tol) {
            Matrix nb = analytic_null_K_at_zero(s);
            total_cols += 1;
            pieces.push_back({roff, std::move(nb)});
        }
        roff += s;
    }
    for (Index s : ks.kappa) {
        Matrix nb = analytic_null_L(s, lambda0);
        total_cols += 1;
        pieces.push_back({roff, std::move(nb)});
        roff += s + 1;
    }
    Matrix out = Matrix::Zero(leading_cols(ks), total_cols);
    Index coff = 0;
    for (const Piece& p : pieces) {
        out.block(p.row_off, coff, p.basis.rows(), p.basis.cols()) = p.basis;
        coff += p.basis.cols();
    }
    return out;
}

namespace {

Matrix v_inverse_prefix(const KroneckerStructure& ks, Index k) {
    const Index n = ks.V.rows();
    if (n == 0) return Matrix(0, k);
    Eigen::JacobiSVD<Matrix> svd(ks.V, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    if (sv(n - 1) < 1e-14 * sv(0))
        throw ConditioningError("V transform of the canonical form is numerically singular");
    return svd.solve(Matrix::Identity(n, n)).leftCols(k);
}

}  // namespace

Matrix v_inverse_leading(const KroneckerStructure& ks) {
    return v_inverse_prefix(ks, leading_width(ks));
}

Matrix v_inverse_leading_cols(const KroneckerStructure& ks) {
    return v_inverse_prefix(ks, leading_cols(ks));
}

Index pencil_normal_rank(const Pencil& P, const ToleranceConfig& cfg) {
    const double scale = std::max(P.G.norm(), P.H.norm());
    const double tau = cfg.rel_rank_tol *
                       static_cast<double>(std::max<Index>(std::max(P.rows(), P.cols()), 1)) * scale;
    Index r = 0;
    for (const Complex& l : kProbes)
        r = std::max(r, rank_of_abs_checked(P.at(l), tau * (1.0 + std::abs(l)), "normal rank probe"));
    return r;
}

namespace {

// Rank-drop enumeration for a pencil of full normal column rank: every drop
// point is a root of det(W^H P(lambda)) for any full-rank compression W, so
// the eigenvalues of that square pencil are a complete candidate list and a
// direct rank test at each candidate filters the spurious ones.
PencilFcrEverywhere fcr_everywhere_by_enumeration(const Pencil& P, const ToleranceConfig& cfg) {
    PencilFcrEverywhere out;
    const Index n = P.cols();
    if (pencil_normal_rank(P, cfg) < n) {
        out.fcr = false;
        out.drop_point = Complex(0.0, 0.0);
        return out;
    }
    const double scale = std::max(P.G.norm(), P.H.norm());
    const double tau = cfg.rel_rank_tol *
                       static_cast<double>(std::max<Index>(std::max(P.rows(), P.cols()), 1)) * scale;
    std::uint64_t wseed = 0x9d2c5680u;
    for (int attempt = 0; attempt < 5; ++attempt) {
        // deterministic pseudo-random compression
        Matrix W(P.rows(), n);
        std::uint64_t state = wseed + static_cast<std::uint64_t>(attempt) * 0x3c6ef372u;
        auto next = [&state]() {
            std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
            return static_cast<double>((z ^ (z >> 31)) >> 11) * 0x1.0p-52 - 1.0;
        };
        for (Index i = 0; i < W.rows(); ++i)
            for (Index j = 0; j < W.cols(); ++j) W(i, j) = Complex(next(), next());
        const Matrix GS = W.adjoint() * P.G;
        const Matrix HS = W.adjoint() * P.H;
        Complex alpha;
        bool have_alpha = false;
        for (const Complex& l : kProbes) {
            const Matrix S = l * GS + HS;
            Eigen::JacobiSVD<Matrix> svd(S);
            const auto& sv = svd.singularValues();
            if (n == 0 || sv(n - 1) > 1e-10 * std::max(sv(0), 1e-300)) {
                alpha = l;
                have_alpha = true;
                break;
            }
        }
        if (!have_alpha) continue;  // unlucky compression
        if (n == 0) {
            out.fcr = true;
            return out;
        }
        const Matrix S0 = alpha * GS + HS;
        const Matrix K = S0.partialPivLu().solve(GS);
        Eigen::ComplexEigenSolver<Matrix> es(K);
        out.fcr = true;
        for (Index i = 0; i < es.eigenvalues().size(); ++i) {
            const Complex w = es.eigenvalues()(i);
            if (std::abs(w) < 1e-14) continue;  // eigenvalue at infinity
            const Complex cand = alpha - 1.0 / w;
            if (rank_of_abs(P.at(cand), tau * (1.0 + std::abs(cand))) < n) {
                out.fcr = false;
                out.drop_point = cand;
                return out;
            }
        }
        return out;
    }
    throw ConditioningError("rank drop enumeration failed: no usable compression found");
}

}  // namespace

PencilFcrEverywhere pencil_fcr_everywhere(const Pencil& P, const ToleranceConfig& cfg) {
    try {
        const KroneckerStructure ks = compute_kcf(P, cfg);
        PencilFcrEverywhere out;
        out.fcr = ks.mu == 0 && ks.a() == 0 && ks.c() == 0;
        if (!out.fcr) {
            if (ks.c() > 0) {
                out.drop_point = Complex(0.0, 0.0);
            } else {
                const SingularPointSet pts = singular_points(ks, cfg);
                out.drop_point = pts.points.front();
            }
        }
        return out;
    } catch (const ConditioningError&) {
        // The full canonical form can be unrepresentable (ill conditioned
        // left chains) even though the column rank question is benign.
        return fcr_everywhere_by_enumeration(P, cfg);
    }
}

}  // namespace ndsa
