#include "oracle.hpp"

#include <sstream>

namespace ndsa {

namespace {

Matrix cplx(const RealMatrix& M) { return M.cast<Complex>(); }

}  // namespace

bool oracle_fcr_everywhere(const Pencil& P, const ToleranceConfig& cfg) {
    const PencilFcrEverywhere res = pencil_fcr_everywhere(P, cfg);
    // Sampling can only confirm an FCR-everywhere claim; a rank drop at a
    // random point while the KCF saw only N and J blocks means the two
    // routes disagree.
    Rng rng(0x5eedf00dULL);
    for (int k = 0; k < 20; ++k) {
        const Complex l = rng.uniform_complex(2.0);
        const bool fcr_here = rank_of(P.at(l), cfg) == P.cols();
        if (res.fcr && !fcr_here)
            throw ConditioningError(
                "KCF claims FCR everywhere but rank sampling found a drop; tolerances are "
                "inconsistent for this pencil");
    }
    return res.fcr;
}

bool oracle_regular(const LumpedDescriptor& lum, const ToleranceConfig& cfg,
                    const SampleConfig& samp) {
    if (lum.E.rows() != lum.E.cols() || lum.A.rows() != lum.A.cols())
        throw DimensionError("regularity test needs square E and A");
    const Index mx = lum.E.rows();
    if (mx == 0) return true;
    const double radius = 1.0 + std::max(lum.E.cwiseAbs().rowwise().sum().maxCoeff(),
                                         lum.A.cwiseAbs().rowwise().sum().maxCoeff());
    for (const Complex& l : ring_points(radius, mx + 1, samp)) {
        const Matrix M = l * cplx(lum.E) - cplx(lum.A);
        if (rank_of(M, cfg) == mx) return true;
    }
    return false;
}

std::optional<bool> oracle_observable(const LumpedDescriptor& lum, const ToleranceConfig& cfg) {
    if (!oracle_regular(lum, cfg)) return std::nullopt;
    const Index mx = lum.E.rows();
    const Matrix ec = vstack(cplx(lum.E), cplx(lum.C));
    if (rank_of(ec, cfg) != mx) return false;
    Matrix G = Matrix::Zero(mx + lum.C.rows(), mx);
    G.topRows(mx) = cplx(lum.E);
    Matrix H(mx + lum.C.rows(), mx);
    H.topRows(mx) = -cplx(lum.A);
    H.bottomRows(lum.C.rows()) = cplx(lum.C);
    return oracle_fcr_everywhere(Pencil(std::move(G), std::move(H)), cfg);
}

std::optional<bool> oracle_controllable(const LumpedDescriptor& lum, const ToleranceConfig& cfg) {
    if (!oracle_regular(lum, cfg)) return std::nullopt;
    const Index mx = lum.E.rows();
    if (rank_of(hstack(cplx(lum.E), cplx(lum.B)), cfg) != mx) return false;
    // FRR of [lambda E - A, B] as FCR of the transposed pencil.
    Matrix G = Matrix::Zero(mx + lum.B.cols(), mx);
    G.topRows(mx) = cplx(lum.E).transpose();
    Matrix H(mx + lum.B.cols(), mx);
    H.topRows(mx) = -cplx(lum.A).transpose();
    H.bottomRows(lum.B.cols()) = cplx(lum.B).transpose();
    return oracle_fcr_everywhere(Pencil(std::move(G), std::move(H)), cfg);
}

namespace {

RealMatrix random_matrix(Rng& rng, Index rows, Index cols, double amp = 1.0) {
    RealMatrix M(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) M(i, j) = rng.uniform(-amp, amp);
    return M;
}

RealMatrix random_e_matrix(Rng& rng, Index n, double singular_prob) {
    if (n == 0) return RealMatrix(0, 0);
    if (rng.uniform() < singular_prob) {
        const Index r = rng.uniform_int(0, n - 1);
        return random_matrix(rng, n, r) * random_matrix(rng, r, n);
    }
    return random_matrix(rng, n, n);
}

SubsystemNumeric random_subsystem_numeric(Rng& rng, const RandomModelSpec& spec) {
    SubsystemNumeric s;
    s.m_x = rng.uniform_int(spec.m_x.lo, spec.m_x.hi);
    s.m_v = rng.uniform_int(spec.m_v.lo, spec.m_v.hi);
    s.m_z = rng.uniform_int(spec.m_z.lo, spec.m_z.hi);
    s.m_u = rng.uniform_int(spec.m_u.lo, spec.m_u.hi);
    s.m_y = rng.uniform_int(spec.m_y.lo, spec.m_y.hi);
    s.E = random_e_matrix(rng, s.m_x, spec.singular_e_prob);
    s.A_xx = random_matrix(rng, s.m_x, s.m_x);
    s.A_xv = random_matrix(rng, s.m_x, s.m_v);
    s.B_x = random_matrix(rng, s.m_x, s.m_u);
    s.A_zx = random_matrix(rng, s.m_z, s.m_x);
    s.A_zv = random_matrix(rng, s.m_z, s.m_v);
    s.B_z = random_matrix(rng, s.m_z, s.m_u);
    s.C_x = random_matrix(rng, s.m_y, s.m_x);
    s.C_v = random_matrix(rng, s.m_y, s.m_v);
    s.D_u = random_matrix(rng, s.m_y, s.m_u);
    return s;
}

SubsystemLft random_subsystem_lft(Rng& rng, const RandomModelSpec& spec,
                                  const ToleranceConfig& cfg) {
    for (int attempt = 0; attempt < 50; ++attempt) {
        SubsystemLft s;
        s.m_x = rng.uniform_int(spec.m_x.lo, spec.m_x.hi);
        s.m_v = rng.uniform_int(spec.m_v.lo, spec.m_v.hi);
        s.m_z = rng.uniform_int(spec.m_z.lo, spec.m_z.hi);
        s.m_u = rng.uniform_int(spec.m_u.lo, spec.m_u.hi);
        s.m_y = rng.uniform_int(spec.m_y.lo, spec.m_y.hi);
        const Index q1 = rng.uniform_int(spec.lft_q.lo, spec.lft_q.hi);
        const Index r1 = rng.uniform_int(spec.lft_q.lo, spec.lft_q.hi);
        const Index q2 = rng.uniform_int(spec.lft_q.lo, spec.lft_q.hi);
        const Index r2 = rng.uniform_int(spec.lft_q.lo, spec.lft_q.hi);
        s.E0 = random_e_matrix(rng, s.m_x, spec.singular_e_prob);
        s.A_xx0 = random_matrix(rng, s.m_x, s.m_x);
        s.A_xv0 = random_matrix(rng, s.m_x, s.m_v);
        s.A_zx0 = random_matrix(rng, s.m_z, s.m_x);
        s.A_zv0 = random_matrix(rng, s.m_z, s.m_v);
        s.C_x0 = random_matrix(rng, s.m_y, s.m_x);
        s.C_v0 = random_matrix(rng, s.m_y, s.m_v);
        s.F1 = random_matrix(rng, s.m_x, q1);
        s.F2 = random_matrix(rng, s.m_x, q1);
        s.F3 = random_matrix(rng, s.m_y, q1);
        s.F4 = random_matrix(rng, s.m_z, q1);
        s.M = random_matrix(rng, q1, q1) + 2.0 * RealMatrix::Identity(q1, q1);
        s.P1 = random_matrix(rng, q1, r1, 0.7);
        s.H = random_matrix(rng, r1, q1, 0.7);
        s.G = random_matrix(rng, r1, s.m_x);
        s.J1 = random_matrix(rng, s.m_x, q2);
        s.J2 = random_matrix(rng, s.m_y, q2);
        s.J3 = random_matrix(rng, s.m_z, q2);
        s.N = random_matrix(rng, q2, q2) + 2.0 * RealMatrix::Identity(q2, q2);
        s.P2 = random_matrix(rng, q2, r2, 0.7);
        s.S = random_matrix(rng, r2, q2, 0.7);
        s.K = random_matrix(rng, r2, s.m_v);
        s.B_x = random_matrix(rng, s.m_x, s.m_u);
        s.B_z = random_matrix(rng, s.m_z, s.m_u);
        s.D_u = random_matrix(rng, s.m_y, s.m_u);
        try {
            (void)evaluate_lft(s, cfg);
            return s;
        } catch (const LftIllPosedError&) {
            continue;
        }
    }
    throw GenerationExhaustedError("could not draw a well-posed LFT subsystem in 50 attempts");
}

}  // namespace

NdsModel random_model(const RandomModelSpec& spec) {
    const ToleranceConfig cfg;
    Rng rng(spec.seed ^ 0xa02bdbf7bb3c0a7ULL);
    for (int attempt = 0; attempt < 100; ++attempt) {
        NdsModel model;
        model.mode = spec.mode;
        const Index n = rng.uniform_int(spec.n_subsystems.lo, spec.n_subsystems.hi);
        for (Index i = 0; i < n; ++i) {
            if (spec.mode == ModelMode::numeric)
                model.numeric.push_back(random_subsystem_numeric(rng, spec));
            else
                model.lft.push_back(random_subsystem_lft(rng, spec, cfg));
        }
        model.scm.rows = model.total_v();
        model.scm.cols = model.total_z();
        for (Index r = 0; r < model.scm.rows; ++r)
            for (Index c = 0; c < model.scm.cols; ++c)
                if (rng.uniform() < spec.scm_density)
                    model.scm.entries.push_back({r, c, rng.uniform(-1.0, 1.0)});
        if (!validate_issues(model).empty()) continue;
        if (!check_wellposed(model, cfg).wellposed) continue;
        return model;
    }
    std::ostringstream os;
    os << "no well-posed model found for seed " << spec.seed << " after 100 attempts";
    throw GenerationExhaustedError(os.str());
}

}  // namespace ndsa
