#include "analysis.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ndsa {

namespace {

Matrix cplx(const RealMatrix& M) { return M.cast<Complex>(); }

double inf_norm(const RealMatrix& M) {
    if (M.rows() == 0 || M.cols() == 0) return 0.0;
    return M.cwiseAbs().rowwise().sum().maxCoeff();
}

// Smallest right singular vector; the failure witness of a rank-deficient
// column test.
Vector smallest_singular_vector(const Matrix& M) {
    Eigen::JacobiSVD<Matrix> svd(M, Eigen::ComputeFullV);
    return svd.matrixV().col(M.cols() - 1);
}

std::optional<Vector> fcr_witness(const Matrix& M, const ToleranceConfig& cfg) {
    if (M.cols() == 0) return std::nullopt;
    if (M.rows() == 0) {
        Vector w = Vector::Zero(M.cols());
        w(0) = 1.0;
        return w;
    }
    if (rank_of(M, cfg) == M.cols()) return std::nullopt;
    return smallest_singular_vector(M);
}

bool complex_less(const Complex& a, const Complex& b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
}

std::vector<Complex> merge_points(std::vector<Complex> pts, const ToleranceConfig& cfg) {
    std::sort(pts.begin(), pts.end(), complex_less);
    std::vector<Complex> out;
    for (const Complex& p : pts) {
        bool dup = false;
        for (const Complex& q : out) {
            if (std::abs(p - q) <= cfg.rel_rank_tol * (1.0 + std::max(std::abs(p), std::abs(q)))) {
                dup = true;
                break;
            }
        }
        if (!dup) out.push_back(p);
    }
    return out;
}

AnalysisReport not_wellposed_report(const std::string& name, const WellPosedness& wp) {
    AnalysisReport rep;
    rep.check_name = name;
    rep.verdict = Verdict::not_wellposed;
    rep.notes = wp.detail;
    return rep;
}

struct LftStacks {
    RealMatrix E0, A_xx0, A_xv0, A_zx0, A_zv0, C_x0, C_v0;
    RealMatrix F1, F2, F3, F4, J1, J2, J3;
    RealMatrix G, H, M, N, K, S, P1, P2;
};

LftStacks assemble_lft(const NdsModel& model) {
    if (model.mode != ModelMode::lft) throw UnsupportedError("LFT stacks need an LFT model");
    std::vector<RealMatrix> e0, axx, axv, azx, azv, cx, cv, f1, f2, f3, f4, j1, j2, j3, g, h, m, n,
        k, s, p1, p2;
    for (const SubsystemLft& sub : model.lft) {
        e0.push_back(sub.E0);
        axx.push_back(sub.A_xx0);
        axv.push_back(sub.A_xv0);
        azx.push_back(sub.A_zx0);
        azv.push_back(sub.A_zv0);
        cx.push_back(sub.C_x0);
        cv.push_back(sub.C_v0);
        f1.push_back(sub.F1);
        f2.push_back(sub.F2);
        f3.push_back(sub.F3);
        f4.push_back(sub.F4);
        j1.push_back(sub.J1);
        j2.push_back(sub.J2);
        j3.push_back(sub.J3);
        g.push_back(sub.G);
        h.push_back(sub.H);
        m.push_back(sub.M);
        n.push_back(sub.N);
        k.push_back(sub.K);
        s.push_back(sub.S);
        p1.push_back(sub.P1);
        p2.push_back(sub.P2);
    }
    LftStacks st;
    st.E0 = block_diag_real(e0);
    st.A_xx0 = block_diag_real(axx);
    st.A_xv0 = block_diag_real(axv);
    st.A_zx0 = block_diag_real(azx);
    st.A_zv0 = block_diag_real(azv);
    st.C_x0 = block_diag_real(cx);
    st.C_v0 = block_diag_real(cv);
    st.F1 = block_diag_real(f1);
    st.F2 = block_diag_real(f2);
    st.F3 = block_diag_real(f3);
    st.F4 = block_diag_real(f4);
    st.J1 = block_diag_real(j1);
    st.J2 = block_diag_real(j2);
    st.J3 = block_diag_real(j3);
    st.G = block_diag_real(g);
    st.H = block_diag_real(h);
    st.M = block_diag_real(m);
    st.N = block_diag_real(n);
    st.K = block_diag_real(k);
    st.S = block_diag_real(s);
    st.P1 = block_diag_real(p1);
    st.P2 = block_diag_real(p2);
    return st;
}

}  // namespace

const char* verdict_name(Verdict v) {
    switch (v) {
        case Verdict::pass: return "pass";
        case Verdict::fail: return "fail";
        case Verdict::not_wellposed: return "not_wellposed";
        case Verdict::inconclusive: return "inconclusive";
    }
    return "unknown";
}

const char* method_name(Method m) {
    return m == Method::scalable ? "scalable" : "fallback_dense";
}

double sample_radius(const NdsModel& model) {
    double worst = 0.0;
    if (model.mode == ModelMode::numeric) {
        for (const SubsystemNumeric& s : model.numeric) {
            for (const RealMatrix* M :
                 {&s.E, &s.A_xx, &s.A_xv, &s.B_x, &s.A_zx, &s.A_zv, &s.B_z, &s.C_x, &s.C_v, &s.D_u})
                worst = std::max(worst, inf_norm(*M));
        }
    } else {
        for (const SubsystemLft& s : model.lft) {
            for (const RealMatrix* M :
                 {&s.E0, &s.A_xx0, &s.A_xv0, &s.A_zx0, &s.A_zv0, &s.C_x0, &s.C_v0, &s.F1, &s.F2,
                  &s.F3, &s.F4, &s.G, &s.H, &s.M, &s.P1, &s.J1, &s.J2, &s.J3, &s.K, &s.S, &s.N,
                  &s.P2, &s.B_x, &s.B_z, &s.D_u})
                worst = std::max(worst, inf_norm(*M));
        }
    }
    worst = std::max(worst, inf_norm(model.scm.dense()));
    return 1.0 + worst;
}

double sample_radius_subsystem(const SubsystemLft& s) {
    double worst = 0.0;
    for (const RealMatrix* M :
         {&s.E0, &s.A_xx0, &s.A_xv0, &s.A_zx0, &s.A_zv0, &s.C_x0, &s.C_v0, &s.F1, &s.F2, &s.F3,
          &s.F4, &s.G, &s.H, &s.M, &s.P1, &s.J1, &s.J2, &s.J3, &s.K, &s.S, &s.N, &s.P2, &s.B_x,
          &s.B_z, &s.D_u})
        worst = std::max(worst, inf_norm(*M));
    return 1.0 + worst;
}

std::vector<Complex> sample_points(const NdsModel& model, Index count, const SampleConfig& samp) {
    return ring_points(sample_radius(model), count, samp);
}

void normalize_witness(Vector& w) {
    const double nrm = w.norm();
    if (nrm == 0.0) return;
    w /= nrm;
    const double big = w.cwiseAbs().maxCoeff();
    for (Index i = 0; i < w.size(); ++i) {
        if (std::abs(w(i)) > 1e-12 * big) {
            const Complex phase = w(i) / std::abs(w(i));
            w *= std::conj(phase);
            break;
        }
    }
}

namespace {

struct ObsPencil {
    Matrix N_x, N_v;
    Pencil pencil;
};

ObsPencil obs_pencil(const SubsystemNumeric& sub, const ToleranceConfig& cfg) {
    ObsPencil op;
    const Matrix CC = hstack(cplx(sub.C_x), cplx(sub.C_v));
    const Matrix nfull = null_basis(CC, cfg);
    op.N_x = nfull.topRows(sub.m_x);
    op.N_v = nfull.bottomRows(sub.m_v);
    op.pencil = Pencil(cplx(sub.E) * op.N_x,
                       -(cplx(sub.A_xx) * op.N_x + cplx(sub.A_xv) * op.N_v));
    return op;
}

}  // namespace

SubsystemObsStructure subsystem_obs_structure(const SubsystemNumeric& sub, const ToleranceConfig& cfg) {
    SubsystemObsStructure st;
    ObsPencil op = obs_pencil(sub, cfg);
    st.N_x = std::move(op.N_x);
    st.N_v = std::move(op.N_v);
    st.ks = compute_kcf(op.pencil, cfg);
    st.lambda_set = singular_points(st.ks, cfg);
    st.v_inv_lead = v_inverse_leading_cols(st.ks);
    return st;
}

Matrix build_theta(const NdsModel& model, Complex lambda0, const ToleranceConfig& cfg) {
    const BlockStacks st = assemble(model, cfg);
    const RealMatrix phi = model.scm.dense();
    const Index mx = st.E.rows();
    const Index mv = phi.rows();
    Matrix out(mx + mv, mx + mv);
    out.topLeftCorner(mx, mx) = lambda0 * cplx(st.E) - cplx(st.A_xx);
    out.topRightCorner(mx, mv) = -cplx(st.A_xv);
    out.bottomLeftCorner(mv, mx) = -cplx(phi * st.A_zx);
    out.bottomRightCorner(mv, mv) = Matrix::Identity(mv, mv) - cplx(phi * st.A_zv);
    return out;
}

Pencil build_xi_o_pencil(const NdsModel& model, const ToleranceConfig& cfg) {
    const BlockStacks st = assemble(model, cfg);
    const RealMatrix phi = model.scm.dense();
    const Index mx = st.E.rows();
    const Index my = st.C_x.rows();
    const Index mv = phi.rows();
    Matrix G = Matrix::Zero(mx + my + mv, mx + mv);
    Matrix H = Matrix::Zero(mx + my + mv, mx + mv);
    G.topLeftCorner(mx, mx) = cplx(st.E);
    H.topLeftCorner(mx, mx) = -cplx(st.A_xx);
    H.block(0, mx, mx, mv) = -cplx(st.A_xv);
    H.block(mx, 0, my, mx) = -cplx(st.C_x);
    H.block(mx, mx, my, mv) = -cplx(st.C_v);
    H.block(mx + my, 0, mv, mx) = -cplx(phi * st.A_zx);
    H.block(mx + my, mx, mv, mv) = Matrix::Identity(mv, mv) - cplx(phi * st.A_zv);
    return Pencil(std::move(G), std::move(H));
}

Matrix build_xi_o(const NdsModel& model, Complex lambda0, const ToleranceConfig& cfg) {
    return build_xi_o_pencil(model, cfg).at(lambda0);
}

Matrix build_xi_inf_o(const NdsModel& model, const ToleranceConfig& cfg) {
    const BlockStacks st = assemble(model, cfg);
    const RealMatrix phi = model.scm.dense();
    const Index mx = st.E.rows();
    const Index my = st.C_x.rows();
    const Index mv = phi.rows();
    Matrix out = Matrix::Zero(mx + my + mv, mx + mv);
    out.topLeftCorner(mx, mx) = cplx(st.E);
    out.block(mx, 0, my, mx) = -cplx(st.C_x);
    out.block(mx, mx, my, mv) = -cplx(st.C_v);
    out.block(mx + my, 0, mv, mx) = -cplx(phi * st.A_zx);
    out.block(mx + my, mx, mv, mv) = Matrix::Identity(mv, mv) - cplx(phi * st.A_zv);
    return out;
}

Matrix build_xi_c(const NdsModel& model, Complex lambda0, const ToleranceConfig& cfg) {
    const BlockStacks st = assemble(model, cfg);
    const RealMatrix phi = model.scm.dense();
    const Index mx = st.E.rows();
    const Index mu = st.B_x.cols();
    const Index mz = phi.cols();
    Matrix out(mx + mz, mx + mu + mz);
    out.block(0, 0, mx, mx) = lambda0 * cplx(st.E) - cplx(st.A_xx);
    out.block(0, mx, mx, mu) = -cplx(st.B_x);
    out.block(0, mx + mu, mx, mz) = -cplx(st.A_xv * phi);
    out.block(mx, 0, mz, mx) = -cplx(st.A_zx);
    out.block(mx, mx, mz, mu) = -cplx(st.B_z);
    out.block(mx, mx + mu, mz, mz) = Matrix::Identity(mz, mz) - cplx(st.A_zv * phi);
    return out;
}

Matrix build_xi_inf_c(const NdsModel& model, const ToleranceConfig& cfg) {
    const BlockStacks st = assemble(model, cfg);
    const RealMatrix phi = model.scm.dense();
    const Index mx = st.E.rows();
    const Index mu = st.B_x.cols();
    const Index mz = phi.cols();
    Matrix out = Matrix::Zero(mx + mz, mx + mu + mz);
    out.block(0, 0, mx, mx) = cplx(st.E);
    out.block(0, mx, mx, mu) = -cplx(st.B_x);
    out.block(0, mx + mu, mx, mz) = -cplx(st.A_xv * phi);
    out.block(mx, mx, mz, mu) = -cplx(st.B_z);
    out.block(mx, mx + mu, mz, mz) = Matrix::Identity(mz, mz) - cplx(st.A_zv * phi);
    return out;
}

ParamPencils build_param_pencils(const NdsModel& model) {
    const LftStacks st = assemble_lft(model);
    const RealMatrix phi = model.scm.dense();
    const Index mx = st.E0.rows();
    const Index my = st.C_x0.rows();
    const Index q1 = st.M.rows();
    const Index q2 = st.N.rows();
    const Index mv = phi.rows();
    const Index rows = mx + my + q1 + q2 + mv;
    const Index cols = mx + q1 + mv + q2;
    Matrix G = Matrix::Zero(rows, cols);
    Matrix H = Matrix::Zero(rows, cols);
    Index r0 = 0;
    G.block(r0, 0, mx, mx) = cplx(st.E0);
    G.block(r0, mx, mx, q1) = cplx(st.F1);
    H.block(r0, 0, mx, mx) = -cplx(st.A_xx0);
    H.block(r0, mx, mx, q1) = -cplx(st.F2);
    H.block(r0, mx + q1, mx, mv) = -cplx(st.A_xv0);
    H.block(r0, mx + q1 + mv, mx, q2) = -cplx(st.J1);
    r0 += mx;
    H.block(r0, 0, my, mx) = -cplx(st.C_x0);
    H.block(r0, mx, my, q1) = -cplx(st.F3);
    H.block(r0, mx + q1, my, mv) = -cplx(st.C_v0);
    H.block(r0, mx + q1 + mv, my, q2) = -cplx(st.J2);
    r0 += my;
    H.block(r0, 0, q1, mx) = -cplx(st.P1 * st.G);
    H.block(r0, mx, q1, q1) = cplx(st.M - st.P1 * st.H);
    r0 += q1;
    H.block(r0, mx + q1, q2, mv) = -cplx(st.P2 * st.K);
    H.block(r0, mx + q1 + mv, q2, q2) = cplx(st.N - st.P2 * st.S);
    r0 += q2;
    H.block(r0, 0, mv, mx) = -cplx(phi * st.A_zx0);
    H.block(r0, mx, mv, q1) = -cplx(phi * st.F4);
    H.block(r0, mx + q1, mv, mv) = Matrix::Identity(mv, mv) - cplx(phi * st.A_zv0);
    H.block(r0, mx + q1 + mv, mv, q2) = -cplx(phi * st.J3);

    ParamPencils out;
    out.xi_p = Pencil(std::move(G), std::move(H));
    // The infinity matrix shares every row group except the dynamics row,
    // whose lambda part appears as a constant.
    Matrix inf = out.xi_p.H;
    inf.block(0, 0, mx, mx) = cplx(st.E0);
    inf.block(0, mx, mx, q1) = cplx(st.F1);
    inf.block(0, mx + q1, mx, mv).setZero();
    inf.block(0, mx + q1 + mv, mx, q2).setZero();
    out.xi_inf_p = std::move(inf);
    return out;
}

Matrix build_theta_p(const NdsModel& model, Complex lambda0) {
    const ParamPencils pp = build_param_pencils(model);
    const Index my = model.total_y();
    const Index mx = model.total_x();
    const Matrix full = pp.xi_p.at(lambda0);
    Matrix out(full.rows() - my, full.cols());
    out.topRows(mx) = full.topRows(mx);
    out.bottomRows(full.rows() - my - mx) = full.bottomRows(full.rows() - my - mx);
    return out;
}

namespace {

AnalysisReport regularity_impl(const NdsModel& model, const ToleranceConfig& cfg,
                               const SampleConfig& samp) {
    AnalysisReport rep;
    rep.check_name = "regularity";
    const WellPosedness wp = check_wellposed(model, cfg);
    if (!wp.wellposed) return not_wellposed_report(rep.check_name, wp);
    const bool param = model.mode == ModelMode::lft;
    const std::vector<Complex> pts = sample_points(model, model.total_x() + 1, samp);
    rep.method = Method::scalable;
    for (const Complex& l : pts) {
        rep.checked_points.push_back(l);
        const Matrix Th = param ? build_theta_p(model, l) : build_theta(model, l, cfg);
        if (rank_of(Th, cfg) == Th.cols()) {
            rep.verdict = Verdict::pass;
            std::ostringstream os;
            os << "Theta" << (param ? "_p" : "") << " invertible at sample point " << l;
            rep.notes = os.str();
            return rep;
        }
    }
    rep.verdict = Verdict::fail;
    for (const Complex& l : pts) {
        const Matrix Th = param ? build_theta_p(model, l) : build_theta(model, l, cfg);
        Certificate cert;
        cert.lambda = l;
        cert.matrix = param ? "Theta_p" : "Theta";
        cert.witness = smallest_singular_vector(Th);
        normalize_witness(cert.witness);
        rep.certificates.push_back(std::move(cert));
    }
    rep.notes = "Theta rank deficient at every sample point; det(lambda E - A) vanishes identically";
    return rep;
}

}  // namespace

AnalysisReport check_regularity(const NdsModel& model, const ToleranceConfig& cfg,
                                const SampleConfig& samp) {
    return regularity_impl(model, cfg, samp);
}

AnalysisReport check_observability_finite(const NdsModel& model, const ToleranceConfig& cfg,
                                          const AnalysisOptions& opt) {
    AnalysisReport rep;
    rep.check_name = "observability_finite";
    const WellPosedness wp = check_wellposed(model, cfg);
    if (!wp.wellposed) return not_wellposed_report(rep.check_name, wp);
    const NdsModel num = to_numeric(model, cfg);

    // L blocks (whole-plane Lambda) are detectable from the normal rank
    // alone; the full canonical structure is only needed on the scalable
    // path.
    bool whole_plane = false;
    std::vector<ObsPencil> pencils;
    pencils.reserve(num.numeric.size());
    for (const SubsystemNumeric& s : num.numeric) {
        pencils.push_back(obs_pencil(s, cfg));
        whole_plane = whole_plane ||
                      pencil_normal_rank(pencils.back().pencil, cfg) < pencils.back().pencil.cols();
    }

    if (whole_plane) {
        rep.method = Method::fallback_dense;
        if (!opt.allow_dense_fallback) {
            rep.verdict = Verdict::inconclusive;
            rep.notes =
                "some subsystem has L blocks (Lambda is the whole plane) and the dense "
                "fallback is forbidden";
            return rep;
        }
        const Pencil xi = build_xi_o_pencil(num, cfg);
        const PencilFcrEverywhere res = pencil_fcr_everywhere(xi, cfg);
        if (res.fcr) {
            rep.verdict = Verdict::pass;
            rep.notes = "dense KCF of Xi_o has only N and J blocks (FCR at every lambda)";
        } else {
            rep.verdict = Verdict::fail;
            Certificate cert;
            cert.lambda = *res.drop_point;
            cert.matrix = "Xi_o";
            cert.witness = smallest_singular_vector(xi.at(*res.drop_point));
            normalize_witness(cert.witness);
            rep.certificates.push_back(std::move(cert));
            rep.notes = "dense KCF of Xi_o loses column rank";
        }
        return rep;
    }

    std::vector<SubsystemObsStructure> st;
    st.reserve(num.numeric.size());
    for (const SubsystemNumeric& s : num.numeric) st.push_back(subsystem_obs_structure(s, cfg));

    std::vector<Complex> all;
    for (const SubsystemObsStructure& s : st)
        all.insert(all.end(), s.lambda_set.points.begin(), s.lambda_set.points.end());
    const std::vector<Complex> lambda_set = merge_points(std::move(all), cfg);
    rep.method = Method::scalable;
    rep.checked_points = lambda_set;

    const Matrix phi = cplx(model.scm.dense());
    for (const Complex& l0 : lambda_set) {
        std::vector<Matrix> xblocks, yblocks, nbar;
        for (std::size_t i = 0; i < st.size(); ++i) {
            const SubsystemNumeric& s = num.numeric[i];
            const Matrix nb = st[i].v_inv_lead * reduced_null_basis(st[i].ks, l0, cfg);
            nbar.push_back(nb);
            xblocks.push_back(st[i].N_v * nb);
            yblocks.push_back((cplx(s.A_zx) * st[i].N_x + cplx(s.A_zv) * st[i].N_v) * nb);
        }
        const Matrix X = block_diag(xblocks);
        const Matrix Y = block_diag(yblocks);
        const Matrix red = X - phi * Y;
        const std::optional<Vector> w = fcr_witness(red, cfg);
        if (!w) continue;
        // Lift the reduced witness back to a null vector of Xi_o(l0).
        Vector ax = Vector::Zero(num.total_x());
        Vector av = Vector::Zero(num.total_v());
        Index col = 0, xoff = 0, voff = 0;
        for (std::size_t i = 0; i < st.size(); ++i) {
            const Index cols_i = nbar[i].cols();
            const Vector beta = nbar[i] * w->segment(col, cols_i);
            ax.segment(xoff, num.numeric[i].m_x) = st[i].N_x * beta;
            av.segment(voff, num.numeric[i].m_v) = st[i].N_v * beta;
            col += cols_i;
            xoff += num.numeric[i].m_x;
            voff += num.numeric[i].m_v;
        }
        Certificate cert;
        cert.lambda = l0;
        cert.matrix = "Xi_o";
        cert.witness = Vector(ax.size() + av.size());
        cert.witness.head(ax.size()) = ax;
        cert.witness.tail(av.size()) = av;
        normalize_witness(cert.witness);
        rep.certificates.push_back(std::move(cert));
    }
    rep.verdict = rep.certificates.empty() ? Verdict::pass : Verdict::fail;
    if (lambda_set.empty()) rep.notes = "Lambda is empty; condition holds vacuously";
    return rep;
}

AnalysisReport check_observability_infinity(const NdsModel& model, const ToleranceConfig& cfg) {
    AnalysisReport rep;
    rep.check_name = "observability_infinity";
    const WellPosedness wp = check_wellposed(model, cfg);
    if (!wp.wellposed) return not_wellposed_report(rep.check_name, wp);
    const NdsModel num = to_numeric(model, cfg);

    std::vector<Matrix> wx, wv;
    for (const SubsystemNumeric& s : num.numeric) {
        Matrix M1 = Matrix::Zero(s.m_x, s.m_x + s.m_v);
        M1.leftCols(s.m_x) = cplx(s.E);
        const Matrix M2 = -hstack(cplx(s.C_x), cplx(s.C_v));
        const Matrix W = null_via_composition(M1, M2, cfg);
        wx.push_back(W.topRows(s.m_x));
        wv.push_back(W.bottomRows(s.m_v));
    }
    const Matrix Wx = block_diag(wx);
    const Matrix Wv = block_diag(wv);
    const Matrix phi = cplx(model.scm.dense());
    const BlockStacks stk = assemble(num, cfg);
    const Matrix red = Wv - phi * (cplx(stk.A_zx) * Wx + cplx(stk.A_zv) * Wv);
    const std::optional<Vector> w = fcr_witness(red, cfg);
    if (!w) {
        rep.verdict = Verdict::pass;
        if (red.cols() == 0) rep.notes = "stacked null space is empty; condition holds vacuously";
        return rep;
    }
    rep.verdict = Verdict::fail;
    Certificate cert;
    cert.matrix = "Xi_inf_o";
    cert.witness = Vector(Wx.rows() + Wv.rows());
    cert.witness.head(Wx.rows()) = Wx * *w;
    cert.witness.tail(Wv.rows()) = Wv * *w;
    normalize_witness(cert.witness);
    rep.certificates.push_back(std::move(cert));
    return rep;
}

namespace {

AnalysisReport conjunction(const std::string& name, AnalysisReport fin, AnalysisReport inf) {
    AnalysisReport rep;
    rep.check_name = name;
    rep.method = fin.method;
    std::ostringstream os;
    os << "finite: " << verdict_name(fin.verdict) << "; infinity: " << verdict_name(inf.verdict);
    if (!fin.notes.empty()) os << "; " << fin.notes;
    if (!inf.notes.empty()) os << "; " << inf.notes;
    rep.notes = os.str();
    rep.checked_points = fin.checked_points;
    rep.certificates = std::move(fin.certificates);
    for (Certificate& c : inf.certificates) rep.certificates.push_back(std::move(c));
    if (fin.verdict == Verdict::not_wellposed || inf.verdict == Verdict::not_wellposed) {
        rep.verdict = Verdict::not_wellposed;
    } else if (fin.verdict == Verdict::fail || inf.verdict == Verdict::fail) {
        rep.verdict = Verdict::fail;
    } else if (fin.verdict == Verdict::inconclusive || inf.verdict == Verdict::inconclusive) {
        rep.verdict = Verdict::inconclusive;
    } else {
        rep.verdict = Verdict::pass;
    }
    return rep;
}

}  // namespace

AnalysisReport check_observability(const NdsModel& model, const ToleranceConfig& cfg,
                                   const AnalysisOptions& opt) {
    if (model.mode == ModelMode::lft) return check_observability_param(model, cfg, opt);
    AnalysisReport fin = check_observability_finite(model, cfg, opt);
    AnalysisReport inf = check_observability_infinity(model, cfg);
    return conjunction("observability", std::move(fin), std::move(inf));
}

AnalysisReport check_controllability(const NdsModel& model, const ToleranceConfig& cfg,
                                     const AnalysisOptions& opt) {
    if (model.mode == ModelMode::lft) {
        AnalysisReport rep;
        rep.check_name = "controllability";
        rep.verdict = Verdict::inconclusive;
        rep.notes =
            "not supported: parameterized controllability has no B-side LFT factorization; "
            "evaluate the LFT and run the numeric check instead";
        return rep;
    }
    const NdsModel dual = dualize(model);
    AnalysisReport fin = check_observability_finite(dual, cfg, opt);
    AnalysisReport inf = check_observability_infinity(dual, cfg);
    AnalysisReport rep = conjunction("controllability", std::move(fin), std::move(inf));
    for (Certificate& c : rep.certificates) {
        if (c.matrix == "Xi_o") c.matrix = "Xi_c_transpose";
        if (c.matrix == "Xi_inf_o") c.matrix = "Xi_inf_c_transpose";
    }
    if (rep.verdict == Verdict::fail)
        rep.notes += "; FRR condition via duality, witnesses are left null vectors of Xi_c";
    return rep;
}

namespace {

// Null-space reduction of one LFT subsystem: basis of the kernel of the
// stacked output factors, and the KCF of the reduced base-matrix pencil.
struct ParamPencil {
    Matrix N_x, N_f, N_v, N_j;
    Pencil pencil;
};

struct SubsystemParamStructure {
    Matrix N_x, N_f, N_v, N_j;
    KroneckerStructure ks;
    SingularPointSet lambda_set;
    Matrix v_inv_lead;
};

ParamPencil param_pencil(const SubsystemLft& s, const ToleranceConfig& cfg) {
    ParamPencil op;
    const Index q1 = s.q1(), q2 = s.q2();
    Matrix CC(s.m_y, s.m_x + q1 + s.m_v + q2);
    CC << cplx(s.C_x0), cplx(s.F3), cplx(s.C_v0), cplx(s.J2);
    const Matrix full = null_basis(CC, cfg);
    Index off = 0;
    op.N_x = full.middleRows(off, s.m_x);
    off += s.m_x;
    op.N_f = full.middleRows(off, q1);
    off += q1;
    op.N_v = full.middleRows(off, s.m_v);
    off += s.m_v;
    op.N_j = full.middleRows(off, q2);
    op.pencil = Pencil(cplx(s.E0) * op.N_x + cplx(s.F1) * op.N_f,
                       -(cplx(s.A_xx0) * op.N_x + cplx(s.A_xv0) * op.N_v + cplx(s.F2) * op.N_f +
                         cplx(s.J1) * op.N_j));
    return op;
}

SubsystemParamStructure subsystem_param_structure(const SubsystemLft& s, const ToleranceConfig& cfg) {
    SubsystemParamStructure st;
    ParamPencil op = param_pencil(s, cfg);
    st.N_x = std::move(op.N_x);
    st.N_f = std::move(op.N_f);
    st.N_v = std::move(op.N_v);
    st.N_j = std::move(op.N_j);
    st.ks = compute_kcf(op.pencil, cfg);
    st.lambda_set = singular_points(st.ks, cfg);
    st.v_inv_lead = v_inverse_leading_cols(st.ks);
    return st;
}

// Parameter rows of the design screen for one subsystem at one point.
Matrix design_stack(const SubsystemLft& s, const SubsystemParamStructure& st, Complex l0,
                    const ToleranceConfig& cfg) {
    const Matrix nbar = st.v_inv_lead * reduced_null_basis(st.ks, l0, cfg);
    const Matrix x1 = cplx(s.M) * st.N_f * nbar;
    const Matrix y1 = (cplx(s.G) * st.N_x + cplx(s.H) * st.N_f) * nbar;
    const Matrix x2 = cplx(s.N) * st.N_j * nbar;
    const Matrix y2 = (cplx(s.K) * st.N_v + cplx(s.S) * st.N_j) * nbar;
    return vstack(x1 - cplx(s.P1) * y1, x2 - cplx(s.P2) * y2);
}

}  // namespace

AnalysisReport check_observability_param(const NdsModel& model, const ToleranceConfig& cfg,
                                         const AnalysisOptions& opt) {
    AnalysisReport rep;
    rep.check_name = "observability";
    if (model.mode != ModelMode::lft) throw UnsupportedError("parameterized check needs an LFT model");
    const WellPosedness wp = check_wellposed(model, cfg);
    if (!wp.wellposed) return not_wellposed_report(rep.check_name, wp);

    const ParamPencils pp = build_param_pencils(model);
    AnalysisReport fin;
    fin.check_name = "observability_finite";

    bool whole_plane = false;
    for (const SubsystemLft& s : model.lft) {
        const ParamPencil op = param_pencil(s, cfg);
        whole_plane = whole_plane || pencil_normal_rank(op.pencil, cfg) < op.pencil.cols();
    }

    if (whole_plane) {
        fin.method = Method::fallback_dense;
        if (!opt.allow_dense_fallback) {
            fin.verdict = Verdict::inconclusive;
            fin.notes =
                "some subsystem has L blocks in its reduced base pencil (Lambda0 is the whole "
                "plane) and the dense fallback is forbidden";
        } else {
            const PencilFcrEverywhere res = pencil_fcr_everywhere(pp.xi_p, cfg);
            if (res.fcr) {
                fin.verdict = Verdict::pass;
                fin.notes = "dense KCF of Xi_p_o has only N and J blocks";
            } else {
                fin.verdict = Verdict::fail;
                Certificate cert;
                cert.lambda = *res.drop_point;
                cert.matrix = "Xi_p_o";
                cert.witness = smallest_singular_vector(pp.xi_p.at(*res.drop_point));
                normalize_witness(cert.witness);
                fin.certificates.push_back(std::move(cert));
                fin.notes = "dense KCF of Xi_p_o loses column rank";
            }
        }
    } else {
        fin.method = Method::scalable;
        std::vector<SubsystemParamStructure> st;
        st.reserve(model.lft.size());
        for (const SubsystemLft& s : model.lft) st.push_back(subsystem_param_structure(s, cfg));
        std::vector<Complex> all;
        for (const SubsystemParamStructure& s : st)
            all.insert(all.end(), s.lambda_set.points.begin(), s.lambda_set.points.end());
        const std::vector<Complex> lambda_set = merge_points(std::move(all), cfg);
        fin.checked_points = lambda_set;
        const Matrix phi = cplx(model.scm.dense());
        const Matrix P1 = [&] {
            std::vector<Matrix> b;
            for (const SubsystemLft& s : model.lft) b.push_back(cplx(s.P1));
            return block_diag(b);
        }();
        const Matrix P2 = [&] {
            std::vector<Matrix> b;
            for (const SubsystemLft& s : model.lft) b.push_back(cplx(s.P2));
            return block_diag(b);
        }();
        for (const Complex& l0 : lambda_set) {
            std::vector<Matrix> x1b, y1b, x2b, y2b, x3b, y3b, nbar;
            for (std::size_t i = 0; i < st.size(); ++i) {
                const SubsystemLft& s = model.lft[i];
                const Matrix nb = st[i].v_inv_lead * reduced_null_basis(st[i].ks, l0, cfg);
                nbar.push_back(nb);
                x1b.push_back(cplx(s.M) * st[i].N_f * nb);
                y1b.push_back((cplx(s.G) * st[i].N_x + cplx(s.H) * st[i].N_f) * nb);
                x2b.push_back(cplx(s.N) * st[i].N_j * nb);
                y2b.push_back((cplx(s.K) * st[i].N_v + cplx(s.S) * st[i].N_j) * nb);
                x3b.push_back(st[i].N_v * nb);
                y3b.push_back((cplx(s.A_zx0) * st[i].N_x + cplx(s.A_zv0) * st[i].N_v +
                               cplx(s.F4) * st[i].N_f + cplx(s.J3) * st[i].N_j) *
                              nb);
            }
            const Matrix stack = vstack(
                vstack(block_diag(x1b) - P1 * block_diag(y1b), block_diag(x2b) - P2 * block_diag(y2b)),
                block_diag(x3b) - phi * block_diag(y3b));
            const std::optional<Vector> w = fcr_witness(stack, cfg);
            if (!w) continue;
            // Lift back to a null vector of Xi_p_o(l0), in its (x, f, v, j)
            // global column layout.
            Vector ax = Vector::Zero(model.total_x());
            Vector af = Vector::Zero(P1.rows());
            Vector av = Vector::Zero(model.total_v());
            Vector aj = Vector::Zero(P2.rows());
            Index col = 0, xo = 0, fo = 0, vo = 0, jo = 0;
            for (std::size_t i = 0; i < st.size(); ++i) {
                const SubsystemLft& s = model.lft[i];
                const Index cols_i = nbar[i].cols();
                const Vector beta = nbar[i] * w->segment(col, cols_i);
                ax.segment(xo, s.m_x) = st[i].N_x * beta;
                af.segment(fo, s.q1()) = st[i].N_f * beta;
                av.segment(vo, s.m_v) = st[i].N_v * beta;
                aj.segment(jo, s.q2()) = st[i].N_j * beta;
                col += cols_i;
                xo += s.m_x;
                fo += s.q1();
                vo += s.m_v;
                jo += s.q2();
            }
            Certificate cert;
            cert.lambda = l0;
            cert.matrix = "Xi_p_o";
            cert.witness = Vector(ax.size() + af.size() + av.size() + aj.size());
            cert.witness << ax, af, av, aj;
            normalize_witness(cert.witness);
            fin.certificates.push_back(std::move(cert));
        }
        fin.verdict = fin.certificates.empty() ? Verdict::pass : Verdict::fail;
        if (lambda_set.empty()) fin.notes = "Lambda0 is empty; condition holds vacuously";
    }

    // Infinity condition on the constant parameter-affine stack, reduced per subsystem through
    // the null space of its block-diagonal rows.
    AnalysisReport inf;
    inf.check_name = "observability_infinity";
    std::vector<Matrix> wxb, wfb, wvb, wjb;
    for (const SubsystemLft& s : model.lft) {
        const Index q1 = s.q1(), q2 = s.q2(), r1 = s.r1(), r2 = s.r2();
        const Index cols = s.m_x + q1 + s.m_v + q2;
        Matrix top = Matrix::Zero(s.m_x + s.m_y + q1 + q2, cols);
        Index r0 = 0;
        top.block(r0, 0, s.m_x, s.m_x) = cplx(s.E0);
        top.block(r0, s.m_x, s.m_x, q1) = cplx(s.F1);
        r0 += s.m_x;
        top.block(r0, 0, s.m_y, s.m_x) = -cplx(s.C_x0);
        top.block(r0, s.m_x, s.m_y, q1) = -cplx(s.F3);
        top.block(r0, s.m_x + q1, s.m_y, s.m_v) = -cplx(s.C_v0);
        top.block(r0, s.m_x + q1 + s.m_v, s.m_y, q2) = -cplx(s.J2);
        r0 += s.m_y;
        top.block(r0, 0, q1, s.m_x) = -cplx(RealMatrix(s.P1 * s.G));
        top.block(r0, s.m_x, q1, q1) = cplx(RealMatrix(s.M - s.P1 * s.H));
        r0 += q1;
        top.block(r0, s.m_x + q1, q2, s.m_v) = -cplx(RealMatrix(s.P2 * s.K));
        top.block(r0, s.m_x + q1 + s.m_v, q2, q2) = cplx(RealMatrix(s.N - s.P2 * s.S));
        (void)r1;
        (void)r2;
        const Matrix W = null_basis(top, cfg);
        Index off = 0;
        wxb.push_back(W.middleRows(off, s.m_x));
        off += s.m_x;
        wfb.push_back(W.middleRows(off, q1));
        off += q1;
        wvb.push_back(W.middleRows(off, s.m_v));
        off += s.m_v;
        wjb.push_back(W.middleRows(off, q2));
    }
    const Matrix Wx = block_diag(wxb);
    const Matrix Wf = block_diag(wfb);
    const Matrix Wv = block_diag(wvb);
    const Matrix Wj = block_diag(wjb);
    const LftStacks stk = assemble_lft(model);
    const Matrix phi = cplx(model.scm.dense());
    const Matrix red = Wv - phi * (cplx(stk.A_zx0) * Wx + cplx(stk.F4) * Wf +
                                   cplx(stk.A_zv0) * Wv + cplx(stk.J3) * Wj);
    const std::optional<Vector> w = fcr_witness(red, cfg);
    if (!w) {
        inf.verdict = Verdict::pass;
    } else {
        inf.verdict = Verdict::fail;
        Certificate cert;
        cert.matrix = "Xi_inf_p";
        cert.witness = Vector(Wx.rows() + Wf.rows() + Wv.rows() + Wj.rows());
        cert.witness << Wx * *w, Wf * *w, Wv * *w, Wj * *w;
        normalize_witness(cert.witness);
        inf.certificates.push_back(std::move(cert));
    }
    return conjunction("observability", std::move(fin), std::move(inf));
}

AnalysisReport check_subsystem_design(const SubsystemLft& sub, const ToleranceConfig& cfg,
                                      const SampleConfig& samp) {
    AnalysisReport rep;
    rep.check_name = "subsystem_design";
    {
        const ParamPencil op = param_pencil(sub, cfg);
        if (pencil_normal_rank(op.pencil, cfg) == op.pencil.cols()) {
            rep.verdict = Verdict::pass;
            rep.notes = "condition 1: the reduced pencil has no L blocks (c0 = 0)";
            return rep;
        }
    }
    const SubsystemParamStructure st = subsystem_param_structure(sub, cfg);
    const double radius = sample_radius_subsystem(sub);
    const std::vector<Complex> pts = ring_points(radius, sub.m_x + sub.m_v + 1, samp);
    for (const Complex& l0 : pts) {
        rep.checked_points.push_back(l0);
        const Matrix D = design_stack(sub, st, l0, cfg);
        if (!fcr_witness(D, cfg)) {
            rep.verdict = Verdict::pass;
            std::ostringstream os;
            os << "condition 2: parameter stack is FCR at sample point " << l0;
            rep.notes = os.str();
            return rep;
        }
    }
    rep.verdict = Verdict::fail;
    for (const Complex& l0 : pts) {
        const Matrix D = design_stack(sub, st, l0, cfg);
        const std::optional<Vector> w = fcr_witness(D, cfg);
        if (!w) continue;
        Certificate cert;
        cert.lambda = l0;
        cert.matrix = "design_stack";
        cert.subsystem = 0;
        cert.witness = *w;
        normalize_witness(cert.witness);
        rep.certificates.push_back(std::move(cert));
    }
    rep.notes = "c0 > 0 and the parameter stack loses column rank at every sample point";
    return rep;
}

double certificate_residual(const NdsModel& model, const Certificate& cert,
                            const ToleranceConfig& cfg) {
    Matrix M;
    if (cert.matrix == "Theta") {
        M = build_theta(model, *cert.lambda, cfg);
    } else if (cert.matrix == "Theta_p") {
        M = build_theta_p(model, *cert.lambda);
    } else if (cert.matrix == "Xi_o") {
        M = build_xi_o(model, *cert.lambda, cfg);
    } else if (cert.matrix == "Xi_inf_o") {
        M = build_xi_inf_o(model, cfg);
    } else if (cert.matrix == "Xi_c_transpose") {
        M = build_xi_c(model, *cert.lambda, cfg).transpose();
    } else if (cert.matrix == "Xi_inf_c_transpose") {
        M = build_xi_inf_c(model, cfg).transpose();
    } else if (cert.matrix == "Xi_p_o") {
        M = build_param_pencils(model).xi_p.at(*cert.lambda);
    } else if (cert.matrix == "Xi_inf_p") {
        M = build_param_pencils(model).xi_inf_p;
    } else {
        throw UnsupportedError("unknown certificate matrix: " + cert.matrix);
    }
    // 1 + ||M||: the named matrix can vanish entirely at the failure point
    // (a fully singular 1x1 pencil evaluated at its eigenvalue), where any
    // unit witness is valid.
    return (M * cert.witness).norm() / (1.0 + M.norm());
}

double certificate_residual_subsystem(const SubsystemLft& sub, const Certificate& cert,
                                      const ToleranceConfig& cfg) {
    if (cert.matrix != "design_stack")
        throw UnsupportedError("unknown subsystem certificate matrix: " + cert.matrix);
    const SubsystemParamStructure st = subsystem_param_structure(sub, cfg);
    const Matrix D = design_stack(sub, st, *cert.lambda, cfg);
    return (D * cert.witness).norm() / (1.0 + D.norm());
}

}  // namespace ndsa
