#include "model.hpp"

#include <Eigen/SVD>

#include <limits>
#include <set>
#include <sstream>

namespace ndsa {

RealMatrix Scm::dense() const {
    RealMatrix M = RealMatrix::Zero(rows, cols);
    for (const ScmEntry& e : entries) M(e.row, e.col) = e.value;
    return M;
}

namespace {

template <typename SubT>
Index sum_dim(const std::vector<SubT>& subs, Index SubT::*dim) {
    Index t = 0;
    for (const SubT& s : subs) t += s.*dim;
    return t;
}

Index sum_model(const NdsModel& m, Index SubsystemNumeric::*dn, Index SubsystemLft::*dl) {
    return m.mode == ModelMode::numeric ? sum_dim(m.numeric, dn) : sum_dim(m.lft, dl);
}

void expect_shape(std::vector<ValidationIssue>& out, Index i, const char* field,
                  const RealMatrix& M, Index rows, Index cols) {
    if (M.rows() != rows || M.cols() != cols) {
        std::ostringstream os;
        os << "expected " << rows << "x" << cols << ", got " << M.rows() << "x" << M.cols();
        out.push_back({i, field, os.str()});
    }
}

}  // namespace

Index NdsModel::total_x() const { return sum_model(*this, &SubsystemNumeric::m_x, &SubsystemLft::m_x); }
Index NdsModel::total_v() const { return sum_model(*this, &SubsystemNumeric::m_v, &SubsystemLft::m_v); }
Index NdsModel::total_z() const { return sum_model(*this, &SubsystemNumeric::m_z, &SubsystemLft::m_z); }
Index NdsModel::total_u() const { return sum_model(*this, &SubsystemNumeric::m_u, &SubsystemLft::m_u); }
Index NdsModel::total_y() const { return sum_model(*this, &SubsystemNumeric::m_y, &SubsystemLft::m_y); }

std::vector<ValidationIssue> validate_issues(const NdsModel& model) {
    std::vector<ValidationIssue> out;
    if (!model.numeric.empty() && !model.lft.empty())
        out.push_back({-1, "subsystems", "model mixes numeric and LFT subsystems"});
    if (model.mode == ModelMode::numeric) {
        for (Index i = 0; i < static_cast<Index>(model.numeric.size()); ++i) {
            const SubsystemNumeric& s = model.numeric[i];
            expect_shape(out, i, "E", s.E, s.m_x, s.m_x);
            expect_shape(out, i, "A_xx", s.A_xx, s.m_x, s.m_x);
            expect_shape(out, i, "A_xv", s.A_xv, s.m_x, s.m_v);
            expect_shape(out, i, "B_x", s.B_x, s.m_x, s.m_u);
            expect_shape(out, i, "A_zx", s.A_zx, s.m_z, s.m_x);
            expect_shape(out, i, "A_zv", s.A_zv, s.m_z, s.m_v);
            expect_shape(out, i, "B_z", s.B_z, s.m_z, s.m_u);
            expect_shape(out, i, "C_x", s.C_x, s.m_y, s.m_x);
            expect_shape(out, i, "C_v", s.C_v, s.m_y, s.m_v);
            expect_shape(out, i, "D_u", s.D_u, s.m_y, s.m_u);
        }
    } else {
        for (Index i = 0; i < static_cast<Index>(model.lft.size()); ++i) {
            const SubsystemLft& s = model.lft[i];
            const Index q1 = s.q1(), r1 = s.r1(), q2 = s.q2(), r2 = s.r2();
            expect_shape(out, i, "E0", s.E0, s.m_x, s.m_x);
            expect_shape(out, i, "A_xx0", s.A_xx0, s.m_x, s.m_x);
            expect_shape(out, i, "A_xv0", s.A_xv0, s.m_x, s.m_v);
            expect_shape(out, i, "A_zx0", s.A_zx0, s.m_z, s.m_x);
            expect_shape(out, i, "A_zv0", s.A_zv0, s.m_z, s.m_v);
            expect_shape(out, i, "C_x0", s.C_x0, s.m_y, s.m_x);
            expect_shape(out, i, "C_v0", s.C_v0, s.m_y, s.m_v);
            expect_shape(out, i, "F1", s.F1, s.m_x, q1);
            expect_shape(out, i, "F2", s.F2, s.m_x, q1);
            expect_shape(out, i, "F3", s.F3, s.m_y, q1);
            expect_shape(out, i, "F4", s.F4, s.m_z, q1);
            expect_shape(out, i, "M", s.M, q1, q1);
            expect_shape(out, i, "P1", s.P1, q1, r1);
            expect_shape(out, i, "H", s.H, r1, q1);
            expect_shape(out, i, "G", s.G, r1, s.m_x);
            expect_shape(out, i, "J1", s.J1, s.m_x, q2);
            expect_shape(out, i, "J2", s.J2, s.m_y, q2);
            expect_shape(out, i, "J3", s.J3, s.m_z, q2);
            expect_shape(out, i, "N", s.N, q2, q2);
            expect_shape(out, i, "P2", s.P2, q2, r2);
            expect_shape(out, i, "S", s.S, r2, q2);
            expect_shape(out, i, "K", s.K, r2, s.m_v);
            expect_shape(out, i, "B_x", s.B_x, s.m_x, s.m_u);
            expect_shape(out, i, "B_z", s.B_z, s.m_z, s.m_u);
            expect_shape(out, i, "D_u", s.D_u, s.m_y, s.m_u);
        }
    }
    const Index mv = model.total_v();
    const Index mz = model.total_z();
    if (model.scm.rows != mv) {
        std::ostringstream os;
        os << "scm rows " << model.scm.rows << " != sum m_v " << mv;
        out.push_back({-1, "scm", os.str()});
    }
    if (model.scm.cols != mz) {
        std::ostringstream os;
        os << "scm cols " << model.scm.cols << " != sum m_z " << mz;
        out.push_back({-1, "scm", os.str()});
    }
    std::set<std::pair<Index, Index>> seen;
    for (std::size_t k = 0; k < model.scm.entries.size(); ++k) {
        const ScmEntry& e = model.scm.entries[k];
        std::ostringstream os;
        os << "scm.entries[" << k << "]";
        if (e.row < 0 || e.row >= model.scm.rows || e.col < 0 || e.col >= model.scm.cols)
            out.push_back({-1, os.str(), "index out of range"});
        else if (!seen.insert({e.row, e.col}).second)
            out.push_back({-1, os.str(), "duplicate (row, col)"});
    }
    return out;
}

void validate(const NdsModel& model) {
    const std::vector<ValidationIssue> issues = validate_issues(model);
    if (issues.empty()) return;
    std::ostringstream os;
    os << "model validation failed:";
    for (const ValidationIssue& v : issues) {
        os << " [";
        if (v.subsystem >= 0) os << "subsystem " << v.subsystem << " ";
        os << v.field << ": " << v.message << "]";
    }
    throw DimensionError(os.str());
}

namespace {

// value + factors * (Mid - P Side)^{-1} P Rhs applied to a row-stacked group.
RealMatrix lft_correction(const RealMatrix& P, const RealMatrix& Mid, const RealMatrix& Side,
                          const RealMatrix& Rhs, const ToleranceConfig& cfg, const char* side_name) {
    const Index q = Mid.rows();
    if (q == 0) return RealMatrix::Zero(0, Rhs.cols());
    const RealMatrix core = Mid - P * Side;
    Eigen::JacobiSVD<RealMatrix> svd(core, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double smax = sv(0);
    const double smin = sv(q - 1);
    if (smax == 0.0 || smin <= cfg.rel_rank_tol * smax * static_cast<double>(q)) {
        std::ostringstream os;
        os << side_name << " well-posedness matrix is singular (condition "
           << (smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity()) << ")";
        throw LftIllPosedError(os.str());
    }
    return svd.solve(P * Rhs);
}

}  // namespace

SubsystemNumeric evaluate_lft(const SubsystemLft& s, const ToleranceConfig& cfg) {
    SubsystemNumeric out;
    out.m_x = s.m_x;
    out.m_v = s.m_v;
    out.m_z = s.m_z;
    out.m_u = s.m_u;
    out.m_y = s.m_y;
    const RealMatrix xcorr = lft_correction(s.P1, s.M, s.H, s.G, cfg, "x-side (M - P1 H)");
    out.E = s.E0 + s.F1 * xcorr;
    out.A_xx = s.A_xx0 + s.F2 * xcorr;
    out.C_x = s.C_x0 + s.F3 * xcorr;
    out.A_zx = s.A_zx0 + s.F4 * xcorr;
    const RealMatrix vcorr = lft_correction(s.P2, s.N, s.S, s.K, cfg, "v-side (N - P2 S)");
    out.A_xv = s.A_xv0 + s.J1 * vcorr;
    out.C_v = s.C_v0 + s.J2 * vcorr;
    out.A_zv = s.A_zv0 + s.J3 * vcorr;
    out.B_x = s.B_x;
    out.B_z = s.B_z;
    out.D_u = s.D_u;
    return out;
}

NdsModel to_numeric(const NdsModel& model, const ToleranceConfig& cfg) {
    if (model.mode == ModelMode::numeric) return model;
    NdsModel out;
    out.mode = ModelMode::numeric;
    out.scm = model.scm;
    out.numeric.reserve(model.lft.size());
    for (const SubsystemLft& s : model.lft) out.numeric.push_back(evaluate_lft(s, cfg));
    return out;
}

BlockStacks assemble(const NdsModel& model, const ToleranceConfig& cfg) {
    const NdsModel num = to_numeric(model, cfg);
    std::vector<RealMatrix> e, axx, axv, bx, azx, azv, bz, cx, cv, du;
    for (const SubsystemNumeric& s : num.numeric) {
        e.push_back(s.E);
        axx.push_back(s.A_xx);
        axv.push_back(s.A_xv);
        bx.push_back(s.B_x);
        azx.push_back(s.A_zx);
        azv.push_back(s.A_zv);
        bz.push_back(s.B_z);
        cx.push_back(s.C_x);
        cv.push_back(s.C_v);
        du.push_back(s.D_u);
    }
    BlockStacks st;
    st.E = block_diag_real(e);
    st.A_xx = block_diag_real(axx);
    st.A_xv = block_diag_real(axv);
    st.B_x = block_diag_real(bx);
    st.A_zx = block_diag_real(azx);
    st.A_zv = block_diag_real(azv);
    st.B_z = block_diag_real(bz);
    st.C_x = block_diag_real(cx);
    st.C_v = block_diag_real(cv);
    st.D_u = block_diag_real(du);
    return st;
}

WellPosedness check_wellposed(const NdsModel& model, const ToleranceConfig& cfg) {
    WellPosedness out;
    BlockStacks st;
    try {
        st = assemble(model, cfg);
    } catch (const LftIllPosedError& e) {
        out.wellposed = false;
        out.detail = e.what();
        return out;
    }
    const RealMatrix phi = model.scm.dense();
    const Index mv = phi.rows();
    const RealMatrix core = RealMatrix::Identity(mv, mv) - phi * st.A_zv;
    if (mv == 0) {
        out.wellposed = true;
        out.sigma_min_ratio = 1.0;
        return out;
    }
    Eigen::JacobiSVD<RealMatrix> svd(core);
    const auto& sv = svd.singularValues();
    out.sigma_min_ratio = sv(0) > 0.0 ? sv(mv - 1) / sv(0) : 0.0;
    out.wellposed = sv(0) > 0.0 &&
                    sv(mv - 1) > cfg.rel_rank_tol * sv(0) * static_cast<double>(mv);
    if (!out.wellposed) {
        std::ostringstream os;
        os << "I - Phi A_zv is singular at tolerance (sigma_min/sigma_max = " << out.sigma_min_ratio
           << ")";
        out.detail = os.str();
    }
    return out;
}

LumpedDescriptor build_lumped(const NdsModel& model, const ToleranceConfig& cfg) {
    const WellPosedness wp = check_wellposed(model, cfg);
    if (!wp.wellposed) throw WellPosednessError("model is not well-posed: " + wp.detail);
    const BlockStacks st = assemble(model, cfg);
    const RealMatrix phi = model.scm.dense();
    const Index mz = phi.cols();
    const RealMatrix core = RealMatrix::Identity(mz, mz) - st.A_zv * phi;
    Eigen::PartialPivLU<RealMatrix> lu(core);
    // Phi (I - A_zv Phi)^{-1} [A_zx B_z]
    const RealMatrix gz = phi * lu.solve(hstack_real(st.A_zx, st.B_z));
    LumpedDescriptor lum;
    lum.E = st.E;
    const Index mx = st.E.rows();
    lum.A = st.A_xx + st.A_xv * gz.leftCols(mx);
    lum.B = st.B_x + st.A_xv * gz.rightCols(st.B_z.cols());
    lum.C = st.C_x + st.C_v * gz.leftCols(mx);
    lum.D = st.D_u + st.C_v * gz.rightCols(st.B_z.cols());
    return lum;
}

NdsModel dualize(const NdsModel& model) {
    if (model.mode != ModelMode::numeric)
        throw UnsupportedError("dualize is defined for numeric models");
    NdsModel out;
    out.mode = ModelMode::numeric;
    out.numeric.reserve(model.numeric.size());
    for (const SubsystemNumeric& s : model.numeric) {
        SubsystemNumeric d;
        d.m_x = s.m_x;
        d.m_v = s.m_z;
        d.m_z = s.m_v;
        d.m_u = s.m_y;
        d.m_y = s.m_u;
        d.E = s.E.transpose();
        d.A_xx = s.A_xx.transpose();
        d.A_xv = s.A_zx.transpose();
        d.A_zx = s.A_xv.transpose();
        d.A_zv = s.A_zv.transpose();
        d.B_x = s.C_x.transpose();
        d.B_z = s.C_v.transpose();
        d.C_x = s.B_x.transpose();
        d.C_v = s.B_z.transpose();
        d.D_u = s.D_u.transpose();
        out.numeric.push_back(std::move(d));
    }
    out.scm.rows = model.scm.cols;
    out.scm.cols = model.scm.rows;
    out.scm.entries.reserve(model.scm.entries.size());
    for (const ScmEntry& e : model.scm.entries) out.scm.entries.push_back({e.col, e.row, e.value});
    return out;
}

}  // namespace ndsa
