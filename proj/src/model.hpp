#pragma once

#include "pencil.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ndsa {

// One subsystem in descriptor form:
//   [E x(t+1); z(t); y(t)] = [A_xx A_xv B_x; A_zx A_zv B_z; C_x C_v D_u]
//                            * [x(t); v(t); u(t)]
struct SubsystemNumeric {
    Index m_x = 0, m_v = 0, m_z = 0, m_u = 0, m_y = 0;
    RealMatrix E, A_xx, A_xv, B_x;
    RealMatrix A_zx, A_zv, B_z;
    RealMatrix C_x, C_v, D_u;
};

// Generalized LFT factors for the parameter dependent matrices:
//   col{E, A_xx, C_x, A_zx}   = base + col{F1,F2,F3,F4} [M - P1 H]^{-1} P1 G
//   col{A_xv, C_v, A_zv}      = base + col{J1,J2,J3}    [N - P2 S]^{-1} P2 K
// B_x, B_z, D_u stay numeric. Factor widths: M is q1 x q1, P1 is q1 x r1,
// H is r1 x q1, G is r1 x m_x; N is q2 x q2, P2 is q2 x r2, S is r2 x q2,
// K is r2 x m_v.
struct SubsystemLft {
    Index m_x = 0, m_v = 0, m_z = 0, m_u = 0, m_y = 0;
    RealMatrix E0, A_xx0, A_xv0, A_zx0, A_zv0, C_x0, C_v0;
    RealMatrix F1, F2, F3, F4, G, H, M, P1;
    RealMatrix J1, J2, J3, K, S, N, P2;
    RealMatrix B_x, B_z, D_u;

    Index q1() const { return M.rows(); }
    Index r1() const { return H.rows(); }
    Index q2() const { return N.rows(); }
    Index r2() const { return S.rows(); }
};

struct ScmEntry {
    Index row = 0;
    Index col = 0;
    double value = 0.0;
};

// Sparse subsystem connection matrix, v(t) = Phi z(t).
struct Scm {
    Index rows = 0;  // M_v
    Index cols = 0;  // M_z
    std::vector<ScmEntry> entries;

    RealMatrix dense() const;
};

enum class ModelMode { numeric, lft };

struct NdsModel {
    ModelMode mode = ModelMode::numeric;
    std::vector<SubsystemNumeric> numeric;
    std::vector<SubsystemLft> lft;
    Scm scm;

    Index count() const {
        return static_cast<Index>(mode == ModelMode::numeric ? numeric.size() : lft.size());
    }
    Index total_x() const;
    Index total_v() const;
    Index total_z() const;
    Index total_u() const;
    Index total_y() const;
};

// Lumped descriptor system of the whole NDS.
struct LumpedDescriptor {
    RealMatrix E, A, B, C, D;
};

// Block diagonal stacks of the per-subsystem matrices, in model order.
struct BlockStacks {
    RealMatrix E, A_xx, A_xv, B_x;
    RealMatrix A_zx, A_zv, B_z;
    RealMatrix C_x, C_v, D_u;
};

struct ValidationIssue {
    Index subsystem = -1;  // -1: model level
    std::string field;
    std::string message;
};

std::vector<ValidationIssue> validate_issues(const NdsModel& model);
// Throws DimensionError listing every violation.
void validate(const NdsModel& model);

// Evaluates the generalized LFT at the stored parameter values. Throws
// LftIllPosedError when M - P1 H or N - P2 S is singular at tolerance.
SubsystemNumeric evaluate_lft(const SubsystemLft& sub, const ToleranceConfig& cfg);

// Numeric view of the model: identity for numeric mode, evaluate_lft per
// subsystem for LFT mode.
NdsModel to_numeric(const NdsModel& model, const ToleranceConfig& cfg);

struct WellPosedness {
    bool wellposed = false;
    double sigma_min_ratio = 0.0;  // smallest/largest singular value of I - Phi A_zv
    std::string detail;
};

WellPosedness check_wellposed(const NdsModel& model, const ToleranceConfig& cfg);

BlockStacks assemble(const NdsModel& model, const ToleranceConfig& cfg);

// Closure of the interconnection:
//   A = A_xx + A_xv Phi (I - A_zv Phi)^{-1} A_zx, same pattern for B, C, D.
LumpedDescriptor build_lumped(const NdsModel& model, const ToleranceConfig& cfg);

// Controllability <-> observability dual: transposes every subsystem in
// place (swapping v/z and u/y roles) and the SCM, so the controllability
// pencil of the original is the transpose of the observability pencil of
// the dual.
NdsModel dualize(const NdsModel& model);

}  // namespace ndsa
