#pragma once

#include "kcf.hpp"
#include "model.hpp"
#include "sampling.hpp"

#include <optional>

namespace ndsa {

enum class Verdict { pass, fail, not_wellposed, inconclusive };
enum class Method { scalable, fallback_dense };

const char* verdict_name(Verdict v);
const char* method_name(Method m);

struct Certificate {
    std::optional<Complex> lambda;  // absent for constant matrices
    Vector witness;                 // unit norm, first nonzero component real positive
    std::string matrix;             // which matrix the witness annihilates
    Index subsystem = -1;           // for per-subsystem checks
};

struct AnalysisReport {
    std::string check_name;
    Verdict verdict = Verdict::inconclusive;
    Method method = Method::scalable;
    std::vector<Certificate> certificates;
    std::vector<Complex> checked_points;
    std::string notes;
};

struct AnalysisOptions {
    bool allow_dense_fallback = true;
};

// Ring radius 1 + the largest max-row-sum norm over all model matrices,
// keeping the deterministic sample points away from eigenvalues.
double sample_radius(const NdsModel& model);
double sample_radius_subsystem(const SubsystemLft& sub);
std::vector<Complex> sample_points(const NdsModel& model, Index count, const SampleConfig& samp);

void normalize_witness(Vector& w);

// Per-subsystem structure behind the finite observability condition: null
// basis of [C_x C_v], KCF of lambda*E*N_x - (A_xx*N_x + A_xv*N_v), its
// singular points and the leading columns of V^{-1}.
struct SubsystemObsStructure {
    Matrix N_x, N_v;
    KroneckerStructure ks;
    SingularPointSet lambda_set;
    Matrix v_inv_lead;
};

SubsystemObsStructure subsystem_obs_structure(const SubsystemNumeric& sub, const ToleranceConfig& cfg);

// Dense matrix builders for the checked rank conditions; also used to validate
// failure certificates.
Matrix build_theta(const NdsModel& model, Complex lambda0, const ToleranceConfig& cfg);
Matrix build_xi_o(const NdsModel& model, Complex lambda0, const ToleranceConfig& cfg);
Pencil build_xi_o_pencil(const NdsModel& model, const ToleranceConfig& cfg);
Matrix build_xi_inf_o(const NdsModel& model, const ToleranceConfig& cfg);
Matrix build_xi_c(const NdsModel& model, Complex lambda0, const ToleranceConfig& cfg);
Matrix build_xi_inf_c(const NdsModel& model, const ToleranceConfig& cfg);

// Parameter-affine pencils of the LFT mode.
struct ParamPencils {
    Pencil xi_p;      // five block rows: dynamics, output, P1, P2, coupling
    Matrix xi_inf_p;  // constant matrix of the infinity condition
};
ParamPencils build_param_pencils(const NdsModel& model);
Matrix build_theta_p(const NdsModel& model, Complex lambda0);

AnalysisReport check_regularity(const NdsModel& model, const ToleranceConfig& cfg,
                                const SampleConfig& samp);
AnalysisReport check_observability_finite(const NdsModel& model, const ToleranceConfig& cfg,
                                          const AnalysisOptions& opt = {});
AnalysisReport check_observability_infinity(const NdsModel& model, const ToleranceConfig& cfg);
AnalysisReport check_observability(const NdsModel& model, const ToleranceConfig& cfg,
                                   const AnalysisOptions& opt = {});
AnalysisReport check_controllability(const NdsModel& model, const ToleranceConfig& cfg,
                                     const AnalysisOptions& opt = {});
AnalysisReport check_observability_param(const NdsModel& model, const ToleranceConfig& cfg,
                                         const AnalysisOptions& opt = {});
AnalysisReport check_subsystem_design(const SubsystemLft& sub, const ToleranceConfig& cfg,
                                      const SampleConfig& samp);

// ||M w|| / max(||M||, eps) for the matrix named by the certificate.
double certificate_residual(const NdsModel& model, const Certificate& cert,
                            const ToleranceConfig& cfg);
double certificate_residual_subsystem(const SubsystemLft& sub, const Certificate& cert,
                                      const ToleranceConfig& cfg);

}  // namespace ndsa
