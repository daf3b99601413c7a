#include "ndsa.h"

#include "analysis.hpp"
#include "model_io.hpp"
#include "oracle.hpp"

#include <json.hpp>

#include <chrono>
#include <cstring>
#include <string>

using nlohmann::json;

struct ndsa_model {
    ndsa::NdsModel model;
};

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out) std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

ndsa_status fail(ndsa_status code, const std::string& msg) {
    g_last_error = msg;
    return code;
}

template <typename Fn>
ndsa_status guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const ndsa::ParseError& e) {
        return fail(NDSA_ERR_PARSE, e.what());
    } catch (const ndsa::DimensionError& e) {
        return fail(NDSA_ERR_DIMENSION, e.what());
    } catch (const ndsa::WellPosednessError& e) {
        return fail(NDSA_ERR_NOT_WELLPOSED, e.what());
    } catch (const ndsa::ConditioningError& e) {
        return fail(NDSA_ERR_CONDITIONING, e.what());
    } catch (const ndsa::LftIllPosedError& e) {
        return fail(NDSA_ERR_LFT_ILL_POSED, e.what());
    } catch (const ndsa::GenerationExhaustedError& e) {
        return fail(NDSA_ERR_GENERATION, e.what());
    } catch (const ndsa::UnsupportedError& e) {
        return fail(NDSA_ERR_UNSUPPORTED, e.what());
    } catch (const std::exception& e) {
        return fail(NDSA_ERR_INTERNAL, e.what());
    }
}

ndsa::ToleranceConfig tolerances(const ndsa_options* opts) {
    ndsa::ToleranceConfig cfg;
    if (opts) {
        if (opts->rel_rank_tol > 0.0) cfg.rel_rank_tol = opts->rel_rank_tol;
        if (opts->residual_tol > 0.0) cfg.residual_tol = opts->residual_tol;
    }
    return cfg;
}

ndsa::AnalysisOptions analysis_options(const ndsa_options* opts) {
    ndsa::AnalysisOptions a;
    if (opts) a.allow_dense_fallback = opts->forbid_dense_fallback == 0;
    return a;
}

}  // namespace

extern "C" {

void ndsa_options_init(ndsa_options* opts) {
    if (!opts) return;
    opts->rel_rank_tol = 1e-9;
    opts->residual_tol = 1e-8;
    opts->forbid_dense_fallback = 0;
}

ndsa_status ndsa_model_from_json(const char* json_text, ndsa_model** out) {
    if (!json_text || !out) return fail(NDSA_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        auto* handle = new ndsa_model{ndsa::model_from_json(json_text)};
        *out = handle;
        return NDSA_OK;
    });
}

ndsa_status ndsa_model_from_file(const char* path, ndsa_model** out) {
    if (!path || !out) return fail(NDSA_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        auto* handle = new ndsa_model{ndsa::model_from_file(path)};
        *out = handle;
        return NDSA_OK;
    });
}

ndsa_status ndsa_model_to_json(const ndsa_model* model, int indent, char** out_json) {
    if (!model || !out_json) return fail(NDSA_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        *out_json = dup_string(ndsa::model_to_json(model->model, indent));
        return NDSA_OK;
    });
}

void ndsa_model_free(ndsa_model* model) { delete model; }

ndsa_status ndsa_run_check(const ndsa_model* model, const char* check, const ndsa_options* opts,
                           char** out_report_json) {
    if (!model || !check || !out_report_json)
        return fail(NDSA_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        const ndsa::ToleranceConfig cfg = tolerances(opts);
        const ndsa::AnalysisOptions aopt = analysis_options(opts);
        const std::string name = check;
        const auto t0 = std::chrono::steady_clock::now();
        std::string payload;
        if (name == "subsystem-design") {
            if (model->model.mode != ndsa::ModelMode::lft)
                return fail(NDSA_ERR_UNSUPPORTED, "subsystem-design needs an LFT model");
            // One report per subsystem, merged into a single fail/pass verdict.
            ndsa::AnalysisReport merged;
            merged.check_name = "subsystem_design";
            merged.verdict = ndsa::Verdict::pass;
            std::string notes;
            for (std::size_t i = 0; i < model->model.lft.size(); ++i) {
                ndsa::AnalysisReport rep = ndsa::check_subsystem_design(
                    model->model.lft[i], cfg, ndsa::SampleConfig{});
                if (!notes.empty()) notes += "; ";
                notes += "subsystem " + std::to_string(i) + ": " + ndsa::verdict_name(rep.verdict);
                if (!rep.notes.empty()) notes += " (" + rep.notes + ")";
                for (ndsa::Certificate& c : rep.certificates) {
                    c.subsystem = static_cast<ndsa::Index>(i);
                    merged.certificates.push_back(std::move(c));
                }
                for (const ndsa::Complex& p : rep.checked_points)
                    merged.checked_points.push_back(p);
                if (rep.verdict == ndsa::Verdict::fail) merged.verdict = ndsa::Verdict::fail;
            }
            merged.notes = notes;
            const auto t1 = std::chrono::steady_clock::now();
            payload = ndsa::report_to_json(
                merged, std::chrono::duration<double, std::milli>(t1 - t0).count());
        } else {
            ndsa::AnalysisReport rep;
            if (name == "regularity") {
                rep = ndsa::check_regularity(model->model, cfg, ndsa::SampleConfig{});
            } else if (name == "observability") {
                rep = ndsa::check_observability(model->model, cfg, aopt);
            } else if (name == "controllability") {
                rep = ndsa::check_controllability(model->model, cfg, aopt);
            } else {
                return fail(NDSA_ERR_INVALID_ARGUMENT, "unknown check: " + name);
            }
            const auto t1 = std::chrono::steady_clock::now();
            payload = ndsa::report_to_json(
                rep, std::chrono::duration<double, std::milli>(t1 - t0).count());
        }
        *out_report_json = dup_string(payload);
        return NDSA_OK;
    });
}

int ndsa_report_verdict_code(const char* report_json) {
    if (!report_json) return 3;
    try {
        const json j = json::parse(report_json);
        const std::string v = j.at("verdict").get<std::string>();
        if (v == "pass") return 0;
        if (v == "fail") return 1;
        if (v == "not_wellposed" || v == "inconclusive") return 2;
        return 3;
    } catch (...) {
        return 3;
    }
}

ndsa_status ndsa_explain(const ndsa_model* model, const ndsa_options* opts, char** out_json) {
    if (!model || !out_json) return fail(NDSA_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        const ndsa::ToleranceConfig cfg = tolerances(opts);
        const ndsa::NdsModel& m = model->model;
        json j;
        j["mode"] = m.mode == ndsa::ModelMode::numeric ? "numeric" : "lft";
        j["dims"] = {{"M_x", m.total_x()}, {"M_v", m.total_v()}, {"M_z", m.total_z()},
                     {"M_u", m.total_u()}, {"M_y", m.total_y()}};
        const ndsa::WellPosedness wp = ndsa::check_wellposed(m, cfg);
        j["wellposed"] = wp.wellposed;
        j["wellposed_sigma_min_ratio"] = wp.sigma_min_ratio;
        json subs = json::array();
        const ndsa::NdsModel num = ndsa::to_numeric(m, cfg);
        for (std::size_t i = 0; i < num.numeric.size(); ++i) {
            const ndsa::SubsystemObsStructure st =
                ndsa::subsystem_obs_structure(num.numeric[i], cfg);
            json sj;
            sj["index"] = i;
            sj["m"] = ndsa::leading_width(st.ks);
            sj["kcf"] = {{"mu", st.ks.mu},
                         {"xi", st.ks.xi},
                         {"eta", st.ks.eta},
                         {"kappa", st.ks.kappa},
                         {"rho", st.ks.rho}};
            sj["lambda_whole_plane"] = st.lambda_set.whole_plane;
            json pts = json::array();
            for (const ndsa::Complex& p : st.lambda_set.points)
                pts.push_back({{"re", p.real()}, {"im", p.imag()}});
            sj["lambda_points"] = std::move(pts);
            subs.push_back(std::move(sj));
        }
        j["subsystems"] = std::move(subs);
        *out_json = dup_string(j.dump());
        return NDSA_OK;
    });
}

ndsa_status ndsa_random_model(const char* spec_json, char** out_model_json) {
    if (!spec_json || !out_model_json) return fail(NDSA_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        const ndsa::RandomModelSpec spec = ndsa::random_spec_from_json(spec_json);
        const ndsa::NdsModel model = ndsa::random_model(spec);
        *out_model_json = dup_string(ndsa::model_to_json(model));
        return NDSA_OK;
    });
}

ndsa_status ndsa_verify(const char* spec_json, int count, const ndsa_options* opts,
                        char** out_summary_json) {
    if (!spec_json || !out_summary_json || count <= 0)
        return fail(NDSA_ERR_INVALID_ARGUMENT, "bad arguments");
    return guarded([&] {
        const ndsa::ToleranceConfig cfg = tolerances(opts);
        const ndsa::AnalysisOptions aopt = analysis_options(opts);
        ndsa::RandomModelSpec spec = ndsa::random_spec_from_json(spec_json);
        const std::uint64_t base_seed = spec.seed;
        int agree = 0;
        int compared = 0;
        int skipped_irregular = 0;
        json disagreements = json::array();
        for (int k = 0; k < count; ++k) {
            spec.seed = base_seed + static_cast<std::uint64_t>(k);
            const ndsa::NdsModel model = ndsa::random_model(spec);
            const ndsa::NdsModel num = ndsa::to_numeric(model, cfg);
            const ndsa::LumpedDescriptor lum = ndsa::build_lumped(num, cfg);
            bool ok = true;
            auto record = [&](const char* check, const std::string& got, const std::string& want) {
                ok = false;
                disagreements.push_back(
                    {{"seed", spec.seed}, {"check", check}, {"analysis", got}, {"oracle", want}});
            };
            const bool oreg = ndsa::oracle_regular(lum, cfg);
            const ndsa::AnalysisReport reg = ndsa::check_regularity(num, cfg, {});
            if ((reg.verdict == ndsa::Verdict::pass) != oreg)
                record("regularity", ndsa::verdict_name(reg.verdict), oreg ? "pass" : "fail");
            if (oreg) {
                const auto oobs = ndsa::oracle_observable(lum, cfg);
                const ndsa::AnalysisReport obs = ndsa::check_observability(num, cfg, aopt);
                if (oobs && (obs.verdict == ndsa::Verdict::pass) != *oobs)
                    record("observability", ndsa::verdict_name(obs.verdict), *oobs ? "pass" : "fail");
                const auto octr = ndsa::oracle_controllable(lum, cfg);
                const ndsa::AnalysisReport ctr = ndsa::check_controllability(num, cfg, aopt);
                if (octr && (ctr.verdict == ndsa::Verdict::pass) != *octr)
                    record("controllability", ndsa::verdict_name(ctr.verdict), *octr ? "pass" : "fail");
            } else {
                ++skipped_irregular;
            }
            ++compared;
            if (ok) ++agree;
        }
        json j;
        j["count"] = compared;
        j["agreements"] = agree;
        j["skipped_irregular_obs_ctrl"] = skipped_irregular;
        j["disagreements"] = std::move(disagreements);
        j["seed"] = base_seed;
        *out_summary_json = dup_string(j.dump());
        return NDSA_OK;
    });
}

void ndsa_string_free(char* s) { std::free(s); }

const char* ndsa_last_error(void) { return g_last_error.c_str(); }

}  // extern "C"
