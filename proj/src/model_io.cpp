#include "model_io.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace ndsa {

using nlohmann::json;

namespace {

const json& require(const json& j, const char* key, const std::string& path) {
    if (!j.is_object() || !j.contains(key))
        throw ParseError("missing field " + path + "." + key);
    return j.at(key);
}

RealMatrix parse_matrix(const json& j, const std::string& path, Index expect_rows = -1,
                        Index expect_cols = -1) {
    if (!j.is_array()) throw ParseError(path + " must be an array of rows");
    const Index rows = static_cast<Index>(j.size());
    Index cols = -1;
    for (Index i = 0; i < rows; ++i) {
        const json& row = j.at(i);
        if (!row.is_array())
            throw ParseError(path + "[" + std::to_string(i) + "] must be an array of numbers");
        if (cols == -1)
            cols = static_cast<Index>(row.size());
        else if (cols != static_cast<Index>(row.size()))
            throw ParseError(path + " rows have inconsistent lengths");
    }
    if (cols == -1) cols = expect_cols >= 0 ? expect_cols : 0;
    RealMatrix M(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        const json& row = j.at(i);
        if (static_cast<Index>(row.size()) != cols)
            throw ParseError(path + " rows have inconsistent lengths");
        for (Index k = 0; k < cols; ++k) {
            const json& v = row.at(k);
            if (!v.is_number())
                throw ParseError(path + "[" + std::to_string(i) + "][" + std::to_string(k) +
                                 "] must be a number");
            M(i, k) = v.get<double>();
        }
    }
    if (expect_rows >= 0 && rows != expect_rows) return M;  // validate() reports the mismatch
    return M;
}

json dump_matrix(const RealMatrix& M) {
    json rows = json::array();
    for (Index i = 0; i < M.rows(); ++i) {
        json row = json::array();
        for (Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Index dim_field(const json& dims, const char* key, const std::string& path) {
    const json& v = require(dims, key, path);
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
        throw ParseError(path + "." + key + " must be a nonnegative integer");
    return static_cast<Index>(v.get<std::int64_t>());
}

json complex_json(const Complex& c) {
    json j;
    j["re"] = c.real();
    j["im"] = c.imag();
    return j;
}

}  // namespace

NdsModel model_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ParseError("top level must be an object");
    const json& version = require(j, "version", "$");
    if (!version.is_number_integer() || version.get<int>() != 1)
        throw ParseError("$.version must be 1");
    const std::string mode = require(j, "mode", "$").get<std::string>();
    NdsModel model;
    if (mode == "numeric")
        model.mode = ModelMode::numeric;
    else if (mode == "lft")
        model.mode = ModelMode::lft;
    else
        throw ParseError("$.mode must be \"numeric\" or \"lft\"");

    const json& subs = require(j, "subsystems", "$");
    if (!subs.is_array()) throw ParseError("$.subsystems must be an array");
    for (Index i = 0; i < static_cast<Index>(subs.size()); ++i) {
        const json& sj = subs.at(i);
        const std::string path = "$.subsystems[" + std::to_string(i) + "]";
        std::string id = path;
        if (sj.is_object() && sj.contains("id") && sj.at("id").is_string())
            id = sj.at("id").get<std::string>();
        const json& dims = require(sj, "dims", path);
        const Index mx = dim_field(dims, "x", path + ".dims");
        const Index mv = dim_field(dims, "v", path + ".dims");
        const Index mz = dim_field(dims, "z", path + ".dims");
        const Index mu = dim_field(dims, "u", path + ".dims");
        const Index my = dim_field(dims, "y", path + ".dims");
        if (model.mode == ModelMode::numeric) {
            if (!sj.contains("matrices"))
                throw ParseError("subsystem " + id + ": missing " + path + ".matrices");
            const json& m = sj.at("matrices");
            SubsystemNumeric s;
            s.m_x = mx;
            s.m_v = mv;
            s.m_z = mz;
            s.m_u = mu;
            s.m_y = my;
            const std::string mp = path + ".matrices";
            s.E = parse_matrix(require(m, "E", mp), mp + ".E", mx, mx);
            s.A_xx = parse_matrix(require(m, "A_xx", mp), mp + ".A_xx", mx, mx);
            s.A_xv = parse_matrix(require(m, "A_xv", mp), mp + ".A_xv", mx, mv);
            s.B_x = parse_matrix(require(m, "B_x", mp), mp + ".B_x", mx, mu);
            s.A_zx = parse_matrix(require(m, "A_zx", mp), mp + ".A_zx", mz, mx);
            s.A_zv = parse_matrix(require(m, "A_zv", mp), mp + ".A_zv", mz, mv);
            s.B_z = parse_matrix(require(m, "B_z", mp), mp + ".B_z", mz, mu);
            s.C_x = parse_matrix(require(m, "C_x", mp), mp + ".C_x", my, mx);
            s.C_v = parse_matrix(require(m, "C_v", mp), mp + ".C_v", my, mv);
            s.D_u = parse_matrix(require(m, "D_u", mp), mp + ".D_u", my, mu);
            model.numeric.push_back(std::move(s));
        } else {
            if (!sj.contains("base") || !sj.contains("factors") || !sj.contains("params") ||
                !sj.contains("numeric"))
                throw ParseError("subsystem " + id +
                                 ": lft subsystems need base, factors, params and numeric");
            SubsystemLft s;
            s.m_x = mx;
            s.m_v = mv;
            s.m_z = mz;
            s.m_u = mu;
            s.m_y = my;
            const json& b = sj.at("base");
            const std::string bp = path + ".base";
            s.E0 = parse_matrix(require(b, "E", bp), bp + ".E", mx, mx);
            s.A_xx0 = parse_matrix(require(b, "A_xx", bp), bp + ".A_xx", mx, mx);
            s.A_xv0 = parse_matrix(require(b, "A_xv", bp), bp + ".A_xv", mx, mv);
            s.A_zx0 = parse_matrix(require(b, "A_zx", bp), bp + ".A_zx", mz, mx);
            s.A_zv0 = parse_matrix(require(b, "A_zv", bp), bp + ".A_zv", mz, mv);
            s.C_x0 = parse_matrix(require(b, "C_x", bp), bp + ".C_x", my, mx);
            s.C_v0 = parse_matrix(require(b, "C_v", bp), bp + ".C_v", my, mv);
            const json& f = sj.at("factors");
            const std::string fp = path + ".factors";
            s.M = parse_matrix(require(f, "M", fp), fp + ".M");
            const Index q1 = s.M.rows();
            s.H = parse_matrix(require(f, "H", fp), fp + ".H", -1, q1);
            const Index r1 = s.H.rows();
            s.G = parse_matrix(require(f, "G", fp), fp + ".G", r1, mx);
            s.F1 = parse_matrix(require(f, "F1", fp), fp + ".F1", mx, q1);
            s.F2 = parse_matrix(require(f, "F2", fp), fp + ".F2", mx, q1);
            s.F3 = parse_matrix(require(f, "F3", fp), fp + ".F3", my, q1);
            s.F4 = parse_matrix(require(f, "F4", fp), fp + ".F4", mz, q1);
            s.N = parse_matrix(require(f, "N", fp), fp + ".N");
            const Index q2 = s.N.rows();
            s.S = parse_matrix(require(f, "S", fp), fp + ".S", -1, q2);
            const Index r2 = s.S.rows();
            s.K = parse_matrix(require(f, "K", fp), fp + ".K", r2, mv);
            s.J1 = parse_matrix(require(f, "J1", fp), fp + ".J1", mx, q2);
            s.J2 = parse_matrix(require(f, "J2", fp), fp + ".J2", my, q2);
            s.J3 = parse_matrix(require(f, "J3", fp), fp + ".J3", mz, q2);
            const json& p = sj.at("params");
            const std::string ppath = path + ".params";
            s.P1 = parse_matrix(require(p, "P1", ppath), ppath + ".P1", q1, r1);
            s.P2 = parse_matrix(require(p, "P2", ppath), ppath + ".P2", q2, r2);
            const json& nm = sj.at("numeric");
            const std::string np = path + ".numeric";
            s.B_x = parse_matrix(require(nm, "B_x", np), np + ".B_x", mx, mu);
            s.B_z = parse_matrix(require(nm, "B_z", np), np + ".B_z", mz, mu);
            s.D_u = parse_matrix(require(nm, "D_u", np), np + ".D_u", my, mu);
            model.lft.push_back(std::move(s));
        }
    }

    const json& scm = require(j, "scm", "$");
    const json& entries = require(scm, "entries", "$.scm");
    if (!entries.is_array()) throw ParseError("$.scm.entries must be an array");
    model.scm.rows = model.total_v();
    model.scm.cols = model.total_z();
    for (Index k = 0; k < static_cast<Index>(entries.size()); ++k) {
        const json& e = entries.at(k);
        const std::string path = "$.scm.entries[" + std::to_string(k) + "]";
        if (!e.is_array() || e.size() != 3)
            throw ParseError(path + " must be [row, col, value]");
        if (!e.at(0).is_number_integer() || !e.at(1).is_number_integer() || !e.at(2).is_number())
            throw ParseError(path + " must be [int, int, number]");
        model.scm.entries.push_back({static_cast<Index>(e.at(0).get<std::int64_t>()),
                                     static_cast<Index>(e.at(1).get<std::int64_t>()),
                                     e.at(2).get<double>()});
    }
    validate(model);
    return model;
}

NdsModel model_from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open model file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return model_from_json(buf.str());
}

std::string model_to_json(const NdsModel& model, int indent) {
    json j;
    j["version"] = 1;
    j["mode"] = model.mode == ModelMode::numeric ? "numeric" : "lft";
    json subs = json::array();
    if (model.mode == ModelMode::numeric) {
        for (Index i = 0; i < static_cast<Index>(model.numeric.size()); ++i) {
            const SubsystemNumeric& s = model.numeric[i];
            json sj;
            sj["id"] = "s" + std::to_string(i);
            sj["dims"] = {{"x", s.m_x}, {"v", s.m_v}, {"z", s.m_z}, {"u", s.m_u}, {"y", s.m_y}};
            json m;
            m["E"] = dump_matrix(s.E);
            m["A_xx"] = dump_matrix(s.A_xx);
            m["A_xv"] = dump_matrix(s.A_xv);
            m["B_x"] = dump_matrix(s.B_x);
            m["A_zx"] = dump_matrix(s.A_zx);
            m["A_zv"] = dump_matrix(s.A_zv);
            m["B_z"] = dump_matrix(s.B_z);
            m["C_x"] = dump_matrix(s.C_x);
            m["C_v"] = dump_matrix(s.C_v);
            m["D_u"] = dump_matrix(s.D_u);
            sj["matrices"] = std::move(m);
            subs.push_back(std::move(sj));
        }
    } else {
        for (Index i = 0; i < static_cast<Index>(model.lft.size()); ++i) {
            const SubsystemLft& s = model.lft[i];
            json sj;
            sj["id"] = "s" + std::to_string(i);
            sj["dims"] = {{"x", s.m_x}, {"v", s.m_v}, {"z", s.m_z}, {"u", s.m_u}, {"y", s.m_y}};
            json b;
            b["E"] = dump_matrix(s.E0);
            b["A_xx"] = dump_matrix(s.A_xx0);
            b["A_xv"] = dump_matrix(s.A_xv0);
            b["A_zx"] = dump_matrix(s.A_zx0);
            b["A_zv"] = dump_matrix(s.A_zv0);
            b["C_x"] = dump_matrix(s.C_x0);
            b["C_v"] = dump_matrix(s.C_v0);
            sj["base"] = std::move(b);
            json f;
            f["F1"] = dump_matrix(s.F1);
            f["F2"] = dump_matrix(s.F2);
            f["F3"] = dump_matrix(s.F3);
            f["F4"] = dump_matrix(s.F4);
            f["G"] = dump_matrix(s.G);
            f["H"] = dump_matrix(s.H);
            f["M"] = dump_matrix(s.M);
            f["J1"] = dump_matrix(s.J1);
            f["J2"] = dump_matrix(s.J2);
            f["J3"] = dump_matrix(s.J3);
            f["K"] = dump_matrix(s.K);
            f["S"] = dump_matrix(s.S);
            f["N"] = dump_matrix(s.N);
            sj["factors"] = std::move(f);
            json p;
            p["P1"] = dump_matrix(s.P1);
            p["P2"] = dump_matrix(s.P2);
            sj["params"] = std::move(p);
            json nm;
            nm["B_x"] = dump_matrix(s.B_x);
            nm["B_z"] = dump_matrix(s.B_z);
            nm["D_u"] = dump_matrix(s.D_u);
            sj["numeric"] = std::move(nm);
            subs.push_back(std::move(sj));
        }
    }
    j["subsystems"] = std::move(subs);
    json entries = json::array();
    for (const ScmEntry& e : model.scm.entries)
        entries.push_back(json::array({e.row, e.col, e.value}));
    j["scm"] = {{"entries", std::move(entries)}};
    return indent >= 0 ? j.dump(indent) : j.dump();
}

RandomModelSpec random_spec_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("invalid JSON: ") + e.what());
    }
    RandomModelSpec spec;
    if (!j.is_object() || !j.contains("seed")) throw ParseError("random spec needs a seed");
    spec.seed = j.at("seed").get<std::uint64_t>();
    auto range = [&](const char* key, DimRange& r) {
        if (!j.contains(key)) return;
        const json& v = j.at(key);
        if (!v.is_array() || v.size() != 2) throw ParseError(std::string(key) + " must be [lo, hi]");
        r.lo = v.at(0).get<Index>();
        r.hi = v.at(1).get<Index>();
        if (r.lo > r.hi || r.lo < 0) throw ParseError(std::string(key) + " range is empty");
    };
    range("n_subsystems", spec.n_subsystems);
    range("m_x", spec.m_x);
    range("m_v", spec.m_v);
    range("m_z", spec.m_z);
    range("m_u", spec.m_u);
    range("m_y", spec.m_y);
    range("lft_q", spec.lft_q);
    if (j.contains("scm_density")) spec.scm_density = j.at("scm_density").get<double>();
    if (j.contains("singular_e_prob")) spec.singular_e_prob = j.at("singular_e_prob").get<double>();
    if (spec.scm_density < 0.0 || spec.scm_density > 1.0)
        throw ParseError("scm_density must be in [0, 1]");
    if (j.contains("mode")) {
        const std::string m = j.at("mode").get<std::string>();
        if (m == "numeric")
            spec.mode = ModelMode::numeric;
        else if (m == "lft")
            spec.mode = ModelMode::lft;
        else
            throw ParseError("mode must be \"numeric\" or \"lft\"");
    }
    return spec;
}

std::string report_to_json(const AnalysisReport& rep, double timings_ms) {
    json j;
    j["check"] = rep.check_name;
    j["verdict"] = verdict_name(rep.verdict);
    j["method"] = method_name(rep.method);
    json pts = json::array();
    for (const Complex& l : rep.checked_points) pts.push_back(complex_json(l));
    j["lambda_points"] = std::move(pts);
    json certs = json::array();
    for (const Certificate& c : rep.certificates) {
        json cj;
        if (c.lambda) cj["lambda"] = complex_json(*c.lambda);
        cj["matrix"] = c.matrix;
        if (c.subsystem >= 0) cj["subsystem"] = c.subsystem;
        json w = json::array();
        for (Index i = 0; i < c.witness.size(); ++i) w.push_back(complex_json(c.witness(i)));
        cj["witness"] = std::move(w);
        certs.push_back(std::move(cj));
    }
    j["certificates"] = std::move(certs);
    j["notes"] = rep.notes;
    j["timings_ms"] = timings_ms;
    return j.dump();
}

}  // namespace ndsa
