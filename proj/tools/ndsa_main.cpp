// Command line front end. Talks to the analysis engine exclusively through
// the public C API in ndsa.h.

#include <ndsa.h>

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

struct Cleanup {
    char* s = nullptr;
    ~Cleanup() { ndsa_string_free(s); }
};

int die(const std::string& context) {
    std::cerr << "ndsa: " << context << ": " << ndsa_last_error() << "\n";
    return 3;
}

void write_output(const std::string& text, const std::string& json_out) {
    std::cout << text << "\n";
    if (!json_out.empty()) {
        std::ofstream out(json_out, std::ios::app);
        out << text << "\n";
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"regularity / controllability / observability analysis of networked descriptor systems"};
    app.require_subcommand(1);

    ndsa_options opts;
    ndsa_options_init(&opts);
    std::string fallback = "allow";
    std::string json_out;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--tol", opts.rel_rank_tol, "relative rank tolerance");
        cmd->add_option("--residual-tol", opts.residual_tol, "residual tolerance");
        cmd->add_option("--fallback", fallback, "allow|forbid the dense fallback")
            ->check(CLI::IsMember({"allow", "forbid"}));
        cmd->add_option("--json-out", json_out, "also append report JSON to this file");
    };

    // check
    auto* check_cmd = app.add_subcommand("check", "run checks on a model file");
    std::string model_path;
    std::vector<std::string> checks;
    check_cmd->add_option("model", model_path, "model JSON file")->required();
    check_cmd->add_option("--check", checks,
                          "check to run (repeatable): regularity, observability, "
                          "controllability, subsystem-design");
    add_common(check_cmd);

    // verify
    auto* verify_cmd = app.add_subcommand("verify", "compare scalable checks against the dense oracle");
    std::uint64_t seed = 1;
    int count = 100;
    std::string mode = "numeric";
    int max_subsystems = 3;
    int max_dim = 3;
    double density = 0.5;
    double singular_e = 0.3;
    verify_cmd->add_option("--seed", seed, "base seed")->required();
    verify_cmd->add_option("--count", count, "number of random models");
    verify_cmd->add_option("--mode", mode, "numeric|lft")->check(CLI::IsMember({"numeric", "lft"}));
    verify_cmd->add_option("--max-subsystems", max_subsystems, "upper bound on N");
    verify_cmd->add_option("--max-dim", max_dim, "upper bound on per-subsystem dims");
    verify_cmd->add_option("--density", density, "SCM density in [0,1]");
    verify_cmd->add_option("--singular-e-prob", singular_e, "probability of a singular E block");
    add_common(verify_cmd);

    // gen-random
    auto* gen_cmd = app.add_subcommand("gen-random", "emit a seeded random model");
    std::string out_path;
    gen_cmd->add_option("--seed", seed, "seed")->required();
    gen_cmd->add_option("--mode", mode, "numeric|lft")->check(CLI::IsMember({"numeric", "lft"}));
    gen_cmd->add_option("--max-subsystems", max_subsystems, "upper bound on N");
    gen_cmd->add_option("--max-dim", max_dim, "upper bound on per-subsystem dims");
    gen_cmd->add_option("--density", density, "SCM density in [0,1]");
    gen_cmd->add_option("--singular-e-prob", singular_e, "probability of a singular E block");
    gen_cmd->add_option("--out", out_path, "write the model here instead of stdout");

    // explain
    auto* explain_cmd = app.add_subcommand("explain", "per-subsystem structural report");
    explain_cmd->add_option("model", model_path, "model JSON file")->required();
    add_common(explain_cmd);

    CLI11_PARSE(app, argc, argv);
    opts.forbid_dense_fallback = fallback == "forbid" ? 1 : 0;

    auto spec_json = [&]() {
        std::ostringstream os;
        os << "{\"seed\":" << seed << ",\"mode\":\"" << mode << "\""
           << ",\"n_subsystems\":[1," << max_subsystems << "]"
           << ",\"m_x\":[1," << max_dim << "]"
           << ",\"m_v\":[0," << std::min(max_dim, 2) << "]"
           << ",\"m_z\":[0," << std::min(max_dim, 2) << "]"
           << ",\"m_u\":[0," << std::min(max_dim, 2) << "]"
           << ",\"m_y\":[0," << std::min(max_dim, 2) << "]"
           << ",\"scm_density\":" << density << ",\"singular_e_prob\":" << singular_e << "}";
        return os.str();
    };

    if (check_cmd->parsed()) {
        ndsa_model* model = nullptr;
        if (ndsa_model_from_file(model_path.c_str(), &model) != NDSA_OK)
            return die("cannot load " + model_path);
        if (checks.empty()) checks = {"regularity", "observability", "controllability"};
        int exit_code = 0;
        for (const std::string& c : checks) {
            Cleanup rep;
            if (ndsa_run_check(model, c.c_str(), &opts, &rep.s) != NDSA_OK) {
                ndsa_model_free(model);
                return die("check " + c);
            }
            write_output(rep.s, json_out);
            const int code = ndsa_report_verdict_code(rep.s);
            if (code > exit_code && (exit_code != 1 || code == 3)) exit_code = code;
            if (code == 1) exit_code = 1;
        }
        ndsa_model_free(model);
        return exit_code;
    }

    if (verify_cmd->parsed()) {
        Cleanup summary;
        if (ndsa_verify(spec_json().c_str(), count, &opts, &summary.s) != NDSA_OK)
            return die("verify");
        write_output(summary.s, json_out);
        // "agreement K/N" human summary on stderr so stdout stays machine readable
        std::string text = summary.s;
        const auto agree_pos = text.find("\"agreements\":");
        long agree = -1;
        if (agree_pos != std::string::npos)
            agree = std::strtol(text.c_str() + agree_pos + 13, nullptr, 10);
        std::cerr << "agreement " << agree << "/" << count << "\n";
        return agree == count ? 0 : 1;
    }

    if (gen_cmd->parsed()) {
        Cleanup model_json;
        if (ndsa_random_model(spec_json().c_str(), &model_json.s) != NDSA_OK)
            return die("gen-random");
        if (out_path.empty()) {
            std::cout << model_json.s << "\n";
        } else {
            std::ofstream out(out_path);
            out << model_json.s << "\n";
        }
        return 0;
    }

    if (explain_cmd->parsed()) {
        ndsa_model* model = nullptr;
        if (ndsa_model_from_file(model_path.c_str(), &model) != NDSA_OK)
            return die("cannot load " + model_path);
        Cleanup info;
        const ndsa_status st = ndsa_explain(model, &opts, &info.s);
        ndsa_model_free(model);
        if (st != NDSA_OK) return die("explain");
        write_output(info.s, json_out);
        return 0;
    }
    return 3;
}
