#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <ndsa.h>

#include <json.hpp>

#include <string>

using nlohmann::json;

namespace {

// chain2: subsystem 0 drives subsystem 1 through the SCM, only subsystem 1
// measures, only subsystem 0 is actuated.
const char* kChain2 = R"({
  "version": 1,
  "mode": "numeric",
  "subsystems": [
    {"id": "head", "dims": {"x": 1, "v": 1, "z": 1, "u": 1, "y": 0},
     "matrices": {"E": [[1]], "A_xx": [[0]], "A_xv": [[0]], "B_x": [[1]],
                  "A_zx": [[1]], "A_zv": [[0]], "B_z": [[0]],
                  "C_x": [], "C_v": [], "D_u": []}},
    {"id": "tail", "dims": {"x": 1, "v": 1, "z": 1, "u": 0, "y": 1},
     "matrices": {"E": [[1]], "A_xx": [[0]], "A_xv": [[1]], "B_x": [[]],
                  "A_zx": [[0]], "A_zv": [[0]], "B_z": [[]],
                  "C_x": [[1]], "C_v": [[0]], "D_u": [[]]}}
  ],
  "scm": {"entries": [[1, 0, 1.0]]}
})";

struct Str {
    char* s = nullptr;
    ~Str() { ndsa_string_free(s); }
};

}  // namespace

TEST_CASE("model parse, check and verdict codes") {
    ndsa_model* model = nullptr;
    REQUIRE(ndsa_model_from_json(kChain2, &model) == NDSA_OK);

    ndsa_options opts;
    ndsa_options_init(&opts);
    CHECK(opts.rel_rank_tol == 1e-9);

    for (const char* check : {"regularity", "observability", "controllability"}) {
        Str rep;
        REQUIRE(ndsa_run_check(model, check, &opts, &rep.s) == NDSA_OK);
        const json j = json::parse(rep.s);
        CHECK(j.at("check").get<std::string>() != "");
        CHECK(j.at("verdict") == "pass");
        CHECK(j.contains("timings_ms"));
        CHECK(ndsa_report_verdict_code(rep.s) == 0);
    }

    Str bad;
    CHECK(ndsa_run_check(model, "nonsense", &opts, &bad.s) == NDSA_ERR_INVALID_ARGUMENT);
    CHECK(std::string(ndsa_last_error()).find("unknown check") != std::string::npos);

    Str info;
    REQUIRE(ndsa_explain(model, &opts, &info.s) == NDSA_OK);
    const json j = json::parse(info.s);
    CHECK(j.at("wellposed") == true);
    CHECK(j.at("subsystems").size() == 2);

    ndsa_model_free(model);
}

TEST_CASE("failing model produces exit code 1 and certificates") {
    std::string no_c = kChain2;
    const auto pos = no_c.find("\"C_x\": [[1]]");
    REQUIRE(pos != std::string::npos);
    no_c.replace(pos, 12, "\"C_x\": [[0]]");
    ndsa_model* model = nullptr;
    REQUIRE(ndsa_model_from_json(no_c.c_str(), &model) == NDSA_OK);
    ndsa_options opts;
    ndsa_options_init(&opts);
    Str rep;
    REQUIRE(ndsa_run_check(model, "observability", &opts, &rep.s) == NDSA_OK);
    CHECK(ndsa_report_verdict_code(rep.s) == 1);
    const json j = json::parse(rep.s);
    CHECK(j.at("verdict") == "fail");
    REQUIRE_FALSE(j.at("certificates").empty());
    const json& cert = j.at("certificates").at(0);
    CHECK(std::abs(cert.at("lambda").at("re").get<double>()) < 1e-9);
    CHECK_FALSE(cert.at("witness").empty());
    ndsa_model_free(model);
}

TEST_CASE("report and model JSON round trips are byte identical") {
    ndsa_model* model = nullptr;
    REQUIRE(ndsa_model_from_json(kChain2, &model) == NDSA_OK);
    Str a;
    REQUIRE(ndsa_model_to_json(model, -1, &a.s) == NDSA_OK);
    ndsa_model* reparsed = nullptr;
    REQUIRE(ndsa_model_from_json(a.s, &reparsed) == NDSA_OK);
    Str b;
    REQUIRE(ndsa_model_to_json(reparsed, -1, &b.s) == NDSA_OK);
    CHECK(std::string(a.s) == std::string(b.s));
    ndsa_model_free(model);
    ndsa_model_free(reparsed);

    ndsa_options opts;
    ndsa_options_init(&opts);
    ndsa_model* m2 = nullptr;
    REQUIRE(ndsa_model_from_json(kChain2, &m2) == NDSA_OK);
    Str rep;
    REQUIRE(ndsa_run_check(m2, "observability", &opts, &rep.s) == NDSA_OK);
    const std::string once = rep.s;
    const std::string twice = json::parse(once).dump();
    CHECK(once == twice);
    ndsa_model_free(m2);
}

TEST_CASE("error codes") {
    ndsa_model* model = nullptr;
    CHECK(ndsa_model_from_json("not json", &model) == NDSA_ERR_PARSE);
    CHECK(ndsa_model_from_file("/nonexistent/path.json", &model) == NDSA_ERR_PARSE);
    CHECK(ndsa_model_from_json(nullptr, &model) == NDSA_ERR_INVALID_ARGUMENT);

    std::string bad_dims = kChain2;
    const auto pos = bad_dims.find("\"A_xv\": [[0]]");
    bad_dims.replace(pos, 13, "\"A_xv\": [[0],[1]]");
    CHECK(ndsa_model_from_json(bad_dims.c_str(), &model) == NDSA_ERR_DIMENSION);
    CHECK(std::string(ndsa_last_error()).find("A_xv") != std::string::npos);
}

TEST_CASE("random model generation and verify through the C API") {
    Str m1, m2;
    const char* spec = R"({"seed": 42, "n_subsystems": [1, 3]})";
    REQUIRE(ndsa_random_model(spec, &m1.s) == NDSA_OK);
    REQUIRE(ndsa_random_model(spec, &m2.s) == NDSA_OK);
    CHECK(std::string(m1.s) == std::string(m2.s));

    ndsa_model* model = nullptr;
    REQUIRE(ndsa_model_from_json(m1.s, &model) == NDSA_OK);
    ndsa_model_free(model);

    ndsa_options opts;
    ndsa_options_init(&opts);
    Str summary;
    REQUIRE(ndsa_verify(R"({"seed": 7})", 25, &opts, &summary.s) == NDSA_OK);
    const json j = json::parse(summary.s);
    CHECK(j.at("count") == 25);
    CHECK(j.at("agreements") == 25);
    CHECK(j.at("disagreements").empty());

    Str summary2;
    REQUIRE(ndsa_verify(R"({"seed": 7})", 25, &opts, &summary2.s) == NDSA_OK);
    CHECK(std::string(summary.s) == std::string(summary2.s));
}
