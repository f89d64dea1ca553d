#include "nslab/errors.hpp"
#include "nslab/scenario.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using namespace nslab;

namespace {

const fs::path kScenarios = NSLAB_SCENARIOS;

fs::path scratch(const std::string& name) {
    fs::path d = fs::temp_directory_path() / "nslab_cli_test" / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

struct Run {
    int code;
    std::string err;
};

Run nslab_run(const std::string& args, const fs::path& dir) {
    fs::path err = dir / "stderr.txt";
    std::string cmd = std::string("\"") + NSLAB_EXE + "\" " + args + " > \"" + (dir / "stdout.txt").string() +
                      "\" 2> \"" + err.string() + "\"";
    int status = std::system(cmd.c_str());
    int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return {code, slurp(err)};
}

Run run_scenario(const std::string& sub, const fs::path& scenario, const fs::path& out, const std::string& extra = "") {
    return nslab_run(sub + " --scenario \"" + scenario.string() + "\" --out \"" + out.string() + "\" " + extra, out);
}

fs::path write_scenario(const fs::path& dir, const std::string& text) {
    fs::path p = dir / "scenario.json";
    std::ofstream(p) << text;
    return p;
}

const char* kEuclid2 = R"J("model": {"dimension": 2, "H": "0.5*(p1^2+p2^2)"})J";

} // namespace

TEST_CASE("bundled scenarios finish with their expected exit codes") {
    struct Case {
        const char* file;
        const char* sub;
        int code;
    };
    const Case cases[] = {
        {"euclidean_circle_q0", "shift", 0},        {"euclidean_circle_qlin", "shift", 0},
        {"euclidean_circle_qbroken", "shift", 0},   {"euclidean_normal_r3", "residuals", 0},
        {"euclidean_radial_r3", "residuals", 0},    {"euclidean_qconst", "residuals", 0},
        {"euclidean_broken_r3", "residuals", 4},    {"invariance_r3", "invariance", 0},
        {"sphere_nu", "nu", 0},                     {"commutator_identities", "identities", 0},
        {"quartic_legendre", "identities", 0},      {"potential_regularity", "check-regularity", 0},
        {"potential_simulate", "simulate", 0},
    };
    for (const auto& c : cases) {
        CAPTURE(c.file);
        fs::path out = scratch(c.file);
        Run r = run_scenario(c.sub, kScenarios / (std::string(c.file) + ".json"), out);
        CHECK(r.code == c.code);
        auto summary = nlohmann::json::parse(slurp(out / (std::string(c.sub) + ".json")));
        CHECK(summary["pass"].get<bool>() == (c.code == 0));
        // every asserted tolerance is reported with its outcome
        auto sc = nlohmann::json::parse(slurp(kScenarios / (std::string(c.file) + ".json")));
        REQUIRE(summary["asserts"].size() == sc["asserts"].size());
        for (std::size_t i = 0; i < sc["asserts"].size(); ++i) {
            CHECK(summary["asserts"][i]["metric"] == sc["asserts"][i]["metric"]);
            CHECK(summary["asserts"][i].contains("pass"));
        }
    }
}

TEST_CASE("shift on the circle writes one CSV row per node and step") {
    fs::path out = scratch("shift_rows");
    REQUIRE(run_scenario("shift", kScenarios / "euclidean_circle_q0.json", out).code == 0);
    std::ifstream in(out / "shift.csv");
    std::string line;
    std::getline(in, line);
    CHECK(line == "t,y_index,x1,x2,p1,p2,phi1");
    std::size_t rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 31u * 1001u);
    auto summary = nlohmann::json::parse(slurp(out / "shift.json"));
    CHECK(summary["rows"].get<std::size_t>() == rows);
    CHECK(summary["metrics"]["max_phi"].get<double>() <= 1e-6);
}

TEST_CASE("identical runs give byte-identical files") {
    fs::path a = scratch("det_a"), b = scratch("det_b");
    for (const auto& [file, sub] : {std::pair{"euclidean_broken_r3", "residuals"}, {"sphere_nu", "nu"}}) {
        fs::path sc = kScenarios / (std::string(file) + ".json");
        run_scenario(sub, sc, a);
        run_scenario(sub, sc, b);
    }
    int compared = 0;
    for (const auto& e : fs::directory_iterator(a)) {
        if (e.path().filename().string().rfind("std", 0) == 0) continue;
        CAPTURE(e.path().filename().string());
        CHECK(slurp(e.path()) == slurp(b / e.path().filename()));
        ++compared;
    }
    CHECK(compared == 5);
}

TEST_CASE("residual report carries the seed and per-point coordinates") {
    fs::path out = scratch("residual_json");
    run_scenario("residuals", kScenarios / "euclidean_broken_r3.json", out, "--seed 99");
    auto rep = nlohmann::json::parse(slurp(out / "residual_report.json"));
    CHECK(rep["seed"].get<std::uint64_t>() == 99u);
    REQUIRE(rep["points"].size() == 100u);
    CHECK(rep["points"][0]["x"].size() == 3u);
    CHECK(rep["points"][0]["p"].size() == 3u);
    CHECK(rep["points"][0].contains("addProj"));
    CHECK(nlohmann::json::parse(slurp(out / "residuals.json"))["seed"].get<std::uint64_t>() == 99u);

    std::ifstream csv(out / "residual_report.csv");
    std::string header;
    std::getline(csv, header);
    CHECK(header == "point,weakA,weakB,addSym,addProj");

    // a different seed moves the sample
    fs::path other = scratch("residual_json_seed");
    run_scenario("residuals", kScenarios / "euclidean_broken_r3.json", other);
    auto rep2 = nlohmann::json::parse(slurp(other / "residual_report.json"));
    CHECK(rep2["seed"].get<std::uint64_t>() == 7u);
    CHECK(rep2["points"][0]["x"] != rep["points"][0]["x"]);
}

TEST_CASE("input errors exit with code 2 and say where") {
    fs::path dir = scratch("errors");

    Run missing = run_scenario("residuals", dir / "absent.json", dir);
    CHECK(missing.code == 2);
    CHECK(missing.err.find("file not found") != std::string::npos);

    fs::path bad_expr = write_scenario(dir, std::string("{") + kEuclid2 + R"(, "force": {"Q": ["p1 +* 2", "0"]}})");
    Run expr = run_scenario("residuals", bad_expr, dir);
    CHECK(expr.code == 2);
    CHECK(expr.err.find("force.Q") != std::string::npos);
    CHECK(expr.err.find("parse error at 1:") != std::string::npos);

    fs::path bad_json = write_scenario(dir, "{\n  \"model\": {\"dimension\": 2,,}\n}");
    Run js = run_scenario("residuals", bad_json, dir);
    CHECK(js.code == 2);
    CHECK(js.err.find("parse error at 2:") != std::string::npos);

    fs::path unknown = write_scenario(dir, std::string("{") + kEuclid2 + R"(, "run": {"stepsize": 0.1}})");
    Run uk = run_scenario("residuals", unknown, dir);
    CHECK(uk.code == 2);
    CHECK(uk.err.find("run.stepsize") != std::string::npos);

    fs::path no_surface = write_scenario(dir, std::string("{") + kEuclid2 + "}");
    Run ns = run_scenario("shift", no_surface, dir);
    CHECK(ns.code == 2);
    CHECK(ns.err.find("surface") != std::string::npos);

    fs::path bad_metric = write_scenario(dir, std::string("{") + kEuclid2 + R"(, "asserts": [{"metric": "max_phi", "le": 1}]})");
    Run bm = run_scenario("residuals", bad_metric, dir);
    CHECK(bm.code == 2);
    CHECK(bm.err.find("asserts[0].metric") != std::string::npos);

    CHECK(nslab_run("residuals", dir).code == 2);
}

TEST_CASE("numeric failures exit with code 3") {
    fs::path dir = scratch("numeric");
    // Omega = 2 p1 p2 vanishes at the initial momentum.
    fs::path sc = write_scenario(dir, R"({"model": {"dimension": 2, "H": "p1*p2"},
                                         "run": {"x0": [0, 0], "p0": [1, 0]}})");
    Run r = run_scenario("simulate", sc, dir);
    CHECK(r.code == 3);
    CHECK(r.err.find("error:") != std::string::npos);
}

TEST_CASE("scenario parsing reports JSON positions and field names") {
    try {
        parse_scenario("{\n\"model\": [1, 2,\n}");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
    }
    CHECK_THROWS_AS(parse_scenario(R"({"model": {"dimension": 2}})"), ValidationError);
    CHECK_THROWS_WITH_AS(parse_scenario(std::string("{") + kEuclid2 + R"(, "force": {"Q": ["p1"]}})"),
                         doctest::Contains("force.Q"), ValidationError);
    CHECK_THROWS_AS(parse_scenario(R"({"model": {"dimension": 1, "H": "0.5*p1^2"},
                                       "surface": {"chart": ["y1"], "lo": [], "hi": [], "base": []}})"),
                    DimensionTooSmall);
    CHECK_THROWS_WITH_AS(parse_scenario(std::string("{") + kEuclid2 + R"(, "connection": {"gamma": ["0"]}})"),
                         doctest::Contains("connection.gamma"), ValidationError);

    Scenario sc = parse_scenario(std::string("{") + kEuclid2 + R"(, "run": {"x0": [0, 0], "v0": [1, 0]}})");
    CHECK_THROWS_WITH_AS(run_subcommand(sc, "simulate"), doctest::Contains("model.L"), ValidationError);
    CHECK_THROWS_AS(run_subcommand(sc, "plot"), ValidationError);
}

TEST_CASE("asserts compare metrics in both directions") {
    Scenario sc = parse_scenario(std::string("{") + kEuclid2 + R"(,
        "force": {"Q": ["x2", "0"]}, "run": {"points": 10},
        "asserts": [{"metric": "max_weakB", "ge": 1e-3}, {"metric": "max_weakA", "le": 1e-9}]})");
    RunOutput out = run_subcommand(sc, "residuals");
    CHECK(out.asserts_pass);
    CHECK(out.summary["asserts"][0]["pass"].get<bool>());
    sc.asserts[0].ge = 1e6;
    CHECK_FALSE(run_subcommand(sc, "residuals").asserts_pass);
}
