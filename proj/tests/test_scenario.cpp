#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <fstream>

#include "paramech/scenario.hpp"

using namespace paramech;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

const char* kMinimalFreeParticle =
    "name = minimal\n"
    "formalism = lagrangian\n"
    "dimension = 1\n"
    "function_text = 0.5*zd1*zdb1\n"
    "initial.x = 0\n"
    "initial.y = 0\n"
    "initial.xd = 1\n"
    "initial.yd = 0\n"
    "integrator.dt = 0.001\n"
    "integrator.steps = 10\n";

} // namespace

TEST_CASE("minimal scenario text loads with defaults") {
    const ScenarioConfig c = parse_scenario_text(kMinimalFreeParticle, "test");
    CHECK(c.constraints.empty());
    CHECK(c.convention == DerivativeConvention::independent);
    CHECK(c.integrator.method == IntegrationMethod::rk4);
    CHECK(c.output.every == 1);
    CHECK(c.output.path == "minimal.csv");
}

TEST_CASE("validation points at the offending key") {
    auto expect_key = [](const std::string& text, const std::string& key) {
        try {
            parse_scenario_text(text, "test");
            FAIL("expected ValidationError for ", key);
        } catch (const ValidationError& e) {
            CAPTURE(e.what());
            CHECK(std::string(e.what()).find(key) != std::string::npos);
        }
    };
    std::string bad_dt = kMinimalFreeParticle;
    bad_dt.replace(bad_dt.find("integrator.dt = 0.001"), 21, "integrator.dt = 0");
    expect_key(bad_dt, "integrator.dt");
    expect_key(std::string(kMinimalFreeParticle) + "integrator.dtt = 1\n", "integrator.dtt");
    expect_key(std::string(kMinimalFreeParticle) + "constraint.1.a = 0\n", "constraint.1");

    std::string bad_fn = kMinimalFreeParticle;
    bad_fn.replace(bad_fn.find("function_text = 0.5*zd1*zdb1"), 28,
                   "function_text = 0.5*zd1*qq1_");
    expect_key(bad_fn, "function_text");

    std::string bad_len = kMinimalFreeParticle;
    bad_len.replace(bad_len.find("initial.x = 0"), 13, "initial.x = 0, 1");
    expect_key(bad_len, "initial.x");

    std::string zero_constraint = std::string(kMinimalFreeParticle) +
                                  "constraint.1.a = 0\nconstraint.1.b = 0\n";
    expect_key(zero_constraint, "constraint.1");
}

TEST_CASE("builtins round trip through the serializer") {
    for (const std::string& name : builtin_names()) {
        CAPTURE(name);
        const ScenarioConfig c = builtin(name);
        const ScenarioConfig reloaded = parse_scenario_text(save_scenario(c), name);
        CHECK(c == reloaded);
    }
    CHECK_THROWS_AS(builtin("does-not-exist"), UnknownScenarioError);
    CHECK(builtin("free-particle").function_text == "0.5*zd1*zdb1");
    CHECK(builtin("quadratic-h").function_text == "z1*zb1");
    CHECK(builtin("central-force").constants.at("g_") == 9.8);
}

TEST_CASE("constant substitution is identifier aware") {
    const std::map<std::string, double> constants = {{"alpha_", 2.0}, {"A_", 1.5}};
    CHECK(substitute_constants("sqrt(z1*zb1)^alpha_", constants) == "sqrt(z1*zb1)^2");
    CHECK(substitute_constants("A_*alpha_x + alpha_", constants) == "1.5*alpha_x + 2");
    CHECK(substitute_constants("zalpha_", constants) == "zalpha_");
}

TEST_CASE("derive prints the families and the canonical structures") {
    const std::string free = derive(builtin("free-particle"));
    CHECK(free.find("J*d/dt(0.5*zdb1)") != std::string::npos);
    CHECK(free.find("z1-family") != std::string::npos);

    const std::string quad = derive(builtin("quadratic-h"));
    CHECK(quad.find("dz1/dt = -J*(z1)") != std::string::npos);
    CHECK(quad.find("dzb1/dt = J*(zb1)") != std::string::npos);
    CHECK(quad.find("lambda =") != std::string::npos);

    const std::string frozen = derive(builtin("frozen-2constraint"));
    CHECK(frozen.find("Lam1") != std::string::npos);
    CHECK(frozen.find("constraint 1:") != std::string::npos);

    // zero Hamiltonian derives all-zero right-hand sides
    ScenarioConfig zero = builtin("quadratic-h");
    zero.function_text = "0";
    const std::string z = derive(zero);
    CHECK(z.find("dz1/dt = -J*(0)") != std::string::npos);

    const std::string cf = derive(builtin("central-force"));
    CHECK(cf.find("S (engine dL/dz1)") != std::string::npos);
    CHECK(cf.find("U (engine dL/dzb1)") != std::string::npos);
    CHECK(cf.find("S: max deviation") != std::string::npos);
    CHECK(cf.find("U: max deviation") != std::string::npos);
    CHECK(cf.find("reference term 5") != std::string::npos);
}

TEST_CASE("runs aggregate diagnostics") {
    const RunResult quad = run(builtin("quadratic-h"));
    CHECK(quad.report.energy_drift <= 1e-8);
    CHECK(quad.report.conjugation_defect_max <= 1e-8);
    CHECK(quad.report.flags.empty());
    CHECK(quad.trajectory.rows.size() == 10001);

    const RunResult frozen = run(builtin("frozen-2constraint"));
    CHECK(frozen.report.max_constraint_residual <= 1e-9);
    // state rows are bytewise constant after t = 0
    const auto& rows = frozen.trajectory.rows;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        for (std::size_t c = 1; c < rows[r].size(); ++c) {
            CHECK(rows[r][c] == rows[0][c]);
        }
    }

    const RunResult demo = run(builtin("anholonomic-demo"));
    CHECK(demo.report.holonomy.verdict == Holonomy::anholonomic);
    CHECK(demo.report.flags.count("FirstClass") == 1);
    CHECK(demo.report.conjugation_defect_max > 1.0);

    const RunResult cf = run(builtin("central-force"));
    CHECK(cf.report.flags.count("Failed") == 0);
    CHECK(cf.report.energy_drift <= 1e-6);
}

TEST_CASE("central-force with sheet-symmetric data stays in the domain") {
    ScenarioConfig cfg = builtin("central-force");
    cfg.y = {0.0}; // real initial point; gravity then lifts the jm part
    const RunResult r = run(cfg);
    CHECK(r.report.flags.count("Failed") == 0);
    CHECK(r.trajectory.rows.size() == 1001);
}

TEST_CASE("conj appears in scenario functions") {
    ScenarioConfig cfg = builtin("free-particle");
    cfg.function_text = "0.5*zd1*conj(zd1)"; // same values as zd1*zdb1 here
    cfg.integrator.steps = 100;
    const RunResult a = run(cfg);
    const RunResult b = run(builtin("free-particle"));
    CHECK(a.report.flags.empty());
    for (std::size_t c = 0; c < a.trajectory.rows[100].size(); ++c) {
        CHECK(a.trajectory.rows[100][c] == doctest::Approx(b.trajectory.rows[100][c]));
    }
}

TEST_CASE("the paper convention is selectable end to end") {
    ScenarioConfig cfg = builtin("quadratic-h");
    cfg.convention = DerivativeConvention::paper;
    cfg.integrator.steps = 200;
    const RunResult r = run(cfg);
    CHECK(r.report.flags.count("Failed") == 0);
    CHECK(report_json(r.report).find("\"convention\": \"paper\"") != std::string::npos);
    // under the literal convention the slots swap: dz/dt = -j zbar
    const std::string text = derive(cfg);
    CHECK(text.find("convention: paper") != std::string::npos);
    CHECK(text.find("dz1/dt = -J*(zb1)") != std::string::npos);
}

TEST_CASE("failed runs keep the partial trajectory and the step index") {
    ScenarioConfig cf = builtin("central-force");
    cf.integrator.steps = 10000; // leaves the W domain near t = 1.17
    const RunResult r = run(cf);
    CHECK(r.report.flags.count("Failed") == 1);
    CHECK(r.report.failed_step > 1000);
    CHECK(r.report.failed_step < 1300);
    CHECK(r.report.failure_message.find("sqrt") != std::string::npos);
    CHECK(r.trajectory.rows.size() == static_cast<std::size_t>(r.report.failed_step) + 1);
}

TEST_CASE("emitted files are byte deterministic") {
    const ScenarioConfig c = builtin("quadratic-h");
    const RunResult a = run(c);
    const RunResult b = run(c);
    emit(a.trajectory, a.report, "/tmp/paramech_a.csv", EmitFormat::csv);
    emit(b.trajectory, b.report, "/tmp/paramech_b.csv", EmitFormat::csv);
    CHECK(slurp("/tmp/paramech_a.csv") == slurp("/tmp/paramech_b.csv"));
    emit(a.trajectory, a.report, "/tmp/paramech_a.json", EmitFormat::json_report);
    emit(b.trajectory, b.report, "/tmp/paramech_b.json", EmitFormat::json_report);
    CHECK(slurp("/tmp/paramech_a.json") == slurp("/tmp/paramech_b.json"));
    std::remove("/tmp/paramech_a.csv");
    std::remove("/tmp/paramech_b.csv");
    std::remove("/tmp/paramech_a.json");
    std::remove("/tmp/paramech_b.json");
}

TEST_CASE("csv layout matches the contract") {
    ScenarioConfig c = builtin("free-particle");
    c.integrator.steps = 3;
    const RunResult r = run(c);
    CHECK(r.trajectory.rows.size() == 4); // includes t = 0
    const std::string csv = trajectory_csv(r.trajectory);
    CHECK(csv.rfind("t,x1,y1,xd1,yd1,E_re,E_jm,secondary\n", 0) == 0);
    // 17 significant digits, LF endings
    CHECK(csv.find("0.0000000000000000e+00") != std::string::npos);
    CHECK(csv.find('\r') == std::string::npos);

    ScenarioConfig h = builtin("frozen-2constraint");
    h.integrator.steps = 2;
    const std::string hcsv = trajectory_csv(run(h).trajectory);
    CHECK(hcsv.rfind("t,x1,y1,xbar1,ybar1,E_re,E_jm,res1,res2,defect\n", 0) == 0);
}

TEST_CASE("json report carries every diagnostics field") {
    ScenarioConfig c = builtin("anholonomic-demo");
    c.integrator.steps = 50;
    const RunResult r = run(c);
    const std::string json = report_json(r.report);
    for (const char* key :
         {"\"scenario\"", "\"convention\"", "\"energy_drift\"", "\"max_constraint_residual\"",
          "\"conjugation_defect_max\"", "\"secondary_residual_max\"", "\"holonomy\"",
          "\"verdict\"", "\"witness_value\"", "\"witness_point\"", "\"samples_tested\"",
          "\"flags\"", "\"failed_step\"", "\"failure_message\""}) {
        CAPTURE(key);
        CHECK(json.find(key) != std::string::npos);
    }
    CHECK(json.find("anholonomic") != std::string::npos);
    CHECK(json.find("FirstClass") != std::string::npos);
}

TEST_CASE("output sampling respects every") {
    ScenarioConfig c = builtin("free-particle");
    c.integrator.steps = 10;
    c.output.every = 4;
    const RunResult r = run(c);
    // rows at steps 0, 4, 8 and the final step 10
    CHECK(r.trajectory.rows.size() == 4);
    CHECK(r.trajectory.rows.back()[0] == doctest::Approx(0.01));
}

TEST_CASE("classification samples are deterministic") {
    const CompiledScenario cs = compile_scenario(builtin("anholonomic-demo"));
    const auto a = classification_samples(cs, 25);
    const auto b = classification_samples(cs, 25);
    REQUIRE(a.size() == 25);
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t k = 0; k < a[i].entries().size(); ++k) {
            CHECK(a[i].entries()[k].second == b[i].entries()[k].second);
        }
    }
    const HolonomyVerdict v =
        classify(cs.hamiltonian->system().constraints, 2, a,
                 DerivativeConvention::independent);
    CHECK(v.verdict == Holonomy::anholonomic);
}

TEST_CASE("scenario files load from disk") {
    const std::string path = "/tmp/paramech_scenario_test.txt";
    {
        std::ofstream out(path);
        out << save_scenario(builtin("central-force"));
    }
    const ScenarioConfig c = load_scenario(path);
    CHECK(c == builtin("central-force"));
    std::remove(path.c_str());
    CHECK_THROWS_AS(load_scenario("/tmp/definitely_missing_scenario.txt"), IoError);
}
