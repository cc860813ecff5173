#include "paramech/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace paramech {

using ordered_json = nlohmann::ordered_json;

std::string to_string(Formalism f) {
    return f == Formalism::lagrangian ? "lagrangian" : "hamiltonian";
}

// ===========================================================================
// Formatting helpers
// ===========================================================================

namespace {

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

// Integral values print without a decimal point so a constant can land in
// an integer-exponent position.
std::string format_constant_value(double v) {
    if (std::isfinite(v) && v == std::floor(v) && std::fabs(v) < 1e15) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.0f", v);
        return buf;
    }
    return format_double(v);
}

std::string format_csv_value(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.16e", v);
    return buf;
}

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(trim(cur));
    return out;
}

double parse_double(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (t.empty() || end != t.c_str() + t.size() || !std::isfinite(v)) {
        throw ValidationError(key, "not a finite number: '" + t + "'");
    }
    return v;
}

long parse_long(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    char* end = nullptr;
    const long v = std::strtol(t.c_str(), &end, 10);
    if (t.empty() || end != t.c_str() + t.size()) {
        throw ValidationError(key, "not an integer: '" + t + "'");
    }
    return v;
}

std::string join_doubles(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        out += format_double(v[i]);
    }
    return out;
}

std::string join_strings(const std::vector<std::string>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        out += v[i];
    }
    return out;
}

} // namespace

// ===========================================================================
// Constant substitution
// ===========================================================================

std::string substitute_constants(const std::string& text,
                                 const std::map<std::string, double>& constants) {
    std::string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        const char c = text[i];
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t j = i;
            while (j < text.size() && (std::isalnum(static_cast<unsigned char>(text[j])) ||
                                       text[j] == '_')) {
                ++j;
            }
            const std::string ident = text.substr(i, j - i);
            auto it = constants.find(ident);
            out += (it != constants.end()) ? format_constant_value(it->second) : ident;
            i = j;
        } else {
            out += c;
            ++i;
        }
    }
    return out;
}

// ===========================================================================
// Scenario text parsing / serialization
// ===========================================================================

namespace {

std::set<std::string> allowed_coordinates(Formalism f, int m) {
    std::set<std::string> out;
    for (int i = 1; i <= m; ++i) {
        out.insert(coordinate_name(CoordFamily::Z, i));
        out.insert(coordinate_name(CoordFamily::Zbar, i));
        if (f == Formalism::lagrangian) {
            out.insert(coordinate_name(CoordFamily::Zdot, i));
            out.insert(coordinate_name(CoordFamily::Zbardot, i));
        }
    }
    return out;
}

ExprPtr parse_checked(const std::string& key, const std::string& text,
                      const ScenarioConfig& config) {
    const std::string substituted = substitute_constants(text, config.constants);
    ExprPtr e;
    try {
        e = parse_expression(substituted);
    } catch (const SyntaxError& err) {
        throw ValidationError(key, err.what());
    }
    const std::set<std::string> allowed =
        allowed_coordinates(config.formalism, config.dimension);
    for (const std::string& name : collect_coordinates(e)) {
        if (!allowed.count(name)) {
            throw ValidationError(key, "unknown identifier '" + name + "'");
        }
    }
    return e;
}

std::vector<double> parse_double_list(const std::string& key, const std::string& text, int m) {
    const std::vector<std::string> parts = split_list(text);
    if (static_cast<int>(parts.size()) != m) {
        throw ValidationError(key, "expected " + std::to_string(m) + " entries");
    }
    std::vector<double> out;
    out.reserve(parts.size());
    for (const std::string& p : parts) out.push_back(parse_double(key, p));
    return out;
}

} // namespace

ScenarioConfig parse_scenario_text(const std::string& text, const std::string& source) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos) {
            throw ValidationError(source + ":" + std::to_string(line_no),
                                  "expected 'key = value'");
        }
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty()) {
            throw ValidationError(source + ":" + std::to_string(line_no), "empty key");
        }
        if (!kv.emplace(key, value).second) {
            throw ValidationError(key, "duplicate key");
        }
    }

    ScenarioConfig config;
    std::set<std::string> used;
    auto take = [&](const std::string& key) -> const std::string* {
        auto it = kv.find(key);
        if (it == kv.end()) return nullptr;
        used.insert(key);
        return &it->second;
    };
    auto require = [&](const std::string& key) -> const std::string& {
        const std::string* v = take(key);
        if (!v) throw ValidationError(key, "missing required key");
        return *v;
    };

    config.name = require("name");
    const std::string formalism = require("formalism");
    if (formalism == "lagrangian") config.formalism = Formalism::lagrangian;
    else if (formalism == "hamiltonian") config.formalism = Formalism::hamiltonian;
    else throw ValidationError("formalism", "must be lagrangian or hamiltonian");

    config.dimension = static_cast<int>(parse_long("dimension", require("dimension")));
    if (config.dimension < 1) throw ValidationError("dimension", "must be >= 1");
    const int m = config.dimension;

    if (const std::string* v = take("convention")) {
        if (*v != "paper" && *v != "independent") {
            throw ValidationError("convention", "must be paper or independent");
        }
        config.convention = convention_from_string(*v);
    }
    config.function_text = require("function_text");

    for (const auto& [key, value] : kv) {
        if (key.rfind("constants.", 0) == 0) {
            const std::string name = key.substr(10);
            if (name.empty()) throw ValidationError(key, "empty constant name");
            config.constants[name] = parse_double(key, value);
            used.insert(key);
        }
    }

    config.x = parse_double_list("initial.x", require("initial.x"), m);
    config.y = parse_double_list("initial.y", require("initial.y"), m);
    if (config.formalism == Formalism::lagrangian) {
        config.xd = parse_double_list("initial.xd", require("initial.xd"), m);
        config.yd = parse_double_list("initial.yd", require("initial.yd"), m);
    } else {
        const std::string* xb = take("initial.xbar");
        const std::string* yb = take("initial.ybar");
        if ((xb == nullptr) != (yb == nullptr)) {
            throw ValidationError("initial.xbar", "xbar and ybar must be given together");
        }
        if (xb) {
            config.explicit_conjugate = true;
            config.xbar = parse_double_list("initial.xbar", *xb, m);
            config.ybar = parse_double_list("initial.ybar", *yb, m);
        } else {
            config.xbar = config.x;
            config.ybar.reserve(m);
            for (double v : config.y) config.ybar.push_back(-v);
        }
    }

    for (int k = 1;; ++k) {
        const std::string base = "constraint." + std::to_string(k);
        const std::string* a = take(base + ".a");
        const std::string* b = take(base + ".b");
        if (!a && !b) break;
        if (!a || !b) throw ValidationError(base, "needs both .a and .b lists");
        ConstraintText ct;
        ct.a = split_list(*a);
        ct.b = split_list(*b);
        if (static_cast<int>(ct.a.size()) != m || static_cast<int>(ct.b.size()) != m) {
            throw ValidationError(base, "coefficient lists must have " + std::to_string(m) +
                                            " entries");
        }
        config.constraints.push_back(std::move(ct));
    }
    if (static_cast<int>(config.constraints.size()) > 2 * m) {
        throw ValidationError("constraint", "count exceeds 2m");
    }

    if (const std::string* v = take("integrator.method")) {
        if (*v != "euler" && *v != "rk4") {
            throw ValidationError("integrator.method", "must be euler or rk4");
        }
        config.integrator.method = method_from_string(*v);
    }
    config.integrator.dt = parse_double("integrator.dt", require("integrator.dt"));
    if (config.integrator.dt <= 0.0) throw ValidationError("integrator.dt", "must be > 0");
    config.integrator.steps = parse_long("integrator.steps", require("integrator.steps"));
    if (config.integrator.steps < 1) throw ValidationError("integrator.steps", "must be >= 1");

    if (const std::string* v = take("output.path")) config.output.path = *v;
    else config.output.path = config.name + ".csv";
    if (const std::string* v = take("output.every")) {
        config.output.every = parse_long("output.every", *v);
        if (config.output.every < 1) throw ValidationError("output.every", "must be >= 1");
    }

    for (const auto& [key, value] : kv) {
        if (!used.count(key)) throw ValidationError(key, "unknown key");
    }

    // Full validation: expressions must parse and reference only declared
    // coordinates. compile_scenario repeats this work cheaply.
    compile_scenario(config);
    return config;
}

ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open scenario file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoError("cannot read scenario file: " + path);
    return parse_scenario_text(buf.str(), path);
}

std::string save_scenario(const ScenarioConfig& config) {
    std::string out;
    out += "name = " + config.name + "\n";
    out += "formalism = " + to_string(config.formalism) + "\n";
    out += "dimension = " + std::to_string(config.dimension) + "\n";
    out += "convention = " + to_string(config.convention) + "\n";
    out += "function_text = " + config.function_text + "\n";
    for (const auto& [k, v] : config.constants) {
        out += "constants." + k + " = " + format_double(v) + "\n";
    }
    out += "initial.x = " + join_doubles(config.x) + "\n";
    out += "initial.y = " + join_doubles(config.y) + "\n";
    if (config.formalism == Formalism::lagrangian) {
        out += "initial.xd = " + join_doubles(config.xd) + "\n";
        out += "initial.yd = " + join_doubles(config.yd) + "\n";
    } else if (config.explicit_conjugate) {
        out += "initial.xbar = " + join_doubles(config.xbar) + "\n";
        out += "initial.ybar = " + join_doubles(config.ybar) + "\n";
    }
    for (std::size_t k = 0; k < config.constraints.size(); ++k) {
        const std::string base = "constraint." + std::to_string(k + 1);
        out += base + ".a = " + join_strings(config.constraints[k].a) + "\n";
        out += base + ".b = " + join_strings(config.constraints[k].b) + "\n";
    }
    out += "integrator.method = " + to_string(config.integrator.method) + "\n";
    out += "integrator.dt = " + format_double(config.integrator.dt) + "\n";
    out += "integrator.steps = " + std::to_string(config.integrator.steps) + "\n";
    out += "output.path = " + config.output.path + "\n";
    out += "output.every = " + std::to_string(config.output.every) + "\n";
    return out;
}

// ===========================================================================
// Builtins
// ===========================================================================

std::vector<std::string> builtin_names() {
    return {"central-force", "quadratic-h", "frozen-2constraint", "free-particle",
            "anholonomic-demo"};
}

ScenarioConfig builtin(const std::string& name) {
    ScenarioConfig c;
    c.name = name;
    c.convention = DerivativeConvention::independent;
    c.integrator = {IntegrationMethod::rk4, 1e-3, 10000};
    c.output = {name + ".csv", 1};
    if (name == "free-particle") {
        c.formalism = Formalism::lagrangian;
        c.dimension = 1;
        c.function_text = "0.5*zd1*zdb1";
        c.x = {0.0};
        c.y = {0.0};
        c.xd = {1.0};
        c.yd = {0.0};
        return c;
    }
    if (name == "quadratic-h") {
        c.formalism = Formalism::hamiltonian;
        c.dimension = 1;
        c.function_text = "z1*zb1";
        // Balanced null data: the growing sheet starts at 0.1 so the
        // components stay within float headroom over the default horizon.
        c.x = {0.55};
        c.y = {0.45};
        c.xbar = c.x;
        c.ybar = {-0.45};
        return c;
    }
    if (name == "frozen-2constraint") {
        c.formalism = Formalism::hamiltonian;
        c.dimension = 1;
        c.function_text = "z1*zb1";
        c.constraints = {{{"1"}, {"0"}}, {{"0"}, {"1"}}};
        c.x = {1.0};
        c.y = {0.3};
        c.xbar = c.x;
        c.ybar = {-0.3};
        return c;
    }
    if (name == "central-force") {
        c.formalism = Formalism::lagrangian;
        c.dimension = 1;
        c.constants = {{"A_", 1.0}, {"alpha_", 2.0}, {"g_", 9.8}, {"m_", 1.0}};
        c.function_text =
            "0.5*m_*zd1*zdb1 - (A_/alpha_)*sqrt(z1*zb1)^alpha_ - "
            "J*m_*g_*(z1-zb1)*sqrt(z1*zb1)/"
            "((z1+zb1)*sqrt(1-(z1-zb1)^2/(z1+zb1)^2))";
        // The flow exits the sqrt domain once |x| falls under |y|; the
        // defaults keep a comfortable margin over the 1000-step horizon.
        c.x = {25.0};
        c.y = {9.8};
        c.xd = {0.0};
        c.yd = {0.0};
        c.integrator.steps = 1000;
        return c;
    }
    if (name == "anholonomic-demo") {
        c.formalism = Formalism::hamiltonian;
        c.dimension = 2;
        c.function_text = "z2";
        c.constraints = {{{"0", "1"}, {"-z1", "0"}}};
        c.x = {0.4, 0.8};
        c.y = {0.1, -0.3};
        c.xbar = c.x;
        c.ybar = {-0.1, 0.3};
        return c;
    }
    throw UnknownScenarioError(name);
}

// ===========================================================================
// Compilation
// ===========================================================================

CompiledScenario compile_scenario(const ScenarioConfig& config) {
    CompiledScenario out;
    out.config = config;
    const int m = config.dimension;
    const ExprPtr fn = parse_checked("function_text", config.function_text, config);

    const ConstraintFlavor flavor = config.formalism == Formalism::lagrangian
                                        ? ConstraintFlavor::lagrangian
                                        : ConstraintFlavor::hamiltonian;
    std::vector<ConstraintForm> constraints;
    for (std::size_t k = 0; k < config.constraints.size(); ++k) {
        const std::string base = "constraint." + std::to_string(k + 1);
        ConstraintForm w;
        w.flavor = flavor;
        for (int i = 0; i < m; ++i) {
            w.a_coeffs.push_back(parse_checked(base + ".a", config.constraints[k].a[i], config));
            w.b_coeffs.push_back(parse_checked(base + ".b", config.constraints[k].b[i], config));
        }
        validate_constraint(w, m, base);
        constraints.push_back(std::move(w));
    }

    auto check_len = [&](const std::vector<double>& v, const char* key) {
        if (static_cast<int>(v.size()) != m) {
            throw ValidationError(key, "expected " + std::to_string(m) + " entries");
        }
    };
    check_len(config.x, "initial.x");
    check_len(config.y, "initial.y");

    if (config.formalism == Formalism::lagrangian) {
        check_len(config.xd, "initial.xd");
        check_len(config.yd, "initial.yd");
        LagrangianSystem sys;
        sys.dimension = m;
        sys.lagrangian = fn;
        sys.constraints = std::move(constraints);
        sys.convention = config.convention;
        out.lagrangian.emplace(std::move(sys));
        LagrangianState s0;
        s0.t = 0.0;
        for (int i = 0; i < m; ++i) {
            s0.z.push_back({config.x[i], config.y[i]});
            s0.zdot.push_back({config.xd[i], config.yd[i]});
        }
        out.lagrangian_initial = std::move(s0);
    } else {
        check_len(config.xbar, "initial.xbar");
        check_len(config.ybar, "initial.ybar");
        HamiltonianSystem sys;
        sys.dimension = m;
        sys.hamiltonian = fn;
        sys.constraints = std::move(constraints);
        sys.convention = config.convention;
        out.hamiltonian.emplace(std::move(sys));
        HamiltonianState s0;
        s0.t = 0.0;
        for (int i = 0; i < m; ++i) {
            s0.z.push_back({config.x[i], config.y[i]});
            s0.zbar.push_back({config.xbar[i], config.ybar[i]});
        }
        out.hamiltonian_initial = std::move(s0);
    }
    return out;
}

// ===========================================================================
// Run
// ===========================================================================

namespace {

std::vector<std::size_t> holonomy_sample_indices(std::size_t n_states) {
    std::vector<std::size_t> out;
    out.reserve(25);
    for (int k = 0; k < 25; ++k) {
        out.push_back(n_states <= 1 ? 0 : (k * (n_states - 1)) / 24);
    }
    return out;
}

void classify_into(DiagnosticsReport& report, const std::vector<ConstraintForm>& constraints,
                   int m, const std::vector<EvalEnvironment>& samples,
                   DerivativeConvention conv) {
    try {
        report.holonomy = classify(constraints, m, samples, conv);
    } catch (const DimensionError&) {
        report.holonomy.verdict = Holonomy::inconclusive;
        report.holonomy.samples_tested = 0;
        report.flags.insert("DimensionTooSmall");
    }
}

} // namespace

RunResult run(const ScenarioConfig& config) {
    CompiledScenario cs = compile_scenario(config);
    const int m = config.dimension;
    const long steps = config.integrator.steps;
    const long every = config.output.every;
    const double dt = config.integrator.dt;
    const IntegrationMethod method = config.integrator.method;
    const std::size_t n_constraints = config.constraints.size();

    RunResult out;
    out.report.scenario = config.name;
    out.report.convention = to_string(config.convention);
    Trajectory& traj = out.trajectory;
    DiagnosticsReport& rep = out.report;

    traj.columns.push_back("t");
    for (int i = 1; i <= m; ++i) traj.columns.push_back("x" + std::to_string(i));
    for (int i = 1; i <= m; ++i) traj.columns.push_back("y" + std::to_string(i));
    if (config.formalism == Formalism::lagrangian) {
        for (int i = 1; i <= m; ++i) traj.columns.push_back("xd" + std::to_string(i));
        for (int i = 1; i <= m; ++i) traj.columns.push_back("yd" + std::to_string(i));
    } else {
        for (int i = 1; i <= m; ++i) traj.columns.push_back("xbar" + std::to_string(i));
        for (int i = 1; i <= m; ++i) traj.columns.push_back("ybar" + std::to_string(i));
    }
    traj.columns.push_back("E_re");
    traj.columns.push_back("E_jm");
    for (std::size_t a = 1; a <= n_constraints; ++a) {
        traj.columns.push_back("res" + std::to_string(a));
    }
    traj.columns.push_back(config.formalism == Formalism::lagrangian ? "secondary" : "defect");

    bool have_e0 = false;
    ParaNumber e0;
    auto note_energy = [&](const ParaNumber& e) {
        if (!have_e0) {
            e0 = e;
            have_e0 = true;
        }
        rep.energy_drift = std::max(rep.energy_drift, mag(e - e0));
    };

    if (config.formalism == Formalism::lagrangian) {
        const CompiledLagrangian& eng = *cs.lagrangian;
        std::vector<LagrangianState> states;
        states.reserve(steps + 1);
        LagrangianState state = cs.lagrangian_initial;
        for (long k = 0; k <= steps; ++k) {
            try {
                const ELSolveResult r = eng.solve_el(state, /*want_secondary=*/true);
                const ParaNumber e = eng.energy(state);
                note_energy(e);
                rep.secondary_residual_max =
                    std::max(rep.secondary_residual_max, r.secondary_residual);
                const std::vector<ParaNumber> cv = eng.constraint_values(state, r.zddot);
                for (const ParaNumber& v : cv) {
                    rep.max_constraint_residual = std::max(rep.max_constraint_residual, mag(v));
                }
                states.push_back(state);
                if (k % every == 0 || k == steps) {
                    std::vector<double> row;
                    row.push_back(state.t);
                    for (int i = 0; i < m; ++i) row.push_back(state.z[i].re());
                    for (int i = 0; i < m; ++i) row.push_back(state.z[i].jm());
                    for (int i = 0; i < m; ++i) row.push_back(state.zdot[i].re());
                    for (int i = 0; i < m; ++i) row.push_back(state.zdot[i].jm());
                    row.push_back(e.re());
                    row.push_back(e.jm());
                    for (const ParaNumber& v : cv) row.push_back(mag(v));
                    row.push_back(r.secondary_residual);
                    traj.rows.push_back(std::move(row));
                }
                if (k == steps) break;
                state = eng.step(state, dt, method);
            } catch (const Error& e) {
                rep.flags.insert("Failed");
                rep.failed_step = k;
                rep.failure_message = e.what();
                break;
            }
        }
        if (rep.secondary_residual_max > 1e-6) rep.flags.insert("SecondaryResidualHigh");
        std::vector<EvalEnvironment> samples;
        for (std::size_t idx : holonomy_sample_indices(states.size())) {
            samples.push_back(eng.environment(states[idx]));
        }
        if (!samples.empty()) {
            classify_into(rep, eng.system().constraints, m, samples, config.convention);
        }
    } else {
        const CompiledHamiltonian& eng = *cs.hamiltonian;
        std::vector<HamiltonianState> states;
        states.reserve(steps + 1);
        HamiltonianState state = cs.hamiltonian_initial;
        for (long k = 0; k <= steps; ++k) {
            try {
                MultiplierSolution sol;
                const VectorFieldValue field = eng.total_field(state, &sol);
                if (sol.first_class) rep.flags.insert("FirstClass");
                const ParaNumber e = eng.energy(state);
                note_energy(e);
                const double defect = conjugation_defect(state);
                rep.conjugation_defect_max = std::max(rep.conjugation_defect_max, defect);
                const std::vector<ParaNumber> cv = eng.constraint_values(state, field);
                for (const ParaNumber& v : cv) {
                    rep.max_constraint_residual = std::max(rep.max_constraint_residual, mag(v));
                }
                states.push_back(state);
                if (k % every == 0 || k == steps) {
                    std::vector<double> row;
                    row.push_back(state.t);
                    for (int i = 0; i < m; ++i) row.push_back(state.z[i].re());
                    for (int i = 0; i < m; ++i) row.push_back(state.z[i].jm());
                    for (int i = 0; i < m; ++i) row.push_back(state.zbar[i].re());
                    for (int i = 0; i < m; ++i) row.push_back(state.zbar[i].jm());
                    row.push_back(e.re());
                    row.push_back(e.jm());
                    for (const ParaNumber& v : cv) row.push_back(mag(v));
                    row.push_back(defect);
                    traj.rows.push_back(std::move(row));
                }
                if (k == steps) break;
                state = eng.step(state, dt, method);
            } catch (const Error& e) {
                rep.flags.insert("Failed");
                rep.failed_step = k;
                rep.failure_message = e.what();
                break;
            }
        }
        std::vector<EvalEnvironment> samples;
        for (std::size_t idx : holonomy_sample_indices(states.size())) {
            samples.push_back(eng.environment(states[idx]));
        }
        if (!samples.empty()) {
            classify_into(rep, eng.system().constraints, m, samples, config.convention);
        }
    }
    return out;
}

// ===========================================================================
// Derive
// ===========================================================================

namespace {

std::string multiplier_terms(const std::vector<ConstraintForm>& cons, int i, bool a_side) {
    std::string out;
    for (std::size_t k = 0; k < cons.size(); ++k) {
        const ExprPtr c = simplify(a_side ? cons[k].a_coeffs[i] : cons[k].b_coeffs[i]);
        if (is_constant_zero(c)) continue;
        if (!out.empty()) out += " + ";
        out += "Lam" + std::to_string(k + 1) + "*(" + to_string(c) + ")";
    }
    return out.empty() ? "0" : out;
}

// Deterministic offsets for sampling expressions near the initial point.
std::vector<double> sample_offsets(int count) {
    std::vector<double> out;
    out.reserve(count);
    unsigned long long s = 0x243f6a8885a308d3ull; // fixed seed
    for (int i = 0; i < count; ++i) {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        out.push_back((static_cast<double>(s % 20001) / 20000.0 - 0.5) * 0.2);
    }
    return out;
}

struct TermComparison {
    double max_deviation = 0.0;
    int samples_used = 0;
    std::vector<ParaNumber> worst_terms; // reference terms at the worst point
    ParaNumber worst_engine;
    ParaNumber worst_reference_sum;
};

TermComparison compare_terms(const ExprPtr& engine, const std::vector<ExprPtr>& reference_terms,
                             const std::vector<EvalEnvironment>& samples) {
    TermComparison out;
    for (const EvalEnvironment& env : samples) {
        try {
            const ParaNumber ev = evaluate(engine, env);
            ParaNumber sum{};
            std::vector<ParaNumber> terms;
            terms.reserve(reference_terms.size());
            for (const ExprPtr& t : reference_terms) {
                const ParaNumber v = evaluate(t, env);
                terms.push_back(v);
                sum += v;
            }
            ++out.samples_used;
            const double dev = mag(ev - sum);
            if (dev >= out.max_deviation) {
                out.max_deviation = dev;
                out.worst_terms = std::move(terms);
                out.worst_engine = ev;
                out.worst_reference_sum = sum;
            }
        } catch (const Error&) {
            // skip samples outside the expression domain
        }
    }
    return out;
}

void append_comparison(std::string& out, const char* label, const TermComparison& c) {
    out += std::string(label) + ": max deviation " + format_double(c.max_deviation) + " over " +
           std::to_string(c.samples_used) + " samples\n";
    out += std::string(label) + " engine value at worst point: " + to_string(c.worst_engine) +
           "\n";
    out += std::string(label) + " reference sum at worst point: " +
           to_string(c.worst_reference_sum) + "\n";
    for (std::size_t i = 0; i < c.worst_terms.size(); ++i) {
        out += std::string(label) + " reference term " + std::to_string(i + 1) + ": " +
               to_string(c.worst_terms[i]) + "\n";
    }
}

} // namespace

std::string derive(const ScenarioConfig& config) {
    CompiledScenario cs = compile_scenario(config);
    const int m = config.dimension;
    std::string out;
    out += "scenario: " + config.name + "\n";
    out += "formalism: " + to_string(config.formalism) + "\n";
    out += "convention: " + to_string(config.convention) + "\n";

    if (config.formalism == Formalism::lagrangian) {
        const CompiledLagrangian& eng = *cs.lagrangian;
        const SlotSpace pos_space = SlotSpace::cotangent(m);
        const TwoForm phi =
            kahler_form(eng.system().lagrangian, pos_space, config.convention);
        out += "Phi_L = " + to_string(phi, pos_space) + "\n";
        for (int i = 0; i < m; ++i) {
            const std::string dz = to_string(simplify(eng.dLdz(i)));
            const std::string dv = to_string(simplify(eng.dLdv(i)));
            out += "z" + std::to_string(i + 1) + "-family:  (" + dz + ") + J*d/dt(" + dz +
                   ") = " + multiplier_terms(eng.system().constraints, i, /*a_side=*/true) + "\n";
            out += "zd" + std::to_string(i + 1) + "-family: (" + dv + ") - J*d/dt(" + dv +
                   ") = " + multiplier_terms(eng.system().constraints, i, /*a_side=*/false) +
                   "\n";
        }
        out += "E_L = " + to_string(simplify(eng.energy_expression())) + "\n";
    } else {
        const CompiledHamiltonian& eng = *cs.hamiltonian;
        const SlotSpace space = SlotSpace::cotangent(m);
        const auto [lambda, phi] = canonical_structures(m);
        out += "lambda = " + to_string(lambda, space) + "\n";
        out += "Phi = " + to_string(phi, space) + "\n";
        const auto& cons = eng.system().constraints;
        for (int i = 0; i < m; ++i) {
            std::string bz = to_string(simplify(eng.dHdzb(i)));
            std::string az = to_string(simplify(eng.dHdz(i)));
            const std::string lam_b = multiplier_terms(cons, i, /*a_side=*/false);
            const std::string lam_a = multiplier_terms(cons, i, /*a_side=*/true);
            if (lam_b != "0") bz += " + " + lam_b;
            if (lam_a != "0") az += " + " + lam_a;
            out += "dz" + std::to_string(i + 1) + "/dt = -J*(" + bz + ")\n";
            out += "dzb" + std::to_string(i + 1) + "/dt = J*(" + az + ")\n";
        }
        for (std::size_t a = 0; a < cons.size(); ++a) {
            std::string line = "constraint " + std::to_string(a + 1) + ": 0 =";
            bool first = true;
            for (int i = 0; i < m; ++i) {
                const ExprPtr ac = simplify(cons[a].a_coeffs[i]);
                const ExprPtr bc = simplify(cons[a].b_coeffs[i]);
                if (!is_constant_zero(ac)) {
                    line += std::string(first ? " " : " + ") + "(" + to_string(ac) + ")*dz" +
                            std::to_string(i + 1) + "/dt";
                    first = false;
                }
                if (!is_constant_zero(bc)) {
                    line += std::string(first ? " " : " + ") + "(" + to_string(bc) + ")*dzb" +
                            std::to_string(i + 1) + "/dt";
                    first = false;
                }
            }
            out += line + "\n";
        }
    }

    if (config.name == "central-force" && config.formalism == Formalism::lagrangian && m == 1) {
        const CompiledLagrangian& eng = *cs.lagrangian;
        const std::string W = "sqrt(1-(z1-zb1)^2/(z1+zb1)^2)";
        const std::vector<std::string> s_terms = {
            "-(A_/(2*z1))*sqrt(z1*zb1)^alpha_",
            "-J*m_*g_*(z1-zb1)*zb1/(2*sqrt(z1*zb1)*(z1+zb1)*" + W + ")",
            "-J*m_*g_*sqrt(z1*zb1)/((z1+zb1)*" + W + ")",
            "J*m_*g_*sqrt(z1*zb1)*(z1-zb1)/((z1+zb1)^2*" + W + ")",
            "J*m_*g_*sqrt(z1*zb1)*(z1-zb1)*(-(z1-zb1)/(z1+zb1)^2+(z1-zb1)^2/(z1+zb1)^3)/"
            "((z1+zb1)*" + W + "^3)"};
        const std::vector<std::string> u_terms = {
            "-(A_/(2*zb1))*sqrt(z1*zb1)^alpha_",
            "-J*m_*g_*(z1-zb1)*z1/(2*sqrt(z1*zb1)*(z1+zb1)*" + W + ")",
            "J*m_*g_*sqrt(z1*zb1)/((z1+zb1)*" + W + ")",
            "J*m_*g_*sqrt(z1*zb1)*(z1-zb1)/((z1+zb1)^2*" + W + ")",
            "J*m_*g_*sqrt(z1*zb1)*(z1-zb1)*((z1-zb1)/(z1+zb1)^2+(z1-zb1)^2/(z1+zb1)^3)/"
            "((z1+zb1)*" + W + "^3)"};
        auto parse_terms = [&](const std::vector<std::string>& texts) {
            std::vector<ExprPtr> out_terms;
            for (const std::string& t : texts) {
                out_terms.push_back(
                    parse_expression(substitute_constants(t, config.constants)));
            }
            return out_terms;
        };
        const std::vector<ExprPtr> sref = parse_terms(s_terms);
        const std::vector<ExprPtr> uref = parse_terms(u_terms);

        std::vector<EvalEnvironment> samples;
        const std::vector<double> offs = sample_offsets(32);
        for (int k = 0; k < 8; ++k) {
            LagrangianState st = cs.lagrangian_initial;
            st.z[0] = ParaNumber{st.z[0].re() * (1.0 + offs[4 * k]),
                                 st.z[0].jm() * (1.0 + offs[4 * k + 1])};
            st.zdot[0] = ParaNumber{st.zdot[0].re() + offs[4 * k + 2],
                                    st.zdot[0].jm() + offs[4 * k + 3]};
            samples.push_back(eng.environment(st));
        }
        out += "S (engine dL/dz1) = " + to_string(simplify(eng.dLdz(0))) + "\n";
        out += "U (engine dL/dzb1) = " + to_string(simplify(eng.dLdzb(0))) + "\n";
        for (std::size_t i = 0; i < s_terms.size(); ++i) {
            out += "S reference term " + std::to_string(i + 1) + " = " +
                   substitute_constants(s_terms[i], config.constants) + "\n";
        }
        for (std::size_t i = 0; i < u_terms.size(); ++i) {
            out += "U reference term " + std::to_string(i + 1) + " = " +
                   substitute_constants(u_terms[i], config.constants) + "\n";
        }
        append_comparison(out, "S", compare_terms(eng.dLdz(0), sref, samples));
        append_comparison(out, "U", compare_terms(eng.dLdzb(0), uref, samples));
    }
    return out;
}

// ===========================================================================
// Emission
// ===========================================================================

std::string trajectory_csv(const Trajectory& trajectory) {
    std::string out;
    for (std::size_t i = 0; i < trajectory.columns.size(); ++i) {
        if (i) out += ",";
        out += trajectory.columns[i];
    }
    out += "\n";
    for (const std::vector<double>& row : trajectory.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ",";
            out += format_csv_value(row[i]);
        }
        out += "\n";
    }
    return out;
}

std::string report_json(const DiagnosticsReport& report) {
    ordered_json j;
    j["scenario"] = report.scenario;
    j["convention"] = report.convention;
    j["energy_drift"] = report.energy_drift;
    j["max_constraint_residual"] = report.max_constraint_residual;
    j["conjugation_defect_max"] = report.conjugation_defect_max;
    j["secondary_residual_max"] = report.secondary_residual_max;
    ordered_json h;
    h["verdict"] = to_string(report.holonomy.verdict);
    h["witness_value"] = report.holonomy.witness_value;
    ordered_json point = ordered_json::object();
    for (const auto& [name, value] : report.holonomy.witness_point.entries()) {
        point[name] = {value.re(), value.jm()};
    }
    h["witness_point"] = point;
    h["samples_tested"] = report.holonomy.samples_tested;
    j["holonomy"] = h;
    j["flags"] = std::vector<std::string>(report.flags.begin(), report.flags.end());
    j["failed_step"] = report.failed_step;
    j["failure_message"] = report.failure_message;
    return j.dump(2) + "\n";
}

void emit(const Trajectory& trajectory, const DiagnosticsReport& report,
          const std::string& path, EmitFormat format) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open output file: " + path);
    if (format == EmitFormat::csv) {
        out << trajectory_csv(trajectory);
    } else {
        out << report_json(report);
    }
    out.flush();
    if (!out) throw IoError("cannot write output file: " + path);
}

std::vector<EvalEnvironment> classification_samples(const CompiledScenario& scenario,
                                                    int count) {
    std::vector<EvalEnvironment> out;
    const std::vector<double> offs = sample_offsets(count * 4 * scenario.config.dimension);
    std::size_t idx = 0;
    for (int k = 0; k < count; ++k) {
        if (scenario.config.formalism == Formalism::lagrangian) {
            LagrangianState st = scenario.lagrangian_initial;
            for (auto& v : st.z) {
                v = ParaNumber{v.re() + offs[idx], v.jm() + offs[idx + 1]};
                idx += 2;
            }
            for (auto& v : st.zdot) {
                v = ParaNumber{v.re() + offs[idx], v.jm() + offs[idx + 1]};
                idx += 2;
            }
            out.push_back(scenario.lagrangian->environment(st));
        } else {
            HamiltonianState st = scenario.hamiltonian_initial;
            for (auto& v : st.z) {
                v = ParaNumber{v.re() + offs[idx], v.jm() + offs[idx + 1]};
                idx += 2;
            }
            for (auto& v : st.zbar) {
                v = ParaNumber{v.re() + offs[idx], v.jm() + offs[idx + 1]};
                idx += 2;
            }
            out.push_back(scenario.hamiltonian->environment(st));
        }
    }
    return out;
}

} // namespace paramech
