#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "paramech/hamiltonian.hpp"
#include "paramech/lagrangian.hpp"

namespace paramech {

enum class Formalism { lagrangian, hamiltonian };

std::string to_string(Formalism f);

struct IntegratorConfig {
    IntegrationMethod method = IntegrationMethod::rk4;
    double dt = 1e-3;
    long steps = 1;

    bool operator==(const IntegratorConfig&) const = default;
};

struct OutputConfig {
    std::string path;
    long every = 1;

    bool operator==(const OutputConfig&) const = default;
};

struct ConstraintText {
    std::vector<std::string> a;
    std::vector<std::string> b;

    bool operator==(const ConstraintText&) const = default;
};

struct ScenarioConfig {
    std::string name;
    Formalism formalism = Formalism::lagrangian;
    int dimension = 1;
    std::string function_text;
    DerivativeConvention convention = DerivativeConvention::independent;
    std::vector<ConstraintText> constraints;
    std::vector<double> x, y;       // initial z_i = x_i + j y_i
    std::vector<double> xd, yd;     // lagrangian velocities
    std::vector<double> xbar, ybar; // hamiltonian conjugates (may be defaulted)
    bool explicit_conjugate = false;
    IntegratorConfig integrator;
    OutputConfig output;
    std::map<std::string, double> constants;

    bool operator==(const ScenarioConfig&) const = default;
};

// Whole-identifier textual substitution of named constants, applied to
// expression strings before parsing (this is what allows a constant in an
// integer-exponent position).
std::string substitute_constants(const std::string& text,
                                 const std::map<std::string, double>& constants);

ScenarioConfig parse_scenario_text(const std::string& text, const std::string& source);
ScenarioConfig load_scenario(const std::string& path);
std::string save_scenario(const ScenarioConfig& config);

// central-force | quadratic-h | frozen-2constraint | free-particle |
// anholonomic-demo
ScenarioConfig builtin(const std::string& name);
std::vector<std::string> builtin_names();

struct Trajectory {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

struct DiagnosticsReport {
    std::string scenario;
    double energy_drift = 0.0;
    double max_constraint_residual = 0.0;
    double conjugation_defect_max = 0.0;
    double secondary_residual_max = 0.0;
    HolonomyVerdict holonomy;
    std::set<std::string> flags; // FirstClass, SecondaryResidualHigh, Failed
    long failed_step = -1;
    std::string failure_message;
    std::string convention;
};

struct RunResult {
    Trajectory trajectory;
    DiagnosticsReport report;
};

// Compiled systems straight from a config (exactly one is engaged).
struct CompiledScenario {
    ScenarioConfig config;
    std::optional<CompiledLagrangian> lagrangian;
    std::optional<CompiledHamiltonian> hamiltonian;
    LagrangianState lagrangian_initial;
    HamiltonianState hamiltonian_initial;
};

CompiledScenario compile_scenario(const ScenarioConfig& config);

RunResult run(const ScenarioConfig& config);

// Symbolic equations of motion, the fundamental 2-form, and for the
// central-force scenario the side-by-side derivative comparison.
std::string derive(const ScenarioConfig& config);

enum class EmitFormat { csv, json_report };

void emit(const Trajectory& trajectory, const DiagnosticsReport& report,
          const std::string& path, EmitFormat format);

std::string trajectory_csv(const Trajectory& trajectory);
std::string report_json(const DiagnosticsReport& report);

// Deterministic sample environments around the initial state, for the
// classify subcommand (no run required).
std::vector<EvalEnvironment> classification_samples(const CompiledScenario& scenario,
                                                    int count);

} // namespace paramech
