#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "paramech/scenario.hpp"

namespace {

using namespace paramech;

// Exit codes: 0 success, 2 validation, 3 numerical failure, 4 I/O.
constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitIo = 4;

struct CommonOptions {
    std::string config_path;
    std::string builtin_name;
    std::string out_path;
    std::string format = "csv";
    std::string convention;
    double dt = 0.0;
    long steps = 0;
};

ScenarioConfig resolve_config(const CommonOptions& opt) {
    ScenarioConfig config;
    if (!opt.builtin_name.empty()) {
        config = builtin(opt.builtin_name);
    } else if (!opt.config_path.empty()) {
        config = load_scenario(opt.config_path);
    } else {
        throw ValidationError("config", "pass --config PATH or --builtin NAME");
    }
    if (!opt.convention.empty()) config.convention = convention_from_string(opt.convention);
    if (opt.dt > 0.0) config.integrator.dt = opt.dt;
    if (opt.steps > 0) config.integrator.steps = opt.steps;
    return config;
}

void add_common(CLI::App* cmd, CommonOptions& opt, bool with_overrides) {
    cmd->add_option("--config", opt.config_path, "scenario file path");
    cmd->add_option("--builtin", opt.builtin_name, "builtin scenario name");
    cmd->add_option("--out", opt.out_path, "output file path");
    if (with_overrides) {
        cmd->add_option("--convention", opt.convention, "paper|independent")
            ->check(CLI::IsMember({"paper", "independent"}));
        cmd->add_option("--dt", opt.dt, "integrator step override");
        cmd->add_option("--steps", opt.steps, "step count override");
    }
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open output file: " + path);
    out << text;
    out.flush();
    if (!out) throw IoError("cannot write output file: " + path);
}

int run_command(const CommonOptions& opt) {
    const ScenarioConfig config = resolve_config(opt);
    const RunResult result = run(config);
    const std::string path = opt.out_path.empty() ? config.output.path : opt.out_path;
    const EmitFormat format =
        opt.format == "json-report" ? EmitFormat::json_report : EmitFormat::csv;
    emit(result.trajectory, result.report, path, format);
    std::cout << "scenario " << config.name << ": " << result.trajectory.rows.size()
              << " rows -> " << path << "\n";
    std::cout << "energy drift " << result.report.energy_drift << ", max constraint residual "
              << result.report.max_constraint_residual << ", holonomy "
              << to_string(result.report.holonomy.verdict) << "\n";
    if (result.report.flags.count("Failed")) {
        std::cerr << "run failed at step " << result.report.failed_step << ": "
                  << result.report.failure_message << "\n";
        return kExitNumerical;
    }
    return 0;
}

int derive_command(const CommonOptions& opt) {
    const ScenarioConfig config = resolve_config(opt);
    write_text(opt.out_path, derive(config));
    return 0;
}

int classify_command(const CommonOptions& opt) {
    const ScenarioConfig config = resolve_config(opt);
    const CompiledScenario cs = compile_scenario(config);
    const std::vector<ConstraintForm>& constraints =
        config.formalism == Formalism::lagrangian ? cs.lagrangian->system().constraints
                                                  : cs.hamiltonian->system().constraints;
    const HolonomyVerdict verdict = classify(constraints, config.dimension,
                                             classification_samples(cs, 25), config.convention);
    std::string text = "scenario: " + config.name + "\n";
    text += "constraints: " + std::to_string(constraints.size()) + "\n";
    text += "verdict: " + to_string(verdict.verdict) + "\n";
    text += "witness_value: " + std::to_string(verdict.witness_value) + "\n";
    text += "samples_tested: " + std::to_string(verdict.samples_tested) + "\n";
    write_text(opt.out_path, text);
    return 0;
}

int builtin_command(const std::string& name, const std::string& out_path) {
    write_text(out_path, save_scenario(builtin(name)));
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"paracomplex mechanics engine"};
    app.require_subcommand(1);

    CommonOptions run_opt, derive_opt, classify_opt;
    std::string builtin_name, builtin_out;

    CLI::App* cmd_run = app.add_subcommand("run", "integrate a scenario and emit outputs");
    add_common(cmd_run, run_opt, true);
    cmd_run->add_option("--format", run_opt.format, "csv|json-report")
        ->check(CLI::IsMember({"csv", "json-report"}));

    CLI::App* cmd_derive =
        app.add_subcommand("derive", "print the symbolic equations of motion");
    add_common(cmd_derive, derive_opt, true);

    CLI::App* cmd_classify =
        app.add_subcommand("classify", "holonomy verdict for a scenario's constraints");
    add_common(cmd_classify, classify_opt, true);

    CLI::App* cmd_builtin = app.add_subcommand("builtin", "write a builtin scenario file");
    cmd_builtin->add_option("name", builtin_name, "builtin scenario name")->required();
    cmd_builtin->add_option("--out", builtin_out, "output file path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_run->parsed()) return run_command(run_opt);
        if (cmd_derive->parsed()) return derive_command(derive_opt);
        if (cmd_classify->parsed()) return classify_command(classify_opt);
        if (cmd_builtin->parsed()) return builtin_command(builtin_name, builtin_out);
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const SyntaxError& e) {
        std::cerr << "syntax error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const UnknownScenarioError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const Error& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kExitNumerical;
    }
    return 0;
}
