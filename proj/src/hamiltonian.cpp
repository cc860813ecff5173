#include "paramech/hamiltonian.hpp"

#include <cmath>

#include "paramech/linalg.hpp"

namespace paramech {

double conjugation_defect(const HamiltonianState& state) {
    double worst = 0.0;
    for (std::size_t i = 0; i < state.z.size(); ++i) {
        worst = std::max(worst, mag(state.zbar[i] - conj(state.z[i])));
    }
    return worst;
}

namespace {

ParaNumber eval_or_zero(const ExprPtr& e, const EvalEnvironment& env) {
    return is_constant_zero(e) ? ParaNumber{} : evaluate(e, env);
}

} // namespace

CompiledHamiltonian::CompiledHamiltonian(HamiltonianSystem sys) : sys_(std::move(sys)) {
    const int m = sys_.dimension;
    if (m < 1) throw ValidationError("dimension", "must be >= 1");
    if (!sys_.hamiltonian) throw ValidationError("function_text", "missing Hamiltonian");
    if (static_cast<int>(sys_.constraints.size()) > 2 * m) {
        throw ValidationError("constraints", "count exceeds 2m");
    }
    dHdz_.resize(m);
    dHdzb_.resize(m);
    for (int i = 0; i < m; ++i) {
        dHdz_[i] = wirtinger_derivative(sys_.hamiltonian, i + 1, CoordFamily::Z, sys_.convention);
        dHdzb_[i] =
            wirtinger_derivative(sys_.hamiltonian, i + 1, CoordFamily::Zbar, sys_.convention);
    }
    int label = 0;
    for (const ConstraintForm& w : sys_.constraints) {
        ++label;
        if (w.flavor != ConstraintFlavor::hamiltonian) {
            throw ValidationError("constraint." + std::to_string(label),
                                  "hamiltonian system needs hamiltonian-flavor constraints");
        }
        validate_constraint(w, m, "constraint." + std::to_string(label));
    }
}

EvalEnvironment CompiledHamiltonian::environment(const HamiltonianState& state) const {
    const int m = sys_.dimension;
    EvalEnvironment env(state.t);
    for (int i = 0; i < m; ++i) {
        env.bind(coordinate_name(CoordFamily::Z, i + 1), state.z[i]);
        env.bind(coordinate_name(CoordFamily::Zbar, i + 1), state.zbar[i]);
    }
    return env;
}

VectorFieldValue CompiledHamiltonian::hamiltonian_field(const HamiltonianState& state) const {
    const int m = sys_.dimension;
    const EvalEnvironment env = environment(state);
    VectorFieldValue out = VectorFieldValue::zero(m);
    const ParaNumber mj{0.0, -1.0}, pj{0.0, 1.0};
    for (int i = 0; i < m; ++i) {
        out.z_components[i] = mj * eval_or_zero(dHdzb_[i], env);
        out.zbar_components[i] = pj * eval_or_zero(dHdz_[i], env);
    }
    return out;
}

VectorFieldValue constraint_field(const ConstraintForm& omega, const EvalEnvironment& env) {
    const int m = static_cast<int>(omega.a_coeffs.size());
    VectorFieldValue out = VectorFieldValue::zero(m);
    const ParaNumber mj{0.0, -1.0}, pj{0.0, 1.0};
    for (int i = 0; i < m; ++i) {
        out.z_components[i] = mj * eval_or_zero(omega.b_coeffs[i], env);
        out.zbar_components[i] = pj * eval_or_zero(omega.a_coeffs[i], env);
    }
    return out;
}

MultiplierSystem CompiledHamiltonian::multiplier_system(const HamiltonianState& state) const {
    const int m = sys_.dimension;
    const std::size_t s = sys_.constraints.size();
    const EvalEnvironment env = environment(state);
    std::vector<std::vector<ParaNumber>> A(s, std::vector<ParaNumber>(m));
    std::vector<std::vector<ParaNumber>> B(s, std::vector<ParaNumber>(m));
    for (std::size_t a = 0; a < s; ++a) {
        for (int i = 0; i < m; ++i) {
            A[a][i] = eval_or_zero(sys_.constraints[a].a_coeffs[i], env);
            B[a][i] = eval_or_zero(sys_.constraints[a].b_coeffs[i], env);
        }
    }
    std::vector<ParaNumber> hz(m), hzb(m);
    for (int i = 0; i < m; ++i) {
        hz[i] = eval_or_zero(dHdz_[i], env);
        hzb[i] = eval_or_zero(dHdzb_[i], env);
    }

    // Antisymmetric by construction: C + C^T = 0 exactly.
    MultiplierSystem out;
    out.c.assign(s, std::vector<ParaNumber>(s));
    out.r.assign(s, ParaNumber{});
    for (std::size_t a = 0; a < s; ++a) {
        for (std::size_t b = 0; b < s; ++b) {
            ParaNumber acc{};
            for (int i = 0; i < m; ++i) acc += B[a][i] * A[b][i] - A[a][i] * B[b][i];
            out.c[a][b] = acc;
        }
        ParaNumber acc{};
        for (int i = 0; i < m; ++i) acc += A[a][i] * hzb[i] - B[a][i] * hz[i];
        out.r[a] = acc;
    }
    return out;
}

MultiplierSolution CompiledHamiltonian::solve_multipliers(const HamiltonianState& state) const {
    const std::size_t s = sys_.constraints.size();
    MultiplierSolution out;
    out.multipliers.assign(s, ParaNumber{});
    if (s == 0) return out;

    const MultiplierSystem ms = multiplier_system(state);
    const auto& C = ms.c;
    const auto& r = ms.r;

    // Each null sheet is an independent real system.
    std::vector<double> sheet_solution[2];
    for (int sheet = 0; sheet < 2; ++sheet) {
        Matrix cm(s, s);
        std::vector<double> rv(s);
        double rscale = 1.0;
        for (std::size_t a = 0; a < s; ++a) {
            const NullPair rp = null_split(r[a]);
            rv[a] = sheet == 0 ? rp.plus : rp.minus;
            rscale = std::max(rscale, std::fabs(rv[a]));
            for (std::size_t b = 0; b < s; ++b) {
                const NullPair cp = null_split(C[a][b]);
                cm(a, b) = sheet == 0 ? cp.plus : cp.minus;
            }
        }
        std::vector<double> x;
        if (!lu_solve(cm, rv, x)) {
            double resid = 0.0;
            x = least_squares_min_norm(cm, rv, 1e-10, resid);
            if (resid > 1e-8 * rscale) {
                throw InconsistentConstraintError(
                    "multiplier system inconsistent on the " +
                    std::string(sheet == 0 ? "plus" : "minus") +
                    " sheet (residual " + std::to_string(resid) + ")");
            }
            out.first_class = true;
        }
        sheet_solution[sheet] = std::move(x);
    }
    for (std::size_t a = 0; a < s; ++a) {
        out.multipliers[a] = null_merge({sheet_solution[0][a], sheet_solution[1][a]});
    }
    return out;
}

VectorFieldValue CompiledHamiltonian::total_field(const HamiltonianState& state,
                                                  MultiplierSolution* solution) const {
    const int m = sys_.dimension;
    const std::size_t s = sys_.constraints.size();
    MultiplierSolution sol = solve_multipliers(state);
    const EvalEnvironment env = environment(state);
    VectorFieldValue out = VectorFieldValue::zero(m);
    const ParaNumber mj{0.0, -1.0}, pj{0.0, 1.0};
    for (int i = 0; i < m; ++i) {
        ParaNumber bz = eval_or_zero(dHdzb_[i], env);
        ParaNumber az = eval_or_zero(dHdz_[i], env);
        for (std::size_t a = 0; a < s; ++a) {
            bz += sol.multipliers[a] * eval_or_zero(sys_.constraints[a].b_coeffs[i], env);
            az += sol.multipliers[a] * eval_or_zero(sys_.constraints[a].a_coeffs[i], env);
        }
        out.z_components[i] = mj * bz;
        out.zbar_components[i] = pj * az;
    }
    if (solution) *solution = std::move(sol);
    return out;
}

namespace {

template <typename F>
HamiltonianState advance(const HamiltonianState& s, double dt, IntegrationMethod method,
                         F&& deriv) {
    const std::size_t m = s.z.size();
    auto combine = [&](const HamiltonianState& base, const VectorFieldValue& d, double h) {
        HamiltonianState out = base;
        out.t = base.t + h;
        for (std::size_t i = 0; i < m; ++i) {
            out.z[i] += h * d.z_components[i];
            out.zbar[i] += h * d.zbar_components[i];
        }
        return out;
    };
    if (method == IntegrationMethod::euler) {
        return combine(s, deriv(s, "euler step"), dt);
    }
    const VectorFieldValue k1 = deriv(s, "rk4 stage 1");
    const VectorFieldValue k2 = deriv(combine(s, k1, dt / 2.0), "rk4 stage 2");
    const VectorFieldValue k3 = deriv(combine(s, k2, dt / 2.0), "rk4 stage 3");
    const VectorFieldValue k4 = deriv(combine(s, k3, dt), "rk4 stage 4");
    HamiltonianState out = s;
    out.t = s.t + dt;
    for (std::size_t i = 0; i < m; ++i) {
        out.z[i] += (dt / 6.0) * (k1.z_components[i] + 2.0 * k2.z_components[i] +
                                  2.0 * k3.z_components[i] + k4.z_components[i]);
        out.zbar[i] += (dt / 6.0) * (k1.zbar_components[i] + 2.0 * k2.zbar_components[i] +
                                     2.0 * k3.zbar_components[i] + k4.zbar_components[i]);
    }
    return out;
}

} // namespace

HamiltonianState CompiledHamiltonian::step(const HamiltonianState& state, double dt,
                                           IntegrationMethod method) const {
    if (dt <= 0.0) throw Error("step requires dt > 0");
    // Multipliers are recomputed at every stage, never frozen per step.
    auto deriv = [&](const HamiltonianState& at, const char* stage) -> VectorFieldValue {
        try {
            return total_field(at);
        } catch (const InconsistentConstraintError& e) {
            throw InconsistentConstraintError(std::string(e.what()) + " (" + stage + ")");
        } catch (const DomainError& e) {
            throw DomainError(std::string(e.what()) + " (" + stage + ")");
        } catch (const ZeroDivisorError& e) {
            throw ZeroDivisorError(std::string(e.what()) + " (" + stage + ")");
        }
    };
    HamiltonianState out = advance(state, dt, method, deriv);
    for (const ParaNumber& v : out.z) {
        if (!v.finite()) throw NumericalError("non-finite state at t = " + std::to_string(out.t));
    }
    for (const ParaNumber& v : out.zbar) {
        if (!v.finite()) throw NumericalError("non-finite state at t = " + std::to_string(out.t));
    }
    return out;
}

ParaNumber CompiledHamiltonian::energy(const HamiltonianState& state) const {
    return evaluate(sys_.hamiltonian, environment(state));
}

std::vector<ParaNumber> CompiledHamiltonian::constraint_values(
    const HamiltonianState& state, const VectorFieldValue& field) const {
    const EvalEnvironment env = environment(state);
    std::vector<ParaNumber> out;
    out.reserve(sys_.constraints.size());
    for (const ConstraintForm& w : sys_.constraints) out.push_back(residual(w, field, env));
    return out;
}

VectorFieldValue hamiltonian_field(const CompiledHamiltonian& sys, const HamiltonianState& s) {
    return sys.hamiltonian_field(s);
}

std::vector<ParaNumber> solve_multipliers(const CompiledHamiltonian& sys,
                                          const HamiltonianState& s) {
    return sys.solve_multipliers(s).multipliers;
}

VectorFieldValue total_field(const CompiledHamiltonian& sys, const HamiltonianState& s) {
    return sys.total_field(s);
}

HamiltonianState step_hamiltonian(const CompiledHamiltonian& sys, const HamiltonianState& s,
                                  double dt, IntegrationMethod method) {
    return sys.step(s, dt, method);
}

} // namespace paramech
