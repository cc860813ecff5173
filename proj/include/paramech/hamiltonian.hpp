#pragma once

#include <vector>

#include "paramech/constraint.hpp"
#include "paramech/forms.hpp"
#include "paramech/lagrangian.hpp" // IntegrationMethod

namespace paramech {

struct HamiltonianSystem {
    int dimension = 0;
    ExprPtr hamiltonian; // over z_i, zb_i
    std::vector<ConstraintForm> constraints; // hamiltonian flavor
    DerivativeConvention convention = DerivativeConvention::independent;
};

// z and zbar are integrated as independent quantities; the conjugation
// defect is a diagnostic, never enforced.
struct HamiltonianState {
    double t = 0.0;
    std::vector<ParaNumber> z;
    std::vector<ParaNumber> zbar;
};

struct MultiplierSolution {
    std::vector<ParaNumber> multipliers;
    bool first_class = false;
};

// The linear system C Lam = r of the multiplier solve; C is
// antisymmetric by construction.
struct MultiplierSystem {
    std::vector<std::vector<ParaNumber>> c;
    std::vector<ParaNumber> r;
};

double conjugation_defect(const HamiltonianState& state);

class CompiledHamiltonian {
public:
    explicit CompiledHamiltonian(HamiltonianSystem sys);

    const HamiltonianSystem& system() const { return sys_; }
    int dimension() const { return sys_.dimension; }

    EvalEnvironment environment(const HamiltonianState& state) const;

    // Z_H = -j (dH/dzb_i) d/dz_i + j (dH/dz_i) d/dzb_i.
    VectorFieldValue hamiltonian_field(const HamiltonianState& state) const;

    // C_ab = sum_i (B_a)_i (A_b)_i - (A_a)_i (B_b)_i and
    // r_a = sum_i (A_a)_i dH/dzb_i - (B_a)_i dH/dz_i.
    MultiplierSystem multiplier_system(const HamiltonianState& state) const;

    // Solves C Lam = r per null sheet. Singular-but-consistent systems
    // take the minimum-norm solution and flag FirstClass; inconsistent
    // ones throw.
    MultiplierSolution solve_multipliers(const HamiltonianState& state) const;

    // Z = -j (dH/dzb_i + Lam^a (B_a)_i) d/dz_i + j (dH/dz_i + Lam^a (A_a)_i) d/dzb_i.
    VectorFieldValue total_field(const HamiltonianState& state,
                                 MultiplierSolution* solution = nullptr) const;

    HamiltonianState step(const HamiltonianState& state, double dt,
                          IntegrationMethod method) const;

    ParaNumber energy(const HamiltonianState& state) const;

    std::vector<ParaNumber> constraint_values(const HamiltonianState& state,
                                              const VectorFieldValue& field) const;

    const ExprPtr& dHdz(int i) const { return dHdz_[i]; }
    const ExprPtr& dHdzb(int i) const { return dHdzb_[i]; }

private:
    HamiltonianSystem sys_;
    std::vector<ExprPtr> dHdz_, dHdzb_;
};

// Z_a = -j (B_a)_i d/dz_i + j (A_a)_i d/dzb_i, the field with
// i_{Z_a} Phi = omega_a for the canonical Phi.
VectorFieldValue constraint_field(const ConstraintForm& omega, const EvalEnvironment& env);

// Spec-level conveniences.
VectorFieldValue hamiltonian_field(const CompiledHamiltonian& sys, const HamiltonianState& s);
std::vector<ParaNumber> solve_multipliers(const CompiledHamiltonian& sys,
                                          const HamiltonianState& s);
VectorFieldValue total_field(const CompiledHamiltonian& sys, const HamiltonianState& s);
HamiltonianState step_hamiltonian(const CompiledHamiltonian& sys, const HamiltonianState& s,
                                  double dt, IntegrationMethod method);

} // namespace paramech
