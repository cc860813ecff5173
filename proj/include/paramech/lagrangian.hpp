#pragma once

#include <vector>

#include "paramech/constraint.hpp"
#include "paramech/forms.hpp"

namespace paramech {

enum class IntegrationMethod { euler, rk4 };

IntegrationMethod method_from_string(const std::string& s);
std::string to_string(IntegrationMethod m);

struct LagrangianSystem {
    int dimension = 0;
    ExprPtr lagrangian; // over z_i, zb_i, zd_i, zdb_i
    std::vector<ConstraintForm> constraints; // lagrangian flavor
    DerivativeConvention convention = DerivativeConvention::independent;
    // Re-solve over both equation families in least squares when the
    // monitored family's residual exceeds 1e-6.
    bool least_squares_fallback = false;
};

struct LagrangianState {
    double t = 0.0;
    std::vector<ParaNumber> z;
    std::vector<ParaNumber> zdot;
};

struct ELSolveResult {
    std::vector<ParaNumber> zddot;
    std::vector<ParaNumber> multipliers;
    double primary_residual = 0.0;
    double secondary_residual = 0.0;
};

// Numeric blocks of the linear system at one state. The mass operator
// acts as zddot -> Pv zddot + Pvb conj(zddot); the conjugate-flavor block
// couples the two null sheets.
struct ELBlocks {
    std::vector<std::vector<ParaNumber>> Pv;   // d2L/dzd_k dzd_i
    std::vector<std::vector<ParaNumber>> Pvb;  // d2L/dzdb_k dzd_i
    std::vector<ParaNumber> grad_z;            // dL/dz_i
    std::vector<ParaNumber> grad_v;            // dL/dzd_i
    std::vector<ParaNumber> velocity_terms;    // velocity part of d/dt(dL/dzd_i)
    // Constraint tangency rows: coeff_v on zddot, coeff_vb on conj(zddot).
    std::vector<std::vector<ParaNumber>> row_coeff_v;
    std::vector<std::vector<ParaNumber>> row_coeff_vb;
    std::vector<ParaNumber> row_rhs;
    // Multiplier force coefficients in the solved family.
    std::vector<std::vector<ParaNumber>> force;
    LagrangianState state;
};

// System with every derivative tree prepared once. All evaluation state
// is per-call; a compiled system may be shared across threads.
class CompiledLagrangian {
public:
    explicit CompiledLagrangian(LagrangianSystem sys);

    const LagrangianSystem& system() const { return sys_; }
    int dimension() const { return sys_.dimension; }

    EvalEnvironment environment(const LagrangianState& state) const;

    ELBlocks assemble_el_system(const LagrangianState& state) const;
    ELSolveResult solve_el(const ELBlocks& blocks, bool want_secondary = true) const;
    ELSolveResult solve_el(const LagrangianState& state, bool want_secondary = true) const;

    LagrangianState step(const LagrangianState& state, double dt,
                         IntegrationMethod method) const;

    ParaNumber energy(const LagrangianState& state) const;

    // Constraint value omega_a(xi) with the second-order field of the
    // solved accelerations.
    std::vector<ParaNumber> constraint_values(const LagrangianState& state,
                                              const std::vector<ParaNumber>& zddot) const;

    // Max deviation of i_xi omega_L = dE_L + Lam^a omega_a across the
    // slot coefficients of the velocity phase space.
    double el_residual(const LagrangianState& state, const ELSolveResult& result) const;

    const ExprPtr& dLdz(int i) const { return dLdz_[i]; }
    const ExprPtr& dLdzb(int i) const { return dLdzb_[i]; }
    const ExprPtr& dLdv(int i) const { return dLdv_[i]; }
    const ExprPtr& dLdvb(int i) const { return dLdvb_[i]; }
    const ExprPtr& energy_expression() const { return energy_; }

private:
    double secondary_residual(const ELBlocks& blocks, const ELSolveResult& r) const;

    LagrangianSystem sys_;
    SlotSpace space_; // velocity phase space, block [z_i, zd_i]
    std::vector<ExprPtr> dLdz_, dLdzb_, dLdv_, dLdvb_;
    // Second derivatives of dLdv_[i] (first index) by family of the
    // second derivative (second index k).
    std::vector<std::vector<ExprPtr>> Pz_, Pzb_, Pv_, Pvb_;
    // Second derivatives of dLdz_[i] for the monitored family.
    std::vector<std::vector<ExprPtr>> Az_, Azb_, Av_, Avb_;
    ExprPtr energy_;
    // Per-constraint coefficient derivative trees for tangency rows.
    struct CompiledConstraint {
        bool velocity_slots = false; // any b coefficient nonzero
        std::vector<ExprPtr> a, b;
        std::vector<std::vector<ExprPtr>> a_dz, a_dzb, a_dv, a_dvb;
    };
    std::vector<CompiledConstraint> cons_;
};

// V = J xi, the para-Liouville field of a second order field.
VectorFieldValue liouville_field(const VectorFieldValue& xi);

// Spec-level conveniences over a compiled system.
ParaNumber lagrangian_energy(const CompiledLagrangian& sys, const LagrangianState& state);
LagrangianState step_lagrangian(const CompiledLagrangian& sys, const LagrangianState& state,
                                double dt, IntegrationMethod method);

} // namespace paramech
