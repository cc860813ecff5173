#pragma once

#include <string>
#include <vector>

#include "paramech/forms.hpp"

namespace paramech {

enum class ConstraintFlavor { lagrangian, hamiltonian };

// A paracomplex constraint 1-form. For the hamiltonian flavor the blocks
// sit on dz_i and dzb_i; for the lagrangian flavor on dz_i and dzd_i.
struct ConstraintForm {
    std::vector<ExprPtr> a_coeffs;
    std::vector<ExprPtr> b_coeffs;
    ConstraintFlavor flavor = ConstraintFlavor::hamiltonian;
};

// Throws ValidationError when lengths mismatch or every coefficient
// simplifies to zero.
void validate_constraint(const ConstraintForm& omega, int m, const std::string& label);

// omega(v) = sum_i a_i v.z_components[i] + b_i v.zbar_components[i].
ParaNumber residual(const ConstraintForm& omega, const VectorFieldValue& v,
                    const EvalEnvironment& env);

// Dimension 2m - rank of the coefficient matrix; the rank is computed on
// each null sheet (tolerance 1e-10) and the smaller dimension returned.
int distribution_rank(const std::vector<ConstraintForm>& constraints, int m,
                      const EvalEnvironment& env);

enum class Holonomy { holonomic, anholonomic, inconclusive };

std::string to_string(Holonomy h);

struct HolonomyVerdict {
    Holonomy verdict = Holonomy::inconclusive;
    EvalEnvironment witness_point;
    double witness_value = 0.0;
    int samples_tested = 0;
};

struct ClassifyOptions {
    double holonomic_tol = 1e-9;
    double anholonomic_tol = 1e-6;
};

// Frobenius test on samples: evaluates omega_1^...^omega_r^d(omega_a) at
// every sample point. All magnitudes <= holonomic_tol gives holonomic,
// any above anholonomic_tol gives anholonomic with a witness, anything
// between is inconclusive. Throws DimensionError when 2m < r + 2.
HolonomyVerdict classify(const std::vector<ConstraintForm>& constraints, int m,
                         const std::vector<EvalEnvironment>& sample_points,
                         DerivativeConvention conv, const ClassifyOptions& opts = {});

// Slot space a flavor's forms live in.
SlotSpace constraint_space(ConstraintFlavor flavor, int m);

// The constraint as a sparse 1-form in its flavor's space.
SparseForm constraint_sparse(const ConstraintForm& omega, int m);

} // namespace paramech
