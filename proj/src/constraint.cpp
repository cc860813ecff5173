#include "paramech/constraint.hpp"

#include "paramech/linalg.hpp"

namespace paramech {

void validate_constraint(const ConstraintForm& omega, int m, const std::string& label) {
    if (static_cast<int>(omega.a_coeffs.size()) != m ||
        static_cast<int>(omega.b_coeffs.size()) != m) {
        throw ValidationError(label, "coefficient lists must have length " + std::to_string(m));
    }
    for (const ExprPtr& c : omega.a_coeffs) {
        if (!is_constant_zero(simplify(c))) return;
    }
    for (const ExprPtr& c : omega.b_coeffs) {
        if (!is_constant_zero(simplify(c))) return;
    }
    throw ValidationError(label, "every coefficient is identically zero");
}

ParaNumber residual(const ConstraintForm& omega, const VectorFieldValue& v,
                    const EvalEnvironment& env) {
    const std::size_t m = omega.a_coeffs.size();
    if (v.z_components.size() != m || v.zbar_components.size() != m) {
        throw Error("constraint/vector dimension mismatch");
    }
    ParaNumber acc{};
    for (std::size_t i = 0; i < m; ++i) {
        acc += evaluate(omega.a_coeffs[i], env) * v.z_components[i];
        acc += evaluate(omega.b_coeffs[i], env) * v.zbar_components[i];
    }
    return acc;
}

int distribution_rank(const std::vector<ConstraintForm>& constraints, int m,
                      const EvalEnvironment& env) {
    const std::size_t r = constraints.size();
    if (r == 0) return 2 * m;
    Matrix plus(r, 2 * m), minus(r, 2 * m);
    for (std::size_t a = 0; a < r; ++a) {
        for (int i = 0; i < m; ++i) {
            const NullPair av = null_split(evaluate(constraints[a].a_coeffs[i], env));
            const NullPair bv = null_split(evaluate(constraints[a].b_coeffs[i], env));
            plus(a, i) = av.plus;
            plus(a, m + i) = bv.plus;
            minus(a, i) = av.minus;
            minus(a, m + i) = bv.minus;
        }
    }
    const std::size_t rank_plus = numeric_rank(plus, 1e-10);
    const std::size_t rank_minus = numeric_rank(minus, 1e-10);
    return 2 * m - static_cast<int>(std::max(rank_plus, rank_minus));
}

std::string to_string(Holonomy h) {
    switch (h) {
        case Holonomy::holonomic: return "holonomic";
        case Holonomy::anholonomic: return "anholonomic";
        case Holonomy::inconclusive: return "inconclusive";
    }
    return {};
}

SlotSpace constraint_space(ConstraintFlavor flavor, int m) {
    // Lagrangian-flavor forms sit on dz_i and dzd_i; both live in the
    // unbarred block of the tangent space.
    return flavor == ConstraintFlavor::hamiltonian ? SlotSpace::cotangent(m)
                                                   : SlotSpace::tangent(m);
}

SparseForm constraint_sparse(const ConstraintForm& omega, int m) {
    SparseForm f(1);
    for (int i = 0; i < m; ++i) {
        ExprPtr a = simplify(omega.a_coeffs[i]);
        ExprPtr b = simplify(omega.b_coeffs[i]);
        if (!is_constant_zero(a)) f.add_term({i}, a);
        if (!is_constant_zero(b)) f.add_term({m + i}, b);
    }
    return f;
}

HolonomyVerdict classify(const std::vector<ConstraintForm>& constraints, int m,
                         const std::vector<EvalEnvironment>& sample_points,
                         DerivativeConvention conv, const ClassifyOptions& opts) {
    const int r = static_cast<int>(constraints.size());
    if (2 * m < r + 2) {
        throw DimensionError("holonomy wedge needs 2m >= r + 2 (m = " + std::to_string(m) +
                             ", r = " + std::to_string(r) + ")");
    }
    if (sample_points.size() < 10) {
        throw Error("classify needs at least 10 sample points");
    }

    HolonomyVerdict out;
    out.samples_tested = static_cast<int>(sample_points.size());
    if (r == 0) {
        out.verdict = Holonomy::holonomic;
        if (!sample_points.empty()) out.witness_point = sample_points.front();
        return out;
    }

    const SlotSpace space = constraint_space(constraints.front().flavor, m);
    std::vector<SparseForm> omegas;
    omegas.reserve(r);
    for (const ConstraintForm& w : constraints) omegas.push_back(constraint_sparse(w, m));

    SparseForm base = omegas.front();
    for (int a = 1; a < r; ++a) base = wedge(base, omegas[a]);

    double worst = 0.0;
    const EvalEnvironment* worst_env = &sample_points.front();
    for (int a = 0; a < r; ++a) {
        const SparseForm dwa = exterior_derivative(omegas[a], space, conv);
        const SparseForm test = wedge(base, dwa);
        for (const EvalEnvironment& env : sample_points) {
            const double v = max_coefficient_mag(test, env);
            if (v > worst) {
                worst = v;
                worst_env = &env;
            }
        }
    }
    out.witness_value = worst;
    out.witness_point = *worst_env;
    if (worst > opts.anholonomic_tol) out.verdict = Holonomy::anholonomic;
    else if (worst <= opts.holonomic_tol) out.verdict = Holonomy::holonomic;
    else out.verdict = Holonomy::inconclusive;
    return out;
}

} // namespace paramech
