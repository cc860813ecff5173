#include "paramech/lagrangian.hpp"

#include <cmath>

#include "paramech/linalg.hpp"

namespace paramech {

IntegrationMethod method_from_string(const std::string& s) {
    if (s == "euler") return IntegrationMethod::euler;
    if (s == "rk4") return IntegrationMethod::rk4;
    throw Error("unknown integration method: " + s);
}

std::string to_string(IntegrationMethod m) {
    return m == IntegrationMethod::euler ? "euler" : "rk4";
}

VectorFieldValue liouville_field(const VectorFieldValue& xi) { return apply_J(xi); }

namespace {

ParaNumber eval_or_zero(const ExprPtr& e, const EvalEnvironment& env) {
    return is_constant_zero(e) ? ParaNumber{} : evaluate(e, env);
}

void check_finite(const std::vector<ParaNumber>& v, const char* what, double t) {
    for (const ParaNumber& x : v) {
        if (!x.finite()) {
            throw NumericalError(std::string("non-finite ") + what + " at t = " +
                                 std::to_string(t));
        }
    }
}

} // namespace

CompiledLagrangian::CompiledLagrangian(LagrangianSystem sys)
    : sys_(std::move(sys)), space_(SlotSpace::tangent(sys_.dimension)) {
    const int m = sys_.dimension;
    if (m < 1) throw ValidationError("dimension", "must be >= 1");
    if (!sys_.lagrangian) throw ValidationError("function_text", "missing Lagrangian");
    if (static_cast<int>(sys_.constraints.size()) > 2 * m) {
        throw ValidationError("constraints", "count exceeds 2m");
    }
    const DerivativeConvention conv = sys_.convention;
    const ExprPtr& L = sys_.lagrangian;

    dLdz_.resize(m);
    dLdzb_.resize(m);
    dLdv_.resize(m);
    dLdvb_.resize(m);
    for (int i = 0; i < m; ++i) {
        dLdz_[i] = wirtinger_derivative(L, i + 1, CoordFamily::Z, conv);
        dLdzb_[i] = wirtinger_derivative(L, i + 1, CoordFamily::Zbar, conv);
        dLdv_[i] = wirtinger_derivative(L, i + 1, CoordFamily::Zdot, conv);
        dLdvb_[i] = wirtinger_derivative(L, i + 1, CoordFamily::Zbardot, conv);
    }
    auto seconds = [&](const std::vector<ExprPtr>& firsts, CoordFamily fam) {
        std::vector<std::vector<ExprPtr>> out(m, std::vector<ExprPtr>(m));
        for (int i = 0; i < m; ++i) {
            for (int k = 0; k < m; ++k) {
                out[i][k] = wirtinger_derivative(firsts[i], k + 1, fam, conv);
            }
        }
        return out;
    };
    Pz_ = seconds(dLdv_, CoordFamily::Z);
    Pzb_ = seconds(dLdv_, CoordFamily::Zbar);
    Pv_ = seconds(dLdv_, CoordFamily::Zdot);
    Pvb_ = seconds(dLdv_, CoordFamily::Zbardot);
    Az_ = seconds(dLdz_, CoordFamily::Z);
    Azb_ = seconds(dLdz_, CoordFamily::Zbar);
    Av_ = seconds(dLdz_, CoordFamily::Zdot);
    Avb_ = seconds(dLdz_, CoordFamily::Zbardot);

    // E_L = V(L) - L with V the fiber dilation written in Wirtinger form.
    ExprPtr e = make_constant(0.0);
    for (int i = 0; i < m; ++i) {
        e = c_add(e, c_mul(make_coordinate(coordinate_name(CoordFamily::Zdot, i + 1)), dLdv_[i]));
        e = c_add(e, c_mul(make_coordinate(coordinate_name(CoordFamily::Zbardot, i + 1)), dLdvb_[i]));
    }
    energy_ = simplify(c_sub(e, L));

    int label = 0;
    for (const ConstraintForm& w : sys_.constraints) {
        ++label;
        if (w.flavor != ConstraintFlavor::lagrangian) {
            throw ValidationError("constraint." + std::to_string(label),
                                  "lagrangian system needs lagrangian-flavor constraints");
        }
        validate_constraint(w, m, "constraint." + std::to_string(label));
        CompiledConstraint cc;
        cc.a.resize(m);
        cc.b.resize(m);
        for (int i = 0; i < m; ++i) {
            cc.a[i] = simplify(w.a_coeffs[i]);
            cc.b[i] = simplify(w.b_coeffs[i]);
            if (!is_constant_zero(cc.b[i])) cc.velocity_slots = true;
        }
        if (!cc.velocity_slots) {
            auto dmat = [&](CoordFamily fam) {
                std::vector<std::vector<ExprPtr>> out(m, std::vector<ExprPtr>(m));
                for (int i = 0; i < m; ++i)
                    for (int k = 0; k < m; ++k)
                        out[i][k] = wirtinger_derivative(cc.a[i], k + 1, fam, conv);
                return out;
            };
            cc.a_dz = dmat(CoordFamily::Z);
            cc.a_dzb = dmat(CoordFamily::Zbar);
            cc.a_dv = dmat(CoordFamily::Zdot);
            cc.a_dvb = dmat(CoordFamily::Zbardot);
        }
        cons_.push_back(std::move(cc));
    }
}

EvalEnvironment CompiledLagrangian::environment(const LagrangianState& state) const {
    const int m = sys_.dimension;
    EvalEnvironment env(state.t);
    for (int i = 0; i < m; ++i) {
        env.bind(coordinate_name(CoordFamily::Z, i + 1), state.z[i]);
        env.bind(coordinate_name(CoordFamily::Zbar, i + 1), conj(state.z[i]));
        env.bind(coordinate_name(CoordFamily::Zdot, i + 1), state.zdot[i]);
        env.bind(coordinate_name(CoordFamily::Zbardot, i + 1), conj(state.zdot[i]));
    }
    return env;
}

ELBlocks CompiledLagrangian::assemble_el_system(const LagrangianState& state) const {
    const int m = sys_.dimension;
    if (static_cast<int>(state.z.size()) != m || static_cast<int>(state.zdot.size()) != m) {
        throw Error("state dimension mismatch");
    }
    const EvalEnvironment env = environment(state);
    ELBlocks b;
    b.state = state;
    b.Pv.assign(m, std::vector<ParaNumber>(m));
    b.Pvb.assign(m, std::vector<ParaNumber>(m));
    b.grad_z.resize(m);
    b.grad_v.resize(m);
    b.velocity_terms.assign(m, ParaNumber{});
    for (int i = 0; i < m; ++i) {
        b.grad_z[i] = eval_or_zero(dLdz_[i], env);
        b.grad_v[i] = eval_or_zero(dLdv_[i], env);
        for (int k = 0; k < m; ++k) {
            b.Pv[i][k] = eval_or_zero(Pv_[i][k], env);
            b.Pvb[i][k] = eval_or_zero(Pvb_[i][k], env);
            b.velocity_terms[i] += eval_or_zero(Pz_[i][k], env) * state.zdot[k];
            b.velocity_terms[i] += eval_or_zero(Pzb_[i][k], env) * conj(state.zdot[k]);
        }
    }

    const std::size_t r = cons_.size();
    b.row_coeff_v.assign(r, std::vector<ParaNumber>(m));
    b.row_coeff_vb.assign(r, std::vector<ParaNumber>(m));
    b.row_rhs.assign(r, ParaNumber{});
    b.force.assign(r, std::vector<ParaNumber>(m));
    for (std::size_t a = 0; a < r; ++a) {
        const CompiledConstraint& cc = cons_[a];
        std::vector<ParaNumber> av(m), bv(m);
        for (int i = 0; i < m; ++i) {
            av[i] = eval_or_zero(cc.a[i], env);
            bv[i] = eval_or_zero(cc.b[i], env);
        }
        if (cc.velocity_slots) {
            // omega_a(xi) = sum a_i zdot_i + b_i zddot_i = 0 holds at the
            // acceleration level; enforce it directly.
            for (int k = 0; k < m; ++k) b.row_coeff_v[a][k] = bv[k];
            ParaNumber rhs{};
            for (int i = 0; i < m; ++i) rhs -= av[i] * state.zdot[i];
            b.row_rhs[a] = rhs;
            b.force[a] = bv;
        } else {
            // Velocity-level constraint sum a_i zdot_i = 0, differentiated
            // once in time along the flow.
            for (int k = 0; k < m; ++k) {
                ParaNumber cv = av[k];
                ParaNumber cvb{};
                for (int i = 0; i < m; ++i) {
                    cv += state.zdot[i] * eval_or_zero(cc.a_dv[i][k], env);
                    cvb += state.zdot[i] * eval_or_zero(cc.a_dvb[i][k], env);
                }
                b.row_coeff_v[a][k] = cv;
                b.row_coeff_vb[a][k] = cvb;
            }
            ParaNumber rhs{};
            for (int i = 0; i < m; ++i) {
                ParaNumber adot{};
                for (int k = 0; k < m; ++k) {
                    adot += eval_or_zero(cc.a_dz[i][k], env) * state.zdot[k];
                    adot += eval_or_zero(cc.a_dzb[i][k], env) * conj(state.zdot[k]);
                }
                rhs -= state.zdot[i] * adot;
            }
            b.row_rhs[a] = rhs;
            b.force[a] = av; // Chetaev pairing for velocity-level forms
        }
    }
    return b;
}

namespace {

struct RealSystem {
    Matrix a;
    std::vector<double> rhs;
    std::size_t next_row = 0;

    RealSystem(std::size_t rows, std::size_t cols) : a(rows, cols), rhs(rows, 0.0) {}

    // One paracomplex row c_v . zddot + c_vb . conj(zddot) + c_l . lambda
    // = r becomes a plus-sheet and a minus-sheet real row. conj swaps the
    // sheets, which is where the cross-sheet coupling comes from.
    void add_pararow(const std::vector<ParaNumber>& c_v, const std::vector<ParaNumber>& c_vb,
                     const std::vector<ParaNumber>& c_l, const ParaNumber& r, std::size_t m,
                     std::size_t s) {
        const std::size_t rp = next_row++;
        const std::size_t rm = next_row++;
        for (std::size_t k = 0; k < m; ++k) {
            const NullPair v = null_split(c_v[k]);
            const NullPair vb = null_split(c_vb[k]);
            a(rp, k) += v.plus;
            a(rp, m + k) += vb.plus;
            a(rm, k) += vb.minus;
            a(rm, m + k) += v.minus;
        }
        for (std::size_t j = 0; j < s; ++j) {
            const NullPair l = null_split(c_l[j]);
            a(rp, 2 * m + j) += l.plus;
            a(rm, 2 * m + s + j) += l.minus;
        }
        const NullPair rr = null_split(r);
        rhs[rp] = rr.plus;
        rhs[rm] = rr.minus;
    }
};

} // namespace

ELSolveResult CompiledLagrangian::solve_el(const ELBlocks& blocks, bool want_secondary) const {
    const std::size_t m = sys_.dimension;
    const std::size_t s = cons_.size();
    const std::size_t n = 2 * m + 2 * s;

    // Mass operator as a real 2m x 2m block; rank deficiency means a
    // degenerate Lagrangian no matter the constraints.
    Matrix mass(2 * m, 2 * m);
    double mass_scale = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t k = 0; k < m; ++k) {
            const NullPair v = null_split(blocks.Pv[i][k]);
            const NullPair vb = null_split(blocks.Pvb[i][k]);
            mass(2 * i, k) = v.plus;
            mass(2 * i, m + k) = vb.plus;
            mass(2 * i + 1, k) = vb.minus;
            mass(2 * i + 1, m + k) = v.minus;
            mass_scale = std::max({mass_scale, std::fabs(v.plus), std::fabs(v.minus),
                                   std::fabs(vb.plus), std::fabs(vb.minus)});
        }
    }
    if (numeric_rank(mass, 1e-10) < 2 * m) {
        throw SingularMassError("velocity Hessian is rank deficient (scale " +
                                std::to_string(mass_scale) + "); degenerate Lagrangian");
    }

    RealSystem sysm(n, n);
    std::vector<ParaNumber> lam_coeff(s);
    for (std::size_t i = 0; i < m; ++i) {
        // dL/dz_i - d/dt(dL/dzd_i) = Lam^a f_a_i, arranged with the
        // acceleration terms on the left.
        std::vector<ParaNumber> cv(m), cvb(m);
        for (std::size_t k = 0; k < m; ++k) {
            cv[k] = blocks.Pv[i][k];
            cvb[k] = blocks.Pvb[i][k];
        }
        for (std::size_t a = 0; a < s; ++a) lam_coeff[a] = blocks.force[a][i];
        const ParaNumber rhs = blocks.grad_z[i] - blocks.velocity_terms[i];
        sysm.add_pararow(cv, cvb, lam_coeff, rhs, m, s);
    }
    const std::vector<ParaNumber> no_lambda(s);
    for (std::size_t a = 0; a < s; ++a) {
        sysm.add_pararow(blocks.row_coeff_v[a], blocks.row_coeff_vb[a], no_lambda,
                         blocks.row_rhs[a], m, s);
    }

    std::vector<double> x;
    if (!lu_solve(sysm.a, sysm.rhs, x)) {
        throw InconsistentConstraintError(
            "constrained saddle system is singular; dependent or first-class constraints");
    }

    ELSolveResult out;
    out.zddot.resize(m);
    out.multipliers.resize(s);
    for (std::size_t k = 0; k < m; ++k) out.zddot[k] = null_merge({x[k], x[m + k]});
    for (std::size_t a = 0; a < s; ++a) {
        out.multipliers[a] = null_merge({x[2 * m + a], x[2 * m + s + a]});
    }
    double prim = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        double acc = -sysm.rhs[r];
        for (std::size_t c = 0; c < n; ++c) acc += sysm.a(r, c) * x[c];
        prim = std::max(prim, std::fabs(acc));
    }
    out.primary_residual = prim;
    if (want_secondary) {
        out.secondary_residual = secondary_residual(blocks, out);
        if (sys_.least_squares_fallback && out.secondary_residual > 1e-6) {
            // Least-squares over both families plus tangency rows.
            const EvalEnvironment env = environment(blocks.state);
            RealSystem ext(n + 2 * m, n);
            for (std::size_t i = 0; i < m; ++i) {
                std::vector<ParaNumber> cv(m), cvb(m);
                for (std::size_t k = 0; k < m; ++k) {
                    cv[k] = blocks.Pv[i][k];
                    cvb[k] = blocks.Pvb[i][k];
                }
                for (std::size_t a = 0; a < s; ++a) lam_coeff[a] = blocks.force[a][i];
                ext.add_pararow(cv, cvb, lam_coeff, blocks.grad_z[i] - blocks.velocity_terms[i], m, s);
            }
            const ParaNumber pj{0.0, 1.0};
            for (std::size_t i = 0; i < m; ++i) {
                std::vector<ParaNumber> cv(m), cvb(m), cl(s);
                ParaNumber rhs = -eval_or_zero(dLdz_[i], env);
                for (std::size_t k = 0; k < m; ++k) {
                    cv[k] = pj * eval_or_zero(Av_[i][k], env);
                    cvb[k] = pj * eval_or_zero(Avb_[i][k], env);
                    rhs -= pj * (eval_or_zero(Az_[i][k], env) * blocks.state.zdot[k] +
                                 eval_or_zero(Azb_[i][k], env) * conj(blocks.state.zdot[k]));
                }
                for (std::size_t a = 0; a < s; ++a) {
                    cl[a] = -eval_or_zero(cons_[a].a[i], env);
                }
                ext.add_pararow(cv, cvb, cl, rhs, m, s);
            }
            for (std::size_t a = 0; a < s; ++a) {
                ext.add_pararow(blocks.row_coeff_v[a], blocks.row_coeff_vb[a], no_lambda,
                                blocks.row_rhs[a], m, s);
            }
            double resid = 0.0;
            const std::vector<double> xe = least_squares_min_norm(ext.a, ext.rhs, 1e-10, resid);
            for (std::size_t k = 0; k < m; ++k) out.zddot[k] = null_merge({xe[k], xe[m + k]});
            for (std::size_t a = 0; a < s; ++a) {
                out.multipliers[a] = null_merge({xe[2 * m + a], xe[2 * m + s + a]});
            }
            out.primary_residual = resid;
            out.secondary_residual = secondary_residual(blocks, out);
        }
    }
    return out;
}

ELSolveResult CompiledLagrangian::solve_el(const LagrangianState& state,
                                           bool want_secondary) const {
    return solve_el(assemble_el_system(state), want_secondary);
}

double CompiledLagrangian::secondary_residual(const ELBlocks& blocks,
                                              const ELSolveResult& r) const {
    // The monitored family of the source equations:
    // dL/dz_i + j d/dt(dL/dz_i) - Lam^a (omega_a)_i
    const std::size_t m = sys_.dimension;
    const EvalEnvironment env = environment(blocks.state);
    const ParaNumber pj{0.0, 1.0};
    double worst = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        ParaNumber ddt{};
        for (std::size_t k = 0; k < m; ++k) {
            ddt += eval_or_zero(Az_[i][k], env) * blocks.state.zdot[k];
            ddt += eval_or_zero(Azb_[i][k], env) * conj(blocks.state.zdot[k]);
            ddt += eval_or_zero(Av_[i][k], env) * r.zddot[k];
            ddt += eval_or_zero(Avb_[i][k], env) * conj(r.zddot[k]);
        }
        ParaNumber res = blocks.grad_z[i] + pj * ddt;
        for (std::size_t a = 0; a < cons_.size(); ++a) {
            res -= r.multipliers[a] * eval_or_zero(cons_[a].a[i], env);
        }
        worst = std::max(worst, mag(res));
    }
    return worst;
}

std::vector<ParaNumber> CompiledLagrangian::constraint_values(
    const LagrangianState& state, const std::vector<ParaNumber>& zddot) const {
    const int m = sys_.dimension;
    const EvalEnvironment env = environment(state);
    std::vector<ParaNumber> out;
    out.reserve(cons_.size());
    for (const CompiledConstraint& cc : cons_) {
        ParaNumber v{};
        for (int i = 0; i < m; ++i) {
            v += eval_or_zero(cc.a[i], env) * state.zdot[i];
            v += eval_or_zero(cc.b[i], env) * zddot[i];
        }
        out.push_back(v);
    }
    return out;
}

namespace {

struct Derivative {
    std::vector<ParaNumber> dz;
    std::vector<ParaNumber> dzdot;
};

template <typename F>
LagrangianState advance(const LagrangianState& s, double dt, IntegrationMethod method,
                        F&& deriv) {
    const std::size_t m = s.z.size();
    auto combine = [&](const LagrangianState& base, const Derivative& d, double h) {
        LagrangianState out = base;
        out.t = base.t + h;
        for (std::size_t i = 0; i < m; ++i) {
            out.z[i] += h * d.dz[i];
            out.zdot[i] += h * d.dzdot[i];
        }
        return out;
    };
    if (method == IntegrationMethod::euler) {
        return combine(s, deriv(s, "euler step"), dt);
    }
    const Derivative k1 = deriv(s, "rk4 stage 1");
    const Derivative k2 = deriv(combine(s, k1, dt / 2.0), "rk4 stage 2");
    const Derivative k3 = deriv(combine(s, k2, dt / 2.0), "rk4 stage 3");
    const Derivative k4 = deriv(combine(s, k3, dt), "rk4 stage 4");
    LagrangianState out = s;
    out.t = s.t + dt;
    for (std::size_t i = 0; i < m; ++i) {
        out.z[i] += (dt / 6.0) * (k1.dz[i] + 2.0 * k2.dz[i] + 2.0 * k3.dz[i] + k4.dz[i]);
        out.zdot[i] +=
            (dt / 6.0) * (k1.dzdot[i] + 2.0 * k2.dzdot[i] + 2.0 * k3.dzdot[i] + k4.dzdot[i]);
    }
    return out;
}

} // namespace

LagrangianState CompiledLagrangian::step(const LagrangianState& state, double dt,
                                         IntegrationMethod method) const {
    if (dt <= 0.0) throw Error("step requires dt > 0");
    auto deriv = [&](const LagrangianState& at, const char* stage) -> Derivative {
        try {
            ELSolveResult r = solve_el(at, /*want_secondary=*/false);
            return {at.zdot, std::move(r.zddot)};
        } catch (const SingularMassError& e) {
            throw SingularMassError(std::string(e.what()) + " (" + stage + ")");
        } catch (const InconsistentConstraintError& e) {
            throw InconsistentConstraintError(std::string(e.what()) + " (" + stage + ")");
        } catch (const DomainError& e) {
            throw DomainError(std::string(e.what()) + " (" + stage + ")");
        } catch (const ZeroDivisorError& e) {
            throw ZeroDivisorError(std::string(e.what()) + " (" + stage + ")");
        }
    };
    LagrangianState out = advance(state, dt, method, deriv);
    check_finite(out.z, "position", out.t);
    check_finite(out.zdot, "velocity", out.t);
    return out;
}

ParaNumber CompiledLagrangian::energy(const LagrangianState& state) const {
    return evaluate(energy_, environment(state));
}

double CompiledLagrangian::el_residual(const LagrangianState& state,
                                       const ELSolveResult& result) const {
    const int m = sys_.dimension;
    const int M = 2 * m; // block size of the velocity phase space
    const EvalEnvironment env = environment(state);

    // Cartan 1-form: (dL/dzd_i) dz_i + (dL/dzdb_i) dzb_i.
    OneForm theta = OneForm::zero(M);
    for (int i = 0; i < m; ++i) {
        theta.z_coeffs[i] = dLdv_[i];
        theta.zbar_coeffs[i] = dLdvb_[i];
    }
    TwoForm dtheta = exterior_derivative(theta, space_, sys_.convention);
    TwoForm omega_l = TwoForm::zero(M);
    for (int j = 0; j < M; ++j) {
        for (int i = 0; i < M; ++i) {
            omega_l.zz[j][i] = simplify(c_neg(dtheta.zz[j][i]));
            omega_l.zzbar[j][i] = simplify(c_neg(dtheta.zzbar[j][i]));
            omega_l.zbarzbar[j][i] = simplify(c_neg(dtheta.zbarzbar[j][i]));
        }
    }

    VectorFieldValue xi = VectorFieldValue::zero(M);
    for (int i = 0; i < m; ++i) {
        xi.z_components[i] = state.zdot[i];
        xi.z_components[m + i] = result.zddot[i];
        xi.zbar_components[i] = conj(state.zdot[i]);
        xi.zbar_components[m + i] = conj(result.zddot[i]);
    }

    const OneFormValue lhs = interior_product(xi, omega_l, space_, env);
    const OneFormValue de = evaluate(differential(energy_, space_, sys_.convention), space_, env);

    std::vector<ParaNumber> force(m);
    for (std::size_t a = 0; a < cons_.size(); ++a) {
        const CompiledConstraint& cc = cons_[a];
        for (int i = 0; i < m; ++i) {
            const ExprPtr& f = cc.velocity_slots ? cc.b[i] : cc.a[i];
            force[i] += result.multipliers[a] * eval_or_zero(f, env);
        }
    }

    double worst = 0.0;
    for (int s = 0; s < M; ++s) {
        ParaNumber dz = lhs.z_coeffs[s] - de.z_coeffs[s];
        ParaNumber dzb = lhs.zbar_coeffs[s] - de.zbar_coeffs[s];
        if (s < m) {
            // The barred-slot family is the conjugate of the solved one,
            // so it carries the conjugated multiplier force.
            dz -= force[s];
            dzb -= conj(force[s]);
        }
        worst = std::max({worst, mag(dz), mag(dzb)});
    }
    return worst;
}

ParaNumber lagrangian_energy(const CompiledLagrangian& sys, const LagrangianState& state) {
    return sys.energy(state);
}

LagrangianState step_lagrangian(const CompiledLagrangian& sys, const LagrangianState& state,
                                double dt, IntegrationMethod method) {
    return sys.step(state, dt, method);
}

} // namespace paramech
