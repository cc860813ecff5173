#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "paramech/forms.hpp"

using namespace paramech;

namespace {

constexpr DerivativeConvention kInd = DerivativeConvention::independent;

bool close(const ParaNumber& a, const ParaNumber& b, double tol) {
    return mag(a - b) <= tol * std::max({1.0, mag(a), mag(b)});
}

EvalEnvironment conj_env(int m, const std::vector<ParaNumber>& zs) {
    EvalEnvironment env;
    for (int i = 0; i < m; ++i) {
        env.bind(coordinate_name(CoordFamily::Z, i + 1), zs[i]);
        env.bind(coordinate_name(CoordFamily::Zbar, i + 1), conj(zs[i]));
    }
    return env;
}

std::mt19937& rng() {
    static std::mt19937 r(9001);
    return r;
}

ParaNumber random_value(double lo = -2.0, double hi = 2.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    return {u(rng()), u(rng())};
}

// points with z*zb > 0, safe for sqrt/log coefficients
ParaNumber random_domain_value() {
    std::uniform_real_distribution<double> re(2.0, 3.0), jm(-0.5, 0.5);
    return {re(rng()), jm(rng())};
}

} // namespace

TEST_CASE("J and J* are involutions with the stated action") {
    VectorFieldValue v = VectorFieldValue::zero(1);
    v.z_components[0] = {1.0, 0.0};
    const VectorFieldValue jv = apply_J(v);
    CHECK(jv.z_components[0] == ParaNumber{0.0, -1.0});
    CHECK(jv.zbar_components[0] == ParaNumber{0.0, 0.0});
    const VectorFieldValue jjv = apply_J(jv);
    CHECK(jjv.z_components[0] == v.z_components[0]);

    VectorFieldValue w = VectorFieldValue::zero(1);
    w.zbar_components[0] = {1.0, 0.0};
    CHECK(apply_J(w).zbar_components[0] == ParaNumber{0.0, 1.0});

    const SlotSpace space = SlotSpace::cotangent(1);
    OneForm dz = OneForm::zero(1);
    dz.z_coeffs[0] = make_constant(1.0);
    const OneForm jdz = apply_Jstar(dz);
    const EvalEnvironment env = conj_env(1, {{0.3, 0.1}});
    CHECK(evaluate(jdz, space, env).z_coeffs[0] == ParaNumber{0.0, -1.0});
    const OneForm jjdz = apply_Jstar(jdz);
    CHECK(evaluate(jjdz, space, env).z_coeffs[0] == ParaNumber{1.0, 0.0});
}

TEST_CASE("the Liouville form is J* of the symmetric pairing form") {
    // omega = (z dzb + zb dz)/2, lambda = J*(omega) = j/2 (z dzb - zb dz)
    OneForm omega = OneForm::zero(1);
    omega.z_coeffs[0] = parse_expression("0.5*zb1");
    omega.zbar_coeffs[0] = parse_expression("0.5*z1");
    const OneForm lam = apply_Jstar(omega);
    const auto [lambda, phi] = canonical_structures(1);
    const SlotSpace space = SlotSpace::cotangent(1);
    for (int i = 0; i < 10; ++i) {
        const EvalEnvironment env = conj_env(1, {random_value()});
        const OneFormValue a = evaluate(lam, space, env);
        const OneFormValue b = evaluate(lambda, space, env);
        CHECK(close(a.z_coeffs[0], b.z_coeffs[0], 1e-14));
        CHECK(close(a.zbar_coeffs[0], b.zbar_coeffs[0], 1e-14));
    }
}

TEST_CASE("vertical differential of the paranorm Lagrangian") {
    const SlotSpace space = SlotSpace::cotangent(1);
    const OneForm w = vertical_differential(parse_expression("z1*zb1"), space, kInd);
    for (int i = 0; i < 10; ++i) {
        const ParaNumber z = random_value();
        const OneFormValue v = evaluate(w, space, conj_env(1, {z}));
        CHECK(close(v.z_coeffs[0], ParaNumber{0.0, -1.0} * conj(z), 1e-13));
        CHECK(close(v.zbar_coeffs[0], ParaNumber{0.0, 1.0} * z, 1e-13));
    }
    const OneForm zero = vertical_differential(make_constant(4.0), space, kInd);
    CHECK(is_constant_zero(simplify(zero.z_coeffs[0])));
    const OneForm lin = vertical_differential(parse_expression("z1"), space, kInd);
    CHECK(simplify(lin.z_coeffs[0])->value == ParaNumber{0.0, -1.0});
}

TEST_CASE("kahler form blocks") {
    const SlotSpace space = SlotSpace::cotangent(1);
    const EvalEnvironment env = conj_env(1, {random_value()});

    const TwoForm phi = kahler_form(parse_expression("z1*zb1"), space, kInd);
    // mixed block carries -2j on dz^dzb, i.e. +2j on dzb^dz
    CHECK(evaluate(phi.zzbar[0][0], env) == ParaNumber{0.0, -2.0});
    CHECK(is_constant_zero(simplify(phi.zz[0][0])));
    CHECK(is_constant_zero(simplify(phi.zbarzbar[0][0])));

    const TwoForm zero = kahler_form(make_constant(3.0), space, kInd);
    CHECK(is_constant_zero(simplify(zero.zzbar[0][0])));

    // z-only dependence puts everything in the raw zz block
    const TwoForm zz = kahler_form(parse_expression("z1*z1"), space, kInd);
    CHECK(evaluate(zz.zz[0][0], env) == ParaNumber{0.0, -2.0});
    CHECK(is_constant_zero(simplify(zz.zzbar[0][0])));
}

TEST_CASE("interior product contracts the first slot") {
    const SlotSpace space = SlotSpace::cotangent(1);
    const EvalEnvironment env = conj_env(1, {{0.4, 0.1}});
    TwoForm w = TwoForm::zero(1);
    w.zzbar[0][0] = make_constant(1.0); // dz ^ dzb
    VectorFieldValue v = VectorFieldValue::zero(1);
    v.z_components[0] = {1.0, 0.0};
    OneFormValue r = interior_product(v, w, space, env);
    CHECK(r.zbar_coeffs[0] == ParaNumber{1.0, 0.0});
    CHECK(r.z_coeffs[0] == ParaNumber{0.0, 0.0});

    // vector in the kernel: dz^dzb contracted with a dzb-direction vector
    VectorFieldValue k = VectorFieldValue::zero(1);
    k.zbar_components[0] = {2.0, 0.5};
    const OneFormValue kr = interior_product(k, w, space, env);
    CHECK(kr.z_coeffs[0] == -k.zbar_components[0]);
    CHECK(kr.zbar_coeffs[0] == ParaNumber{0.0, 0.0});

    // full expansion against the paranorm kahler form at random points
    const TwoForm phi = kahler_form(parse_expression("z1*zb1"), space, kInd);
    for (int i = 0; i < 10; ++i) {
        VectorFieldValue xi = VectorFieldValue::zero(1);
        xi.z_components[0] = random_value();
        xi.zbar_components[0] = random_value();
        const EvalEnvironment e = conj_env(1, {random_value()});
        const OneFormValue c = interior_product(xi, phi, space, e);
        const ParaNumber m2j{0.0, -2.0};
        CHECK(close(c.zbar_coeffs[0], m2j * xi.z_components[0], 1e-13));
        CHECK(close(c.z_coeffs[0], -(m2j * xi.zbar_components[0]), 1e-13));
    }
}

TEST_CASE("exterior derivative of one-forms") {
    const SlotSpace space = SlotSpace::cotangent(1);
    OneForm constant = OneForm::zero(1);
    constant.z_coeffs[0] = make_constant(1.0);
    const TwoForm dzero = exterior_derivative(constant, space, kInd);
    CHECK(is_constant_zero(simplify(dzero.zz[0][0])));
    CHECK(is_constant_zero(simplify(dzero.zzbar[0][0])));

    OneForm w = OneForm::zero(1);
    w.zbar_coeffs[0] = parse_expression("z1"); // z dzb
    const TwoForm dw = exterior_derivative(w, space, kInd);
    const EvalEnvironment env = conj_env(1, {random_value()});
    CHECK(evaluate(dw.zzbar[0][0], env) == ParaNumber{1.0, 0.0});

    // canonical pair: phi = -d lambda = j dzb^dz = -j dz^dzb
    const auto [lambda, phi] = canonical_structures(1);
    const TwoForm dl = exterior_derivative(lambda, space, kInd);
    CHECK(evaluate(dl.zzbar[0][0], env) == ParaNumber{0.0, 1.0});
    CHECK(evaluate(phi.zzbar[0][0], env) == ParaNumber{0.0, -1.0});
}

TEST_CASE("canonical structures for general dimension") {
    const int m = 3;
    const auto [lambda, phi] = canonical_structures(m);
    const SlotSpace space = SlotSpace::cotangent(m);
    // lambda coefficients are linear, phi coefficients are constants
    for (int i = 0; i < m; ++i) {
        for (int k = 0; k < m; ++k) {
            CHECK(simplify(phi.zzbar[i][k])->kind == ExprKind::Constant);
        }
        CHECK(evaluate(phi.zzbar[i][i], conj_env(m, {random_value(), random_value(),
                                                     random_value()})) ==
              ParaNumber{0.0, -1.0});
    }
    std::vector<ParaNumber> zs = {random_value(), random_value(), random_value()};
    const OneFormValue lv = evaluate(lambda, space, conj_env(m, zs));
    for (int i = 0; i < m; ++i) {
        CHECK(close(lv.z_coeffs[i], ParaNumber{0.0, -0.5} * conj(zs[i]), 1e-14));
        CHECK(close(lv.zbar_coeffs[i], ParaNumber{0.0, 0.5} * zs[i], 1e-14));
    }
}

TEST_CASE("d squared vanishes on scenario 0-forms") {
    const SlotSpace space = SlotSpace::cotangent(2);
    const std::vector<std::string> texts = {"z1*zb1 + z2*zb2", "sqrt(z1*zb1)",
                                            "z1*z2*zb1 - zb2*zb2"};
    for (const std::string& t : texts) {
        const OneForm df = differential(parse_expression(t), space, kInd);
        const SparseForm ddf =
            exterior_derivative(SparseForm::from_one_form(df, space), space, kInd);
        for (int i = 0; i < 20; ++i) {
            const EvalEnvironment env =
                conj_env(2, {random_domain_value(), random_domain_value()});
            CHECK(max_coefficient_mag(ddf, env) <= 1e-12);
        }
    }
}

TEST_CASE("kahler forms are closed") {
    const SlotSpace space = SlotSpace::cotangent(2);
    const std::vector<std::string> texts = {"z1*zb1 + 0.5*z2*zb2", "sqrt(z1*zb1)*z2*zb2"};
    for (const std::string& t : texts) {
        const TwoForm phi = kahler_form(parse_expression(t), space, kInd);
        const SparseForm dphi =
            exterior_derivative(SparseForm::from_two_form(phi, space), space, kInd);
        for (int i = 0; i < 10; ++i) {
            const EvalEnvironment env =
                conj_env(2, {random_domain_value(), random_domain_value()});
            CHECK(max_coefficient_mag(dphi, env) <= 1e-8);
        }
    }
}

TEST_CASE("wedge is graded antisymmetric") {
    const SlotSpace space = SlotSpace::cotangent(2);
    SparseForm a(1), b(1);
    a.add_term({0}, parse_expression("z1"));
    a.add_term({2}, make_constant(2.0));
    b.add_term({1}, parse_expression("zb2"));
    b.add_term({3}, parse_expression("z2"));
    const SparseForm ab = wedge(a, b);
    const SparseForm ba = wedge(b, a);
    const EvalEnvironment env = conj_env(2, {random_value(), random_value()});
    for (const auto& [slots, coeff] : ab.terms()) {
        const auto it = ba.terms().find(slots);
        REQUIRE(it != ba.terms().end());
        CHECK(close(evaluate(coeff, env), -evaluate(it->second, env), 1e-13));
    }
    CHECK(wedge(a, a).empty_after_simplify());
}
