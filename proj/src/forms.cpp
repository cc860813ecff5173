#include "paramech/forms.hpp"

#include <algorithm>

namespace paramech {

// ===========================================================================
// SlotSpace
// ===========================================================================

SlotSpace::SlotSpace(std::vector<std::string> unbarred, std::vector<std::string> barred)
    : unbarred_(std::move(unbarred)), barred_(std::move(barred)) {
    if (unbarred_.size() != barred_.size()) {
        throw Error("slot space blocks must have equal length");
    }
}

SlotSpace SlotSpace::cotangent(int m) {
    std::vector<std::string> u, b;
    for (int i = 1; i <= m; ++i) {
        u.push_back(coordinate_name(CoordFamily::Z, i));
        b.push_back(coordinate_name(CoordFamily::Zbar, i));
    }
    return SlotSpace(std::move(u), std::move(b));
}

SlotSpace SlotSpace::tangent(int m) {
    std::vector<std::string> u, b;
    for (int i = 1; i <= m; ++i) u.push_back(coordinate_name(CoordFamily::Z, i));
    for (int i = 1; i <= m; ++i) u.push_back(coordinate_name(CoordFamily::Zdot, i));
    for (int i = 1; i <= m; ++i) b.push_back(coordinate_name(CoordFamily::Zbar, i));
    for (int i = 1; i <= m; ++i) b.push_back(coordinate_name(CoordFamily::Zbardot, i));
    return SlotSpace(std::move(u), std::move(b));
}

const std::string& SlotSpace::slot_coordinate(int slot) const {
    const int m = block_size();
    return slot < m ? unbarred_[slot] : barred_[slot - m];
}

std::string SlotSpace::differential_symbol(int slot) const {
    return "d" + slot_coordinate(slot);
}

ExprPtr SlotSpace::slot_derivative(const ExprPtr& e, int slot,
                                   DerivativeConvention conv) const {
    CoordFamily fam;
    int index = 0;
    if (!parse_coordinate_name(slot_coordinate(slot), fam, index)) {
        throw Error("slot coordinate is not a reserved spelling: " + slot_coordinate(slot));
    }
    return wirtinger_derivative(e, index, fam, conv);
}

// ===========================================================================
// Basic forms
// ===========================================================================

OneForm OneForm::zero(int m) {
    OneForm w;
    w.z_coeffs.assign(m, make_constant(0.0));
    w.zbar_coeffs.assign(m, make_constant(0.0));
    return w;
}

TwoForm TwoForm::zero(int m) {
    TwoForm w;
    const auto row = std::vector<ExprPtr>(m, make_constant(0.0));
    w.zz.assign(m, row);
    w.zzbar.assign(m, row);
    w.zbarzbar.assign(m, row);
    return w;
}

namespace {

ExprPtr scale_expr(const ParaNumber& c, const ExprPtr& e) {
    return simplify(c_mul(make_constant(c), e));
}

ExprPtr add_expr(const ExprPtr& a, const ExprPtr& b) { return simplify(c_add(a, b)); }

} // namespace

// ===========================================================================
// SparseForm
// ===========================================================================

void SparseForm::add_term(std::vector<int> slots, ExprPtr coeff) {
    if (static_cast<int>(slots.size()) != degree_) {
        throw Error("sparse form term has wrong degree");
    }
    // Sort with permutation sign; equal indices annihilate the term.
    int sign = 1;
    for (std::size_t i = 0; i < slots.size(); ++i) {
        for (std::size_t k = i + 1; k < slots.size(); ++k) {
            if (slots[i] == slots[k]) return;
            if (slots[i] > slots[k]) {
                std::swap(slots[i], slots[k]);
                sign = -sign;
            }
        }
    }
    ExprPtr signed_coeff = sign > 0 ? coeff : simplify(c_neg(coeff));
    auto it = terms_.find(slots);
    if (it == terms_.end()) {
        if (!is_constant_zero(signed_coeff)) terms_.emplace(std::move(slots), signed_coeff);
    } else {
        ExprPtr merged = add_expr(it->second, signed_coeff);
        if (is_constant_zero(merged)) terms_.erase(it);
        else it->second = merged;
    }
}

bool SparseForm::empty_after_simplify() const {
    for (const auto& [slots, coeff] : terms_) {
        if (!is_constant_zero(simplify(coeff))) return false;
    }
    return true;
}

SparseForm SparseForm::from_one_form(const OneForm& w, const SlotSpace& space) {
    SparseForm f(1);
    const int m = space.block_size();
    for (int i = 0; i < m; ++i) {
        if (!is_constant_zero(simplify(w.z_coeffs[i]))) f.add_term({i}, simplify(w.z_coeffs[i]));
        if (!is_constant_zero(simplify(w.zbar_coeffs[i])))
            f.add_term({m + i}, simplify(w.zbar_coeffs[i]));
    }
    return f;
}

SparseForm SparseForm::from_two_form(const TwoForm& w, const SlotSpace& space) {
    SparseForm f(2);
    const int m = space.block_size();
    for (int j = 0; j < m; ++j) {
        for (int i = 0; i < m; ++i) {
            f.add_term({j, i}, w.zz[j][i]);
            f.add_term({j, m + i}, w.zzbar[j][i]);
            f.add_term({m + j, m + i}, w.zbarzbar[j][i]);
        }
    }
    return f;
}

SparseForm wedge(const SparseForm& a, const SparseForm& b) {
    SparseForm out(a.degree() + b.degree());
    for (const auto& [sa, ca] : a.terms()) {
        for (const auto& [sb, cb] : b.terms()) {
            std::vector<int> slots = sa;
            slots.insert(slots.end(), sb.begin(), sb.end());
            out.add_term(std::move(slots), simplify(c_mul(ca, cb)));
        }
    }
    return out;
}

SparseForm exterior_derivative(const SparseForm& w, const SlotSpace& space,
                               DerivativeConvention conv) {
    SparseForm out(w.degree() + 1);
    for (const auto& [slots, coeff] : w.terms()) {
        for (int k = 0; k < space.total_slots(); ++k) {
            ExprPtr d = space.slot_derivative(coeff, k, conv);
            if (is_constant_zero(d)) continue;
            std::vector<int> ext;
            ext.reserve(slots.size() + 1);
            ext.push_back(k);
            ext.insert(ext.end(), slots.begin(), slots.end());
            out.add_term(std::move(ext), d);
        }
    }
    return out;
}

// ===========================================================================
// Derivative-built forms
// ===========================================================================

OneForm differential(const ExprPtr& f, const SlotSpace& space, DerivativeConvention conv) {
    const int m = space.block_size();
    OneForm w = OneForm::zero(m);
    for (int i = 0; i < m; ++i) {
        w.z_coeffs[i] = space.slot_derivative(f, i, conv);
        w.zbar_coeffs[i] = space.slot_derivative(f, m + i, conv);
    }
    return w;
}

TwoForm exterior_derivative(const OneForm& w, const SlotSpace& space,
                            DerivativeConvention conv) {
    const int m = space.block_size();
    TwoForm out = TwoForm::zero(m);
    // d(f dz_i) = sum_k (df/dz_k) dz_k^dz_i + (df/dzb_k) dzb_k^dz_i,
    // the mixed family folded onto the dz^dzb basis with its sign.
    for (int i = 0; i < m; ++i) {
        for (int k = 0; k < m; ++k) {
            ExprPtr dz_k = space.slot_derivative(w.z_coeffs[i], k, conv);
            out.zz[k][i] = add_expr(out.zz[k][i], dz_k);
            ExprPtr dzb_k = space.slot_derivative(w.z_coeffs[i], m + k, conv);
            // dzb_k^dz_i = -dz_i^dzb_k
            out.zzbar[i][k] = add_expr(out.zzbar[i][k], simplify(c_neg(dzb_k)));
            ExprPtr g_dz_k = space.slot_derivative(w.zbar_coeffs[i], k, conv);
            out.zzbar[k][i] = add_expr(out.zzbar[k][i], g_dz_k);
            ExprPtr g_dzb_k = space.slot_derivative(w.zbar_coeffs[i], m + k, conv);
            out.zbarzbar[k][i] = add_expr(out.zbarzbar[k][i], g_dzb_k);
        }
    }
    return out;
}

VectorFieldValue apply_J(const VectorFieldValue& v) {
    VectorFieldValue out = v;
    const ParaNumber mj{0.0, -1.0}, pj{0.0, 1.0};
    for (auto& c : out.z_components) c = mj * c;
    for (auto& c : out.zbar_components) c = pj * c;
    return out;
}

OneForm apply_Jstar(const OneForm& w) {
    OneForm out;
    const ParaNumber mj{0.0, -1.0}, pj{0.0, 1.0};
    out.z_coeffs.reserve(w.z_coeffs.size());
    out.zbar_coeffs.reserve(w.zbar_coeffs.size());
    for (const auto& c : w.z_coeffs) out.z_coeffs.push_back(scale_expr(mj, c));
    for (const auto& c : w.zbar_coeffs) out.zbar_coeffs.push_back(scale_expr(pj, c));
    return out;
}

OneForm vertical_differential(const ExprPtr& L, const SlotSpace& space,
                              DerivativeConvention conv) {
    return apply_Jstar(differential(L, space, conv));
}

TwoForm kahler_form(const ExprPtr& L, const SlotSpace& space, DerivativeConvention conv) {
    const int m = space.block_size();
    TwoForm out = TwoForm::zero(m);
    std::vector<ExprPtr> dLdz(m), dLdzb(m);
    for (int i = 0; i < m; ++i) {
        dLdz[i] = space.slot_derivative(L, i, conv);
        dLdzb[i] = space.slot_derivative(L, m + i, conv);
    }
    const ParaNumber mj{0.0, -1.0};
    for (int j = 0; j < m; ++j) {
        for (int i = 0; i < m; ++i) {
            out.zz[j][i] = scale_expr(mj, space.slot_derivative(dLdz[i], j, conv));
            // +j L_{zb_j z_i} dzb_j^dz_i - j L_{z_j zb_i} dz_j^dzb_i
            ExprPtr mixed_a = space.slot_derivative(dLdz[i], m + j, conv);
            out.zzbar[i][j] = add_expr(out.zzbar[i][j], scale_expr(mj, mixed_a));
            ExprPtr mixed_b = space.slot_derivative(dLdzb[i], j, conv);
            out.zzbar[j][i] = add_expr(out.zzbar[j][i], scale_expr(mj, mixed_b));
            out.zbarzbar[j][i] = scale_expr(mj, space.slot_derivative(dLdzb[i], m + j, conv));
        }
    }
    return out;
}

OneFormValue interior_product(const VectorFieldValue& v, const TwoForm& w,
                              const SlotSpace& space, const EvalEnvironment& env) {
    const int m = space.block_size();
    if (static_cast<int>(v.z_components.size()) != m ||
        static_cast<int>(v.zbar_components.size()) != m || w.block_size() != m) {
        throw Error("interior product dimension mismatch");
    }
    OneFormValue out;
    out.z_coeffs.assign(m, ParaNumber{});
    out.zbar_coeffs.assign(m, ParaNumber{});
    auto accum = [&](int slot, const ParaNumber& val) {
        if (slot < m) out.z_coeffs[slot] += val;
        else out.zbar_coeffs[slot - m] += val;
    };
    // i_v(c * da^db) = c * (v^a db - v^b da), first-slot contraction.
    auto contract = [&](const ExprPtr& coeff, int a, int b) {
        if (is_constant_zero(coeff)) return;
        const ParaNumber c = evaluate(coeff, env);
        accum(b, c * v.slot(space, a));
        accum(a, -(c * v.slot(space, b)));
    };
    for (int j = 0; j < m; ++j) {
        for (int i = 0; i < m; ++i) {
            contract(w.zz[j][i], j, i);
            contract(w.zzbar[j][i], j, m + i);
            contract(w.zbarzbar[j][i], m + j, m + i);
        }
    }
    return out;
}

std::pair<OneForm, TwoForm> canonical_structures(int m) {
    if (m < 1) throw Error("canonical structures need dimension >= 1");
    const SlotSpace space = SlotSpace::cotangent(m);
    const ParaNumber half_j{0.0, 0.5};
    OneForm lambda = OneForm::zero(m);
    for (int i = 0; i < m; ++i) {
        lambda.z_coeffs[i] =
            scale_expr(-half_j, make_coordinate(coordinate_name(CoordFamily::Zbar, i + 1)));
        lambda.zbar_coeffs[i] =
            scale_expr(half_j, make_coordinate(coordinate_name(CoordFamily::Z, i + 1)));
    }
    // The coefficients are z-linear, so d lambda is convention independent.
    TwoForm dl = exterior_derivative(lambda, space, DerivativeConvention::independent);
    TwoForm phi = TwoForm::zero(m);
    for (int j = 0; j < m; ++j) {
        for (int i = 0; i < m; ++i) {
            phi.zz[j][i] = simplify(c_neg(dl.zz[j][i]));
            phi.zzbar[j][i] = simplify(c_neg(dl.zzbar[j][i]));
            phi.zbarzbar[j][i] = simplify(c_neg(dl.zbarzbar[j][i]));
        }
    }
    return {lambda, phi};
}

OneFormValue evaluate(const OneForm& w, const SlotSpace& space, const EvalEnvironment& env) {
    const int m = space.block_size();
    OneFormValue out;
    out.z_coeffs.reserve(m);
    out.zbar_coeffs.reserve(m);
    for (int i = 0; i < m; ++i) out.z_coeffs.push_back(evaluate(w.z_coeffs[i], env));
    for (int i = 0; i < m; ++i) out.zbar_coeffs.push_back(evaluate(w.zbar_coeffs[i], env));
    return out;
}

double max_coefficient_mag(const SparseForm& w, const EvalEnvironment& env) {
    double best = 0.0;
    for (const auto& [slots, coeff] : w.terms()) {
        best = std::max(best, mag(evaluate(coeff, env)));
    }
    return best;
}

// ===========================================================================
// Printing
// ===========================================================================

namespace {

void append_term(std::string& out, const std::string& coeff, const std::string& basis) {
    if (!out.empty()) out += " + ";
    out += "(" + coeff + ")*" + basis;
}

} // namespace

std::string to_string(const OneForm& w, const SlotSpace& space) {
    std::string out;
    for (int s = 0; s < space.total_slots(); ++s) {
        ExprPtr c = simplify(w.slot(space, s));
        if (is_constant_zero(c)) continue;
        append_term(out, to_string(c), space.differential_symbol(s));
    }
    return out.empty() ? "0" : out;
}

std::string to_string(const SparseForm& w, const SlotSpace& space) {
    std::string out;
    for (const auto& [slots, coeff] : w.terms()) {
        ExprPtr c = simplify(coeff);
        if (is_constant_zero(c)) continue;
        std::string basis;
        for (std::size_t i = 0; i < slots.size(); ++i) {
            if (i) basis += "^";
            basis += space.differential_symbol(slots[i]);
        }
        append_term(out, to_string(c), basis);
    }
    return out.empty() ? "0" : out;
}

std::string to_string(const TwoForm& w, const SlotSpace& space) {
    return to_string(SparseForm::from_two_form(w, space), space);
}

} // namespace paramech
