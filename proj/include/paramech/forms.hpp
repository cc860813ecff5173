#pragma once

#include <map>
#include <string>
#include <vector>

#include "paramech/calculus.hpp"
#include "paramech/expr.hpp"

namespace paramech {

// Coordinate slots of a phase space: an unbarred block of paracomplex
// coordinates followed by the barred block of their formal conjugates.
// Slot ids run 0..M-1 (unbarred) then M..2M-1 (barred).
class SlotSpace {
public:
    SlotSpace(std::vector<std::string> unbarred, std::vector<std::string> barred);

    // z_1..z_m | zb_1..zb_m (the cotangent-side space).
    static SlotSpace cotangent(int m);
    // z_1..z_m, zd_1..zd_m | zb_1..zb_m, zdb_1..zdb_m (velocity phase space).
    static SlotSpace tangent(int m);

    int block_size() const { return static_cast<int>(unbarred_.size()); }
    int total_slots() const { return 2 * block_size(); }

    const std::string& slot_coordinate(int slot) const;
    std::string differential_symbol(int slot) const; // "dz1", "dzb1", ...
    bool is_barred(int slot) const { return slot >= block_size(); }

    // Wirtinger derivative along the slot's coordinate.
    ExprPtr slot_derivative(const ExprPtr& e, int slot, DerivativeConvention conv) const;

private:
    std::vector<std::string> unbarred_, barred_;
};

// Value of a paracomplex vector field at a point: coefficients on the
// unbarred and barred coordinate fields.
struct VectorFieldValue {
    std::vector<ParaNumber> z_components;
    std::vector<ParaNumber> zbar_components;

    static VectorFieldValue zero(int m) {
        return {std::vector<ParaNumber>(m), std::vector<ParaNumber>(m)};
    }
    const ParaNumber& slot(const SlotSpace& space, int s) const {
        return s < space.block_size() ? z_components[s]
                                      : zbar_components[s - space.block_size()];
    }
};

// 1-form with symbolic coefficients on dz_i and dzb_i.
struct OneForm {
    std::vector<ExprPtr> z_coeffs;
    std::vector<ExprPtr> zbar_coeffs;

    static OneForm zero(int m);
    const ExprPtr& slot(const SlotSpace& space, int s) const {
        return s < space.block_size() ? z_coeffs[s] : zbar_coeffs[s - space.block_size()];
    }
};

// Numeric coefficients of a 1-form at a point.
struct OneFormValue {
    std::vector<ParaNumber> z_coeffs;
    std::vector<ParaNumber> zbar_coeffs;
};

// 2-form stored as the raw coefficient blocks of the source formulas:
// zz[j][i] on dz_j^dz_i, zzbar[j][i] on dz_j^dzb_i, zbarzbar[j][i] on
// dzb_j^dzb_i. The same-family blocks are antisymmetrized (canonical
// j < i storage) on conversion to a SparseForm, by the printer and by
// every contraction.
struct TwoForm {
    std::vector<std::vector<ExprPtr>> zz;
    std::vector<std::vector<ExprPtr>> zzbar;
    std::vector<std::vector<ExprPtr>> zbarzbar;

    static TwoForm zero(int m);
    int block_size() const { return static_cast<int>(zz.size()); }
};

// General p-form over slot ids with strictly increasing index tuples;
// used for wedges, d of 2-forms and the Frobenius test. Degrees stay <= 5.
class SparseForm {
public:
    explicit SparseForm(int degree) : degree_(degree) {}

    int degree() const { return degree_; }
    const std::map<std::vector<int>, ExprPtr>& terms() const { return terms_; }

    // Adds coeff on the (possibly unsorted) tuple, folding in the
    // permutation sign; duplicate indices drop the term.
    void add_term(std::vector<int> slots, ExprPtr coeff);

    bool empty_after_simplify() const;

    static SparseForm from_one_form(const OneForm& w, const SlotSpace& space);
    static SparseForm from_two_form(const TwoForm& w, const SlotSpace& space);

private:
    int degree_;
    std::map<std::vector<int>, ExprPtr> terms_;
};

SparseForm wedge(const SparseForm& a, const SparseForm& b);

SparseForm exterior_derivative(const SparseForm& w, const SlotSpace& space,
                               DerivativeConvention conv);

// d of a 0-form: the differential, as a OneForm.
OneForm differential(const ExprPtr& f, const SlotSpace& space, DerivativeConvention conv);

// d of a 1-form, canonicalized into TwoForm blocks.
TwoForm exterior_derivative(const OneForm& w, const SlotSpace& space,
                            DerivativeConvention conv);

// J on vectors: multiplies unbarred components by -j, barred by +j.
VectorFieldValue apply_J(const VectorFieldValue& v);

// Dual action on 1-forms: dz -> -j dz, dzb -> +j dzb.
OneForm apply_Jstar(const OneForm& w);

// d_J L = -j (dL/dz_i) dz_i + j (dL/dzb_i) dzb_i.
OneForm vertical_differential(const ExprPtr& L, const SlotSpace& space,
                              DerivativeConvention conv);

// Phi_L = -d d_J L with blocks as printed: zz[j][i] = -j L_{z_j z_i},
// mixed blocks folded onto dz^dzb, zbarzbar[j][i] = -j L_{zb_j zb_i}.
TwoForm kahler_form(const ExprPtr& L, const SlotSpace& space, DerivativeConvention conv);

// First-slot contraction of v into w, evaluated at env.
OneFormValue interior_product(const VectorFieldValue& v, const TwoForm& w,
                              const SlotSpace& space, const EvalEnvironment& env);

// Para-Liouville form lambda = j/2 (z_i dzb_i - zb_i dz_i) and the
// canonical 2-form Phi = -d lambda on the cotangent space.
std::pair<OneForm, TwoForm> canonical_structures(int m);

OneFormValue evaluate(const OneForm& w, const SlotSpace& space, const EvalEnvironment& env);

// Largest coefficient magnitude of the form at the point.
double max_coefficient_mag(const SparseForm& w, const EvalEnvironment& env);

std::string to_string(const OneForm& w, const SlotSpace& space);
std::string to_string(const TwoForm& w, const SlotSpace& space);
std::string to_string(const SparseForm& w, const SlotSpace& space);

} // namespace paramech
