#pragma once

#include <map>
#include <string>
#include <vector>

#include "paramech/expr.hpp"

namespace paramech {

// Which sign the j-term of the Wirtinger operators carries.
// `paper` is the literal convention of the source formulas, under which
// d z / d z evaluates to 0 and d zbar / d z to 1; `independent` swaps the
// signs so that z and zbar behave as independent slots.
enum class DerivativeConvention { paper, independent };

std::string to_string(DerivativeConvention c);
DerivativeConvention convention_from_string(const std::string& s);

// Coordinate families of the reserved spellings.
enum class CoordFamily { Z, Zbar, Zdot, Zbardot };

// "z3", "zb3", "zd3", "zdb3" for index 3.
std::string coordinate_name(CoordFamily f, int index);

// Real partners: Z/Zbar share (x<i>, y<i>); Zdot/Zbardot share (xd<i>, yd<i>).
std::pair<std::string, std::string> real_partners(CoordFamily f, int index);

// True when `name` is a reserved paracomplex spelling; fills family/index.
bool parse_coordinate_name(const std::string& name, CoordFamily& family, int& index);

// Symbolic Wirtinger derivative with respect to the family-`which`
// coordinate of the given index, reduced to real partials and simplified.
ExprPtr wirtinger_derivative(const ExprPtr& e, int index, CoordFamily which,
                             DerivativeConvention conv);

// Value, gradient and Hessian over the real coordinates underlying the
// expression's paracomplex coordinates.
struct JetValue {
    ParaNumber value;
    std::map<std::string, ParaNumber> grad;
    std::map<std::pair<std::string, std::string>, ParaNumber> hess;
};

JetValue jet_evaluate(const ExprPtr& e, const EvalEnvironment& env, int order);

// Central finite difference along one real coordinate; the workhorse
// oracle for every derivative test.
ParaNumber fd_oracle(const ExprPtr& e, const EvalEnvironment& env,
                     const std::string& real_coord, double h);

// Environment shifted by delta along a real coordinate (adjusts the two
// bound paracomplex partners).
EvalEnvironment shift_environment(const EvalEnvironment& env,
                                  const std::string& real_coord, double delta);

// Real coordinates underlying every paracomplex coordinate of the tree,
// sorted; non-reserved names contribute nothing.
std::vector<std::string> underlying_real_coordinates(const ExprPtr& e);

} // namespace paramech
