#pragma once

#include <cmath>
#include <string>

#include "paramech/errors.hpp"

namespace paramech {

// Relative tolerance used to flag a divisor as sitting on the light cone.
inline constexpr double kZeroDivisorTol = 1e-12;

struct NullPair;

// Element re + j*jm of the split-complex ring, j*j = +1.
//
// Values are stored as the two null (idempotent) coordinates
// plus = re + jm and minus = re - jm, so every ring operation is
// componentwise real arithmetic and stays well conditioned when the two
// sheets carry very different magnitudes; the hyperbolic flows of this
// ring produce exactly that regime. re/jm are recovered on demand.
class ParaNumber {
public:
    constexpr ParaNumber() = default;
    constexpr ParaNumber(double re, double jm) : plus_(re + jm), minus_(re - jm) {}

    static constexpr ParaNumber real(double x) { return {x, 0.0}; }
    static constexpr ParaNumber j() { return {0.0, 1.0}; }
    static constexpr ParaNumber from_null(double plus, double minus) {
        ParaNumber z;
        z.plus_ = plus;
        z.minus_ = minus;
        return z;
    }

    constexpr double re() const { return (plus_ + minus_) / 2.0; }
    constexpr double jm() const { return (plus_ - minus_) / 2.0; }
    constexpr double null_plus() const { return plus_; }
    constexpr double null_minus() const { return minus_; }

    constexpr ParaNumber operator-() const { return from_null(-plus_, -minus_); }

    constexpr ParaNumber& operator+=(const ParaNumber& o) {
        plus_ += o.plus_;
        minus_ += o.minus_;
        return *this;
    }
    constexpr ParaNumber& operator-=(const ParaNumber& o) {
        plus_ -= o.plus_;
        minus_ -= o.minus_;
        return *this;
    }
    constexpr ParaNumber& operator*=(const ParaNumber& o) {
        plus_ *= o.plus_;
        minus_ *= o.minus_;
        return *this;
    }

    constexpr bool operator==(const ParaNumber& o) const {
        return plus_ == o.plus_ && minus_ == o.minus_;
    }

    bool finite() const { return std::isfinite(plus_) && std::isfinite(minus_); }

private:
    double plus_ = 0.0;
    double minus_ = 0.0;
};

constexpr ParaNumber operator+(ParaNumber a, const ParaNumber& b) { return a += b; }
constexpr ParaNumber operator-(ParaNumber a, const ParaNumber& b) { return a -= b; }
constexpr ParaNumber operator*(ParaNumber a, const ParaNumber& b) { return a *= b; }
constexpr ParaNumber operator*(double s, const ParaNumber& a) {
    return ParaNumber::from_null(s * a.null_plus(), s * a.null_minus());
}
constexpr ParaNumber operator*(const ParaNumber& a, double s) { return s * a; }

// Coefficients on the idempotents e+ = (1+j)/2 and e- = (1-j)/2.
struct NullPair {
    double plus = 0.0;
    double minus = 0.0;
};

constexpr NullPair null_split(const ParaNumber& z) {
    return {z.null_plus(), z.null_minus()};
}

constexpr ParaNumber null_merge(const NullPair& p) {
    return ParaNumber::from_null(p.plus, p.minus);
}

// Conjugation swaps the two sheets; an exact involution.
constexpr ParaNumber conj(const ParaNumber& z) {
    return ParaNumber::from_null(z.null_minus(), z.null_plus());
}

// z * conj(z); always real, value re^2 - jm^2 = plus * minus.
constexpr double paranorm(const ParaNumber& z) { return z.null_plus() * z.null_minus(); }

// Magnitude used for tolerances and diagnostics.
inline double mag(const ParaNumber& z) {
    return std::max(std::fabs(z.re()), std::fabs(z.jm()));
}

// True when |re| == |jm| within `tol` relative to max(|re|, |jm|, 1);
// equivalently min(|plus|, |minus|) below the scaled tolerance.
inline bool is_zero_divisor(const ParaNumber& z, double tol = kZeroDivisorTol) {
    const double scale = std::max({std::fabs(z.re()), std::fabs(z.jm()), 1.0});
    return std::min(std::fabs(z.null_plus()), std::fabs(z.null_minus())) <= tol * scale;
}

ParaNumber para_div(const ParaNumber& lhs, const ParaNumber& rhs,
                    double tol = kZeroDivisorTol);

inline ParaNumber operator/(const ParaNumber& a, const ParaNumber& b) {
    return para_div(a, b);
}

// Componentwise real functions on the null coordinates.
ParaNumber sqrt(const ParaNumber& z);
ParaNumber exp(const ParaNumber& z);
ParaNumber log(const ParaNumber& z);

// Integer power by repeated multiplication; negative exponents invert first.
ParaNumber powi(const ParaNumber& z, int exponent, double tol = kZeroDivisorTol);

std::string to_string(const ParaNumber& z);

} // namespace paramech
