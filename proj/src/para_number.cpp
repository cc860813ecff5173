#include "paramech/para_number.hpp"

#include <charconv>
#include <cmath>

namespace paramech {

namespace {

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

} // namespace

ParaNumber para_div(const ParaNumber& lhs, const ParaNumber& rhs, double tol) {
    if (is_zero_divisor(rhs, tol)) {
        throw ZeroDivisorError("division by zero divisor " + to_string(rhs));
    }
    return ParaNumber::from_null(lhs.null_plus() / rhs.null_plus(),
                                 lhs.null_minus() / rhs.null_minus());
}

ParaNumber sqrt(const ParaNumber& z) {
    const double p = z.null_plus(), m = z.null_minus();
    if (p < 0.0 || m < 0.0) {
        throw DomainError("sqrt of " + to_string(z) + ": null component (" +
                          format_double(p) + ", " + format_double(m) + ") is negative");
    }
    return ParaNumber::from_null(std::sqrt(p), std::sqrt(m));
}

ParaNumber exp(const ParaNumber& z) {
    return ParaNumber::from_null(std::exp(z.null_plus()), std::exp(z.null_minus()));
}

ParaNumber log(const ParaNumber& z) {
    const double p = z.null_plus(), m = z.null_minus();
    if (p <= 0.0 || m <= 0.0) {
        throw DomainError("log of " + to_string(z) + ": null component (" +
                          format_double(p) + ", " + format_double(m) + ") is not positive");
    }
    return ParaNumber::from_null(std::log(p), std::log(m));
}

ParaNumber powi(const ParaNumber& z, int exponent, double tol) {
    ParaNumber base = z;
    long n = exponent;
    if (n < 0) {
        if (is_zero_divisor(z, tol)) {
            throw ZeroDivisorError("negative power of zero divisor " + to_string(z));
        }
        base = para_div(ParaNumber::real(1.0), z, tol);
        n = -n;
    }
    ParaNumber acc = ParaNumber::real(1.0);
    while (n > 0) {
        if (n & 1) acc *= base;
        base *= base;
        n >>= 1;
    }
    return acc;
}

std::string to_string(const ParaNumber& z) {
    std::string s = format_double(z.re());
    s += (z.jm() < 0.0 || std::signbit(z.jm())) ? "-" : "+";
    s += format_double(std::fabs(z.jm()));
    s += "j";
    return s;
}

} // namespace paramech
