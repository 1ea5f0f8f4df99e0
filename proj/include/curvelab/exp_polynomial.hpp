#pragma once

#include "curvelab/exponent.hpp"

#include <map>

namespace curvelab {

/// A finite sum  sum_q c_q f^q(t)  with complex coefficients.
///
/// Used for exact bookkeeping in coefficient space: basis functions, their
/// antiderivatives, products of log-price functions. Terms whose
/// coefficient is exactly zero are dropped.
class ExpPolynomial {
public:
    using Terms = std::map<Exponent, Complex>;

    ExpPolynomial() = default;
    explicit ExpPolynomial(Terms terms);

    /// c f^q
    static ExpPolynomial monomial(const Exponent& q, Complex c = 1.0);
    static ExpPolynomial constant(Complex c);
    /// l^q = f^q - f^q(0)
    static ExpPolynomial shifted(const Exponent& q);

    const Terms& terms() const { return terms_; }
    Complex coefficient(const Exponent& q) const;
    bool empty() const { return terms_.empty(); }

    Complex operator()(double t) const;

    ExpPolynomial& operator+=(const ExpPolynomial& other);
    ExpPolynomial& operator-=(const ExpPolynomial& other);
    ExpPolynomial& operator*=(Complex s);

    friend ExpPolynomial operator+(ExpPolynomial a, const ExpPolynomial& b) { return a += b; }
    friend ExpPolynomial operator-(ExpPolynomial a, const ExpPolynomial& b) { return a -= b; }
    friend ExpPolynomial operator*(ExpPolynomial a, Complex s) { return a *= s; }
    friend ExpPolynomial operator*(Complex s, ExpPolynomial a) { return a *= s; }
    friend ExpPolynomial operator*(const ExpPolynomial& a, const ExpPolynomial& b);

    /// Pointwise complex conjugate: c f^q -> conj(c) f^{conj q}.
    ExpPolynomial conjugated() const;
    ExpPolynomial real_part() const;
    ExpPolynomial imag_part() const;

    ExpPolynomial derivative() const;
    /// Antiderivative vanishing at t = 0.
    ExpPolynomial integral() const;

    /// Largest coefficient magnitude, 0 for the empty sum.
    double max_abs_coefficient() const;

private:
    void prune();

    Terms terms_;
};

} // namespace curvelab
