#include "curvelab/exp_polynomial.hpp"

#include <algorithm>
#include <cmath>

namespace curvelab {

ExpPolynomial::ExpPolynomial(Terms terms) : terms_(std::move(terms)) { prune(); }

ExpPolynomial ExpPolynomial::monomial(const Exponent& q, Complex c)
{
    return ExpPolynomial(Terms{{q, c}});
}

ExpPolynomial ExpPolynomial::constant(Complex c) { return monomial(Exponent(0, 0.0, 0.0), c); }

ExpPolynomial ExpPolynomial::shifted(const Exponent& q)
{
    auto out = monomial(q);
    if (q.m == 0) {
        out -= constant(1.0);
    }
    return out;
}

Complex ExpPolynomial::coefficient(const Exponent& q) const
{
    const auto it = terms_.find(q);
    return it == terms_.end() ? Complex(0.0) : it->second;
}

Complex ExpPolynomial::operator()(double t) const
{
    Complex sum = 0.0;
    for (const auto& [q, c] : terms_) {
        sum += c * eval_f(q, t);
    }
    return sum;
}

ExpPolynomial& ExpPolynomial::operator+=(const ExpPolynomial& other)
{
    for (const auto& [q, c] : other.terms_) {
        terms_[q] += c;
    }
    prune();
    return *this;
}

ExpPolynomial& ExpPolynomial::operator-=(const ExpPolynomial& other)
{
    for (const auto& [q, c] : other.terms_) {
        terms_[q] -= c;
    }
    prune();
    return *this;
}

ExpPolynomial& ExpPolynomial::operator*=(Complex s)
{
    for (auto& [q, c] : terms_) {
        c *= s;
    }
    prune();
    return *this;
}

ExpPolynomial operator*(const ExpPolynomial& a, const ExpPolynomial& b)
{
    ExpPolynomial::Terms product;
    for (const auto& [qa, ca] : a.terms_) {
        for (const auto& [qb, cb] : b.terms_) {
            product[qa + qb] += ca * cb;
        }
    }
    return ExpPolynomial(std::move(product));
}

ExpPolynomial ExpPolynomial::conjugated() const
{
    Terms out;
    for (const auto& [q, c] : terms_) {
        out[conjugate(q)] += std::conj(c);
    }
    return ExpPolynomial(std::move(out));
}

ExpPolynomial ExpPolynomial::real_part() const { return (*this + conjugated()) * Complex(0.5, 0.0); }

ExpPolynomial ExpPolynomial::imag_part() const
{
    return (*this - conjugated()) * Complex(0.0, -0.5);
}

ExpPolynomial ExpPolynomial::derivative() const
{
    // d/dt f^q = lambda f^q + m f^{q'}
    Terms out;
    for (const auto& [q, c] : terms_) {
        out[q] += c * q.lambda();
        if (q.m > 0) {
            out[prime(q)] += c * static_cast<double>(q.m);
        }
    }
    return ExpPolynomial(std::move(out));
}

ExpPolynomial ExpPolynomial::integral() const
{
    ExpPolynomial out;
    for (const auto& [q, c] : terms_) {
        const Complex lambda = q.lambda();
        if (lambda == Complex(0.0)) {
            out += monomial(Exponent(q.m + 1, 0.0, 0.0), c / static_cast<double>(q.m + 1));
            continue;
        }
        // I_0 = (f^(0,l) - 1)/l,  I_k = (f^(k,l) - k I_{k-1})/l
        ExpPolynomial running = (monomial(Exponent(0, q.re, q.im)) - constant(1.0)) * (1.0 / lambda);
        for (int k = 1; k <= q.m; ++k) {
            running = (monomial(Exponent(k, q.re, q.im)) - running * static_cast<double>(k)) *
                      (1.0 / lambda);
        }
        out += running * c;
    }
    return out;
}

double ExpPolynomial::max_abs_coefficient() const
{
    double best = 0.0;
    for (const auto& [q, c] : terms_) {
        best = std::max(best, std::abs(c));
    }
    return best;
}

void ExpPolynomial::prune()
{
    std::erase_if(terms_, [](const auto& kv) { return kv.second == Complex(0.0); });
}

} // namespace curvelab
