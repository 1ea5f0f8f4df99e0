#pragma once

#include <compare>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace curvelab {

using Complex = std::complex<double>;

/// An exponent (m, lambda) generates the function t^m exp(lambda t).
///
/// Equality and ordering are exact on the triple (m, re, im), ordered
/// lexicographically. Negative zero is normalised to positive zero so that
/// conjugating a real exponent yields a bitwise-equal value.
struct Exponent {
    int m = 0;
    double re = 0.0;
    double im = 0.0;

    Exponent() = default;
    Exponent(int degree, double real_part, double imag_part = 0.0);

    Complex lambda() const { return {re, im}; }
    bool is_real() const { return im == 0.0; }
    bool is_zero() const { return m == 0 && re == 0.0 && im == 0.0; }

    friend bool operator==(const Exponent&, const Exponent&) = default;
    friend std::partial_ordering operator<=>(const Exponent&, const Exponent&) = default;
};

/// Componentwise sum, matching f^{q1+q2} = f^{q1} f^{q2}.
Exponent operator+(const Exponent& a, const Exponent& b);

Exponent conjugate(const Exponent& q);
/// (max(0, m-1), lambda)
Exponent prime(const Exponent& q);
/// (m+1, 0) when lambda = 0, otherwise q unchanged.
Exponent tilde(const Exponent& q);

/// f^q(t) = t^m exp(lambda t)
Complex eval_f(const Exponent& q, double t);
/// l^q(t) = f^q(t) - f^q(0). Throws DomainError for q = (0,0).
Complex eval_l(const Exponent& q, double t);
/// Integral of f^q over [0, t], accurate for small |lambda t|.
Complex integral_f(const Exponent& q, double t);

std::string to_string(const Exponent& q);

/// Finite set of exponents kept in canonical (lexicographic) order.
class ExponentSet {
public:
    using const_iterator = std::vector<Exponent>::const_iterator;

    ExponentSet() = default;
    ExponentSet(std::initializer_list<Exponent> members);
    explicit ExponentSet(std::vector<Exponent> members);

    bool contains(const Exponent& q) const;
    std::size_t size() const { return members_.size(); }
    bool empty() const { return members_.empty(); }
    const_iterator begin() const { return members_.begin(); }
    const_iterator end() const { return members_.end(); }
    const std::vector<Exponent>& members() const { return members_; }

    ExponentSet with(const Exponent& q) const;
    ExponentSet united(const ExponentSet& other) const;
    ExponentSet without(const ExponentSet& other) const;

    friend bool operator==(const ExponentSet&, const ExponentSet&) = default;

private:
    std::vector<Exponent> members_;
};

std::string to_string(const ExponentSet& q);

/// True iff q in Q implies conjugate(q) and prime(q) are in Q.
bool is_closed(const ExponentSet& q);

/// Smallest closed superset.
ExponentSet closure(const ExponentSet& q);

/// Exponents required by closedness but missing from the set.
std::vector<Exponent> missing_for_closure(const ExponentSet& q);

/// min{m >= 0 : (m, lambda) not in Q}
int multiplicity(const ExponentSet& q, Complex lambda);

struct DerivedSets {
    ExponentSet tilde;  ///< {tilde(q) : q in Q}
    ExponentSet square; ///< {q1 + q2 : q1, q2 in tilde(Q) + {0}}
    ExponentSet sharp;  ///< {q + conj(q) : q in tilde(Q)}
};

DerivedSets derived_sets(const ExponentSet& q);

/// Members q of tilde(Q) with q + conj(q) in tilde(Q) + {0}, canonical order.
/// Empty exactly when the arbitrage-everywhere hypothesis holds.
std::vector<Exponent> hypothesis_witnesses(const ExponentSet& q);

/// For all q in tilde(Q): q + conj(q) not in tilde(Q) + {0}.
bool arbitrage_hypothesis(const ExponentSet& q);

} // namespace curvelab
