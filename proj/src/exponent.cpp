#include "curvelab/exponent.hpp"

#include "curvelab/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace curvelab {

namespace {

double normalise_zero(double v) { return v == 0.0 ? 0.0 : v; }

// exp(z) - 1 without cancellation for small |z|.
Complex expm1_complex(Complex z)
{
    const double x = z.real();
    const double y = z.imag();
    if (y == 0.0) {
        return {std::expm1(x), 0.0};
    }
    const double s = std::sin(0.5 * y);
    const double re = std::expm1(x) * std::cos(y) - 2.0 * s * s;
    const double im = std::exp(x) * std::sin(y);
    return {re, im};
}

Complex exp_lambda_t(const Exponent& q, double t)
{
    if (q.im == 0.0) {
        return {std::exp(q.re * t), 0.0};
    }
    const double mag = std::exp(q.re * t);
    return {mag * std::cos(q.im * t), mag * std::sin(q.im * t)};
}

} // namespace

Exponent::Exponent(int degree, double real_part, double imag_part)
    : m(degree), re(normalise_zero(real_part)), im(normalise_zero(imag_part))
{
    if (degree < 0) {
        throw DomainError("exponent degree must be nonnegative, got " + std::to_string(degree));
    }
    if (!std::isfinite(real_part) || !std::isfinite(imag_part)) {
        throw DomainError("exponent lambda must be finite");
    }
}

Exponent operator+(const Exponent& a, const Exponent& b)
{
    return Exponent(a.m + b.m, a.re + b.re, a.im + b.im);
}

Exponent conjugate(const Exponent& q) { return Exponent(q.m, q.re, -q.im); }

Exponent prime(const Exponent& q) { return Exponent(std::max(0, q.m - 1), q.re, q.im); }

Exponent tilde(const Exponent& q)
{
    if (q.re == 0.0 && q.im == 0.0) {
        return Exponent(q.m + 1, 0.0, 0.0);
    }
    return q;
}

Complex eval_f(const Exponent& q, double t)
{
    const double poly = q.m == 0 ? 1.0 : std::pow(t, q.m);
    return poly * exp_lambda_t(q, t);
}

Complex eval_l(const Exponent& q, double t)
{
    if (q.is_zero()) {
        throw DomainError("l^q is undefined for the zero exponent");
    }
    if (q.m > 0) {
        return eval_f(q, t);
    }
    return expm1_complex(q.lambda() * t);
}

Complex integral_f(const Exponent& q, double t)
{
    const int m = q.m;
    const Complex lambda = q.lambda();
    if (lambda == Complex(0.0, 0.0)) {
        return std::pow(t, m + 1) / static_cast<double>(m + 1);
    }
    if (std::abs(lambda) * t <= 1.0) {
        // sum_k lambda^k t^{m+k+1} / (k! (m+k+1))
        Complex power = std::pow(t, m + 1);
        Complex sum = 0.0;
        for (int k = 0; k < 60; ++k) {
            const Complex term = power / static_cast<double>(m + k + 1);
            sum += term;
            if (std::abs(term) <= 1e-18 * std::abs(sum)) {
                break;
            }
            power *= lambda * t / static_cast<double>(k + 1);
        }
        return sum;
    }
    const Complex growth = exp_lambda_t(q, t);
    Complex integral = expm1_complex(lambda * t) / lambda;
    double tk = 1.0;
    for (int k = 1; k <= m; ++k) {
        tk *= t;
        integral = (tk * growth - static_cast<double>(k) * integral) / lambda;
    }
    return integral;
}

std::string to_string(const Exponent& q)
{
    std::ostringstream os;
    os.precision(17);
    os << '(' << q.m << ", " << q.re;
    if (q.im != 0.0) {
        os << (q.im < 0 ? " - " : " + ") << std::abs(q.im) << 'i';
    }
    os << ')';
    return os.str();
}

ExponentSet::ExponentSet(std::initializer_list<Exponent> members)
    : ExponentSet(std::vector<Exponent>(members))
{
}

ExponentSet::ExponentSet(std::vector<Exponent> members) : members_(std::move(members))
{
    std::sort(members_.begin(), members_.end());
    members_.erase(std::unique(members_.begin(), members_.end()), members_.end());
}

bool ExponentSet::contains(const Exponent& q) const
{
    return std::binary_search(members_.begin(), members_.end(), q);
}

ExponentSet ExponentSet::with(const Exponent& q) const
{
    auto copy = members_;
    copy.push_back(q);
    return ExponentSet(std::move(copy));
}

ExponentSet ExponentSet::united(const ExponentSet& other) const
{
    auto copy = members_;
    copy.insert(copy.end(), other.members_.begin(), other.members_.end());
    return ExponentSet(std::move(copy));
}

ExponentSet ExponentSet::without(const ExponentSet& other) const
{
    std::vector<Exponent> kept;
    std::copy_if(members_.begin(), members_.end(), std::back_inserter(kept),
                 [&](const Exponent& q) { return !other.contains(q); });
    return ExponentSet(std::move(kept));
}

std::string to_string(const ExponentSet& q)
{
    std::string out = "{";
    bool first = true;
    for (const auto& e : q) {
        if (!first) {
            out += ", ";
        }
        out += to_string(e);
        first = false;
    }
    return out + "}";
}

std::vector<Exponent> missing_for_closure(const ExponentSet& q)
{
    std::vector<Exponent> missing;
    for (const auto& e : q) {
        for (const auto& needed : {conjugate(e), prime(e)}) {
            if (!q.contains(needed)) {
                missing.push_back(needed);
            }
        }
    }
    std::sort(missing.begin(), missing.end());
    missing.erase(std::unique(missing.begin(), missing.end()), missing.end());
    return missing;
}

bool is_closed(const ExponentSet& q) { return missing_for_closure(q).empty(); }

ExponentSet closure(const ExponentSet& q)
{
    ExponentSet current = q;
    for (;;) {
        const auto missing = missing_for_closure(current);
        if (missing.empty()) {
            return current;
        }
        current = current.united(ExponentSet(missing));
    }
}

int multiplicity(const ExponentSet& q, Complex lambda)
{
    int m = 0;
    while (q.contains(Exponent(m, lambda.real(), lambda.imag()))) {
        ++m;
    }
    return m;
}

DerivedSets derived_sets(const ExponentSet& q)
{
    std::vector<Exponent> tilde_members;
    for (const auto& e : q) {
        tilde_members.push_back(tilde(e));
    }
    ExponentSet tilde_set(tilde_members);

    auto with_zero = tilde_members;
    with_zero.emplace_back(0, 0.0, 0.0);

    std::vector<Exponent> square;
    for (std::size_t i = 0; i < with_zero.size(); ++i) {
        for (std::size_t j = i; j < with_zero.size(); ++j) {
            square.push_back(with_zero[i] + with_zero[j]);
        }
    }
    std::vector<Exponent> sharp;
    for (const auto& e : tilde_set) {
        sharp.push_back(e + conjugate(e));
    }
    return {std::move(tilde_set), ExponentSet(std::move(square)), ExponentSet(std::move(sharp))};
}

std::vector<Exponent> hypothesis_witnesses(const ExponentSet& q)
{
    const auto sets = derived_sets(q);
    const Exponent zero(0, 0.0, 0.0);
    std::vector<Exponent> witnesses;
    for (const auto& e : sets.tilde) {
        const Exponent doubled = e + conjugate(e);
        if (doubled == zero || sets.tilde.contains(doubled)) {
            witnesses.push_back(e);
        }
    }
    return witnesses;
}

bool arbitrage_hypothesis(const ExponentSet& q) { return hypothesis_witnesses(q).empty(); }

} // namespace curvelab
