#include "curvelab/curve_model.hpp"

#include "curvelab/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <tuple>

namespace curvelab {

BasisFunction::BasisFunction(const Exponent& q, BasisKind kind) : q_(q), kind_(kind)
{
    if (kind == BasisKind::Real && q.im != 0.0) {
        throw DomainError("real basis function needs a real exponent, got " + to_string(q));
    }
    if (kind != BasisKind::Real && q.im <= 0.0) {
        throw DomainError("cos/sin basis function needs Im(lambda) > 0, got " + to_string(q));
    }
}

double BasisFunction::value(double t) const
{
    const double envelope = (q_.m == 0 ? 1.0 : std::pow(t, q_.m)) * std::exp(q_.re * t);
    switch (kind_) {
    case BasisKind::Real:
        return envelope;
    case BasisKind::Cos:
        return envelope * std::cos(q_.im * t);
    case BasisKind::Sin:
        return envelope * std::sin(q_.im * t);
    }
    return 0.0;
}

double BasisFunction::integral(double t) const
{
    const Complex v = integral_f(q_, t);
    return kind_ == BasisKind::Sin ? v.imag() : v.real();
}

ExpPolynomial BasisFunction::as_polynomial() const
{
    const auto f = ExpPolynomial::monomial(q_);
    switch (kind_) {
    case BasisKind::Real:
        return f;
    case BasisKind::Cos:
        return f.real_part();
    case BasisKind::Sin:
        return f.imag_part();
    }
    return f;
}

ExpPolynomial BasisFunction::integral_polynomial() const { return as_polynomial().integral(); }

std::optional<double> BasisFunction::limit() const
{
    if (q_.is_zero()) {
        return 1.0;
    }
    if (q_.re < 0.0) {
        return 0.0;
    }
    return std::nullopt;
}

std::string BasisFunction::label() const
{
    std::ostringstream os;
    os.precision(12);
    std::vector<std::string> factors;
    if (q_.m == 1) {
        factors.emplace_back("t");
    } else if (q_.m > 1) {
        factors.push_back("t^" + std::to_string(q_.m));
    }
    if (q_.re != 0.0) {
        os << "exp(" << q_.re << "*t)";
        factors.push_back(os.str());
        os.str("");
    }
    if (kind_ != BasisKind::Real) {
        os << (kind_ == BasisKind::Cos ? "cos(" : "sin(") << q_.im << "*t)";
        factors.push_back(os.str());
    }
    if (factors.empty()) {
        return "1";
    }
    std::string out = factors.front();
    for (std::size_t i = 1; i < factors.size(); ++i) {
        out += "*" + factors[i];
    }
    return out;
}

std::vector<BasisFunction> canonical_basis(const ExponentSet& q)
{
    std::vector<BasisFunction> basis;
    for (const auto& e : q) {
        if (e.im == 0.0) {
            basis.emplace_back(e, BasisKind::Real);
        } else if (e.im > 0.0) {
            basis.emplace_back(e, BasisKind::Cos);
            basis.emplace_back(e, BasisKind::Sin);
        }
    }
    auto key = [](const BasisFunction& b) {
        const auto& e = b.exponent();
        return std::make_tuple(e.is_zero() ? 0 : 1, std::abs(e.re), e.im, e.m, e.re,
                               static_cast<int>(b.kind()));
    };
    std::stable_sort(basis.begin(), basis.end(),
                     [&](const BasisFunction& a, const BasisFunction& b) { return key(a) < key(b); });
    return basis;
}

LinearModel::LinearModel(ExponentSet exponents) : exponents_(std::move(exponents))
{
    if (exponents_.empty()) {
        throw DomainError("a linear model needs at least one exponent");
    }
    const auto missing = missing_for_closure(exponents_);
    if (!missing.empty()) {
        throw DomainError("exponent set is not closed; missing " + to_string(missing.front()));
    }
    basis_ = canonical_basis(exponents_);
    flat_index_ = index_of(Exponent(0, 0.0, 0.0), BasisKind::Real);
}

std::optional<std::size_t> LinearModel::index_of(const Exponent& q, BasisKind kind) const
{
    for (std::size_t i = 0; i < basis_.size(); ++i) {
        if (basis_[i].exponent() == q && basis_[i].kind() == kind) {
            return i;
        }
    }
    return std::nullopt;
}

void LinearModel::check_dimension(const Params& r) const
{
    if (static_cast<std::size_t>(r.size()) != dimension()) {
        throw DomainError("parameter vector has " + std::to_string(r.size()) +
                          " entries, model dimension is " + std::to_string(dimension()));
    }
}

Eigen::VectorXd LinearModel::basis_yields(double t) const
{
    Eigen::VectorXd out(dimension());
    for (std::size_t i = 0; i < basis_.size(); ++i) {
        out[static_cast<Eigen::Index>(i)] = basis_[i].value(t);
    }
    return out;
}

Eigen::VectorXd LinearModel::basis_log_prices(double t) const
{
    Eigen::VectorXd out(dimension());
    for (std::size_t i = 0; i < basis_.size(); ++i) {
        out[static_cast<Eigen::Index>(i)] = basis_[i].integral(t);
    }
    return out;
}

double LinearModel::yield(const Params& r, double t) const
{
    check_dimension(r);
    double sum = 0.0;
    for (std::size_t i = 0; i < basis_.size(); ++i) {
        sum += r[static_cast<Eigen::Index>(i)] * basis_[i].value(t);
    }
    return sum;
}

double LinearModel::log_price(const Params& r, double t) const
{
    check_dimension(r);
    double sum = 0.0;
    for (std::size_t i = 0; i < basis_.size(); ++i) {
        sum += r[static_cast<Eigen::Index>(i)] * basis_[i].integral(t);
    }
    return sum;
}

double LinearModel::price(const Params& r, double t) const { return std::exp(-log_price(r, t)); }

double LinearModel::short_rate(const Params& r) const { return yield(r, 0.0); }

std::optional<double> LinearModel::long_rate(const Params& r) const
{
    check_dimension(r);
    double sum = 0.0;
    for (std::size_t i = 0; i < basis_.size(); ++i) {
        const double c = r[static_cast<Eigen::Index>(i)];
        if (c == 0.0) {
            continue;
        }
        const auto lim = basis_[i].limit();
        if (!lim) {
            return std::nullopt;
        }
        sum += c * *lim;
    }
    return sum;
}

LinearModel model_from_exponents(const ExponentSet& q) { return LinearModel(q); }

namespace {

struct Term {
    int m;
    double a;
    double omega;
    double amplitude;
    double c_real = 0.0;
    double c_cos = 0.0;
    double c_sin = 0.0;
};

// Golden-section minimisation of f on [lo, hi].
template <typename F>
std::pair<double, double> golden_min(F&& f, double lo, double hi)
{
    const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - ratio * (hi - lo);
    double x2 = lo + ratio * (hi - lo);
    double f1 = f(x1);
    double f2 = f(x2);
    for (int it = 0; it < 200 && hi - lo > 1e-13 * std::max(1.0, std::abs(hi)); ++it) {
        if (f1 <= f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2);
        }
    }
    return f1 <= f2 ? std::make_pair(x1, f1) : std::make_pair(x2, f2);
}

} // namespace

PositivityReport positivity_report(const LinearModel& model, const Params& r, bool strict,
                                   double tolerance)
{
    model.check_dimension(r);
    PositivityReport report;

    // Collect nonzero terms, merging cos/sin pairs sharing (m, a, omega).
    std::map<std::tuple<int, double, double>, Term> grouped;
    for (std::size_t i = 0; i < model.dimension(); ++i) {
        const double c = r[static_cast<Eigen::Index>(i)];
        if (c == 0.0) {
            continue;
        }
        const auto& b = model.basis()[i];
        const auto& q = b.exponent();
        auto& term = grouped[{q.m, q.re, q.im}];
        term.m = q.m;
        term.a = q.re;
        term.omega = q.im;
        switch (b.kind()) {
        case BasisKind::Real:
            term.c_real = c;
            break;
        case BasisKind::Cos:
            term.c_cos = c;
            break;
        case BasisKind::Sin:
            term.c_sin = c;
            break;
        }
    }
    if (grouped.empty()) {
        report.reason = "yield curve is identically zero";
        return report;
    }
    std::vector<Term> terms;
    for (auto& [key, term] : grouped) {
        term.amplitude = term.omega == 0.0 ? std::abs(term.c_real) : std::hypot(term.c_cos, term.c_sin);
        terms.push_back(term);
    }

    // Dominant group as t -> infinity: largest Re(lambda), then largest m.
    double a_max = -std::numeric_limits<double>::infinity();
    for (const auto& t : terms) {
        a_max = std::max(a_max, t.a);
    }
    int m_max = 0;
    for (const auto& t : terms) {
        if (t.a == a_max) {
            m_max = std::max(m_max, t.m);
        }
    }
    double c0 = 0.0;
    double trig_amplitude = 0.0;
    double omega_min = std::numeric_limits<double>::infinity();
    std::vector<Term> dominant_trig;
    std::vector<Term> rest;
    for (const auto& t : terms) {
        if (t.a == a_max && t.m == m_max) {
            if (t.omega == 0.0) {
                c0 = t.c_real;
            } else {
                trig_amplitude += t.amplitude;
                omega_min = std::min(omega_min, t.omega);
                dominant_trig.push_back(t);
            }
        } else {
            rest.push_back(t);
        }
    }
    const double lower = c0 - trig_amplitude;

    if (lower <= 0.0) {
        if (dominant_trig.empty()) {
            report.reason = "dominant term is eventually negative";
            return report;
        }
        if (c0 <= 0.0) {
            report.reason = "dominant oscillation has nonpositive mean";
            return report;
        }
        double g_min = lower;
        if (dominant_trig.size() > 1) {
            const double span = 200.0 * 2.0 * std::numbers::pi / omega_min;
            const int samples = 200000;
            g_min = std::numeric_limits<double>::infinity();
            for (int k = 0; k < samples; ++k) {
                const double t = span * k / (samples - 1);
                double g = c0;
                for (const auto& d : dominant_trig) {
                    g += d.c_cos * std::cos(d.omega * t) + d.c_sin * std::sin(d.omega * t);
                }
                g_min = std::min(g_min, g);
            }
        }
        if (g_min < -tolerance) {
            report.reason = "dominant oscillation dips below zero";
            return report;
        }
        throw NumericalError("positive domain undecidable at tolerance: asymptotic envelope touches zero");
    }

    if (strict && a_max < 0.0) {
        report.reason = "yield curve decays to zero, infimum is 0";
        return report;
    }

    // Horizon beyond which |rest| <= lower/2 * t^m e^{a t}.
    double horizon = 1.0;
    for (const auto& t : rest) {
        if (t.a < a_max && t.m > m_max) {
            horizon = std::max(horizon, static_cast<double>(t.m - m_max) / (a_max - t.a));
        }
    }
    auto tail_ratio = [&](double at) {
        double sum = 0.0;
        for (const auto& t : rest) {
            sum += t.amplitude * std::pow(at, t.m - m_max) * std::exp((t.a - a_max) * at);
        }
        return sum / lower;
    };
    int doublings = 0;
    while (tail_ratio(horizon) > 0.5) {
        horizon *= 2.0;
        if (++doublings > 60) {
            throw NumericalError("positive domain undecidable: no horizon bounds the tail");
        }
    }
    report.horizon = horizon;

    auto y = [&](double t) { return model.yield(r, t); };
    const int grid = 512;
    std::vector<double> values(grid);
    std::vector<double> times(grid);
    for (int k = 0; k < grid; ++k) {
        times[k] = horizon * k / (grid - 1);
        values[k] = y(times[k]);
    }
    report.minimum = values[0];
    report.argmin = 0.0;
    for (int k = 0; k < grid; ++k) {
        const bool left_ok = k == 0 || values[k] <= values[k - 1];
        const bool right_ok = k == grid - 1 || values[k] <= values[k + 1];
        if (!(left_ok && right_ok)) {
            continue;
        }
        if (values[k] < report.minimum) {
            report.minimum = values[k];
            report.argmin = times[k];
        }
        const double lo = times[std::max(0, k - 1)];
        const double hi = times[std::min(grid - 1, k + 1)];
        const auto [t_best, v_best] = golden_min(y, lo, hi);
        if (v_best < report.minimum) {
            report.minimum = v_best;
            report.argmin = t_best;
        }
    }

    if (report.minimum < -tolerance) {
        report.reason = "yield curve is negative on [0, horizon]";
        return report;
    }
    if (report.minimum <= tolerance) {
        throw NumericalError("positive domain undecidable at tolerance: minimum " +
                             std::to_string(report.minimum) + " at t = " + std::to_string(report.argmin));
    }
    report.positive = true;
    report.reason = strict ? "yield curve bounded away from zero" : "yield curve positive";
    return report;
}

bool in_positive_domain(const LinearModel& model, const Params& r, bool strict, double tolerance)
{
    return positivity_report(model, r, strict, tolerance).positive;
}

} // namespace curvelab
