#include "curvelab/classifier.hpp"

#include "curvelab/error.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace curvelab {

TheoremCase TheoremCase::case1(double rho)
{
    TheoremCase c;
    c.tag = CaseTag::Case1;
    c.rho = rho;
    return c;
}

TheoremCase TheoremCase::case2(double rho, double omega)
{
    TheoremCase c;
    c.tag = CaseTag::Case2;
    c.rho = rho;
    c.omega = omega;
    return c;
}

TheoremCase TheoremCase::case3()
{
    TheoremCase c;
    c.tag = CaseTag::Case3;
    return c;
}

TheoremCase TheoremCase::case4(double omega)
{
    TheoremCase c;
    c.tag = CaseTag::Case4;
    c.omega = omega;
    return c;
}

TheoremCase TheoremCase::two_frequency(double omega1, double omega2)
{
    TheoremCase c;
    c.tag = CaseTag::TwoFrequency;
    c.omega = omega1;
    c.omega2 = omega2;
    return c;
}

std::string TheoremCase::describe() const
{
    std::ostringstream os;
    os.precision(12);
    switch (tag) {
    case CaseTag::None:
        os << "None";
        break;
    case CaseTag::Case1:
        os << "Case1(rho=" << rho << ")";
        break;
    case CaseTag::Case2:
        os << "Case2(rho=" << rho << ", omega=" << omega << ")";
        break;
    case CaseTag::Case3:
        os << "Case3";
        break;
    case CaseTag::Case4:
        os << "Case4(omega=" << omega << ") [anomalous: no-arbitrage status unresolved]";
        break;
    case CaseTag::TwoFrequency:
        os << "TwoFrequency(omega1=" << omega << ", omega2=" << omega2 << ")";
        break;
    }
    return os.str();
}

TheoremCase theorem_case(const ExponentSet& q)
{
    if (!is_closed(q)) {
        throw DomainError("theorem_case needs a closed exponent set");
    }
    const auto witnesses = hypothesis_witnesses(q);
    if (witnesses.empty()) {
        return {};
    }
    const Exponent& w = witnesses.front();
    TheoremCase result;
    if (w.re != 0.0 && w.im == 0.0) {
        result = TheoremCase::case1(w.re);
    } else if (w.re != 0.0) {
        result = TheoremCase::case2(w.re, std::abs(w.im));
    } else if (w.im == 0.0) {
        result = TheoremCase::case3();
    } else {
        result = TheoremCase::case4(std::abs(w.im));
    }
    result.witness = w;
    result.witnesses = witnesses;
    return result;
}

std::optional<InclusionMap> includes(const LinearModel& source, const LinearModel& target)
{
    const auto n = static_cast<Eigen::Index>(source.dimension());
    const auto m = static_cast<Eigen::Index>(target.dimension());

    bool subset = true;
    for (const auto& q : source.exponents()) {
        subset = subset && target.exponents().contains(q);
    }
    if (subset) {
        InclusionMap map{Eigen::MatrixXd::Zero(m, n), true};
        for (Eigen::Index j = 0; j < n; ++j) {
            const auto& b = source.basis()[static_cast<std::size_t>(j)];
            const auto i = target.index_of(b.exponent(), b.kind());
            map.S(static_cast<Eigen::Index>(*i), j) = 1.0;
        }
        return map;
    }

    // Least-squares fit of each source basis function on a time grid.
    const int samples = 200;
    Eigen::MatrixXd target_values(samples, m);
    Eigen::MatrixXd source_values(samples, n);
    for (int k = 0; k < samples; ++k) {
        const double t = 10.0 * k / (samples - 1);
        target_values.row(k) = target.basis_yields(t).transpose();
        source_values.row(k) = source.basis_yields(t).transpose();
    }
    const auto qr = target_values.colPivHouseholderQr();
    Eigen::MatrixXd S = qr.solve(source_values);
    const Eigen::MatrixXd residual = target_values * S - source_values;
    for (Eigen::Index j = 0; j < n; ++j) {
        const double scale = std::max(1.0, source_values.col(j).cwiseAbs().maxCoeff());
        if (residual.col(j).cwiseAbs().maxCoeff() > 1e-10 * scale) {
            return std::nullopt;
        }
    }
    if (S.fullPivLu().rank() != n) {
        return std::nullopt;
    }
    return InclusionMap{std::move(S), false};
}

std::string to_string(SimpleLabel label)
{
    switch (label) {
    case SimpleLabel::Exponential:
        return "Exponential";
    case SimpleLabel::ExponentialOscillation:
        return "Exponential-Oscillation";
    case SimpleLabel::NotSimple:
        return "Not-Simple";
    }
    return "Not-Simple";
}

namespace {

std::string linear_formula(const std::vector<double>& weights)
{
    std::ostringstream os;
    os.precision(12);
    bool first = true;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const double w = weights[i];
        if (w == 0.0) {
            continue;
        }
        if (!first) {
            os << (w < 0 ? "-" : "+");
        } else if (w < 0) {
            os << "-";
        }
        if (std::abs(w) != 1.0) {
            os << std::abs(w) << "*";
        }
        os << "r" << (i + 1);
        first = false;
    }
    return first ? "0" : os.str();
}

} // namespace

std::string short_rate_formula(const LinearModel& model)
{
    std::vector<double> weights;
    for (const auto& b : model.basis()) {
        weights.push_back(b.value(0.0));
    }
    return linear_formula(weights);
}

std::string long_rate_formula(const LinearModel& model)
{
    std::vector<double> weights;
    for (const auto& b : model.basis()) {
        const auto lim = b.limit();
        if (!lim) {
            return "absent";
        }
        weights.push_back(*lim);
    }
    return linear_formula(weights);
}

std::string SimpleReport::summary() const
{
    std::string out = to_string(label);
    if (label == SimpleLabel::NotSimple) {
        return out + " (" + failed_condition + ")";
    }
    return out + " (simple); short=" + short_rate_formula + "; long=" + long_rate_formula;
}

SimpleReport classify_simple(const ExponentSet& q)
{
    const LinearModel model(q);
    SimpleReport report;
    report.includes_flat = model.has_flat();
    report.long_rates_exist = true;
    std::string lre_failure;
    for (const auto& e : q) {
        if (!(e.is_zero() || e.re < 0.0)) {
            report.long_rates_exist = false;
            if (lre_failure.empty()) {
                if (e.re > 0.0) {
                    lre_failure = "LRE fails: growing exponent " + to_string(e);
                } else if (e.im != 0.0) {
                    lre_failure = "LRE fails: undamped oscillation " + to_string(e);
                } else {
                    lre_failure = "LRE fails: unbounded polynomial " + to_string(e);
                }
            }
        }
    }
    report.nla_case = theorem_case(q);
    report.short_rate_formula = short_rate_formula(model);
    report.long_rate_formula = long_rate_formula(model);

    if (!report.long_rates_exist) {
        report.failed_condition = lre_failure;
    } else if (!report.includes_flat) {
        report.failed_condition = "flat yield curve model not included";
    } else if (report.nla_case.tag == CaseTag::None) {
        report.failed_condition = "NLA fails: arbitrage everywhere";
    } else if (report.nla_case.tag == CaseTag::Case1 && report.nla_case.rho < 0.0) {
        report.label = SimpleLabel::Exponential;
    } else if (report.nla_case.tag == CaseTag::Case2 && report.nla_case.rho < 0.0) {
        report.label = SimpleLabel::ExponentialOscillation;
    } else {
        report.failed_condition = "no-arbitrage case " + report.nla_case.describe() + " is not simple";
    }

    // Positive-domain emptiness, decided by sampling.
    const auto n = static_cast<Eigen::Index>(model.dimension());
    std::mt19937_64 rng(0);
    std::uniform_real_distribution<double> coeff(-1.0, 1.0);
    for (int trial = 0; trial < 200 && !report.domain_nonempty; ++trial) {
        Params r(n);
        if (trial == 0 && model.flat_index()) {
            r.setZero();
            r[static_cast<Eigen::Index>(*model.flat_index())] = 1.0;
        } else {
            for (Eigen::Index i = 0; i < n; ++i) {
                r[i] = coeff(rng);
            }
        }
        try {
            report.domain_nonempty = in_positive_domain(model, r, false);
        } catch (const NumericalError&) {
        }
    }
    return report;
}

} // namespace curvelab
