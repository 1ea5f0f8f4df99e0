#pragma once

#include "curvelab/curve_model.hpp"
#include "curvelab/exponent.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace curvelab {

enum class CaseTag {
    None,         ///< arbitrage-everywhere hypothesis holds
    Case1,        ///< exp(rho t), exp(2 rho t) in the model
    Case2,        ///< exp(rho t) cos/sin(omega t), exp(2 rho t)
    Case3,        ///< 1, t
    Case4,        ///< cos/sin(omega t); no-arbitrage status unresolved
    TwoFrequency, ///< cos/sin of two frequencies with irrational ratio
};

/// Which minimal sub-model a closed exponent set contains.
struct TheoremCase {
    CaseTag tag = CaseTag::None;
    double rho = 0.0;
    double omega = 0.0;
    double omega2 = 0.0;
    /// Canonically smallest q in tilde(Q) with q + conj(q) in tilde(Q) + {0}.
    std::optional<Exponent> witness;
    std::vector<Exponent> witnesses;

    static TheoremCase case1(double rho);
    static TheoremCase case2(double rho, double omega);
    static TheoremCase case3();
    static TheoremCase case4(double omega);
    static TheoremCase two_frequency(double omega1, double omega2);

    /// Case4 cannot be settled by the sum-of-squares certificate.
    bool anomalous() const { return tag == CaseTag::Case4; }
    std::string describe() const;
};

TheoremCase theorem_case(const ExponentSet& q);

/// S maps source parameters to target parameters: Y(r) = Y~(S r).
struct InclusionMap {
    Eigen::MatrixXd S;
    /// True when found by exponent containment, false for the grid fit.
    bool exact = true;
};

std::optional<InclusionMap> includes(const LinearModel& source, const LinearModel& target);

enum class SimpleLabel { Exponential, ExponentialOscillation, NotSimple };

std::string to_string(SimpleLabel label);

struct SimpleReport {
    SimpleLabel label = SimpleLabel::NotSimple;
    bool long_rates_exist = false;
    bool includes_flat = false;
    TheoremCase nla_case;
    std::string failed_condition;
    std::string short_rate_formula;
    std::string long_rate_formula;
    /// Whether some sampled parameter vector gives a positive curve.
    bool domain_nonempty = false;

    std::string summary() const;
};

SimpleReport classify_simple(const ExponentSet& q);

/// "r1+r2+r3"-style formula for Y_0(r).
std::string short_rate_formula(const LinearModel& model);
/// Formula for lim Y_t(r), or "absent" when some basis function has no limit.
std::string long_rate_formula(const LinearModel& model);

} // namespace curvelab
