#pragma once

#include "curvelab/exp_polynomial.hpp"
#include "curvelab/exponent.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace curvelab {

/// Parameter vector r of a linear model, one coefficient per basis function.
using Params = Eigen::VectorXd;

enum class BasisKind { Real, Cos, Sin };

/// One basis yield curve: f^q for real q, or Re/Im of f^q with Im(lambda) > 0.
class BasisFunction {
public:
    BasisFunction(const Exponent& q, BasisKind kind);

    const Exponent& exponent() const { return q_; }
    BasisKind kind() const { return kind_; }

    double value(double t) const;
    /// Closed-form integral over [0, t].
    double integral(double t) const;

    ExpPolynomial as_polynomial() const;
    ExpPolynomial integral_polynomial() const;

    /// Limit as t -> infinity when it exists.
    std::optional<double> limit() const;

    std::string label() const;

private:
    Exponent q_;
    BasisKind kind_;
};

/// Canonical basis of the span of {Re f^q, Im f^q : q in Q}.
///
/// Order: constant first, then ascending (|Re lambda|, omega, m), then Re lambda,
/// with cos before sin.
std::vector<BasisFunction> canonical_basis(const ExponentSet& q);

/// Linear yield curve model Y_t(r) = sum_i r_i Y^i_t generated by a closed
/// exponent set.
class LinearModel {
public:
    /// Throws DomainError when the set is empty or not closed.
    explicit LinearModel(ExponentSet exponents);

    std::size_t dimension() const { return basis_.size(); }
    const ExponentSet& exponents() const { return exponents_; }
    const std::vector<BasisFunction>& basis() const { return basis_; }
    bool has_flat() const { return flat_index_.has_value(); }
    std::optional<std::size_t> flat_index() const { return flat_index_; }

    /// Index of the basis function (q, kind), if present.
    std::optional<std::size_t> index_of(const Exponent& q, BasisKind kind) const;

    Eigen::VectorXd basis_yields(double t) const;
    Eigen::VectorXd basis_log_prices(double t) const;

    double yield(const Params& r, double t) const;
    double log_price(const Params& r, double t) const;
    double price(const Params& r, double t) const;

    double short_rate(const Params& r) const;
    /// Absent when a non-decaying, non-constant basis function has a nonzero
    /// coefficient.
    std::optional<double> long_rate(const Params& r) const;

    /// Throws DomainError unless r.size() == dimension().
    void check_dimension(const Params& r) const;

private:
    ExponentSet exponents_;
    std::vector<BasisFunction> basis_;
    std::optional<std::size_t> flat_index_;
};

LinearModel model_from_exponents(const ExponentSet& q);

/// Diagnostics from the positive-domain decision procedure.
struct PositivityReport {
    bool positive = false;
    /// Minimum of Y on [0, horizon] found by grid search plus refinement.
    double minimum = 0.0;
    double argmin = 0.0;
    /// Beyond this time the dominant term governs the sign of Y.
    double horizon = 0.0;
    std::string reason;
};

/// Decides Y_t(r) > 0 for all t >= 0 (non-strict) or inf_t Y_t(r) > 0
/// (strict). Throws NumericalError when the infimum is within
/// `tolerance` of zero.
PositivityReport positivity_report(const LinearModel& model, const Params& r, bool strict,
                                   double tolerance = 1e-10);

bool in_positive_domain(const LinearModel& model, const Params& r, bool strict,
                        double tolerance = 1e-10);

} // namespace curvelab
