#pragma once

#include "curvelab/classifier.hpp"
#include "curvelab/curve_model.hpp"
#include "curvelab/error.hpp"
#include "curvelab/exp_polynomial.hpp"
#include "curvelab/exponent.hpp"
#include "curvelab/portfolio.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace curvelab {

/// Positive constants C_q indexed by the real exponents q in Q^#.
using MomentConstants = std::map<Exponent, double>;

/// Log-price basis l^q (q in tilde(Q)), real and imaginary parts split the
/// same way as the yield basis.
struct LogBasis {
    std::vector<BasisFunction> labels;
    std::vector<ExpPolynomial> functions;
};

LogBasis log_basis(const ExponentSet& q);

/// Coefficients c with sum_i c_i basis[i] == target exactly in coefficient
/// space. Empty when the target is outside the span (residual above
/// `tolerance` times the target scale).
std::optional<Eigen::VectorXd> coefficients_in(const std::vector<ExpPolynomial>& basis,
                                               const ExpPolynomial& target,
                                               double tolerance = 1e-12);

/// Model log-price basis functions L^i as exponential polynomials.
std::vector<ExpPolynomial> model_log_prices(const LinearModel& model);

/// Row i holds the coordinates of the model's L^i in the log basis.
Eigen::MatrixXd log_basis_transform(const LinearModel& model);

/// <l_i l_j> for the moment functional <f^q> = C_q on Q^#, 0 elsewhere on Q^2.
Eigen::MatrixXd hessian_from_constants(const ExponentSet& q, const MomentConstants& constants);

struct MomentCertificate {
    CashAllocation z;
    MomentConstants constants;
    /// <l_i l_j> in the log basis, assembled from the constants.
    Eigen::MatrixXd hessian;
    /// <L^i L^j> in the model basis, evaluated on z. Empty until a model is
    /// attached by construct_arbitrage.
    Eigen::MatrixXd model_hessian;
    std::vector<double> support_times;
    /// max_q |<f^q> - target_q| over Q^2.
    double residual = 0.0;
    /// Condition number of the row-equilibrated moment matrix.
    double condition = 0.0;
    std::string time_family;
};

/// Solves <f^q> = C_q (q in Q^#), <f^q> = 0 (q in Q^2 \ Q^#) on |Q^2|
/// support times. When `times` is given, exactly those times are used.
MomentCertificate solve_moments(const ExponentSet& q, const MomentConstants& constants,
                                const std::optional<std::vector<double>>& times = std::nullopt);

/// (M / eps)^2 with eps = min(lambda_min(Bprime), lambda_min(D)) and
/// M = 2 sigma_max(U). Throws DomainError when Bprime or D is not PD.
double block_pd_bound(const Eigen::MatrixXd& Bprime, const Eigen::MatrixXd& D,
                      const Eigen::MatrixXd& U);

/// Constants that make hessian_from_constants positive definite.
MomentConstants choose_constants(const ExponentSet& q);

/// True when LLT succeeds and the smallest eigenvalue exceeds 1e-12 * trace.
bool is_positive_definite(const Eigen::MatrixXd& m);

/// Refusal raised when some q in tilde(Q) has q + conj(q) in tilde(Q) + {0}.
class HypothesisViolation : public DomainError {
public:
    HypothesisViolation(Exponent witness, TheoremCase nla_case);

    const Exponent& witness() const { return witness_; }
    const TheoremCase& nla_case() const { return case_; }

private:
    Exponent witness_;
    TheoremCase case_;
};

struct ArbitrageResult {
    Bundle bundle;
    MomentCertificate certificate;
    double value = 0.0;
    double gradient_norm = 0.0;
    double min_eigenvalue = 0.0;
    /// Smallest V(r* + 1e-3 u) over the sampled unit directions u.
    double sphere_min = 0.0;
    /// max |<L^i L^j> - (T B T^t)_ij|
    double hessian_mismatch = 0.0;
};

ArbitrageResult construct_arbitrage(const LinearModel& model, const Params& r_star,
                                    std::uint64_t seed = 0);

struct NlaCertificate {
    TheoremCase nla_case;
    std::vector<ExpPolynomial> F;
    /// sum_j (F^j)^2; absent when it leaves the model's log-price span.
    std::optional<ExpPolynomial> sum_sq;
    /// Coordinates of each F^j over the model's L^i.
    std::vector<Eigen::VectorXd> coefficients;
    std::optional<Eigen::VectorXd> sum_sq_coefficients;
    /// "F1 monotone", "sum_sq + 2 F1 monotone", ... or "asserted".
    std::string injectivity_witness = "asserted";
};

/// F functions from the standard basis of the given case, expressed over the
/// model. Case4 and None are refused with DomainError, as is any F outside
/// the model's log-price span.
NlaCertificate standard_nla_basis(const TheoremCase& nla_case, const LinearModel& model);

struct DescentHit {
    Eigen::VectorXd theta;
    double M = 0.0;
    double value = 0.0;
};

struct DescentResult {
    std::optional<DescentHit> plus;
    std::optional<DescentHit> minus;
    double epsilon = 0.0;
    std::size_t evaluations = 0;

    bool success() const { return plus.has_value() && minus.has_value(); }
};

struct DescentOptions {
    int sphere_points = 256;
    std::vector<double> epsilons = {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
    int jobs = 1;
};

/// Unit directions in p dimensions in the fixed search order.
std::vector<Eigen::VectorXd> sphere_directions(int p, int count);

/// M values searched; {0} alone when the certificate has no sum_sq.
std::vector<double> descent_m_values(bool with_sum_sq);

/// Searches V(eps theta, eps^2 M) = <expm1(s.F + S sum F^2)> for both signs.
/// Throws DomainError for z = 0 or when z is not critical.
DescentResult descent_search(const CashAllocation& z, const NlaCertificate& cert,
                             const LinearModel& model, const Params& r_star,
                             const DescentOptions& options = {});

struct NlaReport {
    int trials = 0;
    int successes = 0;
    int skipped = 0;
    std::vector<CashAllocation> failures;
    /// max |sum_j F_j(t)^2 - sum_sq(t)| on a grid; NaN without sum_sq.
    double identity_error = 0.0;
    bool identity_holds = false;
    std::string injectivity;

    bool passed() const { return identity_holds && failures.empty() && successes == trials - skipped; }
};

/// Random critical self-financing allocation: <1> = <L^i> = 0, sum |z| = 1.
CashAllocation random_critical_allocation(const LinearModel& model, std::uint64_t seed);

NlaReport verify_nla_certificate(const NlaCertificate& cert, const LinearModel& model, int trials,
                                 std::uint64_t seed = 0, const DescentOptions& options = {});

enum class SphereAverage {
    Line,   ///< P_R
    Sphere, ///< P~_R
};

/// P_R(M) = sum_k M^k / (k! (2R-2k)!)
double poly_P(int R, double M);
/// P~_R(M) = sum_k M^k / (k! ((2R-2k)!!)^2)
double poly_Ptilde(int R, double M);

/// Interval of |M| on which the polynomial is negative at -|M| for even R.
std::pair<double, double> sign_window(int R, SphereAverage variant);

/// Largest R accepted by the polynomial evaluators.
inline constexpr int max_window_order = 20;

} // namespace curvelab
