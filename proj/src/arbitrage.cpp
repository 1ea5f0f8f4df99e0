#include "curvelab/arbitrage.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

namespace curvelab {

namespace {

constexpr double kConditionLimit = 1e12;
constexpr int kRescaleRetries = 8;
constexpr double kRescaleFactor = 0.7;
constexpr int kMaxDoublings = 50;
constexpr int kPoolSize = 400;

double moment_of(const MomentConstants& constants, const Exponent& q)
{
    const auto it = constants.find(q);
    return it == constants.end() ? 0.0 : it->second;
}

/// <f g> under the moment functional, for every pair of functions.
Eigen::MatrixXd gram(const std::vector<ExpPolynomial>& fs, const MomentConstants& constants)
{
    const auto n = static_cast<Eigen::Index>(fs.size());
    Eigen::MatrixXd out(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i; j < n; ++j) {
            const auto product = fs[static_cast<std::size_t>(i)] * fs[static_cast<std::size_t>(j)];
            Complex sum = 0.0;
            for (const auto& [q, c] : product.terms()) {
                sum += c * moment_of(constants, q);
            }
            out(i, j) = sum.real();
            out(j, i) = sum.real();
        }
    }
    return out;
}

std::vector<ExpPolynomial> log_functions(const std::vector<BasisFunction>& basis)
{
    std::vector<ExpPolynomial> out;
    out.reserve(basis.size());
    for (const auto& b : basis) {
        out.push_back(b.as_polynomial() - ExpPolynomial::constant(b.value(0.0)));
    }
    return out;
}

double min_eigenvalue(const Eigen::MatrixXd& m)
{
    if (m.size() == 0) {
        return 0.0;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff();
}

struct MomentRow {
    Exponent q;
    bool imaginary = false;
    double target = 0.0;
};

Eigen::MatrixXd moment_matrix(const std::vector<MomentRow>& rows, const std::vector<double>& times)
{
    const auto k = static_cast<Eigen::Index>(times.size());
    Eigen::MatrixXd a(static_cast<Eigen::Index>(rows.size()), k);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (Eigen::Index c = 0; c < k; ++c) {
            const Complex v = eval_f(rows[r].q, times[static_cast<std::size_t>(c)]);
            a(static_cast<Eigen::Index>(r), c) = rows[r].imaginary ? v.imag() : v.real();
        }
    }
    return a;
}

Eigen::VectorXd row_scales(const Eigen::MatrixXd& a)
{
    Eigen::VectorXd s(a.rows());
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
        const double m = a.row(r).cwiseAbs().maxCoeff();
        s[r] = m > 0.0 ? 1.0 / m : 1.0;
    }
    return s;
}

double condition_number(const Eigen::MatrixXd& a)
{
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || sv[sv.size() - 1] == 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return sv[0] / sv[sv.size() - 1];
}

struct TimeCandidate {
    std::vector<double> times;
    std::string family;
    double condition = std::numeric_limits<double>::infinity();
};

/// Revised simplex for min sum |z_j| subject to A z = b over the columns of
/// `a`, started from the square basis `start`. Returns the optimal basis;
/// a vertex solution never needs more columns than `a` has rows.
std::vector<Eigen::Index> l1_minimal_basis(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                                           std::vector<Eigen::Index> basis)
{
    const Eigen::Index k = a.rows();
    std::vector<double> sign(static_cast<std::size_t>(k), 1.0);
    {
        const Eigen::VectorXd x = a(Eigen::all, basis).fullPivLu().solve(b);
        for (Eigen::Index i = 0; i < k; ++i) {
            sign[static_cast<std::size_t>(i)] = x[i] < 0.0 ? -1.0 : 1.0;
        }
    }
    std::vector<char> in_basis(static_cast<std::size_t>(a.cols()), 0);
    for (auto j : basis) {
        in_basis[static_cast<std::size_t>(j)] = 1;
    }
    for (int iteration = 0; iteration < 50 * static_cast<int>(k); ++iteration) {
        Eigen::MatrixXd m(k, k);
        for (Eigen::Index i = 0; i < k; ++i) {
            m.col(i) = sign[static_cast<std::size_t>(i)] * a.col(basis[static_cast<std::size_t>(i)]);
        }
        const auto lu = m.fullPivLu();
        if (!lu.isInvertible()) {
            break;
        }
        const Eigen::VectorXd x = lu.solve(b);
        const Eigen::VectorXd y = m.transpose().fullPivLu().solve(Eigen::VectorXd::Ones(k));
        const Eigen::VectorXd g = a.transpose() * y;
        Eigen::Index entering = -1;
        double best = 1.0 + 1e-9;
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            if (!in_basis[static_cast<std::size_t>(j)] && std::abs(g[j]) > best) {
                best = std::abs(g[j]);
                entering = j;
            }
        }
        if (entering < 0) {
            break;
        }
        const double s = g[entering] < 0.0 ? -1.0 : 1.0;
        const Eigen::VectorXd d = lu.solve(s * a.col(entering));
        Eigen::Index leaving = -1;
        double ratio = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < k; ++i) {
            if (d[i] > 1e-12 * d.cwiseAbs().maxCoeff() && std::max(x[i], 0.0) / d[i] < ratio) {
                ratio = std::max(x[i], 0.0) / d[i];
                leaving = i;
            }
        }
        if (leaving < 0) {
            break;
        }
        in_basis[static_cast<std::size_t>(basis[static_cast<std::size_t>(leaving)])] = 0;
        in_basis[static_cast<std::size_t>(entering)] = 1;
        basis[static_cast<std::size_t>(leaving)] = entering;
        sign[static_cast<std::size_t>(leaving)] = s;
    }
    return basis;
}

std::string format_double(double v)
{
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

} // namespace

LogBasis log_basis(const ExponentSet& q)
{
    LogBasis out;
    out.labels = canonical_basis(derived_sets(q).tilde);
    out.functions = log_functions(out.labels);
    return out;
}

std::optional<Eigen::VectorXd> coefficients_in(const std::vector<ExpPolynomial>& basis,
                                               const ExpPolynomial& target, double tolerance)
{
    std::map<Exponent, Eigen::Index> rows;
    auto collect = [&](const ExpPolynomial& p) {
        for (const auto& [q, c] : p.terms()) {
            rows.emplace(q, 0);
        }
    };
    for (const auto& b : basis) {
        collect(b);
    }
    collect(target);
    Eigen::Index next = 0;
    for (auto& [q, idx] : rows) {
        idx = next;
        next += 2;
    }
    const auto n = static_cast<Eigen::Index>(basis.size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(next, n);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(next);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (const auto& [q, c] : basis[static_cast<std::size_t>(j)].terms()) {
            a(rows[q], j) = c.real();
            a(rows[q] + 1, j) = c.imag();
        }
    }
    for (const auto& [q, c] : target.terms()) {
        b[rows[q]] = c.real();
        b[rows[q] + 1] = c.imag();
    }
    if (next == 0) {
        return Eigen::VectorXd::Zero(n);
    }
    Eigen::VectorXd x = a.colPivHouseholderQr().solve(b);
    const double residual = (a * x - b).cwiseAbs().maxCoeff();
    if (residual > tolerance * std::max(1.0, target.max_abs_coefficient())) {
        return std::nullopt;
    }
    return x;
}

std::vector<ExpPolynomial> model_log_prices(const LinearModel& model)
{
    std::vector<ExpPolynomial> out;
    out.reserve(model.dimension());
    for (const auto& b : model.basis()) {
        out.push_back(b.integral_polynomial());
    }
    return out;
}

Eigen::MatrixXd log_basis_transform(const LinearModel& model)
{
    const auto logs = log_basis(model.exponents());
    const auto big_l = model_log_prices(model);
    const auto n = static_cast<Eigen::Index>(model.dimension());
    Eigen::MatrixXd t(n, static_cast<Eigen::Index>(logs.functions.size()));
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto c = coefficients_in(logs.functions, big_l[static_cast<std::size_t>(i)]);
        if (!c) {
            throw NumericalError("log price of basis function " +
                                 model.basis()[static_cast<std::size_t>(i)].label() +
                                 " is not in the log basis span");
        }
        t.row(i) = c->transpose();
    }
    return t;
}

Eigen::MatrixXd hessian_from_constants(const ExponentSet& q, const MomentConstants& constants)
{
    return gram(log_basis(q).functions, constants);
}

bool is_positive_definite(const Eigen::MatrixXd& m)
{
    if (m.rows() == 0 || m.rows() != m.cols()) {
        return false;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success) {
        return false;
    }
    return min_eigenvalue(m) > 1e-12 * m.trace();
}

HypothesisViolation::HypothesisViolation(Exponent witness, TheoremCase nla_case)
    : DomainError("arbitrage-everywhere hypothesis fails: q = " + to_string(witness) +
                  " has q + conj(q) = " + to_string(witness + conjugate(witness)) +
                  " in tilde(Q) + {0}; " + nla_case.describe()),
      witness_(witness), case_(std::move(nla_case))
{
}

namespace {

void require_hypothesis(const ExponentSet& q)
{
    if (!is_closed(q)) {
        throw DomainError("exponent set is not closed; missing " +
                          to_string(missing_for_closure(q).front()));
    }
    if (!arbitrage_hypothesis(q)) {
        auto c = theorem_case(q);
        throw HypothesisViolation(*c.witness, c);
    }
}

} // namespace

namespace {

/// Every acceptable certificate, best first. Throws NumericalError when no
/// time family gives an acceptable one.
std::vector<MomentCertificate> moment_certificates(const ExponentSet& q, const MomentConstants& constants,
                                                   const std::optional<std::vector<double>>& times)
{
    require_hypothesis(q);
    const auto sets = derived_sets(q);
    for (const auto& s : sets.sharp) {
        const auto it = constants.find(s);
        if (it == constants.end() || !(it->second > 0.0) || !std::isfinite(it->second)) {
            throw DomainError("missing or nonpositive constant for " + to_string(s));
        }
    }
    double max_constant = 0.0;
    for (const auto& [s, c] : constants) {
        if (!sets.sharp.contains(s)) {
            throw DomainError("constant given for " + to_string(s) + ", which is not in Q^#");
        }
        max_constant = std::max(max_constant, c);
    }

    std::vector<MomentRow> rows;
    for (const auto& s : sets.square) {
        if (s.im == 0.0) {
            rows.push_back({s, false, moment_of(constants, s)});
        } else if (s.im > 0.0) {
            rows.push_back({s, false, 0.0});
            rows.push_back({s, true, 0.0});
        }
    }
    const std::size_t k = sets.square.size();
    const auto log_fns = log_basis(q).functions;
    auto cubic_weight = [&](double t) {
        double norm2 = 0.0;
        for (const auto& f : log_fns) {
            norm2 += std::norm(f(t));
        }
        const double w = 1.0 + std::sqrt(norm2);
        return w * w * w;
    };

    std::vector<TimeCandidate> candidates;
    if (times) {
        if (times->size() != k) {
            throw DomainError("moment system needs " + std::to_string(k) + " support times, got " +
                              std::to_string(times->size()));
        }
        candidates.push_back({*times, "given"});
    } else {
        double amax = 0.0;
        double rho_ref = std::numeric_limits<double>::infinity();
        for (const auto& s : sets.square) {
            amax = std::max(amax, std::abs(s.re));
        }
        for (const auto& s : sets.tilde) {
            if (s.re != 0.0) {
                rho_ref = std::min(rho_ref, std::abs(s.re));
            }
        }
        const double tau = 1.0 / (1.0 + amax);
        double scale = 1.0;
        for (int retry = 0; retry <= kRescaleRetries; ++retry, scale *= kRescaleFactor) {
            TimeCandidate uniform;
            uniform.family = "uniform(tau=" + format_double(tau * scale) + ")";
            for (std::size_t j = 1; j <= k; ++j) {
                uniform.times.push_back(static_cast<double>(j) * tau * scale);
            }
            candidates.push_back(std::move(uniform));
            if (std::isfinite(rho_ref)) {
                // Chebyshev nodes in x = exp(-rho t) on (0, 1).
                TimeCandidate cheb;
                cheb.family = "chebyshev-exp(rho=" + format_double(rho_ref / scale) + ")";
                for (std::size_t j = k; j >= 1; --j) {
                    const double x =
                        0.5 * (1.0 + std::cos((2.0 * static_cast<double>(j) - 1.0) * std::numbers::pi /
                                              (2.0 * static_cast<double>(k))));
                    cheb.times.push_back(-std::log(x) * scale / rho_ref);
                }
                std::sort(cheb.times.begin(), cheb.times.end());
                candidates.push_back(std::move(cheb));
            }
        }
        // Approximate Fekete points: column-pivoted QR on a dense pool picks
        // the k times whose columns span the largest volume.
        for (double horizon = 0.5; horizon <= 64.0; horizon *= 2.0) {
            const double t_max = horizon * tau;
            std::vector<double> pool;
            for (int j = 1; j <= kPoolSize; ++j) {
                pool.push_back(t_max * j / kPoolSize);
            }
            const Eigen::MatrixXd a = moment_matrix(rows, pool);
            const Eigen::MatrixXd as = row_scales(a).asDiagonal() * a;
            if (!as.allFinite()) {
                continue;
            }
            const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(as);
            std::vector<Eigen::Index> columns;
            for (std::size_t j = 0; j < k; ++j) {
                columns.push_back(qr.colsPermutation().indices()[static_cast<Eigen::Index>(j)]);
            }
            auto times_of = [&](const std::vector<Eigen::Index>& cols) {
                std::vector<double> out;
                for (auto c : cols) {
                    out.push_back(pool[static_cast<std::size_t>(c)]);
                }
                std::sort(out.begin(), out.end());
                return out;
            };
            candidates.push_back({times_of(columns), "fekete(horizon=" + format_double(t_max) + ")"});
            // Smallest sum |z| keeps the cancellation error of the moments low.
            Eigen::VectorXd bs(static_cast<Eigen::Index>(rows.size()));
            for (std::size_t r = 0; r < rows.size(); ++r) {
                bs[static_cast<Eigen::Index>(r)] = rows[r].target;
            }
            bs = row_scales(a).asDiagonal() * bs;
            candidates.push_back({times_of(l1_minimal_basis(as, bs, columns)),
                                  "l1-minimal(horizon=" + format_double(t_max) + ")"});
            Eigen::VectorXd inverse_weights(static_cast<Eigen::Index>(pool.size()));
            for (std::size_t j = 0; j < pool.size(); ++j) {
                inverse_weights[static_cast<Eigen::Index>(j)] = 1.0 / cubic_weight(pool[j]);
            }
            candidates.push_back({times_of(l1_minimal_basis(as * inverse_weights.asDiagonal(), bs, columns)),
                                  "weighted-l1(horizon=" + format_double(t_max) + ")"});
        }
    }

    Eigen::VectorXd b(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        b[static_cast<Eigen::Index>(r)] = rows[r].target;
    }
    // A family is acceptable when its system is well enough conditioned and
    // the moments come out within tolerance. Those are ranked by
    // sum |z_t| (1 + |l(t)|)^3, which bounds the cubic term of V near r*.
    const double tolerance = 1e-9 * std::max(1.0, max_constant);
    struct Accepted {
        double weight;
        std::size_t order;
        MomentCertificate cert;
    };
    std::vector<Accepted> accepted;
    double best_condition = std::numeric_limits<double>::infinity();
    double smallest_residual = std::numeric_limits<double>::infinity();
    for (std::size_t index = 0; index < candidates.size(); ++index) {
        auto& c = candidates[index];
        for (std::size_t j = 0; j < c.times.size(); ++j) {
            if (!(c.times[j] > 0.0) || !std::isfinite(c.times[j]) ||
                (j > 0 && c.times[j] <= c.times[j - 1])) {
                throw DomainError("support times must be distinct, positive and ascending");
            }
        }
        const Eigen::MatrixXd a = moment_matrix(rows, c.times);
        const Eigen::VectorXd scales = row_scales(a);
        const Eigen::MatrixXd as = scales.asDiagonal() * a;
        c.condition = condition_number(as);
        best_condition = std::min(best_condition, c.condition);
        if (!(c.condition <= kConditionLimit)) {
            continue;
        }
        const auto lu = as.fullPivLu();
        Eigen::VectorXd x = lu.solve(scales.asDiagonal() * b);
        // One step of iterative refinement.
        x += lu.solve(scales.asDiagonal() * (b - a * x));
        const double r = (a * x - b).cwiseAbs().maxCoeff();
        smallest_residual = std::min(smallest_residual, r);
        if (!(r <= tolerance)) {
            continue;
        }
        double weight = 0.0;
        std::vector<DatedAmount> entries;
        for (std::size_t j = 0; j < k; ++j) {
            const double amount = x[static_cast<Eigen::Index>(j)];
            weight += std::abs(amount) * cubic_weight(c.times[j]);
            entries.push_back({c.times[j], amount});
        }
        MomentCertificate cert;
        cert.z = CashAllocation(std::move(entries));
        cert.constants = constants;
        cert.support_times = c.times;
        cert.residual = r;
        cert.condition = c.condition;
        cert.time_family = c.family;
        accepted.push_back({weight, index, std::move(cert)});
    }
    if (accepted.empty()) {
        if (!(best_condition <= kConditionLimit)) {
            throw NumericalError("moment system is ill-conditioned: best condition number " +
                                 format_double(best_condition) + " over " +
                                 std::to_string(candidates.size()) + " time families");
        }
        throw NumericalError("moment residual " + format_double(smallest_residual) + " exceeds tolerance " +
                             format_double(tolerance) + " for every time family");
    }
    std::sort(accepted.begin(), accepted.end(), [](const Accepted& x, const Accepted& y) {
        return x.weight != y.weight ? x.weight < y.weight : x.order < y.order;
    });
    const Eigen::MatrixXd hessian = hessian_from_constants(q, constants);
    std::vector<MomentCertificate> out;
    for (auto& entry : accepted) {
        entry.cert.hessian = hessian;
        out.push_back(std::move(entry.cert));
    }
    return out;
}

} // namespace

MomentCertificate solve_moments(const ExponentSet& q, const MomentConstants& constants,
                                const std::optional<std::vector<double>>& times)
{
    return std::move(moment_certificates(q, constants, times).front());
}

double block_pd_bound(const Eigen::MatrixXd& Bprime, const Eigen::MatrixXd& D, const Eigen::MatrixXd& U)
{
    if (Bprime.rows() != Bprime.cols() || D.rows() != D.cols() || U.rows() != Bprime.rows() ||
        U.cols() != D.rows()) {
        throw DomainError("block shapes do not match");
    }
    const double eps_b = Bprime.size() == 0 ? std::numeric_limits<double>::infinity() : min_eigenvalue(Bprime);
    const double eps_d = D.size() == 0 ? std::numeric_limits<double>::infinity() : min_eigenvalue(D);
    if (!(eps_b > 0.0) || !(eps_d > 0.0)) {
        throw DomainError("block_pd_bound needs positive definite diagonal blocks");
    }
    if (U.size() == 0) {
        return 0.0;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(U);
    const double m = 2.0 * svd.singularValues()[0];
    const double eps = std::min(eps_b, eps_d);
    return (m / eps) * (m / eps);
}

namespace {

/// Extreme-point induction on a conjugation-closed subset of tilde(Q).
void assign_constants(const std::vector<Exponent>& members, MomentConstants& constants)
{
    if (members.empty()) {
        return;
    }
    double a_star = 0.0;
    for (const auto& q : members) {
        a_star = std::max(a_star, std::abs(q.re));
    }
    const bool positive_side =
        std::any_of(members.begin(), members.end(), [&](const Exponent& q) { return q.re == a_star; });
    const double side_re = positive_side ? a_star : -a_star;
    int m_star = 0;
    for (const auto& q : members) {
        if (q.re == side_re) {
            m_star = std::max(m_star, q.m);
        }
    }
    std::vector<Exponent> extreme;
    std::vector<Exponent> rest;
    for (const auto& q : members) {
        (q.re == side_re && q.m == m_star ? extreme : rest).push_back(q);
    }
    const Exponent rho(2 * m_star, 2.0 * side_re, 0.0);

    assign_constants(rest, constants);
    constants[rho] = 1.0;
    if (rest.empty()) {
        return;
    }

    const auto rest_basis = log_functions(canonical_basis(ExponentSet(rest)));
    const auto extreme_basis = log_functions(canonical_basis(ExponentSet(extreme)));
    auto all = rest_basis;
    all.insert(all.end(), extreme_basis.begin(), extreme_basis.end());
    const auto nr = static_cast<Eigen::Index>(rest_basis.size());
    const auto ne = static_cast<Eigen::Index>(extreme_basis.size());

    const Eigen::MatrixXd unit = gram(all, constants);
    const double bound = block_pd_bound(unit.topLeftCorner(nr, nr), unit.bottomRightCorner(ne, ne),
                                        unit.topRightCorner(nr, ne));
    double c = std::max(1.0, 2.0 * bound);
    for (int doubling = 0;; ++doubling) {
        constants[rho] = c;
        if (is_positive_definite(gram(all, constants))) {
            return;
        }
        if (doubling == kMaxDoublings) {
            throw NumericalError("no constant for " + to_string(rho) +
                                 " gives a positive definite Hessian after " +
                                 std::to_string(kMaxDoublings) + " doublings");
        }
        c *= 2.0;
    }
}

} // namespace

MomentConstants choose_constants(const ExponentSet& q)
{
    require_hypothesis(q);
    MomentConstants constants;
    assign_constants(derived_sets(q).tilde.members(), constants);
    if (!is_positive_definite(hessian_from_constants(q, constants))) {
        throw NumericalError("chosen constants do not give a positive definite Hessian");
    }
    return constants;
}

ArbitrageResult construct_arbitrage(const LinearModel& model, const Params& r_star, std::uint64_t seed)
{
    model.check_dimension(r_star);
    const auto& q = model.exponents();
    require_hypothesis(q);

    const auto n = static_cast<Eigen::Index>(model.dimension());
    std::vector<Params> directions;
    if (n == 1) {
        directions = {Params::Constant(1, 1.0), Params::Constant(1, -1.0)};
    } else {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> normal;
        while (directions.size() < 128) {
            Params u(n);
            for (Eigen::Index i = 0; i < n; ++i) {
                u[i] = normal(rng);
            }
            if (u.norm() > 0.0) {
                directions.push_back(u / u.norm());
            }
        }
    }
    const Eigen::MatrixXd t = log_basis_transform(model);

    // Certificates are tried best first; the first to pass every check wins.
    std::string failure;
    for (auto& cert : moment_certificates(q, choose_constants(q), std::nullopt)) {
        const auto& z = cert.z;
        ArbitrageResult result;
        const auto report = value_report(z, model, r_star);
        const Eigen::MatrixXd expected = t * cert.hessian * t.transpose();
        result.hessian_mismatch = (report.hessian - expected).cwiseAbs().maxCoeff();
        if (result.hessian_mismatch > 1e-8 * std::max(1.0, expected.cwiseAbs().maxCoeff())) {
            failure = "Hessian from the allocation deviates from the constant pattern by " +
                      format_double(result.hessian_mismatch);
            continue;
        }
        result.value = report.value;
        result.gradient_norm = report.gradient.norm();
        result.min_eigenvalue = min_eigenvalue(report.hessian);
        if (result.gradient_norm > 1e-10 * std::max(1.0, z.total_abs())) {
            failure = "gradient " + format_double(result.gradient_norm) + " is not zero";
            continue;
        }
        if (!(result.min_eigenvalue > 1e-12 * report.hessian.trace())) {
            failure = "Hessian is not positive definite (smallest eigenvalue " +
                      format_double(result.min_eigenvalue) + ")";
            continue;
        }
        result.sphere_min = std::numeric_limits<double>::infinity();
        for (const auto& u : directions) {
            const Params r = r_star + 1e-3 * u;
            result.sphere_min = std::min(result.sphere_min, value_change(z, model, r_star, r));
        }
        if (!(result.sphere_min > 0.0)) {
            failure = "sampled value is not positive on the 1e-3 sphere (minimum " +
                      format_double(result.sphere_min) + ")";
            continue;
        }
        try {
            result.bundle = bundle_from_cash(z, model, r_star);
        } catch (const DomainError&) {
            failure = "prices at r* overflow on the support times";
            continue;
        }
        cert.model_hessian = report.hessian;
        result.certificate = std::move(cert);
        return result;
    }
    throw NumericalError(failure);
}

NlaCertificate standard_nla_basis(const TheoremCase& nla_case, const LinearModel& model)
{
    NlaCertificate cert;
    cert.nla_case = nla_case;
    switch (nla_case.tag) {
    case CaseTag::Case1: {
        const Exponent q(0, nla_case.rho);
        cert.F = {ExpPolynomial::shifted(q)};
        cert.sum_sq = ExpPolynomial::shifted(q + q) - 2.0 * ExpPolynomial::shifted(q);
        break;
    }
    case CaseTag::Case2: {
        const Exponent q(0, nla_case.rho, std::abs(nla_case.omega));
        const auto l = ExpPolynomial::shifted(q);
        cert.F = {l.real_part(), l.imag_part()};
        cert.sum_sq = ExpPolynomial::shifted(q + conjugate(q)) - 2.0 * cert.F[0];
        break;
    }
    case CaseTag::Case3:
        cert.F = {ExpPolynomial::shifted(Exponent(1, 0.0))};
        cert.sum_sq = ExpPolynomial::shifted(Exponent(2, 0.0));
        break;
    case CaseTag::TwoFrequency: {
        const auto l1 = ExpPolynomial::shifted(Exponent(0, 0.0, std::abs(nla_case.omega)));
        const auto l2 = ExpPolynomial::shifted(Exponent(0, 0.0, std::abs(nla_case.omega2)));
        cert.F = {l1.real_part(), l1.imag_part(), l2.real_part(), l2.imag_part()};
        cert.sum_sq = -2.0 * cert.F[0] - 2.0 * cert.F[2];
        break;
    }
    case CaseTag::Case4:
        throw DomainError("Case4 has no certificate: cos and sin of one frequency are periodic, so "
                          "(F1, F2) is not injective");
    case CaseTag::None:
        throw DomainError("no local arbitrage certificate for a set satisfying the "
                          "arbitrage-everywhere hypothesis");
    }

    const auto span = model_log_prices(model);
    for (std::size_t j = 0; j < cert.F.size(); ++j) {
        auto c = coefficients_in(span, cert.F[j]);
        if (!c) {
            throw DomainError("F" + std::to_string(j + 1) + " is outside the model's log-price span");
        }
        cert.coefficients.push_back(std::move(*c));
    }
    if (auto c = coefficients_in(span, *cert.sum_sq)) {
        cert.sum_sq_coefficients = std::move(*c);
    } else {
        cert.sum_sq.reset();
    }

    // A component whose derivative keeps one sign is strictly monotone.
    std::vector<std::pair<std::string, Eigen::VectorXd>> candidates;
    for (std::size_t j = 0; j < cert.F.size(); ++j) {
        candidates.emplace_back("F" + std::to_string(j + 1), cert.coefficients[j]);
    }
    if (cert.sum_sq_coefficients) {
        const auto& g = *cert.sum_sq_coefficients;
        candidates.emplace_back("sum_sq", g);
        for (std::size_t j = 0; j < cert.F.size(); ++j) {
            const auto name = std::to_string(j + 1);
            candidates.emplace_back("sum_sq + 2 F" + name, g + 2.0 * cert.coefficients[j]);
            candidates.emplace_back("sum_sq - 2 F" + name, g - 2.0 * cert.coefficients[j]);
        }
    }
    for (const auto& [name, u] : candidates) {
        if (u.cwiseAbs().maxCoeff() == 0.0) {
            continue;
        }
        bool monotone = false;
        for (double sign : {1.0, -1.0}) {
            try {
                monotone = monotone || in_positive_domain(model, Params(sign * u), false);
            } catch (const NumericalError&) {
            }
        }
        if (monotone) {
            cert.injectivity_witness = name + " monotone";
            break;
        }
    }
    return cert;
}

std::vector<Eigen::VectorXd> sphere_directions(int p, int count)
{
    if (p < 1 || count < 1) {
        throw DomainError("sphere_directions needs p >= 1 and count >= 1");
    }
    std::vector<Eigen::VectorXd> out;
    if (p == 1) {
        out.push_back(Eigen::VectorXd::Constant(1, 1.0));
        out.push_back(Eigen::VectorXd::Constant(1, -1.0));
        return out;
    }
    if (p == 2) {
        for (int k = 0; k < count; ++k) {
            const double a = 2.0 * std::numbers::pi * k / count;
            Eigen::VectorXd v(2);
            v << std::cos(a), std::sin(a);
            out.push_back(v);
        }
        return out;
    }
    for (int i = 0; i < p && static_cast<int>(out.size()) < count; ++i) {
        for (double sign : {1.0, -1.0}) {
            Eigen::VectorXd v = Eigen::VectorXd::Zero(p);
            v[i] = sign;
            out.push_back(v);
        }
    }
    // Additive recurrence with the generalized golden ratio, mapped to
    // Gaussian coordinates so the normalized points are uniform on the sphere.
    double phi = 2.0;
    for (int it = 0; it < 64; ++it) {
        phi = std::pow(1.0 + phi, 1.0 / (p + 1));
    }
    Eigen::VectorXd alpha(p);
    for (int i = 0; i < p; ++i) {
        alpha[i] = std::fmod(std::pow(1.0 / phi, i + 1), 1.0);
    }
    for (int k = 1; static_cast<int>(out.size()) < count; ++k) {
        Eigen::VectorXd v(p);
        for (int i = 0; i < p; ++i) {
            const double u = std::fmod(0.5 + k * alpha[i], 1.0);
            v[i] = std::numbers::sqrt2 * boost::math::erf_inv(2.0 * u - 1.0);
        }
        if (v.norm() > 0.0) {
            out.push_back(v / v.norm());
        }
    }
    return out;
}

std::vector<double> descent_m_values(bool with_sum_sq)
{
    if (!with_sum_sq) {
        return {0.0};
    }
    std::vector<double> out = {0.0};
    for (double m : {0.1, 0.5, 1.0, 2.0, 5.0, 10.0}) {
        out.push_back(m);
        out.push_back(-m);
    }
    for (int r = 1; r <= 6; ++r) {
        const auto [lo, hi] = sign_window(r, SphereAverage::Line);
        const double mid = 0.5 * (lo + hi);
        for (double m : {-mid, mid}) {
            if (std::find(out.begin(), out.end(), m) == out.end()) {
                out.push_back(m);
            }
        }
    }
    return out;
}

DescentResult descent_search(const CashAllocation& z, const NlaCertificate& cert, const LinearModel& model,
                             const Params& r_star, const DescentOptions& options)
{
    model.check_dimension(r_star);
    if (z.empty() || z.total_abs() == 0.0) {
        throw DomainError("descent search needs a nonzero allocation");
    }
    if (cert.F.empty() || cert.coefficients.size() != cert.F.size()) {
        throw DomainError("certificate has no F functions");
    }
    const auto report = value_report(z, model, r_star);
    double l_scale = 1.0;
    for (const auto& e : z) {
        l_scale = std::max(l_scale, model.basis_log_prices(e.time).cwiseAbs().maxCoeff());
    }
    const double tol = 1e-9 * z.total_abs() * l_scale;
    if (std::abs(report.value) > tol || report.gradient.cwiseAbs().maxCoeff() > tol) {
        throw DomainError("allocation is not critical: <1> and <L^i> must vanish");
    }

    const int p = static_cast<int>(cert.F.size());
    const auto thetas = sphere_directions(p, options.sphere_points);
    const auto ms = descent_m_values(cert.sum_sq_coefficients.has_value());
    const std::size_t per_eps = thetas.size() * ms.size();

    std::vector<Eigen::VectorXd> log_rows;
    for (const auto& e : z) {
        log_rows.push_back(model.basis_log_prices(e.time));
    }

    auto evaluate = [&](double eps, std::size_t index, double& value, double& floor) {
        const auto& theta = thetas[index / ms.size()];
        const double m = ms[index % ms.size()];
        Params delta = Params::Zero(r_star.size());
        for (int j = 0; j < p; ++j) {
            delta -= eps * theta[j] * cert.coefficients[static_cast<std::size_t>(j)];
        }
        if (m != 0.0) {
            delta -= eps * eps * m * *cert.sum_sq_coefficients;
        }
        value = value_change(z, model, r_star, r_star + delta);
        double bound = 0.0;
        std::size_t k = 0;
        for (const auto& e : z) {
            bound += std::abs(e.amount) * (delta.cwiseAbs().dot(log_rows[k++].cwiseAbs()));
        }
        floor = 1e2 * DBL_EPSILON * bound;
    };

    DescentResult result;
    for (double eps : options.epsilons) {
        std::vector<double> values(per_eps, 0.0);
        std::vector<double> floors(per_eps, 0.0);
        const int jobs = std::max(1, options.jobs);
        if (jobs > 1) {
            std::vector<std::jthread> workers;
            for (int w = 0; w < jobs; ++w) {
                workers.emplace_back([&, w] {
                    for (std::size_t i = static_cast<std::size_t>(w); i < per_eps;
                         i += static_cast<std::size_t>(jobs)) {
                        evaluate(eps, i, values[i], floors[i]);
                    }
                });
            }
        }
        DescentResult local;
        local.epsilon = eps;
        for (std::size_t i = 0; i < per_eps && !local.success(); ++i) {
            if (jobs == 1) {
                evaluate(eps, i, values[i], floors[i]);
            }
            ++local.evaluations;
            const DescentHit hit{thetas[i / ms.size()], ms[i % ms.size()], values[i]};
            if (!local.plus && values[i] > floors[i]) {
                local.plus = hit;
            } else if (!local.minus && values[i] < -floors[i]) {
                local.minus = hit;
            }
        }
        const std::size_t previous = result.evaluations;
        if (local.success()) {
            local.evaluations += previous;
            return local;
        }
        result = std::move(local);
        result.evaluations += previous;
    }
    return result;
}

CashAllocation random_critical_allocation(const LinearModel& model, std::uint64_t seed)
{
    const auto n = static_cast<Eigen::Index>(model.dimension());
    const Eigen::Index k = n + 3;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> when(0.1, 10.0);
    std::normal_distribution<double> normal;
    std::vector<double> times;
    while (static_cast<Eigen::Index>(times.size()) < k) {
        const double t = when(rng);
        if (std::find(times.begin(), times.end(), t) == times.end()) {
            times.push_back(t);
        }
    }
    std::sort(times.begin(), times.end());
    Eigen::MatrixXd a(n + 1, k);
    for (Eigen::Index j = 0; j < k; ++j) {
        a(0, j) = 1.0;
        a.block(1, j, n, 1) = model.basis_log_prices(times[static_cast<std::size_t>(j)]);
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
    const auto rank = svd.rank();
    const Eigen::MatrixXd null = svd.matrixV().rightCols(k - rank);
    Eigen::VectorXd c(null.cols());
    for (Eigen::Index i = 0; i < c.size(); ++i) {
        c[i] = normal(rng);
    }
    Eigen::VectorXd z = null * c;
    z /= z.cwiseAbs().sum();
    std::vector<DatedAmount> entries;
    for (Eigen::Index j = 0; j < k; ++j) {
        entries.push_back({times[static_cast<std::size_t>(j)], z[j]});
    }
    return CashAllocation(std::move(entries));
}

NlaReport verify_nla_certificate(const NlaCertificate& cert, const LinearModel& model, int trials,
                                 std::uint64_t seed, const DescentOptions& options)
{
    if (cert.nla_case.tag == CaseTag::Case4 || cert.nla_case.tag == CaseTag::None) {
        throw DomainError("certificate for " + cert.nla_case.describe() + " is rejected");
    }
    NlaReport report;
    report.injectivity = cert.injectivity_witness;
    const auto span = model_log_prices(model);

    double err = 0.0;
    if (cert.sum_sq && cert.sum_sq_coefficients) {
        for (int i = 0; i <= 200; ++i) {
            const double t = 10.0 * i / 200.0;
            double direct = 0.0;
            for (const auto& f : cert.F) {
                direct += std::norm(f(t).real());
            }
            const double g = (*cert.sum_sq)(t).real();
            const double rebuilt = model.log_price(*cert.sum_sq_coefficients, t);
            const double scale = std::max(1.0, std::abs(direct));
            err = std::max({err, std::abs(direct - g) / scale, std::abs(rebuilt - g) / scale});
            for (std::size_t j = 0; j < cert.F.size(); ++j) {
                const double fj = cert.F[j](t).real();
                err = std::max(err, std::abs(model.log_price(cert.coefficients[j], t) - fj) /
                                        std::max(1.0, std::abs(fj)));
            }
        }
        report.identity_error = err;
        report.identity_holds = err <= 1e-9;
    } else {
        report.identity_error = std::numeric_limits<double>::quiet_NaN();
        report.identity_holds = false;
    }

    const Params origin = Params::Zero(static_cast<Eigen::Index>(model.dimension()));
    for (int k = 0; k < trials; ++k) {
        ++report.trials;
        const auto z = random_critical_allocation(model, seed + static_cast<std::uint64_t>(k));
        if (z.total_abs() == 0.0) {
            ++report.skipped;
            continue;
        }
        if (descent_search(z, cert, model, origin, options).success()) {
            ++report.successes;
        } else {
            report.failures.push_back(z);
        }
    }
    return report;
}

namespace {

void check_order(int R)
{
    if (R < 1 || R > max_window_order) {
        throw DomainError("polynomial order R must lie in [1, " + std::to_string(max_window_order) +
                          "], got " + std::to_string(R));
    }
}

double factorial(int k)
{
    double out = 1.0;
    for (int i = 2; i <= k; ++i) {
        out *= i;
    }
    return out;
}

} // namespace

double poly_P(int R, double M)
{
    check_order(R);
    double sum = 0.0;
    for (int k = 0; k <= R; ++k) {
        sum += std::pow(M, k) / (factorial(k) * factorial(2 * R - 2 * k));
    }
    return sum;
}

double poly_Ptilde(int R, double M)
{
    check_order(R);
    double sum = 0.0;
    for (int k = 0; k <= R; ++k) {
        const int j = R - k;
        const double semi = std::ldexp(factorial(j), j); // (2j)!! = 2^j j!
        sum += std::pow(M, k) / (factorial(k) * semi * semi);
    }
    return sum;
}

std::pair<double, double> sign_window(int R, SphereAverage variant)
{
    check_order(R);
    if (variant == SphereAverage::Line) {
        return {(R - 1) / 6.0, R / 4.0};
    }
    return {(R - 1) / 8.0, R / 8.0};
}

} // namespace curvelab
