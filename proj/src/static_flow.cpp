#include "curvelab/static_flow.hpp"

#include "curvelab/error.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <map>

namespace curvelab {

FlowMatrix generator(const LinearModel& model)
{
    const auto n = static_cast<Eigen::Index>(model.dimension());
    FlowMatrix flow;
    flow.A = Eigen::MatrixXd::Zero(n, n);

    auto row_of = [&](const Exponent& q, BasisKind kind) {
        const auto idx = model.index_of(q, kind);
        if (!idx) {
            throw DomainError("model basis is missing " + to_string(q) + "; exponent set not closed");
        }
        return static_cast<Eigen::Index>(*idx);
    };

    std::map<std::pair<double, double>, std::map<int, std::vector<Eigen::Index>>> chains;
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& b = model.basis()[static_cast<std::size_t>(i)];
        const auto& q = b.exponent();
        flow.A(i, i) = q.re;
        switch (b.kind()) {
        case BasisKind::Real:
            break;
        case BasisKind::Cos:
            flow.A(i, row_of(q, BasisKind::Sin)) = -q.im;
            break;
        case BasisKind::Sin:
            flow.A(i, row_of(q, BasisKind::Cos)) = q.im;
            break;
        }
        if (q.m > 0) {
            flow.A(i, row_of(prime(q), b.kind())) = static_cast<double>(q.m);
        }
        chains[{q.re, q.im}][q.m].push_back(i);
    }
    for (auto& [lambda, levels] : chains) {
        FlowBlock block;
        block.a = lambda.first;
        block.omega = lambda.second;
        for (auto& [m, rows] : levels) {
            std::sort(rows.begin(), rows.end());
            block.rows.insert(block.rows.end(), rows.begin(), rows.end());
        }
        flow.blocks.push_back(std::move(block));
    }
    return flow;
}

Eigen::MatrixXd generic_expm(const Eigen::MatrixXd& m)
{
    if (m.rows() != m.cols()) {
        throw DomainError("matrix exponential needs a square matrix");
    }
    return m.exp();
}

FundamentalSolution fundamental_solution(const FlowMatrix& flow, double h)
{
    const Eigen::Index n = flow.A.rows();
    if (flow.blocks.empty()) {
        return {generic_expm(h * flow.A), h};
    }
    Eigen::MatrixXd E = Eigen::MatrixXd::Zero(n, n);
    for (const auto& block : flow.blocks) {
        const auto k = static_cast<Eigen::Index>(block.rows.size());
        Eigen::MatrixXd local(k, k);
        for (Eigen::Index i = 0; i < k; ++i) {
            for (Eigen::Index j = 0; j < k; ++j) {
                local(i, j) = flow.A(block.rows[i], block.rows[j]);
            }
        }
        // local = a I + omega J + N with J the rotation generator on each
        // (cos, sin) pair and N nilpotent; the three commute.
        Eigen::MatrixXd rotation = Eigen::MatrixXd::Identity(k, k);
        Eigen::MatrixXd nilpotent = local - block.a * Eigen::MatrixXd::Identity(k, k);
        if (block.omega != 0.0) {
            const double c = std::cos(block.omega * h);
            const double s = std::sin(block.omega * h);
            for (Eigen::Index p = 0; p + 1 < k; p += 2) {
                rotation(p, p) = c;
                rotation(p, p + 1) = -s;
                rotation(p + 1, p) = s;
                rotation(p + 1, p + 1) = c;
                nilpotent(p, p + 1) += block.omega;
                nilpotent(p + 1, p) -= block.omega;
            }
        }
        Eigen::MatrixXd series = Eigen::MatrixXd::Identity(k, k);
        Eigen::MatrixXd power = Eigen::MatrixXd::Identity(k, k);
        for (Eigen::Index order = 1; order < k; ++order) {
            power = power * nilpotent * (h / static_cast<double>(order));
            if (power.isZero(0.0)) {
                break;
            }
            series += power;
        }
        const Eigen::MatrixXd local_exp = std::exp(block.a * h) * rotation * series;
        for (Eigen::Index i = 0; i < k; ++i) {
            for (Eigen::Index j = 0; j < k; ++j) {
                E(block.rows[i], block.rows[j]) = local_exp(i, j);
            }
        }
    }
    return {std::move(E), h};
}

Params translate(const LinearModel& model, const Params& r, double h)
{
    model.check_dimension(r);
    const auto solution = fundamental_solution(generator(model), h);
    return solution.E.transpose() * r;
}

SpaReport verify_spa(const LinearModel& model, const Params& r, std::span<const double> times,
                     std::span<const double> shifts)
{
    model.check_dimension(r);
    const auto flow = generator(model);
    SpaReport report;
    std::vector<Params> moved;
    moved.reserve(shifts.size());
    for (double h : shifts) {
        moved.push_back(fundamental_solution(flow, h).E.transpose() * r);
    }
    for (std::size_t k = 0; k < shifts.size(); ++k) {
        const double h = shifts[k];
        const double log_ph = model.log_price(r, h);
        for (double t : times) {
            report.yield_error =
                std::max(report.yield_error, std::abs(model.yield(moved[k], t) - model.yield(r, t + h)));
            // P_t(phi_h r) vs P_{t+h}(r) / P_h(r), compared through log prices.
            const double lhs = model.log_price(moved[k], t);
            const double rhs = model.log_price(r, t + h) - log_ph;
            report.price_error = std::max(report.price_error, std::abs(std::expm1(lhs - rhs)));
        }
    }
    for (std::size_t i = 0; i < shifts.size(); ++i) {
        const Eigen::MatrixXd second = fundamental_solution(flow, shifts[i]).E.transpose();
        for (std::size_t j = 0; j < shifts.size(); ++j) {
            const Params composed = second * moved[j];
            const Params direct = fundamental_solution(flow, shifts[i] + shifts[j]).E.transpose() * r;
            report.kolmogorov_error =
                std::max(report.kolmogorov_error, (composed - direct).cwiseAbs().maxCoeff());
        }
    }
    return report;
}

} // namespace curvelab
