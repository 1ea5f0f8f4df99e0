#include "curvelab/portfolio.hpp"

#include "curvelab/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace curvelab {

template <typename Tag>
Schedule<Tag>::Schedule(std::vector<DatedAmount> entries) : entries_(std::move(entries))
{
    for (const auto& e : entries_) {
        if (!std::isfinite(e.time) || e.time <= 0.0) {
            throw DomainError("schedule times must be finite and strictly positive, got " +
                              std::to_string(e.time));
        }
        if (!std::isfinite(e.amount)) {
            throw DomainError("schedule amounts must be finite");
        }
    }
    std::sort(entries_.begin(), entries_.end(),
              [](const DatedAmount& a, const DatedAmount& b) { return a.time < b.time; });
    for (std::size_t i = 1; i < entries_.size(); ++i) {
        if (entries_[i].time == entries_[i - 1].time) {
            throw DomainError("duplicate schedule time " + std::to_string(entries_[i].time));
        }
    }
}

template <typename Tag>
std::vector<double> Schedule<Tag>::times() const
{
    std::vector<double> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) {
        out.push_back(e.time);
    }
    return out;
}

template <typename Tag>
double Schedule<Tag>::amount_at(double time) const
{
    for (const auto& e : entries_) {
        if (e.time == time) {
            return e.amount;
        }
    }
    return 0.0;
}

template <typename Tag>
double Schedule<Tag>::total() const
{
    double sum = 0.0;
    for (const auto& e : entries_) {
        sum += e.amount;
    }
    return sum;
}

template <typename Tag>
double Schedule<Tag>::total_abs() const
{
    double sum = 0.0;
    for (const auto& e : entries_) {
        sum += std::abs(e.amount);
    }
    return sum;
}

template <typename Tag>
void Schedule<Tag>::add(double time, double amount, double merge_tolerance)
{
    for (auto& e : entries_) {
        if (std::abs(e.time - time) <= merge_tolerance) {
            e.amount += amount;
            return;
        }
    }
    auto merged = entries_;
    merged.push_back({time, amount});
    *this = Schedule(std::move(merged));
}

template <typename Tag>
void Schedule<Tag>::prune(double threshold)
{
    std::erase_if(entries_, [&](const DatedAmount& e) { return std::abs(e.amount) <= threshold; });
}

template <typename Tag>
Schedule<Tag> Schedule<Tag>::scaled(double factor) const
{
    auto copy = entries_;
    for (auto& e : copy) {
        e.amount *= factor;
    }
    return Schedule(std::move(copy));
}

template class Schedule<BundleTag>;
template class Schedule<CashTag>;

double present_value(const Bundle& x, const LinearModel& model, const Params& r)
{
    model.check_dimension(r);
    double sum = 0.0;
    for (const auto& e : x) {
        sum += model.price(r, e.time) * e.amount;
    }
    return sum;
}

bool is_self_financing(const Bundle& x, const LinearModel& model, const Params& r)
{
    const auto z = cash_from_bundle(x, model, r);
    return std::abs(z.total()) <= 1e-12 * z.total_abs();
}

Bundle bundle_from_cash(const CashAllocation& z, const LinearModel& model, const Params& r_star)
{
    model.check_dimension(r_star);
    std::vector<DatedAmount> out;
    out.reserve(z.size());
    for (const auto& e : z) {
        out.push_back({e.time, e.amount * std::exp(model.log_price(r_star, e.time))});
    }
    return Bundle(std::move(out));
}

CashAllocation cash_from_bundle(const Bundle& x, const LinearModel& model, const Params& r_star)
{
    model.check_dimension(r_star);
    std::vector<DatedAmount> out;
    out.reserve(x.size());
    for (const auto& e : x) {
        out.push_back({e.time, e.amount * model.price(r_star, e.time)});
    }
    return CashAllocation(std::move(out));
}

ValueReport value_report(const CashAllocation& z, const LinearModel& model, const Params& r_star)
{
    model.check_dimension(r_star);
    const auto n = static_cast<Eigen::Index>(model.dimension());
    ValueReport report;
    report.value = z.total();
    report.gradient = Eigen::VectorXd::Zero(n);
    report.hessian = Eigen::MatrixXd::Zero(n, n);
    for (const auto& e : z) {
        const Eigen::VectorXd l = model.basis_log_prices(e.time);
        report.gradient -= e.amount * l;
        report.hessian.selfadjointView<Eigen::Lower>().rankUpdate(l, e.amount);
    }
    report.hessian.triangularView<Eigen::StrictlyUpper>() = report.hessian.transpose();
    return report;
}

double value_change(const CashAllocation& z, const LinearModel& model, const Params& r_star,
                    const Params& r)
{
    model.check_dimension(r_star);
    const Params delta = r - r_star;
    double sum = 0.0;
    for (const auto& e : z) {
        sum += e.amount * std::expm1(-model.log_price(delta, e.time));
    }
    return sum;
}

double duration(const CashAllocation& z)
{
    double weighted = 0.0;
    double total = 0.0;
    for (const auto& e : z) {
        weighted += e.time * e.amount;
        total += e.amount;
    }
    if (total == 0.0) {
        throw DomainError("duration is undefined for a zero net allocation");
    }
    return weighted / total;
}

Bundle immunize_flat(const Bundle& x, double r_star)
{
    std::vector<DatedAmount> cash;
    for (const auto& e : x) {
        const double z = std::exp(-r_star * e.time) * e.amount;
        if (!(z > 0.0)) {
            throw DomainError("immunization needs positive allocations; z at t = " +
                              std::to_string(e.time) + " is " + std::to_string(z));
        }
        cash.push_back({e.time, z});
    }
    if (cash.empty()) {
        return x;
    }
    const double horizon = duration(CashAllocation(cash));
    double sale = 0.0;
    for (const auto& e : x) {
        sale += std::exp((horizon - e.time) * r_star) * e.amount;
    }
    Bundle out = x;
    out.add(horizon, -sale);
    out.prune(1e-14 * std::abs(sale));
    return out;
}

double immunized_value(const Bundle& immunized, double r, double h)
{
    if (!immunized.empty() && h >= immunized.entries().front().time) {
        throw DomainError("elapsed time must precede the first payment");
    }
    double sum = 0.0;
    for (const auto& e : immunized) {
        sum += std::exp(-(e.time - h) * r) * e.amount;
    }
    return sum;
}

} // namespace curvelab
