#pragma once

#include "curvelab/curve_model.hpp"

#include <Eigen/Dense>

#include <complex>
#include <type_traits>
#include <utility>
#include <vector>

namespace curvelab {

struct DatedAmount {
    double time = 0.0;
    double amount = 0.0;
};

/// Finite map from strictly positive times to real amounts, sorted by time.
///
/// `Tag` separates delivered-dollar bundles from current-dollar allocations
/// at the type level.
template <typename Tag>
class Schedule {
public:
    Schedule() = default;
    /// Sorts by time. Throws DomainError on nonpositive or non-finite times,
    /// non-finite amounts, and duplicate times.
    explicit Schedule(std::vector<DatedAmount> entries);
    Schedule(std::initializer_list<DatedAmount> entries)
        : Schedule(std::vector<DatedAmount>(entries))
    {
    }

    const std::vector<DatedAmount>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    auto begin() const { return entries_.begin(); }
    auto end() const { return entries_.end(); }

    std::vector<double> times() const;
    double amount_at(double time) const;
    double total() const;
    double total_abs() const;

    /// Adds `amount` at `time`, merging with an existing entry whose time is
    /// within `merge_tolerance`.
    void add(double time, double amount, double merge_tolerance = 1e-12);
    /// Drops entries with |amount| <= threshold.
    void prune(double threshold);

    Schedule scaled(double factor) const;

private:
    std::vector<DatedAmount> entries_;
};

struct BundleTag {};
struct CashTag {};

/// Bundle of futures: x_t dollars delivered at time t.
using Bundle = Schedule<BundleTag>;
/// Current-dollar allocation z_t.
using CashAllocation = Schedule<CashTag>;

extern template class Schedule<BundleTag>;
extern template class Schedule<CashTag>;

/// <f> = sum_t z_t f(t). Works for real- or complex-valued f.
template <typename F>
auto bracket(const CashAllocation& z, F&& f)
{
    using R = std::decay_t<decltype(f(0.0))>;
    R sum{};
    for (const auto& e : z) {
        sum += e.amount * f(e.time);
    }
    return sum;
}

struct ValueReport {
    double value = 0.0;
    Eigen::VectorXd gradient;
    Eigen::MatrixXd hessian;
};

/// V(r) = sum_t P_t(r) x_t
double present_value(const Bundle& x, const LinearModel& model, const Params& r);

/// |V| <= 1e-12 * sum |z_t| with z_t = P_t(r) x_t.
bool is_self_financing(const Bundle& x, const LinearModel& model, const Params& r);

/// x_t = z_t / P_t(r*)
Bundle bundle_from_cash(const CashAllocation& z, const LinearModel& model, const Params& r_star);

/// z_t = P_t(r*) x_t
CashAllocation cash_from_bundle(const Bundle& x, const LinearModel& model, const Params& r_star);

/// Value <1>, gradient -<L^i> and Hessian <L^i L^j> at r = r*, all from the
/// closed-form basis log prices.
ValueReport value_report(const CashAllocation& z, const LinearModel& model, const Params& r_star);

/// V(r) - <1> for x = z / P(r*), evaluated as <expm1(-L(r - r*))>.
double value_change(const CashAllocation& z, const LinearModel& model, const Params& r_star,
                    const Params& r);

/// (sum t z_t) / (sum z_t). Throws DomainError when sum z_t == 0.
double duration(const CashAllocation& z);

/// Finances a flat-rate bond by a single sale at its duration.
///
/// Requires every z_t = exp(-r* t) x_t to be positive. Entries that cancel
/// exactly are removed.
Bundle immunize_flat(const Bundle& x, double r_star);

/// sum_t exp(-(t - h) r) x_t under a new flat rate r after time h.
/// Throws DomainError unless h < earliest payment time.
double immunized_value(const Bundle& immunized, double r, double h);

} // namespace curvelab
