#pragma once

#include "curvelab/curve_model.hpp"
#include "curvelab/exponent.hpp"
#include "curvelab/portfolio.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace testing {

using namespace curvelab;

inline ExponentSet flat_set() { return {Exponent(0, 0.0)}; }

inline ExponentSet exponential_set(double rho = 1.0)
{
    return {Exponent(0, 0.0), Exponent(0, -rho), Exponent(0, -2.0 * rho)};
}

inline ExponentSet oscillation_set(double rho = 1.0, double omega = 2.0)
{
    return {Exponent(0, 0.0), Exponent(0, -rho, omega), Exponent(0, -rho, -omega), Exponent(0, -2.0 * rho)};
}

inline ExponentSet affine_set() { return {Exponent(0, 0.0), Exponent(1, 0.0)}; }

inline ExponentSet odd_decay_set() { return {Exponent(0, -1.0), Exponent(0, -3.0), Exponent(0, -5.0)}; }

/// Composite Simpson rule on [a, b] with `n` (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 2000)
{
    const double h = (b - a) / n;
    double sum = f(a) + f(b);
    for (int i = 1; i < n; ++i) {
        sum += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    }
    return sum * h / 3.0;
}

/// Random closed exponent set with at most `max_size` members drawn from a
/// small lattice of eigenvalues so that sums collide often. With
/// `allow_growth` false no member has a positive real part.
inline ExponentSet random_closed_set(std::mt19937_64& rng, std::size_t max_size, bool allow_growth = true)
{
    static const double res[] = {0.0, -0.5, -1.0, -1.5, -2.0, -3.0, 1.0};
    static const double ims[] = {0.0, 0.0, 1.0, 2.0};
    std::uniform_int_distribution<int> pick_re(0, allow_growth ? 6 : 5);
    std::uniform_int_distribution<int> pick_im(0, 3);
    std::uniform_int_distribution<int> pick_m(0, 2);
    std::uniform_int_distribution<int> pick_count(1, 4);
    for (;;) {
        std::vector<Exponent> seeds;
        const int count = pick_count(rng);
        for (int i = 0; i < count; ++i) {
            seeds.emplace_back(pick_m(rng) == 2 ? 1 : 0, res[pick_re(rng)], ims[pick_im(rng)]);
        }
        auto set = closure(ExponentSet(seeds));
        if (set.size() <= max_size) {
            return set;
        }
    }
}

inline Params random_params(std::mt19937_64& rng, std::size_t n, double scale = 0.05)
{
    std::uniform_real_distribution<double> u(-scale, scale);
    Params r(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < r.size(); ++i) {
        r[i] = u(rng);
    }
    return r;
}

inline double rel_err(double a, double b, double floor = 1e-300)
{
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

} // namespace testing
