#include "support.hpp"

#include "curvelab/error.hpp"

#include <doctest.h>

using namespace curvelab;
using namespace testing;

namespace {

Params vec(std::initializer_list<double> v)
{
    Params p(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) {
        p[i++] = x;
    }
    return p;
}

} // namespace

TEST_SUITE("curve_models")
{
    TEST_CASE("basis of the exponential model")
    {
        const LinearModel m(exponential_set(1.0));
        REQUIRE(m.dimension() == 3);
        CHECK(m.has_flat());
        CHECK(*m.flat_index() == 0);
        for (double t : {0.0, 0.7, 3.0}) {
            const auto y = m.basis_yields(t);
            CHECK(y[0] == 1.0);
            CHECK(y[1] == doctest::Approx(std::exp(-t)).epsilon(1e-15));
            CHECK(y[2] == doctest::Approx(std::exp(-2 * t)).epsilon(1e-15));
        }
    }

    TEST_CASE("basis of the exponential-oscillation model")
    {
        const LinearModel m(oscillation_set(1.0, 2.0));
        REQUIRE(m.dimension() == 4);
        CHECK(m.basis()[1].kind() == BasisKind::Cos);
        CHECK(m.basis()[2].kind() == BasisKind::Sin);
        const double t = 0.9;
        const auto y = m.basis_yields(t);
        CHECK(y[0] == 1.0);
        CHECK(y[1] == doctest::Approx(std::exp(-t) * std::cos(2 * t)));
        CHECK(y[2] == doctest::Approx(std::exp(-t) * std::sin(2 * t)));
        CHECK(y[3] == doctest::Approx(std::exp(-2 * t)));
    }

    TEST_CASE("basis of the affine model and closedness errors")
    {
        const LinearModel m(affine_set());
        CHECK(m.basis_yields(2.5)[1] == 2.5);
        CHECK_THROWS_AS(LinearModel({Exponent(1, 0)}), DomainError);
        CHECK_THROWS_AS(LinearModel(ExponentSet{}), DomainError);
        CHECK_THROWS_AS(model_from_exponents({Exponent(0, -1, 1)}), DomainError);
    }

    TEST_CASE("yield examples")
    {
        CHECK(LinearModel(exponential_set()).yield(vec({0.03, 0.02, -0.01}), 0.0) == doctest::Approx(0.04));
        const LinearModel flat(flat_set());
        CHECK(flat.yield(vec({0.05}), 17.0) == 0.05);
        CHECK(LinearModel(affine_set()).yield(vec({0.02, 0.001}), 10.0) == doctest::Approx(0.03));
        CHECK_THROWS_AS(flat.yield(vec({0.05, 0.0}), 1.0), DomainError);
    }

    TEST_CASE("log price examples")
    {
        const LinearModel flat(flat_set());
        CHECK(flat.log_price(vec({0.05}), 2.0) == doctest::Approx(0.1));
        const LinearModel decay({Exponent(0, -1)});
        for (double t : {0.1, 1.0, 5.0}) {
            CHECK(decay.log_price(vec({1.0}), t) == doctest::Approx(1.0 - std::exp(-t)));
        }
        CHECK(LinearModel(affine_set()).log_price(vec({0.0, 1.0}), 2.0) == doctest::Approx(2.0));
    }

    TEST_CASE("price examples")
    {
        const LinearModel flat(flat_set());
        CHECK(flat.price(vec({0.05}), 2.0) == doctest::Approx(0.904837).epsilon(1e-6));
        std::mt19937_64 rng(1);
        const auto q = random_closed_set(rng, 5);
        CHECK(LinearModel(q).price(random_params(rng, q.size()), 0.0) == 1.0);

        const LinearModel m(exponential_set());
        const auto r = vec({0.03, 0.02, -0.01});
        const double expected = std::exp(-(0.03 + 0.02 * (1 - std::exp(-1.0)) - 0.005 * (1 - std::exp(-2.0))));
        CHECK(rel_err(m.price(r, 1.0), expected) < 1e-12);
        const double quad = simpson([&](double s) { return m.yield(r, s); }, 0.0, 1.0);
        CHECK(rel_err(m.price(r, 1.0), std::exp(-quad)) < 1e-10);
    }

    TEST_CASE("short and long rates")
    {
        const LinearModel e(exponential_set());
        const auto r = vec({0.011, 0.013, 0.017});
        CHECK(e.short_rate(r) == doctest::Approx(0.011 + 0.013 + 0.017));
        REQUIRE(e.long_rate(r).has_value());
        CHECK(*e.long_rate(r) == 0.011);

        const LinearModel o(oscillation_set());
        const auto s = vec({0.011, 0.013, 0.017, 0.019});
        CHECK(o.short_rate(s) == doctest::Approx(0.011 + 0.013 + 0.019));
        CHECK(*o.long_rate(s) == 0.011);

        CHECK_FALSE(LinearModel(affine_set()).long_rate(vec({0.02, 0.001})).has_value());
        CHECK(LinearModel(affine_set()).long_rate(vec({0.02, 0.0})).value() == 0.02);
    }

    TEST_CASE("positive domain examples")
    {
        CHECK(in_positive_domain(LinearModel(flat_set()), vec({0.05}), true));
        const LinearModel e(exponential_set());
        CHECK_FALSE(in_positive_domain(e, vec({0.03, -0.05, 0.01}), false));
        CHECK(in_positive_domain(e, vec({0.03, 0.02, -0.01}), true));

        // Dense-grid oracle agrees on the positive example.
        double minimum = 1e300;
        for (int i = 0; i <= 50000; ++i) {
            minimum = std::min(minimum, e.yield(vec({0.03, 0.02, -0.01}), i * 1e-3));
        }
        CHECK(minimum > 0.0);

        // Negative only in the middle of the curve.
        CHECK_FALSE(in_positive_domain(e, vec({0.01, -0.2, 0.2}), false));
        // Decays to zero: positive but not uniformly.
        const LinearModel d({Exponent(0, -1)});
        CHECK(in_positive_domain(d, vec({1.0}), false));
        CHECK_FALSE(in_positive_domain(d, vec({1.0}), true));
        // Growing negative tail.
        CHECK_FALSE(in_positive_domain(LinearModel(affine_set()), vec({0.05, -0.001}), false));
        CHECK(in_positive_domain(LinearModel(affine_set()), vec({0.05, 0.001}), true));
        // Pure oscillation dominated by a constant.
        const LinearModel osc({Exponent(0, 0), Exponent(0, 0, 1), Exponent(0, 0, -1)});
        CHECK(in_positive_domain(osc, vec({0.05, 0.03, 0.03}), true));
        CHECK_FALSE(in_positive_domain(osc, vec({0.05, 0.04, 0.04}), false));
    }

    TEST_CASE("positive domain: zero infimum is undecidable")
    {
        const LinearModel e(exponential_set());
        // Y_0 = 0 exactly, positive afterwards.
        CHECK_THROWS_AS(positivity_report(e, vec({0.01, -0.01, 0.0}), false), NumericalError);
        // An identically zero curve is decidably outside the domain.
        CHECK_FALSE(positivity_report(e, vec({0.0, 0.0, 0.0}), false).positive);
        const auto report = positivity_report(e, vec({0.03, 0.02, -0.01}), true);
        CHECK(report.positive);
        CHECK(report.minimum > 0.0);
    }

    TEST_CASE("property: dL/dt = Y and L matches quadrature")
    {
        std::mt19937_64 rng(21);
        std::uniform_real_distribution<double> when(0.1, 5.0);
        for (int i = 0; i < 100; ++i) {
            const auto q = random_closed_set(rng, 5);
            const LinearModel m(q);
            const auto r = random_params(rng, m.dimension(), 1.0);
            const double t = when(rng);
            const double h = 1e-5;
            const double fd = (m.log_price(r, t + h) - m.log_price(r, t - h)) / (2 * h);
            const double y = m.yield(r, t);
            CHECK(std::abs(fd - y) <= 1e-8 * std::max(1.0, std::abs(y)));
            const double quad = simpson([&](double s) { return m.yield(r, s); }, 0.0, t, 4000);
            CHECK(std::abs(quad - m.log_price(r, t)) <= 1e-8 * std::max(1.0, std::abs(quad)));
            CHECK(m.log_price(r, 0.0) == 0.0);
        }
    }

    TEST_CASE("property: P_t(r) P_t(r') = P_t(r + r')")
    {
        std::mt19937_64 rng(22);
        for (int i = 0; i < 100; ++i) {
            const LinearModel m(random_closed_set(rng, 5));
            const auto r = random_params(rng, m.dimension());
            const auto s = random_params(rng, m.dimension());
            for (double t : {0.5, 2.0, 7.0}) {
                CHECK(rel_err(m.price(r, t) * m.price(s, t), m.price(r + s, t)) < 1e-12);
            }
        }
    }

    TEST_CASE("property: prices decrease on the positive domain")
    {
        std::mt19937_64 rng(23);
        int positive = 0;
        for (int i = 0; i < 300 && positive < 40; ++i) {
            const LinearModel m(random_closed_set(rng, 4));
            auto r = random_params(rng, m.dimension());
            if (m.flat_index()) {
                r[static_cast<Eigen::Index>(*m.flat_index())] = 0.1;
            }
            bool ok = false;
            try {
                ok = in_positive_domain(m, r, false);
            } catch (const NumericalError&) {
            }
            if (!ok) {
                continue;
            }
            ++positive;
            // Compared through L = -ln P so growing curves do not underflow.
            double prev = 0.0;
            for (int k = 1; k <= 200; ++k) {
                const double l = m.log_price(r, 0.05 * k);
                CHECK(l > prev);
                prev = l;
            }
        }
        CHECK(positive > 10);
    }

    TEST_CASE("property: basis values at n distinct times are nonsingular")
    {
        std::mt19937_64 rng(24);
        for (int i = 0; i < 100; ++i) {
            const LinearModel m(random_closed_set(rng, 6));
            const auto n = static_cast<Eigen::Index>(m.dimension());
            Eigen::MatrixXd g(n, n);
            for (Eigen::Index k = 0; k < n; ++k) {
                g.row(k) = m.basis_yields(0.37 + 0.61 * static_cast<double>(k)).transpose();
            }
            CHECK(g.fullPivLu().rank() == n);
        }
    }

    TEST_CASE("property: long rate equals the yield far out")
    {
        std::mt19937_64 rng(25);
        int checked = 0;
        for (int i = 0; i < 200; ++i) {
            const LinearModel m(random_closed_set(rng, 5));
            const auto r = random_params(rng, m.dimension());
            const auto lr = m.long_rate(r);
            if (!lr) {
                continue;
            }
            double decay = 0.0;
            for (const auto& e : m.exponents()) {
                decay = std::max(decay, std::abs(e.re));
            }
            if (decay == 0.0) {
                decay = 1.0;
            }
            // Slowest decay governs; 1e4 / max rate is far enough for every term here.
            double slowest = decay;
            for (const auto& e : m.exponents()) {
                if (e.re < 0.0) {
                    slowest = std::min(slowest, -e.re);
                }
            }
            CHECK(std::abs(*lr - m.yield(r, 1e4 / decay * (decay / slowest))) <= 1e-8);
            ++checked;
        }
        CHECK(checked > 20);
    }
}
