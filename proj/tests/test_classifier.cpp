#include "support.hpp"

#include "curvelab/arbitrage.hpp"
#include "curvelab/classifier.hpp"
#include "curvelab/error.hpp"

#include <doctest.h>

#include <string>

using namespace curvelab;
using namespace testing;

namespace {

struct Fixture {
    const char* label;
    ExponentSet q;
    CaseTag tag;
    double rho = 0.0;
    double omega = 0.0;
};

// One closed set per branch of the case analysis, including sets with
// several witnesses and sets where the hypothesis holds.
std::vector<Fixture> case_fixtures()
{
    return {
        {"exponential", exponential_set(1.0), CaseTag::Case1, -1.0},
        {"decay pair without flat", {Exponent(0, -1), Exponent(0, -2)}, CaseTag::Case1, -1.0},
        {"growing pair", {Exponent(0, 1), Exponent(0, 2)}, CaseTag::Case1, 1.0},
        {"damped oscillation", oscillation_set(1.0, 2.0), CaseTag::Case2, -1.0, 2.0},
        {"growing oscillation",
         {Exponent(0, 0.5, 3), Exponent(0, 0.5, -3), Exponent(0, 1.0)},
         CaseTag::Case2, 0.5, 3.0},
        {"affine", affine_set(), CaseTag::Case3},
        {"quadratic", {Exponent(0, 0), Exponent(1, 0), Exponent(2, 0)}, CaseTag::Case3},
        {"pure oscillation", {Exponent(0, 0, 1), Exponent(0, 0, -1)}, CaseTag::Case4, 0.0, 1.0},
        {"flat plus oscillation",
         {Exponent(0, 0), Exponent(0, 0, 2), Exponent(0, 0, -2)},
         CaseTag::Case4, 0.0, 2.0},
        {"flat", flat_set(), CaseTag::None},
        {"odd decay", odd_decay_set(), CaseTag::None},
        {"single damped oscillation", {Exponent(0, -1, 1), Exponent(0, -1, -1)}, CaseTag::None},
    };
}

Params random_vec(std::mt19937_64& rng, Eigen::Index n)
{
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Params r(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        r[i] = u(rng);
    }
    return r;
}

double inclusion_error(const LinearModel& source, const LinearModel& target, const Eigen::MatrixXd& S,
                       std::mt19937_64& rng)
{
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const Params r = random_vec(rng, static_cast<Eigen::Index>(source.dimension()));
        const Params s = S * r;
        for (int k = 0; k < 200; ++k) {
            const double t = 10.0 * k / 199.0;
            worst = std::max(worst, std::abs(source.yield(r, t) - target.yield(s, t)));
        }
    }
    return worst;
}

} // namespace

TEST_SUITE("classifier")
{
    TEST_CASE("theorem_case fixture suite")
    {
        for (const auto& f : case_fixtures()) {
            CAPTURE(f.label);
            const auto c = theorem_case(f.q);
            CHECK(c.tag == f.tag);
            CHECK(c.rho == f.rho);
            CHECK(std::abs(c.omega) == f.omega);
            CHECK(c.witness.has_value() == (f.tag != CaseTag::None));
            CHECK(c.witnesses.empty() == (f.tag == CaseTag::None));
            CHECK(arbitrage_hypothesis(f.q) == (f.tag == CaseTag::None));
        }
    }

    TEST_CASE("theorem_case witnesses")
    {
        const auto c = theorem_case(exponential_set());
        REQUIRE(c.witness);
        CHECK(*c.witness == Exponent(0, -1));

        const auto affine = theorem_case(affine_set());
        CHECK(*affine.witness == Exponent(1, 0));

        // Two witnesses: (0,-2) with (0,-4) and (0,-1) with (0,-2).
        const auto many = theorem_case({Exponent(0, -1), Exponent(0, -2), Exponent(0, -4)});
        CHECK(many.witnesses.size() == 2);
        REQUIRE(many.witness);
        CHECK(*many.witness == many.witnesses.front());
        CHECK(many.tag == CaseTag::Case1);
        CHECK(many.rho == many.witness->re);

        CHECK(theorem_case(odd_decay_set()).describe() == "None");
        CHECK(theorem_case(exponential_set()).describe() == "Case1(rho=-1)");
        CHECK(theorem_case({Exponent(0, 0, 1), Exponent(0, 0, -1)}).anomalous());
        CHECK(theorem_case({Exponent(0, 0, 1), Exponent(0, 0, -1)}).describe().find("anomalous") !=
              std::string::npos);
    }

    TEST_CASE("theorem_case rejects sets that are not closed")
    {
        CHECK_THROWS_AS(theorem_case({Exponent(1, -1)}), DomainError);
    }

    TEST_CASE("includes examples")
    {
        const LinearModel flat(flat_set());
        const LinearModel e1(exponential_set(1.0));
        const LinearModel e2(exponential_set(2.0));
        const auto s = includes(flat, e1);
        REQUIRE(s);
        CHECK(s->exact);
        Eigen::MatrixXd expected(3, 1);
        expected << 1, 0, 0;
        CHECK(s->S == expected);

        CHECK_FALSE(includes(e1, e2).has_value());
        CHECK_FALSE(includes(e1, flat).has_value());

        const auto self = includes(e1, e1);
        REQUIRE(self);
        CHECK(self->S == Eigen::MatrixXd::Identity(3, 3));

        const LinearModel osc(oscillation_set());
        const auto o = includes(flat, osc);
        REQUIRE(o);
        CHECK(o->S.col(0).sum() == 1.0);
    }

    TEST_CASE("property: inclusion maps reproduce the source curves")
    {
        std::mt19937_64 rng(51);
        int found = 0;
        for (int i = 0; i < 60; ++i) {
            const auto target_set = random_closed_set(rng, 6);
            const LinearModel target(target_set);
            // A closed sub-model: the closure of one member of the target.
            const auto member = target_set.members()[i % target_set.size()];
            const LinearModel source(closure(ExponentSet{member}));
            const auto map = includes(source, target);
            REQUIRE(map);
            ++found;
            CHECK(map->S.rows() == static_cast<Eigen::Index>(target.dimension()));
            CHECK(map->S.fullPivLu().rank() == static_cast<Eigen::Index>(source.dimension()));
            CHECK(inclusion_error(source, target, map->S, rng) <= 1e-10);

            const auto self = includes(target, target);
            REQUIRE(self);
            // Transitivity: source into target into target composes.
            CHECK((self->S * map->S - map->S).cwiseAbs().maxCoeff() == 0.0);
        }
        CHECK(found == 60);
    }

    TEST_CASE("classify_simple examples")
    {
        const auto e = classify_simple(exponential_set());
        CHECK(e.label == SimpleLabel::Exponential);
        CHECK(e.short_rate_formula == "r1+r2+r3");
        CHECK(e.long_rate_formula == "r1");
        CHECK(e.summary() == "Exponential (simple); short=r1+r2+r3; long=r1");
        CHECK(e.long_rates_exist);
        CHECK(e.includes_flat);
        CHECK(e.domain_nonempty);

        const auto o = classify_simple(oscillation_set(1.0, 2.0));
        CHECK(o.label == SimpleLabel::ExponentialOscillation);
        CHECK(o.short_rate_formula == "r1+r2+r4");
        CHECK(o.long_rate_formula == "r1");
        CHECK(o.summary() == "Exponential-Oscillation (simple); short=r1+r2+r4; long=r1");

        const auto a = classify_simple(affine_set());
        CHECK(a.label == SimpleLabel::NotSimple);
        CHECK_FALSE(a.long_rates_exist);
        CHECK(a.failed_condition.find("LRE fails") != std::string::npos);
        CHECK(a.failed_condition.find("unbounded") != std::string::npos);
        CHECK(a.long_rate_formula == "absent");
    }

    TEST_CASE("classify_simple failure reasons")
    {
        const auto no_flat = classify_simple({Exponent(0, -1), Exponent(0, -2)});
        CHECK(no_flat.label == SimpleLabel::NotSimple);
        CHECK(no_flat.failed_condition == "flat yield curve model not included");

        const auto flat = classify_simple(flat_set());
        CHECK(flat.failed_condition == "NLA fails: arbitrage everywhere");

        const auto growing = classify_simple({Exponent(0, 0), Exponent(0, 1), Exponent(0, 2)});
        CHECK(growing.failed_condition.find("growing") != std::string::npos);

        const auto undamped = classify_simple({Exponent(0, 0), Exponent(0, 0, 1), Exponent(0, 0, -1)});
        CHECK(undamped.failed_condition.find("undamped") != std::string::npos);
        CHECK(to_string(undamped.label) == "Not-Simple");
    }

    TEST_CASE("property: theorem_case is None exactly when the hypothesis holds")
    {
        std::mt19937_64 rng(52);
        int none = 0;
        for (int i = 0; i < 500; ++i) {
            const auto q = random_closed_set(rng, 6);
            const auto c = theorem_case(q);
            CHECK((c.tag == CaseTag::None) == arbitrage_hypothesis(q));
            none += c.tag == CaseTag::None;
        }
        // Both sides of the equivalence are exercised.
        CHECK(none > 10);
        CHECK(none < 490);
    }

    TEST_CASE("property: simple models pass NLA verification")
    {
        std::mt19937_64 rng(53);
        std::uniform_real_distribution<double> rates(0.3, 2.0);
        for (int i = 0; i < 4; ++i) {
            const double rho = rates(rng);
            for (const auto& q : {exponential_set(rho), oscillation_set(rho, rates(rng))}) {
                const auto report = classify_simple(q);
                REQUIRE(report.label != SimpleLabel::NotSimple);
                const LinearModel m(q);
                const auto cert = standard_nla_basis(report.nla_case, m);
                const auto nla = verify_nla_certificate(cert, m, 10, static_cast<std::uint64_t>(i));
                CHECK(nla.passed());
            }
        }
    }
}
