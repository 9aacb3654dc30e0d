#include "rbcount/exact_count.hpp"
#include "rbcount/random.hpp"
#include "rbcount/theory.hpp"
#include "support/oracles.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>

using namespace rbcount;
using Catch::Approx;

TEST_CASE("critical tightness", "[theory]") {
    CHECK(critical_tightness(0.8, 1.7, Divisor(2)) == Approx(0.2097).margin(5e-4));
    CHECK(critical_tightness(0.85, 1.4, Divisor(2)) == Approx(0.2618).margin(5e-4));
    CHECK(critical_tightness(0.8, 1.7, Divisor::infinite()) == Approx(1 - std::exp(-0.8 / 1.7)).epsilon(1e-14));
    CHECK(critical_tightness(0.8, 1.7, Divisor::infinite()) == Approx(0.3753).margin(1e-4));
    CHECK_THROWS(Divisor(1));
}

TEST_CASE("critical density", "[theory]") {
    CHECK(critical_density(0.8, critical_tightness(0.8, 1.7, Divisor(2)), Divisor(2)) == Approx(1.7).epsilon(1e-9));
    CHECK(critical_density(0.85, 0.2618, Divisor(2)) == Approx(1.4).margin(3e-3));
    CHECK(critical_density(1.0, 1 - 1 / std::exp(1.0), Divisor::infinite()) == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("critical points are mutually inverse and monotone", "[theory][property]") {
    DrawStream rng(99, 0);
    for (int i = 0; i < 1000; ++i) {
        const double alpha = 0.05 + 2.0 * rng.unit();
        const double r = 0.3 + 3.7 * rng.unit();
        const std::uint32_t t = 2 + static_cast<std::uint32_t>(rng.below(50));
        const Divisor divisor(t);
        const double p_cr = critical_tightness(alpha, r, divisor);
        REQUIRE(critical_density(alpha, p_cr, divisor) == Approx(r).epsilon(1e-9));

        const double bump = 1e-3;
        REQUIRE(critical_tightness(alpha + bump, r, divisor) > p_cr);
        REQUIRE(critical_tightness(alpha, r + bump, divisor) < p_cr);
        REQUIRE(critical_tightness(alpha, r, Divisor(t + 1)) > p_cr);
        REQUIRE(critical_tightness(alpha, r, Divisor::infinite()) > p_cr);
    }
}

TEST_CASE("expected count", "[theory]") {
    CHECK(expected_count(5, 3, 10, 0.0).expected == Approx(243.0));

    SECTION("one binary constraint with one nogood on two boolean variables") {
        // Enumerate every such instance: each of the 4 possible nogoods.
        double total = 0;
        for (Value a = 0; a < 2; ++a) {
            for (Value b = 0; b < 2; ++b) {
                Instance inst{2, 2, 2, {{{0, 1}, {{a, b}}}}, std::nullopt};
                total += static_cast<double>(testing::count_by_definition(inst));
            }
        }
        CHECK(total / 4 == 3.0);
        CHECK(expected_count(2, 2, 1, 0.25).expected == Approx(total / 4).epsilon(1e-12));
    }

    CHECK(expected_count(7, 5, 20, 7.0 / 25).expected == Approx(78125 * std::pow(0.72, 20)).epsilon(1e-12));
    CHECK(expected_count(7, 5, 20, 7.0 / 25).expected == Approx(109.5).margin(0.1));

    const auto huge = expected_count(2000, 1000, 10, 0.5);
    CHECK(huge.overflow);
    CHECK(huge.log_expected == Approx(2000 * std::log(1000.0) + 10 * std::log(0.5)));
}

TEST_CASE("markov bound", "[theory]") {
    CHECK(markov_upper_bound(std::log(10.0), std::log(100.0)) == Approx(0.1));
    CHECK(markov_upper_bound(std::log(1000.0), std::log(100.0)) == 1.0);
}

TEST_CASE("ae_count", "[theory]") {
    const RbParams low{2, 13, 0.8, 1.7, 0.1, 0};
    const Estimate yes = ae_count(low, 0.5, Divisor(2));
    CHECK(yes.predicted == Prediction::yes);
    CHECK(yes.p_eff == Approx(6.0 / 64));
    CHECK(yes.interval_low == Approx(0.5 * yes.expected));
    CHECK(yes.interval_high == Approx(1.5 * yes.expected));
    CHECK(yes.log_interval_low < yes.log_expected);
    CHECK(yes.log_interval_high > yes.log_expected);

    CHECK(ae_count({2, 13, 0.8, 1.7, 0.3, 0}, 0.5, Divisor(2)).predicted == Prediction::no);

    const Estimate tiny = ae_count(low, 1e-12, Divisor(2));
    CHECK(tiny.interval_low == Approx(tiny.expected).epsilon(1e-9));
    CHECK(tiny.interval_high == Approx(tiny.expected).epsilon(1e-9));

    CHECK_THROWS_AS(ae_count(low, 0.0, Divisor(2)), std::invalid_argument);
    CHECK_THROWS_AS(ae_count(low, 1.5, Divisor(2)), std::invalid_argument);
    CHECK_NOTHROW(ae_count(low, 1.0, Divisor(2)));

    SECTION("critical band") {
        // n=13, d=8: p_eff moves in steps of 1/64; pick alpha so that p_cr sits
        // within half a band of the realized tightness 13/64.
        const double target = 13.0 / 64 + default_critical_band / 2;
        const double r = 1.7;
        const double alpha = -std::log(1 - target) * r / 0.5;
        const RbParams params{2, 13, alpha, r, 0.2, 0};
        const Estimate est = ae_count(params, 0.5, Divisor(2));
        REQUIRE(est.p_cr == Approx(target).epsilon(1e-12));
        if (est.sizes.d == 8) {
            CHECK(est.predicted == Prediction::critical);
            CHECK(ae_count(params, 0.5, Divisor(2), 0.001).predicted == Prediction::yes);
        }
    }
}

TEST_CASE("threshold", "[theory]") {
    const auto t = threshold(6, 10, Divisor(2));
    CHECK(t.value == Approx(7776));
    CHECK(t.least_count == 7776);
    CHECK(t.total == 60466176);

    const auto odd = threshold(5, 7, Divisor(2));
    CHECK(odd.value == Approx(279.508).margin(1e-3));
    CHECK(odd.least_count == 280);

    CHECK(threshold(10, 15, Divisor(2)).value == Approx(3.1623e7).epsilon(1e-5));
    CHECK(threshold(8, 13, Divisor(2)).least_count == 741456);
}

TEST_CASE("similarity", "[theory]") {
    const Assignment a{{0, 1, 2, 3}};
    const auto same = similarity(a, a);
    CHECK(same.similarity_number == 4);
    CHECK(same.similarity_degree == 1.0);
    CHECK(same.hamming == 0);

    const auto apart = similarity(a, Assignment{{1, 2, 3, 0}});
    CHECK(apart.similarity_number == 0);
    CHECK(apart.similarity_degree == 0.0);

    const auto half = similarity(a, Assignment{{0, 1, 0, 0}});
    CHECK(half.hamming == 2);
    CHECK(half.similarity_number == 2);
    CHECK(half.similarity_degree == 0.5);

    CHECK_THROWS(similarity(a, Assignment{{0}}));
}

TEST_CASE("pair probabilities closed forms", "[theory]") {
    const double p = 5.0 / 16;
    const auto full = pair_probabilities(6, 6, 2, 4, p);
    CHECK(full.conditional_per_constraint == Approx(1.0).epsilon(1e-15));
    CHECK(full.joint_per_constraint == 1 - p);

    const double q = ((1 - p) * 16 - 1) / 15;
    const auto disjoint = pair_probabilities(1, 6, 2, 4, p);
    CHECK(disjoint.conditional_per_constraint == Approx(q));
    CHECK(disjoint.joint_per_constraint == Approx((1 - p) * q));
    CHECK_THROWS(pair_probabilities(7, 6, 2, 4, p));
}

TEST_CASE("pair probabilities match sampled constraints", "[theory][statistical]") {
    // a and b agree on variables 0..2 of 6 (S = 3).
    const Assignment a{{0, 1, 2, 3, 0, 1}};
    const Assignment b{{0, 1, 2, 0, 1, 2}};
    REQUIRE(similarity(a, b).similarity_number == 3);
    constexpr std::uint64_t m = 100000;
    const Instance inst = generate_sized(6, 4, 2, m, 5, 31337);
    int both = 0;
    int a_only = 0;
    for (const Constraint& c : inst.constraints) {
        const bool sa = satisfies(c, a);
        if (sa) ++a_only;
        if (sa && satisfies(c, b)) ++both;
    }
    const auto probs = pair_probabilities(3, 6, 2, 4, 5.0 / 16);
    const double joint = probs.joint_per_constraint;
    CHECK(std::abs(both / static_cast<double>(m) - joint) < 3 * std::sqrt(joint * (1 - joint) / m));
    const double cond = probs.conditional_per_constraint;
    CHECK(std::abs(both / static_cast<double>(a_only) - cond) < 3 * std::sqrt(cond * (1 - cond) / a_only));
}

TEST_CASE("conditional expected count", "[theory]") {
    CHECK(std::exp(conditional_expected_count(5, 2, 3, 0, 0.4)) == Approx(243.0));
    CHECK(std::exp(conditional_expected_count(5, 2, 3, 7, 0.0)) == Approx(243.0));

    SECTION("matches rejection sampling on instances solved by a fixed assignment") {
        // n=4, k=2, d=3, m=3, one nogood per constraint (p_eff = 1/9).
        const Assignment fixed{{0, 1, 2, 0}};
        std::vector<double> counts;
        for (std::uint64_t seed = 0; counts.size() < 20000; ++seed) {
            const Instance inst = generate_sized(4, 3, 2, 3, 1, mix_seed(5, seed, 0));
            if (!satisfies(inst, fixed)) continue;
            counts.push_back(static_cast<double>(testing::count_by_definition(inst)));
        }
        const auto stats = testing::sample_stats(counts);
        const double exact = std::exp(conditional_expected_count(4, 2, 3, 3, 1.0 / 9));
        INFO("sample mean " << stats.mean << " se " << stats.standard_error << " formula " << exact);
        CHECK(std::abs(stats.mean - exact) < 3 * stats.standard_error);
    }
}

TEST_CASE("conditional expectation dominates the mean", "[theory][property]") {
    DrawStream rng(2718, 0);
    for (int i = 0; i < 500; ++i) {
        const auto n = static_cast<std::uint32_t>(2 + rng.below(40));
        const auto k = static_cast<std::uint32_t>(2 + rng.below(std::min<std::uint32_t>(n - 1, 3)));
        const auto d = static_cast<std::uint32_t>(2 + rng.below(12));
        const std::uint64_t m = rng.below(300);
        const double tuples = std::pow(d, k);
        const double p = std::floor(rng.unit() * (tuples - 1)) / tuples;
        const double log_mean = expected_count(n, d, m, p).log_expected;
        const double log_cond = conditional_expected_count(n, k, d, m, p);
        INFO("n=" << n << " k=" << k << " d=" << d << " m=" << m << " p=" << p);
        REQUIRE(log_cond >= log_mean - 1e-9 * std::max(1.0, std::abs(log_mean)));
        const double ratio = second_moment_ratio(n, k, d, m, p);
        REQUIRE(ratio >= 0);  // may underflow when the conditional mean dwarfs E
        REQUIRE(ratio <= 1);
    }
}

TEST_CASE("second moment ratio", "[theory]") {
    CHECK(second_moment_ratio(10, 2, 6, 39, 0.0) == 1.0);
    CHECK(second_moment_ratio(10, 2, 6, 0, 0.3) == 1.0);

    std::vector<double> ratios;
    for (int n : {10, 20, 40}) {
        const RbParams params{2, n, 0.8, 1.7, 0.15, 0};
        const auto s = derive_sizes(params);
        ratios.push_back(second_moment_ratio(n, 2, s.d, s.m, s.p_eff()));
    }
    CHECK(ratios[0] < ratios[1]);
    CHECK(ratios[1] < ratios[2]);
}

TEST_CASE("h(s) endpoint properties", "[theory]") {
    DrawStream rng(11, 4);
    for (int i = 0; i < 1000; ++i) {
        const auto n = static_cast<std::uint32_t>(2 + rng.below(200));
        const auto k = static_cast<std::uint32_t>(2 + rng.below(4));
        const double alpha = 0.1 + 2 * rng.unit();
        const double r = 0.1 + 3 * rng.unit();
        const double p = 0.001 + 0.998 * rng.unit();
        REQUIRE(h_eval(0.0, n, k, alpha, r, p) == 0.0);
        const double p_sat = critical_tightness(alpha, r, Divisor::infinite());
        if (p < p_sat - 1e-9) {
            REQUIRE(h_eval(1.0, n, k, alpha, r, p) < 0);
        } else if (p > p_sat + 1e-9) {
            REQUIRE(h_eval(1.0, n, k, alpha, r, p) > 0);
        }
    }
    CHECK(h_eval(1.0, 10, 2, 1.0, 1.0, 1 - 1 / std::exp(1.0)) == Approx(0.0).margin(1e-12));
}

TEST_CASE("h(s) peaks at zero below the satisfiability threshold", "[theory]") {
    // alpha=0.8, r=1.7, k=2 satisfies k e^{-alpha/r} >= 1.
    for (double p : {0.05, 0.1, 0.2, 0.3, 0.37}) {
        REQUIRE(p < critical_tightness(0.8, 1.7, Divisor::infinite()));
        std::size_t best = 0;
        double best_value = -1e300;
        for (std::size_t i = 0; i <= 1000; ++i) {
            const double v = h_eval(i / 1000.0, 20, 2, 0.8, 1.7, p);
            if (v > best_value) {
                best_value = v;
                best = i;
            }
        }
        CHECK(best == 0);
    }
}
