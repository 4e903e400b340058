#include <catch_amalgamated.hpp>

#include <cmath>

#include "oracles.hpp"
#include "sclock/clock_transforms.hpp"
#include "sclock/mc.hpp"

using namespace sclock;
using Catch::Matchers::WithinRel;
using Catch::Matchers::WithinAbs;

namespace {
const CirClock R1{0.6, 0.20, 0.4, 0.18};
const CirClock R2{0.5, 0.45, 0.6, 0.48};
}  // namespace

TEST_CASE("deterministic limit of the CIR transform", "[clock_transforms]") {
    const CirClock c{0.6, 0.20, 1e-6, 0.18};
    const double g = oracle::cir_clock_mean(c.kappa, c.theta, c.v0, 1.0);
    CHECK_THAT(phi(c, 1.0, 2.0), WithinRel(std::exp(-2.0 * g), 1e-6));
    CHECK_THAT(phi_riccati_numeric(c, 1.0, 2.0), WithinRel(std::exp(-2.0 * g), 1e-6));
}

TEST_CASE("closed form and numeric Riccati agree", "[clock_transforms]") {
    for (const auto& c : {R1, R2})
        for (double T : {0.25, 1.0, 3.0})
            for (double lam : {0.01, 0.5, 4.0, 60.0})
                CHECK_THAT(phi_riccati_numeric(c, T, lam), WithinRel(phi_cir_closed_form(c, T, lam), 1e-8));
}

TEST_CASE("time-dependent CIR with equal segments matches constant CIR", "[clock_transforms]") {
    const TimeDepCirClock td{{0.4, 1.0}, {0.6, 0.6}, {0.2, 0.2}, {0.4, 0.4}, 0.18};
    for (double lam : {0.1, 1.0, 10.0}) CHECK_THAT(phi(td, 1.0, lam), WithinRel(phi(R1, 1.0, lam), 1e-8));
}

TEST_CASE("time-dependent CIR piecewise mean", "[clock_transforms]") {
    // small lambda: -log Phi / lambda -> E[Gamma]
    const TimeDepCirClock td{{0.5, 2.0}, {1.0, 0.3}, {0.1, 0.3}, {1e-6, 1e-6}, 0.2};
    const double m1 = oracle::cir_clock_mean(1.0, 0.1, 0.2, 0.5);
    const double v_half = 0.1 + (0.2 - 0.1) * std::exp(-0.5);
    const double m2 = oracle::cir_clock_mean(0.3, 0.3, v_half, 1.5);
    CHECK_THAT(-std::log(phi(td, 2.0, 1e-4)) / 1e-4, WithinRel(m1 + m2, 1e-5));
}

TEST_CASE("squared OU equals the mapped CIR clock", "[clock_transforms]") {
    const SquaredOuClock o{0.6, std::sqrt(2.0 * 0.6 * 0.2), std::sqrt(0.18)};
    const CirClock mapped{2.0 * o.alpha, o.sigma * o.sigma / (2.0 * o.alpha), 2.0 * o.sigma, o.y0 * o.y0};
    for (double T : {0.25, 1.0})
        for (double lam : {0.05, 1.0, 25.0}) CHECK_THAT(phi(o, T, lam), WithinRel(phi(mapped, T, lam), 1e-8));
}

TEST_CASE("Markov chain with one state is deterministic", "[clock_transforms]") {
    const MarkovSwitchingClock m{{{0.0}}, {0.3}, {1.0}};
    CHECK_THAT(phi(m, 2.0, 1.5), WithinRel(std::exp(-1.5 * 0.3 * 2.0), 1e-12));
}

TEST_CASE("Markov chain with identical levels ignores switching", "[clock_transforms]") {
    const MarkovSwitchingClock m{{{-2.0, 2.0}, {1.0, -1.0}}, {0.25, 0.25}, {0.3, 0.7}};
    CHECK_THAT(phi(m, 1.0, 3.0), WithinRel(std::exp(-3.0 * 0.25), 1e-10));
}

TEST_CASE("Markov chain two-state small-time expansion", "[clock_transforms]") {
    // first order in T: E[Gamma] ~ T * sum p_i l_i
    const MarkovSwitchingClock m{{{-2.0, 2.0}, {1.0, -1.0}}, {0.1, 0.5}, {0.5, 0.5}};
    const double T = 1e-4;
    CHECK_THAT(-std::log(phi(m, T, 1.0)) / T, WithinRel(0.3, 1e-3));
}

TEST_CASE("two-factor transform factorises", "[clock_transforms]") {
    const TwoFactorCirClock tf{{3.0, 0.1, 0.3, 0.12}, {0.2, 0.1, 0.2, 0.06}};
    for (double lam : {0.2, 2.0}) CHECK_THAT(phi(tf, 1.0, lam), WithinRel(phi(tf.fast, 1.0, lam) * phi(tf.slow, 1.0, lam), 1e-12));
}

TEST_CASE("state derivative matches central differences", "[clock_transforms]") {
    auto check = [](const ClockSpec& spec, double t, double T, double lam, double y) {
        const double h = 1e-5 * std::max(1.0, std::abs(y));
        const double fd = (phi_conditional(spec, t, T, lam, y + h).value - phi_conditional(spec, t, T, lam, y - h).value) / (2 * h);
        const auto d = phi_conditional(spec, t, T, lam, y).state_derivative;
        REQUIRE(d.has_value());
        CHECK_THAT(*d, WithinRel(fd, 1e-6));
        CHECK(*d < 0.0);
    };
    check(R1, 0.0, 1.0, 2.0, 0.18);
    check(R1, 0.3, 1.0, 0.7, 0.05);
    check(R2, 0.0, 0.5, 5.0, 0.6);
    check(SquaredOuClock{0.6, 0.49, 0.42}, 0.2, 1.0, 3.0, 0.42);
}

TEST_CASE("state derivative vanishes at maturity", "[clock_transforms]") {
    const auto r = phi_conditional(R1, 1.0 - 1e-9, 1.0, 3.0, 0.2);
    CHECK_THAT(r.value, WithinAbs(1.0, 1e-8));
    CHECK_THAT(*r.state_derivative, WithinAbs(0.0, 1e-8));
}

TEST_CASE("Markov derivative is unsupported", "[clock_transforms]") {
    const MarkovSwitchingClock m{{{-1.0, 1.0}, {1.0, -1.0}}, {0.1, 0.3}, {0.5, 0.5}};
    CHECK_THROWS_AS(conditional_coefficients(m, 0.0, 1.0, 1.0), UnsupportedFamilyError);
}

TEST_CASE("transform against Monte Carlo", "[clock_transforms][mc]") {
    McConfig cfg;
    cfg.n_paths = 20000;
    cfg.steps_per_year = 250;
    for (const ClockSpec& spec : {ClockSpec{R1}, ClockSpec{SquaredOuClock{0.6, 0.49, 0.42}}}) {
        const auto e = mc_clock_laplace(spec, 1.0, 2.0, cfg);
        CHECK(std::abs(e.price - phi(spec, 1.0, 2.0)) < 4.0 * e.standard_error + 1e-3);
    }
}

TEST_CASE("invalid parameters are rejected", "[clock_transforms]") {
    CHECK_THROWS_AS(validate(CirClock{-1.0, 0.2, 0.4, 0.18}), DomainError);
    CHECK_THROWS_AS(validate(CirClock{0.6, 0.2, 0.4, -0.1}), DomainError);
    CHECK_THROWS_AS(phi(R1, 1.0, -0.5), DomainError);
    CHECK_THROWS_AS(validate(MarkovSwitchingClock{{{-1.0, 0.5}, {1.0, -1.0}}, {0.1, 0.3}, {0.5, 0.5}}), DomainError);
    CHECK_FALSE(warnings(CirClock{0.6, 0.2, 1.0, 0.18}).empty());
}
