#include <catch_amalgamated.hpp>

#include <cmath>

#include "oracles.hpp"
#include "sclock/mc.hpp"
#include "sclock/vanilla.hpp"

using namespace sclock;
using Catch::Matchers::WithinRel;
using Catch::Matchers::WithinAbs;

namespace {
const MarketEnv M{100.0, 0.03, 0.0};
const CirClock R1{0.6, 0.20, 0.4, 0.18};
}  // namespace

TEST_CASE("COS matches the Heston characteristic-function price at zero correlation", "[vanilla_transform]") {
    for (double T : {0.25, 1.0, 2.0})
        for (double K : {70.0, 100.0, 140.0}) {
            const double ref = oracle::heston_call(M.forward(T), K, T, M.discount(T), R1.kappa, R1.theta, R1.xi, R1.v0, 0.0);
            CHECK_THAT(cos_vanilla_price(R1, M, {T, K, OptionKind::Call}), WithinAbs(ref, 1e-6 * std::max(1.0, ref)));
        }
}

TEST_CASE("COS in the deterministic limit is Black", "[vanilla_transform]") {
    const CirClock c{1.0, 0.04, 1e-6, 0.04};
    const double s = std::sqrt(0.04);
    for (double K : {80.0, 100.0, 120.0})
        CHECK_THAT(cos_vanilla_price(c, M, {1.0, K, OptionKind::Put}),
                   WithinRel(oracle::black(M.forward(1.0), K, s, M.discount(1.0), false), 1e-6));
}

TEST_CASE("put-call parity", "[vanilla_transform]") {
    for (const ClockSpec& spec : {ClockSpec{R1}, ClockSpec{SquaredOuClock{0.6, 0.49, 0.42}},
                                  ClockSpec{MarkovSwitchingClock{{{-1.0, 1.0}, {2.0, -2.0}}, {0.05, 0.4}, {0.5, 0.5}}}}) {
        CosPricer p(spec, M, 1.0);
        for (double K : {80.0, 100.0, 125.0}) {
            const double c = p.price(K, OptionKind::Call), q = p.price(K, OptionKind::Put);
            CHECK_THAT(c - q, WithinAbs(M.discount(1.0) * (M.forward(1.0) - K), 1e-7));
        }
    }
}

TEST_CASE("implied vol round trip", "[vanilla_transform]") {
    VanillaQuote q{0.5, 110.0, OptionKind::Call};
    const double p = oracle::black(M.forward(0.5), 110.0, 0.25 * std::sqrt(0.5), M.discount(0.5), true);
    CHECK_THAT(implied_vol(p, M, q), WithinRel(0.25, 1e-9));
}

TEST_CASE("COS against Monte Carlo for the Markov clock", "[vanilla_transform][mc]") {
    const MarkovSwitchingClock m{{{-1.0, 1.0}, {2.0, -2.0}}, {0.05, 0.4}, {0.5, 0.5}};
    McConfig cfg;
    cfg.n_paths = 40000;
    cfg.steps_per_year = 100;
    const auto e = price_vanilla_mc(100.0, true, 1.0, M, m, cfg);
    CHECK(std::abs(e.price - cos_vanilla_price(m, M, {1.0, 100.0, OptionKind::Call})) < 4.0 * e.standard_error);
}

TEST_CASE("variance swap strike is the mean activity", "[vanilla_transform]") {
    CHECK_THAT(variance_swap_strike(R1, 2.0), WithinRel(oracle::cir_clock_mean(0.6, 0.2, 0.18, 2.0) / 2.0, 1e-12));
    // squared OU via the mapped CIR
    const SquaredOuClock o{0.6, 0.49, 0.42};
    const double k = 1.2, th = 0.49 * 0.49 / 1.2;
    CHECK_THAT(variance_swap_strike(o, 1.0), WithinRel(oracle::cir_clock_mean(k, th, 0.42 * 0.42, 1.0), 1e-12));
    // Markov: numeric integral of the occupation law
    const MarkovSwitchingClock m{{{-1.0, 1.0}, {2.0, -2.0}}, {0.05, 0.4}, {0.5, 0.5}};
    // two-state chain: P(state 1 at t) = pi1 + (p1 - pi1) e^{-3t}, pi1 = 2/3
    const double pi1 = 2.0 / 3.0, p1 = 0.5;
    const double occ1 = pi1 + (p1 - pi1) * (1.0 - std::exp(-3.0)) / 3.0;
    CHECK_THAT(variance_swap_strike(m, 1.0), WithinRel(0.05 * occ1 + 0.4 * (1.0 - occ1), 1e-10));
}

TEST_CASE("expected clock matches Monte Carlo", "[vanilla_transform][mc]") {
    McConfig cfg;
    cfg.n_paths = 20000;
    cfg.steps_per_year = 200;
    const auto e = mc_expected_clock(R1, 1.0, cfg);
    CHECK(std::abs(e.price - expected_clock(R1, 1.0)) < 4.0 * e.standard_error + 1e-4);
}
