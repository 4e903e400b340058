#include <catch_amalgamated.hpp>

#include <cmath>
#include <cstring>

#include "oracles.hpp"
#include "sclock/barrier.hpp"
#include "sclock/mc.hpp"

using namespace sclock;

namespace {
const MarketEnv M{100.0, 0.03, 0.0};
const CirClock R1{0.6, 0.20, 0.4, 0.18};

McConfig small(std::size_t paths = 20000, double steps = 260.0) {
    McConfig c;
    c.n_paths = paths;
    c.steps_per_year = steps;
    return c;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }
}  // namespace

TEST_CASE("fixed seed reproduces bit-identical estimates", "[mc_bench]") {
    auto cfg = small(10000);
    const auto c = make_doc(100.0, 70.0, 1.0);
    const auto a = price_barrier_mc_rho0(c, M, R1, cfg);
    const auto b = price_barrier_mc_rho0(c, M, R1, cfg);
    CHECK(same_bits(a.price, b.price));
    CHECK(same_bits(a.standard_error, b.standard_error));
    cfg.seed += 1;
    CHECK_FALSE(same_bits(price_barrier_mc_rho0(c, M, R1, cfg).price, a.price));
}

TEST_CASE("estimates do not depend on the thread count", "[mc_bench]") {
    auto cfg = small(12000);
    const auto c = make_uop(100.0, 130.0, 1.0);
    cfg.threads = 1;
    const auto a = price_barrier_mc_correlated_cv(c, M, R1, -0.5, cfg);
    cfg.threads = 3;
    const auto b = price_barrier_mc_correlated_cv(c, M, R1, -0.5, cfg);
    CHECK(same_bits(a.price, b.price));
    CHECK(same_bits(a.standard_error, b.standard_error));
}

TEST_CASE("independent-clock MC agrees with the analytic price", "[mc_bench]") {
    const auto cfg = small(20000);
    for (const auto& c : {make_doc(100.0, 70.0, 0.5), make_uop(100.0, 130.0, 0.5)}) {
        const auto e = price_barrier_mc_rho0(c, M, R1, cfg);
        const double a = price_barrier(c, M, laplace_of(R1, 0.5));
        CHECK(std::abs(e.price - a) < 3.5 * e.standard_error);
        CHECK(e.knockout_fraction > 0.0);
    }
}

TEST_CASE("bridge correction removes the monitoring bias", "[mc_bench]") {
    // deterministic clock: GBM with sigma = 0.3 on a coarse grid
    const CirClock det{1.0, 0.09, 1e-6, 0.09};
    auto cfg = small(40000, 12.0);
    const auto c = make_uop(100.0, 115.0, 1.0);
    const double ref = oracle::image_uop(M.forward(1.0), 100.0, 115.0, 0.3, M.discount(1.0));
    const auto with = price_barrier_mc_rho0(c, M, det, cfg);
    cfg.bridge = false;
    const auto without = price_barrier_mc_rho0(c, M, det, cfg);
    CHECK(std::abs(with.price - ref) < 3.5 * with.standard_error);
    CHECK(without.price - ref > 5.0 * without.standard_error);
}

TEST_CASE("correlated scheme at zero correlation matches the analytic price", "[mc_bench]") {
    const auto cfg = small(20000);
    const auto c = make_doc(100.0, 70.0, 0.5);
    const double a = price_barrier(c, M, laplace_of(R1, 0.5));
    const auto e = price_barrier_mc_correlated_cv(c, M, R1, 0.0, cfg);
    CHECK(std::abs(e.price - a) < 3.5 * e.standard_error);
}

TEST_CASE("control variate reduces the standard error", "[mc_bench]") {
    const auto cfg = small(10000);
    const auto c = make_doc(100.0, 70.0, 1.0);
    const auto plain = price_barrier_mc_correlated(c, M, R1, 0.5, cfg);
    const auto cv = price_barrier_mc_correlated_cv(c, M, R1, 0.5, cfg);
    CHECK(cv.standard_error < 0.8 * plain.standard_error);
    CHECK(std::abs(cv.price - plain.price) < 4.0 * plain.standard_error);
}

TEST_CASE("correlated vanilla matches Heston", "[mc_bench]") {
    McConfig cfg = small(40000, 260.0);
    MonitoredPayoff pay;
    pay.strike = 100.0;
    pay.maturity = 1.0;
    const double rho = -0.6;
    const auto e = price_monitored_mc_correlated_cv(pay, M, R1, rho, cfg);
    const double ref = oracle::heston_call(M.forward(1.0), 100.0, 1.0, M.discount(1.0), 0.6, 0.2, 0.4, 0.18, rho);
    CHECK(std::abs(e.price - ref) < 4.0 * e.standard_error);
}

TEST_CASE("leverage shift at zero correlation is exactly zero", "[mc_bench]") {
    const auto e = leverage_shift_mc(make_doc(100.0, 70.0, 1.0), M, R1, 0.0, small(5000));
    CHECK(e.price == 0.0);
    CHECK(e.standard_error == 0.0);
}

TEST_CASE("invalid Monte Carlo inputs", "[mc_bench]") {
    CHECK_THROWS_AS(price_barrier_mc_correlated_cv(make_doc(100.0, 70.0, 1.0), M, R1, 1.5, small(100)), DomainError);
    CHECK_THROWS_AS(price_barrier_mc_rho0(make_doc(100.0, 110.0, 1.0), M, R1, small(100)), KnockedOutError);
    McConfig bad;
    bad.n_paths = 0;
    CHECK_THROWS_AS(bad.validate(), DomainError);
}
