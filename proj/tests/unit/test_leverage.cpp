#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "sclock/leverage/expansion.hpp"
#include "sclock/leverage/pade.hpp"

using namespace sclock;
using namespace sclock::leverage;
using Catch::Matchers::WithinRel;
using Catch::Matchers::WithinAbs;

namespace {
const MarketEnv M{100.0, 0.03, 0.0};
const CirClock R1{0.6, 0.20, 0.4, 0.18};

ExpansionConfig pde_only(std::size_t order) {
    ExpansionConfig e;
    e.order = order;
    e.first_order_route = CoefficientRoute::ForcedPde;
    e.estimate_discretization = false;
    e.pde.solve_baseline = false;
    return e;
}

double heston(double rho) {
    return oracle::heston_call(M.forward(1.0), 100.0, 1.0, M.discount(1.0), R1.kappa, R1.theta, R1.xi, R1.v0, rho);
}
}  // namespace

TEST_CASE("Taylor partial sums and Horner value", "[leverage_layer]") {
    const std::vector<double> c{1.0, 2.0, -3.0, 0.5};
    const auto t = taylor_eval(c, 0.5);
    REQUIRE(t.partial_sums.size() == 4);
    CHECK_THAT(t.partial_sums[1], WithinAbs(2.0, 1e-15));
    CHECK_THAT(t.partial_sums[2], WithinAbs(1.25, 1e-15));
    CHECK_THAT(t.value, WithinAbs(1.3125, 1e-15));
    CHECK_THROWS_AS(taylor_eval(c, 1.2), DomainError);
}

TEST_CASE("Pade reproduces a rational function exactly", "[leverage_layer]") {
    // (1 + r) / (1 - 0.4 r)
    std::vector<double> c{1.0};
    for (int n = 1; n <= 5; ++n) c.push_back(1.4 * std::pow(0.4, n - 1));
    const auto p = pade_fit(c, 1, 1);
    CHECK_THAT(p(0.7), WithinRel(1.7 / (1.0 - 0.28), 1e-12));
    REQUIRE(p.poles.size() == 1);
    CHECK_THAT(p.poles[0].real(), WithinRel(2.5, 1e-12));
    CHECK_THAT(p.pole_proximity, WithinRel(1.5, 1e-12));
}

TEST_CASE("Pade re-expansion matches its inputs", "[leverage_layer]") {
    const std::vector<double> c{17.04504, 0.71468, 0.24691, 0.04881, 0.04179, 0.01164};
    for (auto [L, Mm] : {std::pair<std::size_t, std::size_t>{2, 2}, {3, 2}, {2, 3}, {1, 1}}) {
        const auto p = pade_fit(c, L, Mm);
        const auto t = p.taylor(L + Mm);
        for (std::size_t k = 0; k <= L + Mm; ++k) CHECK_THAT(t[k], WithinAbs(c[k], 1e-10));
    }
}

TEST_CASE("Pade needs enough coefficients", "[leverage_layer]") {
    CHECK_THROWS_AS(pade_fit({1.0, 2.0, 3.0}, 2, 2), DomainError);
}

TEST_CASE("fallback rejects poles on the correlation segment", "[leverage_layer]") {
    // 1 / (1 - 2 r) has its pole at 0.5
    std::vector<double> c;
    for (int n = 0; n <= 5; ++n) c.push_back(std::pow(2.0, n) * 1e-3 + (n == 0 ? 1.0 : 0.0));
    const auto r = evaluate_with_fallback(c, 0.3);
    CHECK_FALSE(r.rejected.empty());
    CHECK(r.route.rfind("pade", 0) != 0);
    CHECK(evaluate_with_fallback(c, 0.0).value == c[0]);
}

TEST_CASE("baseline coefficient is the analytic price", "[leverage_layer]") {
    const auto c = make_doc(100.0, 70.0, 1.0);
    CHECK(baseline_price(c, M, R1) == price_barrier(c, M, laplace_of(R1, 1.0)));
}

TEST_CASE("far barrier reproduces the Heston correlation sensitivities", "[leverage_layer][slow]") {
    // DOC with L = 5 is a vanilla call for practical purposes. The far barrier stretches
    // the x grid, so C2 needs a finer mesh than the default.
    auto cfg = pde_only(2);
    cfg.pde.nx = 401;
    cfg.pde.ny = 161;
    const auto e = compute_expansion(make_doc(100.0, 5.0, 1.0), M, R1, cfg);
    const double h = 1e-3;
    const double c1 = (heston(h) - heston(-h)) / (2 * h);
    const double c2 = (heston(h) - 2 * heston(0.0) + heston(-h)) / (2 * h * h);
    CHECK_THAT(e.values[0], WithinRel(heston(0.0), 1e-6));
    CHECK_THAT(e.values[1], WithinRel(c1, 0.02));
    CHECK_THAT(e.values[2], WithinRel(c2, 0.10));
}

TEST_CASE("Duhamel and forced-PDE first-order coefficients agree", "[leverage_layer][slow]") {
    const auto c = make_doc(100.0, 70.0, 1.0);
    DuhamelConfig dc;
    dc.mc.n_paths = 20000;
    const auto d = duhamel_coefficient_1(c, M, R1, dc);
    const auto p = compute_expansion(c, M, R1, pde_only(1));
    CHECK(d.standard_error > 0.0);
    CHECK(std::abs(d.value - p.values[1]) < 4.0 * d.standard_error + 0.01);
}

TEST_CASE("vanishing coupling gives a vanishing first-order coefficient", "[leverage_layer]") {
    const CirClock quiet{0.6, 0.20, 1e-8, 0.18};
    const auto e = compute_expansion(make_doc(100.0, 70.0, 1.0), M, quiet, pde_only(1));
    CHECK(std::abs(e.values[1]) < 1e-6);
}

TEST_CASE("mixed derivative of the baseline matches finite differences", "[leverage_layer]") {
    const auto c = make_doc(100.0, 70.0, 1.0);
    numerics::QuadratureConfig tight;
    tight.rel_tol = 1e-13;
    tight.abs_tol = 1e-15;
    auto u0 = [&](double t, double x, double y) { return baseline_u0(t, x, y, c, M, R1, tight); };
    auto fd = [&](double t, double x, double y, double h, double k) {
        return (u0(t, x + h, y + k) - u0(t, x + h, y - k) - u0(t, x - h, y + k) + u0(t, x - h, y - k)) / (4 * h * k);
    };
    for (auto [t, x, y] : {std::tuple{0.0, std::log(103.0), 0.18}, std::tuple{0.4, std::log(90.0), 0.3}}) {
        const double h = 0.02, k = 0.02;
        const double rich = (4.0 * fd(t, x, y, h / 2, k / 2) - fd(t, x, y, h, k)) / 3.0;
        const double analytic = forcing_mixed_derivative(t, x, y, c, M, R1, tight) / coupling(R1, y);
        CHECK_THAT(analytic, WithinRel(rich, 1e-4));
    }
}

TEST_CASE("leverage layer domain checks", "[leverage_layer]") {
    const MarkovSwitchingClock m{{{-1.0, 1.0}, {1.0, -1.0}}, {0.1, 0.3}, {0.5, 0.5}};
    CHECK_THROWS_AS(compute_expansion(make_doc(100.0, 70.0, 1.0), M, m, pde_only(1)), UnsupportedFamilyError);
    CHECK_THROWS_AS(compute_expansion(make_doc(60.0, 70.0, 1.0), M, R1, pde_only(1)), DomainError);
    CHECK_THROWS_AS(forcing_mixed_derivative(0.0, std::log(70.0), 0.18, make_doc(100.0, 70.0, 1.0), M, R1), DomainError);
}

TEST_CASE("Pade of fixed coefficients matches a direct linear solve", "[leverage_layer]") {
    // reference from an independent dense solve of the Pade equations
    const std::vector<double> c{6.4521, 1.6468, -0.4123, 0.2845, -0.1523, 0.0892};
    const auto p22 = pade_fit(c, 2, 2);
    REQUIRE(p22.poles.size() == 2);
    std::vector<double> re{p22.poles[0].real(), p22.poles[1].real()};
    std::sort(re.begin(), re.end());
    CHECK_THAT(re[0], WithinRel(-1.79704321, 1e-8));
    CHECK_THAT(re[1], WithinRel(9.15410411, 1e-8));
    CHECK(std::abs(p22.poles[0].imag()) < 1e-12);
    CHECK_THAT(p22(-0.9), WithinRel(4.227731301280363, 1e-12));
    CHECK_THAT(p22(0.9), WithinRel(7.741364739159096, 1e-12));
    const auto p32 = pade_fit(c, 3, 2);
    CHECK_THAT(p32(-0.7), WithinRel(4.9382522943997245, 1e-12));
    CHECK_THAT(p32(0.5), WithinRel(7.200642949560238, 1e-12));
}
