#include <catch_amalgamated.hpp>

#include <cmath>

#include "sclock/calibrator.hpp"

using namespace sclock;
using namespace sclock::calib;
using Catch::Matchers::WithinRel;
using Catch::Matchers::WithinAbs;

namespace {
const MarketEnv M{100.0, 0.03, 0.0};
const CirClock R1{0.6, 0.20, 0.4, 0.18};

std::vector<double> flatten(const ClockSpec& s) {
    return std::visit(
        [](const auto& c) -> std::vector<double> {
            using C = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<C, CirClock>) return {c.kappa, c.theta, c.xi, c.v0};
            else if constexpr (std::is_same_v<C, TwoFactorCirClock>)
                return {c.fast.kappa, c.fast.theta, c.fast.xi, c.fast.v0, c.slow.kappa, c.slow.theta, c.slow.xi, c.slow.v0};
            else if constexpr (std::is_same_v<C, SquaredOuClock>) return {c.alpha, c.sigma, c.y0};
            else if constexpr (std::is_same_v<C, MarkovSwitchingClock>) {
                std::vector<double> v = c.levels;
                for (const auto& r : c.generator) v.insert(v.end(), r.begin(), r.end());
                return v;
            } else return {};
        },
        s);
}

void require_same(const ClockSpec& a, const ClockSpec& b, double tol) {
    REQUIRE(a.index() == b.index());
    const auto x = flatten(a), y = flatten(b);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK_THAT(x[i], WithinAbs(y[i], tol * std::max(1.0, std::abs(y[i]))));
}

std::vector<VarSwapQuote> curve_of(const ClockSpec& s, std::vector<double> mats) {
    std::vector<VarSwapQuote> out;
    for (double T : mats) out.push_back({T, variance_swap_strike(s, T), 1.0});
    return out;
}

CalibrationDataset vanilla_set(const ClockSpec& truth) {
    SyntheticSpec s;
    s.maturities = {0.25, 1.0};
    s.strikes = {85.0, 100.0, 115.0};
    return synthetic_dataset(truth, M, s);
}
}  // namespace

TEST_CASE("reparameterisations round-trip", "[calibrator]") {
    const std::vector<ClockSpec> specs{
        R1, SquaredOuClock{0.6, 0.49, -0.42},
        MarkovSwitchingClock{{{-1.5, 1.0, 0.5}, {2.0, -2.0, 0.0}, {0.3, 0.7, -1.0}}, {0.05, 0.2, 0.6}, {0.2, 0.5, 0.3}}};
    for (const auto& s : specs) require_same(from_unconstrained(s, to_unconstrained(s)), s, 1e-12);
    const std::vector<double> z{std::log(0.05), std::log(0.06), 0.3, std::log(0.2), std::log(3.0), std::log(0.3), std::log(0.2)};
    const ClockSpec shape = TwoFactorCirClock{{4.0, 0.03, 0.3, 0.03}, {0.3, 0.03, 0.3, 0.03}};
    const auto s = from_unconstrained(shape, z);
    const auto z2 = to_unconstrained(s);
    for (std::size_t i = 0; i < z.size(); ++i) CHECK_THAT(z2[i], WithinAbs(z[i], 1e-12));
    const auto& tf = std::get<TwoFactorCirClock>(s);
    CHECK(tf.fast.kappa > tf.slow.kappa);
}

TEST_CASE("two-factor share respects its bounds", "[calibrator]") {
    const ClockSpec shape = TwoFactorCirClock{{4.0, 0.03, 0.3, 0.03}, {0.3, 0.03, 0.3, 0.03}};
    for (double g : {-40.0, 0.0, 40.0}) {
        const auto& tf = std::get<TwoFactorCirClock>(from_unconstrained(shape, {-3.0, -3.0, g, -1.0, 1.0, -1.0, -1.0}));
        const double a = tf.fast.theta / (tf.fast.theta + tf.slow.theta);
        CHECK(a >= 0.2 - 1e-12);
        CHECK(a <= 0.8 + 1e-12);
    }
}

TEST_CASE("CIR initializer recovers the generating curve", "[calibrator]") {
    const auto s = init_cir_from_varswaps(curve_of(R1, {0.1, 0.25, 0.5, 1.0, 2.0, 5.0, 10.0}));
    CHECK_THAT(s.v0, WithinRel(0.18, 0.01));
    CHECK_THAT(s.theta, WithinRel(0.20, 0.01));
    CHECK_THAT(s.kappa, WithinRel(0.6, 0.01));
    CHECK_FALSE(s.flat_curve);
}

TEST_CASE("flat variance-swap curve", "[calibrator]") {
    const auto s = init_cir_from_varswaps({{0.5, 0.04, 1.0}, {1.0, 0.04, 1.0}, {2.0, 0.04, 1.0}});
    CHECK(s.flat_curve);
    CHECK(s.kappa == 1.0);
    CHECK_THAT(s.v0, WithinRel(0.04, 1e-12));
    CHECK_THAT(s.theta, WithinRel(0.04, 1e-12));
}

TEST_CASE("CIR initializer input errors", "[calibrator]") {
    CHECK_THROWS_AS(init_cir_from_varswaps({{0.5, 0.04, 1.0}, {1.0, 0.05, 1.0}}), DomainError);
    CHECK_THROWS_AS(init_cir_from_varswaps({{0.5, 0.04, 1.0}, {1.0, -0.05, 1.0}, {2.0, 0.05, 1.0}}), DomainError);
}

TEST_CASE("two-factor grid nests a single factor", "[calibrator]") {
    const CirClock one{2.0, 0.05, 0.3, 0.12};
    std::vector<VixQuote> vix;
    for (double t : {0.0, 0.5, 1.0}) {
        const double m = variance_swap_strike(one, t + 30.0 / 365.0) * (t + 30.0 / 365.0) -
                         (t > 0.0 ? variance_swap_strike(one, t) * t : 0.0);
        vix.push_back({t, 30.0 / 365.0, m / (30.0 / 365.0), 1.0});
    }
    const auto s = init_two_factor_grid(curve_of(one, {0.1, 0.25, 0.5, 1.0, 2.0, 5.0}), vix);
    CHECK((s.alpha_fast > 0.95 || s.alpha_fast < 0.05));
    CHECK(s.weight >= 0.2);
    CHECK(s.weight <= 0.8);
    CHECK(s.weight_clamped);
}

TEST_CASE("two-factor grid finds the generating pair", "[calibrator]") {
    const TwoFactorCirClock truth{{4.0, 0.08, 0.3, 0.15}, {0.3, 0.06, 0.2, 0.04}};
    const auto s = init_two_factor_grid(curve_of(truth, {0.05, 0.1, 0.25, 0.5, 1.0, 2.0, 3.0, 5.0, 10.0}), {});
    auto index_of = [](const std::vector<double>& g, double v) {
        return std::distance(g.begin(), std::min_element(g.begin(), g.end(), [&](double a, double b) {
                                 return std::abs(std::log(a / v)) < std::abs(std::log(b / v));
                             }));
    };
    CHECK(std::abs(index_of(kappa_fast_grid(), s.kappa_fast) - index_of(kappa_fast_grid(), 4.0)) <= 1);
    CHECK(std::abs(index_of(kappa_slow_grid(), s.kappa_slow) - index_of(kappa_slow_grid(), 0.3)) <= 1);
    CHECK(s.weight >= 0.2);
    CHECK(s.weight <= 0.8);
    CHECK_THROWS_AS(init_two_factor_grid(curve_of(truth, {0.5, 1.0, 2.0}), {}), DomainError);
}

TEST_CASE("objective at the generating parameters", "[calibrator]") {
    auto d = vanilla_set(R1);
    d.barriers.push_back({make_doc(100.0, 80.0, 1.0), price_barrier(make_doc(100.0, 80.0, 1.0), M, laplace_of(R1, 1.0)), 1.0, 0.0});
    const double at = objective_eval(R1, d, 0.0);
    CHECK(at < 1e-14);
    const CirClock bumped{R1.kappa, R1.theta * 1.1, R1.xi, R1.v0};
    CHECK(objective_eval(bumped, d, 0.0) > at);
    ObjectiveConfig price_space;
    price_space.space = ObjectiveSpace::Price;
    CHECK(objective_eval(R1, d, 0.0, price_space) < 1e-12);
}

TEST_CASE("zero-weight quotes do not move the objective", "[calibrator]") {
    auto d = vanilla_set(R1);
    const CirClock off{0.9, 0.25, 0.5, 0.15};
    const double base = objective_eval(off, d, 0.0);
    VanillaQuote junk{0.5, 95.0, OptionKind::Call, 10.0, 0.0, 0.0};
    d.vanillas.push_back(junk);
    d.barriers.push_back({make_uop(100.0, 120.0, 0.5), 0.1, 0.0, 0.0});
    CHECK(objective_eval(off, d, 0.0) == base);
}

TEST_CASE("rho fit recovers the generating correlation", "[calibrator][slow]") {
    const auto ec = PipelineConfig::default_expansion();
    const auto a = leverage::compute_expansion(make_doc(100.0, 80.0, 1.0), M, R1, ec);
    const auto b = leverage::compute_expansion(make_uop(100.0, 120.0, 1.0), M, R1, ec);
    std::vector<RhoQuote> q{{&a, leverage::evaluate_with_fallback(a.values, -0.5).value, 1.0, 0.0},
                            {&b, leverage::evaluate_with_fallback(b.values, -0.5).value, 1.0, 0.0}};
    const auto f = fit_rho_cached(q);
    CHECK_THAT(f.rho, WithinAbs(-0.5, 0.02));
    CHECK(f.routes.size() == 2);

    // monotone single quote: compare against direct inversion by bisection
    const double target = leverage::evaluate_with_fallback(a.values, 0.37).value;
    double lo = -0.99, hi = 0.99;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (leverage::evaluate_with_fallback(a.values, mid).value < target ? lo : hi) = mid;
    }
    const auto single = fit_rho_cached({{&a, target, 1.0, 0.0}});
    CHECK_THAT(single.rho, WithinAbs(0.5 * (lo + hi), 1e-6));

    // uniform weight rescaling leaves the argmin unchanged
    std::vector<RhoQuote> mixed{{&a, a.values[0] + 0.1, 1.0, 0.0}, {&b, b.values[0] - 0.05, 2.0, 0.0}};
    const double r1 = fit_rho_cached(mixed).rho;
    for (auto& m : mixed) m.weight *= 7.3;
    CHECK_THAT(fit_rho_cached(mixed).rho, WithinAbs(r1, 1e-9));
}

TEST_CASE("rho fit needs quotes", "[calibrator]") {
    CHECK_THROWS_AS(fit_rho_cached({}), DomainError);
}

TEST_CASE("vanilla-only data stops after stage 1", "[calibrator]") {
    const auto d = vanilla_set(R1);
    const auto r = run_stage_pipeline(d, "cir");
    REQUIRE(r.stages.size() == 5);
    for (int s = 2; s <= 4; ++s) CHECK(r.stages[static_cast<std::size_t>(s)].skipped);
    CHECK_THAT(r.objective, WithinRel(r.stages[1].objective, 1e-12));
    CHECK(r.rho == 0.0);

    auto with_zero = d;
    with_zero.barriers.push_back({make_doc(100.0, 80.0, 1.0), 14.0, 0.0, 0.0});
    const auto z = run_stage_pipeline(with_zero, "cir");
    require_same(z.spec, r.spec, 0.0);
    CHECK(z.objective == r.objective);
}

TEST_CASE("stage 1 and 2 recover the generating clock", "[calibrator][slow]") {
    SyntheticSpec s;
    s.barriers = {make_doc(100.0, 80.0, 1.0), make_uop(100.0, 120.0, 1.0)};
    const auto d = synthetic_dataset(R1, M, s);
    PipelineConfig cfg;
    cfg.stages = "12";
    const auto r = run_stage_pipeline(d, "cir", cfg);
    const auto& c = std::get<CirClock>(r.spec);
    CHECK_THAT(c.v0, WithinRel(R1.v0, 0.02));
    CHECK_THAT(c.theta, WithinRel(R1.theta, 0.02));
    CHECK_THAT(c.kappa, WithinRel(R1.kappa, 0.10));
    CHECK_THAT(c.xi, WithinRel(R1.xi, 0.10));
    double prev = r.stages[0].objective;
    for (const auto& st : r.stages)
        if (st.accepted && !st.skipped) {
            CHECK(st.objective <= prev);
            prev = st.objective;
        }
}

TEST_CASE("discrete monitoring shifts barriers away from spot", "[calibrator]") {
    auto d = vanilla_set(R1);
    d.barriers.push_back({make_uop(100.0, 120.0, 1.0), 5.0, 1.0, 1.0 / 252.0});
    d.barriers.push_back({make_doc(100.0, 80.0, 1.0), 14.0, 1.0, 1.0 / 252.0});
    std::vector<std::string> flags;
    const auto out = apply_discrete_monitoring_correction(d, &flags);
    const double sigma = d.vanillas[4].implied_vol;  // T = 1, K = 100
    const double shift = std::exp(kBgkBeta * sigma * std::sqrt(1.0 / 252.0));
    CHECK_THAT(out.barriers[0].contract.upper_barrier, WithinRel(120.0 * shift, 1e-12));
    CHECK_THAT(out.barriers[1].contract.lower_barrier, WithinRel(80.0 / shift, 1e-12));
    CHECK(flags.size() == 2);
}

TEST_CASE("other families run through stage 1", "[calibrator][slow]") {
    const auto d = vanilla_set(R1);
    for (const char* fam : {"sqou", "cir2", "markov"}) {
        const auto r = run_stage_pipeline(d, fam);
        CHECK(r.objective <= r.stages[0].objective);
        CHECK(std::string(family_name(r.spec)) == fam);
    }
    CHECK_THROWS_AS(run_stage_pipeline(d, "heston"), DomainError);
}
