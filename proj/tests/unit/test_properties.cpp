#include <catch_amalgamated.hpp>

#include <cmath>
#include <cstring>
#include <random>

#include "sclock/barrier.hpp"
#include "sclock/clock_transforms.hpp"
#include "sclock/mc.hpp"
#include "sclock/vanilla.hpp"

using namespace sclock;

namespace {
const MarketEnv M{100.0, 0.03, 0.0};

// random admissible clocks of every family
std::vector<ClockSpec> sample_clocks(std::uint64_t seed, int n) {
    std::mt19937_64 g(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<ClockSpec> out;
    for (int i = 0; i < n; ++i) {
        const double k = 0.2 + 4.0 * u(g), th = 0.01 + 0.3 * u(g), xi = 0.05 + 0.8 * u(g), v0 = 0.01 + 0.3 * u(g);
        out.push_back(CirClock{k, th, xi, v0});
        out.push_back(SquaredOuClock{0.1 + 2.0 * u(g), 0.05 + 0.6 * u(g), -0.6 + 1.2 * u(g)});
        const double a = 0.2 + 2.0 * u(g), b = 0.2 + 2.0 * u(g);
        out.push_back(MarkovSwitchingClock{{{-a, a}, {b, -b}}, {0.01 + 0.1 * u(g), 0.1 + 0.4 * u(g)}, {0.5, 0.5}});
        out.push_back(TwoFactorCirClock{{k + 1.0, 0.5 * th, xi, 0.5 * v0}, {0.5 * k, 0.5 * th, 0.5 * xi, 0.5 * v0}});
    }
    return out;
}
}  // namespace

TEST_CASE("transform equals one at zero", "[property]") {
    for (const auto& s : sample_clocks(11, 10))
        for (double T : {0.1, 1.0, 3.0}) CHECK(std::abs(phi(s, T, 0.0) - 1.0) < 1e-12);
}

TEST_CASE("transform is decreasing and log-convex", "[property]") {
    for (const auto& s : sample_clocks(12, 10)) {
        const double T = 1.5;
        double prev = 1.0;
        std::vector<double> lp;
        for (double l = 0.25; l <= 40.0; l *= 1.5) {
            const double v = phi(s, T, l);
            CHECK(v > 0.0);
            CHECK(v <= prev * (1.0 + 1e-12));
            prev = v;
        }
        // second difference of log phi on an even grid
        const double h = 0.5;
        for (double l = h; l <= 20.0; l += h) {
            const double d2 = std::log(phi(s, T, l + h)) - 2.0 * std::log(phi(s, T, l)) + std::log(phi(s, T, l - h));
            CHECK(d2 >= -1e-10);
        }
    }
}

TEST_CASE("barrier prices are nonnegative and below the vanilla", "[property]") {
    std::mt19937_64 g(13);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (const auto& s : sample_clocks(14, 4)) {
        for (int i = 0; i < 4; ++i) {
            const double T = 0.25 + 2.0 * u(g), K = 70.0 + 60.0 * u(g);
            const double F = M.forward(T);
            const double H = F * (1.05 + 0.5 * u(g)), L = F * (0.5 + 0.45 * u(g));
            const auto phiT = laplace_of(s, T);
            CosPricer cos(s, M, T);
            const double put = cos.price(K, OptionKind::Put), call = cos.price(K, OptionKind::Call);
            const double uop = price_barrier(make_uop(K, H, T), M, phiT);
            const double doc = price_barrier(make_doc(K, L, T), M, phiT);
            CHECK(uop >= -1e-10);
            CHECK(doc >= -1e-10);
            CHECK(uop <= put + 1e-8);
            CHECK(doc <= call + 1e-8);
            const double dko = price_dko(make_dko(true, K, L, H, T), M, s).price;
            CHECK(dko >= -1e-10);
            CHECK(dko <= doc + 1e-8);
        }
    }
}

TEST_CASE("Monte Carlo is a pure function of its seed", "[property]") {
    McConfig cfg;
    cfg.n_paths = 4000;
    cfg.steps_per_year = 100;
    for (const auto& s : sample_clocks(15, 1)) {
        const auto c = make_doc(100.0, 80.0, 1.0);
        const auto a = price_barrier_mc_rho0(c, M, s, cfg), b = price_barrier_mc_rho0(c, M, s, cfg);
        CHECK(std::memcmp(&a.price, &b.price, sizeof(double)) == 0);
        CHECK(std::memcmp(&a.standard_error, &b.standard_error, sizeof(double)) == 0);
    }
}
