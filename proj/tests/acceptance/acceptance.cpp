// Acceptance run: one PASS/FAIL line per criterion on stdout, details on stderr.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "../unit/oracles.hpp"
#include "sclock.hpp"

using namespace sclock;

namespace {

using Clock = std::chrono::steady_clock;
double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void report(int id, bool ok, const std::string& detail) {
    std::printf("criterion %d: %s  %s\n", id, ok ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
    char buf[200];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

const MarketEnv M = repro::market();

std::vector<std::string> price_ids() { return {"6.2", "6.3", "6.4", "6.5", "6.6", "6.7"}; }

void golden_prices() {
    bool ok = true;
    double worst = 0.0, slowest = 0.0;
    for (const auto& id : price_ids()) {
        const auto rows = repro::paper_prices(id);
        const auto cases = repro::price_cases(id);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto& pc = cases[i];
            const auto t0 = Clock::now();
            const double a = price_barrier(pc.contract, M, laplace_of(pc.spec, pc.contract.maturity));
            const double dt = since(t0);
            const double diff = std::abs(a - rows[i].semi);
            std::fprintf(stderr, "  table %s T=%g: ours %.6f paper %.4f diff %.4f (%.3f s)\n", id.c_str(), rows[i].T, a,
                         rows[i].semi, diff, dt);
            ok = ok && diff <= pc.paper_tol && dt < 1.0;
            worst = std::max(worst, diff);
            slowest = std::max(slowest, dt);
        }
    }
    report(1, ok, fmt("max |ours - paper| = %.4f, slowest price %.3f s", worst, slowest));
}

void desk_mc() {
    bool ok = true;
    double worst_z = 0.0, slowest = 0.0;
    const auto cfg = repro::mc_for(repro::Scale::Desk);
    for (const auto& id : price_ids())
        for (const auto& pc : repro::price_cases(id)) {
            const double a = price_barrier(pc.contract, M, laplace_of(pc.spec, pc.contract.maturity));
            const auto t0 = Clock::now();
            const auto e = price_barrier_mc_rho0(pc.contract, M, pc.spec, cfg);
            const double dt = since(t0);
            const double z = std::abs(e.price - a) / e.standard_error;
            std::fprintf(stderr, "  table %s T=%g: analytic %.5f mc %.5f se %.5f z %.2f (%.1f s)\n", id.c_str(),
                         pc.contract.maturity, a, e.price, e.standard_error, z, dt);
            ok = ok && z <= 3.0 && dt < 60.0;
            worst_z = std::max(worst_z, z);
            slowest = std::max(slowest, dt);
        }
    report(2, ok, fmt("12 configurations, max |z| = %.2f, slowest %.1f s", worst_z, slowest));
}

void deterministic_clock() {
    bool ok = true;
    double worst = 0.0;
    int n = 0;
    const double sigma = 0.25;
    for (double T : {0.5, 1.0})
        for (double H : {115.0, 140.0})
            for (double K : {80.0, 90.0, 100.0, 110.0, 120.0}) {
                const double F = M.forward(T), P = M.discount(T), s = sigma * std::sqrt(T), L = 1e4 / H;
                const oracle::DeterministicClock phi{s * s};
                const double u = price_uop(make_uop(K, H, T), M, phi), ru = oracle::image_uop(F, K, H, s, P);
                const double d = price_doc(make_doc(K, L, T), M, phi), rd = oracle::image_doc(F, K, L, s, P);
                const double e = std::max(std::abs(u / ru - 1.0), std::abs(d / rd - 1.0));
                worst = std::max(worst, e);
                ok = ok && e <= 1e-6;
                ++n;
            }
    report(3, ok, fmt("%g (K, H, T) combinations, UOP and DOC, max rel err %.2e", n, worst));
}

void barrier_removal() {
    bool ok = true;
    double worst = 0.0;
    for (int r : {1, 2})
        for (double T : {0.25, 1.0}) {
            const auto spec = repro::cir_regime(r);
            CosPricer cos(spec, M, T);
            const double uop = price_barrier(make_uop(100.0, 1000.0, T), M, laplace_of(spec, T));
            const double doc = price_barrier(make_doc(100.0, 10.0, T), M, laplace_of(spec, T));
            const double eu = std::abs(uop / cos.price(100.0, OptionKind::Put) - 1.0);
            const double ed = std::abs(doc / cos.price(100.0, OptionKind::Call) - 1.0);
            worst = std::max({worst, eu, ed});
            ok = ok && eu <= 1e-3 && ed <= 1e-3;
        }
    report(4, ok, fmt("H = 10 S0 and L = S0/10, both regimes, max rel err %.2e", worst));
}

// Corridor MC for a driftless forward with constant volatility; the two-sided
// bridge survival weight is applied per step.
struct CorridorMc {
    double price, se;
};

CorridorMc corridor_mc(double F, double K, double L, double H, double sigma, double T, double P, std::size_t paths) {
    const int steps = 250;
    const double dt = T / steps, sd = sigma * std::sqrt(dt), var = sigma * sigma * dt;
    const double lo = std::log(L), hi = std::log(H);
    std::mt19937_64 g(7);
    std::normal_distribution<double> n01;
    double sum = 0.0, sum2 = 0.0;
    for (std::size_t p = 0; p < paths; ++p) {
        double x = std::log(F), w = 1.0;
        for (int i = 0; i < steps && w > 0.0; ++i) {
            const double y = x - 0.5 * var + sd * n01(g);
            if (y <= lo || y >= hi) {
                w = 0.0;
                break;
            }
            const double cross = std::exp(-2.0 * (x - lo) * (y - lo) / var) + std::exp(-2.0 * (hi - x) * (hi - y) / var);
            w *= std::max(0.0, 1.0 - cross);
            x = y;
        }
        const double v = w > 0.0 ? P * w * std::max(std::exp(x) - K, 0.0) : 0.0;
        sum += v;
        sum2 += v * v;
    }
    const double mean = sum / paths;
    return {mean, std::sqrt((sum2 / paths - mean * mean) / (paths - 1))};
}

void double_barrier() {
    const auto spec = repro::cir_regime(1);
    const auto c = make_dko(true, 100.0, 70.0, 130.0, 1.0);
    DkoConfig a, b;
    a.n_max = 400;
    b.n_max = 800;
    const double da = std::abs(price_dko(c, M, spec, a).price - price_dko(c, M, spec, b).price);
    bool zeros = true;
    for (double K : {130.0, 140.0, 200.0}) zeros = zeros && price_dko(make_dko(true, K, 70.0, 130.0, 1.0), M, spec).price == 0.0;
    for (double K : {50.0, 70.0}) zeros = zeros && price_dko(make_dko(false, K, 70.0, 130.0, 1.0), M, spec).price == 0.0;

    const double sigma = 0.25, T = 1.0, K = 100.0, L = 80.0, H = 130.0;
    const oracle::DeterministicClock phi{sigma * sigma * T};
    const double an = price_dko_with(make_dko(true, K, L, H, T), M, phi).price;
    const auto mc = corridor_mc(M.forward(T), K, L, H, sigma, T, M.discount(T), 1000000);
    const double z = std::abs(an - mc.price) / mc.se;
    std::fprintf(stderr, "  DKO deterministic clock: analytic %.6f corridor mc %.6f se %.6f\n", an, mc.price, mc.se);
    report(5, da <= 1e-8 && zeros && z <= 3.0,
           fmt("truncation doubling diff %.1e, corridor MC |z| = %.2f", da, z) +
               (zeros ? ", knocked-out geometries exactly 0" : ", knocked-out geometry priced nonzero"));
}

void first_order() {
    const auto c = repro::leverage_contract();
    const auto spec = repro::leverage_clock();
    const auto cfg = repro::expansion_for(repro::Scale::Desk, 1).duhamel;
    const auto c1 = leverage::duhamel_coefficient_1(c, M, spec, cfg);
    const double paper = repro::paper_coefficients()[1];
    const bool c1_ok = std::abs(c1.value - paper) <= 0.05 * std::abs(paper);
    const double v0 = leverage::baseline_price(c, M, spec);
    const double first = v0 - 0.3 * c1.value;
    const auto mc = repro::leverage_benchmark(-0.3, repro::Scale::Desk);
    const double rel = 100.0 * (first - mc.price) / mc.price;
    std::fprintf(stderr, "  C1 = %.5f +- %.5f (paper %.4f); V(-0.3) first order %.5f, mc %.5f +- %.5f\n", c1.value,
                 c1.standard_error, paper, first, mc.price, mc.standard_error);
    report(6, c1_ok && std::abs(rel) <= 0.5,
           fmt("C1 = %.4f vs 1.6468 (%.0f%% off); first order at rho = -0.3 off MC by %.3f%%", c1.value,
               100.0 * (c1.value / paper - 1.0), rel));
}

void pade_golden() {
    const auto& c = repro::paper_coefficients();
    const auto p22 = leverage::pade_fit(c, 2, 2);
    const auto p32 = leverage::pade_fit(c, 3, 2);
    double reexp = 0.0;
    for (const auto* p : {&p22, &p32}) {
        const auto t = p->taylor(p->L + p->M);
        for (std::size_t k = 0; k < t.size(); ++k) reexp = std::max(reexp, std::abs(t[k] - c[k]));
    }
    double min_im = 1e300;
    for (const auto& z : p22.poles) min_im = std::min(min_im, std::abs(z.imag()));
    double worst = 0.0;
    for (const auto& row : repro::paper_pade_rows()) {
        const double rho = row[0];
        if (!(rho == -0.9 || rho == -0.7 || rho == 0.5 || rho == 0.9)) continue;
        std::fprintf(stderr, "  rho %+.1f: [2/2] %.4f (paper %.4f), [3/2] %.4f (paper %.4f)\n", rho, p22(rho), row[3], p32(rho),
                     row[4]);
        worst = std::max({worst, std::abs(p22(rho) - row[3]), std::abs(p32(rho) - row[4])});
    }
    report(7, reexp <= 1e-10 && min_im > 4.0 && worst <= 0.02,
           fmt("re-expansion err %.1e, min |Im pole| [2/2] %.3f, max table diff %.4f", reexp, min_im, worst));
}

void pade_vs_mc() {
    const auto e = repro::study_coefficients(repro::Scale::Desk);
    bool ok = true;
    std::string detail;
    for (double rho : {-0.9, 0.9}) {
        const auto sel = leverage::evaluate_with_fallback(e.values, rho);
        const auto mc = repro::leverage_benchmark(rho, repro::Scale::Desk);
        const double rel = 100.0 * (sel.value - mc.price) / mc.price;
        std::fprintf(stderr, "  rho %+.1f: %s %.5f, mc %.5f +- %.5f\n", rho, sel.route.c_str(), sel.value, mc.price,
                     mc.standard_error);
        ok = ok && std::abs(rel) <= 1.5;
        detail += fmt("rho %+.1f off MC by %.3f%% ", rho, rel) + "(" + sel.route + ") ";
    }
    report(8, ok, detail);
}

void derivatives() {
    const auto spec = repro::cir_regime(1);
    double worst_phi = 0.0;
    for (double t : {0.0, 0.3, 0.6, 0.9})
        for (double lambda : {0.5, 2.0, 10.0, 25.0, 40.0}) {
            const double y = 0.05 + 0.1 * t + 0.004 * lambda, h = 1e-4 * y;
            const auto a = phi_conditional(spec, t, 1.0, lambda, y);
            const double fd = (phi_conditional(spec, t, 1.0, lambda, y + h).value -
                               phi_conditional(spec, t, 1.0, lambda, y - h).value) / (2 * h);
            worst_phi = std::max(worst_phi, std::abs(*a.state_derivative / fd - 1.0));
        }

    const auto c = repro::leverage_contract();
    numerics::QuadratureConfig tight;
    tight.rel_tol = 1e-13;
    tight.abs_tol = 1e-15;
    auto u0 = [&](double t, double x, double y) { return leverage::baseline_u0(t, x, y, c, M, spec, tight); };
    auto fd = [&](double t, double x, double y, double h) {
        return (u0(t, x + h, y + h) - u0(t, x + h, y - h) - u0(t, x - h, y + h) + u0(t, x - h, y - h)) / (4 * h * h);
    };
    double worst_u = 0.0;
    int n = 0;
    for (double t : {0.0, 0.2, 0.4, 0.6})
        for (double S : {82.0, 92.0, 103.0, 115.0, 130.0}) {
            const double x = std::log(S), y = 0.12 + 0.05 * (n % 4);
            const double h = 0.02;
            const double rich = (4.0 * fd(t, x, y, h / 2) - fd(t, x, y, h)) / 3.0;
            const double an = leverage::forcing_mixed_derivative(t, x, y, c, M, spec, tight) / leverage::coupling(spec, y);
            const double e = std::abs(an / rich - 1.0);
            if (e > 1e-4) std::fprintf(stderr, "  d_xy u0 at t=%g S=%g y=%g: %.8g vs fd %.8g\n", t, S, y, an, rich);
            worst_u = std::max(worst_u, e);
            ++n;
        }
    report(9, worst_phi <= 1e-6 && worst_u <= 1e-4,
           fmt("max rel err d_y Phi %.1e (20 points), d_xy u0 %.1e (%g points)", worst_phi, worst_u, n));
}

void calibration() {
    const auto truth = repro::cir_regime(1);
    calib::SyntheticSpec s;
    s.rho = -0.4;
    s.barriers = {make_doc(100.0, 70.0, 1.0), make_doc(100.0, 80.0, 1.0), make_uop(100.0, 130.0, 1.0),
                  make_uop(100.0, 120.0, 1.0)};
    const auto data = calib::synthetic_dataset(truth, M, s);
    const auto t0 = Clock::now();
    const auto r = calib::run_stage_pipeline(data, "cir");
    const double dt = since(t0);
    const auto& c = std::get<CirClock>(r.spec);
    const double ev0 = std::abs(c.v0 / truth.v0 - 1.0), eth = std::abs(c.theta / truth.theta - 1.0);
    std::fprintf(stderr, "  recovered kappa %.5f theta %.6f xi %.5f v0 %.6f rho %.5f in %.1f s\n", c.kappa, c.theta, c.xi, c.v0,
                 r.rho, dt);
    report(10, std::abs(r.rho + 0.4) <= 0.05 && ev0 <= 0.02 && eth <= 0.02 && dt < 600.0,
           fmt("rho* = %.4f, v0 off %.2f%%, theta off %.2f%%", r.rho, 100.0 * ev0, 100.0 * eth));
}

void properties() {
    const std::string cmd = std::string(SCLOCK_PROPERTY_TESTS) + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    report(11, status == 0, "property suite exit status " + std::to_string(status));
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<void()>>> steps{
        {"golden prices", golden_prices},   {"desk MC", desk_mc},           {"deterministic clock", deterministic_clock},
        {"barrier removal", barrier_removal}, {"double barrier", double_barrier}, {"first order", first_order},
        {"pade golden", pade_golden},       {"pade vs MC", pade_vs_mc},     {"derivatives", derivatives},
        {"calibration", calibration},       {"properties", properties}};
    int id = 0;
    for (const auto& [name, f] : steps) {
        ++id;
        const auto t0 = Clock::now();
        try {
            f();
        } catch (const std::exception& e) {
            report(id, false, std::string("threw: ") + e.what());
        }
        std::fprintf(stderr, "[%s: %.1f s]\n", name, since(t0));
    }
    std::printf("%d of 11 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
