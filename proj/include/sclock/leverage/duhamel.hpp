#pragma once

#include <cmath>
#include <vector>

#include "sclock/leverage/grids.hpp"
#include "sclock/leverage/spectral.hpp"
#include "sclock/mc.hpp"

namespace sclock::leverage {

struct DuhamelConfig {
    McConfig mc{100000, 520.0, 20240917, false, true, 2048, 0};
    std::size_t slice_stride = 4;  // forcing evaluated every `slice_stride` simulation steps
    std::size_t nx = 401;
    std::size_t ny = 65;
    SpectralConfig spectral{};
};

struct CoefficientEstimate {
    double value = 0.0;
    double standard_error = 0.0;
};

// C_1 = P(0,T) E[ int_0^T (L1 u0)(s, X_s, Y_s) 1{tau > s} ds ] under the rho = 0 dynamics,
// with the forcing tabulated per time slice and interpolated along paths.
inline CoefficientEstimate duhamel_coefficient_1(const BarrierContract& contract, const MarketEnv& market,
                                                 const ClockSpec& spec, const DuhamelConfig& cfg = {}) {
    contract.validate();
    market.validate();
    validate(spec);
    require_scalar_factor(spec);
    cfg.mc.validate();
    if (cfg.slice_stride < 1 || cfg.nx < 3 || cfg.ny < 3) throw DomainError("Duhamel grid is too coarse");
    const double T = contract.maturity;
    const double x_start = std::log(market.forward(T));
    if (sclock::leverage::detail::outside_corridor(contract, x_start))
        throw KnockedOutError("Duhamel estimator started outside the live region");

    const std::size_t n_slices = (cfg.mc.steps_for(T) + cfg.slice_stride - 1) / cfg.slice_stride;
    const std::size_t n_steps = n_slices * cfg.slice_stride;
    const double dt = T / static_cast<double>(n_steps);
    const double ds = dt * static_cast<double>(cfg.slice_stride);

    const Box box = live_box(contract, market, spec);
    const auto xs = linspace(box.x_lo, box.x_hi, cfg.nx);
    const auto ys = linspace(box.y_lo, box.y_hi, cfg.ny);
    const auto sb = spectral_baseline(contract, cfg.spectral);
    std::vector<GridTable> tables(n_slices + 1);
    for (std::size_t k = 0; k <= n_slices; ++k) {
        auto& tab = tables[k];
        tab.x0 = xs.front();
        tab.dx = xs[1] - xs[0];
        tab.y0 = ys.front();
        tab.dy = ys[1] - ys[0];
        tab.values = forcing_table(sb, spec, T - ds * static_cast<double>(k), xs, ys, cfg.spectral.decay_exponent);
    }

    MonitoredPayoff pay = monitored_payoff(contract);
    sclock::detail::Monitor mon{&pay, cfg.mc.bridge};
    const FactorStepper stepper(spec, dt);
    auto sample = [&](std::size_t path, bool anti) -> std::pair<double, bool> {
        PathRng rng(cfg.mc.seed, path, anti);
        double y = stepper.initial();
        double v = stepper.activity(y);
        double x = x_start;
        double integral = 0.5 * ds * tables[0](x, y);
        for (std::size_t i = 1; i <= n_steps; ++i) {
            const double t = dt * static_cast<double>(i - 1);
            const double yn = stepper.step(y, t, rng.normal());
            const double vn = stepper.activity(yn);
            const double dg = 0.5 * (v + vn) * dt;
            const double xn = x + kBeta * dg + std::sqrt(dg) * rng.normal();
            if (!mon.survives(x, xn, dg, rng)) return {integral, true};
            x = xn;
            y = yn;
            v = vn;
            if (i % cfg.slice_stride == 0) {
                const std::size_t k = i / cfg.slice_stride;
                integral += (k == n_slices ? 0.5 : 1.0) * ds * tables[k](x, y);
            }
        }
        return {integral, false};
    };
    const auto est = sclock::detail::run_blocks(cfg.mc, market.discount(T), sample);
    return {est.price, est.standard_error};
}

}  // namespace sclock::leverage
