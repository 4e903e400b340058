#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "sclock/errors.hpp"
#include "sclock/numerics/optimize.hpp"

namespace sclock {

inline double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }
inline double norm_pdf(double x) { return 0.3989422804014327 * std::exp(-0.5 * x * x); }

// Black-76 on the forward. `discount` multiplies the undiscounted value.
inline double black_price(double forward, double strike, double vol, double T, double discount, bool call) {
    if (!(forward > 0.0) || !(strike > 0.0)) throw DomainError("Black requires positive forward and strike");
    if (!(vol >= 0.0) || !(T >= 0.0)) throw DomainError("Black requires vol >= 0 and T >= 0");
    const double sd = vol * std::sqrt(T);
    if (sd == 0.0) return discount * std::max(call ? forward - strike : strike - forward, 0.0);
    const double d1 = std::log(forward / strike) / sd + 0.5 * sd;
    const double d2 = d1 - sd;
    if (call) return discount * (forward * norm_cdf(d1) - strike * norm_cdf(d2));
    return discount * (strike * norm_cdf(-d2) - forward * norm_cdf(-d1));
}

inline double black_vega(double forward, double strike, double vol, double T, double discount) {
    const double sd = vol * std::sqrt(T);
    if (sd <= 0.0) return 0.0;
    const double d1 = std::log(forward / strike) / sd + 0.5 * sd;
    return discount * forward * norm_pdf(d1) * std::sqrt(T);
}

// Newton on vol with a bracketing fallback.
inline double black_implied_vol(double price, double forward, double strike, double T, double discount, bool call,
                                double tol = 1e-10) {
    if (!(T > 0.0)) throw DomainError("implied vol requires T > 0");
    const double intrinsic = discount * std::max(call ? forward - strike : strike - forward, 0.0);
    const double upper = discount * (call ? forward : strike);
    if (!(price > intrinsic) || !(price < upper))
        throw DomainError("price " + std::to_string(price) + " outside the no-arbitrage band (" +
                          std::to_string(intrinsic) + ", " + std::to_string(upper) + ")");
    auto diff = [&](double v) { return black_price(forward, strike, v, T, discount, call) - price; };
    double vol = std::sqrt(2.0 * std::abs(std::log(forward / strike)) / T) + 0.2;
    for (int i = 0; i < 50; ++i) {
        const double vega = black_vega(forward, strike, vol, T, discount);
        if (!(vega > 1e-14)) break;
        const double step = diff(vol) / vega;
        const double next = vol - step;
        if (!(next > 0.0) || !(next < 20.0)) break;
        vol = next;
        if (std::abs(step) < tol) return vol;
    }
    return numerics::find_root(diff, 1e-9, 20.0, tol * 1e-2);
}

}  // namespace sclock
