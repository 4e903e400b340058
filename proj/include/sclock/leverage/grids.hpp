#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "sclock/barrier.hpp"
#include "sclock/leverage/spectral.hpp"
#include "sclock/vanilla.hpp"

namespace sclock::leverage {

inline std::vector<double> linspace(double a, double b, std::size_t n) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i)
        v[i] = n == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
    return v;
}

struct Box {
    double x_lo, x_hi, y_lo, y_hi;
};

// Live region in (x, y): barriers where present, otherwise a wide band around x0.
inline Box live_box(const BarrierContract& c, const MarketEnv& market, const ClockSpec& spec, double x_width = 8.0) {
    const double T = c.maturity;
    const double x0 = std::log(market.forward(T));
    const double sd = std::sqrt(expected_clock(spec, T));
    Box b{};
    b.x_lo = c.has_lower() ? std::log(c.lower_barrier) : x0 - x_width * sd - 0.5;
    b.x_hi = c.has_upper() ? std::log(c.upper_barrier) : x0 + x_width * sd + 0.5;
    if (const auto* cir = std::get_if<CirClock>(&spec)) {
        b.y_lo = 0.0;
        b.y_hi = cir->v0 + 8.0 * cir->xi * std::sqrt(cir->v0 * T);
        b.y_hi = std::max(b.y_hi, cir->theta + 8.0 * cir->xi * std::sqrt(cir->theta * T));
    } else {
        const auto& o = std::get<SquaredOuClock>(spec);
        const double Y = std::abs(o.y0) + 6.0 * o.sigma * std::sqrt(std::min(T, 1.0 / (2.0 * o.alpha)));
        b.y_lo = -Y;
        b.y_hi = Y;
    }
    return b;
}

// Values on a uniform (y, x) grid with bilinear lookup; zero outside the x range.
struct GridTable {
    double x0 = 0.0, dx = 1.0, y0 = 0.0, dy = 1.0;
    Eigen::MatrixXd values;  // rows y, cols x

    double operator()(double x, double y) const {
        const auto nx = values.cols(), ny = values.rows();
        const double fx = (x - x0) / dx;
        if (fx < 0.0 || fx > static_cast<double>(nx - 1)) return 0.0;
        double fy = (y - y0) / dy;
        fy = std::clamp(fy, 0.0, static_cast<double>(ny - 1));
        auto ix = static_cast<Eigen::Index>(fx), iy = static_cast<Eigen::Index>(fy);
        ix = std::min(ix, nx - 2);
        iy = std::min(iy, ny - 2);
        const double wx = fx - static_cast<double>(ix), wy = fy - static_cast<double>(iy);
        return (1.0 - wy) * ((1.0 - wx) * values(iy, ix) + wx * values(iy, ix + 1)) +
               wy * ((1.0 - wx) * values(iy + 1, ix) + wx * values(iy + 1, ix + 1));
    }
};

}  // namespace sclock::leverage
