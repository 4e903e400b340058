#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <string>

#include "sclock/errors.hpp"

namespace sclock::numerics {

struct OdeTolerance {
    double abs_tol = 1e-12;
    double rel_tol = 1e-10;
    double initial_step = 1e-3;
    double min_step = 1e-14;
    std::size_t max_steps = 200000;
};

namespace detail {

inline double magnitude(double v) { return std::abs(v); }
inline double magnitude(const std::complex<double>& v) { return std::abs(v); }

}  // namespace detail

// Dormand-Prince 5(4) with PI-free classic step control. State is a fixed-size
// array of real or complex scalars; rhs(t, y) returns dy/dt.
template <class T, std::size_t N, class Rhs>
std::array<T, N> integrate_dopri(Rhs&& rhs, std::array<T, N> y, double t0, double t1,
                                 const OdeTolerance& tol = {}, const std::string& context = {}) {
    using State = std::array<T, N>;
    if (t1 == t0) return y;

    constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    constexpr double a21 = 1.0 / 5;
    constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                     a54 = -212.0 / 729;
    constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                     a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                     b6 = 11.0 / 84;
    // b - b* (difference between the 5th and embedded 4th order weights)
    constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                     e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

    const double direction = t1 > t0 ? 1.0 : -1.0;
    const double span = std::abs(t1 - t0);
    double h = std::min(tol.initial_step, span);
    double t = t0;

    auto axpy = [](const State& base, std::initializer_list<std::pair<double, const State*>> terms,
                   double step) {
        State out = base;
        for (const auto& [w, k] : terms) {
            if (w == 0.0) continue;
            for (std::size_t i = 0; i < N; ++i) out[i] += step * w * (*k)[i];
        }
        return out;
    };

    State k1 = rhs(t, y);
    std::size_t steps = 0;
    while (direction * (t1 - t) > 0.0) {
        if (++steps > tol.max_steps) {
            throw IntegrationFailure("ODE step budget exhausted" +
                                     (context.empty() ? std::string{} : " [" + context + "]"));
        }
        const double remaining = std::abs(t1 - t);
        if (h > remaining) h = remaining;
        const double hs = direction * h;

        const State k2 = rhs(t + c2 * hs, axpy(y, {{a21, &k1}}, hs));
        const State k3 = rhs(t + c3 * hs, axpy(y, {{a31, &k1}, {a32, &k2}}, hs));
        const State k4 = rhs(t + c4 * hs, axpy(y, {{a41, &k1}, {a42, &k2}, {a43, &k3}}, hs));
        const State k5 =
            rhs(t + c5 * hs, axpy(y, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}, hs));
        const State k6 = rhs(
            t + hs, axpy(y, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}, hs));
        const State y_new =
            axpy(y, {{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}}, hs);
        const State k7 = rhs(t + hs, y_new);

        double err = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            const T delta = hs * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                                  e6 * k6[i] + e7 * k7[i]);
            const double scale =
                tol.abs_tol + tol.rel_tol * std::max(detail::magnitude(y[i]),
                                                     detail::magnitude(y_new[i]));
            err = std::max(err, detail::magnitude(delta) / scale);
        }
        if (!std::isfinite(err)) err = 1e10;

        if (err <= 1.0) {
            t = (h == remaining) ? t1 : t + hs;
            y = y_new;
            k1 = k7;
            const double factor = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
            h *= factor;
        } else {
            h *= std::clamp(0.9 * std::pow(err, -0.25), 0.1, 0.5);
            if (h < tol.min_step) {
                throw IntegrationFailure("ODE step size underflow at t=" + std::to_string(t) +
                                         (context.empty() ? std::string{} : " [" + context + "]"));
            }
        }
    }
    return y;
}

}  // namespace sclock::numerics
