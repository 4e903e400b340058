// Independent reference values used by the unit and acceptance tests.
#pragma once

#include <cmath>
#include <complex>

namespace oracle {

inline double ncdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// E[exp(-lambda Gamma)] for a deterministic clock Gamma = g.
struct DeterministicClock {
    double g;
    double operator()(double lambda) const { return std::exp(-lambda * g); }
};

inline double black(double F, double K, double s, double P, bool call) {
    const double d1 = std::log(F / K) / s + 0.5 * s, d2 = d1 - s;
    return call ? P * (F * ncdf(d1) - K * ncdf(d2)) : P * (K * ncdf(-d2) - F * ncdf(-d1));
}

// Continuously monitored single barrier on a driftless forward with total variance s^2,
// via the image of the Gaussian killed density about the barrier.
inline double image_doc(double F, double K, double L, double s, double P) {
    const double mu = -0.5 * s * s, b = std::log(L / F), k = std::log(K / F);
    const double a = std::max(b, k);
    auto tail = [&](double lo, double shift) {
        const double d2 = (mu + shift - lo) / s;
        return F * std::exp(shift) * ncdf(d2 + s) - K * ncdf(d2);
    };
    // image term: density n(z - 2b - mu) weighted by exp(2 mu b / s^2) = F / L
    return P * (tail(a, 0.0) - (F / L) * tail(a, 2.0 * b));
}

inline double image_uop(double F, double K, double H, double s, double P) {
    const double mu = -0.5 * s * s, b = std::log(H / F), k = std::log(K / F);
    const double a = std::min(b, k);
    auto head = [&](double hi, double shift) {
        const double d2 = (mu + shift - hi) / s;
        return K * ncdf(-d2) - F * std::exp(shift) * ncdf(-d2 - s);
    };
    return P * (head(a, 0.0) - (F / H) * head(a, 2.0 * b));
}

// Heston characteristic function of ln(F_T / F_0) (Albrecher et al. branch-safe form).
inline std::complex<double> heston_cf(std::complex<double> u, double T, double kappa, double theta, double xi, double v0,
                                      double rho) {
    using C = std::complex<double>;
    const C i(0.0, 1.0);
    const C a = kappa - rho * xi * i * u;
    const C d = std::sqrt(a * a + xi * xi * (i * u + u * u));
    const C g = (a - d) / (a + d);
    const C e = std::exp(-d * T);
    const C Cc = kappa * theta / (xi * xi) * ((a - d) * T - 2.0 * std::log((1.0 - g * e) / (1.0 - g)));
    const C D = (a - d) / (xi * xi) * (1.0 - e) / (1.0 - g * e);
    return std::exp(Cc + D * v0);
}

// Lewis single-integral call price on the forward, composite Simpson on [0, 200].
inline double heston_call(double F, double K, double T, double P, double kappa, double theta, double xi, double v0,
                          double rho) {
    const double k = std::log(K / F);
    const int n = 40000;
    const double U = 200.0, h = U / n;
    auto f = [&](double u) {
        const std::complex<double> z(u, -0.5);
        const auto v = std::exp(std::complex<double>(0.0, -u * k)) * heston_cf(z, T, kappa, theta, xi, v0, rho);
        return v.real() / (u * u + 0.25);
    };
    double s = f(0.0) + f(U);
    for (int j = 1; j < n; ++j) s += (j % 2 ? 4.0 : 2.0) * f(j * h);
    s *= h / 3.0;
    return P * (F - std::sqrt(F * K) / M_PI * s);
}

// Integrated CIR mean over [0, T].
inline double cir_clock_mean(double kappa, double theta, double v0, double T) {
    return theta * T + (v0 - theta) * (1.0 - std::exp(-kappa * T)) / kappa;
}

}  // namespace oracle
