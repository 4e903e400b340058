#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "sclock/errors.hpp"
#include "sclock/numerics/quadrature.hpp"
#include "sclock/transform_cache.hpp"

namespace sclock {

// Callable lambda -> E[exp(-lambda * Gamma)].
template <class F>
concept LaplaceTransform = std::invocable<const F&, double> &&
                           std::convertible_to<std::invoke_result_t<const F&, double>, double>;

inline constexpr double kPi = 3.14159265358979323846;
// Martingale drift of the log-forward in operational time.
inline constexpr double kBeta = -0.5;

enum class BarrierKind { UpOutPut, DownOutCall, DkoCall, DkoPut };

inline const char* to_string(BarrierKind k) {
    switch (k) {
        case BarrierKind::UpOutPut: return "UOP";
        case BarrierKind::DownOutCall: return "DOC";
        case BarrierKind::DkoCall: return "DKO-call";
        case BarrierKind::DkoPut: return "DKO-put";
    }
    return "?";
}

struct MarketEnv {
    double spot = 100.0;
    double rate = 0.0;
    double dividend = 0.0;

    double forward(double T) const { return spot * std::exp((rate - dividend) * T); }
    double discount(double T) const { return std::exp(-rate * T); }
    void validate() const {
        if (!(spot > 0.0) || !std::isfinite(spot)) throw DomainError("spot must be positive");
        if (!std::isfinite(rate) || !std::isfinite(dividend)) throw DomainError("rate and dividend must be finite");
    }
};

// Barriers are continuously monitored on the T-forward F_t = S_t exp((r-q)(T-t)).
struct BarrierContract {
    BarrierKind kind = BarrierKind::DownOutCall;
    double strike = 100.0;
    double upper_barrier = std::numeric_limits<double>::quiet_NaN();
    double lower_barrier = std::numeric_limits<double>::quiet_NaN();
    double maturity = 1.0;

    bool has_upper() const { return kind == BarrierKind::UpOutPut || kind == BarrierKind::DkoCall || kind == BarrierKind::DkoPut; }
    bool has_lower() const { return kind != BarrierKind::UpOutPut; }
    bool is_call() const { return kind == BarrierKind::DownOutCall || kind == BarrierKind::DkoCall; }

    void validate() const {
        if (!(strike > 0.0) || !std::isfinite(strike)) throw DomainError("strike must be positive");
        if (!(maturity > 0.0) || !std::isfinite(maturity)) throw DomainError("maturity must be positive");
        if (has_upper() && !(upper_barrier > 0.0 && std::isfinite(upper_barrier)))
            throw DomainError(std::string(to_string(kind)) + " requires a positive upper barrier");
        if (has_lower() && !(lower_barrier > 0.0 && std::isfinite(lower_barrier)))
            throw DomainError(std::string(to_string(kind)) + " requires a positive lower barrier");
        if (has_upper() && has_lower() && !(lower_barrier < upper_barrier))
            throw DomainError("corridor requires lower barrier < upper barrier");
    }
};

inline BarrierContract make_uop(double strike, double upper, double maturity) {
    BarrierContract c;
    c.kind = BarrierKind::UpOutPut;
    c.strike = strike;
    c.upper_barrier = upper;
    c.maturity = maturity;
    return c;
}

inline BarrierContract make_doc(double strike, double lower, double maturity) {
    BarrierContract c;
    c.kind = BarrierKind::DownOutCall;
    c.strike = strike;
    c.lower_barrier = lower;
    c.maturity = maturity;
    return c;
}

inline BarrierContract make_dko(bool call, double strike, double lower, double upper, double maturity) {
    BarrierContract c;
    c.kind = call ? BarrierKind::DkoCall : BarrierKind::DkoPut;
    c.strike = strike;
    c.lower_barrier = lower;
    c.upper_barrier = upper;
    c.maturity = maturity;
    return c;
}

namespace detail {

inline double panel_cap(double a, double b) {
    const double freq = std::max({std::abs(a), std::abs(b), 1e-3});
    return kPi / (2.0 * freq);
}

// Laplace argument on the quadrature line.
inline double line_lambda(double u, double beta) { return 0.5 * (u * u + beta * beta); }

inline double clamp_noise(double v, const char* what) {
    if (v < 0.0) {
        if (v > -1e-10) return 0.0;
        throw NumericalError(std::string(what) + " is materially negative (" + std::to_string(v) +
                             "); quadrature or transform input is inconsistent");
    }
    return v;
}

}  // namespace detail

// ---- single upper barrier laws ------------------------------------------------

// Density of X_T on {sup X < h} at x < h.
template <LaplaceTransform Phi>
double killed_density(double x, double h, double x0, double beta, const Phi& phi,
                      const numerics::QuadratureConfig& cfg = {}) {
    if (!(x0 < h)) throw DomainError("killed density requires x0 < h");
    if (!(x < h)) throw DomainError("killed density requires x < h");
    const double d0 = h - x0, d1 = h - x;
    auto f = [&](double u) { return std::sin(u * d0) * std::sin(u * d1) * phi(detail::line_lambda(u, beta)); };
    const auto r = numerics::integrate_semi_infinite(f, detail::panel_cap(d0, d1), cfg);
    return (2.0 / kPi) * std::exp(beta * (x - x0)) * r.value;
}

// Q(X_T <= x, sup X < h). For beta < 0 the single-integral form carries the
// additive constant 1 - exp(2 beta (h - x0)) (the mass that never reaches h).
template <LaplaceTransform Phi>
double joint_cdf(double x, double h, double x0, double beta, const Phi& phi,
                 const numerics::QuadratureConfig& cfg = {}) {
    if (!(x0 < h)) throw DomainError("joint CDF requires x0 < h");
    if (x > h) x = h;
    const double d = h - x0, e = h - x;
    const double b2 = beta * beta;
    auto f = [&](double u) {
        const double denom = u * u + b2;
        return std::sin(u * d) * (u * std::cos(u * e) + beta * std::sin(u * e)) / denom *
               phi(detail::line_lambda(u, beta));
    };
    const double scale = std::exp(beta * (x - x0));
    numerics::QuadratureConfig local = cfg;
    local.abs_tol = cfg.abs_tol / std::max(scale, 1.0);
    const auto r = numerics::integrate_semi_infinite(f, detail::panel_cap(d, e), local);
    double value = (2.0 / kPi) * scale * r.value;
    if (beta < 0.0) value += 1.0 - std::exp(2.0 * beta * d);
    return std::min(detail::clamp_noise(value, "joint CDF"), 1.0);
}

template <LaplaceTransform Phi>
double survival_probability_upper(double h, double x0, double beta, const Phi& phi,
                                  const numerics::QuadratureConfig& cfg = {}) {
    return joint_cdf(h, h, x0, beta, phi, cfg);
}

// ---- UOP / DOC ------------------------------------------------------------------

enum class SingleBarrierMode {
    SingleIntegral,  // one oscillatory integral with a sqrt(K F0) kernel
    Decomposition    // K J_{-1/2}(k;h) - F0 J_{+1/2}(k;h) via two joint CDFs
};

namespace detail {

// I(d, e) = int_0^inf sin(u d) sin(u e) / (u^2 + 1/4) Phi((u^2 + 1/4)/2) du
template <LaplaceTransform Phi>
double knockout_kernel_integral(double d, double e, const Phi& phi, const numerics::QuadratureConfig& cfg) {
    if (e == 0.0 || d == 0.0) return 0.0;
    auto f = [&](double u) {
        const double q = u * u + 0.25;
        return std::sin(u * d) * std::sin(u * e) / q * phi(0.5 * q);
    };
    return numerics::integrate_semi_infinite(f, panel_cap(d, e), cfg).value;
}

inline void check_kind(const BarrierContract& c, BarrierKind k) {
    c.validate();
    if (c.kind != k) throw DomainError(std::string("contract kind must be ") + to_string(k));
}

}  // namespace detail

template <LaplaceTransform Phi>
double price_uop(const BarrierContract& contract, const MarketEnv& market, const Phi& phi,
                 const numerics::QuadratureConfig& cfg = {},
                 SingleBarrierMode mode = SingleBarrierMode::SingleIntegral) {
    detail::check_kind(contract, BarrierKind::UpOutPut);
    market.validate();
    const double T = contract.maturity;
    const double F0 = market.forward(T);
    const double H = contract.upper_barrier;
    if (!(F0 < H))
        throw KnockedOutError("UOP knocked out at inception: forward " + std::to_string(F0) +
                              " >= upper barrier " + std::to_string(H));
    const double P = market.discount(T);
    const double x0 = std::log(F0), h = std::log(H);
    // strikes above the barrier: (K - H) * survival + UOP struck at H
    const double K = std::min(contract.strike, H);
    const double excess = contract.strike - K;
    const double k = std::log(K);

    double undiscounted = 0.0;
    if (mode == SingleBarrierMode::SingleIntegral) {
        const double integral = detail::knockout_kernel_integral(h - x0, h - k, phi, cfg);
        undiscounted = K * (1.0 - F0 / H) - (2.0 / kPi) * std::sqrt(K * F0) * integral;
    } else {
        undiscounted = K * joint_cdf(k, h, x0, -0.5, phi, cfg) - F0 * joint_cdf(k, h, x0, 0.5, phi, cfg);
    }
    if (excess > 0.0) undiscounted += excess * survival_probability_upper(h, x0, -0.5, phi, cfg);
    return P * detail::clamp_noise(undiscounted, "UOP price");
}

template <LaplaceTransform Phi>
double price_doc(const BarrierContract& contract, const MarketEnv& market, const Phi& phi,
                 const numerics::QuadratureConfig& cfg = {},
                 SingleBarrierMode mode = SingleBarrierMode::SingleIntegral) {
    detail::check_kind(contract, BarrierKind::DownOutCall);
    market.validate();
    const double T = contract.maturity;
    const double F0 = market.forward(T);
    const double L = contract.lower_barrier;
    if (!(L < F0))
        throw KnockedOutError("DOC knocked out at inception: forward " + std::to_string(F0) +
                              " <= lower barrier " + std::to_string(L));
    const double P = market.discount(T);
    const double x0 = std::log(F0), l = std::log(L);
    // strikes below the barrier: (L - K) * survival + DOC struck at L
    const double K = std::max(contract.strike, L);
    const double shortfall = K - contract.strike;
    const double k = std::log(K);

    double undiscounted = 0.0;
    if (mode == SingleBarrierMode::SingleIntegral) {
        const double integral = detail::knockout_kernel_integral(x0 - l, k - l, phi, cfg);
        undiscounted = (F0 - L) - (2.0 / kPi) * std::sqrt(K * F0) * integral;
    } else {
        // reflection X~ = 2l - X turns the lower barrier into an upper one; drifts flip sign
        const double xr0 = 2.0 * l - x0, xr = 2.0 * l - k;
        undiscounted = F0 * joint_cdf(xr, l, xr0, -0.5, phi, cfg) - K * joint_cdf(xr, l, xr0, 0.5, phi, cfg);
    }
    if (shortfall > 0.0) {
        // survival under Q^T: reflected process has drift +1/2
        undiscounted += shortfall * survival_probability_upper(l, 2.0 * l - x0, 0.5, phi, cfg);
    }
    return P * detail::clamp_noise(undiscounted, "DOC price");
}

// ---- double knock-out -------------------------------------------------------------

namespace detail {

// Antiderivative of exp(alpha x) sin(omega (x - l)).
inline double sine_antiderivative(double alpha, double omega, double l, double x) {
    const double arg = omega * (x - l);
    return std::exp(alpha * x) / (alpha * alpha + omega * omega) * (alpha * std::sin(arg) - omega * std::cos(arg));
}

}  // namespace detail

// Payoff projections A_n onto sin(omega_n (x - l)) with weight exp(beta x).
inline std::vector<double> dko_coefficients(const BarrierContract& contract, std::size_t n_max) {
    contract.validate();
    if (contract.kind != BarrierKind::DkoCall && contract.kind != BarrierKind::DkoPut)
        throw DomainError("DKO coefficients need a DKO contract");
    if (n_max < 1) throw DomainError("n_max must be >= 1");
    const double K = contract.strike;
    const double l = std::log(contract.lower_barrier), h = std::log(contract.upper_barrier), k = std::log(K);
    const double a = h - l;
    const double beta = kBeta;
    std::vector<double> A(n_max, 0.0);
    if (contract.kind == BarrierKind::DkoCall) {
        const double c = std::max(k, l);
        if (c >= h) return A;
        for (std::size_t n = 1; n <= n_max; ++n) {
            const double w = static_cast<double>(n) * kPi / a;
            auto F = [&](double alpha, double x) { return detail::sine_antiderivative(alpha, w, l, x); };
            A[n - 1] = (F(beta + 1.0, h) - F(beta + 1.0, c)) - K * (F(beta, h) - F(beta, c));
        }
    } else {
        const double d = std::min(k, h);
        if (d <= l) return A;
        for (std::size_t n = 1; n <= n_max; ++n) {
            const double w = static_cast<double>(n) * kPi / a;
            auto F = [&](double alpha, double x) { return detail::sine_antiderivative(alpha, w, l, x); };
            A[n - 1] = K * (F(beta, d) - F(beta, l)) - (F(beta + 1.0, d) - F(beta + 1.0, l));
        }
    }
    return A;
}

struct DkoResult {
    double price = 0.0;
    std::size_t terms = 0;
};

struct DkoConfig {
    double abs_tol = 1e-12;
    std::size_t n_max = 2000;
};

// Sine series against a transform cache built on the Dirichlet grid of the corridor.
inline DkoResult price_dko(const BarrierContract& contract, const MarketEnv& market, const TransformCache& cache,
                           const DkoConfig& cfg = {}) {
    contract.validate();
    market.validate();
    if (contract.kind != BarrierKind::DkoCall && contract.kind != BarrierKind::DkoPut)
        throw DomainError("price_dko requires a DKO contract");
    const double T = contract.maturity;
    if (std::abs(cache.T() - cache.t() - T) > 1e-12 * std::max(1.0, T))
        throw DomainError("transform cache horizon does not match contract maturity");
    const double F0 = market.forward(T);
    const double L = contract.lower_barrier, H = contract.upper_barrier;
    if (F0 < L || F0 > H)
        throw KnockedOutError("DKO knocked out at inception: forward outside the corridor");
    if (F0 == L || F0 == H) return {0.0, 0};
    const double l = std::log(L), h = std::log(H), x0 = std::log(F0);
    const double a = h - l;
    const std::size_t n_max = std::min(cfg.n_max, cache.size());
    const auto expected = dirichlet_grid(a, n_max);
    for (std::size_t i = 0; i < n_max; ++i) {
        if (std::abs(cache.grid()[i] - expected[i]) > 1e-12 * expected[i])
            throw DomainError("transform cache grid does not match the corridor Dirichlet grid at n=" +
                              std::to_string(i + 1));
    }
    const auto A = dko_coefficients(contract, n_max);
    const double prefactor = market.discount(T) * (2.0 / a) * std::exp(-kBeta * x0);
    double sum = 0.0;
    int small_run = 0;
    for (std::size_t n = 1; n <= n_max; ++n) {
        const double w = static_cast<double>(n) * kPi / a;
        const double term = prefactor * std::sin(w * (x0 - l)) * A[n - 1] * cache.value(n - 1);
        sum += term;
        if (std::abs(term) < cfg.abs_tol * std::max(1.0, std::abs(sum))) {
            if (++small_run >= 3) return {std::max(detail::clamp_noise(sum, "DKO price"), 0.0), n};
        } else {
            small_run = 0;
        }
    }
    throw ConvergenceError("DKO series did not converge within " + std::to_string(n_max) + " terms", sum, sum);
}

// Convenience: builds the Dirichlet-grid cache from a clock spec.
inline DkoResult price_dko(const BarrierContract& contract, const MarketEnv& market, const ClockSpec& spec,
                           const DkoConfig& cfg = {}) {
    contract.validate();
    const double a = std::log(contract.upper_barrier / contract.lower_barrier);
    const auto cache = build_transform_cache(spec, 0.0, contract.maturity, dirichlet_grid(a, cfg.n_max));
    return price_dko(contract, market, cache, cfg);
}

// Same series with a generic transform (deterministic clocks in tests, conditional
// transforms in the leverage layer).
template <LaplaceTransform Phi>
DkoResult price_dko_with(const BarrierContract& contract, const MarketEnv& market, const Phi& phi,
                         const DkoConfig& cfg = {}) {
    contract.validate();
    market.validate();
    const double T = contract.maturity;
    const double F0 = market.forward(T);
    const double L = contract.lower_barrier, H = contract.upper_barrier;
    if (F0 < L || F0 > H) throw KnockedOutError("DKO knocked out at inception: forward outside the corridor");
    if (F0 == L || F0 == H) return {0.0, 0};
    const double l = std::log(L), h = std::log(H), x0 = std::log(F0);
    const double a = h - l;
    const auto A = dko_coefficients(contract, cfg.n_max);
    const auto grid = dirichlet_grid(a, cfg.n_max);
    const double prefactor = market.discount(T) * (2.0 / a) * std::exp(-kBeta * x0);
    double sum = 0.0;
    int small_run = 0;
    for (std::size_t n = 1; n <= cfg.n_max; ++n) {
        const double w = static_cast<double>(n) * kPi / a;
        const double s = std::sin(w * (x0 - l));
        const double term = (A[n - 1] == 0.0 || s == 0.0) ? 0.0 : prefactor * s * A[n - 1] * phi(grid[n - 1]);
        sum += term;
        if (std::abs(term) < cfg.abs_tol * std::max(1.0, std::abs(sum))) {
            if (++small_run >= 3) return {std::max(detail::clamp_noise(sum, "DKO price"), 0.0), n};
        } else {
            small_run = 0;
        }
    }
    throw ConvergenceError("DKO series did not converge within " + std::to_string(cfg.n_max) + " terms", sum, sum);
}

// Dispatch on contract kind with a generic transform.
template <LaplaceTransform Phi>
double price_barrier(const BarrierContract& contract, const MarketEnv& market, const Phi& phi,
                     const numerics::QuadratureConfig& cfg = {}) {
    switch (contract.kind) {
        case BarrierKind::UpOutPut: return price_uop(contract, market, phi, cfg);
        case BarrierKind::DownOutCall: return price_doc(contract, market, phi, cfg);
        default: return price_dko_with(contract, market, phi).price;
    }
}

}  // namespace sclock
