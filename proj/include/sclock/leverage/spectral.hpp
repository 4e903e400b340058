#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sclock/barrier.hpp"
#include "sclock/clock_transforms.hpp"
#include "sclock/errors.hpp"

namespace sclock::leverage {

// ---- factor geometry --------------------------------------------------------------

// Scalar-factor families usable by the leverage layer.
inline void require_scalar_factor(const ClockSpec& spec) {
    if (!std::holds_alternative<CirClock>(spec) && !std::holds_alternative<SquaredOuClock>(spec))
        throw UnsupportedFamilyError(std::string("leverage layer needs a CIR or squared-OU clock, got ") +
                                     family_name(spec));
}

// s(y) entering Phi = exp(-A - B s(y)).
inline double state_map(const ClockSpec& spec, double y) {
    return std::holds_alternative<SquaredOuClock>(spec) ? y * y : y;
}

inline double state_map_derivative(const ClockSpec& spec, double y) {
    return std::holds_alternative<SquaredOuClock>(spec) ? 2.0 * y : 1.0;
}

// a(y) sqrt(v(y)): coefficient of rho * d_xy in the generator.
inline double coupling(const ClockSpec& spec, double y) {
    if (const auto* c = std::get_if<CirClock>(&spec)) return c->xi * std::max(y, 0.0);
    const auto& o = std::get<SquaredOuClock>(spec);
    return o.sigma * std::abs(y);
}

// Riccati coefficients (A, B) over horizon tau. The squared OU state equation is a CIR
// equation in v = Y^2 with kappa = 2 alpha, theta = sigma^2 / (2 alpha), xi = 2 sigma.
inline RiccatiSolution<double> affine_coefficients(const ClockSpec& spec, double tau, double lambda) {
    if (const auto* c = std::get_if<CirClock>(&spec))
        return cir_riccati_closed_form<double>(c->kappa, c->theta, c->xi, tau, lambda);
    if (const auto* o = std::get_if<SquaredOuClock>(&spec)) {
        const double kappa = 2.0 * o->alpha;
        return cir_riccati_closed_form<double>(kappa, o->sigma * o->sigma / kappa, 2.0 * o->sigma, tau, lambda);
    }
    throw UnsupportedFamilyError(std::string("no closed-form coefficients for family ") + family_name(spec));
}

// ---- baseline value ------------------------------------------------------------------

namespace detail {

inline MarketEnv market_at(const MarketEnv& market, double x, double tau) {
    MarketEnv m = market;
    m.spot = std::exp(x - (market.rate - market.dividend) * tau);
    return m;
}

inline bool outside_corridor(const BarrierContract& c, double x) {
    if (c.has_upper() && x >= std::log(c.upper_barrier)) return true;
    if (c.has_lower() && x <= std::log(c.lower_barrier)) return true;
    return false;
}

}  // namespace detail

// Value at time t given log-forward x and factor state y, discounted to t.
inline double baseline_u0(double t, double x, double y, const BarrierContract& contract, const MarketEnv& market,
                          const ClockSpec& spec, const numerics::QuadratureConfig& qcfg = {}) {
    contract.validate();
    const double T = contract.maturity;
    if (!(t >= 0.0 && t < T)) throw DomainError("baseline requires 0 <= t < T");
    if (detail::outside_corridor(contract, x)) return 0.0;
    const double tau = T - t;
    BarrierContract local = contract;
    local.maturity = tau;
    const MarketEnv m = detail::market_at(market, x, tau);
    const auto phi = conditional_laplace_of(spec, t, T, y);
    switch (contract.kind) {
        case BarrierKind::UpOutPut: return price_uop(local, m, phi, qcfg);
        case BarrierKind::DownOutCall: return price_doc(local, m, phi, qcfg);
        default: return price_dko_with(local, m, phi).price;
    }
}

// ---- spectral form of the baseline -------------------------------------------------------

// u0(s, x, y) = a0 + a1 e^x + sum_j w_j e^{x/2} sin(o u_j (x - anchor)) Phi_{s,T}(lambda_j; y)
// on a uniform frequency grid u_j = j du (undiscounted, forward measure).
struct SpectralBaseline {
    double du = 0.1;
    double anchor = 0.0;
    double orient = 1.0;
    double a0 = 0.0, a1 = 0.0;
    std::vector<double> weights;  // w_1..w_J

    std::size_t size() const { return weights.size(); }
    double frequency(std::size_t j) const { return static_cast<double>(j + 1) * du; }
    double lambda(std::size_t j) const {
        const double u = frequency(j);
        return 0.5 * (u * u + 0.25);
    }
};

struct SpectralConfig {
    double du = 0.1;                 // trapezoid step for the single-barrier integrals
    double max_frequency = 2500.0;   // hard cap on the frequency grid
    double strike_band = 1e-3;       // log-strike mollification band (0 disables)
    double decay_exponent = 40.0;    // frequencies with A + B s_min above this are dropped
};

inline double sinc(double z) { return std::abs(z) < 1e-8 ? 1.0 - z * z / 6.0 : std::sin(z) / z; }

inline SpectralBaseline spectral_baseline(const BarrierContract& contract, const SpectralConfig& cfg = {}) {
    contract.validate();
    SpectralBaseline sb;
    const double k = std::log(contract.strike);
    const double K = contract.strike;
    auto moll = [&](double u) { return cfg.strike_band > 0.0 ? sinc(0.5 * u * cfg.strike_band) : 1.0; };
    if (contract.kind == BarrierKind::DownOutCall) {
        const double l = std::log(contract.lower_barrier);
        if (!(k > l)) throw DomainError("leverage layer requires strike above the lower barrier for a DOC");
        sb.du = cfg.du;
        sb.anchor = l;
        sb.orient = 1.0;
        sb.a0 = -contract.lower_barrier;
        sb.a1 = 1.0;
        const auto J = static_cast<std::size_t>(cfg.max_frequency / cfg.du);
        sb.weights.resize(J);
        for (std::size_t j = 0; j < J; ++j) {
            const double u = sb.frequency(j);
            sb.weights[j] = -(2.0 / kPi) * std::sqrt(K) * cfg.du * std::sin(u * (k - l)) / (u * u + 0.25) * moll(u);
        }
    } else if (contract.kind == BarrierKind::UpOutPut) {
        const double h = std::log(contract.upper_barrier);
        if (!(k < h)) throw DomainError("leverage layer requires strike below the upper barrier for a UOP");
        sb.du = cfg.du;
        sb.anchor = h;
        sb.orient = -1.0;
        sb.a0 = K;
        sb.a1 = -K / contract.upper_barrier;
        const auto J = static_cast<std::size_t>(cfg.max_frequency / cfg.du);
        sb.weights.resize(J);
        for (std::size_t j = 0; j < J; ++j) {
            const double u = sb.frequency(j);
            sb.weights[j] = -(2.0 / kPi) * std::sqrt(K) * cfg.du * std::sin(u * (h - k)) / (u * u + 0.25) * moll(u);
        }
    } else {
        const double l = std::log(contract.lower_barrier), h = std::log(contract.upper_barrier);
        const double a = h - l;
        sb.du = kPi / a;
        sb.anchor = l;
        sb.orient = 1.0;
        const auto J = std::max<std::size_t>(1, static_cast<std::size_t>(cfg.max_frequency / sb.du));
        const auto A = dko_coefficients(contract, J);
        sb.weights.resize(J);
        for (std::size_t j = 0; j < J; ++j) sb.weights[j] = (2.0 / a) * A[j] * moll(sb.frequency(j));
    }
    return sb;
}

// Number of frequencies needed at horizon tau so that exp(-A - B s_min) is negligible.
inline std::size_t active_terms(const SpectralBaseline& sb, const ClockSpec& spec, double tau, double s_min,
                                double decay_exponent) {
    if (tau <= 0.0) return 0;
    const std::size_t J = sb.size();
    std::size_t lo = 0, hi = J;
    // exponent is increasing in lambda: bisect on the index
    auto exponent = [&](std::size_t j) {
        const auto r = affine_coefficients(spec, tau, sb.lambda(j));
        return r.A + r.B * s_min;
    };
    if (exponent(J - 1) < decay_exponent) return J;
    while (hi - lo > 1) {
        const std::size_t mid = (lo + hi) / 2;
        if (exponent(mid) < decay_exponent) lo = mid;
        else hi = mid;
    }
    return hi + 1;
}

// Forcing a(y) sqrt(v(y)) d_xy u0 on a tensor grid at horizon tau (rows: y, cols: x).
// Frequency sums are evaluated as G (y x J) * S (J x x) in column chunks.
inline Eigen::MatrixXd forcing_table(const SpectralBaseline& sb, const ClockSpec& spec, double tau,
                                     const std::vector<double>& xs, const std::vector<double>& ys,
                                     double decay_exponent = 40.0) {
    require_scalar_factor(spec);
    const auto nx = static_cast<Eigen::Index>(xs.size());
    const auto ny = static_cast<Eigen::Index>(ys.size());
    Eigen::MatrixXd F = Eigen::MatrixXd::Zero(ny, nx);
    if (tau <= 0.0) return F;
    double s_min = std::numeric_limits<double>::infinity();
    for (double y : ys) {
        const double s = state_map(spec, y);
        if (s > 0.0) s_min = std::min(s_min, s);
    }
    if (!std::isfinite(s_min)) s_min = 0.0;
    const std::size_t J = active_terms(sb, spec, tau, s_min, decay_exponent);
    if (J == 0) return F;

    std::vector<double> A(J), B(J);
    for (std::size_t j = 0; j < J; ++j) {
        const auto r = affine_coefficients(spec, tau, sb.lambda(j));
        A[j] = r.A;
        B[j] = r.B;
    }
    constexpr std::size_t chunk = 1024;
    Eigen::MatrixXd G, S;
    for (std::size_t j0 = 0; j0 < J; j0 += chunk) {
        const std::size_t m = std::min(chunk, J - j0);
        G.resize(ny, static_cast<Eigen::Index>(m));
        S.resize(static_cast<Eigen::Index>(m), nx);
        for (Eigen::Index a = 0; a < ny; ++a) {
            const double y = ys[static_cast<std::size_t>(a)];
            const double s = state_map(spec, y), ds = state_map_derivative(spec, y);
            for (std::size_t q = 0; q < m; ++q) {
                const std::size_t j = j0 + q;
                const double e = -A[j] - B[j] * s;
                G(a, static_cast<Eigen::Index>(q)) = e < kLogUnderflow ? 0.0 : -sb.weights[j] * B[j] * ds * std::exp(e);
            }
        }
        // d/dx [e^{x/2} sin(o u (x - anchor))] / e^{x/2} = sin/2 + o u cos, by angle recurrence in j
        const double u0 = sb.frequency(j0);
        for (Eigen::Index b = 0; b < nx; ++b) {
            const double z = sb.orient * (xs[static_cast<std::size_t>(b)] - sb.anchor);
            std::complex<double> e(std::cos(u0 * z), std::sin(u0 * z));
            const std::complex<double> step(std::cos(sb.du * z), std::sin(sb.du * z));
            for (std::size_t q = 0; q < m; ++q) {
                if (q % 64 == 0 && q > 0) {
                    const double u = sb.frequency(j0 + q);
                    e = {std::cos(u * z), std::sin(u * z)};
                }
                const double u = sb.frequency(j0 + q);
                S(static_cast<Eigen::Index>(q), b) = 0.5 * e.imag() + sb.orient * u * e.real();
                e *= step;
            }
        }
        F.noalias() += G * S;
    }
    for (Eigen::Index a = 0; a < ny; ++a) F.row(a) *= coupling(spec, ys[static_cast<std::size_t>(a)]);
    for (Eigen::Index b = 0; b < nx; ++b) F.col(b) *= std::exp(0.5 * xs[static_cast<std::size_t>(b)]);
    return F;
}

// ---- pointwise forcing ---------------------------------------------------------------------

inline constexpr double kBarrierExclusion = 1e-6;

// a(y) sqrt(v(y)) d_xy u0 at one point, discounted to t like `baseline_u0`.
inline double forcing_mixed_derivative(double t, double x, double y, const BarrierContract& contract,
                                       const MarketEnv& market, const ClockSpec& spec,
                                       const numerics::QuadratureConfig& qcfg = {}) {
    contract.validate();
    require_scalar_factor(spec);
    const double T = contract.maturity;
    if (!(t >= 0.0 && t <= T)) throw DomainError("forcing requires 0 <= t <= T");
    if (contract.has_lower() && !(x - std::log(contract.lower_barrier) > kBarrierExclusion))
        throw DomainError("forcing evaluated within 1e-6 of (or beyond) the lower barrier");
    if (contract.has_upper() && !(std::log(contract.upper_barrier) - x > kBarrierExclusion))
        throw DomainError("forcing evaluated within 1e-6 of (or beyond) the upper barrier");
    if (t == T) return 0.0;
    const double tau = T - t;
    const double s = state_map(spec, y), ds = state_map_derivative(spec, y);
    auto dphi = [&](double lambda) {
        const auto r = affine_coefficients(spec, tau, lambda);
        return -r.B * ds * exp_floor(-r.A - r.B * s);
    };
    const double K = contract.strike, k = std::log(K);
    double mixed = 0.0;
    if (contract.kind == BarrierKind::DownOutCall || contract.kind == BarrierKind::UpOutPut) {
        const bool doc = contract.kind == BarrierKind::DownOutCall;
        const double anchor = doc ? std::log(contract.lower_barrier) : std::log(contract.upper_barrier);
        const double o = doc ? 1.0 : -1.0;
        const double z = o * (x - anchor);
        const double zk = o * (k - anchor);
        if (!(zk > 0.0)) throw DomainError("leverage layer requires the strike inside the live region");
        auto f = [&](double u) {
            const double q = u * u + 0.25;
            return (0.5 * std::sin(u * z) + o * u * std::cos(u * z)) * std::sin(u * zk) / q * dphi(0.5 * q);
        };
        const auto r = numerics::integrate_semi_infinite(f, sclock::detail::panel_cap(z, zk), qcfg);
        mixed = -(2.0 / kPi) * std::sqrt(K) * std::exp(0.5 * x) * r.value;
    } else {
        const double l = std::log(contract.lower_barrier), h = std::log(contract.upper_barrier);
        const double a = h - l;
        const std::size_t n_max = 2000;
        const auto A = dko_coefficients(contract, n_max);
        double sum = 0.0;
        int small = 0;
        for (std::size_t n = 1; n <= n_max; ++n) {
            const double w = static_cast<double>(n) * kPi / a;
            const double lam = 0.5 * (w * w + 0.25);
            const double term = A[n - 1] == 0.0 ? 0.0
                                                : A[n - 1] * (0.5 * std::sin(w * (x - l)) + w * std::cos(w * (x - l))) *
                                                      dphi(lam);
            sum += term;
            if (std::abs(term) < 1e-14 * std::max(1.0, std::abs(sum))) {
                if (++small >= 3) break;
            } else {
                small = 0;
            }
        }
        mixed = (2.0 / a) * std::exp(0.5 * x) * sum;
    }
    return std::exp(-market.rate * tau) * coupling(spec, y) * mixed;
}

}  // namespace sclock::leverage
