#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "sclock/barrier.hpp"
#include "sclock/black.hpp"
#include "sclock/clock_transforms.hpp"
#include "sclock/errors.hpp"

namespace sclock {

enum class OptionKind { Call, Put };

struct VanillaQuote {
    double maturity = 1.0;
    double strike = 100.0;
    OptionKind kind = OptionKind::Call;
    double value = 0.0;     // market price (or model price once filled)
    double implied_vol = 0.0;
    double weight = 1.0;

    void validate() const {
        if (!(maturity > 0.0) || !(strike > 0.0)) throw DomainError("vanilla quote needs K > 0 and T > 0");
        if (!(weight >= 0.0)) throw DomainError("vanilla quote weight must be >= 0");
    }
};

// E[exp(i u X_T)] for X_T = x0 - Gamma/2 + B_Gamma. Complex u is allowed as long as
// the Laplace argument keeps a non-negative real part.
inline std::complex<double> char_fn(const ClockSpec& spec, double T, double x0, std::complex<double> u) {
    using cd = std::complex<double>;
    const cd i(0.0, 1.0);
    const cd lambda = 0.5 * u * u - i * kBeta * u;
    cd lp;
    try {
        lp = log_phi_complex(spec, T, lambda);
    } catch (const NumericalError& e) {
        throw NumericalError("characteristic function continuation failed at u=" + std::to_string(u.real()) + ": " +
                             e.what());
    }
    return std::exp(i * u * x0 + lp);
}

struct CosConfig {
    std::size_t terms = 512;
    std::size_t max_terms = 1u << 15;
    double range_width = 12.0;
    double stability_tol = 1e-8;
    double cumulant_step = 1e-5;
};

struct LogPriceCumulants {
    double c1 = 0.0;
    double c2 = 0.0;
};

// Cumulants of X_T from one-sided differences of log Phi at 0.
inline LogPriceCumulants log_price_cumulants(const ClockSpec& spec, double T, double x0, double h = 1e-5) {
    const double f1 = log_phi(spec, 0.0, T, h);
    const double f2 = log_phi(spec, 0.0, T, 2.0 * h);
    const double mean_clock = -(4.0 * f1 - f2) / (2.0 * h);
    const double var_clock = std::max((f2 - 2.0 * f1) / (h * h), 0.0);
    LogPriceCumulants c;
    c.c1 = x0 - 0.5 * mean_clock;
    c.c2 = mean_clock + 0.25 * var_clock;
    return c;
}

// COS expansion for one (spec, T, forward). Characteristic-function samples are shared
// across strikes and extended lazily when a price needs more terms.
class CosPricer {
public:
    CosPricer(ClockSpec spec, const MarketEnv& market, double T, CosConfig cfg = {})
        : spec_(std::move(spec)), T_(T), cfg_(cfg) {
        validate(spec_);
        market.validate();
        if (!(T > 0.0)) throw DomainError("COS pricer requires T > 0");
        forward_ = market.forward(T);
        discount_ = market.discount(T);
        x0_ = std::log(forward_);
        const auto cum = log_price_cumulants(spec_, T_, x0_, cfg_.cumulant_step);
        const double half = cfg_.range_width * std::sqrt(std::max(cum.c2, 1e-12));
        a_ = cum.c1 - half;
        b_ = cum.c1 + half;
    }

    double forward() const { return forward_; }
    double discount() const { return discount_; }
    double lower() const { return a_; }
    double upper() const { return b_; }

    // Put by COS with `n` terms; undiscounted.
    double put_terms(double strike, std::size_t n) const {
        ensure(n);
        const double k = std::log(strike);
        if (k <= a_) return 0.0;
        const double c = a_, d = std::min(k, b_);
        const double width = b_ - a_;
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double u = static_cast<double>(j) * kPi / width;
            const double chi = chi_k(u, c, d);
            const double psi = j == 0 ? (d - c) : (std::sin(u * (d - a_)) - std::sin(u * (c - a_))) / u;
            const double Vk = 2.0 / width * (strike * psi - chi);
            const double term = samples_[j] * Vk;
            sum += j == 0 ? 0.5 * term : term;
        }
        return sum;
    }

    double price(double strike, OptionKind kind) const {
        if (!(strike > 0.0)) throw DomainError("strike must be positive");
        std::size_t n = cfg_.terms;
        double prev = put_terms(strike, n);
        for (;;) {
            const std::size_t next = 2 * n;
            if (next > cfg_.max_terms)
                throw ConvergenceError("COS price unstable under term doubling", prev, put_terms(strike, n / 2));
            const double cur = put_terms(strike, next);
            if (std::abs(cur - prev) <= cfg_.stability_tol * std::max(1.0, std::abs(cur))) {
                double put = std::max(cur, 0.0);
                if (kind == OptionKind::Put) return discount_ * put;
                return discount_ * std::max(put + forward_ - strike, 0.0);
            }
            prev = cur;
            n = next;
        }
    }

private:
    double chi_k(double u, double c, double d) const {
        const double ec = std::exp(c), ed = std::exp(d);
        return (std::cos(u * (d - a_)) * ed - std::cos(u * (c - a_)) * ec + u * std::sin(u * (d - a_)) * ed -
                u * std::sin(u * (c - a_)) * ec) /
               (1.0 + u * u);
    }

    void ensure(std::size_t n) const {
        std::lock_guard<std::mutex> lock(*mutex_);
        const double width = b_ - a_;
        for (std::size_t j = samples_.size(); j < n; ++j) {
            const double u = static_cast<double>(j) * kPi / width;
            const auto cf = char_fn(spec_, T_, x0_, std::complex<double>(u, 0.0));
            samples_.push_back((cf * std::exp(std::complex<double>(0.0, -u * a_))).real());
        }
    }

    ClockSpec spec_;
    double T_;
    CosConfig cfg_;
    double forward_ = 0.0, discount_ = 1.0, x0_ = 0.0, a_ = 0.0, b_ = 0.0;
    std::unique_ptr<std::mutex> mutex_ = std::make_unique<std::mutex>();
    mutable std::vector<double> samples_;
};

inline double cos_vanilla_price(const ClockSpec& spec, const MarketEnv& market, const VanillaQuote& quote,
                                const CosConfig& cfg = {}) {
    quote.validate();
    return CosPricer(spec, market, quote.maturity, cfg).price(quote.strike, quote.kind);
}

inline double implied_vol(double price, const MarketEnv& market, const VanillaQuote& quote) {
    quote.validate();
    market.validate();
    const double T = quote.maturity;
    return black_implied_vol(price, market.forward(T), quote.strike, T, market.discount(T),
                             quote.kind == OptionKind::Call);
}

// ---- variance swaps ---------------------------------------------------------------

namespace detail {

inline double cir_mean_integral(double kappa, double theta, double v0, double T) {
    return theta * T + (v0 - theta) * (-std::expm1(-kappa * T)) / kappa;
}

}  // namespace detail

// E[Gamma_T] for every family.
inline double expected_clock(const ClockSpec& spec, double T) {
    if (!(T > 0.0)) throw DomainError("horizon must be positive");
    return std::visit(
        [&](const auto& c) -> double {
            using C = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<C, CirClock>) {
                return detail::cir_mean_integral(c.kappa, c.theta, c.v0, T);
            } else if constexpr (std::is_same_v<C, TimeDepCirClock>) {
                double m = c.v0, total = 0.0, start = 0.0;
                for (std::size_t i = 0; i < c.segment_ends.size() && start < T; ++i) {
                    const double len = std::min(c.segment_ends[i], T) - start;
                    total += detail::cir_mean_integral(c.kappa[i], c.theta[i], m, len);
                    m = c.theta[i] + (m - c.theta[i]) * std::exp(-c.kappa[i] * len);
                    start = c.segment_ends[i];
                }
                if (start < T - 1e-12) throw DomainError("time-dependent CIR segments do not cover the horizon");
                return total;
            } else if constexpr (std::is_same_v<C, SquaredOuClock>) {
                const double two_a = 2.0 * c.alpha;
                const double decay = -std::expm1(-two_a * T) / two_a;
                const double stat = c.sigma * c.sigma / two_a;
                return c.y0 * c.y0 * decay + stat * (T - decay);
            } else if constexpr (std::is_same_v<C, MarkovSwitchingClock>) {
                // integral of alpha^T e^{Qs} levels via the augmented generator
                const auto m = static_cast<Eigen::Index>(c.levels.size());
                Eigen::MatrixXd M = Eigen::MatrixXd::Zero(m + 1, m + 1);
                for (Eigen::Index i = 0; i < m; ++i) {
                    for (Eigen::Index j = 0; j < m; ++j)
                        M(i, j) = c.generator[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
                    M(i, m) = c.levels[static_cast<std::size_t>(i)];
                }
                const Eigen::MatrixXd E = (M * T).exp();
                double total = 0.0;
                for (Eigen::Index i = 0; i < m; ++i) total += c.initial_dist[static_cast<std::size_t>(i)] * E(i, m);
                return total;
            } else {
                return detail::cir_mean_integral(c.fast.kappa, c.fast.theta, c.fast.v0, T) +
                       detail::cir_mean_integral(c.slow.kappa, c.slow.theta, c.slow.v0, T);
            }
        },
        spec);
}

// Annualised variance-swap strike (1/T) int_0^T E[v_s] ds.
inline double variance_swap_strike(const ClockSpec& spec, double T) {
    validate(spec);
    return expected_clock(spec, T) / T;
}

}  // namespace sclock
