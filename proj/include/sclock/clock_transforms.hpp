#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "sclock/clock.hpp"
#include "sclock/errors.hpp"
#include "sclock/numerics/ode.hpp"

namespace sclock {

// Exponent below which exp() is treated as zero.
inline constexpr double kLogUnderflow = -700.0;

// Coefficients of an exponential-affine transform: Phi = exp(-A - B * state).
template <class Scalar = double>
struct RiccatiSolution {
    Scalar lambda{};
    double horizon = 0.0;
    Scalar A{};
    Scalar B{};
};

inline double exp_floor(double log_value) {
    return log_value < kLogUnderflow ? 0.0 : std::exp(log_value);
}

namespace detail {

inline void check_lambda_horizon(double lambda, double horizon) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
        throw DomainError("Laplace argument must be finite and >= 0 (got " + std::to_string(lambda) + ")");
    if (!(horizon > 0.0) || !std::isfinite(horizon))
        throw DomainError("horizon must be positive (got " + std::to_string(horizon) + ")");
}

inline void check_complex_lambda(const std::complex<double>& lambda, double horizon) {
    if (!(lambda.real() >= 0.0) || !std::isfinite(lambda.real()) || !std::isfinite(lambda.imag()))
        throw DomainError("complex Laplace argument must have non-negative real part");
    if (!(horizon > 0.0)) throw DomainError("horizon must be positive");
}

}  // namespace detail

// Constant-coefficient CIR Riccati system
//   B' = lambda - kappa B - xi^2 B^2 / 2,  A' = kappa theta B,  A(0) = B(0) = 0,
// solved in hyperbolic form. Scalar may be complex (analytic continuation); the
// logarithm is taken of a quantity that stays in the right half-plane for
// Re(lambda) >= 0 so the principal branch is continuous along u-sweeps.
template <class Scalar>
RiccatiSolution<Scalar> cir_riccati_closed_form(double kappa, double theta, double xi, double tau,
                                                Scalar lambda) {
    RiccatiSolution<Scalar> out;
    out.lambda = lambda;
    out.horizon = tau;
    if (lambda == Scalar(0.0) || tau == 0.0) return out;
    const double xi2 = xi * xi;
    const Scalar gamma = std::sqrt(Scalar(kappa * kappa) + 2.0 * xi2 * lambda);
    const Scalar e = std::exp(-gamma * tau);
    const Scalar gk = gamma + kappa;
    // gamma - kappa written without cancellation
    const Scalar d = 2.0 * xi2 * lambda / gk;
    out.B = 2.0 * lambda * (1.0 - e) / (gk + d * e);
    // A = (2 kappa theta / xi^2) [ d tau / 2 + log(1 - xi^2 r) ], r = lambda (1 - e) / (gamma (gamma + kappa))
    const Scalar r = lambda * (1.0 - e) / (gamma * gk);
    const Scalar x = xi2 * r;
    const Scalar log_ratio = std::abs(x) < 1e-5 ? -(1.0 + x * (0.5 + x * (1.0 / 3.0 + 0.25 * x))) : std::log(1.0 - x) / x;
    out.A = 2.0 * kappa * theta * (lambda * tau / gk + r * log_ratio);
    return out;
}

namespace detail {

struct CirSegment {
    double kappa, theta, xi;
    double tau_start, tau_end;  // in time-to-go coordinates
};

// Segments of a (possibly piecewise) CIR clock over calendar window [t, T], expressed
// in time-to-go tau = T - s and ordered by increasing tau.
inline std::vector<CirSegment> cir_segments(const ClockSpec& spec, double t, double T) {
    std::vector<CirSegment> segs;
    if (const auto* c = std::get_if<CirClock>(&spec)) {
        segs.push_back({c->kappa, c->theta, c->xi, 0.0, T - t});
        return segs;
    }
    const auto& c = std::get<TimeDepCirClock>(spec);
    if (c.segment_ends.back() < T - 1e-12)
        throw DomainError("time-dependent CIR segments do not cover the horizon T=" + std::to_string(T));
    // walk calendar segments backwards from T to t
    double start = 0.0;
    std::vector<CirSegment> forward;
    for (std::size_t i = 0; i < c.segment_ends.size(); ++i) {
        const double lo = std::max(start, t);
        const double hi = std::min(c.segment_ends[i], T);
        if (hi > lo) forward.push_back({c.kappa[i], c.theta[i], c.xi[i], T - hi, T - lo});
        start = c.segment_ends[i];
    }
    for (auto it = forward.rbegin(); it != forward.rend(); ++it) segs.push_back(*it);
    return segs;
}

template <class Scalar>
RiccatiSolution<Scalar> cir_riccati_numeric_impl(const ClockSpec& spec, double t, double T, Scalar lambda,
                                                 const numerics::OdeTolerance& tol) {
    RiccatiSolution<Scalar> out;
    out.lambda = lambda;
    out.horizon = T - t;
    if (lambda == Scalar(0.0)) return out;
    std::array<Scalar, 2> state{Scalar(0.0), Scalar(0.0)};  // {B, A}
    std::size_t index = 0;
    for (const auto& seg : cir_segments(spec, t, T)) {
        auto rhs = [&seg, lambda](double, const std::array<Scalar, 2>& y) {
            const Scalar B = y[0];
            return std::array<Scalar, 2>{lambda - seg.kappa * B - 0.5 * seg.xi * seg.xi * B * B,
                                         Scalar(seg.kappa * seg.theta) * B};
        };
        numerics::OdeTolerance local = tol;
        local.initial_step = std::min(tol.initial_step, 0.1 / (1.0 + std::abs(lambda)));
        state = numerics::integrate_dopri<Scalar, 2>(
            rhs, state, seg.tau_start, seg.tau_end, local,
            "CIR Riccati, lambda=" + std::to_string(std::abs(lambda)) + ", segment " + std::to_string(index++));
    }
    out.B = state[0];
    out.A = state[1];
    return out;
}

template <class Scalar>
RiccatiSolution<Scalar> squared_ou_riccati_impl(const SquaredOuClock& c, double tau, Scalar lambda,
                                                const numerics::OdeTolerance& tol) {
    RiccatiSolution<Scalar> out;
    out.lambda = lambda;
    out.horizon = tau;
    if (lambda == Scalar(0.0)) return out;
    const double a = c.alpha, s2 = c.sigma * c.sigma;
    auto rhs = [a, s2, lambda](double, const std::array<Scalar, 2>& y) {
        const Scalar B = y[0];
        return std::array<Scalar, 2>{lambda - 2.0 * a * B - 2.0 * s2 * B * B, Scalar(s2) * B};
    };
    numerics::OdeTolerance local = tol;
    local.initial_step = std::min(tol.initial_step, 0.1 / (1.0 + std::abs(lambda)));
    const auto y = numerics::integrate_dopri<Scalar, 2>(rhs, {Scalar(0.0), Scalar(0.0)}, 0.0, tau, local,
                                                        "squared-OU Riccati, lambda=" +
                                                            std::to_string(std::abs(lambda)));
    out.B = y[0];
    out.A = y[1];
    return out;
}

template <class Scalar>
Scalar markov_log_phi_impl(const MarkovSwitchingClock& c, double tau, Scalar lambda,
                           std::optional<std::size_t> state) {
    using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    const auto m = static_cast<Eigen::Index>(c.levels.size());
    Mat M(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < m; ++j)
            M(i, j) = Scalar(c.generator[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]) -
                      (i == j ? lambda * c.levels[static_cast<std::size_t>(i)] : Scalar(0.0));
    const Mat E = (M * tau).exp();
    Scalar value(0.0);
    if (state) {
        if (*state >= c.levels.size()) throw DomainError("Markov state index out of range");
        for (Eigen::Index j = 0; j < m; ++j) value += E(static_cast<Eigen::Index>(*state), j);
    } else {
        for (Eigen::Index i = 0; i < m; ++i)
            for (Eigen::Index j = 0; j < m; ++j) value += c.initial_dist[static_cast<std::size_t>(i)] * E(i, j);
    }
    if constexpr (std::is_same_v<Scalar, double>) {
        // expm of a sub-generator is non-negative; tolerate rounding at the edges only
        if (value > 1.0 && value - 1.0 <= 1e-12) value = 1.0;
        if (value < 0.0 && value >= -1e-12) value = 0.0;
        if (value < 0.0 || value > 1.0)
            throw NumericalError("Markov transform left [0,1]: " + std::to_string(value));
        return value == 0.0 ? -std::numeric_limits<double>::infinity() : std::log(value);
    } else {
        return std::log(value);
    }
}

}  // namespace detail

// ---- unconditional transforms --------------------------------------------------

inline double phi_cir_closed_form(const CirClock& c, double T, double lambda) {
    detail::check_lambda_horizon(lambda, T);
    const auto r = cir_riccati_closed_form<double>(c.kappa, c.theta, c.xi, T, lambda);
    return exp_floor(-r.A - r.B * c.v0);
}

inline RiccatiSolution<double> riccati_numeric(const ClockSpec& spec, double t, double T, double lambda,
                                               const numerics::OdeTolerance& tol = {}) {
    detail::check_lambda_horizon(lambda, T - t);
    if (!std::holds_alternative<CirClock>(spec) && !std::holds_alternative<TimeDepCirClock>(spec))
        throw UnsupportedFamilyError("numeric CIR Riccati requires a CIR or time-dependent CIR clock");
    return detail::cir_riccati_numeric_impl<double>(spec, t, T, lambda, tol);
}

inline double phi_riccati_numeric(const ClockSpec& spec, double T, double lambda,
                                  const numerics::OdeTolerance& tol = {}) {
    const auto r = riccati_numeric(spec, 0.0, T, lambda, tol);
    return exp_floor(-r.A - r.B * initial_state(spec));
}

inline double phi_squared_ou(const SquaredOuClock& c, double T, double lambda,
                             const numerics::OdeTolerance& tol = {}) {
    detail::check_lambda_horizon(lambda, T);
    const auto r = detail::squared_ou_riccati_impl<double>(c, T, lambda, tol);
    return exp_floor(-r.A - r.B * c.y0 * c.y0);
}

inline double phi_markov_switching(const MarkovSwitchingClock& c, double T, double lambda) {
    detail::check_lambda_horizon(lambda, T);
    return exp_floor(detail::markov_log_phi_impl<double>(c, T, lambda, std::nullopt));
}

// log Phi_{t,T}(lambda; y) for every family. `state` overrides the initial factor
// state (v for CIR, Y for squared OU, regime index for Markov).
inline double log_phi(const ClockSpec& spec, double t, double T, double lambda,
                      std::optional<double> state = std::nullopt) {
    detail::check_lambda_horizon(lambda, T - t);
    if (!(t >= 0.0)) throw DomainError("conditioning time must be >= 0");
    if (lambda == 0.0) return 0.0;
    return std::visit(
        [&](const auto& c) -> double {
            using C = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<C, CirClock>) {
                const auto r = cir_riccati_closed_form<double>(c.kappa, c.theta, c.xi, T - t, lambda);
                return -r.A - r.B * state.value_or(c.v0);
            } else if constexpr (std::is_same_v<C, TimeDepCirClock>) {
                const auto r = detail::cir_riccati_numeric_impl<double>(spec, t, T, lambda, {});
                return -r.A - r.B * state.value_or(c.v0);
            } else if constexpr (std::is_same_v<C, SquaredOuClock>) {
                const auto r = detail::squared_ou_riccati_impl<double>(c, T - t, lambda, {});
                const double y = state.value_or(c.y0);
                return -r.A - r.B * y * y;
            } else if constexpr (std::is_same_v<C, MarkovSwitchingClock>) {
                std::optional<std::size_t> idx;
                if (state) {
                    if (*state < 0.0 || std::floor(*state) != *state)
                        throw DomainError("Markov conditional state must be a regime index");
                    idx = static_cast<std::size_t>(*state);
                }
                return detail::markov_log_phi_impl<double>(c, T - t, lambda, idx);
            } else {
                if (state) throw UnsupportedFamilyError("two-factor clock has a vector state; scalar conditioning unsupported");
                const auto f = cir_riccati_closed_form<double>(c.fast.kappa, c.fast.theta, c.fast.xi, T - t, lambda);
                const auto s = cir_riccati_closed_form<double>(c.slow.kappa, c.slow.theta, c.slow.xi, T - t, lambda);
                return -f.A - f.B * c.fast.v0 - s.A - s.B * c.slow.v0;
            }
        },
        spec);
}

inline double phi(const ClockSpec& spec, double T, double lambda) {
    return exp_floor(log_phi(spec, 0.0, T, lambda));
}

// Analytic continuation to complex arguments with Re(lambda) >= 0, in log form.
inline std::complex<double> log_phi_complex(const ClockSpec& spec, double T, std::complex<double> lambda) {
    using cd = std::complex<double>;
    detail::check_complex_lambda(lambda, T);
    if (lambda == cd(0.0)) return cd(0.0);
    return std::visit(
        [&](const auto& c) -> cd {
            using C = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<C, CirClock>) {
                const auto r = cir_riccati_closed_form<cd>(c.kappa, c.theta, c.xi, T, lambda);
                return -r.A - r.B * c.v0;
            } else if constexpr (std::is_same_v<C, TimeDepCirClock>) {
                try {
                    const auto r = detail::cir_riccati_numeric_impl<cd>(spec, 0.0, T, lambda, {});
                    return -r.A - r.B * c.v0;
                } catch (const IntegrationFailure& e) {
                    throw IntegrationFailure(std::string("complex Riccati continuation failed: ") + e.what());
                }
            } else if constexpr (std::is_same_v<C, SquaredOuClock>) {
                try {
                    const auto r = detail::squared_ou_riccati_impl<cd>(c, T, lambda, {});
                    return -r.A - r.B * (c.y0 * c.y0);
                } catch (const IntegrationFailure& e) {
                    throw IntegrationFailure(std::string("complex Riccati continuation failed: ") + e.what());
                }
            } else if constexpr (std::is_same_v<C, MarkovSwitchingClock>) {
                return detail::markov_log_phi_impl<cd>(c, T, lambda, std::nullopt);
            } else {
                const auto f = cir_riccati_closed_form<cd>(c.fast.kappa, c.fast.theta, c.fast.xi, T, lambda);
                const auto s = cir_riccati_closed_form<cd>(c.slow.kappa, c.slow.theta, c.slow.xi, T, lambda);
                return -f.A - f.B * c.fast.v0 - s.A - s.B * c.slow.v0;
            }
        },
        spec);
}

// ---- conditional transform with state derivative -------------------------------

struct ConditionalTransform {
    double value = 1.0;                     // Phi_{t,T}(lambda; y)
    std::optional<double> state_derivative; // d/dy Phi_{t,T}(lambda; y)
};

// Exponential-affine/quadratic coefficients of the conditional transform for the
// families that admit them: Phi = exp(-A - B s(y)), s(y) = y (CIR) or y^2 (OU).
inline RiccatiSolution<double> conditional_coefficients(const ClockSpec& spec, double t, double T, double lambda) {
    detail::check_lambda_horizon(lambda, T - t);
    return std::visit(
        [&](const auto& c) -> RiccatiSolution<double> {
            using C = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<C, CirClock>) {
                return cir_riccati_closed_form<double>(c.kappa, c.theta, c.xi, T - t, lambda);
            } else if constexpr (std::is_same_v<C, TimeDepCirClock>) {
                return detail::cir_riccati_numeric_impl<double>(spec, t, T, lambda, {});
            } else if constexpr (std::is_same_v<C, SquaredOuClock>) {
                return detail::squared_ou_riccati_impl<double>(c, T - t, lambda, {});
            } else {
                throw UnsupportedFamilyError(std::string("no scalar-state Riccati coefficients for family ") +
                                             family_name(spec));
            }
        },
        spec);
}

inline ConditionalTransform phi_conditional(const ClockSpec& spec, double t, double T, double lambda, double y) {
    if (!(t >= 0.0 && t < T)) throw DomainError("conditional transform requires 0 <= t < T");
    detail::check_lambda_horizon(lambda, T - t);
    ConditionalTransform out;
    if (std::holds_alternative<MarkovSwitchingClock>(spec)) {
        out.value = exp_floor(log_phi(spec, t, T, lambda, y));
        return out;  // derivative undefined on a discrete state
    }
    if (std::holds_alternative<TwoFactorCirClock>(spec))
        throw UnsupportedFamilyError("two-factor clock has a vector state; scalar conditioning unsupported");
    const bool quadratic = std::holds_alternative<SquaredOuClock>(spec);
    if (!quadratic && y < 0.0) throw DomainError("CIR variance state must be >= 0");
    const auto r = conditional_coefficients(spec, t, T, lambda);
    const double s = quadratic ? y * y : y;
    const double ds = quadratic ? 2.0 * y : 1.0;
    out.value = exp_floor(-r.A - r.B * s);
    out.state_derivative = -r.B * ds * out.value;
    return out;
}

// The transform as a callable lambda -> Phi for the pricing kernels.
struct ClockLaplace {
    ClockSpec spec;
    double t;
    double T;
    std::optional<double> state;
    double operator()(double lambda) const { return exp_floor(log_phi(spec, t, T, lambda, state)); }
};

inline ClockLaplace laplace_of(const ClockSpec& spec, double T) { return {spec, 0.0, T, std::nullopt}; }

inline ClockLaplace conditional_laplace_of(const ClockSpec& spec, double t, double T, double y) {
    return {spec, t, T, y};
}

}  // namespace sclock
