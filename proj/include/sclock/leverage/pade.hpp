#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sclock/errors.hpp"

namespace sclock::leverage {

class PadeDegeneracyError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

struct TaylorEvaluation {
    double value = 0.0;
    std::vector<double> partial_sums;  // S_0..S_N
};

inline TaylorEvaluation taylor_eval(const std::vector<double>& coeffs, double rho) {
    if (coeffs.empty()) throw DomainError("no expansion coefficients");
    if (!(std::abs(rho) <= 1.0)) throw DomainError("Taylor evaluation requires |rho| <= 1");
    TaylorEvaluation out;
    double power = 1.0, sum = 0.0;
    for (double c : coeffs) {
        sum += c * power;
        out.partial_sums.push_back(sum);
        power *= rho;
    }
    // Horner for the reported value
    double h = 0.0;
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) h = h * rho + *it;
    out.value = h;
    return out;
}

// Distance from z to the real segment [-1, 1].
inline double distance_to_unit_segment(std::complex<double> z) {
    const double re = std::abs(z.real());
    return re <= 1.0 ? std::abs(z.imag()) : std::hypot(re - 1.0, z.imag());
}

struct PadeApproximant {
    std::size_t L = 0, M = 0;
    std::vector<double> numerator;    // a_0..a_L
    std::vector<double> denominator;  // 1, b_1..b_M
    std::vector<std::complex<double>> poles;
    double pole_proximity = std::numeric_limits<double>::infinity();
    double condition = 1.0;

    double operator()(double rho) const {
        double p = 0.0, q = 0.0;
        for (auto it = numerator.rbegin(); it != numerator.rend(); ++it) p = p * rho + *it;
        for (auto it = denominator.rbegin(); it != denominator.rend(); ++it) q = q * rho + *it;
        return p / q;
    }

    // Taylor coefficients of P/Q through `order`.
    std::vector<double> taylor(std::size_t order) const {
        std::vector<double> c(order + 1, 0.0);
        for (std::size_t k = 0; k <= order; ++k) {
            double v = k < numerator.size() ? numerator[k] : 0.0;
            for (std::size_t j = 1; j <= std::min(k, M); ++j) v -= denominator[j] * c[k - j];
            c[k] = v;
        }
        return c;
    }
};

inline PadeApproximant pade_fit(const std::vector<double>& coeffs, std::size_t L, std::size_t M,
                                double max_condition = 1e12) {
    if (L + M + 1 > coeffs.size())
        throw DomainError("Pade [" + std::to_string(L) + "/" + std::to_string(M) + "] needs " +
                          std::to_string(L + M + 1) + " coefficients, have " + std::to_string(coeffs.size()));
    auto c = [&](long i) { return i < 0 ? 0.0 : coeffs[static_cast<std::size_t>(i)]; };
    PadeApproximant p;
    p.L = L;
    p.M = M;
    p.denominator.assign(M + 1, 0.0);
    p.denominator[0] = 1.0;
    if (M > 0) {
        const auto m = static_cast<Eigen::Index>(M);
        Eigen::MatrixXd H(m, m);
        Eigen::VectorXd rhs(m);
        for (Eigen::Index i = 0; i < m; ++i) {
            for (Eigen::Index j = 0; j < m; ++j) H(i, j) = c(static_cast<long>(L) + i - j);
            rhs(i) = -c(static_cast<long>(L) + i + 1);
        }
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
        const auto& sv = svd.singularValues();
        const double smax = sv(0), smin = sv(m - 1);
        p.condition = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
        if (!(p.condition <= max_condition))
            throw PadeDegeneracyError("Pade [" + std::to_string(L) + "/" + std::to_string(M) +
                                      "] system is ill-conditioned (condition " + std::to_string(p.condition) +
                                      "); use a lower order");
        const Eigen::VectorXd b = svd.solve(rhs);
        for (Eigen::Index j = 0; j < m; ++j) p.denominator[static_cast<std::size_t>(j) + 1] = b(j);
    }
    p.numerator.assign(L + 1, 0.0);
    for (std::size_t i = 0; i <= L; ++i) {
        double v = 0.0;
        for (std::size_t j = 0; j <= std::min(i, M); ++j) v += p.denominator[j] * coeffs[i - j];
        p.numerator[i] = v;
    }
    // poles: roots of 1 + b_1 r + ... + b_M r^M
    std::size_t deg = M;
    while (deg > 0 && p.denominator[deg] == 0.0) --deg;
    if (deg > 0) {
        const auto d = static_cast<Eigen::Index>(deg);
        Eigen::MatrixXd C = Eigen::MatrixXd::Zero(d, d);
        for (Eigen::Index i = 1; i < d; ++i) C(i, i - 1) = 1.0;
        for (Eigen::Index i = 0; i < d; ++i) C(i, d - 1) = -p.denominator[static_cast<std::size_t>(i)] / p.denominator[deg];
        Eigen::EigenSolver<Eigen::MatrixXd> es(C);
        for (Eigen::Index i = 0; i < d; ++i) {
            p.poles.push_back(es.eigenvalues()(i));
            p.pole_proximity = std::min(p.pole_proximity, distance_to_unit_segment(es.eigenvalues()(i)));
        }
    }
    return p;
}

struct FallbackPolicy {
    double pole_threshold = 0.2;
    double lower_bound = 0.0;
    std::optional<double> upper_bound;  // e.g. 1 for survival probabilities
};

struct FallbackResult {
    double value = 0.0;
    std::string route;
    std::vector<std::string> rejected;  // candidates skipped, with reasons
};

// Highest-order near-diagonal Pade whose poles stay clear of [-1, 1] and whose value is
// admissible; otherwise lower orders, then the Taylor sum.
inline FallbackResult evaluate_with_fallback(const std::vector<double>& coeffs, double rho,
                                             const FallbackPolicy& policy = {}) {
    if (coeffs.empty()) throw DomainError("no expansion coefficients");
    if (!(std::abs(rho) <= 1.0)) throw DomainError("fallback evaluation requires |rho| <= 1");
    FallbackResult out;
    if (rho == 0.0) {
        out.value = coeffs[0];
        out.route = "taylor-degenerate";
        return out;
    }
    auto admissible = [&](double v) {
        if (!std::isfinite(v) || v < policy.lower_bound) return false;
        if (policy.upper_bound && v > *policy.upper_bound) return false;
        return true;
    };
    const std::size_t N = coeffs.size() - 1;
    for (std::size_t order = N; order >= 2; --order) {
        const std::size_t M = order / 2, L = order - M;
        const std::string name = "pade[" + std::to_string(L) + "/" + std::to_string(M) + "]";
        try {
            const auto p = pade_fit(coeffs, L, M);
            if (!(p.pole_proximity > policy.pole_threshold)) {
                out.rejected.push_back(name + ": pole within " + std::to_string(p.pole_proximity) + " of [-1,1]");
                continue;
            }
            const double v = p(rho);
            if (!admissible(v)) {
                out.rejected.push_back(name + ": value " + std::to_string(v) + " violates bounds");
                continue;
            }
            out.value = v;
            out.route = name;
            return out;
        } catch (const PadeDegeneracyError& e) {
            out.rejected.push_back(name + ": " + e.what());
        }
    }
    const double t = taylor_eval(coeffs, rho).value;
    if (admissible(t)) {
        out.value = t;
        out.route = "taylor";
    } else {
        out.value = std::clamp(t, policy.lower_bound, policy.upper_bound.value_or(std::max(t, policy.lower_bound)));
        out.route = "taylor-clamped";
    }
    return out;
}

}  // namespace sclock::leverage
