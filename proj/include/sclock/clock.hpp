#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <sstream>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "sclock/errors.hpp"

namespace sclock {

// Square-root activity: dv = kappa (theta - v) dt + xi sqrt(v) dZ.
struct CirClock {
    double kappa;
    double theta;
    double xi;
    double v0;
};

// CIR with piecewise-constant coefficients. Segment i covers calendar times
// (segment_ends[i-1], segment_ends[i]] with an implicit start at 0.
struct TimeDepCirClock {
    std::vector<double> segment_ends;
    std::vector<double> kappa;
    std::vector<double> theta;
    std::vector<double> xi;
    double v0;
};

// Gaussian OU factor dY = -alpha Y dt + sigma dZ with activity v = Y^2.
struct SquaredOuClock {
    double alpha;
    double sigma;
    double y0;
};

// Finite-state regime chain with activity level per state.
struct MarkovSwitchingClock {
    std::vector<std::vector<double>> generator;
    std::vector<double> levels;
    std::vector<double> initial_dist;
};

// Two independent CIR factors, v = v_fast + v_slow. The transform factorises.
struct TwoFactorCirClock {
    CirClock fast;
    CirClock slow;
};

using ClockSpec =
    std::variant<CirClock, TimeDepCirClock, SquaredOuClock, MarkovSwitchingClock, TwoFactorCirClock>;

inline const char* family_name(const ClockSpec& spec) {
    static constexpr const char* names[] = {"cir", "cir-td", "sqou", "markov", "cir2"};
    return names[spec.index()];
}

namespace detail {

inline void require_positive(double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw DomainError(std::string(name) + " must be positive and finite");
}

inline void validate_cir(const CirClock& c, const char* prefix = "") {
    const std::string p(prefix);
    require_positive(c.kappa, (p + "kappa").c_str());
    require_positive(c.theta, (p + "theta").c_str());
    require_positive(c.xi, (p + "xi").c_str());
    require_positive(c.v0, (p + "v0").c_str());
}

}  // namespace detail

inline void validate(const ClockSpec& spec) {
    std::visit(
        [](const auto& c) {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, CirClock>) {
                detail::validate_cir(c);
            } else if constexpr (std::is_same_v<T, TimeDepCirClock>) {
                const auto n = c.segment_ends.size();
                if (n == 0) throw DomainError("time-dependent CIR needs at least one segment");
                if (c.kappa.size() != n || c.theta.size() != n || c.xi.size() != n)
                    throw DomainError("time-dependent CIR coefficient arrays must match segment count");
                double prev = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    if (!(c.segment_ends[i] > prev))
                        throw DomainError("segment ends must be strictly increasing and positive");
                    prev = c.segment_ends[i];
                    detail::require_positive(c.kappa[i], "kappa_i");
                    detail::require_positive(c.theta[i], "theta_i");
                    detail::require_positive(c.xi[i], "xi_i");
                }
                detail::require_positive(c.v0, "v0");
            } else if constexpr (std::is_same_v<T, SquaredOuClock>) {
                detail::require_positive(c.alpha, "alpha");
                detail::require_positive(c.sigma, "sigma");
                if (!std::isfinite(c.y0)) throw DomainError("y0 must be finite");
            } else if constexpr (std::is_same_v<T, MarkovSwitchingClock>) {
                const auto m = c.levels.size();
                if (m == 0) throw DomainError("Markov clock needs at least one state");
                if (c.generator.size() != m || c.initial_dist.size() != m)
                    throw DomainError("Markov clock dimension mismatch between generator, levels and initial_dist");
                double total = 0.0;
                for (std::size_t i = 0; i < m; ++i) {
                    if (c.generator[i].size() != m)
                        throw DomainError("Markov generator must be square");
                    double row = 0.0;
                    for (std::size_t j = 0; j < m; ++j) {
                        if (i != j && c.generator[i][j] < 0.0)
                            throw DomainError("Markov generator off-diagonals must be non-negative");
                        row += c.generator[i][j];
                    }
                    if (std::abs(row) > 1e-12) throw DomainError("Markov generator rows must sum to 0");
                    if (!(c.levels[i] >= 0.0)) throw DomainError("activity levels must be non-negative");
                    if (!(c.initial_dist[i] >= 0.0)) throw DomainError("initial distribution must be non-negative");
                    total += c.initial_dist[i];
                }
                if (std::abs(total - 1.0) > 1e-12) throw DomainError("initial distribution must sum to 1");
            } else {
                detail::validate_cir(c.fast, "fast.");
                detail::validate_cir(c.slow, "slow.");
            }
        },
        spec);
}

// Non-fatal diagnostics (Feller violations).
inline std::vector<std::string> warnings(const ClockSpec& spec) {
    std::vector<std::string> out;
    auto feller = [&out](double kappa, double theta, double xi, const std::string& where) {
        if (!(2.0 * kappa * theta > xi * xi))
            out.push_back("Feller condition 2*kappa*theta > xi^2 violated" + where);
    };
    std::visit(
        [&](const auto& c) {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, CirClock>) {
                feller(c.kappa, c.theta, c.xi, "");
            } else if constexpr (std::is_same_v<T, TimeDepCirClock>) {
                for (std::size_t i = 0; i < c.kappa.size(); ++i)
                    feller(c.kappa[i], c.theta[i], c.xi[i], " on segment " + std::to_string(i));
            } else if constexpr (std::is_same_v<T, TwoFactorCirClock>) {
                feller(c.fast.kappa, c.fast.theta, c.fast.xi, " (fast factor)");
                feller(c.slow.kappa, c.slow.theta, c.slow.xi, " (slow factor)");
            }
        },
        spec);
    return out;
}

// Canonical parameter serialisation with 15 significant digits.
inline std::string canonical_string(const ClockSpec& spec) {
    std::ostringstream os;
    auto num = [&os](double v) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.14e", v);
        os << buf << ';';
    };
    auto vec = [&](const std::vector<double>& v) {
        os << '[';
        for (double x : v) num(x);
        os << ']';
    };
    os << family_name(spec) << ':';
    std::visit(
        [&](const auto& c) {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, CirClock>) {
                num(c.kappa); num(c.theta); num(c.xi); num(c.v0);
            } else if constexpr (std::is_same_v<T, TimeDepCirClock>) {
                vec(c.segment_ends); vec(c.kappa); vec(c.theta); vec(c.xi); num(c.v0);
            } else if constexpr (std::is_same_v<T, SquaredOuClock>) {
                num(c.alpha); num(c.sigma); num(c.y0);
            } else if constexpr (std::is_same_v<T, MarkovSwitchingClock>) {
                for (const auto& row : c.generator) vec(row);
                vec(c.levels); vec(c.initial_dist);
            } else {
                num(c.fast.kappa); num(c.fast.theta); num(c.fast.xi); num(c.fast.v0);
                num(c.slow.kappa); num(c.slow.theta); num(c.slow.xi); num(c.slow.v0);
            }
        },
        spec);
    return os.str();
}

inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::string hex_digest(const std::string& s) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(s)));
    return buf;
}

inline std::string digest(const ClockSpec& spec) { return hex_digest(canonical_string(spec)); }

// State used by the conditional transform at time zero.
inline double initial_state(const ClockSpec& spec) {
    return std::visit(
        [](const auto& c) -> double {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, CirClock> || std::is_same_v<T, TimeDepCirClock>) return c.v0;
            else if constexpr (std::is_same_v<T, SquaredOuClock>) return c.y0;
            else return std::numeric_limits<double>::quiet_NaN();
        },
        spec);
}

}  // namespace sclock
