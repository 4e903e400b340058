#pragma once

#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "sclock/clock.hpp"
#include "sclock/clock_transforms.hpp"
#include "sclock/errors.hpp"

namespace sclock {

// Write-once table of log Phi_{t,T}(lambda_n; y) on a sorted positive grid.
class TransformCache {
public:
    const std::string& key() const noexcept { return key_; }
    const std::string& clock_digest() const noexcept { return clock_digest_; }
    double t() const noexcept { return t_; }
    double T() const noexcept { return T_; }
    const std::optional<double>& conditional_state() const noexcept { return state_; }
    const std::vector<double>& grid() const noexcept { return grid_; }
    const std::vector<double>& log_values() const noexcept { return log_values_; }
    std::size_t size() const noexcept { return grid_.size(); }

    double value(std::size_t i) const { return exp_floor(log_values_.at(i)); }
    std::vector<double> values() const {
        std::vector<double> out(log_values_.size());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = exp_floor(log_values_[i]);
        return out;
    }

    friend TransformCache build_transform_cache(const ClockSpec&, double, double, std::vector<double>,
                                                std::optional<double>);

private:
    std::string key_;
    std::string clock_digest_;
    double t_ = 0.0;
    double T_ = 0.0;
    std::optional<double> state_;
    std::vector<double> grid_;
    std::vector<double> log_values_;
};

inline std::string cache_key(const ClockSpec& spec, double t, double T, std::optional<double> state) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "|t=%.14e|T=%.14e|y=", t, T);
    std::string s = canonical_string(spec) + buf;
    if (state) {
        char yb[32];
        std::snprintf(yb, sizeof yb, "%.14e", *state);
        s += yb;
    } else {
        s += "none";
    }
    return hex_digest(s);
}

inline TransformCache build_transform_cache(const ClockSpec& spec, double t, double T, std::vector<double> grid,
                                            std::optional<double> state = std::nullopt) {
    validate(spec);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] > 0.0) || !std::isfinite(grid[i]))
            throw DomainError("transform cache grid must be positive and finite (index " + std::to_string(i) + ")");
        if (i > 0 && !(grid[i] > grid[i - 1])) throw DomainError("transform cache grid must be strictly increasing");
    }
    TransformCache cache;
    cache.key_ = cache_key(spec, t, T, state);
    cache.clock_digest_ = digest(spec);
    cache.t_ = t;
    cache.T_ = T;
    cache.state_ = state;
    cache.log_values_.reserve(grid.size());
    for (double lambda : grid) {
        try {
            cache.log_values_.push_back(log_phi(spec, t, T, lambda, state));
        } catch (const NumericalError& e) {
            throw NumericalError("transform evaluation failed at lambda=" + std::to_string(lambda) + ": " + e.what());
        }
    }
    cache.grid_ = std::move(grid);
    return cache;
}

// lambda_n = ((n pi / a)^2 + beta^2) / 2, n = 1..n_max, for a corridor of log-width a.
inline std::vector<double> dirichlet_grid(double log_width, std::size_t n_max, double beta = -0.5) {
    if (!(log_width > 0.0)) throw DomainError("corridor width must be positive");
    std::vector<double> grid(n_max);
    const double pi = 3.14159265358979323846;
    for (std::size_t n = 1; n <= n_max; ++n) {
        const double omega = static_cast<double>(n) * pi / log_width;
        grid[n - 1] = 0.5 * (omega * omega + beta * beta);
    }
    return grid;
}

}  // namespace sclock
