#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "sclock/barrier.hpp"
#include "sclock/clock.hpp"
#include "sclock/errors.hpp"
#include "sclock/rng.hpp"

namespace sclock {

struct McConfig {
    std::size_t n_paths = 100000;
    double steps_per_year = 2080.0;
    std::uint64_t seed = 20240917;
    bool antithetic = false;
    bool bridge = true;
    std::size_t block_size = 4096;
    unsigned threads = 0;  // 0: SCLOCK_THREADS or hardware concurrency

    std::size_t steps_for(double T) const {
        return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(steps_per_year * T - 1e-9)));
    }
    void validate() const {
        if (n_paths < 1) throw DomainError("n_paths must be >= 1");
        if (!(steps_per_year > 0.0)) throw DomainError("steps per year must be positive");
        if (block_size < 1) throw DomainError("block size must be >= 1");
        if (antithetic && n_paths % 2 != 0) throw DomainError("antithetic sampling needs an even path count");
    }
};

struct McEstimate {
    double price = 0.0;
    double standard_error = 0.0;
    std::size_t n_paths = 0;
    double knockout_fraction = 0.0;
};

inline unsigned resolve_threads(unsigned requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("SCLOCK_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

// ---- factor stepping ----------------------------------------------------------------

// One-dimensional factor driving the clock: CIR variance (full truncation Euler,
// piecewise coefficients looked up at step start) or the OU state (exact step).
class FactorStepper {
public:
    FactorStepper(const ClockSpec& spec, double dt) : spec_(&spec), dt_(dt) {
        if (std::holds_alternative<SquaredOuClock>(spec)) {
            const auto& c = std::get<SquaredOuClock>(spec);
            decay_ = std::exp(-c.alpha * dt);
            ou_sd_ = c.sigma * std::sqrt(-std::expm1(-2.0 * c.alpha * dt) / (2.0 * c.alpha));
            ou_ = true;
        } else if (!std::holds_alternative<CirClock>(spec) && !std::holds_alternative<TimeDepCirClock>(spec)) {
            throw UnsupportedFamilyError(std::string("no scalar factor dynamics for family ") + family_name(spec));
        }
    }

    double initial() const { return initial_state(*spec_); }
    bool quadratic() const { return ou_; }
    // activity carried by state y
    double activity(double y) const { return ou_ ? y * y : std::max(y, 0.0); }

    double step(double y, double t, double z) const {
        if (ou_) return y * decay_ + ou_sd_ * z;
        double kappa, theta, xi;
        coefficients(t, kappa, theta, xi);
        const double vp = std::max(y, 0.0);
        return y + kappa * (theta - vp) * dt_ + xi * std::sqrt(vp * dt_) * z;
    }

private:
    void coefficients(double t, double& kappa, double& theta, double& xi) const {
        if (const auto* c = std::get_if<CirClock>(spec_)) {
            kappa = c->kappa;
            theta = c->theta;
            xi = c->xi;
            return;
        }
        const auto& c = std::get<TimeDepCirClock>(*spec_);
        std::size_t i = 0;
        while (i + 1 < c.segment_ends.size() && t >= c.segment_ends[i] - 1e-14) ++i;
        kappa = c.kappa[i];
        theta = c.theta[i];
        xi = c.xi[i];
    }

    const ClockSpec* spec_;
    double dt_;
    double decay_ = 1.0, ou_sd_ = 0.0;
    bool ou_ = false;
};

struct ClockPath {
    std::vector<double> times;
    std::vector<double> variance;  // activity at grid times
    std::vector<double> clock;     // Gamma at grid times
};

namespace detail {

inline ClockPath simulate_markov_path(const MarkovSwitchingClock& c, double T, std::size_t n_steps, PathRng& rng) {
    const double dt = T / static_cast<double>(n_steps);
    ClockPath p;
    p.times.resize(n_steps + 1);
    p.variance.resize(n_steps + 1);
    p.clock.resize(n_steps + 1);
    // initial regime
    double u = rng.uniform(), acc = 0.0;
    std::size_t state = c.initial_dist.size() - 1;
    for (std::size_t i = 0; i < c.initial_dist.size(); ++i) {
        acc += c.initial_dist[i];
        if (u < acc) {
            state = i;
            break;
        }
    }
    double t = 0.0, gamma = 0.0;
    auto rate_out = [&](std::size_t s) { return -c.generator[s][s]; };
    double next_jump = rate_out(state) > 0.0 ? -std::log1p(-rng.uniform()) / rate_out(state)
                                              : std::numeric_limits<double>::infinity();
    p.times[0] = 0.0;
    p.variance[0] = c.levels[state];
    p.clock[0] = 0.0;
    for (std::size_t i = 1; i <= n_steps; ++i) {
        const double target = dt * static_cast<double>(i);
        while (next_jump <= target) {
            gamma += c.levels[state] * (next_jump - t);
            t = next_jump;
            const double total = rate_out(state);
            double r = rng.uniform() * total, run = 0.0;
            std::size_t to = state;
            for (std::size_t j = 0; j < c.levels.size(); ++j) {
                if (j == state) continue;
                run += c.generator[state][j];
                to = j;
                if (r < run) break;
            }
            state = to;
            next_jump = rate_out(state) > 0.0 ? t - std::log1p(-rng.uniform()) / rate_out(state)
                                              : std::numeric_limits<double>::infinity();
        }
        gamma += c.levels[state] * (target - t);
        t = target;
        p.times[i] = target;
        p.variance[i] = c.levels[state];
        p.clock[i] = gamma;
    }
    return p;
}

}  // namespace detail

// Variance and clock samples on a uniform grid. Gamma uses the trapezoid rule on the
// truncated activity (exact occupation times for the Markov chain).
inline ClockPath simulate_clock_path(const ClockSpec& spec, double T, std::size_t n_steps, PathRng& rng) {
    if (n_steps < 1) throw DomainError("n_steps must be >= 1");
    if (!(T > 0.0)) throw DomainError("horizon must be positive");
    if (const auto* m = std::get_if<MarkovSwitchingClock>(&spec)) return detail::simulate_markov_path(*m, T, n_steps, rng);
    const double dt = T / static_cast<double>(n_steps);
    ClockPath p;
    p.times.resize(n_steps + 1);
    p.variance.resize(n_steps + 1);
    p.clock.resize(n_steps + 1);
    if (const auto* c2 = std::get_if<TwoFactorCirClock>(&spec)) {
        const ClockSpec fast = c2->fast, slow = c2->slow;
        FactorStepper sf(fast, dt), ss(slow, dt);
        double yf = c2->fast.v0, ys = c2->slow.v0;
        p.variance[0] = yf + ys;
        for (std::size_t i = 1; i <= n_steps; ++i) {
            const double t = dt * static_cast<double>(i - 1);
            yf = sf.step(yf, t, rng.normal());
            ys = ss.step(ys, t, rng.normal());
            p.times[i] = t + dt;
            p.variance[i] = std::max(yf, 0.0) + std::max(ys, 0.0);
            p.clock[i] = p.clock[i - 1] + 0.5 * (p.variance[i - 1] + p.variance[i]) * dt;
        }
        return p;
    }
    FactorStepper stepper(spec, dt);
    double y = stepper.initial();
    p.variance[0] = stepper.activity(y);
    for (std::size_t i = 1; i <= n_steps; ++i) {
        const double t = dt * static_cast<double>(i - 1);
        y = stepper.step(y, t, rng.normal());
        p.times[i] = t + dt;
        p.variance[i] = stepper.activity(y);
        p.clock[i] = p.clock[i - 1] + 0.5 * (p.variance[i - 1] + p.variance[i]) * dt;
    }
    return p;
}

// ---- barrier Monte Carlo --------------------------------------------------------

// Payoff with optional continuously monitored log-barriers, in forward log units.
struct MonitoredPayoff {
    double strike = 100.0;
    bool call = true;
    std::optional<double> upper;  // log level
    std::optional<double> lower;  // log level
    double maturity = 1.0;
};

inline MonitoredPayoff monitored_payoff(const BarrierContract& c) {
    c.validate();
    MonitoredPayoff p;
    p.strike = c.strike;
    p.call = c.is_call();
    p.maturity = c.maturity;
    if (c.has_upper()) p.upper = std::log(c.upper_barrier);
    if (c.has_lower()) p.lower = std::log(c.lower_barrier);
    return p;
}

namespace detail {

// Advances the monitoring state over one interval. Uniforms are always drawn so that
// paths stay aligned across barrier geometries and bridge settings.
struct Monitor {
    const MonitoredPayoff* pay;
    bool bridge;

    bool survives(double x_prev, double x_next, double dgamma, PathRng& rng) const {
        const double u_up = rng.uniform();
        const double u_dn = rng.uniform();
        return survives_with(x_prev, x_next, dgamma, u_up, u_dn);
    }

    bool survives_with(double x_prev, double x_next, double dgamma, double u_up, double u_dn) const {
        if (pay->upper) {
            const double h = *pay->upper;
            if (x_next >= h) return false;
            if (bridge && dgamma > 0.0 && u_up < std::exp(-2.0 * (h - x_prev) * (h - x_next) / dgamma)) return false;
        }
        if (pay->lower) {
            const double l = *pay->lower;
            if (x_next <= l) return false;
            if (bridge && dgamma > 0.0 && u_dn < std::exp(-2.0 * (x_prev - l) * (x_next - l) / dgamma)) return false;
        }
        return true;
    }

    double payoff(double x) const {
        const double s = std::exp(x);
        return pay->call ? std::max(s - pay->strike, 0.0) : std::max(pay->strike - s, 0.0);
    }
};

struct BlockSums {
    double sum = 0.0;
    double sum_sq = 0.0;
    std::size_t knocked = 0;
    std::size_t samples = 0;
};

// Runs `sample(path_index, antithetic) -> (payoff, knocked)` over all paths in blocks and
// merges in block order.
template <class Sample>
McEstimate run_blocks(const McConfig& cfg, double discount, Sample&& sample) {
    cfg.validate();
    const std::size_t units = cfg.antithetic ? cfg.n_paths / 2 : cfg.n_paths;
    const std::size_t n_blocks = (units + cfg.block_size - 1) / cfg.block_size;
    std::vector<BlockSums> blocks(n_blocks);
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t b = next.fetch_add(1);
            if (b >= n_blocks) return;
            BlockSums s;
            const std::size_t lo = b * cfg.block_size, hi = std::min(units, lo + cfg.block_size);
            for (std::size_t i = lo; i < hi; ++i) {
                double value;
                std::size_t knocked;
                if (cfg.antithetic) {
                    const auto a = sample(i, false);
                    const auto c = sample(i, true);
                    value = 0.5 * (a.first + c.first);
                    knocked = (a.second ? 1 : 0) + (c.second ? 1 : 0);
                } else {
                    const auto a = sample(i, false);
                    value = a.first;
                    knocked = a.second ? 1 : 0;
                }
                s.sum += value;
                s.sum_sq += value * value;
                s.knocked += knocked;
                ++s.samples;
            }
            blocks[b] = s;
        }
    };
    const unsigned threads = std::min<unsigned>(resolve_threads(cfg.threads), static_cast<unsigned>(std::max<std::size_t>(n_blocks, 1)));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    BlockSums total;
    for (const auto& b : blocks) {
        total.sum += b.sum;
        total.sum_sq += b.sum_sq;
        total.knocked += b.knocked;
        total.samples += b.samples;
    }
    const double n = static_cast<double>(total.samples);
    const double mean = total.sum / n;
    const double var = n > 1 ? std::max(total.sum_sq / n - mean * mean, 0.0) * n / (n - 1.0) : 0.0;
    McEstimate est;
    est.price = discount * mean;
    est.standard_error = discount * std::sqrt(var / n);
    est.n_paths = cfg.n_paths;
    est.knockout_fraction = static_cast<double>(total.knocked) / static_cast<double>(cfg.n_paths);
    return est;
}

struct CvSums {
    double y = 0.0, c = 0.0, yy = 0.0, cc = 0.0, yc = 0.0;
    std::size_t knocked = 0;
    std::size_t samples = 0;
};

// Control-variate version: `sample(path, antithetic) -> (payoff, control, knocked)` where
// the control has known mean `control_mean`. Regression coefficient estimated from all paths.
template <class Sample>
McEstimate run_blocks_cv(const McConfig& cfg, double discount, double control_mean, Sample&& sample) {
    cfg.validate();
    const std::size_t units = cfg.antithetic ? cfg.n_paths / 2 : cfg.n_paths;
    const std::size_t n_blocks = (units + cfg.block_size - 1) / cfg.block_size;
    std::vector<CvSums> blocks(n_blocks);
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t b = next.fetch_add(1);
            if (b >= n_blocks) return;
            CvSums s;
            const std::size_t lo = b * cfg.block_size, hi = std::min(units, lo + cfg.block_size);
            for (std::size_t i = lo; i < hi; ++i) {
                double y, c;
                std::size_t knocked;
                if (cfg.antithetic) {
                    const auto [y1, c1, k1] = sample(i, false);
                    const auto [y2, c2, k2] = sample(i, true);
                    y = 0.5 * (y1 + y2);
                    c = 0.5 * (c1 + c2);
                    knocked = (k1 ? 1 : 0) + (k2 ? 1 : 0);
                } else {
                    const auto [y1, c1, k1] = sample(i, false);
                    y = y1;
                    c = c1;
                    knocked = k1 ? 1 : 0;
                }
                s.y += y;
                s.c += c;
                s.yy += y * y;
                s.cc += c * c;
                s.yc += y * c;
                s.knocked += knocked;
                ++s.samples;
            }
            blocks[b] = s;
        }
    };
    const unsigned threads = std::min<unsigned>(resolve_threads(cfg.threads), static_cast<unsigned>(std::max<std::size_t>(n_blocks, 1)));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    CvSums t;
    for (const auto& b : blocks) {
        t.y += b.y;
        t.c += b.c;
        t.yy += b.yy;
        t.cc += b.cc;
        t.yc += b.yc;
        t.knocked += b.knocked;
        t.samples += b.samples;
    }
    const double n = static_cast<double>(t.samples);
    const double my = t.y / n, mc = t.c / n;
    const double vy = std::max(t.yy / n - my * my, 0.0), vc = std::max(t.cc / n - mc * mc, 0.0);
    const double cov = t.yc / n - my * mc;
    const double beta = vc > 0.0 ? cov / vc : 0.0;
    const double var = std::max(vy - beta * cov, 0.0) * (n > 2 ? n / (n - 2.0) : 1.0);
    McEstimate est;
    est.price = discount * (my - beta * (mc - control_mean));
    est.standard_error = discount * std::sqrt(var / n);
    est.n_paths = cfg.n_paths;
    est.knockout_fraction = static_cast<double>(t.knocked) / static_cast<double>(cfg.n_paths);
    return est;
}

}  // namespace detail

// Independent clock: X = x0 + beta Gamma + B_Gamma sampled at the clock grid.
inline McEstimate price_monitored_mc_rho0(const MonitoredPayoff& pay, const MarketEnv& market, const ClockSpec& spec,
                                          const McConfig& cfg) {
    validate(spec);
    market.validate();
    const double T = pay.maturity;
    const double x0 = std::log(market.forward(T));
    if ((pay.upper && x0 >= *pay.upper) || (pay.lower && x0 <= *pay.lower))
        throw KnockedOutError("Monte Carlo start is outside the barrier corridor");
    const std::size_t n = cfg.steps_for(T);
    detail::Monitor mon{&pay, cfg.bridge};
    auto sample = [&](std::size_t path, bool anti) -> std::pair<double, bool> {
        PathRng rng(cfg.seed, path, anti);
        const auto clock = simulate_clock_path(spec, T, n, rng);
        double x = x0;
        for (std::size_t i = 1; i <= n; ++i) {
            const double dg = clock.clock[i] - clock.clock[i - 1];
            const double xn = x + kBeta * dg + std::sqrt(dg) * rng.normal();
            if (!mon.survives(x, xn, dg, rng)) return {0.0, true};
            x = xn;
        }
        return {mon.payoff(x), false};
    };
    return detail::run_blocks(cfg, market.discount(T), sample);
}

inline McEstimate price_barrier_mc_rho0(const BarrierContract& contract, const MarketEnv& market,
                                        const ClockSpec& spec, const McConfig& cfg) {
    return price_monitored_mc_rho0(monitored_payoff(contract), market, spec, cfg);
}

// Correlated factor and return drivers, Euler in calendar time.
inline McEstimate price_monitored_mc_correlated(const MonitoredPayoff& pay, const MarketEnv& market,
                                                const ClockSpec& spec, double rho, const McConfig& cfg) {
    if (!(rho >= -1.0 && rho <= 1.0)) throw DomainError("correlation must lie in [-1, 1]");
    validate(spec);
    market.validate();
    const double T = pay.maturity;
    const double x0 = std::log(market.forward(T));
    if ((pay.upper && x0 >= *pay.upper) || (pay.lower && x0 <= *pay.lower))
        throw KnockedOutError("Monte Carlo start is outside the barrier corridor");
    const std::size_t n = cfg.steps_for(T);
    const double dt = T / static_cast<double>(n);
    const FactorStepper stepper(spec, dt);
    const double rho_perp = std::sqrt(std::max(0.0, 1.0 - rho * rho));
    detail::Monitor mon{&pay, cfg.bridge};
    auto sample = [&](std::size_t path, bool anti) -> std::pair<double, bool> {
        PathRng rng(cfg.seed, path, anti);
        double y = stepper.initial();
        double v = stepper.activity(y);
        double x = x0;
        for (std::size_t i = 1; i <= n; ++i) {
            const double t = dt * static_cast<double>(i - 1);
            const double zv = rng.normal();
            const double zp = rng.normal();
            const double zs = rho * zv + rho_perp * zp;
            const double yn = stepper.step(y, t, zv);
            const double vn = stepper.activity(yn);
            const double dg = 0.5 * (v + vn) * dt;
            const double xn = x + kBeta * v * dt + std::sqrt(v * dt) * zs;
            if (!mon.survives(x, xn, dg, rng)) return {0.0, true};
            x = xn;
            y = yn;
            v = vn;
        }
        return {mon.payoff(x), false};
    };
    return detail::run_blocks(cfg, market.discount(T), sample);
}

// Same scheme with the terminal forward exp(X_T) as a martingale control: the log-Euler
// step keeps E[exp(X_T)] = F_0 exactly, so the estimator stays unbiased up to the
// regression-coefficient term.
inline McEstimate price_monitored_mc_correlated_cv(const MonitoredPayoff& pay, const MarketEnv& market,
                                                   const ClockSpec& spec, double rho, const McConfig& cfg) {
    if (!(rho >= -1.0 && rho <= 1.0)) throw DomainError("correlation must lie in [-1, 1]");
    validate(spec);
    market.validate();
    const double T = pay.maturity;
    const double x0 = std::log(market.forward(T));
    if ((pay.upper && x0 >= *pay.upper) || (pay.lower && x0 <= *pay.lower))
        throw KnockedOutError("Monte Carlo start is outside the barrier corridor");
    const std::size_t n = cfg.steps_for(T);
    const double dt = T / static_cast<double>(n);
    const FactorStepper stepper(spec, dt);
    const double rho_perp = std::sqrt(std::max(0.0, 1.0 - rho * rho));
    detail::Monitor mon{&pay, cfg.bridge};
    auto sample = [&](std::size_t path, bool anti) -> std::tuple<double, double, bool> {
        PathRng rng(cfg.seed, path, anti);
        double y = stepper.initial();
        double v = stepper.activity(y);
        double x = x0;
        bool alive = true;
        for (std::size_t i = 1; i <= n; ++i) {
            const double t = dt * static_cast<double>(i - 1);
            const double zv = rng.normal();
            const double zp = rng.normal();
            const double u_up = rng.uniform();
            const double u_dn = rng.uniform();
            const double yn = stepper.step(y, t, zv);
            const double vn = stepper.activity(yn);
            const double dg = 0.5 * (v + vn) * dt;
            const double xn = x + kBeta * v * dt + std::sqrt(v * dt) * (rho * zv + rho_perp * zp);
            if (alive) alive = mon.survives_with(x, xn, dg, u_up, u_dn);
            x = xn;
            y = yn;
            v = vn;
        }
        return {alive ? mon.payoff(x) : 0.0, std::exp(x), !alive};
    };
    return detail::run_blocks_cv(cfg, market.discount(T), market.forward(T), sample);
}

inline McEstimate price_barrier_mc_correlated_cv(const BarrierContract& contract, const MarketEnv& market,
                                                 const ClockSpec& spec, double rho, const McConfig& cfg) {
    return price_monitored_mc_correlated_cv(monitored_payoff(contract), market, spec, rho, cfg);
}

inline McEstimate price_barrier_mc_correlated(const BarrierContract& contract, const MarketEnv& market,
                                              const ClockSpec& spec, double rho, const McConfig& cfg) {
    return price_monitored_mc_correlated(monitored_payoff(contract), market, spec, rho, cfg);
}

// Price at rho minus price at rho = 0 on common drivers (same normals and kill uniforms).
// The rho leg draws in the same order as price_monitored_mc_correlated.
inline McEstimate leverage_shift_mc(const MonitoredPayoff& pay, const MarketEnv& market, const ClockSpec& spec,
                                    double rho, const McConfig& cfg) {
    if (!(rho >= -1.0 && rho <= 1.0)) throw DomainError("correlation must lie in [-1, 1]");
    validate(spec);
    market.validate();
    const double T = pay.maturity;
    const double x0 = std::log(market.forward(T));
    if ((pay.upper && x0 >= *pay.upper) || (pay.lower && x0 <= *pay.lower))
        throw KnockedOutError("Monte Carlo start is outside the barrier corridor");
    const std::size_t n = cfg.steps_for(T);
    const double dt = T / static_cast<double>(n);
    const FactorStepper stepper(spec, dt);
    const double rho_perp = std::sqrt(std::max(0.0, 1.0 - rho * rho));
    detail::Monitor mon{&pay, cfg.bridge};
    auto sample = [&](std::size_t path, bool anti) -> std::pair<double, bool> {
        PathRng rng(cfg.seed, path, anti);
        double y = stepper.initial();
        double v = stepper.activity(y);
        double x = x0, xz = x0;
        bool alive = true, alive_z = true;
        for (std::size_t i = 1; i <= n && (alive || alive_z); ++i) {
            const double t = dt * static_cast<double>(i - 1);
            const double zv = rng.normal();
            const double zp = rng.normal();
            const double u_up = rng.uniform();
            const double u_dn = rng.uniform();
            const double yn = stepper.step(y, t, zv);
            const double vn = stepper.activity(yn);
            const double dg = 0.5 * (v + vn) * dt;
            const double sd = std::sqrt(v * dt);
            if (alive) {
                const double xn = x + kBeta * v * dt + sd * (rho * zv + rho_perp * zp);
                alive = mon.survives_with(x, xn, dg, u_up, u_dn);
                x = xn;
            }
            if (alive_z) {
                const double xn = xz + kBeta * v * dt + sd * zp;
                alive_z = mon.survives_with(xz, xn, dg, u_up, u_dn);
                xz = xn;
            }
            y = yn;
            v = vn;
        }
        return {(alive ? mon.payoff(x) : 0.0) - (alive_z ? mon.payoff(xz) : 0.0), !alive};
    };
    return detail::run_blocks(cfg, market.discount(T), sample);
}

inline McEstimate leverage_shift_mc(const BarrierContract& contract, const MarketEnv& market, const ClockSpec& spec,
                                    double rho, const McConfig& cfg) {
    return leverage_shift_mc(monitored_payoff(contract), market, spec, rho, cfg);
}

inline McEstimate price_vanilla_mc(double strike, bool call, double maturity, const MarketEnv& market,
                                   const ClockSpec& spec, const McConfig& cfg) {
    MonitoredPayoff pay;
    pay.strike = strike;
    pay.call = call;
    pay.maturity = maturity;
    return price_monitored_mc_rho0(pay, market, spec, cfg);
}

// Mean of Gamma_T with its standard error.
inline McEstimate mc_expected_clock(const ClockSpec& spec, double T, const McConfig& cfg) {
    validate(spec);
    const std::size_t n = cfg.steps_for(T);
    auto sample = [&](std::size_t path, bool anti) -> std::pair<double, bool> {
        PathRng rng(cfg.seed, path, anti);
        return {simulate_clock_path(spec, T, n, rng).clock.back(), false};
    };
    return detail::run_blocks(cfg, 1.0, sample);
}

// Monte Carlo estimate of E[exp(-lambda Gamma_T)].
inline McEstimate mc_clock_laplace(const ClockSpec& spec, double T, double lambda, const McConfig& cfg) {
    validate(spec);
    const std::size_t n = cfg.steps_for(T);
    auto sample = [&](std::size_t path, bool anti) -> std::pair<double, bool> {
        PathRng rng(cfg.seed, path, anti);
        return {std::exp(-lambda * simulate_clock_path(spec, T, n, rng).clock.back()), false};
    };
    return detail::run_blocks(cfg, 1.0, sample);
}

}  // namespace sclock
