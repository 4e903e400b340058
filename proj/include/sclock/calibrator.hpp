#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "sclock/barrier.hpp"
#include "sclock/black.hpp"
#include "sclock/clock.hpp"
#include "sclock/errors.hpp"
#include "sclock/leverage/expansion.hpp"
#include "sclock/leverage/pade.hpp"
#include "sclock/mc.hpp"
#include "sclock/numerics/optimize.hpp"
#include "sclock/vanilla.hpp"

namespace sclock::calib {

inline constexpr double kBgkBeta = 0.5826;

struct BarrierQuote {
    BarrierContract contract;
    double value = 0.0;
    double weight = 1.0;
    // set when the quote is for discrete monitoring; 0 means continuous
    double monitoring_interval = 0.0;
};

struct VarSwapQuote {
    double maturity = 1.0;
    double strike = 0.0;  // annualised variance, K_var(T)
    double weight = 1.0;
};

// Squared-VIX proxy over [start, start + window].
struct VixQuote {
    double start = 0.0;
    double window = 30.0 / 365.0;
    double value = 0.0;
    double weight = 1.0;
};

struct CalibrationDataset {
    MarketEnv market;
    std::vector<VanillaQuote> vanillas;
    std::vector<BarrierQuote> barriers;
    std::vector<VarSwapQuote> varswaps;
    std::vector<VixQuote> vix;
    double vix_scale = 1.0;

    void validate() const {
        market.validate();
        if (vanillas.empty()) throw DomainError("calibration dataset needs at least one vanilla quote");
        for (const auto& q : vanillas) q.validate();
        for (const auto& b : barriers) {
            b.contract.validate();
            if (!(b.weight >= 0.0)) throw DomainError("barrier quote weight must be >= 0");
            if (!(b.monitoring_interval >= 0.0)) throw DomainError("monitoring interval must be >= 0");
        }
        for (const auto& v : varswaps) {
            if (!(v.maturity > 0.0)) throw DomainError("variance swap maturity must be positive");
            if (!(v.weight >= 0.0)) throw DomainError("variance swap weight must be >= 0");
        }
        for (const auto& v : vix) {
            if (!(v.window > 0.0) || !(v.start >= 0.0)) throw DomainError("VIX proxy needs start >= 0 and window > 0");
            if (!(v.weight >= 0.0)) throw DomainError("VIX proxy weight must be >= 0");
        }
        if (!(vix_scale > 0.0)) throw DomainError("VIX proxy scale must be positive");
    }
};

// ---- objective --------------------------------------------------------------------

enum class ObjectiveSpace { Price, ImpliedVol };

struct ObjectiveConfig {
    ObjectiveSpace space = ObjectiveSpace::ImpliedVol;
    double barrier_weight = 0.25;   // relative to vanillas
    double failure_penalty = 1.0;   // squared-residual charge for an instrument that fails to price
    CosConfig cos{};
    unsigned threads = 0;           // 0: SCLOCK_THREADS or hardware
};

// Leverage correction per barrier quote: value(rho) - C0 from coefficients cached at some
// parameter snapshot. Quotes without an entry are treated as insensitive to rho.
struct LeverageCache {
    std::vector<std::optional<leverage::ExpansionCoefficients>> coefficients;  // aligned with dataset.barriers
    std::vector<double> maturity_rho_keys;                                     // sorted, for per-maturity rho
};

struct ObjectiveBreakdown {
    double value = 0.0;
    std::vector<double> vanilla_model;
    std::vector<double> vanilla_residuals;
    std::vector<double> barrier_model;
    std::vector<double> barrier_residuals;
    std::vector<std::string> flags;
};

namespace detail {

inline double market_vol(const VanillaQuote& q, const MarketEnv& m) {
    return q.implied_vol > 0.0 ? q.implied_vol : implied_vol(q.value, m, q);
}

inline double market_price(const VanillaQuote& q, const MarketEnv& m) {
    if (q.value > 0.0 || q.implied_vol <= 0.0) return q.value;
    const double T = q.maturity;
    return black_price(m.forward(T), q.strike, q.implied_vol, T, m.discount(T), q.kind == OptionKind::Call);
}

inline double rho_for(double rho, const std::vector<double>& per_maturity, const std::vector<double>& keys, double T) {
    if (per_maturity.empty()) return rho;
    for (std::size_t i = 0; i < keys.size(); ++i)
        if (std::abs(keys[i] - T) < 1e-12) return per_maturity[i];
    return rho;
}

template <class Task>
void parallel_tasks(std::size_t n, unsigned threads, Task&& task) {
    const unsigned nt = std::min<unsigned>(resolve_threads(threads), static_cast<unsigned>(std::max<std::size_t>(n, 1)));
    if (nt <= 1) {
        for (std::size_t i = 0; i < n; ++i) task(i);
        return;
    }
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < nt; ++t)
        pool.emplace_back([&, t] {
            for (std::size_t i = t; i < n; i += nt) task(i);
        });
    for (auto& th : pool) th.join();
}

}  // namespace detail

// In vol space a barrier price residual is divided by the Black vega of the vanilla with
// the same strike and maturity at the nearest quoted ATM vol.
inline double barrier_residual_scale(const CalibrationDataset& data, const BarrierContract& c, ObjectiveSpace space) {
    if (space == ObjectiveSpace::Price) return 1.0;
    const double T = c.maturity;
    const VanillaQuote* best = nullptr;
    double best_score = std::numeric_limits<double>::max();
    for (const auto& q : data.vanillas) {
        const double score = std::abs(q.maturity - T) * 1e3 + std::abs(std::log(q.strike / data.market.forward(q.maturity)));
        if (score < best_score) {
            best_score = score;
            best = &q;
        }
    }
    const double vol = detail::market_vol(*best, data.market);
    return black_vega(data.market.forward(T), c.strike, vol, T, data.market.discount(T));
}

inline double leverage_adjusted(const leverage::ExpansionCoefficients& c, double rho,
                                std::string* route = nullptr) {
    const auto r = leverage::evaluate_with_fallback(c.values, rho);
    if (route) *route = r.route;
    return r.value - c.values[0];
}

// Weighted SSE over vanillas (COS) and barrier quotes (analytic at rho = 0 plus the
// cached leverage correction). Failures are charged failure_penalty and flagged.
inline ObjectiveBreakdown objective_breakdown(const ClockSpec& spec, const CalibrationDataset& data, double rho,
                                              const ObjectiveConfig& cfg = {}, const LeverageCache* lev = nullptr,
                                              const std::vector<double>& rho_by_maturity = {}) {
    ObjectiveBreakdown out;
    validate(spec);
    const auto& m = data.market;
    const std::size_t nv = data.vanillas.size(), nb = data.barriers.size();
    out.vanilla_model.assign(nv, std::numeric_limits<double>::quiet_NaN());
    out.vanilla_residuals.assign(nv, 0.0);
    out.barrier_model.assign(nb, std::numeric_limits<double>::quiet_NaN());
    out.barrier_residuals.assign(nb, 0.0);

    std::vector<double> mats;
    for (const auto& q : data.vanillas)
        if (std::none_of(mats.begin(), mats.end(), [&](double t) { return std::abs(t - q.maturity) < 1e-12; }))
            mats.push_back(q.maturity);
    std::vector<std::string> task_flags(mats.size() + nb);
    std::vector<char> failed_v(nv, 0), failed_b(nb, 0);

    auto vanilla_task = [&](std::size_t g) {
        const double T = mats[g];
        try {
            CosPricer pricer(spec, m, T, cfg.cos);
            for (std::size_t i = 0; i < nv; ++i) {
                const auto& q = data.vanillas[i];
                if (std::abs(q.maturity - T) >= 1e-12) continue;
                try {
                    const double p = pricer.price(q.strike, q.kind);
                    if (cfg.space == ObjectiveSpace::Price) {
                        out.vanilla_model[i] = p;
                        out.vanilla_residuals[i] = p - detail::market_price(q, m);
                    } else {
                        const double iv = implied_vol(p, m, q);
                        out.vanilla_model[i] = iv;
                        out.vanilla_residuals[i] = iv - detail::market_vol(q, m);
                    }
                } catch (const std::exception&) {
                    failed_v[i] = 1;
                }
            }
        } catch (const std::exception& e) {
            for (std::size_t i = 0; i < nv; ++i)
                if (std::abs(data.vanillas[i].maturity - T) < 1e-12) failed_v[i] = 1;
            task_flags[g] = std::string("vanilla pricing failed at T=") + std::to_string(T) + ": " + e.what();
        }
    };
    auto barrier_task = [&](std::size_t i) {
        const auto& b = data.barriers[i];
        try {
            double p = leverage::baseline_price(b.contract, m, spec);
            if (lev && i < lev->coefficients.size() && lev->coefficients[i]) {
                const double r = detail::rho_for(rho, rho_by_maturity, lev->maturity_rho_keys, b.contract.maturity);
                p += leverage_adjusted(*lev->coefficients[i], r);
            }
            out.barrier_model[i] = p;
            out.barrier_residuals[i] = p - b.value;
        } catch (const std::exception& e) {
            failed_b[i] = 1;
            task_flags[mats.size() + i] = "barrier quote " + std::to_string(i) + " failed: " + e.what();
        }
    };
    detail::parallel_tasks(mats.size() + nb, cfg.threads, [&](std::size_t k) {
        if (k < mats.size())
            vanilla_task(k);
        else
            barrier_task(k - mats.size());
    });

    double sse = 0.0;
    for (std::size_t i = 0; i < nv; ++i) {
        const double w = data.vanillas[i].weight;
        if (failed_v[i]) {
            if (w > 0.0) {
                sse += w * cfg.failure_penalty;
                out.flags.push_back("vanilla quote " + std::to_string(i) + " failed to price");
            }
            continue;
        }
        sse += w * out.vanilla_residuals[i] * out.vanilla_residuals[i];
    }
    for (std::size_t i = 0; i < nb; ++i) {
        const double w = cfg.barrier_weight * data.barriers[i].weight;
        if (failed_b[i]) {
            if (w > 0.0) sse += w * cfg.failure_penalty;
            continue;
        }
        const double e = out.barrier_residuals[i] / barrier_residual_scale(data, data.barriers[i].contract, cfg.space);
        sse += w * e * e;
    }
    for (auto& f : task_flags)
        if (!f.empty()) out.flags.push_back(std::move(f));
    out.value = sse;
    return out;
}

inline double objective_eval(const ClockSpec& spec, const CalibrationDataset& data, double rho,
                             const ObjectiveConfig& cfg = {}, const LeverageCache* lev = nullptr) {
    return objective_breakdown(spec, data, rho, cfg, lev).value;
}

// ---- discrete monitoring ------------------------------------------------------------

// Shifted-barrier correction: a barrier monitored every dt behaves like a continuous one
// moved away from spot by exp(beta sigma sqrt(dt)). sigma is the ATM implied vol of the
// nearest vanilla maturity.
inline CalibrationDataset apply_discrete_monitoring_correction(const CalibrationDataset& data,
                                                               std::vector<std::string>* flags = nullptr) {
    CalibrationDataset out = data;
    for (std::size_t i = 0; i < out.barriers.size(); ++i) {
        auto& b = out.barriers[i];
        if (b.monitoring_interval <= 0.0) continue;
        const double T = b.contract.maturity;
        const VanillaQuote* best = nullptr;
        double best_score = std::numeric_limits<double>::max();
        for (const auto& q : data.vanillas) {
            const double score = std::abs(q.maturity - T) * 1e3 + std::abs(std::log(q.strike / data.market.forward(q.maturity)));
            if (score < best_score) {
                best_score = score;
                best = &q;
            }
        }
        const double sigma = detail::market_vol(*best, data.market);
        const double shift = std::exp(kBgkBeta * sigma * std::sqrt(b.monitoring_interval));
        if (b.contract.has_upper()) b.contract.upper_barrier *= shift;
        if (b.contract.has_lower()) b.contract.lower_barrier /= shift;
        b.monitoring_interval = 0.0;
        if (flags) flags->push_back("barrier quote " + std::to_string(i) + ": shifted-barrier discrete monitoring correction");
    }
    return out;
}

// ---- initializers -----------------------------------------------------------------

struct CirSeed {
    double v0 = 0.0;
    double theta = 0.0;
    double kappa = 1.0;
    bool flat_curve = false;
    double sse = 0.0;
};

namespace detail {

// (1 - e^{-x}) / x
inline double decay_fraction(double x) { return std::abs(x) < 1e-10 ? 1.0 - 0.5 * x : -std::expm1(-x) / x; }

}  // namespace detail

// v0 and theta are read from the short and long ends; kappa by golden section over log kappa
// with v0, theta re-solved by linear least squares at each kappa (the curve is linear in them).
inline CirSeed init_cir_from_varswaps(std::vector<VarSwapQuote> curve) {
    if (curve.size() < 3) throw DomainError("variance-swap initializer needs at least 3 maturities");
    std::sort(curve.begin(), curve.end(), [](const auto& a, const auto& b) { return a.maturity < b.maturity; });
    for (const auto& q : curve)
        if (!(q.strike > 0.0) || !(q.maturity > 0.0))
            throw DomainError("variance-swap strikes must be positive; inspect the input curve");
    CirSeed seed;
    double lo = curve.front().strike, hi = lo, mean = 0.0;
    for (const auto& q : curve) {
        lo = std::min(lo, q.strike);
        hi = std::max(hi, q.strike);
        mean += q.strike;
    }
    mean /= static_cast<double>(curve.size());
    if (hi - lo <= 1e-10 * mean) {
        seed.v0 = seed.theta = mean;
        seed.kappa = 1.0;
        seed.flat_curve = true;
        return seed;
    }
    const double v0_end = curve.front().strike, theta_end = curve.back().strike;
    auto solve = [&](double kappa, double& v0, double& theta) {
        // K = theta (1 - f) + v0 f
        double a11 = 0, a12 = 0, a22 = 0, b1 = 0, b2 = 0;
        for (const auto& q : curve) {
            const double f = detail::decay_fraction(kappa * q.maturity);
            const double w = q.weight;
            a11 += w * f * f;
            a12 += w * f * (1 - f);
            a22 += w * (1 - f) * (1 - f);
            b1 += w * f * q.strike;
            b2 += w * (1 - f) * q.strike;
        }
        const double det = a11 * a22 - a12 * a12;
        if (std::abs(det) < 1e-14 * (a11 * a22 + 1e-300)) {
            v0 = v0_end;
            theta = theta_end;
        } else {
            v0 = (b1 * a22 - b2 * a12) / det;
            theta = (a11 * b2 - a12 * b1) / det;
        }
        double sse = 0.0;
        for (const auto& q : curve) {
            const double f = detail::decay_fraction(kappa * q.maturity);
            const double e = theta * (1 - f) + v0 * f - q.strike;
            sse += q.weight * e * e;
        }
        return sse;
    };
    auto f = [&](double lk) {
        double v0, theta;
        return solve(std::exp(lk), v0, theta);
    };
    // coarse scan guards against a non-unimodal profile
    const double a = std::log(0.01), b = std::log(20.0);
    const int n = 40;
    int best = 0;
    double best_val = std::numeric_limits<double>::max();
    for (int i = 0; i <= n; ++i) {
        const double v = f(a + (b - a) * i / n);
        if (v < best_val) {
            best_val = v;
            best = i;
        }
    }
    const double step = (b - a) / n;
    const auto m = numerics::golden_section(f, std::max(a, a + (best - 1) * step), std::min(b, a + (best + 1) * step), 1e-12);
    seed.kappa = std::exp(m.x);
    seed.sse = solve(seed.kappa, seed.v0, seed.theta);
    if (!(seed.v0 > 0.0) || !(seed.theta > 0.0))
        throw DomainError("variance-swap initializer inferred a non-positive v0 or theta; inspect the curve");
    return seed;
}

struct TwoFactorSeed {
    double kappa_fast = 0.0, kappa_slow = 0.0;
    double v0_fast = 0.0, theta_fast = 0.0, v0_slow = 0.0, theta_slow = 0.0;  // unconstrained NNLS split
    double alpha_fast = 0.5;   // share of mean contributions carried by the fast factor
    double weight = 0.5;       // alpha_fast clamped into the weight bounds
    double sse = 0.0;
    bool fallback_one_factor = false;
    bool weight_clamped = false;
    TwoFactorCirClock spec{};
};

inline const std::vector<double>& kappa_fast_grid() {
    static const std::vector<double> g{0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0, 10.0};
    return g;
}
inline const std::vector<double>& kappa_slow_grid() {
    static const std::vector<double> g{0.05, 0.1, 0.2, 0.3, 0.5, 0.75, 1.0};
    return g;
}

namespace detail {

// Non-negative least squares by active-set enumeration (few unknowns).
inline std::pair<Eigen::VectorXd, double> nnls_small(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
    const auto n = A.cols();
    Eigen::VectorXd best = Eigen::VectorXd::Zero(n);
    double best_r = b.squaredNorm();
    for (unsigned mask = 1; mask < (1u << n); ++mask) {
        std::vector<Eigen::Index> idx;
        for (Eigen::Index j = 0; j < n; ++j)
            if (mask & (1u << j)) idx.push_back(j);
        Eigen::MatrixXd S(A.rows(), static_cast<Eigen::Index>(idx.size()));
        for (std::size_t k = 0; k < idx.size(); ++k) S.col(static_cast<Eigen::Index>(k)) = A.col(idx[k]);
        const Eigen::VectorXd z = S.colPivHouseholderQr().solve(b);
        if ((z.array() < 0.0).any()) continue;
        const double r = (S * z - b).squaredNorm();
        if (r < best_r - 1e-15 * std::max(1.0, best_r)) {
            best_r = r;
            best.setZero();
            for (std::size_t k = 0; k < idx.size(); ++k) best(idx[k]) = z(static_cast<Eigen::Index>(k));
        }
    }
    return {best, best_r};
}

}  // namespace detail

// Coarse (kappa_f, kappa_s) grid with per-pair non-negative linear least squares on
// variance-swap and squared-VIX mean targets.
inline TwoFactorSeed init_two_factor_grid(const std::vector<VarSwapQuote>& varswaps, const std::vector<VixQuote>& vix,
                                          double w_lo = 0.2, double w_hi = 0.8, double vix_scale = 1.0,
                                          double default_xi = 0.3) {
    if (!(w_lo >= 0.0 && w_lo < w_hi && w_hi <= 1.0)) throw DomainError("weight bounds must satisfy 0 <= lo < hi <= 1");
    if (varswaps.size() + vix.size() < 4) throw DomainError("two-factor initializer needs at least 4 mean targets");
    const auto rows = static_cast<Eigen::Index>(varswaps.size() + vix.size());
    TwoFactorSeed out;
    double best = std::numeric_limits<double>::max();
    for (double kf : kappa_fast_grid()) {
        for (double ks : kappa_slow_grid()) {
            if (!(kf > ks)) continue;
            // unknowns: v0_f, theta_f, v0_s, theta_s
            Eigen::MatrixXd A(rows, 4);
            Eigen::VectorXd b(rows);
            Eigen::Index r = 0;
            for (const auto& q : varswaps) {
                const double sw = std::sqrt(q.weight);
                const double ff = detail::decay_fraction(kf * q.maturity), fs = detail::decay_fraction(ks * q.maturity);
                A.row(r) << sw * ff, sw * (1 - ff), sw * fs, sw * (1 - fs);
                b(r++) = sw * q.strike;
            }
            for (const auto& q : vix) {
                const double sw = std::sqrt(q.weight);
                // (1/D) E[Gamma_{t,t+D}] = theta + (m(t) - theta) f(kD), m(t) = theta + (v0 - theta) e^{-kt}
                auto coeffs = [&](double k) {
                    const double e = std::exp(-k * q.start) * detail::decay_fraction(k * q.window);
                    return std::array<double, 2>{e, 1.0 - e};
                };
                const auto cf = coeffs(kf), cs = coeffs(ks);
                const double s = vix_scale * sw;
                A.row(r) << s * cf[0], s * cf[1], s * cs[0], s * cs[1];
                b(r++) = sw * q.value;
            }
            const auto [z, res] = detail::nnls_small(A, b);
            const double total = z.sum();
            if (!(total > 0.0) || !(z(1) + z(3) > 0.0) || !(z(0) + z(2) > 0.0)) continue;
            if (res < best - 1e-14 * std::max(1.0, best)) {
                best = res;
                out.kappa_fast = kf;
                out.kappa_slow = ks;
                out.v0_fast = z(0);
                out.theta_fast = z(1);
                out.v0_slow = z(2);
                out.theta_slow = z(3);
                out.sse = res;
            }
        }
    }
    if (best == std::numeric_limits<double>::max()) {
        std::vector<VarSwapQuote> curve = varswaps;
        const auto one = init_cir_from_varswaps(curve);
        out.fallback_one_factor = true;
        out.kappa_slow = one.kappa;
        out.kappa_fast = one.kappa * 4.0;
        out.v0_slow = one.v0;
        out.theta_slow = one.theta;
        out.alpha_fast = 0.0;
    } else {
        out.alpha_fast = (out.v0_fast + out.theta_fast) /
                         (out.v0_fast + out.theta_fast + out.v0_slow + out.theta_slow);
    }
    out.weight = std::clamp(out.alpha_fast, w_lo, w_hi);
    out.weight_clamped = out.weight != out.alpha_fast;
    const double v0_tot = out.v0_fast + out.v0_slow, theta_tot = out.theta_fast + out.theta_slow;
    out.spec.fast = CirClock{out.kappa_fast, out.weight * theta_tot, default_xi * std::sqrt(out.weight),
                             out.weight * v0_tot};
    out.spec.slow = CirClock{out.kappa_slow, (1 - out.weight) * theta_tot, default_xi * std::sqrt(1 - out.weight),
                             (1 - out.weight) * v0_tot};
    return out;
}

// ---- reparameterisation --------------------------------------------------------------

struct WeightBounds {
    double lo = 0.2;
    double hi = 0.8;
};

namespace detail {

inline double logit_bounded(double a, double lo, double hi) {
    const double p = (a - lo) / (hi - lo);
    if (!(p > 0.0 && p < 1.0)) throw DomainError("fraction lies outside its bounds");
    return std::log(p) - std::log1p(-p);
}

inline double sigmoid_bounded(double z, double lo, double hi) {
    const double p = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
    return lo + (hi - lo) * p;
}

}  // namespace detail

// Unconstrained coordinates. cir: log(v0, theta, kappa, xi). cir2: log totals, bounded logit
// of the fast share, kappa_s = e^g1, kappa_f = e^g1 + e^g2, log xi per factor (xi of the
// scaled factor). sqou: log(alpha, sigma, |y0|). markov: log levels and log positive rates.
inline std::vector<double> to_unconstrained(const ClockSpec& spec, const WeightBounds& wb = {}) {
    validate(spec);
    return std::visit(
        [&](const auto& c) -> std::vector<double> {
            using C = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<C, CirClock>) {
                return {std::log(c.v0), std::log(c.theta), std::log(c.kappa), std::log(c.xi)};
            } else if constexpr (std::is_same_v<C, TwoFactorCirClock>) {
                if (!(c.fast.kappa > c.slow.kappa)) throw DomainError("cir2 requires kappa_fast > kappa_slow");
                const double v0 = c.fast.v0 + c.slow.v0, th = c.fast.theta + c.slow.theta;
                const double a = c.fast.theta / th;
                return {std::log(v0),
                        std::log(th),
                        detail::logit_bounded(a, wb.lo, wb.hi),
                        std::log(c.slow.kappa),
                        std::log(c.fast.kappa - c.slow.kappa),
                        std::log(c.fast.xi),
                        std::log(c.slow.xi)};
            } else if constexpr (std::is_same_v<C, SquaredOuClock>) {
                if (c.y0 == 0.0) throw DomainError("sqou reparameterisation needs y0 != 0");
                return {std::log(c.alpha), std::log(c.sigma), std::log(std::abs(c.y0))};
            } else if constexpr (std::is_same_v<C, MarkovSwitchingClock>) {
                std::vector<double> z;
                for (double l : c.levels) {
                    if (!(l > 0.0)) throw DomainError("markov reparameterisation needs positive levels");
                    z.push_back(std::log(l));
                }
                for (std::size_t i = 0; i < c.levels.size(); ++i)
                    for (std::size_t j = 0; j < c.levels.size(); ++j)
                        if (i != j && c.generator[i][j] > 0.0) z.push_back(std::log(c.generator[i][j]));
                return z;
            } else {
                throw UnsupportedFamilyError(std::string("no calibration parameterisation for family ") + family_name(spec));
            }
        },
        spec);
}

// `shape` supplies the structure (family, zero pattern, initial distribution).
inline ClockSpec from_unconstrained(const ClockSpec& shape, const std::vector<double>& z, const WeightBounds& wb = {}) {
    return std::visit(
        [&](const auto& c) -> ClockSpec {
            using C = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<C, CirClock>) {
                return CirClock{std::exp(z.at(2)), std::exp(z.at(1)), std::exp(z.at(3)), std::exp(z.at(0))};
            } else if constexpr (std::is_same_v<C, TwoFactorCirClock>) {
                const double v0 = std::exp(z.at(0)), th = std::exp(z.at(1));
                const double a = detail::sigmoid_bounded(z.at(2), wb.lo, wb.hi);
                const double ks = std::exp(z.at(3)), kf = ks + std::exp(z.at(4));
                TwoFactorCirClock out;
                out.fast = CirClock{kf, a * th, std::exp(z.at(5)), a * v0};
                out.slow = CirClock{ks, (1 - a) * th, std::exp(z.at(6)), (1 - a) * v0};
                return out;
            } else if constexpr (std::is_same_v<C, SquaredOuClock>) {
                return SquaredOuClock{std::exp(z.at(0)), std::exp(z.at(1)), std::copysign(std::exp(z.at(2)), c.y0)};
            } else if constexpr (std::is_same_v<C, MarkovSwitchingClock>) {
                MarkovSwitchingClock out = c;
                std::size_t k = 0;
                for (auto& l : out.levels) l = std::exp(z.at(k++));
                const std::size_t m = c.levels.size();
                for (std::size_t i = 0; i < m; ++i) {
                    double row = 0.0;
                    for (std::size_t j = 0; j < m; ++j) {
                        if (i == j) continue;
                        if (c.generator[i][j] > 0.0) out.generator[i][j] = std::exp(z.at(k++));
                        row += out.generator[i][j];
                    }
                    out.generator[i][i] = -row;
                }
                return out;
            } else {
                throw UnsupportedFamilyError(std::string("no calibration parameterisation for family ") + family_name(shape));
            }
        },
        shape);
}

// Mean-reversion speeds, for the mild extremes penalty.
inline std::vector<double> reversion_speeds(const ClockSpec& spec) {
    if (const auto* c = std::get_if<CirClock>(&spec)) return {c->kappa};
    if (const auto* c = std::get_if<TwoFactorCirClock>(&spec)) return {c->fast.kappa, c->slow.kappa};
    if (const auto* c = std::get_if<SquaredOuClock>(&spec)) return {2.0 * c->alpha};
    return {};
}

// ---- dispersion initializer ----------------------------------------------------------

namespace detail {

inline ClockSpec scale_dispersion(const ClockSpec& spec, double s) {
    ClockSpec out = spec;
    if (auto* c = std::get_if<CirClock>(&out)) c->xi *= s;
    else if (auto* c2 = std::get_if<TwoFactorCirClock>(&out)) {
        c2->fast.xi *= s;
        c2->slow.xi *= s;
    } else if (auto* o = std::get_if<SquaredOuClock>(&out)) o->sigma *= s;
    return out;
}

}  // namespace detail

// Scale the vol-of-vol so the model ATM implied vol matches the market at the middle
// maturity (1-D bisection). Returns nullopt when the scale cannot be bracketed.
inline std::optional<ClockSpec> init_dispersion_scale(const ClockSpec& seed, const CalibrationDataset& data,
                                                      const CosConfig& cos = {}) {
    std::vector<double> mats;
    for (const auto& q : data.vanillas) mats.push_back(q.maturity);
    std::sort(mats.begin(), mats.end());
    mats.erase(std::unique(mats.begin(), mats.end()), mats.end());
    const double T = mats[mats.size() / 2];
    const double F = data.market.forward(T);
    const VanillaQuote* atm = nullptr;
    for (const auto& q : data.vanillas)
        if (std::abs(q.maturity - T) < 1e-12 && (!atm || std::abs(std::log(q.strike / F)) < std::abs(std::log(atm->strike / F))))
            atm = &q;
    const double target = detail::market_vol(*atm, data.market);
    auto gap = [&](double ls) {
        const ClockSpec s = detail::scale_dispersion(seed, std::exp(ls));
        const double p = cos_vanilla_price(s, data.market, *atm, cos);
        return implied_vol(p, data.market, *atm) - target;
    };
    try {
        const double ls = numerics::find_root(gap, std::log(0.02), std::log(8.0), 1e-10);
        return detail::scale_dispersion(seed, std::exp(ls));
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

// ---- rho fit on cached coefficients -----------------------------------------------------

struct RhoQuote {
    const leverage::ExpansionCoefficients* coefficients = nullptr;
    double value = 0.0;
    double weight = 1.0;
    double offset = 0.0;  // added to the expansion value (baseline re-pricing shift)
};

struct RhoFit {
    double rho = 0.0;
    double sse = 0.0;
    std::vector<std::string> routes;
    bool all_low_order = false;
};

inline RhoFit fit_rho_cached(const std::vector<RhoQuote>& quotes, double lo = -0.99, double hi = 0.99) {
    if (quotes.empty()) throw DomainError("fit_rho_cached needs at least one leverage-sensitive quote");
    for (const auto& q : quotes)
        if (!q.coefficients || q.coefficients->values.empty()) throw DomainError("quote without cached coefficients");
    auto sse = [&](double rho) {
        double s = 0.0;
        for (const auto& q : quotes) {
            const double e = leverage::evaluate_with_fallback(q.coefficients->values, rho).value + q.offset - q.value;
            s += q.weight * e * e;
        }
        return s;
    };
    const int n = 198;
    int best = 0;
    double best_val = std::numeric_limits<double>::max();
    for (int i = 0; i <= n; ++i) {
        const double v = sse(lo + (hi - lo) * i / n);
        if (v < best_val) {
            best_val = v;
            best = i;
        }
    }
    const double step = (hi - lo) / n;
    const auto m = numerics::golden_section(sse, std::max(lo, lo + (best - 1) * step), std::min(hi, lo + (best + 1) * step), 1e-12);
    RhoFit out;
    out.rho = m.value <= best_val ? m.x : lo + best * step;
    out.sse = sse(out.rho);
    out.all_low_order = true;
    for (const auto& q : quotes) {
        const auto r = leverage::evaluate_with_fallback(q.coefficients->values, out.rho);
        out.routes.push_back(r.route);
        if (r.rejected.empty() && r.route != "taylor" && r.route != "taylor-clamped") out.all_low_order = false;
    }
    if (out.rho == 0.0) out.all_low_order = false;
    return out;
}

// ---- staged pipeline ----------------------------------------------------------------

struct StageRecord {
    int stage = 0;
    double objective = 0.0;
    bool accepted = false;
    bool skipped = false;
    int iterations = 0;
    double seconds = 0.0;
};

struct CalibrationResult {
    ClockSpec spec{};
    double rho = 0.0;
    std::vector<double> rho_maturities;
    std::vector<double> rho_by_maturity;
    std::vector<StageRecord> stages;
    ObjectiveBreakdown final_breakdown;
    std::vector<std::string> rho_routes;
    std::vector<std::string> flags;
    double objective = 0.0;
};

struct PipelineConfig {
    std::string stages = "1234";
    ObjectiveConfig objective{};
    WeightBounds weight_bounds{};
    numerics::PowellOptions stage1{0.25, 1e-10, 40, 4000};
    numerics::PowellOptions stage2{0.1, 1e-10, 20, 3000};
    int joint_iterations = 20;        // Powell sweeps in stage 4, all rounds together
    int joint_rounds = 2;             // coefficient refreshes inside stage 4
    bool per_maturity_rho = false;
    double rho_smoothness = 1e-2;     // squared second differences of rho(T)
    double extremes_penalty = 1e-4;   // (|log kappa| beyond [0.01, 20])^2
    leverage::ExpansionConfig expansion = default_expansion();
    std::optional<ClockSpec> initial;

    static leverage::ExpansionConfig default_expansion() {
        leverage::ExpansionConfig e;
        e.order = 3;
        e.first_order_route = leverage::CoefficientRoute::ForcedPde;
        e.estimate_discretization = false;
        e.pde.nx = 121;
        e.pde.ny = 49;
        e.pde.nt = 100;
        e.pde.solve_baseline = false;
        return e;
    }
    bool runs(int stage) const { return stages.find(static_cast<char>('0' + stage)) != std::string::npos; }
};

namespace detail {

inline std::vector<VarSwapQuote> effective_varswaps(const CalibrationDataset& data, std::vector<std::string>& flags) {
    if (data.varswaps.size() >= 3) return data.varswaps;
    // ATM implied variance per maturity stands in for missing variance-swap quotes
    std::map<double, std::pair<double, double>> atm;  // T -> (|log moneyness|, var)
    for (const auto& q : data.vanillas) {
        const double d = std::abs(std::log(q.strike / data.market.forward(q.maturity)));
        const double iv = market_vol(q, data.market);
        auto it = atm.find(q.maturity);
        if (it == atm.end() || d < it->second.first) atm[q.maturity] = {d, iv * iv};
    }
    std::vector<VarSwapQuote> out = data.varswaps;
    for (const auto& [T, dv] : atm)
        if (std::none_of(out.begin(), out.end(), [&](const auto& v) { return std::abs(v.maturity - T) < 1e-12; }))
            out.push_back({T, dv.second, 1.0});
    flags.push_back("variance-swap curve completed from ATM implied variances");
    return out;
}

inline ClockSpec family_seed(const std::string& family, const CalibrationDataset& data, const WeightBounds& wb,
                             std::vector<std::string>& flags) {
    const auto curve = effective_varswaps(data, flags);
    if (family == "cir2") {
        const auto s = init_two_factor_grid(curve, data.vix, wb.lo, wb.hi, data.vix_scale);
        if (s.fallback_one_factor) flags.push_back("two-factor grid infeasible; seeded from the one-factor initializer");
        if (s.weight_clamped) flags.push_back("two-factor fast share clamped into weight bounds");
        TwoFactorCirClock c = s.spec;
        // keep the seed strictly inside the bounds
        const double th = c.fast.theta + c.slow.theta, v0 = c.fast.v0 + c.slow.v0;
        const double a = std::clamp(s.weight, wb.lo + 1e-3 * (wb.hi - wb.lo), wb.hi - 1e-3 * (wb.hi - wb.lo));
        c.fast.theta = a * th;
        c.fast.v0 = a * v0;
        c.slow.theta = (1 - a) * th;
        c.slow.v0 = (1 - a) * v0;
        return c;
    }
    const auto s = init_cir_from_varswaps(curve);
    if (s.flat_curve) flags.push_back("flat variance-swap curve: kappa unidentified, seeded at 1");
    const double xi = 0.5 * std::sqrt(2.0 * s.kappa * s.theta);
    if (family == "cir") return CirClock{s.kappa, s.theta, xi, s.v0};
    if (family == "sqou") {
        const double alpha = 0.5 * s.kappa;
        return SquaredOuClock{alpha, std::sqrt(2.0 * alpha * s.theta), std::sqrt(s.v0)};
    }
    if (family == "markov") {
        MarkovSwitchingClock m;
        const double lo = 0.6 * s.theta, hi = 1.4 * s.theta, q = 0.5 * s.kappa;
        m.levels = {lo, hi};
        m.generator = {{-q, q}, {q, -q}};
        const double p = std::clamp((s.v0 - lo) / (hi - lo), 0.0, 1.0);
        m.initial_dist = {1.0 - p, p};
        return m;
    }
    throw DomainError("unknown calibration family '" + family + "' (expected cir, cir2, sqou or markov)");
}

inline std::string family_of(const ClockSpec& spec) { return family_name(spec); }

}  // namespace detail

inline bool leverage_supported(const BarrierContract& c, const ClockSpec& spec) {
    if (!std::holds_alternative<CirClock>(spec) && !std::holds_alternative<SquaredOuClock>(spec)) return false;
    if (c.kind == BarrierKind::DownOutCall) return c.strike > c.lower_barrier;
    if (c.kind == BarrierKind::UpOutPut) return c.strike < c.upper_barrier;
    return false;
}

inline CalibrationResult run_stage_pipeline(const CalibrationDataset& input, const std::string& family,
                                            const PipelineConfig& cfg = {}) {
    using clock = std::chrono::steady_clock;
    input.validate();
    CalibrationResult res;
    const CalibrationDataset data = apply_discrete_monitoring_correction(input, &res.flags);
    const auto& wb = cfg.weight_bounds;

    ClockSpec spec = cfg.initial ? *cfg.initial : detail::family_seed(family, data, wb, res.flags);
    if (cfg.initial && family != detail::family_of(spec))
        throw DomainError("initial parameters are not of family " + family);

    // effective barrier set: positive weight under a positive barrier weighting
    bool has_barriers = false;
    for (const auto& b : data.barriers) has_barriers |= b.weight > 0.0 && cfg.objective.barrier_weight > 0.0;

    CalibrationDataset vanilla_only = data;
    vanilla_only.barriers.clear();

    LeverageCache lev;
    std::vector<double> rho_keys;
    for (const auto& b : data.barriers)
        if (std::none_of(rho_keys.begin(), rho_keys.end(), [&](double t) { return std::abs(t - b.contract.maturity) < 1e-12; }))
            rho_keys.push_back(b.contract.maturity);
    std::sort(rho_keys.begin(), rho_keys.end());
    lev.maturity_rho_keys = rho_keys;
    std::vector<double> rho_vec;  // per-maturity values when enabled
    double rho = 0.0;

    auto penalty = [&](const ClockSpec& s) {
        double p = 0.0;
        for (double k : reversion_speeds(s)) {
            const double over = std::max(0.0, std::log(k) - std::log(20.0)) + std::max(0.0, std::log(0.01) - std::log(k));
            p += over * over;
        }
        return cfg.extremes_penalty * p;
    };
    auto full_objective = [&](const ClockSpec& s, double r, const std::vector<double>& rv, bool use_lev) {
        return objective_breakdown(s, data, r, cfg.objective, use_lev ? &lev : nullptr, rv).value;
    };
    auto smooth = [&](const std::vector<double>& rv) {
        double p = 0.0;
        for (std::size_t i = 2; i < rv.size(); ++i) {
            const double d = rv[i] - 2 * rv[i - 1] + rv[i - 2];
            p += d * d;
        }
        return cfg.rho_smoothness * p;
    };

    bool lev_ready = false;
    double current = full_objective(spec, 0.0, {}, false);
    res.stages.push_back({0, current, true, false, 0, 0.0});

    auto accept = [&](int stage, const ClockSpec& cand, double cand_rho, const std::vector<double>& cand_rv,
                      double value, int iters, double secs) {
        StageRecord rec{stage, value, false, false, iters, secs};
        if (value <= current * (1.0 + 1e-12) + 1e-300) {
            rec.accepted = true;
            spec = cand;
            rho = cand_rho;
            rho_vec = cand_rv;
            current = value;
        } else {
            rec.objective = value;
            res.flags.push_back("stage " + std::to_string(stage) + " rejected: objective increased");
        }
        res.stages.push_back(rec);
    };
    auto skip = [&](int stage) { res.stages.push_back({stage, current, false, true, 0, 0.0}); };

    // Stage 1: vanilla-only at rho = 0
    if (cfg.runs(1)) {
        const auto t0 = clock::now();
        ClockSpec seed = spec;
        if (!cfg.initial) {
            if (auto d = init_dispersion_scale(spec, data, cfg.objective.cos))
                seed = *d;
            else
                res.flags.push_back("dispersion initializer could not bracket the ATM level; kept seed");
        }
        auto f = [&](const std::vector<double>& z) {
            const ClockSpec s = from_unconstrained(seed, z, wb);
            try {
                validate(s);
            } catch (const DomainError&) {
                return std::numeric_limits<double>::max();
            }
            return objective_eval(s, vanilla_only, 0.0, cfg.objective) + penalty(s);
        };
        const auto r = numerics::powell_minimize(f, to_unconstrained(seed, wb), cfg.stage1);
        const ClockSpec s1 = from_unconstrained(seed, r.x, wb);
        accept(1, s1, 0.0, {}, full_objective(s1, 0.0, {}, false), r.iterations,
               std::chrono::duration<double>(clock::now() - t0).count());
    } else {
        skip(1);
    }

    // Stage 2: barrier refinement at rho = 0
    if (cfg.runs(2) && has_barriers) {
        const auto t0 = clock::now();
        const ClockSpec base = spec;
        auto f = [&](const std::vector<double>& z) {
            const ClockSpec s = from_unconstrained(base, z, wb);
            try {
                validate(s);
            } catch (const DomainError&) {
                return std::numeric_limits<double>::max();
            }
            return full_objective(s, 0.0, {}, false) + penalty(s);
        };
        const auto r = numerics::powell_minimize(f, to_unconstrained(base, wb), cfg.stage2);
        const ClockSpec s2 = from_unconstrained(base, r.x, wb);
        accept(2, s2, 0.0, {}, full_objective(s2, 0.0, {}, false), r.iterations,
               std::chrono::duration<double>(clock::now() - t0).count());
    } else {
        skip(2);
    }

    // leverage coefficients at the current parameters
    auto refresh = [&]() {
        lev.coefficients.assign(data.barriers.size(), std::nullopt);
        std::size_t n_sensitive = 0;
        for (std::size_t i = 0; i < data.barriers.size(); ++i) {
            const auto& b = data.barriers[i];
            if (!(b.weight > 0.0)) continue;
            if (!leverage_supported(b.contract, spec)) {
                res.flags.push_back("barrier quote " + std::to_string(i) + " treated as rho-insensitive");
                continue;
            }
            lev.coefficients[i] = leverage::compute_expansion(b.contract, data.market, spec, cfg.expansion);
            ++n_sensitive;
        }
        lev_ready = true;
        return n_sensitive;
    };
    // rho fit against the cached coefficients; baseline offsets keep C0 exact
    auto fit_rho = [&](std::vector<std::string>& routes, bool& low) -> std::pair<double, std::vector<double>> {
        std::vector<RhoQuote> all;
        std::vector<double> mats;
        for (std::size_t i = 0; i < data.barriers.size(); ++i) {
            if (!lev.coefficients[i]) continue;
            const auto& b = data.barriers[i];
            const double c0 = leverage::baseline_price(b.contract, data.market, spec);
            all.push_back({&*lev.coefficients[i], b.value, b.weight, c0 - lev.coefficients[i]->values[0]});
            mats.push_back(b.contract.maturity);
        }
        const auto whole = fit_rho_cached(all);
        routes = whole.routes;
        low = whole.all_low_order;
        if (!cfg.per_maturity_rho) return {whole.rho, {}};
        std::vector<double> rv(rho_keys.size(), whole.rho);
        for (std::size_t k = 0; k < rho_keys.size(); ++k) {
            std::vector<RhoQuote> sub;
            for (std::size_t i = 0; i < all.size(); ++i)
                if (std::abs(mats[i] - rho_keys[k]) < 1e-12) sub.push_back(all[i]);
            if (!sub.empty()) rv[k] = fit_rho_cached(sub).rho;
        }
        return {whole.rho, rv};
    };

    // Stage 3: rho from cached coefficients
    bool any_sensitive = false;
    if (cfg.runs(3) && has_barriers) {
        const auto t0 = clock::now();
        any_sensitive = refresh() > 0;
        if (any_sensitive) {
            bool low = false;
            const auto [r3, rv3] = fit_rho(res.rho_routes, low);
            if (low) res.flags.push_back("all leverage quotes evaluated on low-order fallbacks (extrapolation risk)");
            accept(3, spec, r3, rv3, full_objective(spec, r3, rv3, true) + smooth(rv3), 1,
                   std::chrono::duration<double>(clock::now() - t0).count());
        } else {
            skip(3);
        }
    } else {
        skip(3);
    }

    // Stage 4: joint polish over (theta, rho) with the cached leverage correction
    if (cfg.runs(4) && has_barriers) {
        const auto t0 = clock::now();
        if (!lev_ready) any_sensitive = refresh() > 0;
        const double before = current;
        const ClockSpec spec_before = spec;
        const double rho_before = rho;
        const auto rv_before = rho_vec;
        const LeverageCache lev_before = lev;
        int used = 0;
        const int rounds = std::max(1, cfg.joint_rounds);
        for (int round = 0; round < rounds && used < cfg.joint_iterations; ++round) {
            const ClockSpec base = spec;
            const std::size_t nz = to_unconstrained(base, wb).size();
            auto unpack_rho = [&](const std::vector<double>& z, double& r, std::vector<double>& rv) {
                rv.clear();
                r = rho;
                if (!any_sensitive) return;
                if (cfg.per_maturity_rho) {
                    for (std::size_t k = 0; k < rho_keys.size(); ++k) rv.push_back(0.99 * std::tanh(z[nz + k]));
                } else {
                    r = 0.99 * std::tanh(z[nz]);
                }
            };
            auto f = [&](const std::vector<double>& z) {
                const ClockSpec s = from_unconstrained(base, std::vector<double>(z.begin(), z.begin() + nz), wb);
                try {
                    validate(s);
                } catch (const DomainError&) {
                    return std::numeric_limits<double>::max();
                }
                double r;
                std::vector<double> rv;
                unpack_rho(z, r, rv);
                return full_objective(s, r, rv, any_sensitive) + smooth(rv) + penalty(s);
            };
            std::vector<double> z0 = to_unconstrained(base, wb);
            if (any_sensitive) {
                if (cfg.per_maturity_rho) {
                    for (std::size_t k = 0; k < rho_keys.size(); ++k)
                        z0.push_back(std::atanh(std::clamp((rho_vec.empty() ? rho : rho_vec[k]) / 0.99, -0.999999, 0.999999)));
                } else {
                    z0.push_back(std::atanh(std::clamp(rho / 0.99, -0.999999, 0.999999)));
                }
            }
            auto opt = cfg.stage2;
            opt.max_iterations = std::max(1, (cfg.joint_iterations - used) / (rounds - round));
            const auto r = numerics::powell_minimize(f, z0, opt);
            used += r.iterations;
            const ClockSpec s4 = from_unconstrained(base, std::vector<double>(r.x.begin(), r.x.begin() + nz), wb);
            double r4;
            std::vector<double> rv4;
            unpack_rho(r.x, r4, rv4);
            const double value = full_objective(s4, r4, rv4, any_sensitive) + smooth(rv4);
            const bool ok = value <= current * (1.0 + 1e-12) + 1e-300;
            if (ok) {
                spec = s4;
                rho = r4;
                rho_vec = rv4;
                current = value;
            }
            // re-anchor the leverage correction at the polished parameters
            if (any_sensitive && round + 1 < rounds) {
                refresh();
                bool low = false;
                const auto [rr, rrv] = fit_rho(res.rho_routes, low);
                const double v = full_objective(spec, rr, rrv, true) + smooth(rrv);
                if (v <= current) {
                    rho = rr;
                    rho_vec = rrv;
                }
                current = full_objective(spec, rho, rho_vec, true) + smooth(rho_vec);
            }
        }
        StageRecord rec{4, current, true, false, used, std::chrono::duration<double>(clock::now() - t0).count()};
        if (current > before * (1.0 + 1e-12) + 1e-300) {
            res.flags.push_back("stage 4 rejected: objective increased after re-anchoring the leverage coefficients");
            rec.accepted = false;
            spec = spec_before;
            rho = rho_before;
            rho_vec = rv_before;
            lev = lev_before;
            current = before;
        }
        res.stages.push_back(rec);
    } else {
        skip(4);
    }

    res.spec = spec;
    res.rho = rho;
    if (cfg.per_maturity_rho) {
        res.rho_maturities = rho_keys;
        res.rho_by_maturity = rho_vec;
    }
    res.final_breakdown = objective_breakdown(spec, data, rho, cfg.objective, lev_ready ? &lev : nullptr, rho_vec);
    res.objective = res.final_breakdown.value;
    for (const auto& f : res.final_breakdown.flags) res.flags.push_back(f);
    for (const auto& w : warnings(spec)) res.flags.push_back(w);
    return res;
}

// Model-generated quotes: vanillas from COS at rho = 0, barriers from the leverage expansion at rho.
struct SyntheticSpec {
    std::vector<double> maturities{0.25, 0.5, 1.0, 2.0};
    std::vector<double> strikes{80.0, 90.0, 100.0, 110.0, 120.0};
    std::vector<BarrierContract> barriers;
    double rho = 0.0;
    std::vector<double> varswap_maturities{0.25, 0.5, 1.0, 2.0, 5.0};
};

inline CalibrationDataset synthetic_dataset(const ClockSpec& truth, const MarketEnv& market, const SyntheticSpec& s,
                                            const leverage::ExpansionConfig& ec = PipelineConfig::default_expansion()) {
    CalibrationDataset d;
    d.market = market;
    for (double T : s.varswap_maturities) d.varswaps.push_back({T, variance_swap_strike(truth, T), 1.0});
    for (double T : s.maturities) {
        CosPricer pricer(truth, market, T);
        for (double K : s.strikes) {
            VanillaQuote q;
            q.maturity = T;
            q.strike = K;
            q.kind = K < market.forward(T) ? OptionKind::Put : OptionKind::Call;
            q.value = pricer.price(K, q.kind);
            q.implied_vol = implied_vol(q.value, market, q);
            d.vanillas.push_back(q);
        }
    }
    for (const auto& c : s.barriers) {
        double v = 0.0;
        if (s.rho == 0.0) {
            v = price_barrier(c, market, laplace_of(truth, c.maturity));
        } else {
            const auto e = leverage::compute_expansion(c, market, truth, ec);
            v = leverage::evaluate_with_fallback(e.values, s.rho).value;
        }
        d.barriers.push_back({c, v, 1.0, 0.0});
    }
    d.validate();
    return d;
}

}  // namespace sclock::calib
