#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sclock/leverage/grids.hpp"
#include "sclock/leverage/spectral.hpp"

namespace sclock::leverage {

struct PdeGridConfig {
    std::size_t nx = 201;
    std::size_t ny = 81;
    std::size_t nt = 250;
    std::size_t rannacher_steps = 2;
    bool solve_baseline = true;  // also march u0 on the grid (diagnostic only)
    SpectralConfig spectral{};
};

struct PdeSolution {
    std::vector<double> coefficients;       // C_1..C_N (discounted)
    double baseline_on_grid = 0.0;          // grid C_0, for discretisation diagnostics
    std::vector<double> taus;               // time-to-go levels
    std::vector<std::vector<double>> forcing_sup;  // [n][level]: sup |L1 u_n| (undiscounted)
    std::vector<Eigen::MatrixXd> fields;    // u_0..u_N at t = 0 (rows y, cols x), undiscounted
    std::vector<double> xs, ys;
    double discount = 1.0;
};

namespace detail {

// Thomas algorithm for a tridiagonal system; a: sub, b: diag, c: super.
inline void solve_tridiagonal(const std::vector<double>& a, const std::vector<double>& b, const std::vector<double>& c,
                              std::vector<double>& d, std::vector<double>& scratch) {
    const std::size_t n = d.size();
    scratch.resize(n);
    double beta = b[0];
    d[0] /= beta;
    for (std::size_t i = 1; i < n; ++i) {
        scratch[i] = c[i - 1] / beta;
        beta = b[i] - a[i] * scratch[i];
        d[i] = (d[i] - a[i] * d[i - 1]) / beta;
    }
    for (std::size_t i = n - 1; i-- > 0;) d[i] -= scratch[i + 1] * d[i + 1];
}

// Three-point operator stencils: (lo, mid, hi) per node.
struct Stencil {
    std::vector<double> lo, mid, hi;
    void resize(std::size_t n) {
        lo.assign(n, 0.0);
        mid.assign(n, 0.0);
        hi.assign(n, 0.0);
    }
};

class HierarchySolver {
public:
    HierarchySolver(const BarrierContract& contract, const MarketEnv& market, const ClockSpec& spec,
                    const PdeGridConfig& cfg)
        : contract_(contract), spec_(spec), cfg_(cfg) {
        if (cfg.nx < 11 || cfg.ny < 7 || cfg.nt < 4)
            throw NumericalError("PDE grid too coarse (nx >= 11, ny >= 7, nt >= 4 required); refine the grid");
        const Box box = live_box(contract, market, spec);
        xs_ = linspace(box.x_lo, box.x_hi, cfg.nx);
        ys_ = linspace(box.y_lo, box.y_hi, cfg.ny);
        dx_ = xs_[1] - xs_[0];
        dy_ = ys_[1] - ys_[0];
        build_x_stencils();
        build_y_stencils();
    }

    const std::vector<double>& xs() const { return xs_; }
    const std::vector<double>& ys() const { return ys_; }
    double max_cell_peclet() const { return max_peclet_; }

    // Apply A_x (rows) or A_y (columns) to U.
    Eigen::MatrixXd apply_x(const Eigen::MatrixXd& U) const {
        Eigen::MatrixXd R = Eigen::MatrixXd::Zero(U.rows(), U.cols());
        for (Eigen::Index j = 0; j < U.rows(); ++j) {
            const auto& s = sx_[static_cast<std::size_t>(j)];
            for (Eigen::Index i = 1; i + 1 < U.cols(); ++i) {
                const auto k = static_cast<std::size_t>(i);
                R(j, i) = s.lo[k] * U(j, i - 1) + s.mid[k] * U(j, i) + s.hi[k] * U(j, i + 1);
            }
        }
        return R;
    }
    Eigen::MatrixXd apply_y(const Eigen::MatrixXd& U) const {
        Eigen::MatrixXd R = Eigen::MatrixXd::Zero(U.rows(), U.cols());
        const Eigen::Index ny = U.rows();
        for (Eigen::Index i = 1; i + 1 < U.cols(); ++i) {
            for (Eigen::Index j = 0; j < ny; ++j) {
                const auto k = static_cast<std::size_t>(j);
                double v = sy_.mid[k] * U(j, i);
                if (j > 0) v += sy_.lo[k] * U(j - 1, i);
                if (j + 1 < ny) v += sy_.hi[k] * U(j + 1, i);
                R(j, i) = v;
            }
        }
        return R;
    }

    // One Douglas step in time-to-go: U_tau = (A_x + A_y) U + F.
    void douglas_step(Eigen::MatrixXd& U, const Eigen::MatrixXd& F, double dtau, double theta,
                      const std::vector<double>& left, const std::vector<double>& right) const {
        const Eigen::MatrixXd AxU = apply_x(U);
        const Eigen::MatrixXd AyU = apply_y(U);
        Eigen::MatrixXd Y = U + dtau * (AxU + AyU + F);
        const Eigen::Index ny = U.rows(), nx = U.cols();
        // x sweeps
        std::vector<double> a(static_cast<std::size_t>(nx)), b(a.size()), c(a.size()), d(a.size()), scratch;
        for (Eigen::Index j = 0; j < ny; ++j) {
            const auto& s = sx_[static_cast<std::size_t>(j)];
            for (Eigen::Index i = 0; i < nx; ++i) {
                const auto k = static_cast<std::size_t>(i);
                if (i == 0 || i == nx - 1) {
                    a[k] = 0.0;
                    b[k] = 1.0;
                    c[k] = 0.0;
                    d[k] = i == 0 ? left[static_cast<std::size_t>(j)] : right[static_cast<std::size_t>(j)];
                } else {
                    a[k] = -theta * dtau * s.lo[k];
                    b[k] = 1.0 - theta * dtau * s.mid[k];
                    c[k] = -theta * dtau * s.hi[k];
                    d[k] = Y(j, i) - theta * dtau * AxU(j, i);
                }
            }
            solve_tridiagonal(a, b, c, d, scratch);
            for (Eigen::Index i = 0; i < nx; ++i) Y(j, i) = d[static_cast<std::size_t>(i)];
        }
        // y sweeps
        a.resize(static_cast<std::size_t>(ny));
        b.resize(a.size());
        c.resize(a.size());
        d.resize(a.size());
        for (Eigen::Index i = 1; i + 1 < nx; ++i) {
            for (Eigen::Index j = 0; j < ny; ++j) {
                const auto k = static_cast<std::size_t>(j);
                a[k] = -theta * dtau * sy_.lo[k];
                b[k] = 1.0 - theta * dtau * sy_.mid[k];
                c[k] = -theta * dtau * sy_.hi[k];
                d[k] = Y(j, i) - theta * dtau * AyU(j, i);
            }
            solve_tridiagonal(a, b, c, d, scratch);
            for (Eigen::Index j = 0; j < ny; ++j) U(j, i) = d[static_cast<std::size_t>(j)];
        }
        for (Eigen::Index j = 0; j < ny; ++j) {
            U(j, 0) = left[static_cast<std::size_t>(j)];
            U(j, nx - 1) = right[static_cast<std::size_t>(j)];
        }
    }

    // coupling(y) * d_xy U by central differences (one-sided at y edges); zero on x edges.
    Eigen::MatrixXd mixed_forcing(const Eigen::MatrixXd& U) const {
        const Eigen::Index ny = U.rows(), nx = U.cols();
        Eigen::MatrixXd F = Eigen::MatrixXd::Zero(ny, nx);
        for (Eigen::Index j = 0; j < ny; ++j) {
            const double c = coupling(spec_, ys_[static_cast<std::size_t>(j)]);
            if (c == 0.0) continue;
            const Eigen::Index jl = j == 0 ? 0 : j - 1, jh = j == ny - 1 ? ny - 1 : j + 1;
            const double span = static_cast<double>(jh - jl) * dy_;
            for (Eigen::Index i = 1; i + 1 < nx; ++i) {
                const double dxy = (U(jh, i + 1) - U(jh, i - 1) - U(jl, i + 1) + U(jl, i - 1)) / (2.0 * dx_ * span);
                F(j, i) = c * dxy;
            }
        }
        return F;
    }

private:
    void build_x_stencils() {
        sx_.resize(ys_.size());
        for (std::size_t j = 0; j < ys_.size(); ++j) {
            const double v = activity(ys_[j]);
            auto& s = sx_[j];
            s.resize(xs_.size());
            for (std::size_t i = 1; i + 1 < xs_.size(); ++i) {
                const double diff = 0.5 * v / (dx_ * dx_);
                const double conv = kBeta * v / (2.0 * dx_);
                s.lo[i] = diff - conv;
                s.mid[i] = -2.0 * diff;
                s.hi[i] = diff + conv;
            }
        }
    }

    void build_y_stencils() {
        const std::size_t ny = ys_.size();
        sy_.resize(ny);
        for (std::size_t j = 0; j < ny; ++j) {
            const double y = ys_[j];
            double drift, diff;
            if (const auto* c = std::get_if<CirClock>(&spec_)) {
                drift = c->kappa * (c->theta - y);
                diff = 0.5 * c->xi * c->xi * std::max(y, 0.0);
            } else {
                const auto& o = std::get<SquaredOuClock>(spec_);
                drift = -o.alpha * y;
                diff = 0.5 * o.sigma * o.sigma;
            }
            if (j == 0) {
                // inflow edge: one-sided drift, no curvature
                sy_.mid[j] = -std::max(drift, 0.0) / dy_;
                sy_.hi[j] = std::max(drift, 0.0) / dy_;
                continue;
            }
            if (j == ny - 1) {
                sy_.lo[j] = std::max(-drift, 0.0) / dy_;
                sy_.mid[j] = -std::max(-drift, 0.0) / dy_;
                continue;
            }
            const double peclet = std::abs(drift) * dy_ / (2.0 * std::max(diff, 1e-300));
            max_peclet_ = std::max(max_peclet_, diff > 0.0 ? peclet : 0.0);
            double lo = diff / (dy_ * dy_), hi = lo, mid = -2.0 * lo;
            if (peclet <= 1.0) {
                lo -= drift / (2.0 * dy_);
                hi += drift / (2.0 * dy_);
            } else if (drift > 0.0) {
                hi += drift / dy_;
                mid -= drift / dy_;
            } else {
                lo -= drift / dy_;
                mid += drift / dy_;
            }
            sy_.lo[j] = lo;
            sy_.mid[j] = mid;
            sy_.hi[j] = hi;
        }
    }

    double activity(double y) const {
        return std::holds_alternative<SquaredOuClock>(spec_) ? y * y : std::max(y, 0.0);
    }

    BarrierContract contract_;
    const ClockSpec& spec_;
    PdeGridConfig cfg_;
    std::vector<double> xs_, ys_;
    double dx_ = 0.0, dy_ = 0.0;
    std::vector<Stencil> sx_;
    Stencil sy_;
    double max_peclet_ = 0.0;
};

// Quadratic Lagrange interpolation on a uniform tensor grid.
inline double biquadratic(const Eigen::MatrixXd& U, const std::vector<double>& xs, const std::vector<double>& ys,
                          double x, double y) {
    auto pick = [](const std::vector<double>& g, double z, std::size_t& i0) {
        const double h = g[1] - g[0];
        auto i = static_cast<long>(std::lround((z - g[0]) / h));
        i = std::clamp<long>(i, 1, static_cast<long>(g.size()) - 2);
        i0 = static_cast<std::size_t>(i - 1);
    };
    auto weights = [](const std::vector<double>& g, std::size_t i0, double z, double w[3]) {
        for (int a = 0; a < 3; ++a) {
            w[a] = 1.0;
            for (int b = 0; b < 3; ++b)
                if (a != b) w[a] *= (z - g[i0 + static_cast<std::size_t>(b)]) / (g[i0 + static_cast<std::size_t>(a)] - g[i0 + static_cast<std::size_t>(b)]);
        }
    };
    std::size_t ix, iy;
    pick(xs, x, ix);
    pick(ys, y, iy);
    double wx[3], wy[3];
    weights(xs, ix, x, wx);
    weights(ys, iy, y, wy);
    double v = 0.0;
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
            v += wy[a] * wx[b] * U(static_cast<Eigen::Index>(iy) + a, static_cast<Eigen::Index>(ix) + b);
    return v;
}

}  // namespace detail

// Solves (d_t + L0) u_n = -L1 u_{n-1}, n = 1..N, backward from zero terminal data with
// Dirichlet zero at the barriers. The n = 1 forcing is the semi-analytic mixed derivative
// of the baseline; n >= 2 forcings are central differences of the previous grid field.
inline PdeSolution solve_forced_hierarchy(const BarrierContract& contract, const MarketEnv& market,
                                          const ClockSpec& spec, std::size_t order, const PdeGridConfig& cfg = {}) {
    contract.validate();
    market.validate();
    validate(spec);
    require_scalar_factor(spec);
    if (order < 1) throw DomainError("expansion order must be >= 1");
    const double T = contract.maturity;
    const double x0 = std::log(market.forward(T));
    if (sclock::leverage::detail::outside_corridor(contract, x0))
        throw KnockedOutError("forward outside the live region");

    detail::HierarchySolver solver(contract, market, spec, cfg);
    const auto& xs = solver.xs();
    const auto& ys = solver.ys();
    const auto nx = static_cast<Eigen::Index>(xs.size()), ny = static_cast<Eigen::Index>(ys.size());
    const auto sb = spectral_baseline(contract, cfg.spectral);
    const double dtau = T / static_cast<double>(cfg.nt);

    // baseline terminal data and far-field values
    const double K = contract.strike;
    auto payoff = [&](double x) {
        if (sclock::leverage::detail::outside_corridor(contract, x)) return 0.0;
        return contract.is_call() ? std::max(std::exp(x) - K, 0.0) : std::max(K - std::exp(x), 0.0);
    };
    std::vector<double> zeros(static_cast<std::size_t>(ny), 0.0);
    std::vector<double> base_left(zeros), base_right(zeros);
    if (!contract.has_lower()) std::fill(base_left.begin(), base_left.end(), payoff(xs.front()));
    if (!contract.has_upper()) std::fill(base_right.begin(), base_right.end(), payoff(xs.back()));

    std::vector<Eigen::MatrixXd> U(order + 1, Eigen::MatrixXd::Zero(ny, nx));
    if (cfg.solve_baseline)
        for (Eigen::Index j = 0; j < ny; ++j)
            for (Eigen::Index i = 0; i < nx; ++i) U[0](j, i) = payoff(xs[static_cast<std::size_t>(i)]);

    PdeSolution out;
    out.xs = xs;
    out.ys = ys;
    out.discount = market.discount(T);

    // forcings at the current level
    std::vector<Eigen::MatrixXd> F_old(order + 1, Eigen::MatrixXd::Zero(ny, nx));
    F_old[1] = forcing_table(sb, spec, 0.0, xs, ys, cfg.spectral.decay_exponent);
    out.forcing_sup.assign(order + 1, {});
    auto record = [&](const std::vector<Eigen::MatrixXd>& F) {
        for (std::size_t n = 0; n < order; ++n) out.forcing_sup[n].push_back(F[n + 1].cwiseAbs().maxCoeff());
        out.forcing_sup[order].push_back(solver.mixed_forcing(U[order]).cwiseAbs().maxCoeff());
    };
    for (std::size_t n = 2; n <= order; ++n) F_old[n] = solver.mixed_forcing(U[n - 1]);
    out.taus.push_back(0.0);
    record(F_old);

    auto advance = [&](double tau_from, double step, double theta) {
        const double tau_to = tau_from + step;
        std::vector<Eigen::MatrixXd> F_new(order + 1);
        if (cfg.solve_baseline) {
            Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(ny, nx);
            solver.douglas_step(U[0], zero, step, theta, base_left, base_right);
        }
        F_new[1] = forcing_table(sb, spec, tau_to, xs, ys, cfg.spectral.decay_exponent);
        for (std::size_t n = 1; n <= order; ++n) {
            if (n >= 2) F_new[n] = solver.mixed_forcing(U[n - 1]);
            const Eigen::MatrixXd Fbar = theta >= 1.0 ? F_new[n] : Eigen::MatrixXd(0.5 * (F_old[n] + F_new[n]));
            solver.douglas_step(U[n], Fbar, step, theta, zeros, zeros);
        }
        F_old = std::move(F_new);
        out.taus.push_back(tau_to);
        record(F_old);
    };

    std::size_t m = 0;
    double tau = 0.0;
    for (; m < std::min(cfg.rannacher_steps, cfg.nt); ++m) {
        advance(tau, 0.5 * dtau, 1.0);
        advance(tau + 0.5 * dtau, 0.5 * dtau, 1.0);
        tau += dtau;
    }
    for (; m < cfg.nt; ++m) {
        advance(tau, dtau, 0.5);
        tau += dtau;
    }

    const double y0 = initial_state(spec);
    out.coefficients.resize(order);
    for (std::size_t n = 1; n <= order; ++n)
        out.coefficients[n - 1] = out.discount * detail::biquadratic(U[n], xs, ys, x0, y0);
    if (cfg.solve_baseline) out.baseline_on_grid = out.discount * detail::biquadratic(U[0], xs, ys, x0, y0);
    out.fields = std::move(U);
    return out;
}

}  // namespace sclock::leverage
