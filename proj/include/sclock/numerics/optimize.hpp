#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include "sclock/errors.hpp"

namespace sclock::numerics {

struct Minimum1d {
    double x;
    double value;
};

// Golden-section search on [lo, hi] for a unimodal function.
template <class F>
Minimum1d golden_section(F&& f, double lo, double hi, double x_tol = 1e-10, int max_iter = 200) {
    constexpr double inv_phi = 0.6180339887498949;
    double a = lo, b = hi;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c), fd = f(d);
    for (int i = 0; i < max_iter && (b - a) > x_tol * (1.0 + std::abs(a) + std::abs(b)); ++i) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    return fc < fd ? Minimum1d{c, fc} : Minimum1d{d, fd};
}

// Bracketed root via TOMS 748. Throws DomainError when the bracket has no sign change.
template <class F>
double find_root(F&& f, double lo, double hi, double x_tol = 1e-14, std::uintmax_t max_iter = 200) {
    const double flo = f(lo);
    const double fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0)) throw DomainError("root is not bracketed");
    auto tol = [x_tol](double a, double b) { return std::abs(b - a) <= x_tol * (1.0 + std::abs(a)); };
    std::uintmax_t iters = max_iter;
    const auto r = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, tol, iters);
    return 0.5 * (r.first + r.second);
}

struct PowellOptions {
    double initial_step = 0.25;
    double f_tol = 1e-12;        // relative decrease threshold per sweep
    int max_iterations = 200;    // outer sweeps
    int max_evaluations = 20000;
};

struct PowellResult {
    std::vector<double> x;
    double value = 0.0;
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
};

// Powell's conjugate-direction method on an unconstrained space. Each line search
// brackets by step expansion and refines with Brent's parabolic minimizer.
template <class F>
PowellResult powell_minimize(F&& f, std::vector<double> x, const PowellOptions& opt = {}) {
    const std::size_t n = x.size();
    PowellResult res;
    int evals = 0;
    auto fx = [&](const std::vector<double>& p) {
        ++evals;
        const double v = f(p);
        return std::isfinite(v) ? v : std::numeric_limits<double>::max();
    };
    std::vector<std::vector<double>> dirs(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) dirs[i][i] = 1.0;

    auto along = [&](const std::vector<double>& p, const std::vector<double>& d, double t) {
        std::vector<double> q(p);
        for (std::size_t i = 0; i < n; ++i) q[i] += t * d[i];
        return q;
    };

    auto line_search = [&](std::vector<double>& p, double& fp, const std::vector<double>& d) {
        auto g = [&](double t) { return fx(along(p, d, t)); };
        double step = opt.initial_step;
        double a = 0.0, fa = fp;
        double b = step, fb = g(b);
        if (fb > fa) {
            b = -step;
            fb = g(b);
            if (fb > fa) {
                // minimum inside [-step, step]
                const auto m = boost::math::tools::brent_find_minima(g, -step, step, 40);
                if (m.second < fp) {
                    p = along(p, d, m.first);
                    fp = m.second;
                }
                return;
            }
        }
        // expand in the descent direction
        double c = b + 1.618034 * (b - a), fc = g(c);
        int guard = 0;
        while (fc < fb && guard++ < 50) {
            a = b;
            fa = fb;
            b = c;
            fb = fc;
            c = b + 1.618034 * (b - a);
            fc = g(c);
        }
        const double lo = std::min(a, c), hi = std::max(a, c);
        const auto m = boost::math::tools::brent_find_minima(g, lo, hi, 40);
        if (m.second < fp) {
            p = along(p, d, m.first);
            fp = m.second;
        } else if (fb < fp) {
            p = along(p, d, b);
            fp = fb;
        }
    };

    double fp = fx(x);
    for (int it = 0; it < opt.max_iterations && evals < opt.max_evaluations; ++it) {
        res.iterations = it + 1;
        const std::vector<double> start = x;
        const double f_start = fp;
        std::size_t biggest = 0;
        double biggest_drop = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double before = fp;
            line_search(x, fp, dirs[i]);
            if (before - fp > biggest_drop) {
                biggest_drop = before - fp;
                biggest = i;
            }
        }
        if (2.0 * (f_start - fp) <= opt.f_tol * (std::abs(f_start) + std::abs(fp)) + 1e-300) {
            res.converged = true;
            break;
        }
        std::vector<double> new_dir(n);
        double norm = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            new_dir[i] = x[i] - start[i];
            norm += new_dir[i] * new_dir[i];
        }
        if (norm > 0.0) {
            const double f_ext = fx(along(x, new_dir, 1.0));
            if (f_ext < f_start) {
                dirs[biggest] = dirs.back();
                dirs.back() = new_dir;
                line_search(x, fp, new_dir);
            }
        }
    }
    res.x = std::move(x);
    res.value = fp;
    res.evaluations = evals;
    return res;
}

}  // namespace sclock::numerics
