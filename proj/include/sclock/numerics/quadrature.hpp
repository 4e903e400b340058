#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <queue>
#include <string>
#include <vector>

#include "sclock/errors.hpp"

namespace sclock::numerics {

struct QuadratureConfig {
    double rel_tol = 1e-9;
    double abs_tol = 1e-12;
    double initial_cutoff = 16.0;   // U0 in u-space
    double cutoff_growth = 2.0;
    std::size_t max_doublings = 24;
    std::size_t max_subdivisions = 4000;

    void validate() const {
        if (!(rel_tol > 0.0) || !(abs_tol > 0.0))
            throw DomainError("quadrature tolerances must be positive");
        if (!(initial_cutoff > 0.0)) throw DomainError("initial cutoff must be positive");
        if (!(cutoff_growth > 1.0)) throw DomainError("cutoff growth factor must exceed 1");
        if (max_subdivisions == 0) throw DomainError("max_subdivisions must be positive");
    }
};

struct QuadratureResult {
    double value = 0.0;
    double error = 0.0;
    std::size_t evaluations = 0;
    double cutoff = 0.0;  // semi-infinite integrals only
};

namespace detail {

// Gauss-Kronrod 7/15 nodes on [-1,1] (positive half, centre last).
inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
    double a, b, value, error;
    bool operator<(const Panel& other) const { return error < other.error; }
};

template <class F>
Panel gk15(F& f, double a, double b) {
    const double centre = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = f(centre);
    double kronrod = fc * kWgk[7];
    double gauss = fc * kWg[3];
    for (int j = 0; j < 7; ++j) {
        const double dx = half * kXgk[j];
        const double f1 = f(centre - dx);
        const double f2 = f(centre + dx);
        kronrod += kWgk[j] * (f1 + f2);
        if (j % 2 == 1) gauss += kWg[j / 2] * (f1 + f2);
    }
    return {a, b, kronrod * half, std::abs((kronrod - gauss) * half)};
}

}  // namespace detail

// Globally adaptive G7K15 over a set of initial panels given by sorted breakpoints.
template <class F>
QuadratureResult integrate_panels(F&& f, const std::vector<double>& breakpoints, double abs_tol,
                                  double rel_tol, std::size_t max_subdivisions) {
    std::priority_queue<detail::Panel> panels;
    QuadratureResult out;
    double total = 0.0, total_err = 0.0;
    for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
        if (!(breakpoints[i + 1] > breakpoints[i])) continue;
        auto p = detail::gk15(f, breakpoints[i], breakpoints[i + 1]);
        out.evaluations += 15;
        total += p.value;
        total_err += p.error;
        panels.push(p);
    }
    std::size_t splits = 0;
    while (!panels.empty() && total_err > std::max(abs_tol, rel_tol * std::abs(total))) {
        if (++splits > max_subdivisions) {
            throw NumericalError("adaptive quadrature exceeded " + std::to_string(max_subdivisions) +
                                 " subdivisions (estimate " + std::to_string(total) + " +/- " +
                                 std::to_string(total_err) + ")");
        }
        const auto worst = panels.top();
        panels.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) break;  // panel at machine resolution
        auto left = detail::gk15(f, worst.a, mid);
        auto right = detail::gk15(f, mid, worst.b);
        out.evaluations += 30;
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        panels.push(left);
        panels.push(right);
    }
    // Recompute sums to shed accumulated rounding from the running updates.
    total = 0.0;
    total_err = 0.0;
    while (!panels.empty()) {
        total += panels.top().value;
        total_err += panels.top().error;
        panels.pop();
    }
    out.value = total;
    out.error = total_err;
    return out;
}

template <class F>
QuadratureResult integrate(F&& f, double a, double b, double abs_tol = 1e-12, double rel_tol = 1e-10,
                           std::size_t max_subdivisions = 4000) {
    return integrate_panels(f, {a, b}, abs_tol, rel_tol, max_subdivisions);
}

// Integral of f over [0, inf) on the compactified variable s = u / (1 + u).
// Panels are capped at `max_panel_width` in u-space so oscillatory integrands are
// resolved; the cutoff U grows geometrically until the contribution of the next
// slab [U, gU] is below tolerance twice in a row.
template <class F>
QuadratureResult integrate_semi_infinite(F&& f, double max_panel_width, const QuadratureConfig& cfg) {
    cfg.validate();
    if (!(max_panel_width > 0.0)) max_panel_width = cfg.initial_cutoff;
    auto g = [&f](double s) {
        const double one_minus = 1.0 - s;
        const double u = s / one_minus;
        return f(u) / (one_minus * one_minus);
    };
    auto to_s = [](double u) { return u / (1.0 + u); };

    auto slab = [&](double u_lo, double u_hi, double scale) {
        std::vector<double> bps;
        const auto n = static_cast<std::size_t>(std::ceil((u_hi - u_lo) / max_panel_width));
        const std::size_t count = std::max<std::size_t>(n, 1);
        bps.reserve(count + 1);
        for (std::size_t i = 0; i <= count; ++i)
            bps.push_back(to_s(u_lo + (u_hi - u_lo) * static_cast<double>(i) / static_cast<double>(count)));
        const double tol = std::max(cfg.abs_tol, cfg.rel_tol * scale) * 0.25;
        return integrate_panels(g, bps, tol, cfg.rel_tol * 0.25, cfg.max_subdivisions);
    };

    double cutoff = cfg.initial_cutoff;
    QuadratureResult acc = slab(0.0, cutoff, 0.0);
    acc.cutoff = cutoff;
    double previous = acc.value;
    double before_last = acc.value;
    int quiet = 0;
    for (std::size_t k = 0; k < cfg.max_doublings; ++k) {
        const double next = cutoff * cfg.cutoff_growth;
        const auto piece = slab(cutoff, next, std::abs(acc.value));
        acc.value += piece.value;
        acc.error += piece.error;
        acc.evaluations += piece.evaluations;
        cutoff = next;
        acc.cutoff = cutoff;
        const double change = std::abs(acc.value - previous);
        before_last = previous;
        previous = acc.value;
        if (change <= std::max(cfg.abs_tol, cfg.rel_tol * std::abs(acc.value))) {
            if (++quiet >= 2) return acc;
        } else {
            quiet = 0;
        }
    }
    throw ConvergenceError("semi-infinite quadrature did not stabilise under cutoff growth",
                           acc.value, before_last);
}

}  // namespace sclock::numerics
