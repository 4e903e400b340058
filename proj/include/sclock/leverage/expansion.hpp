#pragma once

#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "sclock/barrier.hpp"
#include "sclock/clock.hpp"
#include "sclock/leverage/duhamel.hpp"
#include "sclock/leverage/forced_pde.hpp"
#include "sclock/leverage/pade.hpp"

namespace sclock::leverage {

enum class CoefficientRoute { AnalyticBaseline, DuhamelMc, ForcedPde };

inline const char* to_string(CoefficientRoute r) {
    switch (r) {
        case CoefficientRoute::AnalyticBaseline: return "analytic-baseline";
        case CoefficientRoute::DuhamelMc: return "duhamel-mc";
        case CoefficientRoute::ForcedPde: return "forced-pde";
    }
    return "?";
}

// sup |L1 u_N| over the grid at each time-to-go level, kept for the residual indicator.
struct ResidualData {
    std::size_t order = 0;
    double discount = 1.0;
    std::vector<double> taus;
    std::vector<double> sup_norm;
};

struct ExpansionCoefficients {
    std::vector<double> values;               // C_0..C_N
    std::vector<double> standard_errors;      // MC s.e.; 0 on deterministic routes
    std::vector<double> discretization_errors;  // grid-halving estimate on the PDE route
    std::vector<CoefficientRoute> routes;
    std::string clock_digest;
    std::string contract_digest;
    std::vector<ResidualData> residuals;      // one entry per available u_n field
    std::size_t order() const { return values.empty() ? 0 : values.size() - 1; }
};

inline std::string contract_digest(const BarrierContract& c, const MarketEnv& m) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s|K=%.14e|H=%.14e|L=%.14e|T=%.14e|S=%.14e|r=%.14e|q=%.14e", to_string(c.kind),
                  c.strike, c.upper_barrier, c.lower_barrier, c.maturity, m.spot, m.rate, m.dividend);
    return hex_digest(buf);
}

struct ExpansionConfig {
    std::size_t order = 5;
    CoefficientRoute first_order_route = CoefficientRoute::DuhamelMc;
    DuhamelConfig duhamel{};
    PdeGridConfig pde{};
    bool estimate_discretization = true;
};

inline double baseline_price(const BarrierContract& contract, const MarketEnv& market, const ClockSpec& spec) {
    const auto phi = laplace_of(spec, contract.maturity);
    switch (contract.kind) {
        case BarrierKind::UpOutPut: return price_uop(contract, market, phi);
        case BarrierKind::DownOutCall: return price_doc(contract, market, phi);
        default: return price_dko(contract, market, spec).price;
    }
}

inline ExpansionCoefficients compute_expansion(const BarrierContract& contract, const MarketEnv& market,
                                               const ClockSpec& spec, const ExpansionConfig& cfg = {}) {
    ExpansionCoefficients out;
    out.clock_digest = digest(spec);
    out.contract_digest = contract_digest(contract, market);
    out.values.push_back(baseline_price(contract, market, spec));
    out.standard_errors.push_back(0.0);
    out.discretization_errors.push_back(0.0);
    out.routes.push_back(CoefficientRoute::AnalyticBaseline);
    if (cfg.order == 0) return out;

    const bool need_pde = cfg.order >= 2 || cfg.first_order_route == CoefficientRoute::ForcedPde;
    std::optional<PdeSolution> fine;
    std::vector<double> coarse_values;
    if (need_pde) {
        fine = solve_forced_hierarchy(contract, market, spec, cfg.order, cfg.pde);
        if (cfg.estimate_discretization) {
            PdeGridConfig coarse = cfg.pde;
            coarse.nx = cfg.pde.nx / 2 + 1;
            coarse.ny = cfg.pde.ny / 2 + 1;
            coarse.nt = std::max<std::size_t>(4, cfg.pde.nt / 2);
            coarse.solve_baseline = false;
            coarse_values = solve_forced_hierarchy(contract, market, spec, cfg.order, coarse).coefficients;
        }
        for (std::size_t n = 0; n <= cfg.order; ++n)
            out.residuals.push_back({n, fine->discount, fine->taus, fine->forcing_sup[n]});
    }
    for (std::size_t n = 1; n <= cfg.order; ++n) {
        if (n == 1 && cfg.first_order_route == CoefficientRoute::DuhamelMc) {
            const auto c1 = duhamel_coefficient_1(contract, market, spec, cfg.duhamel);
            out.values.push_back(c1.value);
            out.standard_errors.push_back(c1.standard_error);
            out.discretization_errors.push_back(0.0);
            out.routes.push_back(CoefficientRoute::DuhamelMc);
            continue;
        }
        const double v = fine->coefficients[n - 1];
        out.values.push_back(v);
        out.standard_errors.push_back(0.0);
        out.discretization_errors.push_back(coarse_values.empty() ? 0.0 : std::abs(v - coarse_values[n - 1]) / 3.0);
        out.routes.push_back(CoefficientRoute::ForcedPde);
    }
    return out;
}

// |rho|^{N+1} int_0^T sup |L1 u_N| ds in price units: an indicator, not a certified bound.
inline std::optional<double> residual_error_indicator(const ExpansionCoefficients& coeffs, double rho, std::size_t N) {
    for (const auto& r : coeffs.residuals) {
        if (r.order != N) continue;
        double integral = 0.0;
        for (std::size_t i = 1; i < r.taus.size(); ++i)
            integral += 0.5 * (r.sup_norm[i] + r.sup_norm[i - 1]) * (r.taus[i] - r.taus[i - 1]);
        return r.discount * std::pow(std::abs(rho), static_cast<double>(N + 1)) * integral;
    }
    return std::nullopt;
}

}  // namespace sclock::leverage
