#pragma once

#include <fstream>
#include <initializer_list>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "sclock/barrier.hpp"
#include "sclock/calibrator.hpp"
#include "sclock/clock.hpp"
#include "sclock/errors.hpp"
#include "sclock/leverage/expansion.hpp"
#include "sclock/mc.hpp"
#include "sclock/numerics/quadrature.hpp"
#include "sclock/vanilla.hpp"

namespace sclock::config {

using json = nlohmann::json;

class ConfigError : public DomainError {
public:
    using DomainError::DomainError;
};

namespace detail {

inline void only_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!ok.count(it.key())) {
            std::string list;
            for (const auto& k : ok) list += (list.empty() ? "" : ", ") + k;
            throw ConfigError(where + ": unknown field '" + it.key() + "' (allowed: " + list + ")");
        }
}

template <class T>
T get(const json& j, const std::string& where, const char* key) {
    if (!j.contains(key)) throw ConfigError(where + ": missing required field '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + "." + key + ": wrong type");
    }
}

template <class T>
T get_or(const json& j, const std::string& where, const char* key, T fallback) {
    return j.contains(key) ? get<T>(j, where, key) : fallback;
}

}  // namespace detail

// ---- clock ------------------------------------------------------------------------

inline CirClock parse_cir(const json& j, const std::string& where, bool with_family) {
    if (with_family)
        detail::only_keys(j, where, {"family", "kappa", "theta", "xi", "v0"});
    else
        detail::only_keys(j, where, {"kappa", "theta", "xi", "v0"});
    return CirClock{detail::get<double>(j, where, "kappa"), detail::get<double>(j, where, "theta"),
                    detail::get<double>(j, where, "xi"), detail::get<double>(j, where, "v0")};
}

inline ClockSpec parse_clock(const json& j, const std::string& where = "clock") {
    const auto family = detail::get<std::string>(j, where, "family");
    ClockSpec spec;
    if (family == "cir") {
        spec = parse_cir(j, where, true);
    } else if (family == "cir-td") {
        detail::only_keys(j, where, {"family", "segment_ends", "kappa", "theta", "xi", "v0"});
        spec = TimeDepCirClock{detail::get<std::vector<double>>(j, where, "segment_ends"),
                               detail::get<std::vector<double>>(j, where, "kappa"),
                               detail::get<std::vector<double>>(j, where, "theta"),
                               detail::get<std::vector<double>>(j, where, "xi"), detail::get<double>(j, where, "v0")};
    } else if (family == "sqou") {
        detail::only_keys(j, where, {"family", "alpha", "sigma", "y0"});
        spec = SquaredOuClock{detail::get<double>(j, where, "alpha"), detail::get<double>(j, where, "sigma"),
                              detail::get<double>(j, where, "y0")};
    } else if (family == "markov") {
        detail::only_keys(j, where, {"family", "generator", "levels", "initial_dist"});
        spec = MarkovSwitchingClock{detail::get<std::vector<std::vector<double>>>(j, where, "generator"),
                                    detail::get<std::vector<double>>(j, where, "levels"),
                                    detail::get<std::vector<double>>(j, where, "initial_dist")};
    } else if (family == "cir2") {
        detail::only_keys(j, where, {"family", "fast", "slow"});
        if (!j.contains("fast") || !j.contains("slow")) throw ConfigError(where + ": cir2 needs 'fast' and 'slow'");
        spec = TwoFactorCirClock{parse_cir(j["fast"], where + ".fast", false), parse_cir(j["slow"], where + ".slow", false)};
    } else {
        throw ConfigError(where + ".family: unknown family '" + family + "' (cir, cir-td, sqou, markov, cir2)");
    }
    validate(spec);
    return spec;
}

inline json clock_to_json(const ClockSpec& spec) {
    return std::visit(
        [](const auto& c) -> json {
            using C = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<C, CirClock>) {
                return {{"family", "cir"}, {"kappa", c.kappa}, {"theta", c.theta}, {"xi", c.xi}, {"v0", c.v0}};
            } else if constexpr (std::is_same_v<C, TimeDepCirClock>) {
                return {{"family", "cir-td"}, {"segment_ends", c.segment_ends}, {"kappa", c.kappa},
                        {"theta", c.theta}, {"xi", c.xi}, {"v0", c.v0}};
            } else if constexpr (std::is_same_v<C, SquaredOuClock>) {
                return {{"family", "sqou"}, {"alpha", c.alpha}, {"sigma", c.sigma}, {"y0", c.y0}};
            } else if constexpr (std::is_same_v<C, MarkovSwitchingClock>) {
                return {{"family", "markov"}, {"generator", c.generator}, {"levels", c.levels},
                        {"initial_dist", c.initial_dist}};
            } else {
                auto f = [](const CirClock& x) {
                    return json{{"kappa", x.kappa}, {"theta", x.theta}, {"xi", x.xi}, {"v0", x.v0}};
                };
                return {{"family", "cir2"}, {"fast", f(c.fast)}, {"slow", f(c.slow)}};
            }
        },
        spec);
}

// ---- market and contracts ------------------------------------------------------------

inline MarketEnv parse_market(const json& j, const std::string& where = "market") {
    detail::only_keys(j, where, {"spot", "rate", "dividend"});
    MarketEnv m{detail::get<double>(j, where, "spot"), detail::get_or<double>(j, where, "rate", 0.0),
                detail::get_or<double>(j, where, "dividend", 0.0)};
    m.validate();
    return m;
}

inline BarrierKind parse_kind(const std::string& s, const std::string& where) {
    if (s == "uop") return BarrierKind::UpOutPut;
    if (s == "doc") return BarrierKind::DownOutCall;
    if (s == "dko-call") return BarrierKind::DkoCall;
    if (s == "dko-put") return BarrierKind::DkoPut;
    throw ConfigError(where + ".kind: unknown contract kind '" + s + "' (uop, doc, dko-call, dko-put)");
}

inline const char* kind_token(BarrierKind k) {
    switch (k) {
        case BarrierKind::UpOutPut: return "uop";
        case BarrierKind::DownOutCall: return "doc";
        case BarrierKind::DkoCall: return "dko-call";
        case BarrierKind::DkoPut: return "dko-put";
    }
    return "?";
}

inline BarrierContract parse_contract(const json& j, const std::string& where) {
    detail::only_keys(j, where, {"kind", "strike", "lower", "upper", "maturity"});
    BarrierContract c;
    c.kind = parse_kind(detail::get<std::string>(j, where, "kind"), where);
    c.strike = detail::get<double>(j, where, "strike");
    c.maturity = detail::get<double>(j, where, "maturity");
    if (j.contains("lower")) c.lower_barrier = detail::get<double>(j, where, "lower");
    if (j.contains("upper")) c.upper_barrier = detail::get<double>(j, where, "upper");
    if (c.kind == BarrierKind::UpOutPut && j.contains("lower")) throw ConfigError(where + ": uop takes no lower barrier");
    if (c.kind == BarrierKind::DownOutCall && j.contains("upper")) throw ConfigError(where + ": doc takes no upper barrier");
    c.validate();
    return c;
}

inline json contract_to_json(const BarrierContract& c) {
    json j{{"kind", kind_token(c.kind)}, {"strike", c.strike}, {"maturity", c.maturity}};
    if (c.has_lower()) j["lower"] = c.lower_barrier;
    if (c.has_upper()) j["upper"] = c.upper_barrier;
    return j;
}

// ---- run configuration -----------------------------------------------------------------

struct VanillaGrid {
    std::vector<double> strikes;
    std::vector<double> maturities;
    OptionKind kind = OptionKind::Call;
};

struct RunConfig {
    std::optional<std::string> command;
    std::optional<ClockSpec> clock;
    MarketEnv market{100.0, 0.0, 0.0};
    std::vector<BarrierContract> contracts;
    numerics::QuadratureConfig quadrature{};
    McConfig mc{};
    leverage::ExpansionConfig expansion{};
    std::vector<double> rhos;
    VanillaGrid vanilla{};
    std::optional<std::string> output;
    std::string canonical;  // sorted-key dump used for the digest
};

inline McConfig parse_mc(const json& j, McConfig base, const std::string& where = "mc") {
    detail::only_keys(j, where, {"paths", "steps_per_year", "seed", "antithetic", "bridge", "block_size", "threads"});
    base.n_paths = detail::get_or<std::size_t>(j, where, "paths", base.n_paths);
    base.steps_per_year = detail::get_or<double>(j, where, "steps_per_year", base.steps_per_year);
    base.seed = detail::get_or<std::uint64_t>(j, where, "seed", base.seed);
    base.antithetic = detail::get_or<bool>(j, where, "antithetic", base.antithetic);
    base.bridge = detail::get_or<bool>(j, where, "bridge", base.bridge);
    base.block_size = detail::get_or<std::size_t>(j, where, "block_size", base.block_size);
    base.threads = detail::get_or<unsigned>(j, where, "threads", base.threads);
    base.validate();
    return base;
}

inline leverage::ExpansionConfig parse_expansion(const json& j, leverage::ExpansionConfig e,
                                                 const std::string& where = "expansion") {
    detail::only_keys(j, where, {"order", "first_order_route", "nx", "ny", "nt", "estimate_discretization", "duhamel_paths",
                                 "duhamel_steps_per_year", "max_frequency"});
    e.order = detail::get_or<std::size_t>(j, where, "order", e.order);
    if (j.contains("first_order_route")) {
        const auto r = detail::get<std::string>(j, where, "first_order_route");
        if (r == "duhamel-mc")
            e.first_order_route = leverage::CoefficientRoute::DuhamelMc;
        else if (r == "forced-pde")
            e.first_order_route = leverage::CoefficientRoute::ForcedPde;
        else
            throw ConfigError(where + ".first_order_route: expected duhamel-mc or forced-pde");
    }
    e.pde.nx = detail::get_or<std::size_t>(j, where, "nx", e.pde.nx);
    e.pde.ny = detail::get_or<std::size_t>(j, where, "ny", e.pde.ny);
    e.pde.nt = detail::get_or<std::size_t>(j, where, "nt", e.pde.nt);
    e.estimate_discretization = detail::get_or<bool>(j, where, "estimate_discretization", e.estimate_discretization);
    e.duhamel.mc.n_paths = detail::get_or<std::size_t>(j, where, "duhamel_paths", e.duhamel.mc.n_paths);
    e.duhamel.mc.steps_per_year = detail::get_or<double>(j, where, "duhamel_steps_per_year", e.duhamel.mc.steps_per_year);
    const double mf = detail::get_or<double>(j, where, "max_frequency", e.pde.spectral.max_frequency);
    e.pde.spectral.max_frequency = mf;
    e.duhamel.spectral.max_frequency = mf;
    if (e.pde.nx < 11 || e.pde.ny < 7 || e.pde.nt < 4) throw ConfigError(where + ": PDE grid too small");
    return e;
}

inline RunConfig parse_run_config(const json& j) {
    detail::only_keys(j, "config",
                      {"command", "clock", "market", "contracts", "quadrature", "mc", "expansion", "rho", "vanilla", "output",
                       "seed"});
    RunConfig c;
    if (j.contains("command")) c.command = detail::get<std::string>(j, "config", "command");
    if (j.contains("clock")) c.clock = parse_clock(j["clock"]);
    if (j.contains("market")) c.market = parse_market(j["market"]);
    if (j.contains("contracts")) {
        if (!j["contracts"].is_array()) throw ConfigError("contracts: expected an array");
        std::size_t i = 0;
        for (const auto& cj : j["contracts"]) c.contracts.push_back(parse_contract(cj, "contracts[" + std::to_string(i++) + "]"));
    }
    if (j.contains("quadrature")) {
        const auto& q = j["quadrature"];
        detail::only_keys(q, "quadrature", {"rel_tol", "abs_tol", "initial_cutoff", "max_doublings", "max_subdivisions"});
        c.quadrature.rel_tol = detail::get_or<double>(q, "quadrature", "rel_tol", c.quadrature.rel_tol);
        c.quadrature.abs_tol = detail::get_or<double>(q, "quadrature", "abs_tol", c.quadrature.abs_tol);
        c.quadrature.initial_cutoff = detail::get_or<double>(q, "quadrature", "initial_cutoff", c.quadrature.initial_cutoff);
        c.quadrature.max_doublings = detail::get_or<std::size_t>(q, "quadrature", "max_doublings", c.quadrature.max_doublings);
        c.quadrature.max_subdivisions =
            detail::get_or<std::size_t>(q, "quadrature", "max_subdivisions", c.quadrature.max_subdivisions);
        c.quadrature.validate();
    }
    if (j.contains("mc")) c.mc = parse_mc(j["mc"], c.mc);
    if (j.contains("seed")) c.mc.seed = detail::get<std::uint64_t>(j, "config", "seed");
    if (j.contains("expansion")) c.expansion = parse_expansion(j["expansion"], c.expansion);
    if (j.contains("rho")) {
        c.rhos = detail::get<std::vector<double>>(j, "config", "rho");
        for (double r : c.rhos)
            if (!(r >= -1.0 && r <= 1.0)) throw ConfigError("rho: values must lie in [-1, 1]");
    }
    if (j.contains("vanilla")) {
        const auto& v = j["vanilla"];
        detail::only_keys(v, "vanilla", {"strikes", "maturities", "kind"});
        c.vanilla.strikes = detail::get<std::vector<double>>(v, "vanilla", "strikes");
        c.vanilla.maturities = detail::get<std::vector<double>>(v, "vanilla", "maturities");
        const auto k = detail::get_or<std::string>(v, "vanilla", "kind", "call");
        if (k != "call" && k != "put") throw ConfigError("vanilla.kind: expected call or put");
        c.vanilla.kind = k == "call" ? OptionKind::Call : OptionKind::Put;
    }
    if (j.contains("output")) c.output = detail::get<std::string>(j, "config", "output");
    c.canonical = j.dump();
    return c;
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    try {
        return json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
    }
}

inline RunConfig load_run_config(const std::string& path) { return parse_run_config(read_json_file(path)); }

inline std::string config_digest(const RunConfig& c) { return hex_digest(c.canonical); }

// ---- calibration dataset ----------------------------------------------------------------

inline calib::CalibrationDataset parse_dataset(const json& j) {
    detail::only_keys(j, "dataset", {"market", "vanillas", "barriers", "varswaps", "vix", "vix_scale"});
    calib::CalibrationDataset d;
    if (!j.contains("market")) throw ConfigError("dataset: missing required field 'market'");
    d.market = parse_market(j["market"], "dataset.market");
    auto arr = [&](const char* key) -> const json& {
        static const json empty = json::array();
        if (!j.contains(key)) return empty;
        if (!j[key].is_array()) throw ConfigError(std::string("dataset.") + key + ": expected an array");
        return j[key];
    };
    std::size_t i = 0;
    for (const auto& v : arr("vanillas")) {
        const std::string w = "dataset.vanillas[" + std::to_string(i++) + "]";
        detail::only_keys(v, w, {"maturity", "strike", "kind", "price", "implied_vol", "weight"});
        VanillaQuote q;
        q.maturity = detail::get<double>(v, w, "maturity");
        q.strike = detail::get<double>(v, w, "strike");
        const auto k = detail::get_or<std::string>(v, w, "kind", "call");
        if (k != "call" && k != "put") throw ConfigError(w + ".kind: expected call or put");
        q.kind = k == "call" ? OptionKind::Call : OptionKind::Put;
        q.value = detail::get_or<double>(v, w, "price", 0.0);
        q.implied_vol = detail::get_or<double>(v, w, "implied_vol", 0.0);
        if (!(q.value > 0.0) && !(q.implied_vol > 0.0)) throw ConfigError(w + ": needs a positive price or implied_vol");
        q.weight = detail::get_or<double>(v, w, "weight", 1.0);
        d.vanillas.push_back(q);
    }
    i = 0;
    for (const auto& b : arr("barriers")) {
        const std::string w = "dataset.barriers[" + std::to_string(i++) + "]";
        detail::only_keys(b, w, {"contract", "price", "weight", "monitoring_interval"});
        if (!b.contains("contract")) throw ConfigError(w + ": missing required field 'contract'");
        d.barriers.push_back({parse_contract(b["contract"], w + ".contract"), detail::get<double>(b, w, "price"),
                              detail::get_or<double>(b, w, "weight", 1.0),
                              detail::get_or<double>(b, w, "monitoring_interval", 0.0)});
    }
    i = 0;
    for (const auto& v : arr("varswaps")) {
        const std::string w = "dataset.varswaps[" + std::to_string(i++) + "]";
        detail::only_keys(v, w, {"maturity", "strike", "weight"});
        d.varswaps.push_back({detail::get<double>(v, w, "maturity"), detail::get<double>(v, w, "strike"),
                              detail::get_or<double>(v, w, "weight", 1.0)});
    }
    i = 0;
    for (const auto& v : arr("vix")) {
        const std::string w = "dataset.vix[" + std::to_string(i++) + "]";
        detail::only_keys(v, w, {"start", "window", "value", "weight"});
        d.vix.push_back({detail::get_or<double>(v, w, "start", 0.0), detail::get_or<double>(v, w, "window", 30.0 / 365.0),
                         detail::get<double>(v, w, "value"), detail::get_or<double>(v, w, "weight", 1.0)});
    }
    d.vix_scale = detail::get_or<double>(j, "dataset", "vix_scale", 1.0);
    d.validate();
    return d;
}

inline json dataset_to_json(const calib::CalibrationDataset& d) {
    json j{{"market", {{"spot", d.market.spot}, {"rate", d.market.rate}, {"dividend", d.market.dividend}}}};
    j["vanillas"] = json::array();
    for (const auto& q : d.vanillas) {
        json v{{"maturity", q.maturity}, {"strike", q.strike}, {"kind", q.kind == OptionKind::Call ? "call" : "put"},
               {"weight", q.weight}};
        if (q.value > 0.0) v["price"] = q.value;
        if (q.implied_vol > 0.0) v["implied_vol"] = q.implied_vol;
        j["vanillas"].push_back(v);
    }
    j["barriers"] = json::array();
    for (const auto& b : d.barriers)
        j["barriers"].push_back({{"contract", contract_to_json(b.contract)}, {"price", b.value}, {"weight", b.weight},
                                 {"monitoring_interval", b.monitoring_interval}});
    j["varswaps"] = json::array();
    for (const auto& v : d.varswaps) j["varswaps"].push_back({{"maturity", v.maturity}, {"strike", v.strike}, {"weight", v.weight}});
    j["vix"] = json::array();
    for (const auto& v : d.vix)
        j["vix"].push_back({{"start", v.start}, {"window", v.window}, {"value", v.value}, {"weight", v.weight}});
    j["vix_scale"] = d.vix_scale;
    return j;
}

inline calib::CalibrationDataset load_dataset(const std::string& path) { return parse_dataset(read_json_file(path)); }

}  // namespace sclock::config
