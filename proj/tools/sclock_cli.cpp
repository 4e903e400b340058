// sclock: command-line driver for pricing, Monte Carlo checks, leverage expansions,
// calibration and the reference tables. Exit codes: 0 ok, 1 invalid input, 2 numerical failure.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "sclock.hpp"

namespace {

using namespace sclock;
using sclock::repro::num;

struct Output {
    std::ofstream file;
    std::ostream* os = &std::cout;
    explicit Output(const std::string& path) {
        if (path.empty() || path == "-") return;
        file.open(path);
        if (!file) throw DomainError("cannot write output file '" + path + "'");
        os = &file;
    }
    std::ostream& operator*() { return *os; }
};

void log_line(const std::string& s) { std::cerr << "[sclock] " << s << "\n"; }

std::string join(const std::vector<std::string>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
    return s;
}

void write_header(std::ostream& os, const std::string& command, const std::string& digest, std::uint64_t seed) {
    os << "# sclock " << command << " config_digest=" << digest << " seed=" << seed << "\n";
}

config::RunConfig load(const std::string& path, const std::string& command) {
    auto cfg = config::load_run_config(path);
    if (cfg.command && *cfg.command != command)
        throw config::ConfigError("config command '" + *cfg.command + "' does not match subcommand '" + command + "'");
    return cfg;
}

const ClockSpec& need_clock(const config::RunConfig& c) {
    if (!c.clock) throw config::ConfigError("config: 'clock' is required for this command");
    return *c.clock;
}

void need_contracts(const config::RunConfig& c) {
    if (c.contracts.empty()) throw config::ConfigError("config: 'contracts' must list at least one contract");
}

std::vector<std::string> contract_cells(std::size_t i, const BarrierContract& c) {
    return {std::to_string(i), config::kind_token(c.kind), num(c.strike), c.has_lower() ? num(c.lower_barrier) : "",
            c.has_upper() ? num(c.upper_barrier) : "", num(c.maturity)};
}
const char* kContractColumns = "contract,kind,strike,lower,upper,maturity";

int cmd_price(const std::string& path, const std::string& out) {
    const auto cfg = load(path, "price");
    const auto& spec = need_clock(cfg);
    need_contracts(cfg);
    const auto digest = config::config_digest(cfg);
    log_line("price config_digest=" + digest + " seed=" + std::to_string(cfg.mc.seed) + " clock=" + sclock::digest(spec));
    for (const auto& w : warnings(spec)) log_line("warning: " + w);
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < cfg.contracts.size(); ++i) {
        const auto& c = cfg.contracts[i];
        const auto t0 = std::chrono::steady_clock::now();
        const double p = price_barrier(c, cfg.market, laplace_of(spec, c.maturity), cfg.quadrature);
        log_line("contract " + std::to_string(i) + " priced in " +
                 num(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()) + " s");
        auto row = contract_cells(i, c);
        row.push_back(num(p));
        rows.push_back(row);
    }
    Output o(out.empty() && cfg.output ? *cfg.output : out);
    write_header(*o, "price", digest, cfg.mc.seed);
    *o << kContractColumns << ",price\n";
    for (const auto& r : rows) *o << join(r) << "\n";
    return 0;
}

int cmd_mc_validate(const std::string& path, const std::string& out) {
    const auto cfg = load(path, "mc-validate");
    const auto& spec = need_clock(cfg);
    need_contracts(cfg);
    const auto digest = config::config_digest(cfg);
    log_line("mc-validate config_digest=" + digest + " seed=" + std::to_string(cfg.mc.seed) + " paths=" +
             std::to_string(cfg.mc.n_paths) + " threads=" + std::to_string(resolve_threads(cfg.mc.threads)));
    const std::vector<double> rhos = cfg.rhos.empty() ? std::vector<double>{0.0} : cfg.rhos;
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < cfg.contracts.size(); ++i) {
        const auto& c = cfg.contracts[i];
        for (double rho : rhos) {
            auto row = contract_cells(i, c);
            row.push_back(num(rho));
            if (rho == 0.0) {
                const double a = price_barrier(c, cfg.market, laplace_of(spec, c.maturity), cfg.quadrature);
                const auto e = price_barrier_mc_rho0(c, cfg.market, spec, cfg.mc);
                const double z = e.standard_error > 0.0 ? (e.price - a) / e.standard_error : 0.0;
                row.insert(row.end(), {num(a), num(e.price), num(e.standard_error), num(z), num(e.knockout_fraction),
                                       std::abs(z) <= 3.0 ? "PASS" : "FAIL"});
            } else {
                const auto e = price_barrier_mc_correlated_cv(c, cfg.market, spec, rho, cfg.mc);
                row.insert(row.end(), {"", num(e.price), num(e.standard_error), "", num(e.knockout_fraction), "n/a"});
            }
            rows.push_back(row);
        }
    }
    Output o(out.empty() && cfg.output ? *cfg.output : out);
    write_header(*o, "mc-validate", digest, cfg.mc.seed);
    *o << kContractColumns << ",rho,analytic,mc,se,z,knockout_fraction,check\n";
    for (const auto& r : rows) *o << join(r) << "\n";
    return 0;
}

std::vector<leverage::ExpansionCoefficients> expansions(const config::RunConfig& cfg) {
    const auto& spec = need_clock(cfg);
    need_contracts(cfg);
    std::vector<leverage::ExpansionCoefficients> out;
    for (const auto& c : cfg.contracts) out.push_back(leverage::compute_expansion(c, cfg.market, spec, cfg.expansion));
    return out;
}

int cmd_rho_expand(const std::string& path, const std::string& out) {
    const auto cfg = load(path, "rho-expand");
    const auto digest = config::config_digest(cfg);
    log_line("rho-expand config_digest=" + digest + " seed=" + std::to_string(cfg.expansion.duhamel.mc.seed) +
             " order=" + std::to_string(cfg.expansion.order));
    const auto ex = expansions(cfg);
    Output o(out.empty() && cfg.output ? *cfg.output : out);
    write_header(*o, "rho-expand", digest, cfg.expansion.duhamel.mc.seed);
    *o << kContractColumns << ",n,coefficient,standard_error,discretization_error,route\n";
    for (std::size_t i = 0; i < ex.size(); ++i)
        for (std::size_t n = 0; n < ex[i].values.size(); ++n) {
            auto row = contract_cells(i, cfg.contracts[i]);
            row.insert(row.end(), {std::to_string(n), num(ex[i].values[n]), num(ex[i].standard_errors[n]),
                                   num(ex[i].discretization_errors[n]), leverage::to_string(ex[i].routes[n])});
            *o << join(row) << "\n";
        }
    return 0;
}

int cmd_pade(const std::string& path, const std::string& out) {
    const auto cfg = load(path, "pade");
    if (cfg.rhos.empty()) throw config::ConfigError("config: 'rho' must list the correlations to evaluate");
    const auto digest = config::config_digest(cfg);
    log_line("pade config_digest=" + digest + " seed=" + std::to_string(cfg.expansion.duhamel.mc.seed));
    const auto ex = expansions(cfg);
    Output o(out.empty() && cfg.output ? *cfg.output : out);
    write_header(*o, "pade", digest, cfg.expansion.duhamel.mc.seed);
    *o << kContractColumns << ",rho,taylor,selected,route,residual_indicator,rejected\n";
    for (std::size_t i = 0; i < ex.size(); ++i) {
        for (double rho : cfg.rhos) {
            const auto sel = leverage::evaluate_with_fallback(ex[i].values, rho);
            const auto ind = leverage::residual_error_indicator(ex[i], rho, ex[i].order());
            std::string rejected;
            for (const auto& r : sel.rejected) rejected += (rejected.empty() ? "" : "; ") + r;
            auto row = contract_cells(i, cfg.contracts[i]);
            row.insert(row.end(), {num(rho), num(leverage::taylor_eval(ex[i].values, rho).value), num(sel.value), sel.route,
                                   ind ? num(*ind) : "", "\"" + rejected + "\""});
            *o << join(row) << "\n";
            if (ind && *ind > 0.01 * std::abs(sel.value))
                log_line("warning: residual indicator exceeds 1% of the value at rho=" + num(rho));
        }
    }
    return 0;
}

int cmd_vanilla(const std::string& path, const std::string& out) {
    const auto cfg = load(path, "vanilla");
    const auto& spec = need_clock(cfg);
    if (cfg.vanilla.strikes.empty() || cfg.vanilla.maturities.empty())
        throw config::ConfigError("config: 'vanilla' needs non-empty strikes and maturities");
    const auto digest = config::config_digest(cfg);
    log_line("vanilla config_digest=" + digest + " seed=" + std::to_string(cfg.mc.seed));
    Output o(out.empty() && cfg.output ? *cfg.output : out);
    write_header(*o, "vanilla", digest, cfg.mc.seed);
    *o << "maturity,strike,kind,price,implied_vol,variance_swap_strike\n";
    for (double T : cfg.vanilla.maturities) {
        CosPricer pricer(spec, cfg.market, T);
        const double kvar = variance_swap_strike(spec, T);
        for (double K : cfg.vanilla.strikes) {
            VanillaQuote q;
            q.maturity = T;
            q.strike = K;
            q.kind = cfg.vanilla.kind;
            const double p = pricer.price(K, q.kind);
            std::string iv;
            try {
                iv = num(implied_vol(p, cfg.market, q));
            } catch (const DomainError&) {
                iv = "";
            }
            *o << join({num(T), num(K), q.kind == OptionKind::Call ? "call" : "put", num(p), iv, num(kvar)}) << "\n";
        }
    }
    return 0;
}

int cmd_calibrate(const std::string& dataset_path, const std::string& family, const std::string& stages,
                  const std::string& space, double barrier_weight, bool per_maturity, const std::string& out,
                  const std::string& residuals_path) {
    const auto data = config::load_dataset(dataset_path);
    calib::PipelineConfig pc;
    pc.stages = stages;
    for (char ch : stages)
        if (ch < '1' || ch > '4') throw config::ConfigError("--stages accepts digits 1-4 only");
    if (space == "vol")
        pc.objective.space = calib::ObjectiveSpace::ImpliedVol;
    else if (space == "price")
        pc.objective.space = calib::ObjectiveSpace::Price;
    else
        throw config::ConfigError("--space must be vol or price");
    pc.objective.barrier_weight = barrier_weight;
    pc.per_maturity_rho = per_maturity;
    const auto digest = hex_digest(config::dataset_to_json(data).dump() + "|" + family + "|" + stages + "|" + space + "|" +
                                   num(barrier_weight) + "|" + (per_maturity ? "1" : "0"));
    log_line("calibrate config_digest=" + digest + " family=" + family + " stages=" + stages);
    const auto t0 = std::chrono::steady_clock::now();
    const auto res = calib::run_stage_pipeline(data, family, pc);
    log_line("calibration finished in " + num(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()) + " s");
    for (const auto& s : res.stages)
        log_line("stage " + std::to_string(s.stage) + " objective " + num(s.objective) + (s.skipped ? " skipped" : s.accepted ? " accepted" : " rejected") +
                 " in " + num(s.seconds) + " s");

    config::json j;
    j["config_digest"] = digest;
    j["family"] = family;
    j["clock"] = config::clock_to_json(res.spec);
    j["rho"] = res.rho;
    if (per_maturity) {
        j["rho_maturities"] = res.rho_maturities;
        j["rho_by_maturity"] = res.rho_by_maturity;
    }
    j["objective"] = res.objective;
    j["stages"] = config::json::array();
    for (const auto& s : res.stages)
        j["stages"].push_back({{"stage", s.stage}, {"objective", s.objective}, {"accepted", s.accepted}, {"skipped", s.skipped},
                               {"iterations", s.iterations}});
    j["rho_routes"] = res.rho_routes;
    j["flags"] = res.flags;
    std::ostringstream csv;
    csv << "type,index,maturity,strike,model,market,residual\n";
    for (std::size_t i = 0; i < data.vanillas.size(); ++i) {
        const auto& q = data.vanillas[i];
        const double mkt = pc.objective.space == calib::ObjectiveSpace::Price ? q.value
                           : q.implied_vol > 0.0                            ? q.implied_vol
                                                                            : implied_vol(q.value, data.market, q);
        csv << join({"vanilla", std::to_string(i), num(q.maturity), num(q.strike), num(res.final_breakdown.vanilla_model[i]), num(mkt),
                     num(res.final_breakdown.vanilla_residuals[i])})
            << "\n";
    }
    for (std::size_t i = 0; i < data.barriers.size(); ++i) {
        const auto& b = data.barriers[i];
        csv << join({"barrier", std::to_string(i), num(b.contract.maturity), num(b.contract.strike),
                     num(res.final_breakdown.barrier_model[i]), num(b.value), num(res.final_breakdown.barrier_residuals[i])})
            << "\n";
    }
    j["residuals_csv"] = csv.str();
    Output o(out);
    *o << j.dump(2) << "\n";
    if (!residuals_path.empty()) {
        Output r(residuals_path);
        write_header(*r, "calibrate", digest, 0);
        *r << csv.str();
    }
    return 0;
}

int cmd_repro(const std::string& id, const std::string& scale_name, const std::string& out) {
    const auto& ids = repro::table_ids();
    if (std::find(ids.begin(), ids.end(), id) == ids.end())
        throw DomainError("unknown table id '" + id + "' (expected 6.2 .. 6.12)");
    const auto scale = repro::parse_scale(scale_name);
    const auto mc = repro::mc_for(scale);
    const auto digest = hex_digest("repro-table|" + id + "|" + scale_name);
    log_line("repro-table " + id + " scale=" + scale_name + " config_digest=" + digest + " seed=" + std::to_string(mc.seed) +
             " threads=" + std::to_string(resolve_threads(0)));
    const auto t = repro::repro_table(id, scale);
    Output o(out);
    *o << "# timing " << t.timing << "\n";
    write_header(*o, "repro-table " + id + " scale=" + scale_name, digest, mc.seed);
    *o << "# " << t.title << "\n";
    for (const auto& n : t.notes) *o << "# " << n << "\n";
    *o << join(t.columns) << "\n";
    for (const auto& r : t.rows) *o << join(r) << "\n";
    log_line(std::string("table ") + id + (t.pass ? " within tolerance" : " has entries outside tolerance"));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sclock: stochastic-clock barrier pricing engine"};
    app.require_subcommand(1);
    app.footer("Threads: SCLOCK_THREADS (default: all logical cores). Exit codes: 0 ok, 1 invalid input, 2 numerical failure.");

    std::string config_path, out_path, dataset_path, family = "cir", stages = "1234", space = "vol", table_id,
                                                     scale = "desk", residuals_path;
    double barrier_weight = 0.25;
    bool per_maturity = false;

    auto add_config = [&](CLI::App* s) {
        s->add_option("-c,--config", config_path, "JSON run configuration")->required()->check(CLI::ExistingFile);
        s->add_option("-o,--out", out_path, "output file (default stdout)");
    };
    auto* price = app.add_subcommand("price", "analytic barrier prices at rho = 0");
    add_config(price);
    auto* mcv = app.add_subcommand("mc-validate", "Monte Carlo vs analytic prices");
    add_config(mcv);
    auto* rex = app.add_subcommand("rho-expand", "leverage expansion coefficients");
    add_config(rex);
    auto* pade = app.add_subcommand("pade", "Pade / Taylor evaluation over rho");
    add_config(pade);
    auto* van = app.add_subcommand("vanilla", "COS vanilla prices and implied vols");
    add_config(van);
    auto* cal = app.add_subcommand("calibrate", "staged calibration");
    cal->add_option("-d,--dataset", dataset_path, "JSON calibration dataset")->required()->check(CLI::ExistingFile);
    cal->add_option("-f,--family", family, "cir | cir2 | sqou | markov")->check(CLI::IsMember({"cir", "cir2", "sqou", "markov"}));
    cal->add_option("-s,--stages", stages, "stages to run, e.g. 1234");
    cal->add_option("--space", space, "vanilla residual space: vol | price");
    cal->add_option("--barrier-weight", barrier_weight, "barrier weight relative to vanillas");
    cal->add_flag("--per-maturity-rho", per_maturity, "fit one rho per barrier maturity");
    cal->add_option("-o,--out", out_path, "result JSON (default stdout)");
    cal->add_option("-r,--residuals", residuals_path, "residual table CSV");
    auto* rep = app.add_subcommand("repro-table", "reproduce a reference table");
    rep->add_option("table", table_id, "table id 6.2 .. 6.12")->required();
    rep->add_option("--scale", scale, "desk | full");
    rep->add_option("-o,--out", out_path, "output CSV (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*price) return cmd_price(config_path, out_path);
        if (*mcv) return cmd_mc_validate(config_path, out_path);
        if (*rex) return cmd_rho_expand(config_path, out_path);
        if (*pade) return cmd_pade(config_path, out_path);
        if (*van) return cmd_vanilla(config_path, out_path);
        if (*cal) return cmd_calibrate(dataset_path, family, stages, space, barrier_weight, per_maturity, out_path, residuals_path);
        if (*rep) return cmd_repro(table_id, scale, out_path);
    } catch (const KnockedOutError& e) {
        std::cerr << "error: invalid contract geometry: " << e.what() << "\n";
        return 1;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
