#include "jdlife/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "jdlife/csvio.hpp"
#include "jdlife/measure.hpp"
#include "jdlife/obpi.hpp"
#include "jdlife/parallel.hpp"
#include "jdlife/verify.hpp"

namespace jdlife {

namespace {

namespace fs = std::filesystem;

std::string out_path(const RunConfig& cfg, const std::string& name) {
    return (fs::path(cfg.out_dir) / name).string();
}

DualSolution load_dual_artifact(const RunConfig& cfg) {
    std::string path = out_path(cfg, "dual_grid.csv");
    check_artifact(path, cfg.config_hash);
    DualGrid grid = dual_grid_from_csv(read_file(path));
    return make_dual_solution(cfg.market, cfg.preference, cfg.mortality, cfg.income, std::move(grid));
}

} // namespace

RunConfig load_cli_config(const CliOptions& opt) {
    RunConfig cfg = load_config(opt.config_path);
    if (opt.out_dir) cfg.out_dir = *opt.out_dir;
    if (opt.seed) cfg.seed = *opt.seed;
    if (opt.paths) cfg.mc_paths = *opt.paths;
    if (opt.threads) cfg.threads = *opt.threads;
    return cfg;
}

std::string dual_grid_to_csv(const DualGrid& grid) {
    std::ostringstream out;
    out << "t,z,h,psi_hat\n";
    for (std::size_t it = 0; it < grid.t_nodes.size(); ++it) {
        for (std::size_t iz = 0; iz < grid.z_nodes.size(); ++iz) {
            std::size_t idx = grid.index(it, iz);
            out << format_double(grid.t_nodes[it]) << ',' << format_double(grid.z_nodes[iz]) << ','
                << format_double(grid.h[idx]) << ',' << format_double(grid.psi_hat[idx]) << '\n';
        }
    }
    return out.str();
}

DualGrid dual_grid_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::getline(in, line); // header
    std::map<double, std::map<double, std::pair<double, double>>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ss(line);
        double t, z, h, psi;
        if (!(ss >> t >> z >> h >> psi)) throw std::runtime_error("malformed dual grid row: " + line);
        rows[t][z] = {h, psi};
    }
    if (rows.empty()) throw std::runtime_error("empty dual grid artifact");
    DualGrid g;
    for (const auto& [t, _] : rows) g.t_nodes.push_back(t);
    for (const auto& [z, _] : rows.begin()->second) g.z_nodes.push_back(z);
    for (const auto& [t, zmap] : rows) {
        if (zmap.size() != g.z_nodes.size()) throw std::runtime_error("ragged dual grid artifact");
        for (const auto& [z, hp] : zmap) {
            g.h.push_back(hp.first);
            g.psi_hat.push_back(hp.second);
        }
        (void)t;
    }
    return g;
}

int cmd_validate(const CliOptions& opt) {
    RunConfig cfg = load_cli_config(opt);
    double width = (cfg.z_width > 0.0) ? cfg.z_width : 6.0 * std::sqrt(cfg.mortality.T);
    TimeGrid grid = TimeGrid::make(cfg.mortality.T, std::min(cfg.mc_steps, 200));
    auto violations = validate_params(cfg.market, cfg.mortality, cfg.income, cfg.preference, grid,
                                      cfg.market.z0 - width, cfg.market.z0 + width);
    if (violations.empty()) {
        std::cout << "ok: no assumption violations on the evaluation grid\n";
        return 0;
    }
    std::size_t shown = std::min<std::size_t>(violations.size(), 25);
    for (std::size_t i = 0; i < shown; ++i) std::cerr << "violation: " << violations[i] << '\n';
    if (violations.size() > shown)
        std::cerr << "... and " << violations.size() - shown << " more\n";
    return 1;
}

int cmd_solve(const CliOptions& opt) {
    RunConfig cfg = load_cli_config(opt);
    PdeOptions popt;
    popt.t_steps = cfg.pde_t_steps;
    popt.z_steps = cfg.pde_z_steps;
    popt.z_width = cfg.z_width;
    popt.bounds = cfg.psi_bounds;
    popt.threads = cfg.threads;
    DualGrid grid = solve_pde(cfg.market, cfg.preference, cfg.mortality, popt);

    // Richardson convergence metadata from a coarse sweep
    PdeOptions copt = popt;
    copt.t_steps = popt.t_steps / 2;
    copt.z_steps = popt.z_steps / 2;
    DualGrid coarse = solve_pde(cfg.market, cfg.preference, cfg.mortality, copt);
    double v_fine = std::exp(-grid.interp_h(0.0, cfg.market.z0));
    double v_coarse = std::exp(-coarse.interp_h(0.0, cfg.market.z0));

    DualSolution sol = make_dual_solution(cfg.market, cfg.preference, cfg.mortality, cfg.income, grid);

    std::string grid_path = out_path(cfg, "dual_grid.csv");
    atomic_write_file(grid_path, dual_grid_to_csv(sol.grid));
    write_meta(grid_path, cfg.config_hash, cfg.seed, "solve");

    nlohmann::json meta;
    meta["value_at_origin"] = sol.annuity0;
    meta["zeta_hat"] = sol.zeta_hat;
    meta["dual_value"] = sol.dual_value;
    meta["coarse_value_at_origin"] = v_coarse;
    meta["richardson_diff"] = std::fabs(v_fine - v_coarse);
    meta["psi_boundary_hit"] = sol.grid.any_psi_boundary_hit;
    meta["config_hash"] = cfg.config_hash;
    atomic_write_file(out_path(cfg, "solve_summary.json"), meta.dump(2) + "\n");
    std::cout << "solved: H(0,z0)=" << sol.annuity0 << " zeta_hat=" << sol.zeta_hat
              << " dual_value=" << sol.dual_value << '\n';
    if (sol.grid.any_psi_boundary_hit)
        std::cerr << "warning: psi optimizer clamped at the search bounds somewhere on the grid\n";
    return 0;
}

int cmd_simulate(const CliOptions& opt) {
    RunConfig cfg = load_cli_config(opt);
    DualSolution dual = load_dual_artifact(cfg);
    TimeGrid grid = cfg.mc_grid();
    Schedule sched = Schedule::build(cfg.market, cfg.preference, cfg.mortality, cfg.income, grid);
    StrategyContext ctx{&cfg.market, &cfg.preference, &cfg.mortality, &cfg.income, &dual};

    BudgetReport budget = budget_check(ctx, sched, cfg.mc_paths, cfg.seed + 105, cfg.threads);
    auto identity = martingale_identity_check(ctx, sched, cfg.mc_paths, cfg.seed + 106, cfg.threads);

    std::ostringstream csv;
    csv << "path_id,t,Z,S,Y,X,c,p,pi\n";
    std::size_t n_export = std::min<std::size_t>(cfg.export_paths, cfg.mc_paths);
    for (std::size_t i = 0; i < n_export; ++i) {
        WealthPath w = simulate_wealth_path(ctx, sched, cfg.seed + 105, i, Measure::Q);
        double log_s = std::log(cfg.market.s0);
        double s = cfg.market.s0;
        for (int k = 0; k <= grid.n_steps; ++k) {
            double t = sched.t[k];
            double pi = optimal_allocation(cfg.market, cfg.preference, dual, w.y[k], t, w.z[k]);
            csv << i << ',' << format_double(t) << ',' << format_double(w.z[k]) << ','
                << format_double(s) << ',' << format_double(w.y[k]) << ','
                << format_double(w.y[k] - sched.g[k]) << ',' << format_double(w.c[k]) << ','
                << format_double(w.c[k]) << ',' << format_double(pi) << '\n';
            if (k < grid.n_steps) {
                double psi = dual.psi_at(t, w.z[k]);
                RiskPrices rp = risk_prices(cfg.market, t, w.z[k], psi);
                double al = cfg.market.alpha(t, w.z[k]), be = cfg.market.beta(t, w.z[k]);
                double sg = cfg.market.sigma(t, w.z[k]), ga = cfg.market.gamma(t, w.z[k]);
                double var = be * be + sg * sg + 2.0 * cfg.market.corr_w1w2 * be * sg;
                // Q-drift of the asset via the excess-return identity
                double drift = al + be * rp.nu + sg * rp.theta;
                log_s += (drift - 0.5 * var) * grid.dt + be * w.w1[k] + sg * w.w2[k];
                s = std::exp(log_s) * std::pow(1.0 + ga, static_cast<double>(w.jumps[k]));
                log_s = std::log(s);
            }
        }
    }
    std::string paths_path = out_path(cfg, "paths.csv");
    atomic_write_file(paths_path, csv.str());
    write_meta(paths_path, cfg.config_hash, cfg.seed, "simulate");

    nlohmann::json meta;
    meta["budget_lhs"] = budget.lhs;
    meta["budget_rhs"] = budget.rhs;
    meta["budget_gap"] = budget.gap;
    meta["budget_se"] = budget.std_error;
    nlohmann::json cps = nlohmann::json::array();
    for (const auto& cp : identity)
        cps.push_back({{"t", cp.t}, {"mean", cp.mean}, {"se", cp.std_error}, {"z", cp.z_score}});
    meta["martingale_checkpoints"] = cps;
    meta["paths"] = cfg.mc_paths;
    meta["config_hash"] = cfg.config_hash;
    atomic_write_file(out_path(cfg, "simulate_summary.json"), meta.dump(2) + "\n");
    std::cout << "simulated " << cfg.mc_paths << " paths; budget gap " << budget.gap << " (se "
              << budget.std_error << ")\n";
    return 0;
}

int cmd_price_put(const CliOptions& opt) {
    RunConfig cfg = load_cli_config(opt);
    DualSolution dual = load_dual_artifact(cfg);
    TimeGrid grid = cfg.mc_grid();
    StrategyContext ctx{&cfg.market, &cfg.preference, &cfg.mortality, &cfg.income, &dual};
    PricingPanel panel = build_pricing_panel(ctx, cfg.guarantee, grid, cfg.lsm_paths,
                                             cfg.seed + 108, cfg.threads);
    PutQuote q = lsm_price(panel, 1.0, cfg.basis_degree, cfg.threads);
    BoundaryEstimate be = exercise_boundary(panel, q, cfg.d_bins);

    std::ostringstream quote_csv;
    quote_csv << "rho,price,std_error,fit_value,intrinsic,european,european_se,degenerate\n";
    quote_csv << format_double(q.rho) << ',' << format_double(q.price) << ','
              << format_double(q.std_error) << ',' << format_double(q.fit_value0) << ','
              << format_double(q.intrinsic0) << ',' << format_double(q.european) << ','
              << format_double(q.european_se) << ',' << (q.degenerate_regression ? 1 : 0) << '\n';
    std::string quote_path = out_path(cfg, "put_quote.csv");
    atomic_write_file(quote_path, quote_csv.str());
    write_meta(quote_path, cfg.config_hash, cfg.seed, "price-put");

    std::ostringstream bcsv;
    bcsv << "t,d_lo,d_hi,b\n";
    for (std::size_t k = 0; k < be.t_nodes.size(); ++k) {
        for (std::size_t j = 0; j < be.b[k].size(); ++j) {
            if (std::isnan(be.b[k][j])) continue;
            bcsv << format_double(be.t_nodes[k]) << ',' << format_double(be.d_edges[k][j]) << ','
                 << format_double(be.d_edges[k][j + 1]) << ',' << format_double(be.b[k][j]) << '\n';
        }
    }
    std::string bpath = out_path(cfg, "boundary.csv");
    atomic_write_file(bpath, bcsv.str());
    write_meta(bpath, cfg.config_hash, cfg.seed, "price-put");
    std::cout << "put price " << q.price << " (se " << q.std_error << "), european " << q.european
              << '\n';
    return 0;
}

int cmd_obpi(const CliOptions& opt) {
    RunConfig cfg = load_cli_config(opt);
    DualSolution dual = load_dual_artifact(cfg);
    TimeGrid grid = cfg.mc_grid();
    StrategyContext ctx{&cfg.market, &cfg.preference, &cfg.mortality, &cfg.income, &dual};
    PricingPanel panel = build_pricing_panel(ctx, cfg.guarantee, grid, cfg.lsm_paths,
                                             cfg.seed + 110, cfg.threads);
    ObpiOptions oopt;
    oopt.n_paths = cfg.mc_paths;
    oopt.seed = cfg.seed + 111;
    oopt.threads = cfg.threads;
    oopt.basis_degree = cfg.basis_degree;
    oopt.d_bins = cfg.d_bins;
    oopt.bisect_tol = cfg.bisect_tol;
    oopt.rho_lo = cfg.rho_lo;
    oopt.export_paths = cfg.export_paths;
    ObpiRun run = run_obpi(ctx, panel, oopt);

    std::ostringstream csv;
    csv << "path_id,t,Y_star,rho,put_value,X_hat,k_floor,c_hat,pi_hat,p_hat,violation\n";
    for (const auto& row : run.sample_rows) {
        csv << row.path << ',' << format_double(row.t) << ',' << format_double(row.y_star) << ','
            << format_double(row.rho) << ',' << format_double(row.put_value) << ','
            << format_double(row.x_hat) << ',' << format_double(row.floor) << ','
            << format_double(row.c) << ',' << format_double(row.pi) << ',' << format_double(row.p)
            << ',' << (row.violation ? 1 : 0) << '\n';
    }
    std::string rpath = out_path(cfg, "restricted_paths.csv");
    atomic_write_file(rpath, csv.str());
    write_meta(rpath, cfg.config_hash, cfg.seed, "obpi");

    nlohmann::json meta;
    meta["rho0"] = run.initial.rho0;
    meta["x_hat0"] = run.initial.x_hat0;
    meta["budget_gap"] = run.initial.gap;
    meta["floor_violations"] = run.floor.violations;
    meta["nodes_checked"] = run.floor.nodes;
    meta["worst_shortfall"] = run.floor.worst_shortfall;
    meta["ratchet_events"] = run.ratchet_events;
    meta["max_rho"] = run.max_rho;
    meta["tol_guarantee"] = run.tol_guarantee;
    meta["config_hash"] = cfg.config_hash;
    nlohmann::json cps = nlohmann::json::array();
    for (const auto& cp : run.identity)
        cps.push_back({{"t", cp.t}, {"mean", cp.mean}, {"se", cp.std_error}, {"z", cp.z_score}});
    meta["identity_checkpoints"] = cps;
    atomic_write_file(out_path(cfg, "obpi_summary.json"), meta.dump(2) + "\n");
    std::cout << "obpi: rho0=" << run.initial.rho0 << " floor violations=" << run.floor.violations
              << "/" << run.floor.nodes << " ratchet events=" << run.ratchet_events << '\n';
    return run.floor.violations == 0 ? 0 : 1;
}

int cmd_verify(const CliOptions& opt) {
    RunConfig cfg = load_cli_config(opt);
    // refuse stale artifacts produced by a different configuration
    std::string grid_path = out_path(cfg, "dual_grid.csv");
    if (fs::exists(grid_path)) check_artifact(grid_path, cfg.config_hash);
    RunReport rep = run_acceptance(cfg);
    std::string rpath = out_path(cfg, "report.csv");
    atomic_write_file(rpath, report_csv(rep));
    write_meta(rpath, cfg.config_hash, cfg.seed, "verify");
    print_report(rep, std::cout);
    return rep.all_pass() ? 0 : 2;
}

} // namespace jdlife
