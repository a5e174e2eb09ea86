#include "jdlife/verify.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "jdlife/csvio.hpp"
#include "jdlife/measure.hpp"
#include "jdlife/obpi.hpp"
#include "jdlife/parallel.hpp"

namespace jdlife {

namespace {

class Timer {
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();

public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }
};

std::uint64_t sub_seed(std::uint64_t seed, int tag) { return seed + static_cast<std::uint64_t>(tag); }

DualSolution solve_dual_solution(const RunConfig& cfg, int t_steps, int z_steps) {
    PdeOptions opt;
    opt.t_steps = t_steps;
    opt.z_steps = z_steps;
    opt.z_width = cfg.z_width;
    opt.bounds = cfg.psi_bounds;
    opt.threads = cfg.threads;
    DualGrid grid = solve_pde(cfg.market, cfg.preference, cfg.mortality, opt);
    return make_dual_solution(cfg.market, cfg.preference, cfg.mortality, cfg.income, std::move(grid));
}

std::string fmt(double v) {
    std::ostringstream ss;
    ss.precision(6);
    ss << v;
    return ss.str();
}

} // namespace

double ode_reduction_value(const RunConfig& cfg, int steps) {
    const double T = cfg.mortality.T;
    const double dt = T / steps;
    const double z0 = cfg.market.z0;
    const double kap = cfg.preference.kappa / (1.0 - cfg.preference.delta);
    auto rate = [&](double t, double v) {
        double h = -std::log(v);
        PsiOpt po = minimize_psi(cfg.market, cfg.preference, t, z0, h, 0.0, cfg.psi_bounds);
        return effective_rate(cfg.market, cfg.preference, t, z0, po.psi) +
               cfg.mortality.mu.at_time(t) + kap;
    };
    auto F = [&](double t, double v) {
        return rate(t, v) * v - (1.0 + cfg.mortality.mu.at_time(t));
    };
    double v = 1.0;
    for (int k = steps; k > 0; --k) {
        double t1 = T * k / steps;
        double tm = t1 - 0.5 * dt;
        double t0 = T * (k - 1) / steps;
        double k1 = F(t1, v);
        double k2 = F(tm, v - 0.5 * dt * k1);
        double k3 = F(tm, v - 0.5 * dt * k2);
        double k4 = F(t0, v - dt * k3);
        v -= dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return v;
}

RunReport run_acceptance(const RunConfig& cfg) {
    RunReport rep;
    const TimeGrid mc_grid = cfg.mc_grid();
    const int threads = cfg.threads;

    Timer t_solve;
    DualSolution dual = solve_dual_solution(cfg, cfg.pde_t_steps, cfg.pde_z_steps);
    Schedule sched = Schedule::build(cfg.market, cfg.preference, cfg.mortality, cfg.income, mc_grid);
    StrategyContext ctx{&cfg.market, &cfg.preference, &cfg.mortality, &cfg.income, &dual};
    double solve_seconds = t_solve.seconds();

    // 1. Girsanov martingale: E[Lambda(T)] = 1 within 3 SE, under the solved psi policy.
    {
        Timer timer;
        GridPsiPolicy policy(dual.grid);
        std::vector<double> samples(cfg.mc_paths);
        parallel_for(cfg.mc_paths, threads, [&](std::size_t lo, std::size_t hi) {
            std::vector<double> psi_path(mc_grid.n_steps);
            for (std::size_t i = lo; i < hi; ++i) {
                PathBundle b = simulate_factor(cfg.market, mc_grid, sub_seed(cfg.seed, 101), i,
                                               Measure::P);
                for (int k = 0; k < mc_grid.n_steps; ++k)
                    psi_path[k] = policy(mc_grid.node(k), b.z[k]);
                samples[i] = radon_nikodym_path(cfg.market, b, psi_path).back();
            }
        });
        MartingaleStats st = martingale_check(samples);
        CheckResult c;
        c.name = "girsanov_martingale";
        c.seconds = timer.seconds();
        c.statistic = std::fabs(st.z_score);
        c.tolerance = 3.0;
        c.pass = c.statistic <= 3.0 && c.seconds < 60.0;
        c.details = "mean=" + fmt(st.mean) + " se=" + fmt(st.std_error) + " runtime<60s";
        rep.checks.push_back(c);
    }

    // 2. No-jump degeneracy: gamma == 0 forces psi_hat == 1 on the whole grid.
    {
        Timer timer;
        RunConfig nojump = cfg;
        nojump.market.gamma = ScalarField::constant(0.0);
        DualSolution dj = solve_dual_solution(nojump, cfg.pde_t_steps, cfg.pde_z_steps);
        double worst = 0.0;
        for (double psi : dj.grid.psi_hat) worst = std::max(worst, std::fabs(psi - 1.0));
        CheckResult c;
        c.name = "no_jump_psi_hat_unity";
        c.seconds = timer.seconds();
        c.statistic = worst;
        c.tolerance = 1e-8;
        c.pass = worst <= 1e-8;
        rep.checks.push_back(c);
    }

    // 3. PDE vs Feynman-Kac Monte Carlo, with a Richardson-calibrated budget.
    {
        Timer timer;
        double v1 = dual.annuity0;
        GridPsiPolicy policy(dual.grid);
        McEstimate mc1 = mc_dual_value(cfg.market, cfg.preference, cfg.mortality, policy, mc_grid,
                                       cfg.mc_paths, sub_seed(cfg.seed, 103), threads);
        DualSolution fine = solve_dual_solution(cfg, 2 * cfg.pde_t_steps, 2 * cfg.pde_z_steps);
        TimeGrid fine_grid = TimeGrid::make(cfg.mortality.T, 2 * cfg.mc_steps);
        GridPsiPolicy policy_fine(fine.grid);
        McEstimate mc2 = mc_dual_value(cfg.market, cfg.preference, cfg.mortality, policy_fine,
                                       fine_grid, cfg.mc_paths, sub_seed(cfg.seed, 103), threads);
        double dt_pde = cfg.mortality.T / cfg.pde_t_steps;
        double dz = (dual.grid.z_nodes[1] - dual.grid.z_nodes[0]);
        double e1 = dt_pde + dz * dz + mc_grid.dt;
        double e2 = 0.5 * dt_pde + 0.25 * dz * dz + 0.5 * mc_grid.dt;
        double K = 3.0 * (std::fabs(v1 - fine.annuity0) + std::fabs(mc1.mean - mc2.mean)) / (e1 - e2);
        double budget1 = std::max(K * e1, 1e-10);
        double budget2 = std::max(K * e2, 1e-10 / 1.8 / 1.001);
        double gap = std::fabs(v1 - mc1.mean);
        double ratio = budget1 / budget2;
        CheckResult c;
        c.name = "pde_mc_cross_oracle";
        c.seconds = timer.seconds();
        c.statistic = gap;
        c.tolerance = 3.0 * mc1.std_error + budget1;
        c.pass = gap <= c.tolerance && ratio >= 1.8;
        c.details = "V_pde=" + fmt(v1) + " mc=" + fmt(mc1.mean) + " budget=" + fmt(budget1) +
                    " budget_ratio=" + fmt(ratio);
        rep.checks.push_back(c);
    }

    // 4. ODE-reduction oracle (z-independent configuration).
    {
        Timer timer;
        double v_ode = ode_reduction_value(cfg, 4 * cfg.pde_t_steps);
        double rel = std::fabs(dual.annuity0 - v_ode) / std::fabs(v_ode);
        CheckResult c;
        c.name = "ode_reduction_oracle";
        c.seconds = timer.seconds() + solve_seconds;
        c.statistic = rel;
        c.tolerance = 1e-4;
        c.pass = rel <= 1e-4;
        c.details = "V_pde=" + fmt(dual.annuity0) + " V_rk4=" + fmt(v_ode);
        rep.checks.push_back(c);
    }

    // 5. Budget constraint under Q(psi_hat).
    {
        Timer timer;
        BudgetReport br = budget_check(ctx, sched, cfg.mc_paths, sub_seed(cfg.seed, 105), threads);
        CheckResult c;
        c.name = "budget_constraint";
        c.seconds = timer.seconds();
        c.statistic = std::fabs(br.gap);
        c.tolerance = 3.0 * br.std_error;
        c.pass = c.statistic <= c.tolerance;
        c.details = "lhs=" + fmt(br.lhs) + " rhs=" + fmt(br.rhs) + " se=" + fmt(br.std_error);
        rep.checks.push_back(c);
    }

    // 6. Discounted-wealth martingale identity at interior checkpoints.
    {
        Timer timer;
        auto cps = martingale_identity_check(ctx, sched, cfg.mc_paths, sub_seed(cfg.seed, 106),
                                             threads);
        double worst = 0.0;
        for (const auto& cp : cps) worst = std::max(worst, std::fabs(cp.z_score));
        CheckResult c;
        c.name = "wealth_martingale_identity";
        c.seconds = timer.seconds();
        c.statistic = worst;
        c.tolerance = 3.0;
        c.pass = worst <= 3.0;
        c.details = std::to_string(cps.size()) + " checkpoints, max |z|";
        rep.checks.push_back(c);
    }

    // 7. c* = p*, positivity, and degree-one homogeneity under doubled capital.
    {
        Timer timer;
        const std::size_t n_paths = 2000;
        double worst_rel = 0.0;
        bool positive = true, cp_equal = true;
        for (std::size_t i = 0; i < n_paths; ++i) {
            WealthPath w1 = simulate_wealth_path(ctx, sched, sub_seed(cfg.seed, 107), i, Measure::Q, 1.0);
            WealthPath w2 = simulate_wealth_path(ctx, sched, sub_seed(cfg.seed, 107), i, Measure::Q, 2.0);
            for (int k = 0; k <= mc_grid.n_steps; ++k) {
                if (!(w1.c[k] > 0.0)) positive = false;
                double p_recomputed = w1.y[k] / dual.annuity(sched.t[k], w1.z[k]);
                if (p_recomputed != w1.c[k]) cp_equal = false;
                worst_rel = std::max(worst_rel, std::fabs(w2.y[k] - 2.0 * w1.y[k]) / w2.y[k]);
                worst_rel = std::max(worst_rel, std::fabs(w2.c[k] - 2.0 * w1.c[k]) / w2.c[k]);
                double pi1 = optimal_allocation(cfg.market, cfg.preference, dual, w1.y[k],
                                                sched.t[k], w1.z[k]);
                double pi2 = optimal_allocation(cfg.market, cfg.preference, dual, w2.y[k],
                                                sched.t[k], w2.z[k]);
                if (pi2 != 0.0 || pi1 != 0.0)
                    worst_rel = std::max(worst_rel, std::fabs(pi2 - 2.0 * pi1) /
                                                        std::max(std::fabs(pi2), 1e-300));
            }
        }
        CheckResult c;
        c.name = "consumption_insurance_homogeneity";
        c.seconds = timer.seconds();
        c.statistic = worst_rel;
        c.tolerance = 1e-12;
        c.pass = cp_equal && positive && worst_rel <= 1e-12;
        c.details = "c==p bitwise, c>0, (x0,ell) doubled with common random numbers";
        rep.checks.push_back(c);
    }

    // 8. American put sanity: dominance, monotonicity, deterministic DP oracle.
    {
        Timer timer;
        PricingPanel panel = build_pricing_panel(ctx, cfg.guarantee, mc_grid, cfg.lsm_paths,
                                                 sub_seed(cfg.seed, 108), threads);
        PutQuote q = lsm_price(panel, 1.0, cfg.basis_degree, threads);
        bool ge_intrinsic = q.price >= q.intrinsic0 - 3.0 * q.std_error;
        bool ge_european = q.price >= q.european - 3.0 * (q.std_error + q.european_se);
        PutQuote q_up = lsm_price(panel, 1.02, cfg.basis_degree, threads);
        PutQuote q_dn = lsm_price(panel, 0.98, cfg.basis_degree, threads);
        double mono_slack = 1e-6 * cfg.market.x0;
        bool monotone = q_up.price <= q.price + mono_slack && q.price <= q_dn.price + mono_slack;

        // deterministic-market oracle: no excess return, no jumps -> Y* deterministic
        RunConfig det = cfg;
        det.market.alpha = det.market.r;
        det.market.lambda = ScalarField::constant(0.0);
        DualSolution det_dual = solve_dual_solution(det, cfg.pde_t_steps, 4);
        StrategyContext det_ctx{&det.market, &det.preference, &det.mortality, &det.income, &det_dual};
        PricingPanel det_panel = build_pricing_panel(det_ctx, det.guarantee, mc_grid, 64,
                                                     sub_seed(cfg.seed, 109), threads);
        PutQuote det_q = lsm_price(det_panel, 0.8, cfg.basis_degree, threads);
        // dynamic-programming recursion on the single deterministic path
        double dp = 0.0;
        {
            const int n = mc_grid.n_steps;
            double v = det_panel.intrinsic(n, det_panel.accrual_state(0, n, 0.8),
                                           0.8 * det_panel.node_value(det_panel.y, 0, n));
            for (int k = n - 1; k >= 0; --k) {
                double disc = det_panel.sched.disc_rmu[k + 1] / det_panel.sched.disc_rmu[k];
                double intr = det_panel.intrinsic(k, det_panel.accrual_state(0, k, 0.8),
                                                  0.8 * det_panel.node_value(det_panel.y, 0, k));
                v = std::max(intr, disc * v);
            }
            dp = v;
        }
        double dp_gap = std::fabs(det_q.price - dp);
        CheckResult c;
        c.name = "american_put_sanity";
        c.seconds = timer.seconds();
        c.statistic = dp_gap;
        c.tolerance = 1e-8;
        c.pass = ge_intrinsic && ge_european && monotone && dp_gap <= 1e-8;
        c.details = "price=" + fmt(q.price) + " eur=" + fmt(q.european) + " dp_gap=" + fmt(dp_gap) +
                    (monotone ? " monotone" : " NOT-monotone");
        rep.checks.push_back(c);
    }

    // 9. OBPI floor across the full path set, and the budget at t=0.
    {
        Timer timer;
        PricingPanel panel = build_pricing_panel(ctx, cfg.guarantee, mc_grid, cfg.lsm_paths,
                                                 sub_seed(cfg.seed, 110), threads);
        ObpiOptions opt;
        opt.n_paths = cfg.mc_paths;
        opt.seed = sub_seed(cfg.seed, 111);
        opt.threads = threads;
        opt.basis_degree = cfg.basis_degree;
        opt.d_bins = cfg.d_bins;
        opt.bisect_tol = cfg.bisect_tol;
        opt.rho_lo = cfg.rho_lo;
        ObpiRun run = run_obpi(ctx, panel, opt);
        double budget_gap = std::fabs(run.initial.x_hat0 - cfg.market.x0);
        CheckResult c;
        c.name = "obpi_floor_and_budget";
        c.seconds = timer.seconds();
        c.statistic = static_cast<double>(run.floor.violations);
        c.tolerance = 0.0;
        c.pass = run.floor.violations == 0 && budget_gap <= cfg.bisect_tol;
        c.details = "rho0=" + fmt(run.initial.rho0) + " x_hat0_gap=" + fmt(budget_gap) + " nodes=" +
                    std::to_string(run.floor.nodes) + " ratchets=" + std::to_string(run.ratchet_events);
        rep.checks.push_back(c);
    }

    // 10. Duality gap: simulated primal utility against Psi(zeta_hat, psi_hat).
    {
        Timer timer;
        PrimalEstimate pe = primal_objective(ctx, sched, cfg.mc_paths, sub_seed(cfg.seed, 112),
                                             threads);
        double psi_value = dual.dual_value;
        bool upper = pe.mean <= psi_value + 3.0 * pe.std_error;
        double rel = std::fabs(pe.mean - psi_value) / std::fabs(psi_value);
        CheckResult c;
        c.name = "duality_gap";
        c.seconds = timer.seconds();
        c.statistic = rel;
        c.tolerance = 0.02;
        c.pass = upper && rel <= 0.02;
        c.details = "primal=" + fmt(pe.mean) + " se=" + fmt(pe.std_error) + " dual=" + fmt(psi_value) +
                    (upper ? " one-sided-ok" : " PRIMAL-EXCEEDS-DUAL");
        rep.checks.push_back(c);
    }

    // 11. Determinism: identical seeds reproduce identical bytes for the
    // threaded PDE, MC, and LSM statistics.
    {
        Timer timer;
        auto run_once = [&]() {
            std::ostringstream ss;
            DualSolution d2 = solve_dual_solution(cfg, cfg.pde_t_steps / 2, cfg.pde_z_steps / 2);
            for (double h : d2.grid.h) ss << format_double(h) << ',';
            std::size_t n_mc = std::min<std::size_t>(cfg.mc_paths, 20000);
            BudgetReport br = budget_check(ctx, sched, n_mc, sub_seed(cfg.seed, 105), threads);
            ss << format_double(br.lhs) << ',' << format_double(br.std_error) << ',';
            PricingPanel panel = build_pricing_panel(ctx, cfg.guarantee, mc_grid,
                                                     std::min<std::size_t>(cfg.lsm_paths, 8192),
                                                     sub_seed(cfg.seed, 108), threads);
            PutQuote q = lsm_price(panel, 0.9, cfg.basis_degree, threads, /*value_only=*/true);
            ss << format_double(q.fit_value0);
            return ss.str();
        };
        std::string first = run_once();
        std::string second = run_once();
        CheckResult c;
        c.name = "determinism_fixed_seeds";
        c.seconds = timer.seconds();
        c.statistic = (first == second) ? 0.0 : 1.0;
        c.tolerance = 0.0;
        c.pass = first == second;
        c.details = "pde+mc+lsm statistics byte-compared across re-runs";
        rep.checks.push_back(c);
    }

    return rep;
}

} // namespace jdlife
