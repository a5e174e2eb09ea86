#include "jdlife/obpi.hpp"

#include <cmath>
#include <stdexcept>

#include "jdlife/parallel.hpp"

namespace jdlife {

void RatchetState::update(double t, double boundary_value, double y_star) {
    if (!(y_star > 0.0)) throw std::runtime_error("ratchet update: Y* <= 0");
    double candidate = boundary_value / y_star;
    if (candidate > rho) {
        if (event_log) event_log->push_back({t, rho, candidate});
        ++events;
        rho = candidate;
    }
}

namespace {

double budget_gap(const PricingPanel& panel, double rho, int basis_degree, int threads,
                  double x0, double g0, double y0) {
    PutQuote q = lsm_price(panel, rho, basis_degree, threads, /*value_only=*/true);
    return rho * y0 + q.fit_value0 - g0 - x0;
}

} // namespace

InitialFraction solve_initial_fraction(const PricingPanel& panel, int basis_degree, double tol,
                                       double rho_lo, int threads) {
    const double x0 = panel.x0;
    const double g0 = panel.sched.g[0];
    const double y0 = panel.node_value(panel.y, 0, 0);

    InitialFraction out;
    double f_hi = budget_gap(panel, 1.0, basis_degree, threads, x0, g0, y0);
    if (f_hi <= tol) {
        out.rho0 = 1.0;
        out.gap = f_hi;
        out.x_hat0 = x0 + f_hi;
        out.full_holding = true;
        return out;
    }
    double f_lo = budget_gap(panel, rho_lo, basis_degree, threads, x0, g0, y0);
    if (f_lo > tol) {
        throw std::runtime_error(
            "solve_initial_fraction: guarantee infeasible (floor too expensive at rho_lo=" +
            std::to_string(rho_lo) + ", budget gap " + std::to_string(f_lo) + ")");
    }

    double lo = rho_lo, hi = 1.0, f_at_lo = f_lo;
    for (int it = 0; it < 60 && hi - lo > 1e-14; ++it) {
        double mid = 0.5 * (lo + hi);
        double f_mid = budget_gap(panel, mid, basis_degree, threads, x0, g0, y0);
        if (f_mid > 0.0) {
            hi = mid;
        } else {
            lo = mid;
            f_at_lo = f_mid;
        }
        ++out.iterations;
        if (std::fabs(f_at_lo) <= tol * 0.1 && hi - lo < 1e-12) break;
    }
    out.rho0 = lo;
    out.gap = f_at_lo;
    out.x_hat0 = x0 + f_at_lo;
    return out;
}

RestrictedPoint restricted_strategy(const MarketParams& p, const PreferenceSpec& pref,
                                    const DualSolution& dual, double rho, double y_star, double t,
                                    double z) {
    RestrictedPoint out;
    out.c = rho * optimal_consumption(dual, y_star, t, z);
    out.p = out.c;
    out.pi = rho * optimal_allocation(p, pref, dual, y_star, t, z);
    return out;
}

ObpiRun run_obpi(const StrategyContext& ctx, const PricingPanel& panel, const ObpiOptions& opt) {
    ObpiRun run;
    run.initial = solve_initial_fraction(panel, opt.basis_degree, opt.bisect_tol, opt.rho_lo,
                                         opt.threads);
    run.quote = lsm_price(panel, run.initial.rho0, opt.basis_degree, opt.threads);
    run.boundary = exercise_boundary(panel, run.quote, opt.d_bins);
    run.tol_guarantee = (opt.tol_guarantee >= 0.0)
        ? opt.tol_guarantee
        : 3.0 * run.quote.std_error + 1e-6 * panel.x0;

    const Schedule& sc = panel.sched;
    const int n = sc.grid.n_steps;
    const double dt = sc.grid.dt;
    const double x0 = panel.x0;
    const std::size_t np = opt.n_paths;

    std::vector<int> marks;
    for (int m : {n / 4, n / 2, 3 * n / 4, n})
        if (marks.empty() || m > marks.back()) marks.push_back(m);

    std::vector<std::vector<double>> ident(marks.size(), std::vector<double>(np));
    std::vector<FloorCheck> path_floor(np);
    std::vector<std::size_t> path_events(np, 0);
    std::vector<double> path_max_rho(np, 0.0);

    const std::size_t n_export = std::min<std::size_t>(opt.export_paths, np);
    std::vector<RestrictedRow> sample(n_export * static_cast<std::size_t>(n + 1));

    parallel_for(np, opt.threads, [&](std::size_t lo_p, std::size_t hi_p) {
        PutValueEvaluator put_value(panel, run.quote);
        for (std::size_t i = lo_p; i < hi_p; ++i) {
            WealthPath w = simulate_wealth_path(ctx, sc, opt.seed, i, Measure::Q);
            RatchetState ratchet;
            ratchet.rho = run.initial.rho0;
            double consumed_leg = 0.0; // int e^{-A_g} rho (1+mu) c* ds through t_k
            double outflow_pv = 0.0;   // int e^{-R} (c_hat + mu p_hat - ell) ds through t_k
            double f_prev = 0.0;
            std::size_t mi = 0;
            FloorCheck& fc = path_floor[i];

            for (int k = 0; k <= n; ++k) {
                double t = sc.t[k];
                double d_state = panel.income_leg[k] - consumed_leg;
                double b_t = run.boundary.lookup_level(k, d_state);
                ratchet.update(t, b_t, w.y[k]);
                double rho = ratchet.rho;
                double y_state = rho * w.y[k];
                double pv = put_value(k, y_state, w.z[k], d_state);
                double x_hat = y_state + pv - sc.g[k];
                double floor = panel.floor_level(k, d_state);
                fc.add(x_hat, floor, run.tol_guarantee);

                double c_hat = rho * w.c[k];
                double f_k = sc.disc_rmu[k] * ((1.0 + sc.mu[k]) * c_hat - sc.ell[k]);
                if (k > 0) outflow_pv += 0.5 * (f_prev + f_k) * dt;
                f_prev = f_k;
                while (mi < marks.size() && marks[mi] == k) {
                    ident[mi][i] = outflow_pv + sc.disc_rmu[k] * x_hat;
                    ++mi;
                }
                if (k < n) {
                    // ratcheted consumption accrual over [t_k, t_{k+1}]
                    double a0 = std::exp(-panel.accrual_disc[k]) * (1.0 + sc.mu[k]) * rho * w.c[k];
                    double a1 = std::exp(-panel.accrual_disc[k + 1]) * (1.0 + sc.mu[k + 1]) * rho *
                                w.c[k + 1];
                    consumed_leg += 0.5 * (a0 + a1) * dt;
                }
                if (i < n_export) {
                    RestrictedRow& row = sample[i * static_cast<std::size_t>(n + 1) + k];
                    row.path = i;
                    row.t = t;
                    row.y_star = w.y[k];
                    row.rho = rho;
                    row.put_value = pv;
                    row.x_hat = x_hat;
                    row.floor = std::isinf(floor) ? -1e308 : floor;
                    row.c = c_hat;
                    row.p = c_hat;
                    row.pi = rho * optimal_allocation(*ctx.p, *ctx.pref, *ctx.dual, w.y[k], t, w.z[k]);
                    row.violation = (floor - x_hat) > run.tol_guarantee;
                }
            }
            path_events[i] = ratchet.events;
            path_max_rho[i] = ratchet.rho;
        }
    });

    for (std::size_t i = 0; i < np; ++i) {
        run.floor.violations += path_floor[i].violations;
        run.floor.nodes += path_floor[i].nodes;
        run.floor.worst_shortfall = std::max(run.floor.worst_shortfall, path_floor[i].worst_shortfall);
        run.ratchet_events += path_events[i];
        run.max_rho = std::max(run.max_rho, path_max_rho[i]);
    }
    for (std::size_t m = 0; m < marks.size(); ++m) {
        double mean = 0.0;
        for (double v : ident[m]) mean += v;
        mean /= static_cast<double>(np);
        double ss = 0.0;
        for (double v : ident[m]) ss += (v - mean) * (v - mean);
        double se = std::sqrt(ss / std::max<std::size_t>(np - 1, 1) / static_cast<double>(np));
        MartingaleCheckpoint cp;
        cp.t = sc.t[marks[m]];
        cp.mean = mean;
        cp.std_error = se;
        cp.z_score = (se > 0.0) ? (mean - x0) / se : ((mean == x0) ? 0.0 : INFINITY);
        run.identity.push_back(cp);
    }
    run.sample_rows = std::move(sample);
    return run;
}

} // namespace jdlife
