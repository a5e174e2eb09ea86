#include "jdlife/strategy.hpp"

#include <cmath>
#include <stdexcept>

#include "jdlife/measure.hpp"
#include "jdlife/parallel.hpp"
#include "jdlife/quadrature.hpp"
#include "jdlife/rng.hpp"

namespace jdlife {

Schedule Schedule::build(const MarketParams& p, const PreferenceSpec& pref, const MortalityCurve& m,
                         const IncomeSpec& inc, const TimeGrid& grid) {
    Schedule s;
    s.grid = grid;
    const int n = grid.n_steps;
    s.t.resize(n + 1);
    s.r.resize(n + 1);
    s.mu.resize(n + 1);
    s.ell.resize(n + 1);
    s.lam.resize(n + 1);
    s.disc_rmu.resize(n + 1);
    s.disc_rhomu.resize(n + 1);
    s.g.resize(n + 1);
    double acc_rmu = 0.0, acc_rhomu = 0.0;
    for (int k = 0; k <= n; ++k) {
        double t = grid.node(k);
        s.t[k] = t;
        s.r[k] = p.r.at_time(t);
        s.mu[k] = m.mu.at_time(t);
        s.ell[k] = inc.ell.at_time(t);
        s.lam[k] = p.lambda.at_time(t);
        if (k > 0) {
            acc_rmu += simpson_step([&](double u) { return p.r.at_time(u) + m.mu.at_time(u); },
                                    grid.node(k - 1), t);
            acc_rhomu += simpson_step([&](double u) { return pref.rho.at_time(u) + m.mu.at_time(u); },
                                      grid.node(k - 1), t);
        }
        s.disc_rmu[k] = std::exp(-acc_rmu);
        s.disc_rhomu[k] = std::exp(-acc_rhomu);
        s.g[k] = human_capital(p, m, inc, t);
    }
    return s;
}

double optimal_consumption(const DualSolution& dual, double y, double t, double z) {
    double H = dual.annuity(t, z);
    if (!(H > 0.0)) throw std::runtime_error("optimal_consumption: annuity <= 0");
    return y / H;
}

double optimal_allocation(const MarketParams& p, const PreferenceSpec& pref,
                          const DualSolution& dual, double y, double t, double z) {
    double denom = p.beta(t, z) + p.sigma(t, z) + p.gamma(t, z);
    if (denom == 0.0) {
        throw std::runtime_error("optimal_allocation: beta+sigma+gamma = 0 at (t=" +
                                 std::to_string(t) + ", z=" + std::to_string(z) + ")");
    }
    double one_md = 1.0 - pref.delta;
    double psi = dual.psi_at(t, z);
    RiskPrices rp = risk_prices(p, t, z, psi);
    double jump_tilt = std::pow(psi, -1.0 / one_md) - 1.0;
    return (jump_tilt - rp.nu / one_md - rp.theta / one_md) / denom * y;
}

std::array<double, 3> allocation_residuals(const MarketParams& p, const PreferenceSpec& pref,
                                           const DualSolution& dual, double y, double t, double z,
                                           double pi) {
    double one_md = 1.0 - pref.delta;
    double psi = dual.psi_at(t, z);
    RiskPrices rp = risk_prices(p, t, z, psi);
    double jump_tilt = std::pow(psi, -1.0 / one_md) - 1.0;
    return {pi * p.beta(t, z) + rp.nu * y / one_md,
            pi * p.sigma(t, z) + rp.theta * y / one_md,
            pi * p.gamma(t, z) - jump_tilt * y};
}

WealthPath simulate_wealth_path(const StrategyContext& ctx, const Schedule& sched,
                                std::uint64_t seed, std::uint64_t path_index, Measure measure,
                                double capital_scale) {
    if (measure == Measure::Qtilde)
        throw std::invalid_argument("simulate_wealth_path: measure must be P or Q");
    const MarketParams& p = *ctx.p;
    const TimeGrid& grid = sched.grid;
    const int n = grid.n_steps;
    const double dt = grid.dt;
    const double one_md = 1.0 - ctx.pref->delta;
    const double rho_corr = p.corr_w1w2;
    const double rho_c = std::sqrt(1.0 - rho_corr * rho_corr);
    const double sqdt = std::sqrt(dt);

    WealthPath w;
    w.z.resize(n + 1);
    w.y.resize(n + 1);
    w.c.resize(n + 1);
    w.jumps.resize(n);
    w.w1.resize(n);
    w.w2.resize(n);

    Philox4x32 rng(seed, path_index);
    w.z[0] = p.z0;
    w.y[0] = capital_scale * (p.x0 + sched.g[0]);

    double log_y = std::log(w.y[0]);
    for (int k = 0; k < n; ++k) {
        double t = sched.t[k];
        double zk = w.z[k];
        double psi = ctx.dual->psi_at(t, zk);
        double H = ctx.dual->annuity(t, zk);
        RiskPrices rp = risk_prices(p, t, zk, psi);
        double lam = sched.lam[k];
        double mu = sched.mu[k];
        w.c[k] = w.y[k] / H;

        double g1 = rng.normal();
        double g2 = rng.normal();
        double dw1 = sqdt * g1;
        double dw2 = sqdt * (rho_corr * g1 + rho_c * g2);
        w.w1[k] = dw1;
        w.w2[k] = dw2;
        double jump_intensity = (measure == Measure::Q) ? psi * lam : lam;
        long jumps = rng.poisson(jump_intensity * dt);
        w.jumps[k] = jumps;

        // increments of W^Q: under P the Girsanov drift is re-added
        double dw1q = dw1, dw2q = dw2;
        if (measure == Measure::P) {
            dw1q -= rp.nu * dt;
            dw2q -= rp.theta * dt;
        }

        double jump_mult = std::pow(psi, -1.0 / one_md);
        double s1 = -rp.nu / one_md, s2 = -rp.theta / one_md;
        double var = s1 * s1 + s2 * s2 + 2.0 * rho_corr * s1 * s2;
        double drift = sched.r[k] + mu - (1.0 + mu) / H;
        log_y += (drift - 0.5 * var - (jump_mult - 1.0) * psi * lam) * dt + s1 * dw1q + s2 * dw2q;
        if (jumps > 0) log_y += jumps * std::log(jump_mult);
        if (!std::isfinite(log_y)) throw std::runtime_error("simulate_wealth_path: wealth diverged");
        w.y[k + 1] = std::exp(log_y);

        // the drawn increments belong to the simulation measure, so the factor
        // uses them directly; only Q adds the Girsanov drift
        double z_drift = p.eta(t, zk) + ((measure == Measure::Q) ? rp.nu : 0.0);
        w.z[k + 1] = zk + z_drift * dt + dw1;
    }
    w.c[n] = w.y[n] / ctx.dual->annuity(sched.t[n], w.z[n]);
    return w;
}

namespace {

// Present value, at time zero, of the step's consumption-plus-premium stream
// with the rate frozen at the left node; exact in conditional expectation for
// the multiplicative scheme, so the identity tests carry no O(dt) bias.
inline double step_outflow_pv(const Schedule& sched, const WealthPath& w, int k) {
    double H = w.y[k] / w.c[k];
    double x = (1.0 + sched.mu[k]) * sched.grid.dt / H;
    return sched.disc_rmu[k] * w.y[k] * (1.0 - std::exp(-x));
}

template <class PerPath>
std::pair<double, double> mc_mean_se(std::size_t n_paths, int threads, const PerPath& f) {
    std::vector<double> vals(n_paths);
    parallel_for(n_paths, threads, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) vals[i] = f(i);
    });
    double mean = 0.0;
    for (double v : vals) mean += v;
    mean /= static_cast<double>(n_paths);
    double ss = 0.0;
    for (double v : vals) ss += (v - mean) * (v - mean);
    double se = (n_paths > 1)
        ? std::sqrt(ss / (static_cast<double>(n_paths) - 1.0) / static_cast<double>(n_paths))
        : 0.0;
    return {mean, se};
}

} // namespace

BudgetReport budget_check(const StrategyContext& ctx, const Schedule& sched, std::size_t n_paths,
                          std::uint64_t seed, int threads) {
    const int n = sched.grid.n_steps;
    auto [mean, se] = mc_mean_se(n_paths, threads, [&](std::size_t i) {
        WealthPath w = simulate_wealth_path(ctx, sched, seed, i, Measure::Q);
        double acc = 0.0;
        for (int k = 0; k < n; ++k) acc += step_outflow_pv(sched, w, k);
        return acc + sched.disc_rmu[n] * w.y[n];
    });
    BudgetReport rep;
    rep.lhs = mean;
    rep.rhs = ctx.p->x0 + sched.g[0];
    rep.gap = mean - rep.rhs;
    rep.std_error = se;
    return rep;
}

std::vector<MartingaleCheckpoint> martingale_identity_check(const StrategyContext& ctx,
                                                            const Schedule& sched,
                                                            std::size_t n_paths, std::uint64_t seed,
                                                            int threads) {
    const int n = sched.grid.n_steps;
    std::vector<int> marks;
    for (int m : {n / 4, n / 2, 3 * n / 4, n})
        if (marks.empty() || m > marks.back()) marks.push_back(m);
    std::vector<std::vector<double>> samples(marks.size(), std::vector<double>(n_paths));

    parallel_for(n_paths, threads, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            WealthPath w = simulate_wealth_path(ctx, sched, seed, i, Measure::Q);
            double acc = 0.0;
            std::size_t mi = 0;
            for (int k = 0; k <= n; ++k) {
                while (mi < marks.size() && marks[mi] == k) {
                    samples[mi][i] = acc + sched.disc_rmu[k] * (w.y[k] - sched.g[k]);
                    ++mi;
                }
                if (k < n) {
                    acc += step_outflow_pv(sched, w, k);
                    // income leg, deterministic within the step
                    acc -= simpson_step(
                        [&](double u) {
                            double frac = (u - sched.t[k]) / sched.grid.dt;
                            double d = sched.disc_rmu[k] *
                                       std::pow(sched.disc_rmu[k + 1] / sched.disc_rmu[k], frac);
                            return d * ctx.inc->ell.at_time(u);
                        },
                        sched.t[k], sched.t[k + 1]);
                }
            }
        }
    });

    std::vector<MartingaleCheckpoint> out;
    const double x0 = ctx.p->x0;
    for (std::size_t m = 0; m < marks.size(); ++m) {
        double mean = 0.0;
        for (double v : samples[m]) mean += v;
        mean /= static_cast<double>(n_paths);
        double ss = 0.0;
        for (double v : samples[m]) ss += (v - mean) * (v - mean);
        double se = std::sqrt(ss / (static_cast<double>(n_paths) - 1.0) / static_cast<double>(n_paths));
        MartingaleCheckpoint cp;
        cp.t = sched.t[marks[m]];
        cp.mean = mean;
        cp.std_error = se;
        cp.z_score = (se > 0.0) ? (mean - x0) / se : ((mean == x0) ? 0.0 : INFINITY);
        out.push_back(cp);
    }
    return out;
}

PrimalEstimate primal_objective(const StrategyContext& ctx, const Schedule& sched,
                                std::size_t n_paths, std::uint64_t seed, int threads) {
    const int n = sched.grid.n_steps;
    const double kappa = ctx.pref->kappa;
    const double delta = ctx.pref->delta;
    const double dt = sched.grid.dt;
    auto util = [&](double t, double x) { return std::exp(-kappa * t) * std::pow(x, delta) / delta; };

    auto [mean, se] = mc_mean_se(n_paths, threads, [&](std::size_t i) {
        WealthPath w = simulate_wealth_path(ctx, sched, seed, i, Measure::P);
        double acc = 0.0;
        double f_prev = sched.disc_rhomu[0] * (1.0 + sched.mu[0]) * util(0.0, w.c[0]);
        for (int k = 1; k <= n; ++k) {
            double f_k = sched.disc_rhomu[k] * (1.0 + sched.mu[k]) * util(sched.t[k], w.c[k]);
            acc += 0.5 * (f_prev + f_k) * dt;
            f_prev = f_k;
        }
        return acc + sched.disc_rhomu[n] * util(sched.t[n], w.y[n]); // X(T) = Y(T), g(T)=0
    });
    return PrimalEstimate{mean, se};
}

} // namespace jdlife
