#include "jdlife/dual.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "jdlife/measure.hpp"
#include "jdlife/parallel.hpp"
#include "jdlife/quadrature.hpp"
#include "jdlife/rng.hpp"

namespace jdlife {

double PowerUtility::u(double t, double x) const {
    if (x < 0.0) return -INFINITY;
    if (x == 0.0) return (delta > 0.0) ? 0.0 : -INFINITY;
    return std::exp(-kappa * t) * std::pow(x, delta) / delta;
}

double PowerUtility::marginal_inverse(double t, double y) const {
    return std::exp(-kappa / (1.0 - delta) * t) * std::pow(y, -1.0 / (1.0 - delta));
}

double PowerUtility::dual_transform(double t, double y) const {
    return (1.0 - delta) / delta * std::exp(-kappa / (1.0 - delta) * t) *
           std::pow(y, -delta / (1.0 - delta));
}

namespace {

struct KCoeffs {
    double lam = 0.0;       // lambda(t)
    double eh = 1.0;        // exp(h)
    double a = 0.0;         // delta/(1-delta)
    double lin = 0.0;       // coefficient of psi from the h_z and (r-alpha) parts
    double quad = 0.0;      // coefficient of psi^2
};

KCoeffs k_coeffs(const MarketParams& p, const PreferenceSpec& pref, double t, double z,
                 double h, double h_z) {
    KCoeffs c;
    double d = pref.delta;
    double one_md = 1.0 - d;
    c.a = d / one_md;
    c.lam = p.lambda.at_time(t);
    c.eh = std::exp(h);
    double be = p.beta(t, z), sg = p.sigma(t, z), ga = p.gamma(t, z);
    double denom = be * be + sg * sg;
    if (denom <= 0.0) throw std::domain_error("jump_penalty: beta^2+sigma^2 = 0");
    double r = p.r.at_time(t), al = p.alpha(t, z);
    c.quad = d * ga * ga * c.lam * c.lam / (2.0 * one_md * one_md * denom);
    c.lin = -d * (r - al) * ga * c.lam / (one_md * one_md * denom)
            - d * be * ga * c.lam / (one_md * denom) * h_z;
    return c;
}

double k_eval(const KCoeffs& c, double psi) {
    return (std::pow(psi, -c.a) + c.a * psi) * c.lam * c.eh + c.lin * psi + c.quad * psi * psi;
}

double k_deriv(const KCoeffs& c, double psi) {
    return c.a * (1.0 - std::pow(psi, -c.a - 1.0)) * c.lam * c.eh + c.lin + 2.0 * c.quad * psi;
}

double k_second(const KCoeffs& c, double psi) {
    return c.a * (c.a + 1.0) * std::pow(psi, -c.a - 2.0) * c.lam * c.eh + 2.0 * c.quad;
}

} // namespace

double jump_penalty(const MarketParams& p, const PreferenceSpec& pref, double t, double z,
                    double h, double h_z, double psi) {
    if (!(psi > 0.0)) throw std::domain_error("jump_penalty: psi must be positive");
    if (!std::isfinite(h) || !std::isfinite(h_z))
        throw std::domain_error("jump_penalty: non-finite h or h_z");
    return k_eval(k_coeffs(p, pref, t, z, h, h_z), psi);
}

PsiOpt minimize_psi(const MarketParams& p, const PreferenceSpec& pref, double t, double z,
                    double h, double h_z, const PsiBounds& bounds) {
    KCoeffs c = k_coeffs(p, pref, t, z, h, h_z);
    if (c.lam == 0.0) return PsiOpt{1.0, false}; // psi unidentifiable without jumps

    // delta<0 makes K concave; maximize by negating.
    const double sign = (pref.delta > 0.0) ? 1.0 : -1.0;
    if (sign < 0.0) {
        // sanity scan: second differences should be negative before trusting the flip
        double ps[3] = {std::max(bounds.lo, 0.5), 1.0, std::min(bounds.hi, 2.0)};
        double d2 = k_eval(c, ps[0]) - 2.0 * k_eval(c, ps[1]) + k_eval(c, ps[2]);
        if (d2 > 1e-9 * (std::fabs(k_eval(c, ps[1])) + 1.0))
            throw std::runtime_error("minimize_psi: objective not concave for delta<0");
    }
    auto f = [&](double psi) { return sign * k_eval(c, psi); };

    double lo = bounds.lo, hi = bounds.hi;
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - gr * (hi - lo);
    double x2 = lo + gr * (hi - lo);
    double f1 = f(x1), f2 = f(x2);
    if (!std::isfinite(f1) || !std::isfinite(f2))
        throw std::runtime_error("minimize_psi: non-finite objective in search interval");
    while (hi - lo > 1e-10 * std::max(1.0, hi)) {
        if (f1 < f2) {
            hi = x2; x2 = x1; f2 = f1;
            x1 = hi - gr * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1; x1 = x2; f1 = f2;
            x2 = lo + gr * (hi - lo);
            f2 = f(x2);
        }
    }
    double psi = 0.5 * (lo + hi);
    for (int it = 0; it < 4; ++it) {
        double d1 = k_deriv(c, psi), d2 = k_second(c, psi);
        if (d2 == 0.0 || !std::isfinite(d1) || !std::isfinite(d2)) break;
        double next = psi - d1 / d2;
        if (!(next > bounds.lo && next < bounds.hi)) break;
        psi = next;
    }
    PsiOpt out;
    out.psi = std::clamp(psi, bounds.lo, bounds.hi);
    double width = bounds.hi - bounds.lo;
    out.at_boundary = (out.psi - bounds.lo < 1e-9 * width) || (bounds.hi - out.psi < 1e-9 * width);
    return out;
}

double effective_rate(const MarketParams& p, const PreferenceSpec& pref, double t, double z,
                      double psi) {
    if (!(psi > 0.0)) throw std::domain_error("effective_rate: psi must be positive");
    double d = pref.delta, one_md = 1.0 - d;
    RiskPrices rp = risk_prices(p, t, z, psi);
    double lam = p.lambda.at_time(t);
    double jump = std::pow(psi, -d / one_md) - 1.0 + d / one_md * (psi - 1.0);
    return pref.rho.at_time(t) / one_md - d * p.r.at_time(t) / one_md -
           d * (rp.nu * rp.nu + rp.theta * rp.theta) / (2.0 * one_md * one_md) - jump * lam;
}

// ---------------------------------------------------------------------------
// PDE sweep

namespace {

// Tridiagonal solve, Thomas algorithm; destroys inputs.
void thomas_solve(std::vector<double>& a, std::vector<double>& b, std::vector<double>& c,
                  std::vector<double>& d, std::vector<double>& x) {
    const std::size_t n = b.size();
    for (std::size_t i = 1; i < n; ++i) {
        double w = a[i] / b[i - 1];
        b[i] -= w * c[i - 1];
        d[i] -= w * d[i - 1];
    }
    x[n - 1] = d[n - 1] / b[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) {
        x[i] = (d[i] - c[i] * x[i + 1]) / b[i];
    }
}

} // namespace

namespace {

// Rows of the operator L h = 0.5 h_zz + drift h_z with reflected (h_z = 0)
// edges; apply() evaluates it explicitly, matrix() assembles I - w*dt*L.
struct ZOperator {
    double dz = 0.0;
    std::vector<double> drift;

    void apply(const std::vector<double>& h, std::vector<double>& out) const {
        const std::size_t nc = h.size();
        double inv2 = 1.0 / (dz * dz);
        out[0] = (h[1] - h[0]) * inv2;
        out[nc - 1] = (h[nc - 2] - h[nc - 1]) * inv2;
        for (std::size_t j = 1; j + 1 < nc; ++j) {
            out[j] = 0.5 * (h[j + 1] - 2.0 * h[j] + h[j - 1]) * inv2 +
                     drift[j] * (h[j + 1] - h[j - 1]) / (2.0 * dz);
        }
    }

    void matrix(double wdt, std::vector<double>& sub, std::vector<double>& diag,
                std::vector<double>& sup) const {
        const std::size_t nc = drift.size();
        double lam = wdt * 0.5 / (dz * dz);
        for (std::size_t j = 0; j < nc; ++j) {
            if (j == 0) {
                sub[j] = 0.0;
                diag[j] = 1.0 + 2.0 * lam;
                sup[j] = -2.0 * lam;
            } else if (j + 1 == nc) {
                sub[j] = -2.0 * lam;
                diag[j] = 1.0 + 2.0 * lam;
                sup[j] = 0.0;
            } else {
                double adv = wdt * drift[j] / (2.0 * dz);
                sub[j] = -lam + adv;
                diag[j] = 1.0 + 2.0 * lam;
                sup[j] = -lam - adv;
            }
        }
    }
};

} // namespace

DualGrid solve_pde(const MarketParams& p, const PreferenceSpec& pref, const MortalityCurve& m,
                   const PdeOptions& opt) {
    const int nt = opt.t_steps, nz = opt.z_steps;
    if (nt < 1 || nz < 2) throw std::invalid_argument("solve_pde: need t_steps>=1, z_steps>=2");
    const double T = m.T;
    const double width = (opt.z_width > 0.0) ? opt.z_width : 6.0 * std::sqrt(T);
    const double d = pref.delta, one_md = 1.0 - d;
    const double dratio = d / one_md;
    const double kap_term = pref.kappa / one_md;

    DualGrid g;
    g.t_nodes.resize(nt + 1);
    g.z_nodes.resize(nz + 1);
    for (int k = 0; k <= nt; ++k) g.t_nodes[k] = T * k / nt;
    for (int j = 0; j <= nz; ++j) g.z_nodes[j] = p.z0 - width + 2.0 * width * j / nz;
    const double dt = T / nt;
    const double dz = 2.0 * width / nz;
    const std::size_t cols = g.z_nodes.size();
    g.h.assign((nt + 1) * cols, 0.0);
    g.psi_hat.assign((nt + 1) * cols, 1.0);

    // per-level working state; "prev" is the already-computed later level
    std::vector<double> h_prev(cols), h_pred(cols), h_next(cols);
    std::vector<double> hz(cols), psi_row(cols), rate(cols);
    std::vector<double> L_prev(cols), L_scratch(cols);
    std::vector<double> rate_prev(cols), N_prev(cols), N_pred(cols);
    std::vector<double> sub(cols), diag(cols), sup(cols), rhs(cols);
    ZOperator op_prev{dz, std::vector<double>(cols)}, op_cur{dz, std::vector<double>(cols)};
    bool boundary_hit = false;

    auto central_hz = [&](const std::vector<double>& h, std::vector<double>& out) {
        out[0] = 0.0;
        out[cols - 1] = 0.0;
        for (std::size_t j = 1; j + 1 < cols; ++j) out[j] = (h[j + 1] - h[j - 1]) / (2.0 * dz);
    };
    // pointwise optimizer + coefficient rows at time t, gradient state (h, hz)
    auto fit_level = [&](double t, const std::vector<double>& h, const std::vector<double>& hzv,
                         std::vector<double>& psi_out, ZOperator& op, std::vector<double>& rate_out) {
        double mu = m.mu.at_time(t);
        parallel_for(cols, opt.threads, [&](std::size_t lo, std::size_t hi) {
            for (std::size_t j = lo; j < hi; ++j) {
                double z = g.z_nodes[j];
                PsiOpt po = minimize_psi(p, pref, t, z, h[j], hzv[j], opt.bounds);
                psi_out[j] = po.psi;
                RiskPrices rp = risk_prices(p, t, z, po.psi);
                op.drift[j] = p.eta(t, z) - dratio * rp.nu;
                rate_out[j] = effective_rate(p, pref, t, z, po.psi) + mu + kap_term;
            }
        });
        for (std::size_t j = 0; j < cols; ++j)
            if (psi_out[j] <= opt.bounds.lo * (1.0 + 1e-9) ||
                psi_out[j] >= opt.bounds.hi * (1.0 - 1e-9))
                boundary_hit = true;
    };
    auto nonlinear = [&](double t, const std::vector<double>& h, const std::vector<double>& hzv,
                         std::vector<double>& out) {
        double one_plus_mu = 1.0 + m.mu.at_time(t);
        for (std::size_t j = 0; j < cols; ++j)
            out[j] = 0.5 * hzv[j] * hzv[j] + one_plus_mu * std::exp(h[j]);
    };

    // terminal level
    {
        std::fill(h_prev.begin(), h_prev.end(), 0.0);
        std::fill(hz.begin(), hz.end(), 0.0);
        fit_level(T, h_prev, hz, psi_row, op_prev, rate_prev);
        nonlinear(T, h_prev, hz, N_prev);
        std::size_t row = static_cast<std::size_t>(nt) * cols;
        for (std::size_t j = 0; j < cols; ++j) g.psi_hat[row + j] = psi_row[j];
    }

    for (int k = nt - 1; k >= 0; --k) {
        const double t = g.t_nodes[k];

        // predictor: implicit linear part at t, nonlinear terms frozen at k+1
        central_hz(h_prev, hz);
        fit_level(t, h_prev, hz, psi_row, op_cur, rate);
        for (std::size_t j = 0; j < cols; ++j) rhs[j] = h_prev[j] + dt * (rate[j] - N_prev[j]);
        op_cur.matrix(dt, sub, diag, sup);
        thomas_solve(sub, diag, sup, rhs, h_pred);

        // corrector: trapezoidal weights on both the linear and nonlinear parts
        central_hz(h_pred, hz);
        fit_level(t, h_pred, hz, psi_row, op_cur, rate);
        nonlinear(t, h_pred, hz, N_pred);
        op_prev.apply(h_prev, L_prev);
        for (std::size_t j = 0; j < cols; ++j) {
            rhs[j] = h_prev[j] + 0.5 * dt * (L_prev[j] + rate[j] + rate_prev[j] - N_pred[j] - N_prev[j]);
        }
        op_cur.matrix(0.5 * dt, sub, diag, sup);
        thomas_solve(sub, diag, sup, rhs, h_next);

        double h_max = 0.0;
        for (double v : h_next) h_max = std::max(h_max, std::fabs(v));
        if (!std::isfinite(h_max) || h_max > 1e6) {
            std::ostringstream ss;
            ss << "solve_pde: sweep diverged at time level " << k << " (t=" << t << ")";
            throw std::runtime_error(ss.str());
        }

        std::size_t row = static_cast<std::size_t>(k) * cols;
        for (std::size_t j = 0; j < cols; ++j) {
            g.h[row + j] = h_next[j];
            g.psi_hat[row + j] = psi_row[j];
        }

        // roll the level state
        h_prev = h_next;
        central_hz(h_prev, hz);
        nonlinear(t, h_prev, hz, N_prev);
        std::swap(op_prev.drift, op_cur.drift);
        rate_prev = rate;
    }
    g.any_psi_boundary_hit = boundary_hit;
    return g;
}

namespace {
double interp_field(const std::vector<double>& ts, const std::vector<double>& zs,
                    const std::vector<double>& v, double t, double z) {
    auto bracket = [](const std::vector<double>& axis, double x) {
        auto it = std::upper_bound(axis.begin(), axis.end(), x);
        std::size_t i = (it == axis.begin()) ? 0 : static_cast<std::size_t>(it - axis.begin()) - 1;
        return std::min(i, axis.size() - 2);
    };
    std::size_t i = bracket(ts, t), j = bracket(zs, z);
    double wt = std::clamp((t - ts[i]) / (ts[i + 1] - ts[i]), 0.0, 1.0);
    double wz = std::clamp((z - zs[j]) / (zs[j + 1] - zs[j]), 0.0, 1.0);
    std::size_t nzc = zs.size();
    double v00 = v[i * nzc + j], v01 = v[i * nzc + j + 1];
    double v10 = v[(i + 1) * nzc + j], v11 = v[(i + 1) * nzc + j + 1];
    return (1 - wt) * ((1 - wz) * v00 + wz * v01) + wt * ((1 - wz) * v10 + wz * v11);
}
} // namespace

double DualGrid::interp_h(double t, double z) const { return interp_field(t_nodes, z_nodes, h, t, z); }
double DualGrid::interp_psi(double t, double z) const { return interp_field(t_nodes, z_nodes, psi_hat, t, z); }
double DualGrid::annuity(double t, double z) const { return std::exp(-interp_h(t, z)); }

McEstimate mc_dual_value(const MarketParams& p, const PreferenceSpec& pref, const MortalityCurve& m,
                         const PsiPolicy& policy, const TimeGrid& grid, std::size_t n_paths,
                         std::uint64_t seed, int threads) {
    const int n = grid.n_steps;
    const double dt = grid.dt;
    const double kap = pref.kappa / (1.0 - pref.delta);
    std::vector<double> per_path(n_paths);

    parallel_for(n_paths, threads, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t ipath = lo; ipath < hi; ++ipath) {
            PathBundle b = simulate_factor(p, grid, seed, ipath, Measure::Qtilde, &policy, pref.delta);
            double disc = 0.0;     // int (rtilde + mu) along the path, trapezoid in the rate
            double value = 0.0;
            double rate_prev = effective_rate(p, pref, 0.0, b.z[0], policy(0.0, b.z[0])) +
                               m.mu.at_time(0.0);
            double w_prev = 1.0 + m.mu.at_time(0.0); // integrand weight at t=0
            for (int k = 1; k <= n; ++k) {
                double t = grid.node(k);
                double rate_k = effective_rate(p, pref, t, b.z[k], policy(t, b.z[k])) + m.mu.at_time(t);
                disc += 0.5 * (rate_prev + rate_k) * dt;
                rate_prev = rate_k;
                double w_k = (1.0 + m.mu.at_time(t)) * std::exp(-disc - kap * t);
                value += 0.5 * (w_prev + w_k) * dt;
                w_prev = w_k;
            }
            value += std::exp(-disc - kap * grid.T);
            per_path[ipath] = value;
        }
    });

    double mean = 0.0;
    for (double v : per_path) mean += v;
    mean /= static_cast<double>(n_paths);
    double ss = 0.0;
    for (double v : per_path) ss += (v - mean) * (v - mean);
    McEstimate out;
    out.mean = mean;
    out.std_error = (n_paths > 1)
        ? std::sqrt(ss / (static_cast<double>(n_paths) - 1.0) / static_cast<double>(n_paths))
        : 0.0;
    return out;
}

ZetaResult optimal_zeta(double x0, double g0, double annuity0, double delta) {
    double y0 = x0 + g0;
    if (!(y0 > 0.0)) throw std::domain_error("optimal_zeta: x0 + g(0) must be positive");
    if (!(annuity0 > 0.0)) throw std::domain_error("optimal_zeta: annuity must be positive");
    ZetaResult out;
    out.zeta_hat = std::pow(y0 / annuity0, delta - 1.0);
    out.dual_value = std::pow(y0, delta) * std::pow(annuity0, 1.0 - delta) / delta;
    return out;
}

double dual_functional(double zeta, double annuity, double y0, double delta) {
    return (1.0 - delta) / delta * std::pow(zeta, -delta / (1.0 - delta)) * annuity + zeta * y0;
}

DualSolution make_dual_solution(const MarketParams& p, const PreferenceSpec& pref,
                                const MortalityCurve& m, const IncomeSpec& inc, DualGrid grid) {
    DualSolution sol;
    sol.grid = std::move(grid);
    sol.annuity0 = sol.grid.annuity(0.0, p.z0);
    sol.annuity_t.resize(sol.grid.t_nodes.size());
    for (std::size_t k = 0; k < sol.grid.t_nodes.size(); ++k)
        sol.annuity_t[k] = sol.grid.annuity(sol.grid.t_nodes[k], p.z0);
    double g0 = human_capital(p, m, inc, 0.0);
    ZetaResult zr = optimal_zeta(p.x0, g0, sol.annuity0, pref.delta);
    sol.zeta_hat = zr.zeta_hat;
    sol.dual_value = zr.dual_value;
    return sol;
}

} // namespace jdlife
