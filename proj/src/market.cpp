#include "jdlife/market.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "jdlife/measure.hpp"
#include "jdlife/quadrature.hpp"
#include "jdlife/rng.hpp"

namespace jdlife {

TimeGrid TimeGrid::make(double horizon, int steps) {
    if (horizon <= 0.0 || steps <= 0) throw std::invalid_argument("TimeGrid: need T > 0 and steps > 0");
    TimeGrid g;
    g.T = horizon;
    g.n_steps = steps;
    g.dt = horizon / steps;
    return g;
}

std::vector<std::string> validate_params(const MarketParams& p, const MortalityCurve& m,
                                         const IncomeSpec& inc, const PreferenceSpec& pref,
                                         const TimeGrid& grid, double z_lo, double z_hi,
                                         int z_scan_points) {
    std::vector<std::string> out;
    auto fail = [&out](double t, double z, const std::string& what) {
        std::ostringstream ss;
        ss << what << " at (t=" << t << ", z=" << z << ")";
        out.push_back(ss.str());
    };

    if (!(p.corr_w1w2 > -1.0 && p.corr_w1w2 < 1.0)) out.push_back("corr_w1w2 outside (-1,1)");
    if (!(p.s0 > 0.0)) out.push_back("s0 must be positive");
    if (!(p.x0 > 0.0)) out.push_back("x0 must be positive");
    if (pref.delta == 0.0 || pref.delta >= 1.0) out.push_back("delta must lie in (-inf,1) excluding 0");

    const double K = p.growth_bound_K;
    int nz = std::max(2, z_scan_points);
    for (int k = 0; k <= grid.n_steps; ++k) {
        double t = grid.node(k);
        if (p.lambda.at_time(t) < 0.0) fail(t, 0.0, "lambda < 0");
        if (m.mu.at_time(t) < 0.0) fail(t, 0.0, "mu < 0");
        if (inc.ell.at_time(t) < 0.0) fail(t, 0.0, "ell < 0");
        for (int j = 0; j < nz; ++j) {
            double z = z_lo + (z_hi - z_lo) * j / (nz - 1);
            double a = p.alpha(t, z), b = p.beta(t, z), s = p.sigma(t, z), g = p.gamma(t, z);
            if (!(g > -1.0)) fail(t, z, "gamma <= -1");
            if (std::fabs(a) + std::fabs(b) > K) fail(t, z, "|alpha|+|beta| exceeds growth bound");
            if (std::fabs(s) > K * (1.0 + std::fabs(z))) fail(t, z, "|sigma| exceeds linear growth bound");
            if (b * b + s * s <= 0.0) fail(t, z, "beta^2+sigma^2 = 0");
            if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(s) || !std::isfinite(g))
                fail(t, z, "non-finite coefficient");
        }
    }
    return out;
}

PathBundle simulate_factor(const MarketParams& p, const TimeGrid& grid,
                           std::uint64_t seed, std::uint64_t path_index, Measure mode,
                           const PsiPolicy* policy, double delta) {
    if (mode != Measure::P && policy == nullptr)
        throw std::invalid_argument("simulate_factor: Q/Qtilde modes need a psi policy");
    const double dratio = delta / (1.0 - delta);

    PathBundle b;
    b.grid = grid;
    b.measure_tag = mode;
    const int n = grid.n_steps;
    b.w1.resize(n);
    b.w2.resize(n);
    b.n_jumps.resize(n);
    b.z.resize(n + 1);
    if (mode != Measure::P) {
        b.nu.resize(n);
        b.theta.resize(n);
        b.psi.resize(n);
    }

    Philox4x32 rng(seed, path_index);
    const double rho = p.corr_w1w2;
    const double rho_c = std::sqrt(1.0 - rho * rho);
    const double sqdt = std::sqrt(grid.dt);

    b.z[0] = p.z0;
    for (int k = 0; k < n; ++k) {
        double t = grid.node(k);
        double zk = b.z[k];
        double g1 = rng.normal();
        double g2 = rng.normal();
        b.w1[k] = sqdt * g1;
        b.w2[k] = sqdt * (rho * g1 + rho_c * g2);

        double lam = p.lambda.at_time(t);
        double drift = p.eta(t, zk);
        double jump_intensity = lam;
        if (mode != Measure::P) {
            double psi = (*policy)(t, zk);
            if (!(psi > 0.0)) throw std::runtime_error("simulate_factor: psi <= 0 along path");
            RiskPrices rp = risk_prices(p, t, zk, psi);
            b.nu[k] = rp.nu;
            b.theta[k] = rp.theta;
            b.psi[k] = psi;
            if (mode == Measure::Q) {
                drift += rp.nu;
                jump_intensity = psi * lam;
            } else { // Qtilde
                drift -= dratio * rp.nu;
                jump_intensity = std::pow(psi, -dratio) * lam;
            }
        }
        if (!std::isfinite(drift)) {
            std::ostringstream ss;
            ss << "simulate_factor: non-finite drift at node " << k << " (t=" << t << ", z=" << zk << ")";
            throw std::runtime_error(ss.str());
        }
        b.n_jumps[k] = rng.poisson(jump_intensity * grid.dt);
        b.z[k + 1] = zk + drift * grid.dt + b.w1[k];
    }
    return b;
}

void simulate_asset(const MarketParams& p, PathBundle& b) {
    const int n = b.grid.n_steps;
    const double dt = b.grid.dt;
    b.s.assign(n + 1, 0.0);
    b.s[0] = p.s0;
    double log_s = std::log(p.s0);
    for (int k = 0; k < n; ++k) {
        double t = b.grid.node(k);
        double z = b.z[k];
        double a = p.alpha(t, z), be = p.beta(t, z), sg = p.sigma(t, z), ga = p.gamma(t, z);
        if (!(ga > -1.0)) throw std::runtime_error("simulate_asset: gamma <= -1 along path");
        double drift = a;
        if (b.measure_tag == Measure::Q) drift += be * b.nu[k] + sg * b.theta[k];
        // Ito compensator for the correlated diffusion pair
        double var = be * be + sg * sg + 2.0 * p.corr_w1w2 * be * sg;
        double incr = (drift - 0.5 * var) * dt + be * b.w1[k] + sg * b.w2[k];
        if (!std::isfinite(incr)) throw std::runtime_error("simulate_asset: non-finite increment");
        log_s += incr;
        double s_next = std::exp(log_s);
        if (b.n_jumps[k] > 0) {
            s_next *= std::pow(1.0 + ga, static_cast<double>(b.n_jumps[k]));
            log_s = std::log(s_next);
        }
        b.s[k + 1] = s_next;
    }
}

double survival_prob(const MortalityCurve& m, double t) {
    if (t < 0.0 || t > m.T) throw std::domain_error("survival_prob: t outside [0,T]");
    if (t == 0.0) return 1.0;
    double integral = integrate([&](double s) { return m.mu.at_time(s); }, 0.0, t, 1e-12);
    return std::exp(-integral);
}

double death_density(const MortalityCurve& m, double t) {
    return m.mu.at_time(t) * survival_prob(m, t);
}

double human_capital(const MarketParams& p, const MortalityCurve& m, const IncomeSpec& inc, double t) {
    if (t < 0.0 || t > m.T) throw std::domain_error("human_capital: t outside [0,T]");
    if (t == m.T) return 0.0;
    auto discount_rate = [&](double u) { return p.r.at_time(u) + m.mu.at_time(u); };
    auto integrand = [&](double s) {
        double d = integrate(discount_rate, t, s, 1e-11);
        return std::exp(-d) * inc.ell.at_time(s);
    };
    return integrate(integrand, t, m.T, 1e-9);
}

} // namespace jdlife
