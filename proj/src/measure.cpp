#include "jdlife/measure.hpp"

#include <cmath>
#include <stdexcept>

#include "jdlife/quadrature.hpp"

namespace jdlife {

RiskPrices risk_prices(double r, double alpha, double beta, double sigma, double gamma,
                       double lambda, double psi) {
    double denom = beta * beta + sigma * sigma;
    if (denom <= 0.0) throw std::domain_error("risk_prices: beta^2+sigma^2 = 0 (singular market)");
    double excess = r - alpha - gamma * psi * lambda;
    return RiskPrices{beta / denom * excess, sigma / denom * excess};
}

RiskPrices risk_prices(const MarketParams& p, double t, double z, double psi) {
    return risk_prices(p.r.at_time(t), p.alpha(t, z), p.beta(t, z), p.sigma(t, z), p.gamma(t, z),
                       p.lambda.at_time(t), psi);
}

double excess_return_identity(const MarketParams& p, double t, double z, double psi) {
    RiskPrices rp = risk_prices(p, t, z, psi);
    double lam = p.lambda.at_time(t);
    return (p.alpha(t, z) - p.r.at_time(t)) + p.beta(t, z) * rp.nu + p.sigma(t, z) * rp.theta +
           p.gamma(t, z) * psi * lam;
}

std::vector<double> radon_nikodym_path(const MarketParams& p, const PathBundle& b,
                                       std::span<const double> psi_path) {
    const int n = b.grid.n_steps;
    if (static_cast<int>(psi_path.size()) != n)
        throw std::invalid_argument("radon_nikodym_path: psi path length mismatch");
    std::vector<double> lambda(n + 1);
    lambda[0] = 1.0;
    double log_l = 0.0;
    const double dt = b.grid.dt;
    for (int k = 0; k < n; ++k) {
        double t = b.grid.node(k);
        double psi = psi_path[k];
        if (!(psi > 0.0)) throw std::runtime_error("radon_nikodym_path: psi <= 0 at a node");
        double lam = p.lambda.at_time(t);
        RiskPrices rp = risk_prices(p, t, b.z[k], psi);
        log_l += ((1.0 - psi) * lam - 0.5 * rp.theta * rp.theta - 0.5 * rp.nu * rp.nu) * dt +
                 rp.nu * b.w1[k] + rp.theta * b.w2[k];
        if (b.n_jumps[k] > 0) log_l += b.n_jumps[k] * std::log(psi); // psi at the step's left endpoint
        lambda[k + 1] = std::exp(log_l);
    }
    return lambda;
}

DeflatorPath deflator_path(const MarketParams& p, const PreferenceSpec& pref,
                           const PathBundle& b, std::span<const double> psi_path) {
    DeflatorPath out;
    out.lambda_path = radon_nikodym_path(p, b, psi_path);
    out.psi_path.assign(psi_path.begin(), psi_path.end());
    const int n = b.grid.n_steps;
    out.gamma_path.resize(n + 1);
    out.gamma_path[0] = 1.0;
    double accum = 0.0; // int (rho - r)
    for (int k = 0; k < n; ++k) {
        accum += simpson_step([&](double u) { return pref.rho.at_time(u) - p.r.at_time(u); },
                              b.grid.node(k), b.grid.node(k + 1));
        out.gamma_path[k + 1] = out.lambda_path[k + 1] * std::exp(accum);
    }
    return out;
}

std::vector<double> stateprice_euler_residuals(const MarketParams& p, const PreferenceSpec& pref,
                                               const PathBundle& b,
                                               std::span<const double> psi_path) {
    DeflatorPath closed = deflator_path(p, pref, b, psi_path);
    const int n = b.grid.n_steps;
    const double dt = b.grid.dt;
    std::vector<double> res(n);
    double gamma_e = 1.0;
    for (int k = 0; k < n; ++k) {
        double t = b.grid.node(k);
        double lam = p.lambda.at_time(t);
        double psi = psi_path[k];
        RiskPrices rp = risk_prices(p, t, b.z[k], psi);
        double dn_tilde = static_cast<double>(b.n_jumps[k]) - lam * dt;
        gamma_e *= 1.0 + (pref.rho.at_time(t) - p.r.at_time(t)) * dt + rp.nu * b.w1[k] +
                   rp.theta * b.w2[k] + (psi - 1.0) * dn_tilde;
        res[k] = gamma_e - closed.gamma_path[k + 1];
    }
    return res;
}

MartingaleStats martingale_check(std::span<const double> samples) {
    if (samples.size() < 2) throw std::invalid_argument("martingale_check: need at least 2 samples");
    double n = static_cast<double>(samples.size());
    double mean = 0.0;
    for (double v : samples) mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : samples) ss += (v - mean) * (v - mean);
    double se = std::sqrt(ss / (n - 1.0) / n);
    MartingaleStats st;
    st.mean = mean;
    st.std_error = se;
    st.z_score = (se > 0.0) ? (mean - 1.0) / se : ((mean == 1.0) ? 0.0 : INFINITY);
    return st;
}

} // namespace jdlife
