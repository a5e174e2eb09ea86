#pragma once

#include <span>
#include <vector>

#include "jdlife/market.hpp"

namespace jdlife {

struct RiskPrices {
    double nu = 0.0;
    double theta = 0.0;
};

// Market prices of risk for the jump-measure candidate psi:
//   nu    = beta /(beta^2+sigma^2) * (r - alpha - gamma*psi*lambda)
//   theta = sigma/(beta^2+sigma^2) * (r - alpha - gamma*psi*lambda)
RiskPrices risk_prices(double r, double alpha, double beta, double sigma, double gamma,
                       double lambda, double psi);
RiskPrices risk_prices(const MarketParams& p, double t, double z, double psi);

// (alpha-r) + beta*nu + sigma*theta + gamma*psi*lambda; zero by construction.
double excess_return_identity(const MarketParams& p, double t, double z, double psi);

struct DeflatorPath {
    std::vector<double> lambda_path; // Radon-Nikodym density per node
    std::vector<double> gamma_path;  // adjusted state-price deflator per node
    std::vector<double> psi_path;    // psi at each left node
};

// Density path of the measure change, accumulated in log space along a P
// bundle: d logLambda = ((1-psi)lambda - nu^2/2 - theta^2/2)dt
//                       + nu dW1 + theta dW2 + ln(psi) dN.
std::vector<double> radon_nikodym_path(const MarketParams& p, const PathBundle& bundle,
                                       std::span<const double> psi_path);

// Gamma = Lambda * exp(int (rho - r)); carries Lambda and psi along.
DeflatorPath deflator_path(const MarketParams& p, const PreferenceSpec& pref,
                           const PathBundle& bundle, std::span<const double> psi_path);

// Per-step gap between the Euler-integrated deflator SDE and the closed form.
std::vector<double> stateprice_euler_residuals(const MarketParams& p, const PreferenceSpec& pref,
                                               const PathBundle& bundle,
                                               std::span<const double> psi_path);

struct MartingaleStats {
    double mean = 0.0;
    double std_error = 0.0;
    double z_score = 0.0;
};

// Sample mean / SE / z-score of terminal density samples against 1.
MartingaleStats martingale_check(std::span<const double> terminal_samples);

} // namespace jdlife
