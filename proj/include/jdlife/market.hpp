#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "jdlife/coefficients.hpp"

namespace jdlife {

struct TimeGrid {
    double T = 0.0;
    int n_steps = 0;
    double dt = 0.0;

    static TimeGrid make(double horizon, int steps);
    double node(int k) const { return (k == n_steps) ? T : k * dt; }
};

struct MarketParams {
    ScalarField r;                       // risk-free rate, of t
    ScalarField alpha, beta, sigma, gamma; // asset coefficients, of (t,z)
    ScalarField eta;                     // factor drift, of z
    ScalarField lambda;                  // jump intensity, of t
    double corr_w1w2 = 0.0;
    double s0 = 1.0;
    double z0 = 0.0;
    double x0 = 1.0;
    double growth_bound_K = 10.0;        // the constant in the linear-growth bound
};

struct MortalityCurve {
    ScalarField mu;
    double T = 0.0;
};

struct IncomeSpec {
    ScalarField ell;
};

struct PreferenceSpec {
    ScalarField rho;
    double kappa = 0.0;
    double delta = 0.5; // CRRA exponent, in (-inf,1)\{0}
};

enum class Measure { P, Q, Qtilde };

// Jump-measure policy psi(t,z); constant or a solved grid wrapped by the caller.
struct PsiPolicy {
    virtual ~PsiPolicy() = default;
    virtual double operator()(double t, double z) const = 0;
};

struct ConstantPsi final : PsiPolicy {
    double value;
    explicit ConstantPsi(double v) : value(v) {}
    double operator()(double, double) const override { return value; }
};

// One simulated path: increments of the labeled measure's Brownian motions,
// jump counts per step, and the factor/asset levels per node. For Q/Qtilde
// bundles the Girsanov drifts used at each left node are recorded.
struct PathBundle {
    TimeGrid grid;
    Measure measure_tag = Measure::P;
    std::vector<double> w1, w2;   // n_steps increments
    std::vector<long> n_jumps;    // n_steps counts
    std::vector<double> z;        // n_steps+1 levels
    std::vector<double> s;        // n_steps+1 levels (filled by simulate_asset)
    std::vector<double> nu, theta, psi; // n_steps left-node values (empty under P)
};

std::vector<std::string> validate_params(const MarketParams& p, const MortalityCurve& m,
                                         const IncomeSpec& inc, const PreferenceSpec& pref,
                                         const TimeGrid& grid, double z_lo, double z_hi,
                                         int z_scan_points = 41);

// Draws the Brownian increments and jump counts for one path and integrates
// the factor SDE under the requested measure. Q and Qtilde need a psi policy;
// Qtilde additionally needs delta (its drift is eta - delta/(1-delta)*nu and
// its jump intensity psi^{-delta/(1-delta)}*lambda).
PathBundle simulate_factor(const MarketParams& p, const TimeGrid& grid,
                           std::uint64_t seed, std::uint64_t path_index, Measure mode,
                           const PsiPolicy* policy = nullptr, double delta = 0.0);

// Multiplicative scheme for the asset: log-Euler diffusion step, exact
// (1+gamma)^jumps factor. Under Q bundles the Girsanov drift adjustment
// beta*nu + sigma*theta is applied so the increments stay those of the
// bundle's measure.
void simulate_asset(const MarketParams& p, PathBundle& bundle);

double survival_prob(const MortalityCurve& m, double t);
double death_density(const MortalityCurve& m, double t);
double human_capital(const MarketParams& p, const MortalityCurve& m, const IncomeSpec& inc, double t);

} // namespace jdlife
