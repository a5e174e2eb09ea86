#pragma once

#include <cstdint>
#include <vector>

#include "jdlife/market.hpp"

namespace jdlife {

// CRRA utility family with discount factor exp(-kappa*t). Only the power
// branch is implemented; the interface is what downstream code relies on.
struct PowerUtility {
    double kappa = 0.0;
    double delta = 0.5;

    double u(double t, double x) const;
    double marginal_inverse(double t, double y) const;  // I(t,y)
    double dual_transform(double t, double y) const;    // Utilde(t,y)
};

struct PsiBounds {
    double lo = 1e-4;
    double hi = 50.0;
};

// Pointwise jump penalty K(t,z,psi) entering the backward sweep; convex in
// psi for delta>0, concave for delta<0.
double jump_penalty(const MarketParams& p, const PreferenceSpec& pref, double t, double z,
                    double h, double h_z, double psi);

struct PsiOpt {
    double psi = 1.0;
    bool at_boundary = false;
};

// argmin of K for delta>0, argmax for delta<0; golden section to 1e-10
// interval width plus one Newton polish. lambda=0 returns psi=1 by convention.
PsiOpt minimize_psi(const MarketParams& p, const PreferenceSpec& pref, double t, double z,
                    double h, double h_z, const PsiBounds& bounds);

// Effective discount rate of the dual expectation:
//   rtilde = rho/(1-d) - d*r/(1-d) - d*(nu^2+theta^2)/(2(1-d)^2)
//            - (psi^{-d/(1-d)} - 1 + d*(psi-1)/(1-d)) * lambda
double effective_rate(const MarketParams& p, const PreferenceSpec& pref, double t, double z,
                      double psi);

struct DualGrid {
    std::vector<double> t_nodes, z_nodes;
    std::vector<double> h;       // row-major, h[it*nz + iz]
    std::vector<double> psi_hat; // same layout
    bool any_psi_boundary_hit = false;

    std::size_t index(std::size_t it, std::size_t iz) const { return it * z_nodes.size() + iz; }
    double interp_h(double t, double z) const;
    double interp_psi(double t, double z) const;
    double annuity(double t, double z) const; // exp(-h)
};

struct PdeOptions {
    int t_steps = 200;
    int z_steps = 200;
    double z_width = 0.0; // 0 -> z0 +- 6*sqrt(T)
    PsiBounds bounds;
    int threads = 0;
};

// Backward IMEX sweep for h(t,z) with h(T,.)=0, Neumann edges; V = exp(-h)
// is the dual annuity surface evaluated at the pointwise-optimized psi.
DualGrid solve_pde(const MarketParams& p, const PreferenceSpec& pref, const MortalityCurve& m,
                   const PdeOptions& opt);

struct GridPsiPolicy final : PsiPolicy {
    const DualGrid* grid;
    explicit GridPsiPolicy(const DualGrid& g) : grid(&g) {}
    double operator()(double t, double z) const override { return grid->interp_psi(t, z); }
};

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
};

// Feynman-Kac Monte Carlo value of the dual functional at the psi policy:
// Z under the Qtilde drift, discounting at rtilde + mu + kappa/(1-delta).
McEstimate mc_dual_value(const MarketParams& p, const PreferenceSpec& pref, const MortalityCurve& m,
                         const PsiPolicy& policy, const TimeGrid& grid, std::size_t n_paths,
                         std::uint64_t seed, int threads = 0);

struct ZetaResult {
    double zeta_hat = 0.0;
    double dual_value = 0.0; // Psi(zeta_hat, psi_hat)
};

ZetaResult optimal_zeta(double x0, double g0, double annuity0, double delta);

// Psi(zeta, psi) of the dual problem for scanning around the optimum.
double dual_functional(double zeta, double annuity, double y0, double delta);

struct DualSolution {
    DualGrid grid;
    double zeta_hat = 0.0;
    double dual_value = 0.0;
    double annuity0 = 0.0;            // H(0, z0)
    std::vector<double> annuity_t;    // H(t_k, z0) per t node

    double annuity(double t, double z) const { return grid.annuity(t, z); }
    double psi_at(double t, double z) const { return grid.interp_psi(t, z); }
};

DualSolution make_dual_solution(const MarketParams& p, const PreferenceSpec& pref,
                                const MortalityCurve& m, const IncomeSpec& inc, DualGrid grid);

} // namespace jdlife
