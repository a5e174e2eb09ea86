#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "jdlife/strategy.hpp"

namespace jdlife {

struct GuaranteeSpec {
    enum class Kind { None, Zero, RateGuarantee };
    Kind kind = Kind::Zero;
    ScalarField r_g; // minimum guaranteed rate, used by RateGuarantee only
};

// Simulated panel of (Y*, Z, consumption accrual) under Q(psi_hat), plus the
// deterministic columns the strike needs. The accrual state for a holding
// fraction rho is affine in rho: D_rho(t) = L(t) - rho * cp(t), so one panel
// serves every bisection candidate.
struct PricingPanel {
    Schedule sched;
    GuaranteeSpec spec;
    double x0 = 0.0;
    std::size_t n_paths = 0;
    std::vector<double> accrual_disc;   // A_g(t) = int_0^t (r_g + mu), per node
    std::vector<double> income_leg;     // L(t) = int_0^t e^{-A_g} ell, per node
    std::vector<double> y, z, cp;       // flattened path panels, idx = path*(n+1)+node

    double node_value(const std::vector<double>& panel, std::size_t path, int k) const {
        return panel[path * (sched.grid.n_steps + 1) + k];
    }
    double accrual_state(std::size_t path, int k, double rho) const {
        return income_leg[k] - rho * node_value(cp, path, k);
    }
    // k(t, d): the guarantee floor
    double floor_level(int k, double d) const;
    // (k + g - y)^+ with the None kind pinned to zero
    double intrinsic(int k, double d, double y_state) const;
};

PricingPanel build_pricing_panel(const StrategyContext& ctx, const GuaranteeSpec& spec,
                                 const TimeGrid& grid, std::size_t n_paths, std::uint64_t seed,
                                 int threads = 0);

// Per-level regression of continuation values on monomials of the
// standardized (y, z, d) state.
struct LevelFit {
    std::vector<double> mean, scale;      // size 3
    std::vector<double> coef_value;       // all-paths value surface
    std::vector<double> coef_decision;    // ITM-only exercise rule (may be empty)
    bool degenerate = false;              // columns dropped from the basis
};

struct PutQuote {
    double rho = 1.0;
    double price = 0.0;           // stopping-time estimator at t=0
    double std_error = 0.0;
    double fit_value0 = 0.0;      // regression-surface value at t=0 (used by OBPI)
    double intrinsic0 = 0.0;
    double european = 0.0;
    double european_se = 0.0;
    bool degenerate_regression = false;
    int basis_degree = 3;
    std::vector<LevelFit> fits;           // per node, [0..n]
    std::vector<std::uint8_t> exercise;   // flattened flags, path*(n+1)+node
};

// Longstaff-Schwartz price of the American put on rho*Y* with strike
// k(t,D)+g(t). value_only skips the exercise-rule pass (bisection mode).
PutQuote lsm_price(const PricingPanel& panel, double rho, int basis_degree, int threads = 0,
                   bool value_only = false);

// Evaluate the fitted value surface max(intrinsic, continuation fit, 0).
double put_value_surface(const PricingPanel& panel, const PutQuote& quote, int k, double y_state,
                         double z_state, double d_state);

// A reusable surface evaluator for path walks; avoids re-deriving the basis
// per node. Not thread-safe; make one per worker.
class PutValueEvaluator {
public:
    PutValueEvaluator(const PricingPanel& panel, const PutQuote& quote);
    double operator()(int k, double y_state, double z_state, double d_state) const;

private:
    const PricingPanel* panel_;
    const PutQuote* quote_;
    std::vector<std::array<int, 3>> expo_;
    int max_deg_ = 0;
    mutable std::vector<double> phi_;
};

struct BoundaryEstimate {
    std::vector<double> t_nodes;
    std::vector<std::vector<double>> d_edges; // per level, d_bins+1 edges
    std::vector<std::vector<double>> b;       // per level, NaN where the bin is empty
    bool all_missing = true;

    // nearest d-bin at the level; missing bins mean no ratchet pressure
    double lookup_level(int level, double d) const;
    // linear interpolation between neighbouring levels' same-bin values
    double lookup(double t, double d) const;
};

BoundaryEstimate exercise_boundary(const PricingPanel& panel, const PutQuote& quote, int d_bins);

// A phi(t,y,z) - (r+mu) phi on a finite-difference stencil, with the jump term
// at the Q-intensity psi_hat*lambda and the y-weighted mixed derivative.
double generator_residual(const MarketParams& p, const PreferenceSpec& pref,
                          const MortalityCurve& m, const DualSolution& dual,
                          const std::function<double(double, double, double)>& phi, double t,
                          double y, double z, double dt_fd = 1e-4, double rel_step = 1e-4);

} // namespace jdlife
