#pragma once

#include <cstdint>
#include <vector>

#include "jdlife/american_put.hpp"

namespace jdlife {

struct RatchetEvent {
    double t = 0.0;
    double from = 0.0;
    double to = 0.0;
};

// Running max of the boundary-to-wealth ratio; nondecreasing by construction.
struct RatchetState {
    double rho = 0.0;
    std::size_t events = 0;
    std::vector<RatchetEvent>* event_log = nullptr;

    void update(double t, double boundary_value, double y_star);
};

struct InitialFraction {
    double rho0 = 1.0;
    double x_hat0 = 0.0;   // rho0*Y*(0) + put(0) - g(0)
    double gap = 0.0;      // x_hat0 - x0
    int iterations = 0;
    bool full_holding = false; // budget already met at rho = 1
};

// Bisection of the budget equation rho*Y*(0) + P(0; rho) - g(0) = x0 on the
// fitted value surface; the surface is continuous in rho, so the root is
// located to tol. A floor too expensive to fund reports infeasibility.
InitialFraction solve_initial_fraction(const PricingPanel& panel, int basis_degree, double tol,
                                       double rho_lo, int threads = 0);

// Componentwise scaling of the unrestricted strategy by the current fraction.
struct RestrictedPoint {
    double c = 0.0, pi = 0.0, p = 0.0;
};
RestrictedPoint restricted_strategy(const MarketParams& p, const PreferenceSpec& pref,
                                    const DualSolution& dual, double rho, double y_star, double t,
                                    double z);

// Floor bookkeeping; violations only count beyond the tolerance.
struct FloorCheck {
    std::size_t violations = 0;
    std::size_t nodes = 0;
    double worst_shortfall = 0.0;

    void add(double x_hat, double floor, double tol) {
        ++nodes;
        double shortfall = floor - x_hat;
        if (shortfall > tol) {
            ++violations;
            if (shortfall > worst_shortfall) worst_shortfall = shortfall;
        }
    }
};

struct RestrictedRow {
    std::size_t path = 0;
    double t = 0.0, y_star = 0.0, rho = 0.0, put_value = 0.0, x_hat = 0.0, floor = 0.0;
    double c = 0.0, pi = 0.0, p = 0.0;
    bool violation = false;
};

struct ObpiOptions {
    std::size_t n_paths = 10000;
    std::uint64_t seed = 7;
    int threads = 0;
    int basis_degree = 3;
    int d_bins = 10;
    double bisect_tol = 1e-8;
    double rho_lo = 1e-3;
    double tol_guarantee = -1.0; // <0 resolves to 3*price SE + 1e-6*x0
    std::size_t export_paths = 0;
};

struct ObpiRun {
    InitialFraction initial;
    PutQuote quote;           // full quote at rho0
    BoundaryEstimate boundary;
    double tol_guarantee = 0.0;
    FloorCheck floor;
    std::size_t ratchet_events = 0;
    double max_rho = 0.0;
    std::vector<MartingaleCheckpoint> identity; // discounted X-hat identity vs x0
    std::vector<RestrictedRow> sample_rows;
};

// Full restricted pipeline: initial fraction, boundary fit, then a streaming
// walk of fresh Q-paths applying the ratchet, the frozen value surface, and
// the floor/identity checks.
ObpiRun run_obpi(const StrategyContext& ctx, const PricingPanel& panel, const ObpiOptions& opt);

} // namespace jdlife
