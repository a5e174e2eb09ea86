#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "jdlife/dual.hpp"
#include "jdlife/market.hpp"

namespace jdlife {

// Deterministic per-node columns shared by the simulation drivers.
struct Schedule {
    TimeGrid grid;
    std::vector<double> t, r, mu, ell, lam;
    std::vector<double> disc_rmu;   // exp(-int_0^t (r+mu))
    std::vector<double> disc_rhomu; // exp(-int_0^t (rho+mu))
    std::vector<double> g;          // human capital per node

    static Schedule build(const MarketParams& p, const PreferenceSpec& pref, const MortalityCurve& m,
                          const IncomeSpec& inc, const TimeGrid& grid);
};

// c* = p* = y / H(t, z); the annuity surface already carries the utility
// discount through its terminal normalization H(T)=1.
double optimal_consumption(const DualSolution& dual, double y, double t, double z);

// pi* = [ (psi^{-1/(1-d)} - 1) - (nu + theta)/(1-d) ] / (beta+sigma+gamma) * y
double optimal_allocation(const MarketParams& p, const PreferenceSpec& pref,
                          const DualSolution& dual, double y, double t, double z);

// Residuals of the three replication equations; the system is over-determined
// when jumps are active, so these are diagnostics, not constraints.
std::array<double, 3> allocation_residuals(const MarketParams& p, const PreferenceSpec& pref,
                                           const DualSolution& dual, double y, double t, double z,
                                           double pi);

struct WealthPath {
    std::vector<double> z, y; // n+1 nodes
    std::vector<double> c;    // n+1 nodes; p* == c* nodewise
    std::vector<long> jumps;  // n steps
    std::vector<double> w1, w2; // n Brownian increments of the simulation measure
};

struct StrategyContext {
    const MarketParams* p;
    const PreferenceSpec* pref;
    const MortalityCurve* m;
    const IncomeSpec* inc;
    const DualSolution* dual;
};

// One optimal-wealth path under Q(psi_hat) or P, multiplicative scheme with
// exact jump factor psi^{-1/(1-d)} per jump. x0_scale scales the initial
// capital (and the income stream) for homogeneity experiments.
WealthPath simulate_wealth_path(const StrategyContext& ctx, const Schedule& sched,
                                std::uint64_t seed, std::uint64_t path_index, Measure measure,
                                double capital_scale = 1.0);

struct BudgetReport {
    double lhs = 0.0;  // E_Q[PV of consumption + insurance premium + terminal wealth]
    double rhs = 0.0;  // x0 + g(0)
    double gap = 0.0;
    double std_error = 0.0;
};

BudgetReport budget_check(const StrategyContext& ctx, const Schedule& sched, std::size_t n_paths,
                          std::uint64_t seed, int threads = 0);

struct MartingaleCheckpoint {
    double t = 0.0;
    double mean = 0.0;
    double std_error = 0.0;
    double z_score = 0.0;
};

// Discounted-wealth-plus-contributions process sampled at a few checkpoints;
// each should average to x0 under Q.
std::vector<MartingaleCheckpoint> martingale_identity_check(const StrategyContext& ctx,
                                                            const Schedule& sched,
                                                            std::size_t n_paths, std::uint64_t seed,
                                                            int threads = 0);

struct PrimalEstimate {
    double mean = 0.0;
    double std_error = 0.0;
};

// Realized expected utility of the computed strategy, simulated under P.
PrimalEstimate primal_objective(const StrategyContext& ctx, const Schedule& sched,
                                std::size_t n_paths, std::uint64_t seed, int threads = 0);

} // namespace jdlife
