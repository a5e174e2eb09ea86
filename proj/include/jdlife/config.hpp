#pragma once

#include <cstdint>
#include <string>

#include "jdlife/american_put.hpp"
#include "jdlife/dual.hpp"
#include "jdlife/market.hpp"

namespace jdlife {

// One run configuration: model blocks plus grid/MC/output settings. Parsed
// from a single JSON document; every piece of randomness is seeded from here.
struct RunConfig {
    MarketParams market;
    MortalityCurve mortality;
    IncomeSpec income;
    PreferenceSpec preference;
    GuaranteeSpec guarantee;

    int pde_t_steps = 200;
    int pde_z_steps = 200;
    double z_width = 0.0; // 0 -> z0 +- 6 sqrt(T)
    PsiBounds psi_bounds;

    int mc_steps = 500;
    std::size_t mc_paths = 100000;
    std::uint64_t seed = 42;
    int threads = 0;
    std::size_t export_paths = 100;

    std::size_t lsm_paths = 20000;
    int basis_degree = 3;
    int d_bins = 10;
    double bisect_tol = 1e-8;
    double rho_lo = 1e-3;

    std::string out_dir = "out";
    std::uint64_t config_hash = 0;
    std::string canonical_json; // sorted-key dump used for hashing

    TimeGrid mc_grid() const { return TimeGrid::make(mortality.T, mc_steps); }
};

RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& json_text, const std::string& base_dir);

} // namespace jdlife
