#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "jdlife/config.hpp"

namespace jdlife {

struct CliOptions {
    std::string config_path;
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> paths;
    std::optional<int> threads;
};

RunConfig load_cli_config(const CliOptions& opt);

int cmd_validate(const CliOptions& opt);
int cmd_solve(const CliOptions& opt);
int cmd_simulate(const CliOptions& opt);
int cmd_price_put(const CliOptions& opt);
int cmd_obpi(const CliOptions& opt);
int cmd_verify(const CliOptions& opt);

// DualGrid artifact round-trip (dual_grid.csv).
std::string dual_grid_to_csv(const DualGrid& grid);
DualGrid dual_grid_from_csv(const std::string& text);

} // namespace jdlife
