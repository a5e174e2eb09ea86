#include <CLI11.hpp>
#include <exception>
#include <iostream>

#include "jdlife/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"jdlife: investment-consumption-insurance engine with an American capital guarantee"};
    app.require_subcommand(1);

    jdlife::CliOptions opt;
    std::string out_dir;
    std::uint64_t seed = 0;
    std::size_t paths = 0;
    int threads = -1;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config_path, "run configuration (JSON)")->required();
        sub->add_option("--out", out_dir, "output directory override");
        sub->add_option("--seed", seed, "seed override");
        sub->add_option("--paths", paths, "Monte Carlo path count override");
        sub->add_option("--threads", threads, "worker thread count (0 = auto)");
    };

    CLI::App* validate = app.add_subcommand("validate", "check model assumptions on the grid");
    CLI::App* solve = app.add_subcommand("solve", "solve the dual PDE and write the grid artifact");
    CLI::App* simulate = app.add_subcommand("simulate", "simulate the unrestricted optimal strategy");
    CLI::App* price = app.add_subcommand("price-put", "price the American guarantee put");
    CLI::App* obpi = app.add_subcommand("obpi", "run the capital-guaranteed (OBPI) strategy");
    CLI::App* verify = app.add_subcommand("verify", "run the full acceptance suite");
    for (CLI::App* sub : {validate, solve, simulate, price, obpi, verify}) add_common(sub);

    CLI11_PARSE(app, argc, argv);

    if (!out_dir.empty()) opt.out_dir = out_dir;
    if (seed != 0) opt.seed = seed;
    if (paths != 0) opt.paths = paths;
    if (threads >= 0) opt.threads = threads;

    try {
        if (validate->parsed()) return jdlife::cmd_validate(opt);
        if (solve->parsed()) return jdlife::cmd_solve(opt);
        if (simulate->parsed()) return jdlife::cmd_simulate(opt);
        if (price->parsed()) return jdlife::cmd_price_put(opt);
        if (obpi->parsed()) return jdlife::cmd_obpi(opt);
        if (verify->parsed()) return jdlife::cmd_verify(opt);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
