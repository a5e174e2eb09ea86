#include "jdlife/config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "jdlife/csvio.hpp"

namespace jdlife {

namespace {

using nlohmann::json;

ScalarField parse_field(const json& j, const std::string& key, const std::string& base_dir) {
    if (!j.contains(key)) throw std::runtime_error("config: missing coefficient '" + key + "'");
    const json& c = j.at(key);
    if (c.is_number()) return ScalarField::constant(c.get<double>());
    if (!c.is_object() || !c.contains("kind"))
        throw std::runtime_error("config: coefficient '" + key + "' needs a kind");
    std::string kind = c.at("kind").get<std::string>();
    if (kind == "constant") return ScalarField::constant(c.at("value").get<double>());
    if (kind == "affine_z") return ScalarField::affine_z(c.at("a").get<double>(), c.at("b").get<double>());
    if (kind == "ou") return ScalarField::ou(c.at("rate").get<double>(), c.at("mean").get<double>());
    if (kind == "table") {
        std::string path = c.at("path").get<std::string>();
        std::filesystem::path full = std::filesystem::path(base_dir) / path;
        if (!std::filesystem::exists(full))
            throw std::runtime_error("config: coefficient table for '" + key + "' not found: " +
                                     full.string());
        auto tab = std::make_shared<BilinearTable>(BilinearTable::from_csv(full.string()));
        return ScalarField::table(tab);
    }
    throw std::runtime_error("config: unknown coefficient kind '" + kind + "' for '" + key + "'");
}

} // namespace

RunConfig parse_config(const std::string& json_text, const std::string& base_dir) {
    json j = json::parse(json_text);
    RunConfig cfg;

    const json& mk = j.at("market");
    cfg.market.r = parse_field(mk, "r", base_dir);
    cfg.market.alpha = parse_field(mk, "alpha", base_dir);
    cfg.market.beta = parse_field(mk, "beta", base_dir);
    cfg.market.sigma = parse_field(mk, "sigma", base_dir);
    cfg.market.gamma = parse_field(mk, "gamma", base_dir);
    cfg.market.eta = parse_field(mk, "eta", base_dir);
    cfg.market.lambda = parse_field(mk, "lambda", base_dir);
    cfg.market.corr_w1w2 = mk.value("corr_w1w2", 0.0);
    cfg.market.s0 = mk.value("s0", 1.0);
    cfg.market.z0 = mk.value("z0", 0.0);
    cfg.market.x0 = mk.value("x0", 1.0);
    cfg.market.growth_bound_K = mk.value("growth_bound_K", 10.0);

    const json& mo = j.at("mortality");
    cfg.mortality.mu = parse_field(mo, "mu", base_dir);
    cfg.mortality.T = mo.at("horizon").get<double>();

    cfg.income.ell = parse_field(j.at("income"), "ell", base_dir);

    const json& pr = j.at("preference");
    cfg.preference.rho = parse_field(pr, "rho", base_dir);
    cfg.preference.kappa = pr.at("kappa").get<double>();
    cfg.preference.delta = pr.at("delta").get<double>();

    if (j.contains("guarantee")) {
        const json& gu = j.at("guarantee");
        std::string kind = gu.value("kind", "zero");
        if (kind == "none") {
            cfg.guarantee.kind = GuaranteeSpec::Kind::None;
        } else if (kind == "zero") {
            cfg.guarantee.kind = GuaranteeSpec::Kind::Zero;
        } else if (kind == "rate_guarantee") {
            cfg.guarantee.kind = GuaranteeSpec::Kind::RateGuarantee;
            cfg.guarantee.r_g = parse_field(gu, "r_g", base_dir);
        } else {
            throw std::runtime_error("config: unknown guarantee kind '" + kind + "'");
        }
    }

    if (j.contains("grids")) {
        const json& gr = j.at("grids");
        cfg.pde_t_steps = gr.value("pde_time_steps", cfg.pde_t_steps);
        cfg.pde_z_steps = gr.value("pde_z_steps", cfg.pde_z_steps);
        cfg.z_width = gr.value("z_width", cfg.z_width);
        cfg.mc_steps = gr.value("mc_time_steps", cfg.mc_steps);
    }
    if (j.contains("psi_bounds")) {
        cfg.psi_bounds.lo = j.at("psi_bounds").value("min", cfg.psi_bounds.lo);
        cfg.psi_bounds.hi = j.at("psi_bounds").value("max", cfg.psi_bounds.hi);
    }
    if (j.contains("mc")) {
        const json& mc = j.at("mc");
        cfg.mc_paths = mc.value("paths", cfg.mc_paths);
        cfg.seed = mc.value("seed", cfg.seed);
        cfg.threads = mc.value("threads", cfg.threads);
        cfg.export_paths = mc.value("export_paths", cfg.export_paths);
    }
    if (j.contains("lsm")) {
        const json& ls = j.at("lsm");
        cfg.lsm_paths = ls.value("paths", cfg.lsm_paths);
        cfg.basis_degree = ls.value("basis_degree", cfg.basis_degree);
        cfg.d_bins = ls.value("d_bins", cfg.d_bins);
        cfg.bisect_tol = ls.value("bisection_tol", cfg.bisect_tol);
        cfg.rho_lo = ls.value("rho_lo", cfg.rho_lo);
    }
    if (j.contains("output")) cfg.out_dir = j.at("output").value("dir", cfg.out_dir);

    cfg.canonical_json = j.dump();
    cfg.config_hash = fnv1a64(cfg.canonical_json);
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), std::filesystem::path(path).parent_path().string());
}

} // namespace jdlife
