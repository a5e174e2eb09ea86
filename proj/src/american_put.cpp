#include "jdlife/american_put.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "jdlife/measure.hpp"
#include "jdlife/parallel.hpp"
#include "jdlife/quadrature.hpp"

namespace jdlife {

double PricingPanel::floor_level(int k, double d) const {
    switch (spec.kind) {
        case GuaranteeSpec::Kind::None: return -std::numeric_limits<double>::infinity();
        case GuaranteeSpec::Kind::Zero: return 0.0;
        case GuaranteeSpec::Kind::RateGuarantee: return std::exp(accrual_disc[k]) * (x0 + d);
    }
    return 0.0;
}

double PricingPanel::intrinsic(int k, double d, double y_state) const {
    if (spec.kind == GuaranteeSpec::Kind::None) return 0.0;
    return std::max(floor_level(k, d) + sched.g[k] - y_state, 0.0);
}

PricingPanel build_pricing_panel(const StrategyContext& ctx, const GuaranteeSpec& spec,
                                 const TimeGrid& grid, std::size_t n_paths, std::uint64_t seed,
                                 int threads) {
    PricingPanel panel;
    panel.sched = Schedule::build(*ctx.p, *ctx.pref, *ctx.m, *ctx.inc, grid);
    panel.spec = spec;
    panel.x0 = ctx.p->x0;
    panel.n_paths = n_paths;
    const int n = grid.n_steps;
    const Schedule& sc = panel.sched;

    panel.accrual_disc.assign(n + 1, 0.0);
    panel.income_leg.assign(n + 1, 0.0);
    auto rg = [&](double u) {
        return (spec.kind == GuaranteeSpec::Kind::RateGuarantee) ? spec.r_g.at_time(u) : 0.0;
    };
    double acc = 0.0, leg = 0.0;
    for (int k = 1; k <= n; ++k) {
        double t0 = sc.t[k - 1], t1 = sc.t[k];
        double a_prev = acc;
        acc += simpson_step([&](double u) { return rg(u) + ctx.m->mu.at_time(u); }, t0, t1);
        panel.accrual_disc[k] = acc;
        leg += simpson_step(
            [&](double u) {
                double frac = (u - t0) / (t1 - t0);
                double ag = a_prev + frac * (acc - a_prev);
                return std::exp(-ag) * ctx.inc->ell.at_time(u);
            },
            t0, t1);
        panel.income_leg[k] = leg;
    }

    panel.y.assign(n_paths * (n + 1), 0.0);
    panel.z.assign(n_paths * (n + 1), 0.0);
    panel.cp.assign(n_paths * (n + 1), 0.0);
    parallel_for(n_paths, threads, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            WealthPath w = simulate_wealth_path(ctx, sc, seed, i, Measure::Q);
            std::size_t base = i * (n + 1);
            double cp_acc = 0.0;
            for (int k = 0; k <= n; ++k) {
                panel.y[base + k] = w.y[k];
                panel.z[base + k] = w.z[k];
                if (k > 0) {
                    double f0 = std::exp(-panel.accrual_disc[k - 1]) * (1.0 + sc.mu[k - 1]) * w.c[k - 1];
                    double f1 = std::exp(-panel.accrual_disc[k]) * (1.0 + sc.mu[k]) * w.c[k];
                    cp_acc += 0.5 * (f0 + f1) * grid.dt;
                }
                panel.cp[base + k] = cp_acc;
            }
        }
    });
    return panel;
}

// ---------------------------------------------------------------------------
// regression machinery

namespace {

struct Basis {
    std::vector<std::array<int, 3>> expo;
    int degree;
    explicit Basis(int deg) : degree(deg) {
        for (int a = 0; a <= deg; ++a)
            for (int b = 0; a + b <= deg; ++b)
                for (int c = 0; a + b + c <= deg; ++c) expo.push_back({a, b, c});
    }
    std::size_t size() const { return expo.size(); }

    void eval(double y, double z, double d, const LevelFit& fit, double* out) const {
        double sy = (y - fit.mean[0]) / fit.scale[0];
        double sz = (z - fit.mean[1]) / fit.scale[1];
        double sd = (d - fit.mean[2]) / fit.scale[2];
        double py[8], pz[8], pd[8];
        py[0] = pz[0] = pd[0] = 1.0;
        for (int i = 1; i <= degree; ++i) {
            py[i] = py[i - 1] * sy;
            pz[i] = pz[i - 1] * sz;
            pd[i] = pd[i - 1] * sd;
        }
        for (std::size_t j = 0; j < expo.size(); ++j)
            out[j] = py[expo[j][0]] * pz[expo[j][1]] * pd[expo[j][2]];
    }
};

struct FitInputs {
    const std::vector<double>* y;
    const std::vector<double>* z;
    const std::vector<double>* d;
};

// Least squares via normal equations; near-empty columns are dropped and the
// fit flagged degenerate (the effective degree reduction the contract asks for).
// Accumulation runs over fixed-size blocks combined in block order, so the
// result is bitwise independent of the thread count.
std::vector<double> solve_ls(const Basis& basis, const LevelFit& fit, const FitInputs& in,
                             const std::vector<std::size_t>& rows, const std::vector<double>& target,
                             bool* degenerate, int threads) {
    const std::size_t nb = basis.size();
    const std::size_t block = 4096;
    const std::size_t n_blocks = (rows.size() + block - 1) / block;
    std::vector<Eigen::MatrixXd> Gp(n_blocks);
    std::vector<Eigen::VectorXd> rp(n_blocks);
    std::vector<std::vector<double>> cmax(n_blocks);

    parallel_for(n_blocks, threads, [&](std::size_t blo, std::size_t bhi) {
        std::vector<double> phi(nb);
        for (std::size_t bi = blo; bi < bhi; ++bi) {
            Gp[bi] = Eigen::MatrixXd::Zero(nb, nb);
            rp[bi] = Eigen::VectorXd::Zero(nb);
            cmax[bi].assign(nb, 0.0);
            std::size_t lo = bi * block, hi = std::min(rows.size(), lo + block);
            for (std::size_t ri = lo; ri < hi; ++ri) {
                std::size_t i = rows[ri];
                basis.eval((*in.y)[i], (*in.z)[i], (*in.d)[i], fit, phi.data());
                for (std::size_t a = 0; a < nb; ++a) {
                    cmax[bi][a] = std::max(cmax[bi][a], std::fabs(phi[a]));
                    rp[bi](a) += phi[a] * target[ri];
                    for (std::size_t b = 0; b <= a; ++b) Gp[bi](a, b) += phi[a] * phi[b];
                }
            }
        }
    });

    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(nb, nb);
    Eigen::VectorXd rvec = Eigen::VectorXd::Zero(nb);
    std::vector<double> col_max(nb, 0.0);
    for (std::size_t bi = 0; bi < n_blocks; ++bi) {
        G += Gp[bi];
        rvec += rp[bi];
        for (std::size_t a = 0; a < nb; ++a) col_max[a] = std::max(col_max[a], cmax[bi][a]);
    }
    for (std::size_t a = 0; a < nb; ++a)
        for (std::size_t b = a + 1; b < nb; ++b) G(a, b) = G(b, a);

    std::vector<int> keep;
    for (std::size_t a = 0; a < nb; ++a)
        if (a == 0 || col_max[a] > 1e-10) keep.push_back(static_cast<int>(a));
    if (keep.size() < nb && degenerate) *degenerate = true;

    Eigen::MatrixXd Gk(keep.size(), keep.size());
    Eigen::VectorXd rk(keep.size());
    for (std::size_t a = 0; a < keep.size(); ++a) {
        rk(a) = rvec(keep[a]);
        for (std::size_t b = 0; b < keep.size(); ++b) Gk(a, b) = G(keep[a], keep[b]);
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(Gk);
    Eigen::VectorXd beta = ldlt.solve(rk);
    if (!beta.allFinite() || (Gk * beta - rk).norm() > 1e-6 * (rk.norm() + 1.0)) {
        beta = Gk.fullPivLu().solve(rk);
        if (degenerate) *degenerate = true;
    }
    std::vector<double> out(nb, 0.0);
    for (std::size_t a = 0; a < keep.size(); ++a) out[keep[a]] = beta(a);
    return out;
}

void standardize(const FitInputs& in, std::size_t n, LevelFit& fit) {
    fit.mean.assign(3, 0.0);
    fit.scale.assign(3, 1.0);
    const std::vector<double>* cols[3] = {in.y, in.z, in.d};
    for (int c = 0; c < 3; ++c) {
        double m = 0.0;
        for (std::size_t i = 0; i < n; ++i) m += (*cols[c])[i];
        m /= static_cast<double>(n);
        double ss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double dv = (*cols[c])[i] - m;
            ss += dv * dv;
        }
        double sd = std::sqrt(ss / std::max<std::size_t>(n - 1, 1));
        fit.mean[c] = m;
        fit.scale[c] = (sd > 1e-12) ? sd : 1.0;
    }
}

} // namespace

PutQuote lsm_price(const PricingPanel& panel, double rho, int basis_degree, int threads,
                   bool value_only) {
    if (basis_degree < 0 || basis_degree > 7)
        throw std::invalid_argument("lsm_price: basis degree out of range");
    const int n = panel.sched.grid.n_steps;
    const std::size_t np = panel.n_paths;
    const Schedule& sc = panel.sched;
    Basis basis(basis_degree);
    const std::size_t nb = basis.size();

    PutQuote q;
    q.rho = rho;
    q.basis_degree = basis_degree;
    q.fits.resize(n + 1);
    if (!value_only) q.exercise.assign(np * (n + 1), 0);

    // level states, refreshed per level
    std::vector<double> ys(np), zs(np), ds(np);
    std::vector<double> v_fit(np), v_stop(np), intr(np);

    // terminal level
    for (std::size_t i = 0; i < np; ++i) {
        double y_state = rho * panel.node_value(panel.y, i, n);
        double d_state = panel.accrual_state(i, n, rho);
        double ipay = panel.intrinsic(n, d_state, y_state);
        v_fit[i] = ipay;
        v_stop[i] = ipay;
        if (!value_only && ipay > 0.0) q.exercise[i * (n + 1) + n] = 1;
    }
    // European leg on the same paths
    {
        double disc = sc.disc_rmu[n];
        double mean = 0.0;
        for (std::size_t i = 0; i < np; ++i) mean += disc * v_fit[i];
        mean /= static_cast<double>(np);
        double ss = 0.0;
        for (std::size_t i = 0; i < np; ++i) {
            double dv = disc * v_fit[i] - mean;
            ss += dv * dv;
        }
        q.european = mean;
        q.european_se = std::sqrt(ss / std::max<std::size_t>(np - 1, 1) / static_cast<double>(np));
    }

    std::vector<double> target_fit(np), target_dec;
    std::vector<std::size_t> all_rows(np), itm_rows;
    for (std::size_t i = 0; i < np; ++i) all_rows[i] = i;

    for (int k = n - 1; k >= 1; --k) {
        double step_disc = sc.disc_rmu[k + 1] / sc.disc_rmu[k];
        parallel_for(np, threads, [&](std::size_t lo, std::size_t hi) {
            for (std::size_t i = lo; i < hi; ++i) {
                ys[i] = rho * panel.node_value(panel.y, i, k);
                zs[i] = panel.node_value(panel.z, i, k);
                ds[i] = panel.accrual_state(i, k, rho);
                intr[i] = panel.intrinsic(k, ds[i], ys[i]);
                target_fit[i] = step_disc * v_fit[i];
            }
        });
        LevelFit& fit = q.fits[k];
        FitInputs in{&ys, &zs, &ds};
        standardize(in, np, fit);
        bool degen = false;
        fit.coef_value = solve_ls(basis, fit, in, all_rows, target_fit, &degen, threads);

        if (!value_only) {
            itm_rows.clear();
            target_dec.clear();
            for (std::size_t i = 0; i < np; ++i) {
                if (intr[i] > 0.0) {
                    itm_rows.push_back(i);
                    target_dec.push_back(step_disc * v_stop[i]);
                }
            }
            if (itm_rows.size() >= nb) {
                fit.coef_decision = solve_ls(basis, fit, in, itm_rows, target_dec, &degen, threads);
            }
        }
        fit.degenerate = degen;
        q.degenerate_regression = q.degenerate_regression || degen;

        parallel_for(np, threads, [&](std::size_t lo, std::size_t hi) {
            std::vector<double> phi(nb);
            for (std::size_t i = lo; i < hi; ++i) {
                basis.eval(ys[i], zs[i], ds[i], fit, phi.data());
                double cont_fit = 0.0;
                for (std::size_t j = 0; j < nb; ++j) cont_fit += fit.coef_value[j] * phi[j];
                v_fit[i] = std::max({intr[i], cont_fit, 0.0});

                if (!value_only) {
                    double carried = step_disc * v_stop[i];
                    bool exer = false;
                    if (intr[i] > 0.0) {
                        if (!fit.coef_decision.empty()) {
                            double cont_dec = 0.0;
                            for (std::size_t j = 0; j < nb; ++j)
                                cont_dec += fit.coef_decision[j] * phi[j];
                            exer = intr[i] >= cont_dec;
                        } else {
                            exer = intr[i] >= carried; // too few ITM paths to regress
                        }
                    }
                    if (exer) {
                        v_stop[i] = intr[i];
                        q.exercise[i * (n + 1) + k] = 1;
                    } else {
                        v_stop[i] = carried;
                    }
                } else {
                    v_stop[i] = step_disc * v_stop[i];
                }
            }
        });
    }

    // level 0: every path shares the same state, continuation is a plain mean
    double step_disc0 = sc.disc_rmu[1] / sc.disc_rmu[0];
    double d0 = panel.accrual_state(0, 0, rho);
    double y0_state = rho * panel.node_value(panel.y, 0, 0);
    q.intrinsic0 = panel.intrinsic(0, d0, y0_state);

    double cont_fit0 = 0.0, cont_stop0 = 0.0;
    for (std::size_t i = 0; i < np; ++i) {
        cont_fit0 += step_disc0 * v_fit[i];
        cont_stop0 += step_disc0 * v_stop[i];
    }
    cont_fit0 /= static_cast<double>(np);
    cont_stop0 /= static_cast<double>(np);
    double ss = 0.0;
    for (std::size_t i = 0; i < np; ++i) {
        double dv = step_disc0 * v_stop[i] - cont_stop0;
        ss += dv * dv;
    }
    double se0 = std::sqrt(ss / std::max<std::size_t>(np - 1, 1) / static_cast<double>(np));

    LevelFit& f0 = q.fits[0];
    f0.mean.assign(3, 0.0);
    f0.scale.assign(3, 1.0);
    f0.coef_value.assign(nb, 0.0);
    f0.coef_value[0] = cont_fit0;

    q.fit_value0 = std::max({q.intrinsic0, cont_fit0, 0.0});
    q.price = std::max(q.intrinsic0, cont_stop0);
    q.std_error = se0;
    if (!value_only && q.intrinsic0 > 0.0 && q.intrinsic0 >= cont_stop0)
        for (std::size_t i = 0; i < np; ++i) q.exercise[i * (n + 1)] = 1;
    return q;
}

double put_value_surface(const PricingPanel& panel, const PutQuote& quote, int k, double y_state,
                         double z_state, double d_state) {
    return PutValueEvaluator(panel, quote)(k, y_state, z_state, d_state);
}

PutValueEvaluator::PutValueEvaluator(const PricingPanel& panel, const PutQuote& quote)
    : panel_(&panel), quote_(&quote) {
    Basis basis(quote.basis_degree);
    expo_ = basis.expo;
    max_deg_ = quote.basis_degree;
    phi_.resize(expo_.size());
}

double PutValueEvaluator::operator()(int k, double y_state, double z_state, double d_state) const {
    const int n = panel_->sched.grid.n_steps;
    double ipay = panel_->intrinsic(k, d_state, y_state);
    if (k >= n) return std::max(ipay, 0.0);
    const LevelFit& fit = quote_->fits[k];
    if (fit.coef_value.empty()) return std::max(ipay, 0.0);
    double sy = (y_state - fit.mean[0]) / fit.scale[0];
    double sz = (z_state - fit.mean[1]) / fit.scale[1];
    double sd = (d_state - fit.mean[2]) / fit.scale[2];
    double py[8], pz[8], pd[8];
    py[0] = pz[0] = pd[0] = 1.0;
    for (int i = 1; i <= max_deg_; ++i) {
        py[i] = py[i - 1] * sy;
        pz[i] = pz[i - 1] * sz;
        pd[i] = pd[i - 1] * sd;
    }
    double cont = 0.0;
    for (std::size_t j = 0; j < expo_.size(); ++j)
        cont += fit.coef_value[j] * py[expo_[j][0]] * pz[expo_[j][1]] * pd[expo_[j][2]];
    return std::max({ipay, cont, 0.0});
}

BoundaryEstimate exercise_boundary(const PricingPanel& panel, const PutQuote& quote, int d_bins) {
    if (quote.exercise.empty())
        throw std::invalid_argument("exercise_boundary: quote has no exercise flags");
    const int n = panel.sched.grid.n_steps;
    const std::size_t np = panel.n_paths;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    d_bins = std::max(1, d_bins);

    BoundaryEstimate be;
    be.t_nodes = panel.sched.t;
    be.d_edges.resize(n + 1);
    be.b.assign(n + 1, std::vector<double>(d_bins, nan));

    std::vector<double> dvals(np);
    for (int k = 0; k <= n; ++k) {
        for (std::size_t i = 0; i < np; ++i) dvals[i] = panel.accrual_state(i, k, quote.rho);
        std::vector<double> sorted = dvals;
        std::sort(sorted.begin(), sorted.end());
        auto& edges = be.d_edges[k];
        edges.resize(d_bins + 1);
        for (int e = 0; e <= d_bins; ++e) {
            std::size_t idx = std::min<std::size_t>(np - 1, e * (np - 1) / d_bins);
            edges[e] = sorted[idx];
        }
        for (std::size_t i = 0; i < np; ++i) {
            if (!quote.exercise[i * (n + 1) + k]) continue;
            double y_state = quote.rho * panel.node_value(panel.y, i, k);
            auto it = std::upper_bound(edges.begin(), edges.end(), dvals[i]);
            int bin = std::clamp(static_cast<int>(it - edges.begin()) - 1, 0, d_bins - 1);
            double& cell = be.b[k][bin];
            if (std::isnan(cell) || y_state > cell) cell = y_state;
            be.all_missing = false;
        }
    }
    return be;
}

double BoundaryEstimate::lookup_level(int level, double d) const {
    level = std::clamp(level, 0, static_cast<int>(b.size()) - 1);
    const auto& edges = d_edges[level];
    const auto& row = b[level];
    if (row.empty()) return 0.0;
    auto it = std::upper_bound(edges.begin(), edges.end(), d);
    int bin = std::clamp(static_cast<int>(it - edges.begin()) - 1, 0, static_cast<int>(row.size()) - 1);
    double v = row[bin];
    return std::isnan(v) ? 0.0 : v;
}

double BoundaryEstimate::lookup(double t, double d) const {
    if (t_nodes.size() < 2) return lookup_level(0, d);
    double dt = t_nodes[1] - t_nodes[0];
    int k = std::clamp(static_cast<int>(std::floor(t / dt)), 0, static_cast<int>(t_nodes.size()) - 2);
    double w = std::clamp((t - t_nodes[k]) / dt, 0.0, 1.0);
    return (1.0 - w) * lookup_level(k, d) + w * lookup_level(k + 1, d);
}

double generator_residual(const MarketParams& p, const PreferenceSpec& pref,
                          const MortalityCurve& m, const DualSolution& dual,
                          const std::function<double(double, double, double)>& phi, double t,
                          double y, double z, double dt_fd, double rel_step) {
    const double one_md = 1.0 - pref.delta;
    double psi = dual.psi_at(t, z);
    double H = dual.annuity(t, z);
    RiskPrices rp = risk_prices(p, t, z, psi);
    double r = p.r.at_time(t), mu = m.mu.at_time(t), lam = p.lambda.at_time(t);

    double dy = rel_step * std::max(1.0, std::fabs(y));
    double dz = rel_step * std::max(1.0, std::fabs(z));
    double f0 = phi(t, y, z);
    double f_t = (phi(t + dt_fd, y, z) - phi(std::max(0.0, t - dt_fd), y, z)) /
                 (dt_fd + std::min(t, dt_fd));
    double f_y = (phi(t, y + dy, z) - phi(t, y - dy, z)) / (2.0 * dy);
    double f_z = (phi(t, y, z + dz) - phi(t, y, z - dz)) / (2.0 * dz);
    double f_yy = (phi(t, y + dy, z) - 2.0 * f0 + phi(t, y - dy, z)) / (dy * dy);
    double f_zz = (phi(t, y, z + dz) - 2.0 * f0 + phi(t, y, z - dz)) / (dz * dz);
    double f_yz = (phi(t, y + dy, z + dz) - phi(t, y + dy, z - dz) - phi(t, y - dy, z + dz) +
                   phi(t, y - dy, z - dz)) /
                  (4.0 * dy * dz);

    double jump_mult = std::pow(psi, -1.0 / one_md);
    double a_phi = f_t + (r + mu - (1.0 + mu) / H) * y * f_y +
                   (p.eta(t, z) + rp.nu) * f_z + 0.5 * f_zz +
                   (rp.nu * rp.nu + rp.theta * rp.theta) / (2.0 * one_md * one_md) * y * y * f_yy -
                   rp.nu / one_md * y * f_yz +
                   (phi(t, y * jump_mult, z) - f0 - y * (jump_mult - 1.0) * f_y) * psi * lam;
    return a_phi - (r + mu) * f0;
}

} // namespace jdlife
