#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "ammlab/dp.hpp"
#include "oracles.hpp"

using namespace ammlab;

namespace {

MarketParams default_params() { return MarketParams{}; }

MarketParams risk_free_env() {
    MarketParams p;
    p.sigma_A = p.sigma_B = p.sigma_I = 0.0;
    p.rho = 0.0;
    p.alpha = 0.0;
    p.mu_A = p.mu_B = std::log(p.R_f);
    return p;
}

// direct evaluation of the gamma != 1 portfolio objective at one grid point,
// shared by the enumeration oracles below
struct PointObjective {
    std::vector<double> cj, em, ea, eb;
    double rf, expo;

    PointObjective(double s, const std::vector<double>& grid, const std::vector<double>& v_next,
                   const MarketParams& p, const PoolSpec& pool,
                   const std::vector<DisturbanceNode>& nodes) {
        rf = p.R_f;
        expo = 1.0 - p.gamma;
        const double lo = grid.front();
        const double h = (grid.back() - lo) / static_cast<double>(grid.size() - 1);
        for (const auto& n : nodes) {
            const auto out = step_period(s, n, pool);
            double pos = (out.s_next - lo) / h;
            pos = std::min(std::max(pos, 0.0), static_cast<double>(grid.size() - 1));
            std::size_t k = static_cast<std::size_t>(pos);
            if (k >= grid.size() - 1) k = grid.size() - 2;
            const double t = pos - static_cast<double>(k);
            cj.push_back(n.weight * ((1.0 - t) * v_next[k] + t * v_next[k + 1]));
            em.push_back(out.rm_over_rb * n.RB - rf);
            ea.push_back(n.RA - rf);
            eb.push_back(n.RB - rf);
        }
    }

    double operator()(const std::vector<double>& w) const {
        double acc = 0.0;
        for (std::size_t j = 0; j < cj.size(); ++j) {
            const double rp = rf + w[0] * em[j] + w[1] * ea[j] + w[2] * eb[j];
            if (!(rp > 0.0)) return std::numeric_limits<double>::quiet_NaN();
            acc += cj[j] * std::pow(rp, expo);
        }
        return acc;
    }
};

}  // namespace

TEST_CASE("portfolio operator in a risk-free environment", "[dp]") {
    const MarketParams p = risk_free_env();
    const PoolSpec pool(0.5, 0.005);
    const auto grid = linspace(pool.fee.band_lo(), pool.fee.band_hi(), 11);
    const std::vector<double> j_const(11, 2.0);
    const auto nodes = build_quadrature(p, 3);
    const auto out = apply_portfolio_operator(grid, j_const, p, pool, nodes,
                                              {ConstraintKind::NoShort}, 0);
    for (double v : out.values)
        CHECK(v == Catch::Approx(p.delta * 2.0 / p.R_f).epsilon(1e-10));
}

TEST_CASE("portfolio operator matches simplex enumeration", "[dp]") {
    const MarketParams p = default_params();
    const PoolSpec pool(0.5, 0.005);
    const auto grid = linspace(pool.fee.band_lo(), pool.fee.band_hi(), 21);
    std::vector<double> v_next(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double d = (grid[i] - 1.0) / (pool.fee.band_hi() - 1.0);
        v_next[i] = 100.0 + 25.0 * d * d;  // curved positive slice
    }
    const auto nodes = build_quadrature(p, 5);
    const auto out = apply_portfolio_operator(grid, v_next, p, pool, nodes,
                                              {ConstraintKind::NoShort}, 0);

    const Polytope poly = ConstraintSet{ConstraintKind::NoShort}.polytope();
    for (std::size_t i : {std::size_t(0), grid.size() / 2, grid.size() - 1}) {
        const PointObjective obj(grid[i], grid, v_next, p, pool, nodes);
        const auto [bw, bv] = oracle::enumerate_polytope(obj, poly, 0.01, false);
        CHECK(out.values[i] == Catch::Approx(p.delta * bv).epsilon(1e-5));
        CHECK(out.values[i] <= p.delta * bv + 1e-9 * std::abs(bv));  // true optimum is lower
        for (int k = 0; k < 3; ++k)
            CHECK(std::abs(out.omega[i][static_cast<std::size_t>(k)] -
                           bw[static_cast<std::size_t>(k)]) < 0.02);
    }
}

TEST_CASE("log-utility operator contracts at rate delta", "[dp]") {
    MarketParams p = default_params();
    p.gamma = 1.0;
    const PoolSpec pool(0.5, 0.005);
    const auto grid = linspace(pool.fee.band_lo(), pool.fee.band_hi(), 15);
    const auto nodes = build_quadrature(p, 3);
    std::mt19937_64 rng(14);
    std::uniform_real_distribution<double> uj(-3.0, 3.0);
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<double> j0(grid.size()), pert(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) {
            j0[i] = uj(rng);
            pert[i] = uj(rng);
        }
        std::vector<double> j1 = j0;
        for (std::size_t i = 0; i < grid.size(); ++i) j1[i] += pert[i];
        const auto a = apply_portfolio_operator(grid, j0, p, pool, nodes,
                                                {ConstraintKind::NoShort}, 1);
        const auto b = apply_portfolio_operator(grid, j1, p, pool, nodes,
                                                {ConstraintKind::NoShort}, 1);
        double pnorm = 0.0;
        for (double v : pert) pnorm = std::max(pnorm, std::abs(v));
        CHECK(sup_norm_diff(a.values, b.values) <= p.delta * pnorm + 1e-10);
    }
}

TEST_CASE("gamma>1 operator chain is monotone", "[dp]") {
    const MarketParams p = default_params();
    const PoolSpec pool(0.5, 0.005);
    const auto grid = linspace(pool.fee.band_lo(), pool.fee.band_hi(), 15);
    const auto nodes = build_quadrature(p, 3);
    std::mt19937_64 rng(15);
    std::uniform_real_distribution<double> uj(1.0, 5.0), ub(0.0, 2.0);
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<double> j0(grid.size()), j1(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) {
            j0[i] = uj(rng);
            j1[i] = j0[i] + ub(rng);
        }
        const auto a = apply_portfolio_operator(grid, j0, p, pool, nodes,
                                                {ConstraintKind::NoShort}, 1);
        const auto b = apply_portfolio_operator(grid, j1, p, pool, nodes,
                                                {ConstraintKind::NoShort}, 1);
        for (std::size_t i = 0; i < grid.size(); ++i) CHECK(a.values[i] <= b.values[i] + 1e-10);
    }
}

TEST_CASE("consumption operator closed forms", "[dp]") {
    MarketParams p = default_params();

    SECTION("gamma = 2 at a = 1") {
        const auto res = apply_consumption_operator({1.0}, p);
        CHECK(res.values[0] == Catch::Approx(4.0).epsilon(1e-14));
        CHECK(res.consumption[0] == Catch::Approx(0.5).epsilon(1e-14));
    }

    SECTION("gamma = 2 optimizer vs scalar grid search") {
        for (double a : {0.3, 1.0, 20.0, 4000.0}) {
            const auto res = apply_consumption_operator({a}, p);
            double best_c = 0.0, best = 1e300;
            for (int i = 1; i < 2000000; ++i) {
                const double c = i / 2000000.0;
                const double v = 1.0 / c + a / (1.0 - c);
                if (v < best) {
                    best = v;
                    best_c = c;
                }
            }
            CHECK(res.consumption[0] == Catch::Approx(best_c).margin(1e-6));
        }
    }

    SECTION("nonpositive operator image is rejected") {
        CHECK_THROWS_AS(apply_consumption_operator({0.0}, p), std::invalid_argument);
        CHECK_THROWS_AS(apply_consumption_operator({-1.0}, p), std::invalid_argument);
    }

    SECTION("saving vanishes as a -> 0 for gamma < 1") {
        MarketParams q = p;
        q.gamma = 0.5;
        const auto res = apply_consumption_operator({1e-12}, q);
        CHECK(res.consumption[0] > 1.0 - 1e-3);
    }

    SECTION("gamma = 1 scalar problem") {
        MarketParams q = p;
        q.gamma = 1.0;  // delta = 0.998, N = 3
        const auto res = apply_consumption_operator({0.0, 1.0}, q);
        const double dn = std::pow(q.delta, q.N);
        // extended-precision maximization oracle; in double the objective is
        // flat to rounding within ~1e-9 of the optimum
        const auto g = [&](long double c) {
            return std::log(c) + static_cast<long double>(dn / (1.0 - dn)) * std::log(1.0L - c);
        };
        const auto [c_star, g_star] = golden_section_max(g, 1e-9, 1.0 - 1e-9, 1e-13);
        (void)g_star;
        CHECK(res.scalar_argmax == Catch::Approx(c_star).margin(1e-10));
        CHECK(res.scalar_argmax == Catch::Approx(1.0 - dn).margin(1e-11));
        CHECK(res.values[1] - res.values[0] == Catch::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("degenerate market has a closed-form fixed point", "[dp]") {
    MarketParams p = risk_free_env();
    p.delta = 0.95;
    const PoolSpec pool(0.5, 0.005);
    SolverConfig cfg;
    cfg.grid_size = 11;
    cfg.nodes_per_dim = 3;
    cfg.tol = 1e-12;
    cfg.threads = 1;
    const auto res = solve_fixed_point(p, pool, {ConstraintKind::NoShort}, cfg);

    const double q = std::pow(p.delta * std::pow(p.R_f, 1.0 - p.gamma), p.N);
    const double t = std::pow(q, 1.0 / p.gamma) / (1.0 - std::pow(q, 1.0 / p.gamma));
    const double vt_closed = (1.0 + t) * (1.0 + t);
    for (std::size_t i = 0; i < res.vf.grid.size(); ++i) {
        CHECK(res.vf.values[0][i] == Catch::Approx(vt_closed).margin(1e-8));
        CHECK(res.policy.consumption[i] == Catch::Approx(1.0 / (1.0 + t)).margin(1e-9));
    }
}

TEST_CASE("solver postconditions on a coarse default-calibration run", "[dp][slow]") {
    const MarketParams p = default_params();
    const PoolSpec pool(0.5, 0.005);
    const ConstraintSet cons{ConstraintKind::NoShort};
    SolverConfig cfg;
    cfg.grid_size = 31;
    cfg.nodes_per_dim = 5;
    cfg.tol = 1e-9;
    cfg.threads = 2;
    const auto res = solve_fixed_point(p, pool, cons, cfg);

    SECTION("policies feasible, transformed value above one") {
        const Polytope poly = cons.polytope();
        for (int k = 0; k < p.N; ++k)
            for (const auto& w : res.policy.omega[static_cast<std::size_t>(k)])
                CHECK(poly.contains({w[0], w[1], w[2]}, 1e-9));
        for (double c : res.policy.consumption) {
            CHECK(c > 0.0);
            CHECK(c < 1.0);
        }
        for (double v : res.vf.values[0]) CHECK(v >= 1.0 - 1e-9);
    }

    SECTION("re-applying the full chain moves the result only at optimizer-noise scale") {
        const auto nodes = build_quadrature(p, cfg.nodes_per_dim);
        std::vector<double> cur = res.vf.values[0];
        for (int k = p.N - 1; k >= 1; --k)
            cur = apply_portfolio_operator(res.vf.grid, cur, p, pool, nodes, cons, k, 2).values;
        const auto a = apply_portfolio_operator(res.vf.grid, cur, p, pool, nodes, cons, 0, 2);
        const auto cons_res = apply_consumption_operator(a.values, p);
        double scale = 0.0;
        for (double v : res.vf.values[0]) scale = std::max(scale, std::abs(v));
        CHECK(sup_norm_diff(cons_res.values, res.vf.values[0]) < 5e-9 * scale);
    }

    SECTION("brute-force policy agreement at random grid points") {
        const auto nodes = build_quadrature(p, cfg.nodes_per_dim);
        const Polytope poly = cons.polytope();
        std::mt19937_64 rng(123);
        std::uniform_int_distribution<std::size_t> pick(0, res.vf.grid.size() - 1);
        for (int trial = 0; trial < 5; ++trial) {
            const std::size_t i = pick(rng);
            const PointObjective obj(res.vf.grid[i], res.vf.grid, res.vf.values[1], p, pool,
                                     nodes);
            const auto [bw, bv] = oracle::enumerate_polytope(obj, poly, 0.01, false);
            (void)bv;
            for (int k = 0; k < 3; ++k)
                CHECK(std::abs(res.policy.omega[0][i][static_cast<std::size_t>(k)] -
                               bw[static_cast<std::size_t>(k)]) < 0.02);
        }
    }

    SECTION("grid refinement stability") {
        SolverConfig fine = cfg;
        fine.grid_size = 61;
        const auto res2 = solve_fixed_point(p, pool, cons, fine);
        double scale = 0.0, worst = 0.0;
        for (std::size_t i = 0; i < res.vf.grid.size(); ++i) {
            scale = std::max(scale, std::abs(res.vf.values[0][i]));
            worst = std::max(worst, std::abs(res.vf.values[0][i] - res2.vf.values[0][2 * i]));
        }
        CHECK(worst < 5e-6 * scale);
    }
}

TEST_CASE("log-utility solve is myopic", "[dp]") {
    MarketParams p = default_params();
    p.gamma = 1.0;
    p.delta = 0.95;  // fast contraction for the unit test
    const PoolSpec pool(0.5, 0.005);
    const ConstraintSet cons{ConstraintKind::NoShort};
    SolverConfig cfg;
    cfg.grid_size = 15;
    cfg.nodes_per_dim = 3;
    cfg.tol = 1e-10;
    cfg.threads = 2;
    const auto res = solve_fixed_point(p, pool, cons, cfg);

    CHECK(res.c_scalar == Catch::Approx(1.0 - std::pow(p.delta, p.N)).margin(1e-9));
    CHECK(res.measured_ratio <= std::pow(p.delta, p.N) + 0.005);

    // the optimal allocation maximizes the one-period expected log return
    const auto nodes = build_quadrature(p, cfg.nodes_per_dim);
    const Polytope poly = cons.polytope();
    for (std::size_t i : {std::size_t(0), std::size_t(7), std::size_t(14)}) {
        const double s = res.vf.grid[i];
        const auto obj = [&](const std::vector<double>& w) {
            double acc = 0.0;
            for (const auto& n : nodes) {
                const auto out = step_period(s, n, pool);
                const double rp = p.R_f + w[0] * (out.rm_over_rb * n.RB - p.R_f) +
                                  w[1] * (n.RA - p.R_f) + w[2] * (n.RB - p.R_f);
                if (!(rp > 0.0)) return std::numeric_limits<double>::quiet_NaN();
                acc += n.weight * std::log(rp);
            }
            return acc;
        };
        const auto [bw, bv] = oracle::enumerate_polytope(obj, poly, 0.02, true);
        (void)bv;
        for (int k = 0; k < 3; ++k)
            CHECK(std::abs(res.policy.omega[0][i][static_cast<std::size_t>(k)] -
                           bw[static_cast<std::size_t>(k)]) < 0.04);
    }
}

TEST_CASE("growth condition report", "[dp]") {
    SECTION("risk-free environment") {
        MarketParams p = risk_free_env();
        const auto rep = growth_condition_check(p, PoolSpec(0.5, 0.005),
                                                {ConstraintKind::NoShort}, 3, 3);
        CHECK(rep.r_bar == Catch::Approx(p.R_f).margin(1e-9));
        CHECK(rep.satisfied);  // delta / R_f < 1
    }

    SECTION("violated when discounting beats the best return") {
        MarketParams p = risk_free_env();
        p.R_f = 0.99;
        p.mu_A = p.mu_B = std::log(p.R_f);
        p.delta = 0.995;
        const auto rep = growth_condition_check(p, PoolSpec(0.5, 0.005),
                                                {ConstraintKind::NoShort}, 3, 3);
        CHECK(rep.delta_rbar_pow >= 1.0);
        CHECK_FALSE(rep.satisfied);
    }

    SECTION("the default calibration satisfies the growth condition") {
        const auto rep = growth_condition_check(default_params(), PoolSpec(0.5, 0.005),
                                                {ConstraintKind::NoShort}, 5, 5);
        CHECK(rep.satisfied);
        CHECK(rep.delta_rbar_pow < 1.0);
    }
}

TEST_CASE("iteration cap raises a convergence error", "[dp]") {
    const MarketParams p = default_params();
    SolverConfig cfg;
    cfg.grid_size = 11;
    cfg.nodes_per_dim = 3;
    cfg.max_iter = 3;
    cfg.threads = 1;
    CHECK_THROWS_AS(solve_fixed_point(p, PoolSpec(0.5, 0.005), {ConstraintKind::NoShort}, cfg),
                    numerical_error);
}
