#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ammlab/design.hpp"
#include "oracles.hpp"

using namespace ammlab;

namespace {
SolverConfig fast_cfg() {
    SolverConfig cfg;
    cfg.grid_size = 21;
    cfg.nodes_per_dim = 3;
    cfg.tol = 1e-7;
    cfg.threads = 2;
    return cfg;
}
}  // namespace

TEST_CASE("efficient allocation", "[design]") {
    SECTION("risk-free dominance gives the empty portfolio") {
        MarketParams p;
        p.sigma_A = p.sigma_B = 0.0;
        p.rho = 0.0;
        p.mu_A = p.mu_B = std::log(p.R_f) - 0.001;
        const auto ea = efficient_allocation(p, {ConstraintKind::NoShort}, 3);
        CHECK(ea.omega_A == 0.0);
        CHECK(ea.omega_B == 0.0);
        CHECK(std::isnan(ea.ratio));
    }

    SECTION("symmetric assets split evenly") {
        MarketParams p;
        p.mu_A = p.mu_B = 0.0005;
        p.sigma_A = p.sigma_B = 0.018;
        p.rho = 0.4;
        const auto ea = efficient_allocation(p, {ConstraintKind::NoShort});
        CHECK(std::abs(ea.omega_A - ea.omega_B) < 1e-6);
        CHECK(ea.ratio == Catch::Approx(1.0).margin(1e-4));
    }

    SECTION("default calibration matches a fine grid enumeration") {
        MarketParams p;
        const auto nodes = build_quadrature(p, 7);
        const auto ea = efficient_allocation(p, {ConstraintKind::NoShort});
        double best = 1e300, bA = 0.0, bB = 0.0;
        for (int i = 0; i <= 200; ++i) {
            for (int j = 0; i + j <= 200; ++j) {
                const double wa = i * 0.005, wb = j * 0.005;
                double acc = 0.0;
                for (const auto& n : nodes) {
                    const double rp =
                        p.R_f + wa * (n.RA - p.R_f) + wb * (n.RB - p.R_f);
                    acc += n.weight / rp;
                }
                if (acc < best) {
                    best = acc;
                    bA = wa;
                    bB = wb;
                }
            }
        }
        CHECK(std::abs(ea.omega_A - bA) < 0.01);
        CHECK(std::abs(ea.omega_B - bB) < 0.01);
    }
}

TEST_CASE("axis plumbing", "[design]") {
    MarketParams base;
    PoolSpec pool(0.5, 0.005);

    SECTION("sigma-fixed axes hold the exchange-rate volatility") {
        const double sigma0 = base.exchange_rate_vol();
        auto sw = sweep(SweepAxis::SigmaAFixedSigma, {0.0185}, base, pool,
                        {ConstraintKind::NoShort}, fast_cfg());
        REQUIRE(sw.points.size() == 1);
        REQUIRE(std::isfinite(sw.points[0].partner_sigma));
        MarketParams p = base;
        p.sigma_A = 0.0185;
        p.sigma_B = sw.points[0].partner_sigma;
        CHECK(p.exchange_rate_vol() == Catch::Approx(sigma0).margin(1e-12));

        // the baseline value reproduces the baseline partner
        auto sw0 = sweep(SweepAxis::SigmaAFixedSigma, {base.sigma_A}, base, pool,
                         {ConstraintKind::NoShort}, fast_cfg());
        CHECK(sw0.points[0].partner_sigma == Catch::Approx(base.sigma_B).margin(1e-12));
    }

    SECTION("values outside the feasible range are flagged, sweep continues") {
        auto sw = sweep(SweepAxis::SigmaAFixedSigma, {0.5, base.sigma_A}, base, pool,
                        {ConstraintKind::NoShort}, fast_cfg());
        REQUIRE(sw.points.size() == 2);
        CHECK_FALSE(sw.points[1].converged);  // sorted ascending: 0.5 is last
        CHECK(sw.points[1].note == "no real partner volatility at fixed sigma");
        CHECK(sw.points[0].converged);
        CHECK(sw.has_argmax);
        CHECK(sw.argmax_value == base.sigma_A);
    }

    SECTION("single-value sweep returns that value as argmax") {
        auto sw = sweep(SweepAxis::F, {0.005}, base, pool, {ConstraintKind::NoShort},
                        fast_cfg());
        CHECK(sw.has_argmax);
        CHECK(sw.argmax_value == 0.005);
    }

    CHECK_THROWS_AS(sweep(SweepAxis::F, {}, base, pool, {ConstraintKind::NoShort}, fast_cfg()),
                    std::invalid_argument);
    CHECK(parse_axis("f").has_value());
    CHECK(parse_axis("sigmaB_fixed_sigma").has_value());
    CHECK_FALSE(parse_axis("bogus").has_value());
}

TEST_CASE("design surface without traders is flat and flagged", "[design][slow]") {
    MarketParams p;
    p.alpha = 0.0;
    const PoolSpec pool(0.5, 0.005);
    const auto res = optimal_design(p, pool, {0.001, 0.005}, {0.3, 0.6},
                                    {ConstraintKind::NoShort}, fast_cfg());
    CHECK_FALSE(res.design_relevant);
    REQUIRE(res.surface.size() == 4);
    double vmin = 1e300, vmax = -1e300;
    for (const auto& c : res.surface) {
        REQUIRE(c.point.converged);
        CHECK(c.point.expected_omega_m == 0.0);
        vmin = std::min(vmin, c.point.expected_v0);
        vmax = std::max(vmax, c.point.expected_v0);
    }
    CHECK(vmax - vmin < 1e-6 * std::abs(vmin));  // value independent of the design
}

TEST_CASE("riskless exchange rate with noisy traders rewards a fee", "[design][slow]") {
    // identical lognormal assets: the exchange rate never moves, so the pool
    // never loses to arbitrageurs and fee revenue decides participation
    MarketParams p;
    p.sigma_A = p.sigma_B = 0.015;
    p.rho = 1.0;
    p.mu_A = p.mu_B = 0.0004;
    p.alpha = 0.5;
    p.sigma_I = 0.02;
    SolverConfig cfg = fast_cfg();
    const auto res = optimal_design(p, PoolSpec(0.5, 0.005), {0.0005, 0.005, 0.02},
                                    {0.5}, {ConstraintKind::NoShort}, cfg);
    CHECK(res.design_relevant);
    // refinement appended cells around the coarse argmax
    CHECK(res.surface.size() > 3);
    for (const auto& c : res.surface) {
        REQUIRE(c.point.converged);
        CHECK(c.point.invests);
        CHECK(c.point.expected_v0 <= res.best_expected_v0 + 1e-12);
    }
}
