#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "ammlab/stationary.hpp"

using namespace ammlab;

TEST_CASE("frozen chain is reported as degenerate", "[stationary]") {
    MarketParams p;
    p.sigma_A = p.sigma_B = p.sigma_I = 0.0;
    p.rho = 0.0;
    p.alpha = 0.0;
    const PoolSpec pool(0.5, 0.005);
    const auto grid = linspace(pool.fee.band_lo(), pool.fee.band_hi(), 21);
    const auto kernel = transition_kernel(p, pool, grid, 8);
    for (std::size_t i = 0; i < grid.size(); ++i)
        for (std::size_t j = 0; j < grid.size(); ++j)
            CHECK(kernel[i][j] == (i == j ? 1.0 : 0.0));

    const auto dist = stationary(kernel, grid);
    CHECK(dist.degenerate);
    for (double m : dist.mass) CHECK(m == Catch::Approx(1.0 / 21.0).margin(1e-15));
}

TEST_CASE("two-cell symmetric chain", "[stationary]") {
    const std::vector<std::vector<double>> kernel{{0.5, 0.5}, {0.5, 0.5}};
    const auto dist = stationary(kernel, {0.0, 1.0});
    CHECK_FALSE(dist.degenerate);
    CHECK(dist.mass[0] == Catch::Approx(0.5).margin(1e-12));
    CHECK(dist.mass[1] == Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("default-calibration kernel is a proper stochastic matrix with a fixed law", "[stationary]") {
    MarketParams p;
    const PoolSpec pool(0.5, 0.005);
    const auto grid = linspace(pool.fee.band_lo(), pool.fee.band_hi(), 101);
    const auto kernel = transition_kernel(p, pool, grid, 16, 2);

    for (const auto& row : kernel) {
        double sum = 0.0;
        for (double v : row) {
            CHECK(v >= 0.0);
            sum += v;
        }
        CHECK(sum == Catch::Approx(1.0).margin(1e-12));
    }

    const auto dist = stationary(kernel, grid);
    double total = 0.0;
    for (double m : dist.mass) {
        CHECK(m >= 0.0);
        total += m;
    }
    CHECK(total == Catch::Approx(1.0).margin(1e-12));

    // left fixed vector: || pi P - pi ||_1 small
    std::vector<double> piP(grid.size(), 0.0);
    for (std::size_t i = 0; i < grid.size(); ++i)
        for (std::size_t j = 0; j < grid.size(); ++j) piP[j] += dist.mass[i] * kernel[i][j];
    double l1 = 0.0;
    for (std::size_t j = 0; j < grid.size(); ++j) l1 += std::abs(piP[j] - dist.mass[j]);
    CHECK(l1 < 1e-10);
}

TEST_CASE("kernel law tracks a seeded simulation", "[stationary][slow]") {
    MarketParams p;
    const PoolSpec pool(0.5, 0.005);
    const auto grid = linspace(pool.fee.band_lo(), pool.fee.band_hi(), 101);
    const auto kernel = transition_kernel(p, pool, grid, 16, 2);
    const auto dist = stationary(kernel, grid);

    std::mt19937_64 rng(99);
    double s = 1.0;
    for (int burn = 0; burn < 2000; ++burn)
        s = step_period(s, sample_disturbance(p, rng), pool).s_next;
    std::vector<double> hist(grid.size(), 0.0);
    const double lo = grid.front();
    const double h = (grid.back() - lo) / static_cast<double>(grid.size() - 1);
    const long n = 200000;
    for (long k = 0; k < n; ++k) {
        s = step_period(s, sample_disturbance(p, rng), pool).s_next;
        double pos = (s - lo) / h;
        pos = std::min(std::max(pos, 0.0), static_cast<double>(grid.size() - 1));
        hist[static_cast<std::size_t>(std::lround(pos))] += 1.0 / static_cast<double>(n);
    }
    CHECK(ks_distance(dist.mass, hist) < 0.05);
}

TEST_CASE("stationary expectation", "[stationary]") {
    StationaryDistribution dist;
    dist.grid = {0.99, 1.0, 1.01};
    dist.mass = {0.0, 1.0, 0.0};  // point mass at the middle cell

    CHECK(stationary_expectation(dist, {1.0, 1.0, 1.0}) == 1.0);
    CHECK(stationary_expectation(dist, {5.0, 7.0, 9.0}) == 7.0);
    CHECK_THROWS_AS(stationary_expectation(dist, {1.0, 2.0}), std::invalid_argument);
}
