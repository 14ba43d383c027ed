// Discretized Markov chain of the rate ratio: transition kernel from the
// quadrature nodes, stationary distribution by power iteration, and
// stationary averages of per-grid quantities.
#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "ammlab/common.hpp"
#include "ammlab/dynamics.hpp"
#include "ammlab/market.hpp"
#include "ammlab/pricing.hpp"

namespace ammlab {

struct StationaryDistribution {
    std::vector<double> grid;
    std::vector<double> mass;
    bool degenerate{false};  // identity kernel: every distribution is stationary
};

// Row-stochastic matrix over grid cells; mass of s_next lands in the nearest
// cell (midpoint intervals). Disturbances enter through an equal-weight
// stratified grid: clustered quadrature weights alias against the cell
// boundaries, stratified ones do not.
inline std::vector<std::vector<double>> transition_kernel(const MarketParams& params,
                                                          const PoolSpec& pool,
                                                          const std::vector<double>& grid,
                                                          int nodes_per_dim = 24,
                                                          int threads = 0) {
    const auto nodes = build_quadrature_stratified(params, nodes_per_dim);
    const std::size_t n = grid.size();
    const double lo = grid.front();
    const double h = (grid.back() - lo) / static_cast<double>(n - 1);
    std::vector<std::vector<double>> kernel(n, std::vector<double>(n, 0.0));
    parallel_for(
        n,
        [&](std::size_t i) {
            for (const auto& node : nodes) {
                const double s_next = step_period(grid[i], node, pool).s_next;
                double pos = (s_next - lo) / h;
                pos = std::min(std::max(pos, 0.0), static_cast<double>(n - 1));
                const std::size_t cell = static_cast<std::size_t>(std::lround(pos));
                kernel[i][std::min(cell, n - 1)] += node.weight;
            }
            double sum = 0.0;
            for (double v : kernel[i]) sum += v;
            for (double& v : kernel[i]) v /= sum;
        },
        threads);
    return kernel;
}

// Left fixed vector of a row-stochastic kernel by power iteration from the
// uniform distribution.
inline StationaryDistribution stationary(const std::vector<std::vector<double>>& kernel,
                                         const std::vector<double>& grid,
                                         double tol = 1e-12, long max_iter = 1000000) {
    const std::size_t n = kernel.size();
    StationaryDistribution dist;
    dist.grid = grid;
    dist.mass.assign(n, 1.0 / static_cast<double>(n));

    bool identity = true;
    for (std::size_t i = 0; i < n && identity; ++i)
        for (std::size_t j = 0; j < n && identity; ++j)
            if (std::abs(kernel[i][j] - (i == j ? 1.0 : 0.0)) > 1e-14) identity = false;
    if (identity) {
        dist.degenerate = true;  // uniqueness fails; report the start vector
        return dist;
    }

    std::vector<double> next(n);
    for (long it = 0; it < max_iter; ++it) {
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double p = dist.mass[i];
            if (p == 0.0) continue;
            const auto& row = kernel[i];
            for (std::size_t j = 0; j < n; ++j) next[j] += p * row[j];
        }
        double l1 = 0.0, total = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            l1 += std::abs(next[j] - dist.mass[j]);
            total += next[j];
        }
        for (std::size_t j = 0; j < n; ++j) dist.mass[j] = next[j] / total;
        if (l1 < tol) return dist;
    }
    throw numerical_error("stationary: power iteration did not reach tolerance");
}

inline double stationary_expectation(const StationaryDistribution& dist,
                                     const std::vector<double>& field) {
    if (field.size() != dist.mass.size())
        throw std::invalid_argument("stationary_expectation: grid size mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < field.size(); ++i) acc += dist.mass[i] * field[i];
    return acc;
}

// Kolmogorov-Smirnov distance between two distributions on the same cells.
inline double ks_distance(const std::vector<double>& mass_a, const std::vector<double>& mass_b) {
    if (mass_a.size() != mass_b.size())
        throw std::invalid_argument("ks_distance: size mismatch");
    double ca = 0.0, cb = 0.0, ks = 0.0;
    for (std::size_t i = 0; i < mass_a.size(); ++i) {
        ca += mass_a[i];
        cb += mass_b[i];
        ks = std::max(ks, std::abs(ca - cb));
    }
    return ks;
}

}  // namespace ammlab
