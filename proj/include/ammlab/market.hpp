// One-period disturbance model: correlated lognormal asset returns, a
// lognormal belief multiplier for liquidity traders, and a Bernoulli arrival
// flag. Expectations are taken with deterministic Gauss-Hermite tensor grids;
// a seeded sampler provides the Monte-Carlo counterpart.
#pragma once

#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "ammlab/common.hpp"

namespace ammlab {

struct MarketParams {
    double mu_A{0.0005};
    double mu_B{0.00038};
    double sigma_A{0.0199};
    double sigma_B{0.0152};
    double rho{0.8642};
    double alpha{0.5};      // liquidity-trader arrival probability
    double sigma_I{0.02};   // belief-noise log volatility
    double R_f{1.00002};    // gross risk-free return per period
    double delta{0.998};    // per-period discount factor
    int N{3};               // periods per consumption cycle
    double gamma{2.0};      // relative risk aversion

    void validate() const {
        if (!(sigma_A >= 0.0 && sigma_B >= 0.0 && sigma_I >= 0.0))
            throw std::invalid_argument("MarketParams: volatilities must be >= 0");
        if (!(rho >= -1.0 && rho <= 1.0))
            throw std::invalid_argument("MarketParams: rho must lie in [-1,1]");
        if (!(alpha >= 0.0 && alpha <= 1.0))
            throw std::invalid_argument("MarketParams: alpha must lie in [0,1]");
        if (!(R_f > 0.0)) throw std::invalid_argument("MarketParams: R_f must be positive");
        if (!(delta > 0.0 && delta < 1.0))
            throw std::invalid_argument("MarketParams: delta must lie in (0,1)");
        if (N < 1) throw std::invalid_argument("MarketParams: N must be >= 1");
        if (!(gamma > 0.0)) throw std::invalid_argument("MarketParams: gamma must be positive");
    }

    // Volatility of the fundamental exchange rate A/B.
    double exchange_rate_vol() const {
        const double v = sigma_A * sigma_A + sigma_B * sigma_B - 2.0 * rho * sigma_A * sigma_B;
        return std::sqrt(std::max(v, 0.0));
    }
};

struct DisturbanceNode {
    int xi{0};          // liquidity-trader arrival flag
    double I{1.0};      // belief multiplier
    double RA{1.0};     // gross return of asset A
    double RB{1.0};     // gross return of asset B
    double weight{1.0};
};

// --------------------------- Gauss-Hermite rules -----------------------------

// Nodes and weights for integrating against the standard normal density:
// E[g(Z)] ~ sum_i w_i g(x_i). Roots found by Newton iteration on the
// physicists' Hermite recurrence, then rescaled.
inline void gauss_hermite_normal(int n, std::vector<double>& x, std::vector<double>& w) {
    if (n < 1) throw std::invalid_argument("gauss_hermite_normal: need n >= 1");
    x.assign(n, 0.0);
    w.assign(n, 0.0);
    const double pim4 = 0.7511255444649425;  // pi^{-1/4}
    const int m = (n + 1) / 2;
    double z = 0.0;
    for (int i = 0; i < m; ++i) {
        if (i == 0)
            z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
        else if (i == 1)
            z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
        else if (i == 2)
            z = 1.86 * z - 0.86 * x[0];
        else if (i == 3)
            z = 1.91 * z - 0.91 * x[1];
        else
            z = 2.0 * z - x[i - 2];
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p1 = pim4, p2 = 0.0;
            for (int j = 1; j <= n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = z * std::sqrt(2.0 / j) * p2 - std::sqrt((j - 1.0) / j) * p3;
            }
            pp = std::sqrt(2.0 * n) * p2;
            const double z1 = z;
            z = z1 - p1 / pp;
            if (std::abs(z - z1) <= 1e-15 * std::max(1.0, std::abs(z))) break;
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    // Physicists' nodes integrate against exp(-t^2); rescale for N(0,1).
    const double sqrt_pi = std::sqrt(M_PI);
    const double sqrt2 = std::sqrt(2.0);
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        x[i] = -sqrt2 * x[i];  // flip so nodes come out ascending
        w[i] /= sqrt_pi;
        total += w[i];
    }
    for (int i = 0; i < n; ++i) w[i] /= total;
}

// ------------------------------- Quadrature ----------------------------------

// Tensor grid over (log RA, log RB), log I, and the Bernoulli arrival flag.
// Degenerate dimensions (zero volatility, alpha in {0,1}) collapse to a
// single node. Weights are normalized to sum to exactly 1.
inline std::vector<DisturbanceNode> build_quadrature(const MarketParams& p, int nodes_per_dim) {
    p.validate();
    if (nodes_per_dim < 3) throw std::invalid_argument("build_quadrature: need >= 3 nodes/dim");

    std::vector<double> gx, gw;
    gauss_hermite_normal(nodes_per_dim, gx, gw);

    struct ReturnNode {
        double RA, RB, w;
    };
    std::vector<ReturnNode> returns;
    const bool degen_a = p.sigma_A <= 0.0;
    const bool degen_b = p.sigma_B <= 0.0;
    if (degen_a && degen_b) {
        returns.push_back({std::exp(p.mu_A), std::exp(p.mu_B), 1.0});
    } else if (degen_a) {
        for (int j = 0; j < nodes_per_dim; ++j)
            returns.push_back({std::exp(p.mu_A), std::exp(p.mu_B + p.sigma_B * gx[j]), gw[j]});
    } else if (degen_b) {
        for (int i = 0; i < nodes_per_dim; ++i)
            returns.push_back({std::exp(p.mu_A + p.sigma_A * gx[i]), std::exp(p.mu_B), gw[i]});
    } else {
        // 2x2 Cholesky factor of the return covariance.
        const double l11 = p.sigma_A;
        const double l21 = p.rho * p.sigma_B;
        const double l22 = p.sigma_B * std::sqrt(std::max(0.0, 1.0 - p.rho * p.rho));
        if (l22 <= 1e-12 * p.sigma_B) {
            // Perfect correlation: one driving factor.
            for (int i = 0; i < nodes_per_dim; ++i)
                returns.push_back({std::exp(p.mu_A + l11 * gx[i]),
                                   std::exp(p.mu_B + l21 * gx[i]), gw[i]});
        } else {
            for (int i = 0; i < nodes_per_dim; ++i)
                for (int j = 0; j < nodes_per_dim; ++j)
                    returns.push_back({std::exp(p.mu_A + l11 * gx[i]),
                                       std::exp(p.mu_B + l21 * gx[i] + l22 * gx[j]),
                                       gw[i] * gw[j]});
        }
    }

    std::vector<std::pair<double, double>> beliefs;  // (I, weight)
    if (p.sigma_I <= 0.0) {
        beliefs.emplace_back(1.0, 1.0);
    } else {
        const double mean = -0.5 * p.sigma_I * p.sigma_I;
        for (int i = 0; i < nodes_per_dim; ++i)
            beliefs.emplace_back(std::exp(mean + p.sigma_I * gx[i]), gw[i]);
    }

    std::vector<DisturbanceNode> nodes;
    nodes.reserve(returns.size() * (beliefs.size() + 1));
    if (p.alpha > 0.0) {
        for (const auto& r : returns)
            for (const auto& b : beliefs)
                nodes.push_back({1, b.first, r.RA, r.RB, p.alpha * r.w * b.second});
    }
    if (p.alpha < 1.0) {
        for (const auto& r : returns)
            nodes.push_back({0, 1.0, r.RA, r.RB, (1.0 - p.alpha) * r.w});
    }

    double total = 0.0;
    for (const auto& n : nodes) total += n.weight;
    for (auto& n : nodes) n.weight /= total;
    return nodes;
}

// Equal-weight stratified grid: inverse-CDF midpoints per normal factor.
// Coarser moment accuracy than Gauss-Hermite at the same size, but the mass
// spreads evenly, which is what transition-kernel discretization wants.
inline std::vector<DisturbanceNode> build_quadrature_stratified(const MarketParams& p,
                                                                int nodes_per_dim) {
    p.validate();
    if (nodes_per_dim < 3)
        throw std::invalid_argument("build_quadrature_stratified: need >= 3 nodes/dim");
    std::vector<double> gx(static_cast<std::size_t>(nodes_per_dim));
    std::vector<double> gw(static_cast<std::size_t>(nodes_per_dim),
                           1.0 / static_cast<double>(nodes_per_dim));
    const boost::math::normal_distribution<double> stdnorm;
    for (int i = 0; i < nodes_per_dim; ++i)
        gx[static_cast<std::size_t>(i)] =
            boost::math::quantile(stdnorm, (i + 0.5) / static_cast<double>(nodes_per_dim));

    struct ReturnNode {
        double RA, RB, w;
    };
    std::vector<ReturnNode> returns;
    const bool degen_a = p.sigma_A <= 0.0;
    const bool degen_b = p.sigma_B <= 0.0;
    const double l11 = p.sigma_A;
    const double l21 = p.rho * p.sigma_B;
    const double l22 = p.sigma_B * std::sqrt(std::max(0.0, 1.0 - p.rho * p.rho));
    if (degen_a && degen_b) {
        returns.push_back({std::exp(p.mu_A), std::exp(p.mu_B), 1.0});
    } else if (degen_a) {
        for (int j = 0; j < nodes_per_dim; ++j)
            returns.push_back({std::exp(p.mu_A), std::exp(p.mu_B + p.sigma_B * gx[j]), gw[j]});
    } else if (degen_b) {
        for (int i = 0; i < nodes_per_dim; ++i)
            returns.push_back({std::exp(p.mu_A + p.sigma_A * gx[i]), std::exp(p.mu_B), gw[i]});
    } else if (l22 <= 1e-12 * p.sigma_B) {
        for (int i = 0; i < nodes_per_dim; ++i)
            returns.push_back(
                {std::exp(p.mu_A + l11 * gx[i]), std::exp(p.mu_B + l21 * gx[i]), gw[i]});
    } else {
        for (int i = 0; i < nodes_per_dim; ++i)
            for (int j = 0; j < nodes_per_dim; ++j)
                returns.push_back({std::exp(p.mu_A + l11 * gx[i]),
                                   std::exp(p.mu_B + l21 * gx[i] + l22 * gx[j]),
                                   gw[i] * gw[j]});
    }

    std::vector<std::pair<double, double>> beliefs;
    if (p.sigma_I <= 0.0) {
        beliefs.emplace_back(1.0, 1.0);
    } else {
        const double mean = -0.5 * p.sigma_I * p.sigma_I;
        for (int i = 0; i < nodes_per_dim; ++i)
            beliefs.emplace_back(std::exp(mean + p.sigma_I * gx[static_cast<std::size_t>(i)]),
                                 gw[static_cast<std::size_t>(i)]);
    }

    std::vector<DisturbanceNode> nodes;
    nodes.reserve(returns.size() * (beliefs.size() + 1));
    if (p.alpha > 0.0) {
        for (const auto& r : returns)
            for (const auto& b : beliefs)
                nodes.push_back({1, b.first, r.RA, r.RB, p.alpha * r.w * b.second});
    }
    if (p.alpha < 1.0) {
        for (const auto& r : returns)
            nodes.push_back({0, 1.0, r.RA, r.RB, (1.0 - p.alpha) * r.w});
    }
    double total = 0.0;
    for (const auto& n : nodes) total += n.weight;
    for (auto& n : nodes) n.weight /= total;
    return nodes;
}

// -------------------------------- Sampling -----------------------------------

// One Monte-Carlo draw; the caller owns the generator, so streams are
// reproducible. The draw order is fixed regardless of parameter degeneracy.
inline DisturbanceNode sample_disturbance(const MarketParams& p, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double u = unif(rng);
    const double z1 = normal(rng);
    const double z2 = normal(rng);
    const double zi = normal(rng);

    DisturbanceNode node;
    node.xi = (u < p.alpha) ? 1 : 0;
    const double l11 = p.sigma_A;
    const double l21 = p.rho * p.sigma_B;
    const double l22 = p.sigma_B * std::sqrt(std::max(0.0, 1.0 - p.rho * p.rho));
    node.RA = std::exp(p.mu_A + l11 * z1);
    node.RB = std::exp(p.mu_B + l21 * z1 + l22 * z2);
    node.I = (node.xi == 1 && p.sigma_I > 0.0)
                 ? std::exp(-0.5 * p.sigma_I * p.sigma_I + p.sigma_I * zi)
                 : 1.0;
    node.weight = 1.0;
    return node;
}

}  // namespace ammlab
