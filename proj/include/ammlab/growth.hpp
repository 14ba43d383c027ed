// Growth-condition diagnostics for the infinite-horizon program: estimates
// the best certainty-equivalent one-period portfolio return R-bar over the
// feasible set and the state band, and checks delta * R-bar^{1-gamma} < 1.
#pragma once

#include <cmath>
#include <vector>

#include "ammlab/dynamics.hpp"
#include "ammlab/market.hpp"
#include "ammlab/optimize.hpp"
#include "ammlab/pricing.hpp"

namespace ammlab {

struct GrowthReport {
    double r_bar{1.0};
    double delta_rbar_pow{0.0};  // delta * r_bar^{1-gamma} (gamma != 1)
    bool satisfied{false};
    bool finite_utility{true};
};

inline GrowthReport growth_condition_check(const MarketParams& params, const PoolSpec& pool,
                                           const ConstraintSet& constraint,
                                           int nodes_per_dim = 7, int s_points = 9) {
    params.validate();
    const auto nodes = build_quadrature(params, nodes_per_dim);
    const auto grid = linspace(pool.fee.band_lo(), pool.fee.band_hi(),
                               static_cast<std::size_t>(s_points));
    const Polytope poly = constraint.polytope();
    const double gamma = params.gamma;

    GrowthReport rep;
    bool first = true;
    for (double s : grid) {
        std::vector<double> rm(nodes.size());
        for (std::size_t j = 0; j < nodes.size(); ++j)
            rm[j] = step_period(s, nodes[j], pool).rm_over_rb * nodes[j].RB;

        const auto portfolio_return = [&](const std::vector<double>& w, std::size_t j) {
            return params.R_f + w[0] * (rm[j] - params.R_f) +
                   w[1] * (nodes[j].RA - params.R_f) + w[2] * (nodes[j].RB - params.R_f);
        };

        double ce = 1.0;
        if (gamma == 1.0) {
            const auto obj = [&](const std::vector<double>& w) {
                double acc = 0.0;
                for (std::size_t j = 0; j < nodes.size(); ++j) {
                    const double rp = portfolio_return(w, j);
                    if (!(rp > 0.0)) return std::numeric_limits<double>::quiet_NaN();
                    acc += nodes[j].weight * std::log(rp);
                }
                return acc;
            };
            const OptResult r = maximize_over(obj, poly);
            if (!std::isfinite(r.value)) rep.finite_utility = false;
            ce = std::exp(r.value);
        } else {
            const auto obj = [&](const std::vector<double>& w) {
                double acc = 0.0;
                for (std::size_t j = 0; j < nodes.size(); ++j) {
                    const double rp = portfolio_return(w, j);
                    if (!(rp > 0.0)) return std::numeric_limits<double>::quiet_NaN();
                    acc += nodes[j].weight * std::pow(rp, 1.0 - gamma);
                }
                return acc;
            };
            // sup over omega of the certainty equivalent; for gamma > 1 that
            // is the minimum of E[(R^p)^{1-gamma}].
            const OptResult r =
                (gamma > 1.0) ? minimize_over(obj, poly) : maximize_over(obj, poly);
            if (!std::isfinite(r.value) || !(r.value > 0.0)) {
                rep.finite_utility = false;
                continue;
            }
            ce = std::pow(r.value, 1.0 / (1.0 - gamma));
        }
        if (first) {
            rep.r_bar = ce;
            first = false;
        } else {
            rep.r_bar = (gamma > 1.0) ? std::min(rep.r_bar, ce) : std::max(rep.r_bar, ce);
        }
    }

    if (gamma == 1.0) {
        rep.satisfied = rep.finite_utility;
    } else {
        rep.delta_rbar_pow = params.delta * std::pow(rep.r_bar, 1.0 - gamma);
        rep.satisfied = rep.finite_utility && rep.delta_rbar_pow < 1.0;
    }
    return rep;
}

}  // namespace ammlab
