// Design layer: CEX-only efficient allocation, sweeps of the stationary-
// expected LP value over model parameters, and the (f, eta) design search.
#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "ammlab/dp.hpp"
#include "ammlab/stationary.hpp"

namespace ammlab {

// ---------------------------- Efficient allocation ---------------------------

struct EfficientAllocation {
    double omega_A{0.0};
    double omega_B{0.0};
    double ratio{0.0};  // omega_A / omega_B; NaN when omega_B = 0
};

// Optimal CEX-only portfolio: maximizes expected utility of the one-period
// return over the omega_M = 0 slice of the constraint set.
inline EfficientAllocation efficient_allocation(const MarketParams& params,
                                                const ConstraintSet& constraint,
                                                int nodes_per_dim = 7) {
    params.validate();
    const auto nodes = build_quadrature(params, nodes_per_dim);
    const Polytope poly = constraint.cex_polytope();
    const double gamma = params.gamma;
    const double rf = params.R_f;

    const auto obj = [&](const std::vector<double>& w) {
        double acc = 0.0;
        for (const auto& n : nodes) {
            const double rp = rf + w[0] * (n.RA - rf) + w[1] * (n.RB - rf);
            if (!(rp > 0.0)) return std::numeric_limits<double>::quiet_NaN();
            acc += n.weight * (gamma == 1.0 ? std::log(rp) : std::pow(rp, 1.0 - gamma));
        }
        return acc;
    };
    const OptResult r = (gamma > 1.0) ? minimize_over(obj, poly) : maximize_over(obj, poly);
    if (!r.converged) throw numerical_error("efficient_allocation: optimizer failed");

    EfficientAllocation out;
    out.omega_A = r.x[0];
    out.omega_B = r.x[1];
    out.ratio = (r.x[1] != 0.0) ? r.x[0] / r.x[1] : std::numeric_limits<double>::quiet_NaN();
    return out;
}

// ---------------------------------- Sweeps -----------------------------------

enum class SweepAxis { F, Eta, MuA, MuB, SigmaA, SigmaB, SigmaAFixedSigma, SigmaBFixedSigma };

inline const char* to_string(SweepAxis a) {
    switch (a) {
        case SweepAxis::F: return "f";
        case SweepAxis::Eta: return "eta";
        case SweepAxis::MuA: return "muA";
        case SweepAxis::MuB: return "muB";
        case SweepAxis::SigmaA: return "sigmaA";
        case SweepAxis::SigmaB: return "sigmaB";
        case SweepAxis::SigmaAFixedSigma: return "sigmaA_fixed_sigma";
        case SweepAxis::SigmaBFixedSigma: return "sigmaB_fixed_sigma";
    }
    return "?";
}

inline std::optional<SweepAxis> parse_axis(const std::string& s) {
    if (s == "f") return SweepAxis::F;
    if (s == "eta") return SweepAxis::Eta;
    if (s == "muA") return SweepAxis::MuA;
    if (s == "muB") return SweepAxis::MuB;
    if (s == "sigmaA") return SweepAxis::SigmaA;
    if (s == "sigmaB") return SweepAxis::SigmaB;
    if (s == "sigmaA_fixed_sigma") return SweepAxis::SigmaAFixedSigma;
    if (s == "sigmaB_fixed_sigma") return SweepAxis::SigmaBFixedSigma;
    return std::nullopt;
}

struct SweepPoint {
    double value{0.0};
    bool converged{false};
    bool invests{false};
    double expected_v0{0.0};  // raw utility scale, stationary averaged
    double expected_omega_m{0.0};
    double expected_omega_a{0.0};
    double expected_omega_b{0.0};
    double partner_sigma{std::numeric_limits<double>::quiet_NaN()};  // sigma-fixed axes
    double residual{0.0};
    int iterations{0};
    std::string note;
};

struct SweepResult {
    std::string axis;
    std::vector<SweepPoint> points;
    bool has_argmax{false};
    double argmax_value{0.0};
};

namespace detail {

// Applies one axis value; returns false (with note) when no valid model
// exists, e.g. no real partner volatility at fixed sigma.
inline bool apply_axis(SweepAxis axis, double value, const MarketParams& base_params,
                       const PoolSpec& base_pool, MarketParams& params, PoolSpec& pool,
                       double& partner, std::string& note) {
    params = base_params;
    pool = base_pool;
    partner = std::numeric_limits<double>::quiet_NaN();
    switch (axis) {
        case SweepAxis::F:
            pool.fee = FeeRate(value);
            return true;
        case SweepAxis::Eta:
            if (!(value > 0.0 && value < 1.0)) {
                note = "eta outside (0,1)";
                return false;
            }
            pool.eta = value;
            return true;
        case SweepAxis::MuA:
            params.mu_A = value;
            return true;
        case SweepAxis::MuB:
            params.mu_B = value;
            return true;
        case SweepAxis::SigmaA:
            params.sigma_A = value;
            return true;
        case SweepAxis::SigmaB:
            params.sigma_B = value;
            return true;
        case SweepAxis::SigmaAFixedSigma:
        case SweepAxis::SigmaBFixedSigma: {
            const double sigma = base_params.exchange_rate_vol();
            const double rho = base_params.rho;
            const double disc = sigma * sigma - (1.0 - rho * rho) * value * value;
            if (disc < 0.0) {
                note = "no real partner volatility at fixed sigma";
                return false;
            }
            const double base_value = (axis == SweepAxis::SigmaAFixedSigma)
                                          ? base_params.sigma_A
                                          : base_params.sigma_B;
            const double base_partner = (axis == SweepAxis::SigmaAFixedSigma)
                                            ? base_params.sigma_B
                                            : base_params.sigma_A;
            // two roots solve the fixed-sigma identity; staying on the
            // baseline's side of rho*value keeps the branch continuous over
            // the whole sweep
            const double side = (base_partner >= rho * base_value) ? 1.0 : -1.0;
            double chosen = rho * value + side * std::sqrt(disc);
            if (chosen < 0.0) chosen = rho * value - side * std::sqrt(disc);
            if (chosen < 0.0) {
                note = "partner volatility negative at fixed sigma";
                return false;
            }
            partner = chosen;
            if (axis == SweepAxis::SigmaAFixedSigma) {
                params.sigma_A = value;
                params.sigma_B = chosen;
            } else {
                params.sigma_B = value;
                params.sigma_A = chosen;
            }
            return true;
        }
    }
    return false;
}

}  // namespace detail

// Solves the model at one parameter point and reduces to stationary averages.
inline SweepPoint evaluate_design_point(const MarketParams& params, const PoolSpec& pool,
                                        const ConstraintSet& constraint,
                                        const SolverConfig& cfg) {
    SweepPoint pt;
    try {
        const SolveResult sol = solve_fixed_point(params, pool, constraint, cfg);
        const auto kernel = transition_kernel(params, pool, sol.vf.grid, 24, cfg.threads);
        const auto dist = stationary(kernel, sol.vf.grid);
        const std::size_t n = sol.vf.grid.size();
        std::vector<double> v0(n), om(n), oa(n), ob(n);
        for (std::size_t i = 0; i < n; ++i) {
            v0[i] = sol.raw_value(0, i, params);
            om[i] = sol.policy.omega[0][i][0];
            oa[i] = sol.policy.omega[0][i][1];
            ob[i] = sol.policy.omega[0][i][2];
        }
        pt.expected_v0 = stationary_expectation(dist, v0);
        pt.expected_omega_m = stationary_expectation(dist, om);
        pt.expected_omega_a = stationary_expectation(dist, oa);
        pt.expected_omega_b = stationary_expectation(dist, ob);
        pt.invests = pt.expected_omega_m > 1e-9;
        pt.residual = sol.residual;
        pt.iterations = sol.iterations;
        pt.converged = true;
    } catch (const std::exception& e) {
        pt.converged = false;
        pt.note = e.what();
    }
    return pt;
}

inline SweepResult sweep(SweepAxis axis, const std::vector<double>& values,
                         const MarketParams& base_params, const PoolSpec& base_pool,
                         const ConstraintSet& constraint, const SolverConfig& cfg = {}) {
    if (values.empty()) throw std::invalid_argument("sweep: empty value list");
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());

    SweepResult res;
    res.axis = to_string(axis);
    for (double v : sorted) {
        MarketParams params;
        PoolSpec pool;
        double partner;
        std::string note;
        SweepPoint pt;
        pt.value = v;
        if (!detail::apply_axis(axis, v, base_params, base_pool, params, pool, partner, note)) {
            pt.converged = false;
            pt.note = note;
            res.points.push_back(pt);
            continue;
        }
        pt = evaluate_design_point(params, pool, constraint, cfg);
        pt.value = v;
        pt.partner_sigma = partner;
        res.points.push_back(pt);
    }
    // argmax of expected v0 over converged points; ties break toward the
    // smaller parameter value (points are sorted ascending).
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& pt : res.points) {
        if (!pt.converged) continue;
        if (pt.expected_v0 > best) {
            best = pt.expected_v0;
            res.argmax_value = pt.value;
            res.has_argmax = true;
        }
    }
    return res;
}

// ------------------------------- Design search -------------------------------

struct DesignCell {
    double f{0.0};
    double eta{0.0};
    SweepPoint point;
};

struct DesignResult {
    double f_star{0.0};
    double eta_star{0.0};
    bool design_relevant{false};  // false when the LP invests nowhere on the grid
    double best_expected_v0{-std::numeric_limits<double>::infinity()};
    std::vector<DesignCell> surface;
};

// Default design menus: the common fee-tier neighborhood and a coarse weight
// grid; optimal_design refines once around the coarse argmax.
inline std::vector<double> default_fee_menu() {
    return {0.0005, 0.001, 0.003, 0.005, 0.01, 0.02};
}
inline std::vector<double> default_eta_menu() {
    return {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
}

inline DesignResult optimal_design(const MarketParams& params, const PoolSpec& base_pool,
                                   const std::vector<double>& f_grid,
                                   const std::vector<double>& eta_grid,
                                   const ConstraintSet& constraint,
                                   const SolverConfig& cfg = {}, bool refine = true) {
    if (f_grid.empty() || eta_grid.empty())
        throw std::invalid_argument("optimal_design: empty grid");
    std::vector<double> fs = f_grid, etas = eta_grid;
    std::sort(fs.begin(), fs.end());
    std::sort(etas.begin(), etas.end());

    DesignResult res;
    double best_any = -std::numeric_limits<double>::infinity();
    double any_f = fs.front(), any_eta = etas.front();
    bool has_any = false;
    const auto consider = [&](double f, double eta) {
        PoolSpec pool = base_pool;
        pool.fee = FeeRate(f);
        pool.eta = eta;
        DesignCell cell;
        cell.f = f;
        cell.eta = eta;
        cell.point = evaluate_design_point(params, pool, constraint, cfg);
        cell.point.value = f;
        res.surface.push_back(cell);
        const auto& pt = res.surface.back().point;
        if (!pt.converged) return;
        if (pt.expected_v0 > best_any) {
            best_any = pt.expected_v0;
            any_f = f;
            any_eta = eta;
            has_any = true;
        }
        // the design argmax only counts cells where the LP actually provides
        // liquidity
        if (pt.invests && pt.expected_v0 > res.best_expected_v0) {
            res.best_expected_v0 = pt.expected_v0;
            res.f_star = f;
            res.eta_star = eta;
            res.design_relevant = true;
        }
    };

    for (double f : fs)
        for (double eta : etas) consider(f, eta);

    if (refine && res.design_relevant) {
        // one refinement level: midpoints toward the coarse argmax's menu
        // neighbors (geometric for the fee scale, arithmetic for the weight)
        const auto neighbors_of = [](const std::vector<double>& v, double star) {
            std::pair<double, double> nb{star, star};
            for (std::size_t i = 0; i < v.size(); ++i) {
                if (v[i] == star) {
                    if (i > 0) nb.first = v[i - 1];
                    if (i + 1 < v.size()) nb.second = v[i + 1];
                }
            }
            return nb;
        };
        const double f0 = res.f_star, e0 = res.eta_star;
        const auto [flo, fhi] = neighbors_of(fs, f0);
        const auto [elo, ehi] = neighbors_of(etas, e0);
        std::vector<double> f_ref{f0};
        if (flo != f0) f_ref.push_back(std::sqrt(flo * f0));
        if (fhi != f0) f_ref.push_back(std::sqrt(fhi * f0));
        std::vector<double> eta_ref{e0};
        if (elo != e0) eta_ref.push_back(0.5 * (elo + e0));
        if (ehi != e0) eta_ref.push_back(0.5 * (ehi + e0));
        for (double f : f_ref)
            for (double eta : eta_ref)
                if (!(f == f0 && eta == e0)) consider(f, eta);
    }

    if (!res.design_relevant && has_any) {
        res.f_star = any_f;
        res.eta_star = any_eta;
        res.best_expected_v0 = best_any;
    }
    return res;
}

}  // namespace ammlab
