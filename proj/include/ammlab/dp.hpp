// The LP's infinite-horizon consumption/investment program on the rate-ratio
// band. Value iteration applies the N-phase composite of the one-period
// portfolio operator followed by the consumption wrap at phase 0; for
// gamma != 1 the iteration runs in the transformed scale where the fixed
// point is >= 1.
//
// Per-period transitions (s_next, R^M) do not depend on the control, so they
// are tabulated once per solve and each operator application reduces to a
// small constrained optimization per grid point.
#pragma once

#include <array>
#include <cmath>
#include <sstream>
#include <vector>

#include "ammlab/common.hpp"
#include "ammlab/dynamics.hpp"
#include "ammlab/growth.hpp"
#include "ammlab/market.hpp"
#include "ammlab/optimize.hpp"
#include "ammlab/pricing.hpp"

namespace ammlab {

enum class ValueForm { Raw, Transformed };

struct ValueFunction {
    std::vector<double> grid;                  // spans the band exactly
    std::vector<std::vector<double>> values;   // [phase][grid point]
    ValueForm form{ValueForm::Transformed};
};

struct PolicyTable {
    std::vector<std::vector<std::array<double, 3>>> omega;  // [phase][grid]
    std::vector<double> consumption;                         // phase 0 only
};

struct SolverConfig {
    int grid_size{101};
    double tol{1e-9};
    int max_iter{10000};
    int nodes_per_dim{7};
    int threads{0};
    double inner_tol{1e-11};  // relative objective tolerance of the omega search
    // Aitken extrapolation between plain steps; convergence is still gated by
    // a plain-step residual, so this only shortens the path to the fixed
    // point. Disable to observe the raw contraction.
    bool accelerate{true};
};

// ------------------------- Precomputed transitions ---------------------------

// For each (grid cell, disturbance node): the pool return R^M and the linear
// interpolation footprint of s_next on the same grid.
class TransitionTable {
public:
    TransitionTable(const std::vector<double>& grid, const std::vector<DisturbanceNode>& nodes,
                    const PoolSpec& pool) {
        n_grid_ = grid.size();
        n_nodes_ = nodes.size();
        weight_.resize(n_nodes_);
        ra_.resize(n_nodes_);
        rb_.resize(n_nodes_);
        for (std::size_t j = 0; j < n_nodes_; ++j) {
            weight_[j] = nodes[j].weight;
            ra_[j] = nodes[j].RA;
            rb_[j] = nodes[j].RB;
        }
        lo_idx_.resize(n_grid_ * n_nodes_);
        frac_.resize(n_grid_ * n_nodes_);
        rm_.resize(n_grid_ * n_nodes_);
        const double lo = grid.front();
        const double h = (grid.back() - lo) / static_cast<double>(n_grid_ - 1);
        for (std::size_t i = 0; i < n_grid_; ++i) {
            for (std::size_t j = 0; j < n_nodes_; ++j) {
                const PeriodOutcome out = step_period(grid[i], nodes[j], pool);
                const std::size_t at = i * n_nodes_ + j;
                rm_[at] = out.rm_over_rb * nodes[j].RB;
                double pos = (out.s_next - lo) / h;
                pos = std::min(std::max(pos, 0.0), static_cast<double>(n_grid_ - 1));
                std::size_t k = static_cast<std::size_t>(pos);
                if (k >= n_grid_ - 1) k = n_grid_ - 2;
                lo_idx_[at] = static_cast<int>(k);
                frac_[at] = pos - static_cast<double>(k);
            }
        }
    }

    std::size_t n_grid() const { return n_grid_; }
    std::size_t n_nodes() const { return n_nodes_; }
    const std::vector<double>& weights() const { return weight_; }
    const std::vector<double>& ra() const { return ra_; }
    const std::vector<double>& rb() const { return rb_; }
    double rm(std::size_t i, std::size_t j) const { return rm_[i * n_nodes_ + j]; }
    int lo_idx(std::size_t i, std::size_t j) const { return lo_idx_[i * n_nodes_ + j]; }
    double frac(std::size_t i, std::size_t j) const { return frac_[i * n_nodes_ + j]; }

private:
    std::size_t n_grid_{0}, n_nodes_{0};
    std::vector<double> weight_, ra_, rb_;
    std::vector<int> lo_idx_;
    std::vector<double> frac_, rm_;
};

struct OperatorResult {
    std::vector<double> values;
    std::vector<std::array<double, 3>> omega;
};

struct ConsumptionResult {
    std::vector<double> values;
    std::vector<double> consumption;
    double scalar_argmax{0.0};  // gamma = 1: maximizer of the scalar problem
};

namespace detail {

inline OperatorResult apply_portfolio_impl(const std::vector<double>& v_next,
                                           const MarketParams& params, const PoolSpec& pool,
                                           const TransitionTable& tt,
                                           const ConstraintSet& constraint, int phase_k,
                                           const std::vector<std::array<double, 3>>* warm,
                                           bool multistart, double inner_tol, int threads) {
    (void)pool;
    const std::size_t n = tt.n_grid();
    const std::size_t m = tt.n_nodes();
    if (v_next.size() != n)
        throw std::invalid_argument("apply_portfolio_operator: grid/value size mismatch");
    const double gamma = params.gamma;
    if (gamma != 1.0) {
        for (double v : v_next)
            if (!(v > 0.0))
                throw std::invalid_argument(
                    "apply_portfolio_operator: transformed values must be positive");
    }

    const Polytope poly = constraint.polytope();
    const double rf = params.R_f;
    const double* w = tt.weights().data();
    const double* ra = tt.ra().data();
    const double* rb = tt.rb().data();

    OperatorResult out;
    out.values.assign(n, 0.0);
    out.omega.assign(n, {0.0, 0.0, 0.0});
    std::vector<char> failed(n, 0);

    parallel_for(
        n,
        [&](std::size_t i) {
            std::vector<double> cj(m), em(m), ea(m), eb(m);
            double jconst = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
                const double jn = v_next[tt.lo_idx(i, j)] * (1.0 - tt.frac(i, j)) +
                                  v_next[tt.lo_idx(i, j) + 1] * tt.frac(i, j);
                cj[j] = w[j] * jn;
                jconst += cj[j];
                em[j] = tt.rm(i, j) - rf;
                ea[j] = ra[j] - rf;
                eb[j] = rb[j] - rf;
            }

            OptResult r;
            const std::vector<double>* warm_i = nullptr;
            std::vector<double> warm_buf;
            if (warm) {
                warm_buf.assign((*warm)[i].begin(), (*warm)[i].end());
                warm_i = &warm_buf;
            }
            const auto optimize = [&](const auto& obj, bool is_min) {
                r = is_min ? minimize_over(obj, poly, warm_i, inner_tol, 300, multistart)
                           : maximize_over(obj, poly, warm_i, inner_tol, 300, multistart);
                if (!r.converged) {
                    // rare slow point: retry with the full start set and a
                    // bigger budget before reporting failure
                    r = is_min ? minimize_over(obj, poly, warm_i, inner_tol, 3000, true)
                               : maximize_over(obj, poly, warm_i, inner_tol, 3000, true);
                }
            };
            if (gamma == 1.0) {
                // E[J(S')] does not depend on omega; the control only enters
                // through the expected log return.
                const double wk = std::pow(params.delta, params.N - phase_k - 1) /
                                  (1.0 - std::pow(params.delta, params.N));
                const auto obj = [&](const std::vector<double>& x) {
                    double acc = 0.0;
                    for (std::size_t j = 0; j < m; ++j) {
                        const double rp = rf + x[0] * em[j] + x[1] * ea[j] + x[2] * eb[j];
                        if (!(rp > 0.0)) return std::numeric_limits<double>::quiet_NaN();
                        acc += w[j] * std::log(rp);
                    }
                    return acc;
                };
                optimize(obj, false);
                out.values[i] = params.delta * (jconst + wk * r.value);
            } else if (gamma == 2.0) {
                const auto obj = [&](const std::vector<double>& x) {
                    double acc = 0.0;
                    for (std::size_t j = 0; j < m; ++j) {
                        const double rp = rf + x[0] * em[j] + x[1] * ea[j] + x[2] * eb[j];
                        if (!(rp > 0.0)) return std::numeric_limits<double>::quiet_NaN();
                        acc += cj[j] / rp;
                    }
                    return acc;
                };
                optimize(obj, true);
                out.values[i] = params.delta * r.value;
            } else {
                const double expo = 1.0 - gamma;
                const auto obj = [&](const std::vector<double>& x) {
                    double acc = 0.0;
                    for (std::size_t j = 0; j < m; ++j) {
                        const double rp = rf + x[0] * em[j] + x[1] * ea[j] + x[2] * eb[j];
                        if (!(rp > 0.0)) return std::numeric_limits<double>::quiet_NaN();
                        acc += cj[j] * std::pow(rp, expo);
                    }
                    return acc;
                };
                optimize(obj, gamma > 1.0);
                out.values[i] = params.delta * r.value;
            }
            out.omega[i] = {r.x[0], r.x[1], r.x[2]};
            if (!r.converged) failed[i] = 1;
        },
        threads);

    for (std::size_t i = 0; i < n; ++i) {
        if (failed[i]) {
            std::ostringstream os;
            os << "apply_portfolio_operator: omega search did not converge at grid index " << i;
            throw numerical_error(os.str());
        }
    }
    return out;
}

}  // namespace detail

// Public single-application form. v_next is the next-phase slice on `grid`.
inline OperatorResult apply_portfolio_operator(const std::vector<double>& grid,
                                               const std::vector<double>& v_next,
                                               const MarketParams& params, const PoolSpec& pool,
                                               const std::vector<DisturbanceNode>& nodes,
                                               const ConstraintSet& constraint, int phase_k,
                                               int threads = 0) {
    const TransitionTable tt(grid, nodes, pool);
    return detail::apply_portfolio_impl(v_next, params, pool, tt, constraint, phase_k, nullptr,
                                        true, 1e-11, threads);
}

// Consumption wrap at phase 0. For gamma != 1 the input slice is the image of
// the phase-0 portfolio operator and must be strictly positive; the optimal
// consumption has the closed form c = (1 + a^{1/gamma})^{-1}. For gamma = 1
// the scalar problem is maximized numerically.
inline ConsumptionResult apply_consumption_operator(const std::vector<double>& s0_image,
                                                    const MarketParams& params) {
    ConsumptionResult res;
    const std::size_t n = s0_image.size();
    res.values.resize(n);
    res.consumption.resize(n);
    if (params.gamma == 1.0) {
        const double dn = std::pow(params.delta, params.N);
        const double coef = dn / (1.0 - dn);
        const auto g = [&](double c) { return std::log(c) + coef * std::log(1.0 - c); };
        // strictly concave scalar problem: bisect the decreasing derivative
        // to machine precision, then verify by direct maximization (the
        // objective is flat to rounding within ~1e-9 of the optimum, so the
        // golden-section check runs at that resolution)
        const auto gp = [&](double c) { return 1.0 / c - coef / (1.0 - c); };
        double lo = 1e-12, hi = 1.0 - 1e-12;
        for (int it = 0; it < 200 && (hi - lo) > 1e-16; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (gp(mid) > 0.0)
                lo = mid;
            else
                hi = mid;
        }
        const double c_star = 0.5 * (lo + hi);
        const auto [c_check, g_check] = golden_section_max(g, 1e-12, 1.0 - 1e-12);
        (void)g_check;
        if (std::abs(c_check - c_star) > 1e-6)
            throw numerical_error(
                "apply_consumption_operator: direct maximization disagrees with the "
                "first-order condition");
        res.scalar_argmax = c_star;
        const double g_star = g(c_star);
        for (std::size_t i = 0; i < n; ++i) {
            res.values[i] = s0_image[i] + g_star;
            res.consumption[i] = c_star;
        }
        return res;
    }
    const double inv_gamma = 1.0 / params.gamma;
    for (std::size_t i = 0; i < n; ++i) {
        const double a = s0_image[i];
        if (!(a > 0.0))
            throw std::invalid_argument(
                "apply_consumption_operator: nonpositive transformed operator image");
        const double t = std::pow(a, inv_gamma);
        res.values[i] = std::pow(1.0 + t, params.gamma);
        res.consumption[i] = 1.0 / (1.0 + t);
    }
    return res;
}

// -------------------------------- Fixed point --------------------------------

struct SolveResult {
    ValueFunction vf;
    PolicyTable policy;
    GrowthReport growth;
    int iterations{0};
    double residual{0.0};
    std::vector<double> residual_history;
    double measured_ratio{0.0};   // asymptotic per-iteration residual ratio
    double c_scalar{0.0};         // gamma = 1: computed scalar optimizer
    double c_foc{0.0};            // 1 - delta^N (first-order condition)
    double c_complement{0.0};     // delta^N, complement of the FOC value (diagnostic)

    // Raw per-phase value (utility at unit wealth) regardless of solve form.
    double raw_value(int phase, std::size_t i, const MarketParams& params) const {
        const double v = vf.values[static_cast<std::size_t>(phase)][i];
        if (vf.form == ValueForm::Raw) return v;
        const double dn = std::pow(params.delta, params.N);
        const double shift = (phase == 0 ? 1.0 : 0.0) +
                             std::pow(params.delta, params.N - phase) / (1.0 - dn);
        // for phase 0 the shift equals 1/(1-delta^N)
        return (v - shift) / (1.0 - params.gamma);
    }
};

inline SolveResult solve_fixed_point(const MarketParams& params, const PoolSpec& pool,
                                     const ConstraintSet& constraint,
                                     const SolverConfig& cfg = {}) {
    params.validate();
    if (cfg.grid_size < 5) throw std::invalid_argument("solve_fixed_point: grid too small");

    SolveResult res;
    res.growth = growth_condition_check(params, pool, constraint, cfg.nodes_per_dim);

    const auto grid = linspace(pool.fee.band_lo(), pool.fee.band_hi(),
                               static_cast<std::size_t>(cfg.grid_size));
    const auto nodes = build_quadrature(params, cfg.nodes_per_dim);
    const TransitionTable tt(grid, nodes, pool);

    const int N = params.N;
    const bool raw = params.gamma == 1.0;
    std::vector<std::vector<double>> slices(static_cast<std::size_t>(N));
    std::vector<std::vector<std::array<double, 3>>> omegas(static_cast<std::size_t>(N));
    std::vector<double> v0(grid.size(), raw ? 0.0 : 1.0);

    ConsumptionResult cons;
    std::vector<char> jump_step;  // marks residuals measured right after a jump
    double resid = std::numeric_limits<double>::infinity();
    int iter = 0;
    int last_jump = -1000;
    bool jumped = false;
    for (; iter < cfg.max_iter; ++iter) {
        const bool multistart = iter == 0;
        std::vector<double> cur = v0;
        for (int k = N - 1; k >= 1; --k) {
            OperatorResult step = detail::apply_portfolio_impl(
                cur, params, pool, tt, constraint, k,
                multistart ? nullptr : &omegas[static_cast<std::size_t>(k)], multistart,
                cfg.inner_tol, cfg.threads);
            omegas[static_cast<std::size_t>(k)] = std::move(step.omega);
            slices[static_cast<std::size_t>(k)] = step.values;
            cur = std::move(step.values);
        }
        OperatorResult phase0 = detail::apply_portfolio_impl(
            cur, params, pool, tt, constraint, 0, multistart ? nullptr : &omegas[0], multistart,
            cfg.inner_tol, cfg.threads);
        omegas[0] = std::move(phase0.omega);
        cons = apply_consumption_operator(phase0.values, params);

        resid = sup_norm_diff(cons.values, v0);
        res.residual_history.push_back(resid);
        jump_step.push_back(jumped ? 1 : 0);
        jumped = false;
        const std::vector<double> prev = std::move(v0);
        v0 = cons.values;
        slices[0] = v0;
        if (resid < cfg.tol) {
            ++iter;
            break;
        }

        // Geometric extrapolation toward the fixed point once the residual
        // ratio has stabilized. A plain-step residual below tol remains the
        // only exit, so a poor jump merely restarts the contraction.
        if (cfg.accelerate && iter - last_jump >= 25) {
            const auto& hh = res.residual_history;
            const std::size_t nh = hh.size();
            if (nh >= 3 && !jump_step[nh - 1] && !jump_step[nh - 2]) {
                const double r1 = hh[nh - 1] / hh[nh - 2];
                const double r2 = hh[nh - 2] / hh[nh - 3];
                if (r1 > 0.2 && r1 < 0.99995 && std::abs(r1 / r2 - 1.0) < 0.01) {
                    const double factor = std::min(r1 / (1.0 - r1), 2e4);
                    for (std::size_t i = 0; i < v0.size(); ++i)
                        v0[i] += (v0[i] - prev[i]) * factor;
                    last_jump = iter;
                    jumped = true;
                }
            }
        }
    }
    if (!(resid < cfg.tol)) {
        std::ostringstream os;
        os << "solve_fixed_point: no convergence after " << cfg.max_iter
           << " iterations; last residuals:";
        const std::size_t nh = res.residual_history.size();
        for (std::size_t i = nh > 5 ? nh - 5 : 0; i < nh; ++i)
            os << " " << res.residual_history[i];
        throw numerical_error(os.str());
    }

    res.iterations = iter;
    res.residual = resid;

    // Asymptotic contraction ratio: least-squares slope of log(residual) over
    // the tail, skipping jump steps and the region where rounding noise
    // dominates.
    {
        const auto& h = res.residual_history;
        std::vector<std::pair<double, double>> pts;
        for (std::size_t i = 0; i < h.size(); ++i) {
            if (h[i] > 1e4 * cfg.tol || h[i] <= 0.0) continue;
            if (jump_step[i] || (i + 1 < jump_step.size() && jump_step[i + 1])) continue;
            pts.emplace_back(static_cast<double>(i), std::log(h[i]));
        }
        if (pts.size() >= 5) {
            double sx = 0, sy = 0, sxx = 0, sxy = 0;
            for (auto& p : pts) {
                sx += p.first;
                sy += p.second;
                sxx += p.first * p.first;
                sxy += p.first * p.second;
            }
            const double nn = static_cast<double>(pts.size());
            const double slope = (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
            res.measured_ratio = std::exp(slope);
        } else if (h.size() >= 2 && h[h.size() - 2] > 0.0) {
            res.measured_ratio = h.back() / h[h.size() - 2];
        }
    }

    if (!raw) {
        double vmin = v0[0];
        for (double v : v0) vmin = std::min(vmin, v);
        if (vmin < 1.0 - 1e-9)
            throw numerical_error("solve_fixed_point: transformed fixed point fell below 1");
    }

    res.vf.grid = grid;
    res.vf.form = raw ? ValueForm::Raw : ValueForm::Transformed;
    res.vf.values = std::move(slices);
    res.policy.omega = std::move(omegas);
    res.policy.consumption = cons.consumption;
    res.c_scalar = cons.scalar_argmax;
    res.c_foc = 1.0 - std::pow(params.delta, params.N);
    res.c_complement = std::pow(params.delta, params.N);
    return res;
}

}  // namespace ammlab
