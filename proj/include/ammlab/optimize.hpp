// Constrained optimization over the portfolio polytopes used throughout:
// every feasible set here has the form { w : w >= lb componentwise,
// sum(w) <= sum_ub }, which after shifting is a scaled simplex. Projection is
// exact; the optimizer is projected gradient with central-difference
// gradients, backtracking line search, and deterministic multi-starts.
#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "ammlab/common.hpp"

namespace ammlab {

enum class ConstraintKind { NoShort, ShortOK };

struct Polytope {
    std::vector<double> lb;
    double sum_ub{1.0};

    double tau() const {
        return sum_ub - std::accumulate(lb.begin(), lb.end(), 0.0);
    }

    bool contains(const std::vector<double>& w, double tol = 1e-9) const {
        double sum = 0.0;
        for (std::size_t i = 0; i < lb.size(); ++i) {
            if (w[i] < lb[i] - tol) return false;
            sum += w[i];
        }
        return sum <= sum_ub + tol;
    }

    // Euclidean projection: clamp into the shifted positive orthant; if the
    // sum cap still binds, project onto the simplex face.
    std::vector<double> project(std::vector<double> w) const {
        const std::size_t d = lb.size();
        std::vector<double> psi(d);
        for (std::size_t i = 0; i < d; ++i) psi[i] = w[i] - lb[i];
        double clipped_sum = 0.0;
        for (std::size_t i = 0; i < d; ++i) clipped_sum += std::max(psi[i], 0.0);
        const double t = tau();
        if (clipped_sum <= t) {
            for (std::size_t i = 0; i < d; ++i) w[i] = std::max(psi[i], 0.0) + lb[i];
            return w;
        }
        std::vector<double> sorted = psi;
        std::sort(sorted.begin(), sorted.end(), std::greater<double>());
        double cum = 0.0, theta = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            cum += sorted[k];
            const double cand = (cum - t) / static_cast<double>(k + 1);
            if (k + 1 == d || sorted[k + 1] <= cand) {
                theta = cand;
                break;
            }
        }
        for (std::size_t i = 0; i < d; ++i) w[i] = std::max(psi[i] - theta, 0.0) + lb[i];
        return w;
    }

    // Deterministic start set: every vertex of the shifted simplex plus the
    // vertex centroid.
    std::vector<std::vector<double>> starts() const {
        const std::size_t d = lb.size();
        const double t = tau();
        std::vector<std::vector<double>> s;
        s.push_back(lb);
        for (std::size_t i = 0; i < d; ++i) {
            std::vector<double> v = lb;
            v[i] += t;
            s.push_back(v);
        }
        std::vector<double> centroid = lb;
        for (std::size_t i = 0; i < d; ++i)
            centroid[i] += t / static_cast<double>(d + 1);
        s.push_back(centroid);
        return s;
    }
};

struct ConstraintSet {
    ConstraintKind kind{ConstraintKind::NoShort};

    // Full portfolio polytope over (w^M, w^A, w^B).
    Polytope polytope() const {
        if (kind == ConstraintKind::NoShort) return {{0.0, 0.0, 0.0}, 1.0};
        return {{0.0, -1.0, -1.0}, 2.0};
    }
    // CEX-only slice over (w^A, w^B) with w^M pinned at zero.
    Polytope cex_polytope() const {
        if (kind == ConstraintKind::NoShort) return {{0.0, 0.0}, 1.0};
        return {{-1.0, -1.0}, 2.0};
    }
};

struct OptResult {
    std::vector<double> x;
    double value{0.0};
    int iterations{0};
    bool converged{false};
};

namespace detail {

constexpr double kBadValue = 1e300;

// Sign convention: we always minimize; callers wrap maximization by negation.
template <class F>
OptResult pg_minimize_from(const F& obj, const Polytope& poly, std::vector<double> x,
                           double rel_tol, int max_iter) {
    const std::size_t d = x.size();
    x = poly.project(std::move(x));
    double fx = obj(x);
    OptResult res{x, fx, 0, false};
    if (!std::isfinite(fx)) return res;

    const double h = 1e-6;
    const double diam = std::max(poly.tau(), 1e-6);
    double step = 1.0;
    int small_gains = 0;
    std::vector<double> grad(d), prev_grad(d), prev_x(d), trial(d);
    bool have_prev = false;
    for (int it = 0; it < max_iter; ++it) {
        res.iterations = it + 1;
        // Central differences, one-sided fallback when a side is undefined.
        for (std::size_t i = 0; i < d; ++i) {
            const double save = x[i];
            x[i] = save + h;
            const double fp = obj(x);
            x[i] = save - h;
            const double fm = obj(x);
            x[i] = save;
            if (std::isfinite(fp) && std::isfinite(fm))
                grad[i] = (fp - fm) / (2.0 * h);
            else if (std::isfinite(fp))
                grad[i] = (fp - fx) / h;
            else if (std::isfinite(fm))
                grad[i] = (fx - fm) / h;
            else
                grad[i] = 0.0;
        }
        double gnorm = 0.0;
        for (double g : grad) gnorm += g * g;
        gnorm = std::sqrt(gnorm);
        if (gnorm == 0.0) {
            res.converged = true;
            break;
        }

        // Barzilai-Borwein trial step, clipped to the polytope scale; plain
        // growth otherwise.
        const double step_max = 8.0 * diam / gnorm;
        double trial_step = std::min(step * 4.0, step_max);
        if (have_prev) {
            double sy = 0.0, yy = 0.0;
            for (std::size_t i = 0; i < d; ++i) {
                const double sx = x[i] - prev_x[i];
                const double yg = grad[i] - prev_grad[i];
                sy += sx * yg;
                yy += yg * yg;
            }
            if (sy > 0.0 && yy > 0.0) {
                const double bb = sy / yy;
                if (std::isfinite(bb)) trial_step = std::min(std::max(bb, 1e-14), step_max);
            }
        }
        prev_x = x;
        prev_grad = grad;
        have_prev = true;
        step = trial_step;

        bool improved = false;
        double gain = 0.0;
        for (int ls = 0; ls < 60; ++ls) {
            double move2 = 0.0;
            for (std::size_t i = 0; i < d; ++i) trial[i] = x[i] - step * grad[i];
            trial = poly.project(trial);
            for (std::size_t i = 0; i < d; ++i) {
                const double dxi = trial[i] - x[i];
                move2 += dxi * dxi;
            }
            if (move2 == 0.0) break;  // projection pinned: stationary
            const double ft = obj(trial);
            // Armijo with the gradient mapping: reject big moves with
            // disproportionately small gains.
            if (std::isfinite(ft) && fx - ft >= 1e-4 * move2 / step) {
                gain = fx - ft;
                x = trial;
                fx = ft;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if (!improved) {
            res.converged = true;  // stationary within line-search resolution
            break;
        }
        if (gain <= rel_tol * std::max(1.0, std::abs(fx))) {
            if (++small_gains >= 2) {
                res.converged = true;
                break;
            }
        } else {
            small_gains = 0;
        }
    }
    res.x = x;
    res.value = fx;
    return res;
}

}  // namespace detail

// Minimizes obj over the polytope from the given warm start (if any) plus the
// deterministic start set, returning the best run.
template <class F>
OptResult minimize_over(const F& obj, const Polytope& poly,
                        const std::vector<double>* warm = nullptr, double rel_tol = 1e-9,
                        int max_iter = 300, bool multistart = true) {
    OptResult best;
    best.value = detail::kBadValue;
    auto consider = [&](const std::vector<double>& start) {
        OptResult r = detail::pg_minimize_from(obj, poly, start, rel_tol, max_iter);
        if (std::isfinite(r.value) && r.value < best.value) best = std::move(r);
    };
    if (warm) consider(*warm);
    if (multistart || !warm)
        for (const auto& s : poly.starts()) consider(s);
    if (!(best.value < detail::kBadValue))
        throw numerical_error("minimize_over: objective not finite at any start");
    return best;
}

template <class F>
OptResult maximize_over(const F& obj, const Polytope& poly,
                        const std::vector<double>* warm = nullptr, double rel_tol = 1e-9,
                        int max_iter = 300, bool multistart = true) {
    auto neg = [&](const std::vector<double>& w) {
        const double v = obj(w);
        return std::isfinite(v) ? -v : v;
    };
    OptResult r = minimize_over(neg, poly, warm, rel_tol, max_iter, multistart);
    r.value = -r.value;
    return r;
}

// ----------------------------- Scalar maximizer ------------------------------

// Golden-section search for a unimodal maximum on (a, b). Comparisons run in
// the callable's own value type, so an extended-precision objective keeps its
// extra resolution.
template <class F>
auto golden_section_max(const F& f, double a, double b, double xtol = 1e-12,
                        int max_iter = 200) {
    const double invphi = 0.6180339887498948482;
    double x1 = b - invphi * (b - a);
    double x2 = a + invphi * (b - a);
    auto f1 = f(x1);
    auto f2 = f(x2);
    for (int it = 0; it < max_iter && (b - a) > xtol; ++it) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + invphi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - invphi * (b - a);
            f1 = f(x1);
        }
    }
    return (f1 > f2) ? std::make_pair(x1, f1) : std::make_pair(x2, f2);
}

}  // namespace ammlab
