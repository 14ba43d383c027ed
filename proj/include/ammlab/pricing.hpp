// Pricing-function abstraction for two-asset pools, the no-trade band, and
// the optimal-trade solvers (CGMMM closed forms and the generic root-finding
// route that works for any admissible pricing function).
//
// Conventions: s denotes the ratio of the pool's marginal exchange rate for
// asset A to the exchange rate believed by the trading party. Trades are
// expressed as fractions of the pre-trade deposits; positive = withdrawn.
#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

#include "ammlab/common.hpp"

namespace ammlab {

// ------------------------------- Fee & band ---------------------------------

struct FeeRate {
    double value{0.0};

    FeeRate() = default;
    explicit FeeRate(double f) : value(f) {
        if (!(f >= 0.0) || !std::isfinite(f))
            throw std::invalid_argument("FeeRate: fee must be finite and >= 0");
    }

    double band_lo() const { return 1.0 / (1.0 + value); }
    double band_hi() const { return 1.0 + value; }
    // Closed band; boundary values count as inside.
    bool in_band(double s) const { return s >= band_lo() && s <= band_hi(); }
};

enum class PricingKind { CGMMM, Custom };

// AMM design pair: weight of asset A and the unit trading fee.
struct PoolSpec {
    double eta{0.5};
    FeeRate fee{};
    PricingKind kind{PricingKind::CGMMM};

    PoolSpec() = default;
    PoolSpec(double eta_, double fee_) : eta(eta_), fee(fee_) {
        if (!(eta > 0.0 && eta < 1.0))
            throw std::invalid_argument("PoolSpec: eta must lie in (0,1)");
    }
    // Dollar weight ratio of asset A over asset B implied by the pool.
    double weight_ratio() const { return eta / (1.0 - eta); }
};

// ------------------------------ Trade fractions -----------------------------

struct TradeFractions {
    double dA{0.0};  // fraction of the pool's asset-A deposit withdrawn
    double dB{0.0};

    bool no_trade() const { return dA == 0.0 && dB == 0.0; }
};

// ------------------------------ Pricing function ----------------------------

// Level function F and marginal-rate function G. The CGMMM kind carries the
// closed forms; a Custom kind wraps user-supplied callables and is sanity
// checked against the admissibility axioms on a coarse grid at construction.
class PricingFunction {
public:
    using LevelFn = std::function<double(double, double)>;
    using RateFn = std::function<double(double)>;

    static PricingFunction cgmmm(double eta) {
        if (!(eta > 0.0 && eta < 1.0))
            throw std::invalid_argument("PricingFunction: CGMMM weight must lie in (0,1)");
        PricingFunction pf;
        pf.kind_ = PricingKind::CGMMM;
        pf.eta_ = eta;
        return pf;
    }

    static PricingFunction custom(LevelFn level, RateFn rate) {
        PricingFunction pf;
        pf.kind_ = PricingKind::Custom;
        pf.level_ = std::move(level);
        pf.rate_ = std::move(rate);
        pf.validate_custom();
        return pf;
    }

    PricingKind kind() const { return kind_; }
    double eta() const { return eta_; }

    double level(double x, double y) const {
        if (kind_ == PricingKind::CGMMM)
            return std::pow(x, eta_) * std::pow(y, 1.0 - eta_);
        return level_(x, y);
    }

    double rate(double z) const {
        if (kind_ == PricingKind::CGMMM) return eta_ / ((1.0 - eta_) * z);
        return rate_(z);
    }

    // Numerically inverts G by bracketing bisection; G is strictly decreasing
    // with full range (0, inf), so a bracket always exists.
    double rate_inverse(double target) const {
        if (!(target > 0.0))
            throw std::domain_error("PricingFunction: rate_inverse target must be positive");
        double lo = 1.0, hi = 1.0;
        int guard = 0;
        while (rate(lo) < target) {
            lo *= 0.5;
            if (++guard > 600) throw numerical_error("rate_inverse: no lower bracket");
        }
        guard = 0;
        while (rate(hi) > target) {
            hi *= 2.0;
            if (++guard > 600) throw numerical_error("rate_inverse: no upper bracket");
        }
        for (int it = 0; it < 200 && (hi - lo) > 1e-15 * hi; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (rate(mid) > target)
                lo = mid;
            else
                hi = mid;
        }
        return 0.5 * (lo + hi);
    }

private:
    PricingFunction() = default;

    void validate_custom() const {
        // G strictly decreasing on a 64-point log grid.
        double prev = rate_(1e-3);
        if (!std::isfinite(prev)) throw std::invalid_argument("custom pricing: G not finite");
        for (int i = 1; i < 64; ++i) {
            const double z = 1e-3 * std::pow(1e6, i / 63.0);
            const double g = rate_(z);
            if (!(g < prev))
                throw std::invalid_argument("custom pricing: G must be strictly decreasing");
            prev = g;
        }
        // F strictly increasing in each argument on a few samples.
        for (double x : {0.5, 1.0, 2.0}) {
            for (double y : {0.5, 1.0, 2.0}) {
                if (!(level_(x * 1.01, y) > level_(x, y)) || !(level_(x, y * 1.01) > level_(x, y)))
                    throw std::invalid_argument("custom pricing: F must be strictly increasing");
            }
        }
        // Homothety axiom: level sets map onto level sets under scaling.
        // Build a level pair, then compare after scaling by sampled c.
        const double fref = level_(1.0, 1.0);
        double lo = 1e-6, hi = 1.0;
        while (level_(hi, 2.0) < fref) hi *= 2.0;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (level_(mid, 2.0) < fref)
                lo = mid;
            else
                hi = mid;
        }
        const double xprime = 0.5 * (lo + hi);
        for (double c : {0.5, 2.0, 3.0}) {
            const double lhs = level_(c, c);
            const double rhs = level_(c * xprime, 2.0 * c);
            const double scale = std::max({1.0, std::abs(lhs), std::abs(rhs)});
            if (std::abs(lhs - rhs) > 1e-6 * scale)
                throw std::invalid_argument("custom pricing: scaling axiom violated");
        }
    }

    PricingKind kind_{PricingKind::CGMMM};
    double eta_{0.5};
    LevelFn level_;
    RateFn rate_;
};

// ------------------------------ Marginal rate -------------------------------

// Marginal exchange rate of acquiring asset A, G(y^A / y^B).
inline double marginal_rate(const PricingFunction& pf, double deposit_ratio) {
    if (!(deposit_ratio > 0.0) || !std::isfinite(deposit_ratio))
        throw std::domain_error("marginal_rate: deposit ratio must be positive");
    return pf.rate(deposit_ratio);
}

// ------------------------- CGMMM closed-form solvers -------------------------

// Optimal trade fractions (phi-bar^A, phi-bar^B) as a function of the
// pre-trade rate ratio s. No trade when s lies in [1/(1+f), 1+f].
inline TradeFractions solve_trade_cgmmm(double s, double eta, FeeRate fee) {
    if (!(s > 0.0) || !std::isfinite(s))
        throw std::domain_error("solve_trade_cgmmm: ratio must be positive");
    const double f = fee.value;
    if (s < fee.band_lo()) {
        const double u = s * (1.0 + f);
        return {1.0 - std::pow(u, 1.0 - eta), 1.0 - std::pow(u, -eta)};
    }
    if (s > fee.band_hi()) {
        const double u = s / (1.0 + f);
        return {1.0 - std::pow(u, 1.0 - eta), 1.0 - std::pow(u, -eta)};
    }
    return {0.0, 0.0};
}

// Post-trade deposit multipliers (phi-bar-dep^A, phi-bar-dep^B); the fee is
// credited to the deposited leg, so the level of F grows on every trade.
inline std::pair<double, double> post_trade_deposit_factors(double s, double eta, FeeRate fee) {
    if (!(s > 0.0) || !std::isfinite(s))
        throw std::domain_error("post_trade_deposit_factors: ratio must be positive");
    const double f = fee.value;
    if (s < fee.band_lo()) {
        const double u = s * (1.0 + f);
        return {std::pow(u, 1.0 - eta), (1.0 + f) * std::pow(u, -eta) - f};
    }
    if (s > fee.band_hi()) {
        const double u = s / (1.0 + f);
        return {(1.0 + f) * std::pow(u, 1.0 - eta) - f, std::pow(u, -eta)};
    }
    return {1.0, 1.0};
}

// One-trade transition of the rate ratio: identity on the band, strictly
// inside the band otherwise (the fee deposit moves the post-trade rate off
// the band boundary).
inline double ratio_transition(double s, double eta, FeeRate fee) {
    if (!(s > 0.0) || !std::isfinite(s))
        throw std::domain_error("ratio_transition: ratio must be positive");
    const double f = fee.value;
    if (s < fee.band_lo()) {
        const double u = s * (1.0 + f);
        return (1.0 + f * (1.0 - std::pow(u, eta))) / (1.0 + f);
    }
    if (s > fee.band_hi()) {
        const double u = s / (1.0 + f);
        return (1.0 + f) / (1.0 + f * (1.0 - std::pow(u, eta - 1.0)));
    }
    return s;
}

// ----------------------------- Generic solver --------------------------------

// Optimal trade for any admissible pricing function, via the single-variable
// reduction: eliminate d^A with the first-order relation, solve d^B from the
// level equation by bracketing bisection, then recover d^A. Residuals of both
// defining equations are enforced below 1e-10.
inline TradeFractions solve_trade_generic(const PricingFunction& pf, double belief_ratio,
                                          double deposit_ratio, FeeRate fee) {
    if (!(belief_ratio > 0.0) || !(deposit_ratio > 0.0))
        throw std::domain_error("solve_trade_generic: ratios must be positive");
    const double alpha = belief_ratio;
    const double beta = deposit_ratio;
    const double f = fee.value;
    const double s = pf.rate(beta) / alpha;
    if (s >= fee.band_lo() && s <= fee.band_hi()) return {0.0, 0.0};

    const bool acquire_a = s < fee.band_lo();
    const double w = acquire_a ? pf.rate_inverse(alpha / (1.0 + f))
                               : pf.rate_inverse(alpha * (1.0 + f));
    const double f_target = pf.level(beta, 1.0);
    const auto residual = [&](double db) { return pf.level(w * (1.0 - db), 1.0 - db) - f_target; };

    // residual(t) is strictly decreasing in t; bracket the sign change.
    double lo, hi;
    if (acquire_a) {
        // d^B < 0: expand downward geometrically until residual turns positive.
        hi = 0.0;
        lo = -1.0;
        int guard = 0;
        while (residual(lo) < 0.0) {
            lo *= 2.0;
            if (++guard > 120) {
                std::ostringstream os;
                os << "solve_trade_generic: no bracket for d^B in [" << lo << ", 0]";
                throw numerical_error(os.str());
            }
        }
    } else {
        // d^B in (0,1): expand toward 1 until residual turns negative.
        lo = 0.0;
        hi = 0.5;
        int guard = 0;
        while (residual(hi) > 0.0) {
            hi = 1.0 - 0.5 * (1.0 - hi);
            if (++guard > 100) {
                std::ostringstream os;
                os << "solve_trade_generic: no bracket for d^B in [0, " << hi << "]";
                throw numerical_error(os.str());
            }
        }
    }
    for (int it = 0; it < 200 && (hi - lo) > 1e-12; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (residual(mid) > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    const double db = 0.5 * (lo + hi);
    const double da = 1.0 - (w / beta) * (1.0 - db);

    const double level_res = std::abs(pf.level(beta * (1.0 - da), 1.0 - db) - f_target) /
                             std::max(1.0, std::abs(f_target));
    const double rate_res =
        std::abs((1.0 - da) / (1.0 - db) - w / beta) / std::max(1.0, w / beta);
    if (level_res > 1e-10 || rate_res > 1e-10)
        throw numerical_error("solve_trade_generic: residual above 1e-10 after bisection");
    return {da, db};
}

// -------------------------------- Slippage -----------------------------------

enum class Side { A, B };

// Relative slippage of a finite trade: excess of the average exchange rate
// paid over the marginal rate, as a fraction of the marginal rate. Vanishes
// as the trade size goes to zero.
inline double slippage(const PricingFunction& pf, double trade_fraction, Side side) {
    if (!(trade_fraction > 0.0 && trade_fraction < 1.0))
        throw std::domain_error("slippage: trade fraction must lie in (0,1)");
    if (pf.kind() != PricingKind::CGMMM)
        throw std::invalid_argument("slippage: closed form available for CGMMM only");
    const double eta = pf.eta();
    const double d = trade_fraction;
    if (side == Side::A)
        return ((1.0 - eta) / eta) * (std::pow(1.0 - d, eta / (eta - 1.0)) - 1.0) / d - 1.0;
    return (eta / (1.0 - eta)) * (std::pow(1.0 - d, (eta - 1.0) / eta) - 1.0) / d - 1.0;
}

}  // namespace ammlab
