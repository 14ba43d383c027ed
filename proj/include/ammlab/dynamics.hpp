// One-period evolution of a CGMMM pool in ratio space: liquidity-trader
// trade, pre-shock arbitrage, price shock, post-shock arbitrage. Produces the
// next rate ratio, the four multiplicative components of the LP's pool
// return, and per-period fee/arbitrage diagnostics.
//
// Everything here is a function of the rate ratio s alone; the absolute
// deposit level and the fundamental rate drop out under CGMMM. Tests carry an
// absolute-deposit reference implementation to pin that reduction down.
#pragma once

#include <cmath>
#include <stdexcept>

#include "ammlab/market.hpp"
#include "ammlab/pricing.hpp"

namespace ammlab {

struct IntermediateRatios {
    double s0{1.0};  // after LP rebalancing (ratio-neutral, so the entering s)
    double s1{1.0};  // after the liquidity-trader trade
    double s2{1.0};  // after pre-shock arbitrage
    double s3{1.0};  // after the shock and post-shock arbitrage
};

struct PeriodOutcome {
    double s_next{1.0};
    double rm_over_rb{1.0};       // pool gross return divided by RB
    double r1{1.0}, r2{1.0}, r3{1.0}, r4{1.0};  // r1*r2*r3*r4 = R^M
    double fee_revenue_frac{0.0};  // LP fee revenue per unit pool value (step 2)
    double arb_loss_frac{0.0};     // LP loss to arbitrageurs per unit pool value
    IntermediateRatios ratios{};
};

namespace detail {

inline double require_in_band(double s, const FeeRate& fee, const char* who) {
    const double lo = fee.band_lo();
    const double hi = fee.band_hi();
    const double grace = 16.0 * std::numeric_limits<double>::epsilon();
    if (s < lo * (1.0 - grace) || s > hi * (1.0 + grace))
        throw std::domain_error(std::string(who) + ": ratio outside the no-trade band");
    return std::min(std::max(s, lo), hi);
}

// Arbitrageur profit per unit pool value, valued at the arbitrageur's
// (correct) prices, for a pre-trade ratio u against those prices.
inline double arb_profit_per_value(double u, const PoolSpec& pool) {
    const TradeFractions t = solve_trade_cgmmm(u, pool.eta, pool.fee);
    if (t.no_trade()) return 0.0;
    const double f = pool.fee.value;
    const double e = pool.weight_ratio();
    const double legA = (t.dA < 0.0 ? 1.0 + f : 1.0) * t.dA;
    const double legB = (t.dB < 0.0 ? 1.0 + f : 1.0) * t.dB;
    return (e * legA + u * legB) / (e + u);
}

}  // namespace detail

// LP's loss to the post-shock arbitrageur: the fee-inclusive optimal-trade
// profit at the updated prices, per unit of the pre-shock pool value.
inline double il_exact(double s2, double RA, double RB, const PoolSpec& pool) {
    if (!(RA > 0.0 && RB > 0.0)) throw std::domain_error("il_exact: returns must be positive");
    s2 = detail::require_in_band(s2, pool.fee, "il_exact");
    const double u = s2 * RB / RA;
    const TradeFractions t = solve_trade_cgmmm(u, pool.eta, pool.fee);
    if (t.no_trade()) return 0.0;
    const double f = pool.fee.value;
    const double e = pool.weight_ratio();
    const double legA = (t.dA < 0.0 ? 1.0 + f : 1.0) * t.dA;
    const double legB = (t.dB < 0.0 ? 1.0 + f : 1.0) * t.dB;
    return (RA * e * legA + RB * s2 * legB) / (e + s2);
}

// LP's fee revenue from one liquidity-trader trade at belief multiplier I,
// per unit pool value at the trade; zero when s/I stays in the band.
inline double fee_exact(double s, double I, const PoolSpec& pool) {
    if (!(I > 0.0)) throw std::domain_error("fee_exact: belief multiplier must be positive");
    s = detail::require_in_band(s, pool.fee, "fee_exact");
    const double f = pool.fee.value;
    if (f == 0.0) return 0.0;
    const TradeFractions t = solve_trade_cgmmm(s / I, pool.eta, pool.fee);
    if (t.no_trade()) return 0.0;
    const double e = pool.weight_ratio();
    const double wA = e / (e + s);
    const double wB = s / (e + s);
    double revenue = 0.0;
    if (t.dA < 0.0) revenue += f * (-t.dA) * wA;
    if (t.dB < 0.0) revenue += f * (-t.dB) * wB;
    return revenue;
}

// Steps 2-5 for one period. The entering ratio must already lie in the band
// (enter through ratio_transition otherwise).
inline PeriodOutcome step_period(double s, const DisturbanceNode& node, const PoolSpec& pool) {
    if (pool.kind != PricingKind::CGMMM)
        throw std::invalid_argument("step_period: ratio-space dynamics require CGMMM");
    s = detail::require_in_band(s, pool.fee, "step_period");
    const double e = pool.weight_ratio();

    PeriodOutcome out;
    out.ratios.s0 = s;

    // Step 2: liquidity trader at belief ratio z*I, i.e. ratio s/I vs belief.
    double s1 = s;
    if (node.xi == 1) {
        const auto [pa, pb] = post_trade_deposit_factors(s / node.I, pool.eta, pool.fee);
        out.r1 = (e * pa + s * pb) / (e + s);
        s1 = s * pb / pa;
        out.fee_revenue_frac = fee_exact(s, node.I, pool);
    }
    out.ratios.s1 = s1;

    // Step 3: pre-shock arbitrage at the current fundamental rate.
    {
        const auto [pa, pb] = post_trade_deposit_factors(s1, pool.eta, pool.fee);
        out.r2 = (e * pa + s1 * pb) / (e + s1);
        out.arb_loss_frac += detail::arb_profit_per_value(s1, pool);
    }
    const double s2 = ratio_transition(s1, pool.eta, pool.fee);
    out.ratios.s2 = s2;

    // Step 4: price shock revalues the pool; the ratio vs the new rate is
    // s2 * RB/RA.
    const double rt = node.RB / node.RA;
    out.r3 = node.RA * (e + s2 * rt) / (e + s2);

    // Step 5: post-shock arbitrage.
    const double u3 = s2 * rt;
    {
        const auto [pa, pb] = post_trade_deposit_factors(u3, pool.eta, pool.fee);
        out.r4 = (e * pa + u3 * pb) / (e + u3);
        out.arb_loss_frac += il_exact(s2, node.RA, node.RB, pool);
    }
    out.ratios.s3 = ratio_transition(u3, pool.eta, pool.fee);
    out.s_next = out.ratios.s3;
    out.rm_over_rb = out.r1 * out.r2 * out.r3 * out.r4 / node.RB;
    return out;
}

// ------------------------ Net-profit condition (design) -----------------------

struct NetProfitReport {
    double lhs{0.0};   // expected fee revenue rate from liquidity traders
    double rhs{0.0};   // expected quadratic arbitrage-loss rate
    bool invest{false};
};

// Evaluates both sides of the approximate participation condition: the LP is
// willing to provide liquidity iff the expected fee revenue exceeds the
// expected quadratic loss to arbitrageurs, both per unit pool value.
inline NetProfitReport net_profit_condition(const MarketParams& params, const PoolSpec& pool,
                                            int nodes_per_dim = 7) {
    const auto nodes = build_quadrature(params, nodes_per_dim);
    const double f = pool.fee.value;
    const double lo = pool.fee.band_lo();
    const double hi = pool.fee.band_hi();
    NetProfitReport rep;
    for (const auto& n : nodes) {
        if (n.xi == 1 && (n.I < lo || n.I > hi))
            rep.lhs += n.weight * f * std::abs(n.I - 1.0);
        const double rtilde = n.RA / n.RB;
        if (rtilde < lo || rtilde > hi)
            rep.rhs += n.weight * 0.5 * n.RB * (rtilde - 1.0) * (rtilde - 1.0);
    }
    rep.invest = rep.lhs > rep.rhs;
    return rep;
}

}  // namespace ammlab
