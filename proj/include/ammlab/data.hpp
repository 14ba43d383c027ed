// Price-bar ingestion (kline-style delimited files), return-parameter
// estimation for the market model, and plain OLS with classical standard
// errors and Student-t p-values.
#pragma once

#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ammlab {

struct PriceSeries {
    std::vector<long long> timestamps;  // strictly increasing, epoch ms
    std::vector<double> closes;
    std::size_t size() const { return timestamps.size(); }
};

struct KlineSchema {
    bool has_header{false};
    int time_column{0};
    int close_column{4};  // standard 12-column kline layout
    char delimiter{','};
};

inline PriceSeries load_klines(const std::string& path, const KlineSchema& schema = {}) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_klines: cannot open " + path);
    PriceSeries series;
    std::string line;
    std::size_t row = 0;
    const int need = std::max(schema.time_column, schema.close_column) + 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (schema.has_header && row == 1) continue;

        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, schema.delimiter)) cells.push_back(cell);
        if (static_cast<int>(cells.size()) < need)
            throw std::runtime_error("load_klines: row " + std::to_string(row) +
                                     ": expected at least " + std::to_string(need) + " columns");

        char* end = nullptr;
        const std::string& tcell = cells[static_cast<std::size_t>(schema.time_column)];
        const double traw = std::strtod(tcell.c_str(), &end);
        if (end == tcell.c_str() || !std::isfinite(traw))
            throw std::runtime_error("load_klines: row " + std::to_string(row) +
                                     ": unparseable timestamp '" + tcell + "'");
        const std::string& ccell = cells[static_cast<std::size_t>(schema.close_column)];
        const double close = std::strtod(ccell.c_str(), &end);
        if (end == ccell.c_str() || !std::isfinite(close))
            throw std::runtime_error("load_klines: row " + std::to_string(row) +
                                     ": unparseable close '" + ccell + "'");
        if (!(close > 0.0))
            throw std::runtime_error("load_klines: row " + std::to_string(row) +
                                     ": close must be positive");
        const long long ts = std::llround(traw);
        if (!series.timestamps.empty() && ts <= series.timestamps.back())
            throw std::runtime_error("load_klines: row " + std::to_string(row) +
                                     ": timestamps must be strictly increasing");
        series.timestamps.push_back(ts);
        series.closes.push_back(close);
    }
    return series;
}

// Generic delimited numeric table, row-major. Every row must parse fully.
inline std::vector<std::vector<double>> load_table(const std::string& path, bool has_header,
                                                   char delimiter = ',') {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_table: cannot open " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (has_header && row == 1) continue;
        std::vector<double> vals;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, delimiter)) {
            char* end = nullptr;
            const double v = std::strtod(cell.c_str(), &end);
            if (end == cell.c_str() || !std::isfinite(v))
                throw std::runtime_error("load_table: row " + std::to_string(row) +
                                         ": unparseable value '" + cell + "'");
            vals.push_back(v);
        }
        if (!rows.empty() && vals.size() != rows.front().size())
            throw std::runtime_error("load_table: row " + std::to_string(row) +
                                     ": ragged row width");
        rows.push_back(std::move(vals));
    }
    return rows;
}

// ------------------------------- Estimation ----------------------------------

struct EstimatedParams {
    double muA{0.0}, muB{0.0};
    double sigmaA{0.0}, sigmaB{0.0};
    double rho{0.0};
    double sigma{0.0};  // exchange-rate volatility
    std::size_t bars{0};
    bool degenerate{false};  // a series had zero variance
};

// Inner-joins the two series on timestamps, then estimates per-bar log-return
// moments (sample standard deviations, Pearson correlation) and the
// exchange-rate volatility identity.
inline EstimatedParams estimate_params(const PriceSeries& a, const PriceSeries& b) {
    std::vector<double> pa, pb;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a.timestamps[i] == b.timestamps[j]) {
            pa.push_back(a.closes[i]);
            pb.push_back(b.closes[j]);
            ++i;
            ++j;
        } else if (a.timestamps[i] < b.timestamps[j]) {
            ++i;
        } else {
            ++j;
        }
    }
    if (pa.size() < 30)
        throw std::runtime_error("estimate_params: need at least 30 common bars, got " +
                                 std::to_string(pa.size()));

    const std::size_t n = pa.size() - 1;
    std::vector<double> ra(n), rb(n);
    for (std::size_t k = 0; k < n; ++k) {
        ra[k] = std::log(pa[k + 1] / pa[k]);
        rb[k] = std::log(pb[k + 1] / pb[k]);
    }
    auto mean = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x;
        return s / static_cast<double>(v.size());
    };
    EstimatedParams est;
    est.bars = pa.size();
    est.muA = mean(ra);
    est.muB = mean(rb);
    double va = 0.0, vb = 0.0, cab = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        va += (ra[k] - est.muA) * (ra[k] - est.muA);
        vb += (rb[k] - est.muB) * (rb[k] - est.muB);
        cab += (ra[k] - est.muA) * (rb[k] - est.muB);
    }
    const double denom = static_cast<double>(n - 1);
    va /= denom;
    vb /= denom;
    cab /= denom;
    est.sigmaA = std::sqrt(va);
    est.sigmaB = std::sqrt(vb);
    if (est.sigmaA == 0.0 || est.sigmaB == 0.0) {
        est.rho = 0.0;
        est.degenerate = true;
    } else {
        est.rho = cab / (est.sigmaA * est.sigmaB);
        est.rho = std::min(1.0, std::max(-1.0, est.rho));
    }
    const double v = est.sigmaA * est.sigmaA + est.sigmaB * est.sigmaB -
                     2.0 * est.rho * est.sigmaA * est.sigmaB;
    est.sigma = std::sqrt(std::max(v, 0.0));
    return est;
}

// ---------------------------------- OLS --------------------------------------

struct RegressionResult {
    std::vector<double> coefficients;  // intercept first
    std::vector<double> std_errors;
    std::vector<double> t_stats;
    std::vector<double> p_values;  // two-sided, Student-t with n-k-1 dof
    double r_squared{0.0};
    std::size_t n{0};
};

namespace detail {

// Cholesky solve of the (k x k) normal equations; returns false on a
// non-positive pivot (rank deficiency).
inline bool cholesky_solve(std::vector<std::vector<double>>& g,
                           std::vector<std::vector<double>>& rhs) {
    const std::size_t k = g.size();
    for (std::size_t c = 0; c < k; ++c) {
        double piv = g[c][c];
        for (std::size_t r = 0; r < c; ++r) piv -= g[c][r] * g[c][r];
        if (!(piv > 1e-12 * std::max(1.0, std::abs(g[c][c])))) return false;
        g[c][c] = std::sqrt(piv);
        for (std::size_t r = c + 1; r < k; ++r) {
            double v = g[r][c];
            for (std::size_t q = 0; q < c; ++q) v -= g[r][q] * g[c][q];
            g[r][c] = v / g[c][c];
        }
    }
    for (auto& col : rhs) {
        for (std::size_t r = 0; r < k; ++r) {
            double v = col[r];
            for (std::size_t q = 0; q < r; ++q) v -= g[r][q] * col[q];
            col[r] = v / g[r][r];
        }
        for (std::size_t ri = k; ri-- > 0;) {
            double v = col[ri];
            for (std::size_t q = ri + 1; q < k; ++q) v -= g[q][ri] * col[q];
            col[ri] = v / g[ri][ri];
        }
    }
    return true;
}

// Names the first regressor column that is (numerically) in the span of the
// preceding ones, via Gram-Schmidt.
inline std::size_t find_collinear_column(const std::vector<std::vector<double>>& z) {
    const std::size_t k = z.size();
    std::vector<std::vector<double>> basis;
    for (std::size_t c = 0; c < k; ++c) {
        std::vector<double> v = z[c];
        double norm0 = 0.0;
        for (double x : v) norm0 += x * x;
        for (const auto& b : basis) {
            double dot = 0.0;
            for (std::size_t r = 0; r < v.size(); ++r) dot += v[r] * b[r];
            for (std::size_t r = 0; r < v.size(); ++r) v[r] -= dot * b[r];
        }
        double norm = 0.0;
        for (double x : v) norm += x * x;
        if (norm <= 1e-18 * std::max(1.0, norm0)) return c;
        const double inv = 1.0 / std::sqrt(norm);
        for (double& x : v) x *= inv;
        basis.push_back(std::move(v));
    }
    return k;
}

}  // namespace detail

inline RegressionResult ols(const std::vector<double>& y,
                            const std::vector<std::vector<double>>& x_columns) {
    const std::size_t n = y.size();
    const std::size_t k = x_columns.size();
    for (const auto& c : x_columns)
        if (c.size() != n) throw std::invalid_argument("ols: column length mismatch");
    if (n <= k + 1)
        throw std::invalid_argument("ols: need n > k+1 observations");

    // design matrix columns, intercept first
    std::vector<std::vector<double>> z;
    z.emplace_back(n, 1.0);
    for (const auto& c : x_columns) z.push_back(c);
    const std::size_t p = z.size();

    std::vector<std::vector<double>> g(p, std::vector<double>(p, 0.0));
    std::vector<double> zty(p, 0.0);
    for (std::size_t a = 0; a < p; ++a) {
        for (std::size_t b = a; b < p; ++b) {
            double s = 0.0;
            for (std::size_t r = 0; r < n; ++r) s += z[a][r] * z[b][r];
            g[a][b] = g[b][a] = s;
        }
        for (std::size_t r = 0; r < n; ++r) zty[a] += z[a][r] * y[r];
    }

    // solve for coefficients and (Z'Z)^{-1} in one pass
    std::vector<std::vector<double>> rhs(p + 1, std::vector<double>(p, 0.0));
    rhs[0] = zty;
    for (std::size_t c = 0; c < p; ++c) rhs[c + 1][c] = 1.0;
    auto gchol = g;
    if (!detail::cholesky_solve(gchol, rhs)) {
        const std::size_t bad = detail::find_collinear_column(z);
        throw std::invalid_argument(
            "ols: rank-deficient design; column " +
            (bad == 0 ? std::string("intercept") : "x" + std::to_string(bad - 1)) +
            " is collinear");
    }

    RegressionResult res;
    res.n = n;
    res.coefficients = rhs[0];
    double ybar = 0.0;
    for (double v : y) ybar += v;
    ybar /= static_cast<double>(n);
    double ssr = 0.0, sst = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        double fit = 0.0;
        for (std::size_t c = 0; c < p; ++c) fit += res.coefficients[c] * z[c][r];
        ssr += (y[r] - fit) * (y[r] - fit);
        sst += (y[r] - ybar) * (y[r] - ybar);
    }
    res.r_squared = (sst > 0.0) ? 1.0 - ssr / sst : (ssr <= 1e-24 ? 1.0 : 0.0);

    const double dof = static_cast<double>(n - p);
    const double sigma2 = ssr / dof;
    boost::math::students_t_distribution<double> tdist(dof);
    res.std_errors.resize(p);
    res.t_stats.resize(p);
    res.p_values.resize(p);
    for (std::size_t c = 0; c < p; ++c) {
        res.std_errors[c] = std::sqrt(std::max(sigma2 * rhs[c + 1][c], 0.0));
        if (res.std_errors[c] > 0.0) {
            res.t_stats[c] = res.coefficients[c] / res.std_errors[c];
            res.p_values[c] = 2.0 * boost::math::cdf(boost::math::complement(
                                        tdist, std::abs(res.t_stats[c])));
        } else {
            res.t_stats[c] = res.coefficients[c] == 0.0
                                 ? 0.0
                                 : std::numeric_limits<double>::infinity();
            res.p_values[c] = res.coefficients[c] == 0.0 ? 1.0 : 0.0;
        }
    }
    return res;
}

}  // namespace ammlab
