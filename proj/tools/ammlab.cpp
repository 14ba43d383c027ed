// ammlab CLI: solve the LP program, sweep design parameters, estimate market
// parameters from price bars, run regressions, and simulate seeded paths.
//
// Exit codes: 0 success, 2 usage/config error, 3 numerical failure.
#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <random>
#include <sstream>

#include "ammlab/ammlab.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

struct CommonFlags {
    std::string config_path;
    std::string out_dir;
    std::vector<std::string> formats;
    int threads{0};
    std::uint64_t seed{42};
};

ammlab::RunConfig load_run_config(const CommonFlags& flags) {
    ammlab::RunConfig cfg;
    if (!flags.config_path.empty()) cfg = ammlab::load_config(flags.config_path);
    if (!flags.out_dir.empty()) cfg.output.directory = flags.out_dir;
    if (!flags.formats.empty()) {
        cfg.output.csv = cfg.output.json = false;
        for (const auto& f : flags.formats) {
            if (f == "csv")
                cfg.output.csv = true;
            else if (f == "json")
                cfg.output.json = true;
            else
                throw std::invalid_argument("unknown format: " + f);
        }
    }
    if (flags.threads > 0) cfg.solver.threads = flags.threads;
    return cfg;
}

std::vector<double> parse_values(const std::string& csv, const std::string& range) {
    std::vector<double> vals;
    if (!csv.empty()) {
        std::stringstream ss(csv);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            if (tok.empty()) continue;
            vals.push_back(std::stod(tok));
        }
    } else if (!range.empty()) {
        // lo:hi:n inclusive linear range
        double lo, hi;
        int n;
        char c1, c2;
        std::stringstream ss(range);
        if (!(ss >> lo >> c1 >> hi >> c2 >> n) || c1 != ':' || c2 != ':' || n < 1)
            throw std::invalid_argument("range must be lo:hi:n");
        for (int i = 0; i < n; ++i)
            vals.push_back(n == 1 ? lo : lo + (hi - lo) * i / static_cast<double>(n - 1));
    }
    return vals;
}

void ensure_out_dir(const ammlab::RunConfig& cfg) {
    fs::create_directories(cfg.output.directory);
}

std::string out_path(const ammlab::RunConfig& cfg, const std::string& name) {
    return (fs::path(cfg.output.directory) / name).string();
}

int run_solve(const CommonFlags& flags) {
    const ammlab::RunConfig cfg = load_run_config(flags);
    ensure_out_dir(cfg);

    const ammlab::SolveResult sol =
        ammlab::solve_fixed_point(cfg.market, cfg.pool, cfg.constraint, cfg.solver);
    const auto kernel = ammlab::transition_kernel(cfg.market, cfg.pool, sol.vf.grid, 24,
                                                  cfg.solver.threads);
    const auto dist = ammlab::stationary(kernel, sol.vf.grid);

    const std::size_t n = sol.vf.grid.size();
    std::vector<double> v0(n), om(n), oa(n), ob(n);
    for (std::size_t i = 0; i < n; ++i) {
        v0[i] = sol.raw_value(0, i, cfg.market);
        om[i] = sol.policy.omega[0][i][0];
        oa[i] = sol.policy.omega[0][i][1];
        ob[i] = sol.policy.omega[0][i][2];
    }
    const double ev0 = ammlab::stationary_expectation(dist, v0);
    const double eom = ammlab::stationary_expectation(dist, om);
    const double eoa = ammlab::stationary_expectation(dist, oa);
    const double eob = ammlab::stationary_expectation(dist, ob);
    const double ec = ammlab::stationary_expectation(dist, sol.policy.consumption);
    const bool invests = eom > 1e-9;

    json summary;
    summary["expected_v0"] = ev0;
    summary["expected_omegaM"] = eom;
    summary["expected_omegaA"] = eoa;
    summary["expected_omegaB"] = eob;
    summary["expected_consumption"] = ec;
    summary["invests_on_dex"] = invests;
    if (!invests) summary["message"] = "LP does not invest on DEX";
    summary["iterations"] = sol.iterations;
    summary["residual"] = sol.residual;
    summary["growth_satisfied"] = sol.growth.satisfied;
    summary["r_bar"] = sol.growth.r_bar;
    summary["config"] = ammlab::config_to_json(cfg);

    if (cfg.output.json) {
        ammlab::write_text(out_path(cfg, "value_function.json"),
                           ammlab::solve_to_json(sol, cfg.market).dump(2) + "\n");
        ammlab::write_text(out_path(cfg, "summary.json"), summary.dump(2) + "\n");
    }
    if (cfg.output.csv) {
        ammlab::write_stationary_csv(out_path(cfg, "stationary.csv"), dist);
        std::ostringstream os;
        os << "s,v0,omegaM,omegaA,omegaB,consumption\n";
        for (std::size_t i = 0; i < n; ++i) {
            os << std::setprecision(17) << sol.vf.grid[i] << "," << v0[i] << "," << om[i] << ","
               << oa[i] << "," << ob[i] << "," << sol.policy.consumption[i] << "\n";
        }
        ammlab::write_text(out_path(cfg, "policy.csv"), os.str());
    }

    std::cout << "solve: converged in " << sol.iterations << " iterations, residual "
              << sol.residual << "\n"
              << "expected v0 = " << ev0 << ", expected omega = (" << eom << ", " << eoa << ", "
              << eob << "), expected c = " << ec << "\n";
    if (!invests) std::cout << "LP does not invest on DEX\n";
    return 0;
}

int run_sweep(const CommonFlags& flags, const std::string& axis_name, const std::string& values,
              const std::string& range) {
    const auto axis = ammlab::parse_axis(axis_name);
    if (!axis) {
        std::cerr << "unknown axis '" << axis_name
                  << "'; valid axes: f, eta, muA, muB, sigmaA, sigmaB, sigmaA_fixed_sigma, "
                     "sigmaB_fixed_sigma\n";
        return kExitUsage;
    }
    const std::vector<double> vals = parse_values(values, range);
    if (vals.empty()) {
        std::cerr << "sweep: empty value list\n";
        return kExitUsage;
    }
    const ammlab::RunConfig cfg = load_run_config(flags);
    ensure_out_dir(cfg);

    const ammlab::SweepResult res =
        ammlab::sweep(*axis, vals, cfg.market, cfg.pool, cfg.constraint, cfg.solver);
    if (cfg.output.csv) ammlab::write_sweep_csv(out_path(cfg, "sweep.csv"), res);
    if (cfg.output.json)
        ammlab::write_text(out_path(cfg, "sweep.json"),
                           ammlab::sweep_to_json(res).dump(2) + "\n");

    if (res.has_argmax)
        std::cout << "argmax " << res.axis << " = " << res.argmax_value << "\n";
    else
        std::cout << "argmax " << res.axis << " = none (no converged points)\n";
    return res.has_argmax ? 0 : kExitNumerical;
}

int run_design(const CommonFlags& flags, const std::string& f_values,
               const std::string& eta_values) {
    const std::vector<double> fs = parse_values(f_values, "");
    const std::vector<double> etas = parse_values(eta_values, "");
    if (fs.empty() || etas.empty()) {
        std::cerr << "design: --f-grid and --eta-grid must be nonempty\n";
        return kExitUsage;
    }
    const ammlab::RunConfig cfg = load_run_config(flags);
    ensure_out_dir(cfg);

    const ammlab::DesignResult res =
        ammlab::optimal_design(cfg.market, cfg.pool, fs, etas, cfg.constraint, cfg.solver);
    if (cfg.output.csv) ammlab::write_surface_csv(out_path(cfg, "surface.csv"), res);
    if (cfg.output.json) {
        json j;
        j["f_star"] = res.f_star;
        j["eta_star"] = res.eta_star;
        j["design_relevant"] = res.design_relevant;
        ammlab::write_text(out_path(cfg, "design.json"), j.dump(2) + "\n");
    }
    std::cout << "optimal design: f* = " << res.f_star << ", eta* = " << res.eta_star;
    if (!res.design_relevant) std::cout << " (design irrelevant: LP does not invest on DEX)";
    std::cout << "\n";
    return 0;
}

int run_estimate(const CommonFlags& flags, const std::string& path_a, const std::string& path_b,
                 bool has_header, int time_col, int close_col, const std::string& delim) {
    ammlab::KlineSchema schema;
    schema.has_header = has_header;
    schema.time_column = time_col;
    schema.close_column = close_col;
    if (!delim.empty()) schema.delimiter = delim[0];

    const auto a = ammlab::load_klines(path_a, schema);
    const auto b = ammlab::load_klines(path_b, schema);
    const auto est = ammlab::estimate_params(a, b);
    const json j = ammlab::estimate_to_json(est);

    const ammlab::RunConfig cfg = load_run_config(flags);
    ensure_out_dir(cfg);
    ammlab::write_text(out_path(cfg, "estimate.json"), j.dump(2) + "\n");
    std::cout << j.dump(2) << "\n";
    return 0;
}

int run_regress(const CommonFlags& flags, const std::string& table_path, int response_col,
                const std::string& regressor_cols, bool has_header, const std::string& delim) {
    ammlab::KlineSchema schema;  // reuse the delimited reader settings
    schema.has_header = has_header;
    if (!delim.empty()) schema.delimiter = delim[0];

    const auto table = ammlab::load_table(table_path, schema.has_header, schema.delimiter);
    if (table.empty()) {
        std::cerr << "regress: empty table\n";
        return kExitUsage;
    }
    std::vector<int> cols;
    {
        std::stringstream ss(regressor_cols);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            if (!tok.empty()) cols.push_back(std::stoi(tok));
        }
    }
    if (cols.empty()) {
        std::cerr << "regress: no regressor columns\n";
        return kExitUsage;
    }
    const int width = static_cast<int>(table.front().size());
    if (response_col < 0 || response_col >= width)
        throw std::invalid_argument("regress: response column out of range");
    std::vector<double> y(table.size());
    for (std::size_t r = 0; r < table.size(); ++r)
        y[r] = table[r][static_cast<std::size_t>(response_col)];
    std::vector<std::vector<double>> x;
    std::vector<std::string> names{"intercept"};
    for (int c : cols) {
        if (c < 0 || c >= width)
            throw std::invalid_argument("regress: regressor column out of range");
        std::vector<double> col(table.size());
        for (std::size_t r = 0; r < table.size(); ++r)
            col[r] = table[r][static_cast<std::size_t>(c)];
        x.push_back(std::move(col));
        names.push_back("col" + std::to_string(c));
    }
    const auto reg = ammlab::ols(y, x);
    const json j = ammlab::regression_to_json(reg, names);

    const ammlab::RunConfig cfg = load_run_config(flags);
    ensure_out_dir(cfg);
    ammlab::write_text(out_path(cfg, "regression.json"), j.dump(2) + "\n");
    std::cout << j.dump(2) << "\n";
    return 0;
}

int run_simulate(const CommonFlags& flags, long steps, double s0) {
    if (steps < 1) {
        std::cerr << "simulate: steps must be >= 1\n";
        return kExitUsage;
    }
    const ammlab::RunConfig cfg = load_run_config(flags);
    ensure_out_dir(cfg);

    std::mt19937_64 rng(flags.seed);
    double s = ammlab::ratio_transition(s0, cfg.pool.eta, cfg.pool.fee);
    std::ostringstream os;
    os << "k,s,r1,r2,r3,r4,fee,il\n";
    for (long k = 0; k < steps; ++k) {
        const auto node = ammlab::sample_disturbance(cfg.market, rng);
        const auto out = ammlab::step_period(s, node, cfg.pool);
        os << k << "," << std::setprecision(17) << s << "," << out.r1 << "," << out.r2 << ","
           << out.r3 << "," << out.r4 << "," << out.fee_revenue_frac << ","
           << out.arb_loss_frac << "\n";
        s = out.s_next;
    }
    ammlab::write_text(out_path(cfg, "trajectory.csv"), os.str());
    std::cout << "simulate: wrote " << steps << " periods to "
              << out_path(cfg, "trajectory.csv") << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ammlab: AMM liquidity-provision design lab"};
    app.require_subcommand(1);

    CommonFlags flags;
    app.add_option("--config", flags.config_path, "JSON config path");
    app.add_option("--out", flags.out_dir, "output directory (overrides config)");
    app.add_option("--format", flags.formats, "output formats: csv, json");
    app.add_option("--threads", flags.threads, "worker thread cap");
    app.add_option("--seed", flags.seed, "random seed for simulation");

    auto* solve = app.add_subcommand("solve", "solve the LP fixed point and stationary law");

    std::string axis, values, range;
    auto* sweep = app.add_subcommand("sweep", "sweep one parameter axis");
    sweep->add_option("--axis", axis, "axis: f, eta, muA, muB, sigmaA, sigmaB, "
                                      "sigmaA_fixed_sigma, sigmaB_fixed_sigma")
        ->required();
    sweep->add_option("--values", values, "comma-separated axis values");
    sweep->add_option("--range", range, "lo:hi:n inclusive linear range");

    std::string f_grid = "0.0005,0.001,0.003,0.005,0.01,0.02";
    std::string eta_grid = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9";
    auto* design = app.add_subcommand("design", "tensor sweep over (f, eta)");
    design->add_option("--f-grid", f_grid, "comma-separated fee grid");
    design->add_option("--eta-grid", eta_grid, "comma-separated eta grid");

    std::string path_a, path_b, delim = ",";
    bool has_header = false;
    int time_col = 0, close_col = 4;
    auto* estimate = app.add_subcommand("estimate", "estimate market params from two bar files");
    estimate->add_option("--a", path_a, "asset A kline file")->required();
    estimate->add_option("--b", path_b, "asset B kline file")->required();
    estimate->add_flag("--has-header", has_header, "skip the first row");
    estimate->add_option("--time-col", time_col, "timestamp column index");
    estimate->add_option("--close-col", close_col, "close column index");
    estimate->add_option("--delimiter", delim, "field delimiter");

    std::string table_path, regressors;
    int response_col = 0;
    auto* regress = app.add_subcommand("regress", "OLS with classical p-values");
    regress->add_option("--table", table_path, "delimited numeric table")->required();
    regress->add_option("--response", response_col, "response column index")->required();
    regress->add_option("--regressors", regressors, "comma-separated regressor columns")
        ->required();
    regress->add_flag("--has-header", has_header, "skip the first row");
    regress->add_option("--delimiter", delim, "field delimiter");

    long steps = 1000;
    double s0 = 1.0;
    auto* simulate = app.add_subcommand("simulate", "seeded Monte-Carlo path of the pool state");
    simulate->add_option("--steps", steps, "number of periods");
    simulate->add_option("--s0", s0, "initial rate ratio");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*solve) return run_solve(flags);
        if (*sweep) return run_sweep(flags, axis, values, range);
        if (*design) return run_design(flags, f_grid, eta_grid);
        if (*estimate)
            return run_estimate(flags, path_a, path_b, has_header, time_col, close_col, delim);
        if (*regress)
            return run_regress(flags, table_path, response_col, regressors, has_header, delim);
        if (*simulate) return run_simulate(flags, steps, s0);
    } catch (const nlohmann::json::parse_error& e) {
        std::cerr << "config parse error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ammlab::numerical_error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::runtime_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return 0;
}
