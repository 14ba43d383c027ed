// Config parsing and machine-readable exports. The flat config block mirrors
// the model's standard parameter names (delta, Rf, muA, ... , eta, f);
// results go out as JSON and plot-ready CSV.
#pragma once

#include <json.hpp>

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "ammlab/data.hpp"
#include "ammlab/design.hpp"
#include "ammlab/dp.hpp"
#include "ammlab/stationary.hpp"

namespace ammlab {

struct OutputConfig {
    std::string directory{"out"};
    bool csv{true};
    bool json{true};
};

struct RunConfig {
    MarketParams market{};
    PoolSpec pool{};
    ConstraintSet constraint{};
    SolverConfig solver{};
    OutputConfig output{};
};

// ------------------------------ Config parsing -------------------------------

inline RunConfig parse_config(const nlohmann::json& j) {
    RunConfig cfg;
    auto& m = cfg.market;
    if (j.contains("delta")) m.delta = j.at("delta").get<double>();
    if (j.contains("Rf")) m.R_f = j.at("Rf").get<double>();
    if (j.contains("muA")) m.mu_A = j.at("muA").get<double>();
    if (j.contains("muB")) m.mu_B = j.at("muB").get<double>();
    if (j.contains("sigmaA")) m.sigma_A = j.at("sigmaA").get<double>();
    if (j.contains("sigmaB")) m.sigma_B = j.at("sigmaB").get<double>();
    if (j.contains("rho")) m.rho = j.at("rho").get<double>();
    if (j.contains("alpha")) m.alpha = j.at("alpha").get<double>();
    if (j.contains("sigmaI")) m.sigma_I = j.at("sigmaI").get<double>();
    if (j.contains("N")) m.N = j.at("N").get<int>();
    if (j.contains("gamma")) m.gamma = j.at("gamma").get<double>();
    double eta = 0.5, fee = 0.005;
    if (j.contains("eta")) eta = j.at("eta").get<double>();
    if (j.contains("f")) fee = j.at("f").get<double>();
    cfg.pool = PoolSpec(eta, fee);
    if (j.contains("constraint")) {
        const std::string c = j.at("constraint").get<std::string>();
        if (c == "no_short")
            cfg.constraint.kind = ConstraintKind::NoShort;
        else if (c == "short_ok")
            cfg.constraint.kind = ConstraintKind::ShortOK;
        else
            throw std::invalid_argument("config: constraint must be no_short or short_ok");
    }
    if (j.contains("solver")) {
        const auto& s = j.at("solver");
        if (s.contains("grid_size")) cfg.solver.grid_size = s.at("grid_size").get<int>();
        if (s.contains("tol")) cfg.solver.tol = s.at("tol").get<double>();
        if (s.contains("max_iter")) cfg.solver.max_iter = s.at("max_iter").get<int>();
        if (s.contains("nodes_per_dim"))
            cfg.solver.nodes_per_dim = s.at("nodes_per_dim").get<int>();
    }
    if (j.contains("output")) {
        const auto& o = j.at("output");
        if (o.contains("directory")) cfg.output.directory = o.at("directory").get<std::string>();
        if (o.contains("formats")) {
            cfg.output.csv = cfg.output.json = false;
            for (const auto& f : o.at("formats")) {
                if (f.get<std::string>() == "csv") cfg.output.csv = true;
                if (f.get<std::string>() == "json") cfg.output.json = true;
            }
        }
    }
    cfg.market.validate();
    return cfg;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    nlohmann::json j = nlohmann::json::parse(in);  // throws with byte position
    return parse_config(j);
}

inline nlohmann::json config_to_json(const RunConfig& cfg) {
    nlohmann::json j;
    j["delta"] = cfg.market.delta;
    j["Rf"] = cfg.market.R_f;
    j["muA"] = cfg.market.mu_A;
    j["muB"] = cfg.market.mu_B;
    j["sigmaA"] = cfg.market.sigma_A;
    j["sigmaB"] = cfg.market.sigma_B;
    j["rho"] = cfg.market.rho;
    j["alpha"] = cfg.market.alpha;
    j["sigmaI"] = cfg.market.sigma_I;
    j["N"] = cfg.market.N;
    j["gamma"] = cfg.market.gamma;
    j["eta"] = cfg.pool.eta;
    j["f"] = cfg.pool.fee.value;
    j["constraint"] =
        cfg.constraint.kind == ConstraintKind::NoShort ? "no_short" : "short_ok";
    j["solver"] = {{"grid_size", cfg.solver.grid_size},
                   {"tol", cfg.solver.tol},
                   {"max_iter", cfg.solver.max_iter},
                   {"nodes_per_dim", cfg.solver.nodes_per_dim}};
    nlohmann::json formats = nlohmann::json::array();
    if (cfg.output.csv) formats.push_back("csv");
    if (cfg.output.json) formats.push_back("json");
    j["output"] = {{"directory", cfg.output.directory}, {"formats", formats}};
    return j;
}

// -------------------------------- Exporters ----------------------------------

namespace detail {
inline std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}
}  // namespace detail

inline nlohmann::json solve_to_json(const SolveResult& res, const MarketParams& params) {
    nlohmann::json j;
    j["grid"] = res.vf.grid;
    j["form"] = res.vf.form == ValueForm::Raw ? "raw" : "transformed";
    j["v"] = res.vf.values;
    nlohmann::json policy;
    for (std::size_t k = 0; k < res.policy.omega.size(); ++k) {
        nlohmann::json phase;
        for (const auto& w : res.policy.omega[k])
            phase.push_back({{"omegaM", w[0]}, {"omegaA", w[1]}, {"omegaB", w[2]}});
        policy.push_back(phase);
    }
    j["policy"] = policy;
    j["consumption"] = res.policy.consumption;
    j["iterations"] = res.iterations;
    j["residual"] = res.residual;
    j["measured_contraction_ratio"] = res.measured_ratio;
    j["growth"] = {{"r_bar", res.growth.r_bar},
                   {"satisfied", res.growth.satisfied},
                   {"delta_rbar_pow", res.growth.delta_rbar_pow}};
    if (params.gamma == 1.0) {
        j["consumption_scalar"] = {{"computed", res.c_scalar},
                                   {"first_order_condition", res.c_foc},
                                   {"complement_delta_pow_N", res.c_complement}};
    }
    return j;
}

inline void write_text(const std::string& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << body;
}

inline void write_stationary_csv(const std::string& path, const StationaryDistribution& dist) {
    std::ostringstream os;
    os << "s,mass\n";
    for (std::size_t i = 0; i < dist.grid.size(); ++i)
        os << detail::fmt(dist.grid[i]) << "," << detail::fmt(dist.mass[i]) << "\n";
    write_text(path, os.str());
}

inline void write_sweep_csv(const std::string& path, const SweepResult& sweep) {
    std::ostringstream os;
    os << "axis,value,converged,invests,expected_v0,expected_omegaM,expected_omegaA,"
          "expected_omegaB,partner_sigma,iterations,residual\n";
    for (const auto& p : sweep.points) {
        os << sweep.axis << "," << detail::fmt(p.value) << "," << (p.converged ? 1 : 0) << ","
           << (p.invests ? 1 : 0) << "," << detail::fmt(p.expected_v0) << ","
           << detail::fmt(p.expected_omega_m) << "," << detail::fmt(p.expected_omega_a) << ","
           << detail::fmt(p.expected_omega_b) << ","
           << (std::isfinite(p.partner_sigma) ? detail::fmt(p.partner_sigma) : "") << ","
           << p.iterations << "," << detail::fmt(p.residual) << "\n";
    }
    write_text(path, os.str());
}

inline nlohmann::json sweep_to_json(const SweepResult& sweep) {
    nlohmann::json j;
    j["axis"] = sweep.axis;
    j["has_argmax"] = sweep.has_argmax;
    if (sweep.has_argmax) j["argmax"] = sweep.argmax_value;
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : sweep.points) {
        nlohmann::json q;
        q["value"] = p.value;
        q["converged"] = p.converged;
        q["invests"] = p.invests;
        q["expected_v0"] = p.expected_v0;
        q["expected_omegaM"] = p.expected_omega_m;
        q["expected_omegaA"] = p.expected_omega_a;
        q["expected_omegaB"] = p.expected_omega_b;
        if (std::isfinite(p.partner_sigma)) q["partner_sigma"] = p.partner_sigma;
        q["iterations"] = p.iterations;
        q["residual"] = p.residual;
        if (!p.note.empty()) q["note"] = p.note;
        pts.push_back(q);
    }
    j["points"] = pts;
    return j;
}

inline void write_surface_csv(const std::string& path, const DesignResult& design) {
    std::ostringstream os;
    os << "f,eta,converged,invests,expected_v0,expected_omegaM,iterations,residual\n";
    for (const auto& c : design.surface) {
        os << detail::fmt(c.f) << "," << detail::fmt(c.eta) << "," << (c.point.converged ? 1 : 0)
           << "," << (c.point.invests ? 1 : 0) << "," << detail::fmt(c.point.expected_v0) << ","
           << detail::fmt(c.point.expected_omega_m) << "," << c.point.iterations << ","
           << detail::fmt(c.point.residual) << "\n";
    }
    write_text(path, os.str());
}

inline nlohmann::json estimate_to_json(const EstimatedParams& est) {
    nlohmann::json j;
    j["muA"] = est.muA;
    j["muB"] = est.muB;
    j["sigmaA"] = est.sigmaA;
    j["sigmaB"] = est.sigmaB;
    j["rho"] = est.rho;
    j["sigma"] = est.sigma;
    j["bars"] = est.bars;
    j["degenerate"] = est.degenerate;
    return j;
}

inline nlohmann::json regression_to_json(const RegressionResult& reg,
                                         const std::vector<std::string>& names) {
    nlohmann::json j;
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < reg.coefficients.size(); ++i) {
        nlohmann::json r;
        r["name"] = i < names.size() ? names[i] : "x" + std::to_string(i - 1);
        r["coefficient"] = reg.coefficients[i];
        r["std_error"] = reg.std_errors[i];
        r["t_stat"] = reg.t_stats[i];
        r["p_value"] = reg.p_values[i];
        rows.push_back(r);
    }
    j["terms"] = rows;
    j["r_squared"] = reg.r_squared;
    j["n"] = reg.n;
    return j;
}

}  // namespace ammlab
