#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "compoda/engine.hpp"
#include "compoda/io.hpp"

namespace compoda {

// Raised for anything wrong with the experiment description itself; the CLI
// maps it to exit code 2.
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
    // problem
    std::string problem_type = "softmax";
    long d = 0, k = 0;
    double mu = 0.1;
    std::uint64_t problem_seed = 1;
    std::string instance_path, csv_path;
    bool has_header = false, normalize = false;
    int positive_class = 0;
    double x0_scale = 1.0;
    double f_star_override = std::numeric_limits<double>::quiet_NaN();
    long reference_rounds = 2000;
    // noise
    double sigma = 0.0;
    // clients
    long n = 1;
    double frac_random = 0.5;
    bool share_data = false;
    // compressor
    std::string comp_kind = "identity";
    double k_frac = 1.0;
    // composite
    std::string psi_kind = "zero";
    double lambda = 0.0, radius = 0.0;
    std::vector<double> center;
    // mechanism
    std::string mech_kind;
    double eta_override = std::numeric_limits<double>::quiet_NaN();
    // algorithm
    std::string algo_kind = "econtrol_da";
    long T = 100;
    std::string preset;
    double gamma = std::numeric_limits<double>::quiet_NaN();
    double inv_gamma = std::numeric_limits<double>::quiet_NaN();
    double h = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> grid;
    double R0 = std::numeric_limits<double>::quiet_NaN();
    double ell = std::numeric_limits<double>::quiet_NaN();
    double L = std::numeric_limits<double>::quiet_NaN();
    double F0 = std::numeric_limits<double>::quiet_NaN();
    double a_t = 1.0;
    bool initial_step = false;
    // top level
    std::uint64_t seed = 1;
    std::string output_dir = "out";
    bool debug = false;
    double m = std::numeric_limits<double>::quiet_NaN();

    std::string raw;  // original JSON text, echoed into outputs
};

namespace cfgdetail {

using nlohmann::json;

inline void require_keys(const json& obj, const char* section,
                         std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw ConfigError(std::string(section) + " must be an object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* a : allowed)
            if (it.key() == a) {
                ok = true;
                break;
            }
        if (!ok) throw ConfigError(std::string("unknown key '") + it.key() + "' in " + section);
    }
}

inline double num(const json& obj, const char* key, double dflt) {
    if (!obj.contains(key)) return dflt;
    if (!obj[key].is_number()) throw ConfigError(std::string(key) + " must be a number");
    return obj[key].get<double>();
}

inline long integer(const json& obj, const char* key, long dflt) {
    if (!obj.contains(key)) return dflt;
    if (!obj[key].is_number_integer()) throw ConfigError(std::string(key) + " must be an integer");
    return obj[key].get<long>();
}

inline bool boolean(const json& obj, const char* key, bool dflt) {
    if (!obj.contains(key)) return dflt;
    if (!obj[key].is_boolean()) throw ConfigError(std::string(key) + " must be a boolean");
    return obj[key].get<bool>();
}

inline std::string str(const json& obj, const char* key, const std::string& dflt) {
    if (!obj.contains(key)) return dflt;
    if (!obj[key].is_string()) throw ConfigError(std::string(key) + " must be a string");
    return obj[key].get<std::string>();
}

}  // namespace cfgdetail

inline ExperimentConfig parse_config(const std::string& text) {
    using nlohmann::json;
    using namespace cfgdetail;

    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("invalid JSON: ") + e.what());
    }
    require_keys(root, "config",
                 {"problem", "noise", "clients", "compressor", "composite", "mechanism",
                  "algorithm", "seed", "output_dir", "debug", "m"});

    ExperimentConfig c;
    c.raw = text;

    if (!root.contains("problem")) throw ConfigError("missing 'problem' section");
    {
        const json& p = root["problem"];
        require_keys(p, "problem",
                     {"type", "d", "k", "mu", "seed", "instance_path", "csv_path", "has_header",
                      "normalize", "positive_class", "x0_scale", "f_star", "reference_rounds"});
        c.problem_type = str(p, "type", "");
        if (c.problem_type != "softmax" && c.problem_type != "logistic")
            throw ConfigError("problem.type must be 'softmax' or 'logistic'");
        c.d = integer(p, "d", 0);
        c.k = integer(p, "k", 0);
        c.mu = num(p, "mu", 0.1);
        c.problem_seed = static_cast<std::uint64_t>(integer(p, "seed", 1));
        c.instance_path = str(p, "instance_path", "");
        c.csv_path = str(p, "csv_path", "");
        c.has_header = boolean(p, "has_header", false);
        c.normalize = boolean(p, "normalize", false);
        c.positive_class = static_cast<int>(integer(p, "positive_class", 0));
        c.x0_scale = num(p, "x0_scale", 1.0);
        c.f_star_override = num(p, "f_star", std::numeric_limits<double>::quiet_NaN());
        c.reference_rounds = integer(p, "reference_rounds", 2000);
        if (c.reference_rounds < 1) throw ConfigError("problem.reference_rounds must be >= 1");
    }

    if (root.contains("noise")) {
        const json& s = root["noise"];
        require_keys(s, "noise", {"sigma"});
        c.sigma = num(s, "sigma", 0.0);
        if (c.sigma < 0.0) throw ConfigError("noise.sigma must be >= 0");
    }

    if (root.contains("clients")) {
        const json& s = root["clients"];
        require_keys(s, "clients", {"n", "frac_random", "share_data"});
        c.n = integer(s, "n", 1);
        if (c.n < 1) throw ConfigError("clients.n must be >= 1");
        c.frac_random = num(s, "frac_random", 0.5);
        if (c.frac_random < 0.0 || c.frac_random > 1.0)
            throw ConfigError("clients.frac_random must lie in [0, 1]");
        c.share_data = boolean(s, "share_data", false);
    }

    if (root.contains("compressor")) {
        const json& s = root["compressor"];
        require_keys(s, "compressor", {"kind", "k_frac"});
        c.comp_kind = str(s, "kind", "identity");
        if (c.comp_kind != "top_k" && c.comp_kind != "identity")
            throw ConfigError("compressor.kind must be 'top_k' or 'identity'");
        c.k_frac = num(s, "k_frac", 1.0);
        if (c.comp_kind == "top_k" && (!(c.k_frac > 0.0) || c.k_frac > 1.0))
            throw ConfigError("compressor.k_frac must lie in (0, 1]");
    }

    if (root.contains("composite")) {
        const json& s = root["composite"];
        require_keys(s, "composite", {"kind", "lambda", "radius", "center"});
        c.psi_kind = str(s, "kind", "zero");
        if (c.psi_kind != "zero" && c.psi_kind != "l1" && c.psi_kind != "ball")
            throw ConfigError("composite.kind must be 'zero', 'l1' or 'ball'");
        c.lambda = num(s, "lambda", 0.0);
        if (c.lambda < 0.0) throw ConfigError("composite.lambda must be >= 0");
        c.radius = num(s, "radius", 0.0);
        if (c.psi_kind == "ball" && !(c.radius > 0.0))
            throw ConfigError("composite.radius must be > 0 for ball");
        if (s.contains("center")) {
            if (!s["center"].is_array()) throw ConfigError("composite.center must be an array");
            for (const auto& v : s["center"]) {
                if (!v.is_number()) throw ConfigError("composite.center entries must be numbers");
                c.center.push_back(v.get<double>());
            }
        }
    }

    if (root.contains("mechanism")) {
        const json& s = root["mechanism"];
        require_keys(s, "mechanism", {"kind", "eta"});
        c.mech_kind = str(s, "kind", "");
        if (!c.mech_kind.empty() && c.mech_kind != "econtrol" && c.mech_kind != "ef" &&
            c.mech_kind != "ef21")
            throw ConfigError("mechanism.kind must be 'econtrol', 'ef' or 'ef21'");
        c.eta_override = num(s, "eta", std::numeric_limits<double>::quiet_NaN());
    }

    if (!root.contains("algorithm")) throw ConfigError("missing 'algorithm' section");
    {
        const json& s = root["algorithm"];
        require_keys(s, "algorithm", {"kind", "T", "stepsize", "a_t", "initial_step", "eta"});
        c.algo_kind = str(s, "kind", "econtrol_da");
        if (c.algo_kind != "econtrol_da" && c.algo_kind != "prox_ef" && c.algo_kind != "prox_ef21")
            throw ConfigError("algorithm.kind must be 'econtrol_da', 'prox_ef' or 'prox_ef21'");
        c.T = integer(s, "T", 100);
        if (c.T < 0) throw ConfigError("algorithm.T must be >= 0");
        c.a_t = num(s, "a_t", 1.0);
        if (!(c.a_t > 0.0)) throw ConfigError("algorithm.a_t must be > 0");
        c.initial_step = boolean(s, "initial_step", false);
        const double algo_eta = num(s, "eta", std::numeric_limits<double>::quiet_NaN());
        if (!std::isnan(algo_eta)) c.eta_override = algo_eta;

        if (s.contains("stepsize")) {
            const json& st = s["stepsize"];
            require_keys(st, "algorithm.stepsize",
                         {"preset", "gamma", "inv_gamma", "h", "grid", "R0", "ell", "L", "F0"});
            c.preset = str(st, "preset", "");
            if (!c.preset.empty() && c.preset != "fixed_theorem" && c.preset != "variable_theorem" &&
                c.preset != "real_iterates" && c.preset != "constant")
                throw ConfigError("unknown stepsize.preset '" + c.preset + "'");
            c.gamma = num(st, "gamma", std::numeric_limits<double>::quiet_NaN());
            c.inv_gamma = num(st, "inv_gamma", std::numeric_limits<double>::quiet_NaN());
            c.h = num(st, "h", std::numeric_limits<double>::quiet_NaN());
            c.R0 = num(st, "R0", std::numeric_limits<double>::quiet_NaN());
            c.ell = num(st, "ell", std::numeric_limits<double>::quiet_NaN());
            c.L = num(st, "L", std::numeric_limits<double>::quiet_NaN());
            c.F0 = num(st, "F0", std::numeric_limits<double>::quiet_NaN());
            if (st.contains("grid")) {
                if (!st["grid"].is_array()) throw ConfigError("stepsize.grid must be an array");
                for (const auto& v : st["grid"]) {
                    if (!v.is_number() || !(v.get<double>() > 0.0))
                        throw ConfigError("stepsize.grid entries must be positive numbers");
                    c.grid.push_back(v.get<double>());
                }
            }
        }
    }

    c.seed = static_cast<std::uint64_t>(cfgdetail::integer(root, "seed", 1));
    c.output_dir = cfgdetail::str(root, "output_dir", "out");
    c.debug = cfgdetail::boolean(root, "debug", false);
    c.m = cfgdetail::num(root, "m", std::numeric_limits<double>::quiet_NaN());
    if (!std::isnan(c.m) && !(c.m >= 1.0)) throw ConfigError("m must be >= 1");

    // mechanism must match the algorithm family
    const std::string expect_mech = c.algo_kind == "econtrol_da" ? "econtrol"
                                    : c.algo_kind == "prox_ef"   ? "ef"
                                                                 : "ef21";
    if (c.mech_kind.empty())
        c.mech_kind = expect_mech;
    else if (c.mech_kind != expect_mech)
        throw ConfigError("mechanism.kind '" + c.mech_kind + "' does not match algorithm '" +
                          c.algo_kind + "'");
    return c;
}

// ---------------------------------------------------------------------------
// Resolution: config -> runnable setup (problem built, constants estimated)
// ---------------------------------------------------------------------------

inline RunSetup resolve_config(const ExperimentConfig& c) {
    RunSetup su;
    su.config_echo = c.raw;
    su.seed = c.seed;
    su.sigma = c.sigma;
    su.T = c.T;
    su.a_t = c.a_t;
    su.debug = c.debug;
    su.initial_step = c.initial_step;
    su.mech = c.mech_kind == "econtrol" ? MechanismKind::econtrol
              : c.mech_kind == "ef"     ? MechanismKind::ef
                                        : MechanismKind::ef21;
    su.algo = c.algo_kind == "econtrol_da" ? AlgorithmKind::econtrol_da
              : c.algo_kind == "prox_ef"   ? AlgorithmKind::prox_ef
                                           : AlgorithmKind::prox_ef21;

    // problem
    std::size_t dim = 0;
    if (c.problem_type == "softmax") {
        SoftmaxObjective base;
        if (!c.instance_path.empty()) {
            base = softmax_instance_from_string(read_file(c.instance_path));
        } else {
            if (c.d < 1 || c.k < 1) throw ConfigError("problem.d and problem.k must be >= 1");
            if (!(c.mu > 0.0)) throw ConfigError("problem.mu must be > 0");
            base = gen_softmax(static_cast<std::size_t>(c.d), static_cast<std::size_t>(c.k), c.mu,
                               c.problem_seed);
        }
        dim = base.dim();
        if (c.share_data) {
            su.problem = share_softmax_across_clients(base, static_cast<std::size_t>(c.n));
        } else {
            if (static_cast<std::size_t>(c.n) > base.rows())
                throw ConfigError("clients.n exceeds the number of softmax rows");
            su.problem = split_softmax_to_clients(base, static_cast<std::size_t>(c.n), c.seed);
        }
    } else {
        if (c.csv_path.empty()) throw ConfigError("problem.csv_path required for logistic");
        if (c.share_data) throw ConfigError("clients.share_data applies to softmax only");
        Dataset ds = load_csv_dataset(c.csv_path, c.has_header, c.normalize);
        dim = ds.d;
        ClientPartition part =
            partition_heterogeneous(ds.N, ds.labels, static_cast<std::size_t>(c.n), c.frac_random,
                                    c.seed);
        su.problem = make_logistic_clients(ds, part, c.positive_class);
    }

    // start point: x0_scale * (1,...,1)/sqrt(d), so ||x0|| = x0_scale exactly
    su.x0 = Vec(dim, c.x0_scale / std::sqrt(static_cast<double>(dim)));
    if (c.x0_scale == 0.0) su.x0 = zeros(dim);

    // composite part
    if (c.psi_kind == "zero") {
        su.psi = CompositePart::zero();
    } else if (c.psi_kind == "l1") {
        su.psi = CompositePart::l1(c.lambda);
    } else {
        Vec center = c.center;
        if (!center.empty() && center.size() != dim)
            throw ConfigError("composite.center has wrong dimension");
        su.psi = CompositePart::ball(c.radius, std::move(center));
    }
    if (!std::isfinite(psi_value(su.psi, su.x0)))
        throw ConfigError("x0 is infeasible for the configured composite part");

    // compressor; m defaults to the 1/delta convention
    su.comp = c.comp_kind == "identity" ? Compressor::identity(dim)
                                        : Compressor::top_k_frac(c.k_frac, dim);
    const double delta = contraction_delta(su.comp);
    su.m_cost = std::isnan(c.m) ? std::max(1.0, 1.0 / delta) : c.m;

    su.eta = std::isnan(c.eta_override) ? eta_default(delta) : c.eta_override;
    if (!(su.eta > 0.0)) throw ConfigError("eta must be > 0");

    // F* estimate: analytic at the recentred origin when valid, otherwise a
    // long exact reference run
    const bool origin_optimal = c.problem_type == "softmax" && (c.n == 1 || c.share_data) &&
                                psi_value(su.psi, zeros(dim)) == 0.0 &&
                                norm(su.problem.gradient(zeros(dim))) <= 1e-8;
    if (!std::isnan(c.f_star_override)) {
        su.f_star_est = c.f_star_override;
    } else if (origin_optimal) {
        su.f_star_est = su.problem.value(zeros(dim));
    } else {
        su.f_star_est = reference_solve(su.problem, su.psi, su.x0,
                                        static_cast<int>(c.reference_rounds));
    }

    // smoothness constants: probe estimates with a 1.5x safety factor unless
    // overridden
    RngStream probe_rng = RngStream::derive(c.seed, stream_id::smoothness_probe);
    const double probe_radius = std::max(1.0, norm(su.x0));
    SmoothnessEstimate est = estimate_smoothness(su.problem, 50, probe_rng, su.x0, probe_radius);
    su.L_hat = std::isnan(c.L) ? 1.5 * est.L_hat : c.L;
    su.ell_hat = std::isnan(c.ell) ? 1.5 * est.ell_hat : c.ell;

    // stepsize schedule
    StepsizeParams sp;
    sp.ell = su.ell_hat;
    sp.L = su.L_hat;
    sp.delta = delta;
    sp.sigma = c.sigma;
    sp.n = c.n;
    sp.R0 = std::isnan(c.R0) ? norm(su.x0) : c.R0;
    sp.F0 = std::isnan(c.F0)
                ? std::max(0.0, su.problem.value(su.x0) + psi_value(su.psi, su.x0) - su.f_star_est)
                : c.F0;

    if (su.algo == AlgorithmKind::econtrol_da) {
        ScheduleSpec sched;
        sched.params = sp;
        double const_gamma = std::numeric_limits<double>::quiet_NaN();
        if (!std::isnan(c.gamma)) const_gamma = c.gamma;
        if (!std::isnan(c.inv_gamma)) {
            if (!std::isnan(const_gamma)) throw ConfigError("give gamma or inv_gamma, not both");
            if (!(c.inv_gamma > 0.0)) throw ConfigError("inv_gamma must be > 0");
            const_gamma = 1.0 / c.inv_gamma;
        }
        std::string preset = c.preset;
        if (preset.empty()) preset = std::isnan(const_gamma) ? "fixed_theorem" : "constant";
        if (preset == "constant") {
            if (std::isnan(const_gamma))
                throw ConfigError("stepsize.preset 'constant' needs gamma or inv_gamma");
            if (!(const_gamma > 0.0)) throw ConfigError("gamma must be > 0");
            sched.preset = StepsizePreset::constant;
            sched.constant_gamma = const_gamma;
        } else if (preset == "fixed_theorem") {
            sched.preset = StepsizePreset::fixed_theorem;
        } else if (preset == "variable_theorem") {
            sched.preset = StepsizePreset::variable_theorem;
        } else {
            sched.preset = StepsizePreset::real_iterates;
        }
        su.schedule = sched;
    } else {
        if (std::isnan(c.h) && c.grid.empty())
            throw ConfigError("baselines need stepsize.h (or a grid)");
        if (!std::isnan(c.h)) {
            if (!(c.h > 0.0)) throw ConfigError("stepsize.h must be > 0");
            su.h = c.h;
        }
    }
    return su;
}

// Plug one grid point into a resolved setup: 1/gamma for the dual-averaging
// runs, h for the baselines.
inline void apply_grid_point(RunSetup& su, double value) {
    if (!(value > 0.0)) throw ConfigError("grid values must be > 0");
    if (su.algo == AlgorithmKind::econtrol_da) {
        su.schedule.preset = StepsizePreset::constant;
        su.schedule.constant_gamma = 1.0 / value;
    } else {
        su.h = value;
    }
}

}  // namespace compoda
