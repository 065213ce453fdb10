#include "stable_anticipate/cli.hpp"

#include "stable_anticipate/checks.hpp"
#include "stable_anticipate/moments.hpp"
#include "stable_anticipate/parallel.hpp"
#include "stable_anticipate/simulation.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>

namespace sa::cli {

using nlohmann::json;

std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// nlohmann::json keeps object keys sorted; numbers are re-emitted with 17 digits.
void write_json(std::ostream& os, const json& j, int indent = 0) {
    const std::string pad(indent + 2, ' '), end_pad(indent, ' ');
    switch (j.type()) {
        case json::value_t::object: {
            if (j.empty()) {
                os << "{}";
                return;
            }
            os << "{\n";
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) os << ",\n";
                first = false;
                os << pad << json(it.key()).dump() << ": ";
                write_json(os, it.value(), indent + 2);
            }
            os << "\n" << end_pad << "}";
            return;
        }
        case json::value_t::array: {
            if (j.empty()) {
                os << "[]";
                return;
            }
            os << "[\n";
            for (std::size_t i = 0; i < j.size(); ++i) {
                if (i) os << ",\n";
                os << pad;
                write_json(os, j[i], indent + 2);
            }
            os << "\n" << end_pad << "]";
            return;
        }
        case json::value_t::number_float: {
            const double v = j.get<double>();
            os << (std::isfinite(v) ? format_number(v) : "null");
            return;
        }
        default: os << j.dump();
    }
}

json number_or_null(std::optional<double> v) {
    if (!v || !std::isfinite(*v)) return nullptr;
    return *v;
}

// ---------------------------------------------------------------------------
// Model flags

struct ModelFlags {
    std::string model = "ar1";
    std::optional<double> alpha, beta, sigma, rho, lambda, psi1, psi2;
    double c = 1.0;
    std::vector<double> rhos, betas, sigmas, pis;
};

void add_model_flags(CLI::App* sub, ModelFlags& f) {
    sub->add_option("--model", f.model, "process: ar1, ou, agg or ar2")
        ->check(CLI::IsMember({"ar1", "ou", "agg", "ar2"}))
        ->capture_default_str();
    sub->add_option("--alpha", f.alpha, "stability index in (0,2)");
    sub->add_option("--beta", f.beta, "skewness in [-1,1] (ar1, ou, ar2)");
    sub->add_option("--sigma", f.sigma, "noise scale (ar1, ar2)");
    sub->add_option("--rho", f.rho, "autoregressive coefficient (ar1)");
    sub->add_option("--lambda", f.lambda, "mean-reversion rate (ou)");
    sub->add_option("--psi1", f.psi1, "first lag coefficient (ar2)");
    sub->add_option("--psi2", f.psi2, "second lag coefficient (ar2)");
    sub->add_option("--c", f.c, "aggregation constant (agg)")->capture_default_str();
    sub->add_option("--rhos", f.rhos, "component coefficients (agg)")->delimiter(',');
    sub->add_option("--betas", f.betas, "component skewness (agg)")->delimiter(',');
    sub->add_option("--sigmas", f.sigmas, "component scales (agg)")->delimiter(',');
    sub->add_option("--pis", f.pis, "component weights (agg)")->delimiter(',');
}

double need(const std::optional<double>& v, const char* flag, const std::string& model) {
    if (!v) throw UsageError(std::string("--") + flag + " is required for --model " + model);
    return *v;
}

ProcessModel build_model(const ModelFlags& f) {
    const double alpha = need(f.alpha, "alpha", f.model);
    if (f.model == "ar1") return AR1{alpha, need(f.beta, "beta", f.model), need(f.sigma, "sigma", f.model), need(f.rho, "rho", f.model)};
    if (f.model == "ou") return OU{alpha, need(f.beta, "beta", f.model), need(f.lambda, "lambda", f.model)};
    if (f.model == "ar2")
        return AR2{alpha, need(f.beta, "beta", f.model), need(f.sigma, "sigma", f.model), need(f.psi1, "psi1", f.model),
                   need(f.psi2, "psi2", f.model)};
    const std::size_t J = f.rhos.size();
    if (J == 0 || f.betas.size() != J || f.sigmas.size() != J || f.pis.size() != J)
        throw UsageError("--model agg needs --rhos, --betas, --sigmas and --pis of equal length");
    Aggregated m{alpha, f.c, {}};
    for (std::size_t j = 0; j < J; ++j) m.components.push_back({f.pis[j], f.rhos[j], f.betas[j], f.sigmas[j]});
    return m;
}

// Writes to --out when given, otherwise to the command's stdout.
class Sink {
public:
    Sink(const std::string& path, std::ostream& fallback) {
        if (path.empty()) {
            os_ = &fallback;
            return;
        }
        file_.open(path, std::ios::binary);
        if (!file_) throw UsageError("cannot open output file " + path);
        os_ = &file_;
    }
    std::ostream& operator*() { return *os_; }

private:
    std::ofstream file_;
    std::ostream* os_;
};

// ---------------------------------------------------------------------------
// Commands

struct SimulateFlags {
    std::size_t n = 1000;
    std::uint64_t seed = 0;
    double dt = 1.0, trunc_eps = 1e-10;
    std::string out;
};

int cmd_simulate(const ModelFlags& mf, const SimulateFlags& f, std::ostream& out) {
    const auto model = build_model(mf);
    const PathConfig cfg{f.n, f.seed, f.trunc_eps, f.dt};
    const auto x = simulate(model, cfg);
    const bool ou = std::holds_alternative<OU>(model);
    Sink sink(f.out, out);
    std::string buf = "t,x\n";
    for (std::size_t i = 0; i < x.size(); ++i) {
        buf += format_number(ou ? static_cast<double>(i) * f.dt : static_cast<double>(i));
        buf += ',';
        buf += format_number(x[i]);
        buf += '\n';
    }
    *sink << buf;
    return ok;
}

struct SurfaceFlags {
    double x_min = -10.0, x_max = 10.0, h_min = 1.0, h_max = 30.0, tol = 1e-8;
    std::size_t nx = 101, nh = 30;
    std::string out;
};

std::vector<double> linspace(double a, double b, std::size_t n) {
    if (n == 1) return {a};
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
    return v;
}

int cmd_surface(const ModelFlags& mf, const SurfaceFlags& f, std::ostream& out) {
    const auto model = build_model(mf);
    validate(model);
    if (f.nx < 1 || f.nh < 1 || !(f.x_max >= f.x_min) || !(f.h_max >= f.h_min)) throw UsageError("empty or inverted grid");
    const auto xs = linspace(f.x_min, f.x_max, f.nx);
    std::vector<double> hs;
    if (std::holds_alternative<OU>(model)) {
        hs = linspace(f.h_min, f.h_max, f.nh);
    } else {
        for (double h = std::ceil(f.h_min); h <= f.h_max; h += 1.0) hs.push_back(h);
        if (hs.empty()) throw UsageError("no integer horizon in [h-min, h-max]");
    }
    std::vector<Summary> grid(xs.size() * hs.size());
    parallel_for(grid.size(), [&](std::size_t k) { grid[k] = cond_summary(xs[k / hs.size()], model, hs[k % hs.size()], f.tol); });

    Sink sink(f.out, out);
    std::string buf = "x,h,mean,mean_err,var,var_err,skew,skew_err,kurt_ex,kurt_err,regime\n";
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const auto& s = grid[k];
        buf += format_number(xs[k / hs.size()]) + ',' + format_number(hs[k % hs.size()]);
        bool undefined = false, asymptotic = false;
        for (const MomentResult* m : {&s.mu, &s.sigma2, &s.gamma1, &s.gamma2}) {
            if (m->regime == Regime::undefined || !std::isfinite(m->value)) {
                undefined = true;
                buf += ",,";
                continue;
            }
            asymptotic |= m->regime == Regime::asymptotic;
            buf += ',' + format_number(m->value) + ',' + format_number(m->err);
        }
        buf += undefined ? ",undefined\n" : asymptotic ? ",asymptotic\n" : ",exact\n";
    }
    *sink << buf;
    return ok;
}

struct AsymptoticsFlags {
    double h = 1.0, x = 1.0;
    int direction = 1;
};

int cmd_asymptotics(const ModelFlags& mf, const AsymptoticsFlags& f, std::ostream& out) {
    const auto model = build_model(mf);
    json j;
    try {
        const auto am = asymptotic_moments(model, f.h, f.direction);
        const auto bs = bernoulli_summary(model, f.h, f.x);
        j["survival_prob"] = bs.survival_prob;
        j["explosion_level"] = bs.explosion_level;
        j["gamma1_limit"] = number_or_null(am.gamma1_limit);
        j["gamma2_limit"] = number_or_null(am.gamma2_limit);
        j["h0"] = nullptr;
        if (auto ou = std::get_if<OU>(&model)) j["h0"] = ou_kurtosis_h0(ou->alpha, ou->lambda);
    } catch (const Unsupported& e) {
        write_json(out, json{{"error", {{"code", e.code()}, {"message", e.what()}}}});
        out << "\n";
        return usage;
    }
    write_json(out, j);
    out << "\n";
    return ok;
}

struct ValidateFlags {
    std::string suite;
    std::size_t n_paths = 2'000'000, episodes = 500, path_len = 2'000'000;
    std::uint64_t seed = 0;
    double quantile = 0.9999;
};

int cmd_validate(const ValidateFlags& f, std::ostream& out) {
    SuiteReport rep;
    if (f.suite == "constants") rep = suite_constants();
    else if (f.suite == "quadrature") rep = suite_quadrature();
    else if (f.suite == "oracles") rep = suite_oracles({f.n_paths, f.seed, 1e-10});
    else if (f.suite == "asymptotics") rep = suite_asymptotics();
    else {
        SurvivalSuiteOptions so;
        so.run.quantile = f.quantile;
        so.run.n_episodes = f.episodes;
        so.run.path_len = f.path_len;
        so.run.seed = f.seed;
        rep = suite_survival(so);
    }
    json checks = json::array();
    for (const auto& c : rep.checks)
        checks.push_back({{"name", c.name}, {"pass", c.pass}, {"deviation", c.deviation}, {"limit", c.limit}, {"detail", c.detail}});
    write_json(out, json{{"suite", rep.suite}, {"passed", rep.passed()}, {"n_failed", rep.n_failed()}, {"checks", checks}});
    out << "\n";
    return rep.passed() ? ok : validation_failure;
}

// Splices `--key value` pairs from a --config file in front of the explicit
// flags, skipping keys the command line already sets.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
    std::string path;
    std::set<std::string> given;
    for (std::size_t i = 1; i < args.size(); ++i) {
        const auto& a = args[i];
        if (a.rfind("--", 0) != 0) continue;
        const auto eq = a.find('=');
        const std::string key = a.substr(2, eq == std::string::npos ? std::string::npos : eq - 2);
        given.insert(key);
        if (key == "config") path = eq == std::string::npos ? (i + 1 < args.size() ? args[i + 1] : "") : a.substr(eq + 1);
    }
    if (path.empty() || args.size() < 2) return args;
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read config file " + path);
    std::vector<std::string> extra;
    std::string line;
    int lineno = 0;
    auto trim = [](std::string v) {
        const auto b = v.find_first_not_of(" \t\r"), e = v.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : v.substr(b, e - b + 1);
    };
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw UsageError(path + ":" + std::to_string(lineno) + ": expected key=value");
        std::string key = trim(line.substr(0, eq));
        if (key.rfind("--", 0) == 0) key = key.substr(2);
        if (key.empty() || key == "config") throw UsageError(path + ":" + std::to_string(lineno) + ": bad key");
        if (given.count(key)) continue;
        extra.push_back("--" + key);
        extra.push_back(trim(line.substr(eq + 1)));
    }
    // the subcommand is the first argument that is not a flag
    std::vector<std::string> out(args.begin(), args.begin() + 2);
    out.insert(out.end(), extra.begin(), extra.end());
    out.insert(out.end(), args.begin() + 2, args.end());
    return out;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Conditional moments, simulation and checks for anticipative stable processes"};
    app.name(args.empty() ? "stable-anticipate" : args[0]);
    app.require_subcommand(1);
    app.set_help_flag("--help", "print this help and exit");

    ModelFlags mf;
    SimulateFlags sf;
    SurfaceFlags uf;
    AsymptoticsFlags af;
    ValidateFlags vf;
    std::string config_path;
    const char* config_help = "flat key=value file; command-line flags take precedence";

    auto* sim = app.add_subcommand("simulate", "sample path as CSV (t,x)");
    add_model_flags(sim, mf);
    sim->add_option("--n", sf.n, "number of points")->capture_default_str();
    sim->add_option("--seed", sf.seed, "RNG seed")->capture_default_str();
    sim->add_option("--dt", sf.dt, "grid step (ou)")->capture_default_str();
    sim->add_option("--trunc-eps", sf.trunc_eps, "neglected MA scale mass")->capture_default_str();
    sim->add_option("--out", sf.out, "output file (default stdout)");
    sim->add_option("--config", config_path, config_help);

    auto* surf = app.add_subcommand("surface", "conditional mean, variance, skewness and kurtosis over an (x,h) grid as CSV");
    add_model_flags(surf, mf);
    surf->add_option("--x-min", uf.x_min)->capture_default_str();
    surf->add_option("--x-max", uf.x_max)->capture_default_str();
    surf->add_option("--nx", uf.nx, "number of x points")->capture_default_str();
    surf->add_option("--h-min", uf.h_min)->capture_default_str();
    surf->add_option("--h-max", uf.h_max)->capture_default_str();
    surf->add_option("--nh", uf.nh, "number of horizons (ou; discrete models use every integer)")->capture_default_str();
    surf->add_option("--tol", uf.tol, "requested relative accuracy")->capture_default_str();
    surf->add_option("--out", uf.out, "output file (default stdout)");
    surf->add_option("--config", config_path, config_help);

    auto* asym = app.add_subcommand("asymptotics", "bubble limits as JSON");
    asym->set_help_flag("--help", "print this help and exit");  // frees -h for --h
    add_model_flags(asym, mf);
    asym->add_option("--h", af.h, "horizon")->capture_default_str();
    asym->add_option("--x", af.x, "conditioning level for the explosion level")->capture_default_str();
    asym->add_option("--direction", af.direction, "+1 or -1")->check(CLI::IsMember({-1, 1}))->capture_default_str();
    asym->add_option("--config", config_path, config_help);

    auto* val = app.add_subcommand("validate", "run a check suite and report JSON");
    val->add_option("--suite", vf.suite)->required()->check(CLI::IsMember({"constants", "quadrature", "oracles", "asymptotics", "survival"}));
    val->add_option("--n-paths", vf.n_paths, "Monte Carlo pairs per point (oracles)")->capture_default_str();
    val->add_option("--seed", vf.seed)->capture_default_str();
    val->add_option("--quantile", vf.quantile, "episode threshold level (survival)")->capture_default_str();
    val->add_option("--episodes", vf.episodes, "episodes to pool (survival)")->capture_default_str();
    val->add_option("--path-len", vf.path_len, "points per simulated path (survival)")->capture_default_str();
    val->add_option("--config", config_path, config_help);

    std::vector<std::string> full;
    try {
        full = expand_config(args);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return usage;
    }
    std::vector<const char*> argv;
    for (const auto& a : full) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? ok : usage;
    }

    try {
        if (*sim) return cmd_simulate(mf, sf, out);
        if (*surf) return cmd_surface(mf, uf, out);
        if (*asym) return cmd_asymptotics(mf, af, out);
        return cmd_validate(vf, out);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return usage;
    } catch (const NumericalError& e) {
        err << "numerical error: " << e.what() << "\n";
        return numerical;
    } catch (const InsufficientData& e) {
        err << "numerical error: " << e.what() << "\n";
        return numerical;
    } catch (const Error& e) {
        err << e.code() << " error: " << e.what() << "\n";
        return usage;
    }
}

}  // namespace sa::cli
