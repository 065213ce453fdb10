#pragma once

#include "stable_anticipate/common.hpp"
#include "stable_anticipate/models.hpp"
#include "stable_anticipate/parallel.hpp"
#include "stable_anticipate/spectral.hpp"
#include "stable_anticipate/stable_core.hpp"

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace sa {

struct PathConfig {
    std::size_t n_points = 1000;
    std::uint64_t seed = 0;
    double trunc_eps = 1e-10;  // bound on the neglected MA scale mass
    double dt = 1.0;           // OU grid step
};

inline void validate(const PathConfig& cfg) {
    if (cfg.n_points < 2) throw ParameterError("n_points must be at least 2");
    if (!(cfg.trunc_eps > 0.0 && cfg.trunc_eps <= 1e-3)) throw ParameterError("trunc_eps must lie in (0, 1e-3]");
    if (!(cfg.dt > 0.0)) throw ParameterError("dt must be positive");
}

/// Number of future shocks K in the seed sum X_{n-1} = sum_{k<=K} rho^k eps_{n-1+k}.
inline std::size_t ar1_truncation(double rho, double alpha, double eps) {
    const double lr = std::log(std::abs(rho));
    const double K = std::ceil(std::log(eps * (1.0 - std::pow(std::abs(rho), alpha))) / (alpha * lr));
    return static_cast<std::size_t>(std::max(K, 1.0));
}

namespace detail {

// X_t = rho X_{t+1} + eps_t run backwards from one truncated sum at the right end.
inline std::vector<double> ar1_path(const AR1& m, const PathConfig& cfg, Rng& rng) {
    const std::size_t n = cfg.n_points, K = ar1_truncation(m.rho, m.alpha, cfg.trunc_eps);
    const StableParams noise{m.alpha, m.beta, m.sigma, 0.0};
    const auto eps = sample_stable(noise, n + K, rng);
    std::vector<double> x(n);
    double s = 0.0;
    for (std::size_t k = K + 1; k-- > 0;) s = m.rho * s + eps[n - 1 + k];
    x[n - 1] = s;
    for (std::size_t t = n - 1; t-- > 0;) x[t] = m.rho * x[t + 1] + eps[t];
    return x;
}

}  // namespace detail

/// Path X_0..X_{n-1} of the anticipative AR(1). Uses RNG stream (seed, 0).
inline std::vector<double> simulate_ar1(const AR1& m, const PathConfig& cfg) {
    validate(m);
    validate(cfg);
    Rng rng = Rng::stream(cfg.seed, 0);
    return detail::ar1_path(m, cfg, rng);
}

/// Path of the anticipative OU process on {0, dt, ..., (n-1) dt}. Exact at grid points:
/// the right end is drawn from the marginal and
/// X(s) = e^{-lambda dt} X(s + dt) + int_s^{s+dt} e^{-lambda (u - s)} M(du).
inline std::vector<double> simulate_ou(const OU& m, const PathConfig& cfg) {
    validate(m);
    validate(cfg);
    const double a = m.alpha, lam = m.lambda, e = std::exp(-lam * cfg.dt);
    StableParams marg{a, m.beta, std::pow(1.0 / (a * lam), 1.0 / a), 0.0};
    StableParams step{a, m.beta, std::pow((1.0 - std::exp(-a * lam * cfg.dt)) / (a * lam), 1.0 / a), 0.0};
    if (a == 1.0) {
        // -(2/pi) beta int f ln f for the kernel f(u) = e^{-lambda u}
        marg.mu = 2.0 * m.beta / (pi * lam);
        step.mu = 2.0 * m.beta / (pi * lam) * (1.0 - e * (1.0 + lam * cfg.dt));
    }
    Rng rng = Rng::stream(cfg.seed, 0);
    const std::size_t n = cfg.n_points;
    std::vector<double> x(n);
    x[n - 1] = draw_stable(marg, rng);
    for (std::size_t t = n - 1; t-- > 0;) x[t] = e * x[t + 1] + draw_stable(step, rng);
    return x;
}

/// X_t = c sum_j pi_j X_{j,t}; component j uses RNG stream (seed, j).
inline std::vector<double> simulate_agg(const Aggregated& m, const PathConfig& cfg) {
    validate(m);
    validate(cfg);
    std::vector<double> x(cfg.n_points, 0.0);
    for (std::size_t j = 0; j < m.components.size(); ++j) {
        const auto& c = m.components[j];
        Rng rng = Rng::stream(cfg.seed, j);
        const auto xj = detail::ar1_path(AR1{m.alpha, c.beta, c.sigma, c.rho}, cfg, rng);
        for (std::size_t t = 0; t < x.size(); ++t) x[t] += m.c * c.pi * xj[t];
    }
    return x;
}

/// Path of the anticipative AR(2): truncated MA sums seed X_{n-1}, X_{n-2}, then
/// X_t = psi1 X_{t+1} + psi2 X_{t+2} + eps_t backwards.
inline std::vector<double> simulate_ar2(const AR2& m, const PathConfig& cfg) {
    validate(m);
    validate(cfg);
    const auto [a1, a2] = ar2_roots(m.psi1, m.psi2);
    const std::size_t K = ma_truncation(std::max(std::abs(a1), std::abs(a2)), m.alpha, cfg.trunc_eps);
    const auto d = ar2_ma_coefficients(m.psi1, m.psi2, K);
    const std::size_t n = cfg.n_points;
    Rng rng = Rng::stream(cfg.seed, 0);
    const auto eps = sample_stable(StableParams{m.alpha, m.beta, m.sigma, 0.0}, n + K, rng);
    std::vector<double> x(n);
    for (std::size_t t : {n - 1, n - 2}) {
        double s = 0.0;
        for (std::size_t k = 0; k <= K && t + k < eps.size(); ++k) s += d[k] * eps[t + k];
        x[t] = s;
    }
    for (std::size_t t = n - 2; t-- > 0;) x[t] = m.psi1 * x[t + 1] + m.psi2 * x[t + 2] + eps[t];
    return x;
}

inline std::vector<double> simulate(const ProcessModel& model, const PathConfig& cfg) {
    if (auto p = std::get_if<AR1>(&model)) return simulate_ar1(*p, cfg);
    if (auto p = std::get_if<OU>(&model)) return simulate_ou(*p, cfg);
    if (auto p = std::get_if<Aggregated>(&model)) return simulate_agg(*p, cfg);
    return simulate_ar2(std::get<AR2>(model), cfg);
}

// ---------------------------------------------------------------------------
// Bubble episodes

struct Episode {
    std::size_t start, length;
};

/// Maximal runs of the path strictly above `threshold`. Runs touching either end
/// of the path are censored and dropped.
inline std::vector<Episode> detect_episodes(const std::vector<double>& x, double threshold) {
    std::vector<Episode> out;
    std::size_t t = 0;
    while (t < x.size()) {
        if (!(x[t] > threshold)) {
            ++t;
            continue;
        }
        const std::size_t s = t;
        while (t < x.size() && x[t] > threshold) ++t;
        if (s > 0 && t < x.size()) out.push_back({s, t - s});
    }
    return out;
}

struct SurvivalEstimate {
    int h;
    double empirical, expected, stderr_;
    std::size_t n_episodes;
};

/// Empirical P(duration >= h) over episodes, where duration counts the steps an
/// episode survives beyond its first exceedance (run length - 1). The
/// memory-less limit is |rho|^{alpha h}.
inline SurvivalEstimate survival_estimate(const std::vector<Episode>& eps, int h, double rho, double alpha) {
    if (eps.empty()) throw InsufficientData("no episodes detected");
    std::size_t k = 0;
    for (const auto& e : eps) k += (e.length >= static_cast<std::size_t>(h) + 1);
    SurvivalEstimate s;
    s.h = h;
    s.n_episodes = eps.size();
    s.empirical = static_cast<double>(k) / eps.size();
    s.expected = std::pow(std::abs(rho), alpha * h);
    s.stderr_ = std::sqrt(s.expected * (1.0 - s.expected) / eps.size());
    return s;
}

struct SurvivalConfig {
    double quantile = 0.995;  // episode threshold as a level of the marginal law
    std::size_t n_episodes = 500;
    std::size_t path_len = 2'000'000;
    std::size_t max_paths = 400;
    std::uint64_t seed = 0;
    double trunc_eps = 1e-10;
};

struct SurvivalReport {
    double threshold = 0.0;
    std::size_t n_paths = 0;
    std::vector<SurvivalEstimate> by_h;  // h = 1..hmax
};

/// Pools the first n_episodes episodes of independent AR(1) paths (path p uses
/// RNG stream (seed, p)) and estimates P(duration >= h) for h = 1..hmax.
inline SurvivalReport survival_experiment(const AR1& m, const SurvivalConfig& sc, int hmax = 3) {
    validate(m);
    if (!(m.rho > 0.0)) throw Unsupported("survival experiment needs rho > 0");
    if (!(sc.quantile > 0.5 && sc.quantile < 1.0)) throw ParameterError("quantile must lie in (0.5, 1)");
    if (sc.n_episodes == 0 || hmax < 1) throw ParameterError("need at least one episode and one horizon");
    const auto c = closed_form_constants(ProcessModel{m}, 1.0);
    const StableParams marg{m.alpha, c.beta1, c.sigma1(m.alpha), c.mu1.value_or(0.0)};
    SurvivalReport rep;
    rep.threshold = stable_quantile(marg, sc.quantile);
    const PathConfig cfg{sc.path_len, sc.seed, sc.trunc_eps, 1.0};
    validate(cfg);

    std::vector<Episode> pooled;
    const std::size_t batch = worker_count();
    while (pooled.size() < sc.n_episodes) {
        if (rep.n_paths >= sc.max_paths)
            throw InsufficientData("only " + std::to_string(pooled.size()) + " episodes in " +
                                   std::to_string(rep.n_paths) + " paths; lower the quantile or raise max_paths");
        const std::size_t nb = std::min(batch, sc.max_paths - rep.n_paths);
        std::vector<std::vector<Episode>> found(nb);
        parallel_for(nb, [&](std::size_t i) {
            Rng rng = Rng::stream(sc.seed, rep.n_paths + i);
            found[i] = detect_episodes(detail::ar1_path(m, cfg, rng), rep.threshold);
        });
        rep.n_paths += nb;
        for (const auto& f : found) pooled.insert(pooled.end(), f.begin(), f.end());
    }
    pooled.resize(sc.n_episodes);
    for (int h = 1; h <= hmax; ++h) rep.by_h.push_back(survival_estimate(pooled, h, m.rho, m.alpha));
    return rep;
}

}  // namespace sa
