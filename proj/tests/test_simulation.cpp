#include <catch_amalgamated.hpp>

#include "stable_anticipate/moments.hpp"
#include "stable_anticipate/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

using namespace sa;
using Catch::Approx;

namespace {

double quantile(std::vector<double> v, double q) {
    const auto k = static_cast<std::size_t>(q * (v.size() - 1));
    std::nth_element(v.begin(), v.begin() + k, v.end());
    return v[k];
}

std::vector<double> thin(const std::vector<double>& x, std::size_t stride) {
    std::vector<double> out;
    for (std::size_t i = 0; i < x.size(); i += stride) out.push_back(x[i]);
    return out;
}

double ks_distance(std::vector<double> v, const StableParams& law) {
    std::sort(v.begin(), v.end());
    const double n = static_cast<double>(v.size());
    double d = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double F = stable_cdf(law, v[i], 1e-10).value;
        d = std::max({d, F - i / n, (i + 1) / n - F});
    }
    return d;
}

StableParams marginal(const ProcessModel& m) {
    const auto c = closed_form_constants(m, 1.0);
    const double a = model_alpha(m);
    return {a, c.beta1, c.sigma1(a), c.mu1.value_or(0.0) + model_shift(m, 1.0)[0]};
}

}  // namespace

TEST_CASE("paths are deterministic per seed", "[simulation]") {
    for (const ProcessModel& m : {ProcessModel{AR1{1.7, 0.8, 0.1, 0.95}}, ProcessModel{OU{1.5, 0.2, 0.3}},
                                  ProcessModel{Aggregated{1.6, 1.0, {{0.3, 0.5, 0.0, 1.0}, {0.7, 0.9, 0.4, 1.0}}}},
                                  ProcessModel{AR2{1.5, 0.0, 1.0, 1.1, -0.18}}}) {
        const PathConfig cfg{500, 11};
        const auto a = simulate(m, cfg), b = simulate(m, cfg);
        CHECK(a == b);
        CHECK(a.size() == 500);
        CHECK(simulate(m, PathConfig{500, 12}) != a);
        for (double v : a) CHECK(std::isfinite(v));
    }
    CHECK_THROWS_AS(simulate_ar1(AR1{1.7, 0.8, 0.1, 0.95}, PathConfig{1, 0}), ParameterError);
    CHECK_THROWS_AS(simulate_ar1(AR1{1.7, 0.8, 0.1, 0.95}, PathConfig{10, 0, 1e-2}), ParameterError);
    CHECK_THROWS_AS(simulate_ar1(AR1{1.7, 0.8, 0.1, 1.2}, PathConfig{10, 0}), DomainError);
}

TEST_CASE("AR(1) path satisfies its defining equation", "[simulation]") {
    const AR1 m{1.4, -0.3, 0.8, -0.7};
    const PathConfig cfg{2000, 5, 1e-12};
    const auto x = simulate_ar1(m, cfg);
    Rng rng = Rng::stream(5, 0);
    const auto eps = sample_stable({m.alpha, m.beta, m.sigma, 0.0}, cfg.n_points + ar1_truncation(m.rho, m.alpha, 1e-12), rng);
    for (std::size_t t = 0; t + 1 < x.size(); ++t)
        CHECK(x[t] - m.rho * x[t + 1] == Approx(eps[t]).margin(1e-9 * (1.0 + std::abs(x[t]))));
    // neglected scale mass of the seed sum stays below trunc_eps
    const std::size_t K = ar1_truncation(0.95, 1.7, 1e-10);
    CHECK(std::pow(0.95, 1.7 * (K + 1)) / (1.0 - std::pow(0.95, 1.7)) < 1e-10);
}

TEST_CASE("AR(1) marginal law", "[simulation]") {
    // scale via the interquartile range, rho = 0.5 and beta = 0
    const AR1 m{1.5, 0.0, 1.0, 0.5};
    const auto x = simulate_ar1(m, PathConfig{100'000, 21});
    const double s1 = std::pow(1.0 / (1.0 - std::pow(0.5, 1.5)), 1.0 / 1.5);
    const StableParams unit{1.5, 0.0, 1.0, 0.0};
    const double iqr_unit = stable_quantile(unit, 0.75) - stable_quantile(unit, 0.25);
    const double est = (quantile(x, 0.75) - quantile(x, 0.25)) / iqr_unit;
    CHECK(est == Approx(s1).epsilon(0.05));

    // Kolmogorov-Smirnov after thinning, 1% critical value 1.628/sqrt(n)
    for (const ProcessModel& mm : {ProcessModel{AR1{1.5, 0.5, 1.2, 0.5}}, ProcessModel{AR1{1.8, -0.6, 0.5, -0.7}}}) {
        const auto path = thin(simulate(mm, PathConfig{500'000, 3}), 50);
        REQUIRE(path.size() == 10'000);
        CHECK(ks_distance(path, marginal(mm)) < 1.628 / std::sqrt(10'000.0));
    }
}

TEST_CASE("OU path matches its marginal law", "[simulation]") {
    // alpha = 1 carries deterministic drift terms in the exact step
    for (const OU& m : {OU{1.0, 0.8, 1.0}, OU{1.0, -0.5, 0.3}, OU{1.6, 0.4, 0.5}}) {
        const ProcessModel pm{m};
        const auto law = marginal(pm);
        if (m.alpha == 1.0) CHECK(law.mu == Approx(2.0 * m.beta / (pi * m.lambda)).epsilon(1e-12));
        const auto path = thin(simulate_ou(m, PathConfig{200'000, 9, 1e-10, 1.0}), 20);
        CHECK(ks_distance(path, law) < 1.628 / std::sqrt(static_cast<double>(path.size())));
    }
    // a fine grid and a coarse grid see the same law
    const OU m{1.0, 0.8, 1.0};
    const auto fine = thin(simulate_ou(m, PathConfig{400'000, 4, 1e-10, 0.1}), 100);
    CHECK(ks_distance(fine, marginal(ProcessModel{m})) < 1.628 / std::sqrt(static_cast<double>(fine.size())));
}

TEST_CASE("model reductions", "[simulation]") {
    const PathConfig cfg{3000, 17};
    CHECK(simulate_agg(Aggregated{1.6, 1.0, {{1.0, 0.7, 0.3, 0.9}}}, cfg) == simulate_ar1(AR1{1.6, 0.3, 0.9, 0.7}, cfg));

    const auto a = simulate_ar2(AR2{1.6, 0.3, 0.9, 0.7, 0.0}, cfg), b = simulate_ar1(AR1{1.6, 0.3, 0.9, 0.7}, cfg);
    REQUIRE(a.size() == b.size());
    for (std::size_t t = 0; t < a.size(); ++t) CHECK(a[t] == Approx(b[t]).margin(1e-6 * (1.0 + std::abs(b[t]))));
}

TEST_CASE("AR(2) recursion residual is the noise", "[simulation]") {
    const AR2 m{1.5, 0.4, 1.0, 1.1, -0.18};
    const auto x = simulate_ar2(m, PathConfig{200'000, 8});
    const StableParams noise{1.5, 0.4, 1.0, 0.0};
    const double n = static_cast<double>(x.size() - 2);
    for (double u : {0.3, 1.0, 3.0}) {
        std::complex<double> s{0.0, 0.0};
        for (std::size_t t = 0; t + 2 < x.size(); ++t)
            s += std::exp(std::complex<double>(0.0, u * (x[t] - m.psi1 * x[t + 1] - m.psi2 * x[t + 2])));
        CHECK(std::abs(s / n - stable_char_fn(noise, u)) < 3.0 / std::sqrt(n));
    }
}

TEST_CASE("reference path shows bubbles", "[simulation]") {
    const auto x = simulate_ar1(AR1{1.7, 0.8, 0.1, 0.95}, PathConfig{2000, 7});
    std::vector<double> a(x.size());
    std::transform(x.begin(), x.end(), a.begin(), [](double v) { return std::abs(v); });
    const double mx = *std::max_element(a.begin(), a.end());
    CHECK(mx / quantile(a, 0.5) > 10.0);
    // the run up to the peak grows at rate close to 1/rho
    const auto it = std::max_element(x.begin(), x.end());
    const auto t = static_cast<std::size_t>(it - x.begin());
    REQUIRE(t >= 3);
    CHECK(x[t - 1] / x[t] == Approx(0.95).margin(0.05));
    CHECK(x[t - 2] / x[t - 1] == Approx(0.95).margin(0.05));
}

TEST_CASE("episode detection", "[simulation]") {
    const std::vector<double> x{5, 0, 3, 4, 0, 2, 0, 0, 7, 8, 9, 0, 6};
    const auto e = detect_episodes(x, 1.0);
    REQUIRE(e.size() == 3);
    CHECK(e[0].start == 2);
    CHECK(e[0].length == 2);
    CHECK(e[1].length == 1);
    CHECK(e[2].start == 8);
    CHECK(e[2].length == 3);
    const auto s = survival_estimate(e, 1, 0.9, 1.5);
    CHECK(s.empirical == Approx(2.0 / 3.0));
    CHECK(s.expected == Approx(std::pow(0.9, 1.5)));
    CHECK(survival_estimate(e, 2, 0.9, 1.5).empirical == Approx(1.0 / 3.0));
    CHECK_THROWS_AS(survival_estimate({}, 1, 0.9, 1.5), InsufficientData);
}

TEST_CASE("bubble survival approaches rho^(alpha h) as the threshold rises", "[simulation]") {
    const AR1 m{1.7, 0.8, 0.1, 0.95};
    SurvivalConfig lo;
    lo.n_episodes = 2000;
    lo.seed = 1;
    SurvivalConfig hi = lo;
    hi.quantile = 0.999;
    const auto a = survival_experiment(m, lo), b = survival_experiment(m, hi);
    CHECK(b.threshold > a.threshold);
    for (int h = 1; h <= 3; ++h) {
        const auto& ea = a.by_h[h - 1];
        const auto& eb = b.by_h[h - 1];
        CHECK(ea.n_episodes == 2000);
        CHECK(ea.expected == Approx(std::pow(0.95, 1.7 * h)));
        // finite-threshold bias: survival is underestimated, less so further out
        CHECK(ea.empirical < ea.expected);
        CHECK(std::abs(eb.empirical - eb.expected) < std::abs(ea.empirical - ea.expected));
        CHECK(std::abs(eb.empirical - eb.expected) < 3.0 * eb.stderr_);
    }
    CHECK_THROWS_AS(survival_experiment(AR1{1.7, 0.8, 0.1, -0.95}, lo), Unsupported);
    SurvivalConfig bad = lo;
    bad.quantile = 1.0;
    CHECK_THROWS_AS(survival_experiment(m, bad), ParameterError);
    SurvivalConfig tiny = lo;
    tiny.path_len = 1000;
    tiny.max_paths = 2;
    CHECK_THROWS_AS(survival_experiment(m, tiny), InsufficientData);
}
