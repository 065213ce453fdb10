#include <catch_amalgamated.hpp>

#include "stable_anticipate/moments.hpp"
#include "stable_anticipate/oracles.hpp"

#include <cmath>

using namespace sa;
using Catch::Approx;

namespace {

double simpson(const std::function<double(double)>& f, double a, double b, int n) {
    double s = 0.0;
    for (int i = 0; i <= n; ++i) s += ((i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0)) * f(a + (b - a) * i / n);
    return s * (b - a) / (3.0 * n);
}

}  // namespace

TEST_CASE("joint density: factorization and Fourier inversion agree", "[oracles]") {
    for (double alpha : {1.0, 1.5, 0.8}) {
        const auto rep = ar1_spectral(alpha, 0.3, 1.0, 0.5, 1);
        for (auto [x, y] : {std::pair{0.5, 0.2}, std::pair{-1.0, 2.0}, std::pair{3.0, 1.0}}) {
            const double a = cf_joint_pdf(rep, x, y), b = cf_joint_pdf_inversion(rep, x, y, 1e-9);
            CHECK(a == Approx(b).epsilon(1e-6));
            CHECK(a > 0.0);
        }
    }
    SpectralRep one;
    one.alpha = 1.5;
    one.atoms = {{1.0, 0.0, 1.0}, {-1.0, 0.0, 1.0}};
    CHECK_THROWS_AS(cf_joint_pdf(one, 0.0, 0.0), DomainError);
}

TEST_CASE("joint density marginals and independence", "[oracles]") {
    const auto rep = ar1_spectral(1.5, 0.3, 1.0, 0.5, 1);
    const auto c = bivariate_constants(rep);
    const StableParams mx{1.5, c.beta1, c.sigma1(1.5), 0.0};
    for (double x : {-1.0, 0.3, 2.0}) {
        auto f = [&](double y) { return cf_joint_pdf(rep, x, y); };
        // conditional tail decays like |y|^{-2 alpha - 2}, negligible beyond 300
        const double m = simpson(f, -300.0, -20.0, 400) + simpson(f, -20.0, 20.0, 800) + simpson(f, 20.0, 300.0, 400);
        CHECK(m == Approx(stable_pdf(mx, x).value).epsilon(1e-5));
    }
    // far horizons decouple the pair
    const auto far = ar1_spectral(1.5, 0.3, 1.0, 0.5, 40);
    const auto cf = bivariate_constants(far);
    const StableParams m{1.5, cf.beta1, cf.sigma1(1.5), 0.0};
    for (auto [x, y] : {std::pair{0.5, 0.2}, std::pair{-2.0, 1.0}})
        CHECK(cf_joint_pdf(far, x, y) == Approx(stable_pdf(m, x).value * stable_pdf(m, y).value).epsilon(1e-6));
}

TEST_CASE("characteristic-function oracle", "[oracles]") {
    // Cauchy: E[X2^2|x] - E[X2|x]^2 = x^2 + 1
    const ProcessModel cauchy{AR1{1.0, 0.0, 0.5, 0.5}};
    for (double x : {-3.0, 0.0, 1.5}) {
        const double m1 = cf_conditional_moment_oracle(cauchy, 1, x, 1).estimate;
        const double m2 = cf_conditional_moment_oracle(cauchy, 2, x, 1).estimate;
        CHECK(m2 - m1 * m1 == Approx(x * x + 1.0).epsilon(1e-7));
    }
    // rho > 0: the oracle mean is linear
    const ProcessModel fig{AR1{1.7, 0.8, 0.1, 0.95}};
    for (double x : {-5.0, -1.0, 1.0, 5.0}) {
        const auto o = cf_conditional_moment_oracle(fig, 1, x, 5);
        CHECK(o.estimate == Approx(std::pow(0.95, 1.7 * 5 - 5) * x).epsilon(1e-6));
        CHECK_FALSE(o.low_confidence);
        CHECK(o.tail_fraction >= 0.0);
    }
    // multi-line measures go through the derivative route
    for (const ProcessModel& m : {ProcessModel{OU{1.6, 0.4, 0.3}},
                                  ProcessModel{Aggregated{1.7, 1.0, {{0.5, 0.1, 0.1, 1.0}, {0.5, 0.9, 0.9, 1.0}}}}})
        for (int p = 1; p <= 4; ++p) {
            const auto o = cf_conditional_moment_oracle(m, p, 0.8, 2);
            const auto a = cond_moment(p, 0.8, m, 2, 1e-10);
            CHECK(o.estimate == Approx(a.value).epsilon(1e-7));
        }
    CHECK_THROWS_AS(cf_conditional_moment_oracle(fig, 5, 0.0, 1), DomainError);
}

TEST_CASE("binned Monte Carlo estimator", "[oracles]") {
    const ProcessModel fig{AR1{1.7, 0.8, 0.1, 0.95}};
    const auto r = mc_conditional_moment(fig, 1, 0.0, 0.01, 1, 400'000, 3);
    const double want = cond_moment(1, 0.0, fig, 1).value;
    CHECK(r.n_hits >= 200);
    CHECK(std::abs(r.estimate - want) < 4.0 * r.stderr_);
    CHECK_FALSE(r.heavy_tail_warning);

    const auto again = mc_conditional_moment(fig, 1, 0.0, 0.01, 1, 400'000, 3);
    CHECK(again.estimate == r.estimate);

    try {
        mc_conditional_moment(fig, 2, 5.0, 0.01, 1, 1000, 1);
        FAIL("expected InsufficientData");
    } catch (const InsufficientData& e) {
        CHECK(std::string(e.what()).find("half_width") != std::string::npos);
    }

    // no conditioning: the second moment does not exist for alpha < 2
    const ProcessModel sym{AR1{1.5, 0.0, 1.0, 0.5}};
    const auto wide2 = mc_conditional_moment(sym, 2, 0.0, 1e300, 1, 100'000, 5);
    CHECK(wide2.heavy_tail_warning);
    const auto wide1 = mc_conditional_moment(sym, 1, 0.0, 1e300, 1, 100'000, 5);
    CHECK(wide1.n_hits == 100'000);
    CHECK(std::abs(wide1.estimate) < 0.2);
    CHECK_THROWS_AS(mc_conditional_moment(sym, 1, 0.0, 0.0, 1, 100, 5), ParameterError);
}
