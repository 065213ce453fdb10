#include <catch_amalgamated.hpp>

#include "stable_anticipate/checks.hpp"
#include "stable_anticipate/quadrature.hpp"
#include "stable_anticipate/stable_core.hpp"

#include <cmath>
#include <complex>

using namespace sa;
using Catch::Approx;

namespace {

BivariateConstants consts(double s1a, double beta1, double mu1 = 0.0) {
    BivariateConstants k;
    k.sigma1_alpha = s1a;
    k.beta1 = beta1;
    k.mu1 = mu1;
    return k;
}

constexpr double euler_gamma = 0.57721566490153286;

}  // namespace

TEST_CASE("H-family basics", "[quadrature]") {
    const auto k = consts(0.8, 0.5);
    const auto z = eval_H(1.3, {0.0, 0.0}, 2.0, k, 1.7, 1e-10);
    CHECK(z.value == 0.0);
    CHECK(z.nodes_used == 0);
    CHECK_THROWS_AS(eval_H(-1.0, {1.0, 0.0}, 0.0, k, 1.7, 1e-10), DomainError);
    CHECK_THROWS_AS(eval_H(0.0, {1.0, 0.0}, 0.0, k, 1.7, 0.0), ParameterError);
    CHECK_THROWS_AS(eval_H(0.0, {1.0, 0.0}, 0.0, k, 1.0, 1e-10), DomainError);

    for (double alpha : {0.8, 1.3, 1.7})
        for (double x : {-4.0, -0.3, 0.0, 2.5}) {
            const auto r = eval_H(0.0, {1.0, 0.0}, x, k, alpha, 1e-11);
            const double f = stable_pdf({alpha, 0.5, std::pow(0.8, 1.0 / alpha), 0.0}, x).value;
            CHECK(r.value == Approx(pi * f).margin(1e-10));
            CHECK(r.abs_err_estimate >= 0.0);
            CHECK(r.nodes_used > 0);
        }
}

TEST_CASE("H against a dense trapezoid", "[quadrature]") {
    const double alpha = 1.7, s1a = 0.8, beta1 = 0.5, x = 1.2;
    const ThetaPair th{0.3, -0.7};
    const double y = 2.0 * (alpha - 1.0);
    const double c = tan_half_pi(alpha) * beta1 * s1a;
    const auto r = eval_H(y, th, x, consts(s1a, beta1), alpha, 1e-11);

    // integrand is below 1e-14 beyond T = 15
    const double T = 15.0;
    const long n = 10'000'000;
    const double du = T / n;
    double s = 0.0;
    for (long i = 1; i <= n; ++i) {
        const double u = i * du, ua = std::pow(u, alpha);
        const double ph = u * x - c * ua;
        const double g = std::exp(-s1a * ua) * std::pow(u, y) * (th.t1 * std::cos(ph) + th.t2 * std::sin(ph));
        s += (i == n ? 0.5 : 1.0) * g;
    }
    s *= du;
    CHECK(std::abs(r.value - s) < 1e-8);
}

TEST_CASE("alpha = 1 families against closed forms", "[quadrature]") {
    // beta1 = 0: with s = sigma1 - i x, int e^{-st} ln t dt = -(gamma + ln s)/s and
    // int e^{-st} ln^2 t dt = (pi^2/6 + (gamma + ln s)^2)/s
    for (double sig : {0.5, 1.0, 2.0})
        for (double x : {-3.0, 0.0, 0.7, 5.0}) {
            const auto k = consts(sig, 0.0, 0.4);
            const std::complex<double> s(sig, -(x - 0.4));
            const auto L = euler_gamma + std::log(s);
            const std::complex<double> I0 = 1.0 / s, I1 = I0 - L / s, I2 = I0 - 2.0 * L / s + (pi * pi / 6.0 + L * L) / s;
            const std::complex<double> want[3] = {I0, I1, I2};
            for (int n = 0; n <= 2; ++n) {
                const auto r = eval_Hcs(n, x, k, 1e-12);
                CHECK(r.c.value == Approx(want[n].real()).margin(1e-10));
                CHECK(r.s.value == Approx(want[n].imag()).margin(1e-10));
            }
            CHECK(eval_U(x, k, 1e-12).value == Approx(I0.imag()).margin(1e-10));
            CHECK(eval_V(x, k, 1e-12).value == Approx(I1.real()).margin(1e-10));
            CHECK(eval_W(x, k, 1e-12).value == Approx(I2.real()).margin(1e-10));
            // Hs(0) = ((x - mu1)/sigma1) pi f
            const double pif = pi * stable_pdf({1.0, 0.0, sig, 0.4}, x).value;
            CHECK(eval_Hcs(0, x, k, 1e-12).s.value == Approx((x - 0.4) / sig * pif).margin(1e-10));
        }
    CHECK_THROWS_AS(eval_Hcs(3, 0.0, consts(1.0, 0.0), 1e-10), DomainError);
}

TEST_CASE("alpha = 1 recursion for skewed marginals", "[quadrature]") {
    const double sig = 0.7, b = 0.6, mu = 0.3;
    const auto k = consts(sig, b, mu);
    for (double x : {-2.0, 0.5, 3.0}) {
        const auto h0 = eval_Hcs(0, x, k, 1e-12), h1 = eval_Hcs(1, x, k, 1e-12);
        CHECK(h0.c.value == Approx(pi * stable_pdf({1.0, b, sig, mu}, x).value).margin(1e-10));
        const double rec = (sig * h0.s.value - (x - mu) * h0.c.value) / ((2.0 / pi) * sig * b);
        CHECK(h1.c.value == Approx(rec).margin(1e-9));
    }
    // U ~ 1/x and W -> 0 in the far right tail
    double prev_u = 1.0, prev_w = 1.0;
    for (double x : {10.0, 100.0, 1e3, 1e4}) {
        const double du = std::abs(x * eval_U(x, k, 1e-12).value - 1.0);
        const double w = std::abs(eval_W(x, k, 1e-12).value);
        CHECK(du < prev_u);
        CHECK(w < prev_w);
        prev_u = du;
        prev_w = w;
    }
    CHECK(prev_u < 1e-3);
    CHECK(prev_w < 1e-2);
}

TEST_CASE("moment basis", "[quadrature]") {
    BasisCache cache;
    const auto k = consts(0.8, 0.5);
    const auto a = moment_basis(1.5, k, 1.7, 1e-10, cache);
    CHECK(a.nodes_used > 0);
    const auto b = moment_basis(1.5, k, 1.7, 1e-10, cache);
    CHECK(b.nodes_used == 0);
    for (int n = 0; n <= 4; ++n) {
        CHECK(b.C[n] == a.C[n]);
        CHECK(b.S[n] == a.S[n]);
    }
    CHECK(moment_basis(1.5, k, 1.7, 1e-11, cache).nodes_used > 0);
    CHECK(cache.size() == 2);
    cache.set_capacity(1);
    CHECK(cache.size() == 1);

    CHECK(a.f() == Approx(stable_pdf({1.7, 0.5, std::pow(0.8, 1.0 / 1.7), 0.0}, 1.5).value).margin(1e-10));
    for (int n = 0; n <= 4; ++n) {
        const auto h = eval_H(n * 0.7, {0.0, 1.0}, 1.5, k, 1.7, 1e-10);
        CHECK(a.S[n] == Approx(h.value).margin(1e-9));
    }

    // beta1 = 0: the sine basis is odd in x
    const auto s0 = moment_basis(0.0, consts(1.0, 0.0), 1.5, 1e-10, cache);
    for (int n = 0; n <= 4; ++n) CHECK(s0.S[n] == Approx(0.0).margin(1e-12));

    // entries with n(alpha - 1) <= -1 do not exist
    const auto lo = moment_basis(0.5, consts(1.0, 0.2), 0.4, 1e-10, cache);
    CHECK(std::isfinite(lo.C[0]));
    CHECK(std::isnan(lo.C[2]));
    CHECK_THROWS_AS(moment_basis(0.5, k, 1.0, 1e-10, cache), DomainError);
}

TEST_CASE("quadrature identity suite", "[quadrature]") {
    const auto rep = suite_quadrature();
    for (const auto& c : rep.checks) INFO(c.name << " " << c.detail);
    CHECK(rep.passed());
    CHECK(rep.checks.size() > 20);
}
