#include <catch_amalgamated.hpp>

#include "stable_anticipate/spectral.hpp"

#include <cmath>

using namespace sa;
using Catch::Approx;

namespace {

std::size_t positive_atoms(const SpectralRep& r) {
    std::size_t n = 0;
    for (const auto& a : r.atoms) n += a.mass > 0.0;
    return n;
}

void check_well_formed(const SpectralRep& r) {
    for (const auto& a : r.atoms) {
        CHECK(std::hypot(a.s1, a.s2) == Approx(1.0).epsilon(1e-14));
        CHECK(a.mass >= 0.0);
    }
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

TEST_CASE("AR(1) spectral measure", "[spectral]") {
    for (double alpha : {0.7, 1.0, 1.5, 1.9})
        for (double beta : {-1.0, 0.0, 0.4, 1.0})
            for (double rho : {-0.8, 0.3, 0.95})
                for (int h : {1, 2, 5}) {
                    const auto r = ar1_spectral(alpha, beta, 0.7, rho, h);
                    check_well_formed(r);
                    if (alpha != 1.0) {
                        CHECK(r.shift[0] == 0.0);
                        CHECK(r.shift[1] == 0.0);
                    }
                    if (beta == 1.0 && rho > 0.0) CHECK(positive_atoms(r) == 2);
                }
    const auto r = ar1_spectral(1.0, 0.0, 0.5, 0.5, 1);
    CHECK(r.total_mass() == Approx(0.5 + std::sqrt(1.25)).epsilon(1e-14));
    CHECK(r.total_mass() == Approx(1.618034).epsilon(1e-6));
    CHECK_THROWS_AS(ar1_spectral(1.5, 0.0, 1.0, 1.0, 1), DomainError);
    CHECK_THROWS_AS(ar1_spectral(1.5, 0.0, 1.0, 0.0, 1), DomainError);
    CHECK_THROWS_AS(ar1_spectral(1.5, 0.0, 1.0, 0.5, 0), DomainError);
}

TEST_CASE("OU spectral measure", "[spectral]") {
    const auto r = ou_spectral(1.7, 1.0, 0.1, 3.0);
    check_well_formed(r);
    CHECK(positive_atoms(r) == 2);
    CHECK(r.shift[0] == 0.0);
    CHECK(r.shift[1] == 0.0);
    // alpha = 1: mu-bar = -(1/(2 pi)) ln 5 enters the first shift next to 2 beta/(lambda pi)
    const auto c = ou_spectral(1.0, 1.0, 1.0, std::log(2.0));
    CHECK(c.shift[0] == Approx(-std::log(5.0) / (2.0 * pi) + 2.0 / pi).epsilon(1e-14));
    CHECK_THROWS_AS(ou_spectral(1.5, 0.0, 0.0, 1.0), DomainError);
    CHECK_THROWS_AS(ou_spectral(1.5, 0.0, 1.0, 0.0), DomainError);
}

TEST_CASE("aggregated spectral measure", "[spectral]") {
    for (double alpha : {1.0, 1.6}) {
        const auto a = agg_spectral(Aggregated{alpha, 1.0, {{1.0, 0.6, 0.3, 0.8}}}, 2);
        const auto b = ar1_spectral(alpha, 0.3, 0.8, 0.6, 2);
        REQUIRE(a.atoms.size() == b.atoms.size());
        for (std::size_t i = 0; i < a.atoms.size(); ++i) {
            CHECK(a.atoms[i].s1 == b.atoms[i].s1);
            CHECK(a.atoms[i].s2 == b.atoms[i].s2);
            CHECK(a.atoms[i].mass == Approx(b.atoms[i].mass).epsilon(1e-15));
        }
        CHECK(a.shift[0] == Approx(b.shift[0]).margin(1e-15));
        CHECK(a.shift[1] == Approx(b.shift[1]).margin(1e-15));
    }
    const Aggregated two{1.5, 1.0, {{0.5, 0.1, 0.2, 1.0}, {0.5, 0.9, -0.3, 1.0}}};
    const auto r = agg_spectral(two, 1);
    check_well_formed(r);
    std::size_t off_axis = 0;
    for (const auto& a : r.atoms) off_axis += std::abs(a.s2) > 1e-12;
    CHECK(off_axis == 4);
    CHECK(r.shift[0] == 0.0);
    double s = 0.0;
    for (double w : aggregation_weights(two)) s += w;
    CHECK(s == Approx(1.0).epsilon(1e-14));
    CHECK_THROWS_AS(agg_spectral(Aggregated{1.5, 1.0, {{0.5, 0.5, 0.0, 1.0}, {0.4, 0.5, 0.0, 1.0}}}, 1), DomainError);
}

TEST_CASE("moving-average spectral measure", "[spectral]") {
    const auto one = ma_spectral(1.5, 0.0, 2.0, 0.0, {1.0}, {0.0});
    REQUIRE(one.atoms.size() == 2);
    for (const auto& a : one.atoms) {
        CHECK(std::abs(a.s1) == 1.0);
        CHECK(a.s2 == 0.0);
        CHECK(a.mass == Approx(std::pow(2.0, 1.5) / 2.0));
    }
    CHECK_THROWS_AS(ma_spectral(1.5, 0.0, 1.0, 0.0, {0.0, 0.0}, {0.0, 0.0}), DomainError);

    // AR(1) as MA(inf): X_t = sum rho^k eps_{t+k}, X_{t+h} = sum rho^{k-h} eps_{t+k}
    const double rho = 0.6, alpha = 1.4, beta = 0.5, sigma = 0.9;
    const int h = 2, K = 200;
    std::vector<double> d1(K + 1), d2(K + 1);
    for (int k = 0; k <= K; ++k) {
        d1[k] = std::pow(rho, k);
        d2[k] = k >= h ? std::pow(rho, k - h) : 0.0;
    }
    const auto a = bivariate_constants(ma_spectral(alpha, beta, sigma, 0.0, d1, d2));
    const auto b = closed_form_constants(AR1{alpha, beta, sigma, rho}, h);
    CHECK(rel(a.sigma1_alpha, b.sigma1_alpha) < 1e-12);
    CHECK(rel(a.beta1, b.beta1) < 1e-12);
    for (int p = 1; p <= 4; ++p) {
        CHECK(rel(a.k(p), b.k(p)) < 1e-12);
        CHECK(rel(a.l(p), b.l(p)) < 1e-12);
    }
}

TEST_CASE("AR(2) moving-average coefficients", "[spectral]") {
    // roots a1 = a2 = 0.5: psi1 = 1, psi2 = -0.25
    CHECK(ar2_ma_coefficients(1.0, -0.25, 3)[3] == Approx(0.5).epsilon(1e-15));
    // roots 0.9 and 0.2: psi1 = 1.1, psi2 = -0.18
    const auto d = ar2_ma_coefficients(1.1, -0.18, 10);
    CHECK(d[0] == 1.0);
    CHECK(d[2] == Approx(1.03).epsilon(1e-14));
    for (int k = 0; k <= 10; ++k)
        CHECK(d[k] == Approx((std::pow(0.9, k + 1) - std::pow(0.2, k + 1)) / 0.7).epsilon(1e-13));
    CHECK_THROWS_AS(ar2_ma_coefficients(0.5, -0.5, 3), DomainError);
    CHECK_THROWS_AS(ar2_ma_coefficients(1.5, -0.2, 3), DomainError);

    // atoms of the AR(2) vector point along +-(d_k, d_{k-1})
    const auto r = ar2_spectral(AR2{1.5, 0.0, 1.0, 1.1, -0.18}, 1);
    check_well_formed(r);
    for (int k = 1; k <= 5; ++k) {
        const double n = std::hypot(d[k], d[k - 1]);
        bool found = false;
        for (const auto& a : r.atoms) found |= std::hypot(a.s1 - d[k] / n, a.s2 - d[k - 1] / n) < 1e-12;
        CHECK(found);
    }
}

TEST_CASE("bivariate constants from the spectral measure", "[spectral]") {
    for (int h = 1; h <= 50; ++h) {
        const auto c = bivariate_constants(ar1_spectral(1.7, 0.8, 0.1, 0.95, h));
        CHECK(rel(c.sigma1_alpha, std::pow(0.1, 1.7) / (1.0 - std::pow(0.95, 1.7))) < 1e-12);
        for (int p = 1; p <= 4; ++p) CHECK(std::abs(c.l(p) - c.beta1 * c.k(p)) < 1e-12);
    }
    CHECK(bivariate_constants(ar1_spectral(1.7, 0.8, 0.1, 0.95, 1)).k(1) == Approx(std::pow(0.95, 0.7)).epsilon(1e-14));
    CHECK(std::pow(0.95, 0.7) == Approx(0.964731).epsilon(1e-6));

    const auto o = closed_form_constants(OU{1.5, 0.6, 0.1}, 2.0);
    CHECK(o.k(2) == Approx(std::exp(0.1)).epsilon(1e-13));
    for (int p = 1; p <= 4; ++p) CHECK(o.l(p) == Approx(0.6 * o.k(p)).epsilon(1e-13));

    const auto s = bivariate_constants(ou_spectral(1.5, 0.6, 0.1, 2.0));
    for (int p = 1; p <= 4; ++p) CHECK(rel(s.k(p), o.k(p)) < 1e-12);

    const auto cauchy = closed_form_constants(AR1{1.0, 0.0, 0.5, 0.5}, 1);
    CHECK(cauchy.k(1) == Approx(1.0).epsilon(1e-14));
    CHECK(cauchy.k(2) == Approx(2.0).epsilon(1e-14));
    CHECK(cauchy.sigma1(1.0) == Approx(1.0).epsilon(1e-14));

    const auto sym = closed_form_constants(AR1{1.3, 0.0, 1.0, -0.6}, 3);
    for (int p = 1; p <= 4; ++p) CHECK(sym.l(p) == 0.0);

    CHECK_THROWS_AS(closed_form_constants(AR2{1.5, 0.0, 1.0, 1.1, -0.18}, 1), Unsupported);

    // an atom on the s2 axis gives X1 no information on that direction
    SpectralRep bad;
    bad.alpha = 1.5;
    bad.atoms = {{1.0, 0.0, 1.0}, {0.0, 1.0, 0.5}};
    CHECK_THROWS_AS(bivariate_constants(bad), MomentNonexistence);
}

TEST_CASE("nu-integral", "[spectral]") {
    const auto r = ar1_spectral(1.6, 0.3, 1.0, 0.7, 2);
    CHECK(nu_integral(r, 0.0) == Approx(r.total_mass()).epsilon(1e-14));
    for (double nu : {1.0, 2.0, 3.0}) CHECK(std::isfinite(nu_integral(r, nu)));
    const AR2 m{1.5, 0.2, 1.0, 1.2, -0.35};
    const double a = nu_integral(ar2_spectral(m, 2, 60), 3.0), b = nu_integral(ar2_spectral(m, 2, 120), 3.0);
    CHECK(std::isfinite(a));
    CHECK(std::abs(a - b) <= 1e-8 * b);
}
