#pragma once

#include "stable_anticipate/common.hpp"
#include "stable_anticipate/models.hpp"
#include "stable_anticipate/moments.hpp"
#include "stable_anticipate/parallel.hpp"
#include "stable_anticipate/quadrature.hpp"
#include "stable_anticipate/spectral.hpp"
#include "stable_anticipate/stable_core.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <vector>

namespace sa {

// ---------------------------------------------------------------------------
// Reference density. Uses Zolotarev's non-oscillatory integral (in Nolan's
// form) in the body and the convergent/asymptotic power series in the far
// tails, so it shares no code path with stable_pdf.

namespace detail {

inline double zolotarev_pdf_std(double alpha, double beta, double x);

// Density of S(alpha, beta, 1, 0) for x > 0 from the tail expansion
// f(x) = (1/pi) sum_k Re[(-g)^k e^{-i pi (k alpha + 1)/2}] Gamma(k alpha + 1)/k! x^{-k alpha - 1},
// g = 1 - i beta tan(pi alpha / 2). Returns NaN when x is below the switch point.
inline double tail_series_pdf_std(double alpha, double beta, double x) {
    constexpr int N = 10;
    if (1.0 + beta < 1e-6) return std::nan("");
    const std::complex<double> g(1.0, -beta * tan_half_pi(alpha));
    const double c1 = (1.0 + beta) * std::sin(pi * alpha / 2.0) * std::tgamma(alpha + 1.0) / pi;
    const double lc = N * std::log(std::abs(g)) + std::lgamma(N * alpha + 1.0) - std::lgamma(N + 1.0) - std::log(pi);
    const double xsw = std::exp((lc - std::log(1e-17 * c1)) / ((N - 1) * alpha));
    if (x < xsw) return std::nan("");
    double s = 0.0;
    std::complex<double> gk(1.0, 0.0);
    for (int k = 1; k <= N; ++k) {
        gk *= -g;
        const std::complex<double> rot = std::polar(1.0, -pi * (k * alpha + 1.0) / 2.0);
        const double lw = std::lgamma(k * alpha + 1.0) - std::lgamma(k + 1.0) - (k * alpha + 1.0) * std::log(x);
        s += (gk * rot).real() * std::exp(lw);
    }
    return std::max(s / pi, 0.0);
}

// Integrates w e^{-w} over (lo, hi) given ln w(theta), monotone in theta.
template <class LnW>
double peak_integral(LnW&& lnw, double lo, double hi) {
    if (!(hi > lo)) return 0.0;
    std::vector<std::pair<double, double>> panels;
    const double a = lnw(lo + 1e-15 * (hi - lo)), b = lnw(hi - 1e-15 * (hi - lo));
    double mid = std::nan("");
    if ((a < 0.0) != (b < 0.0)) {
        double l = lo, r = hi;
        const bool inc = a < b;
        for (int i = 0; i < 1100 && r - l > 4e-16 * std::max(std::abs(l), std::abs(r)); ++i) {
            const double m = 0.5 * (l + r);
            ((lnw(m) < 0.0) == inc ? l : r) = m;
        }
        mid = 0.5 * (l + r);
    }
    auto split = [&](double u, double v, int n) {
        for (int i = 0; i < n; ++i) panels.emplace_back(u + (v - u) * i / n, u + (v - u) * (i + 1) / n);
    };
    if (std::isnan(mid)) {
        split(lo, hi, 8);
    } else {
        // geometric refinement around the peak, starting at its local width
        std::vector<double> pts{lo, hi, mid};
        const double l0 = lnw(mid);
        for (double dir : {-1.0, 1.0}) {
            const double room = dir < 0 ? mid - lo : hi - mid;
            double w = room;
            while (w > 1e-300 && !(std::abs(lnw(mid + dir * w) - l0) <= 1.0)) w *= 0.5;
            for (double d = 0.25 * w; d < room; d *= 2.0) pts.push_back(mid + dir * d);
        }
        std::sort(pts.begin(), pts.end());
        for (std::size_t i = 0; i + 1 < pts.size(); ++i)
            if (pts[i + 1] > pts[i]) panels.emplace_back(pts[i], pts[i + 1]);
    }
    auto f = [&](double t) {
        const double l = lnw(t);
        return std::array<double, 1>{l > 700.0 ? 0.0 : std::exp(l - std::exp(l))};
    };
    const auto r = integrate_panels<1>(f, panels, 1e-18, 1e-13);
    require_converged(r.converged, r.value[0], r.err[0]);
    return r.value[0];
}

inline double zolotarev_pdf_std(double alpha, double beta, double x) {
    if (alpha == 1.0) {
        if (beta == 0.0) return 1.0 / (pi * (1.0 + x * x));
        if (beta < 0.0) return zolotarev_pdf_std(1.0, -beta, -x);
        // measure the angle from the endpoint the peak moves to as |x| grows,
        // u = theta + pi/2 for x < 0 and u = pi/2 - theta otherwise
        const double b = beta, sg = x < 0.0 ? 1.0 : -1.0;
        auto lnw = [x, b, sg](double u) {
            const double h = 0.5 * pi * (1.0 - sg * b) + sg * b * u;
            return -pi * x / (2.0 * b) + std::log(2.0 / pi) + std::log(h) - std::log(std::sin(u)) -
                   sg * h * std::cos(u) / (b * std::sin(u));
        };
        return peak_integral(lnw, 0.0, pi) / (2.0 * b);
    }
    const double t = beta * tan_half_pi(alpha);
    const double th0 = std::atan(t) / alpha;
    const double f0 = std::tgamma(1.0 + 1.0 / alpha) * std::cos(th0) / (pi * std::pow(1.0 + t * t, 1.0 / (2.0 * alpha)));
    // the integrand degenerates as x -> 0; interpolate through the exact value at 0
    constexpr double dz = 1e-4;
    if (x == 0.0) return f0;
    if (std::abs(x) < dz && !(alpha < 1.0 && std::abs(beta) == 1.0)) {
        const double fp = zolotarev_pdf_std(alpha, beta, dz), fm = zolotarev_pdf_std(alpha, beta, -dz);
        const double u = x / dz;
        return f0 + 0.5 * u * (fp - fm) + 0.5 * u * u * (fp + fm - 2.0 * f0);
    }
    if (x < 0.0) return zolotarev_pdf_std(alpha, -beta, -x);
    const double ts = tail_series_pdf_std(alpha, beta, x);
    if (!std::isnan(ts)) return ts;
    const double e = alpha / (alpha - 1.0);
    const double c0 = std::log(std::cos(alpha * th0)) / (alpha - 1.0) + e * std::log(x);
    auto lnw = [=](double th) {
        const double lc = std::log(std::cos(th));
        // both factors vanish at an endpoint and can round to tiny negatives there
        return c0 + e * (lc - std::log(std::abs(std::sin(alpha * (th0 + th))))) +
               std::log(std::abs(std::cos(alpha * th0 + (alpha - 1.0) * th))) - lc;
    };
    return alpha / (pi * std::abs(alpha - 1.0) * x) * peak_integral(lnw, -th0, pi / 2.0);
}

}  // namespace detail

/// Stable density from Zolotarev's integral representation and tail series.
inline double reference_pdf(const StableParams& p, double x) {
    double z = x - p.mu;
    if (p.alpha == 1.0) z -= (2.0 / pi) * p.beta * p.sigma * std::log(p.sigma);
    return detail::zolotarev_pdf_std(p.alpha, p.beta, z / p.sigma) / p.sigma;
}

// ---------------------------------------------------------------------------
// Line decomposition of a discrete spectral measure: X = mu0 + sum_l Z_l d_l
// with independent univariate stable Z_l, one per line through the origin.

struct SpectralLine {
    double d1, d2;  // unit direction
    StableParams law;
};

inline std::vector<SpectralLine> spectral_lines(const SpectralRep& rep) {
    struct Acc {
        double d1, d2, plus, minus;
    };
    std::vector<Acc> acc;
    for (const auto& a : rep.atoms) {
        if (!(a.mass > 0.0)) continue;
        double d1 = a.s1, d2 = a.s2;
        bool flip = d1 < 0.0 || (d1 == 0.0 && d2 < 0.0);
        if (flip) {
            d1 = -d1;
            d2 = -d2;
        }
        auto it = std::find_if(acc.begin(), acc.end(),
                               [&](const Acc& o) { return std::hypot(o.d1 - d1, o.d2 - d2) <= 1e-12; });
        if (it == acc.end()) {
            acc.push_back({d1, d2, 0.0, 0.0});
            it = acc.end() - 1;
        }
        (flip ? it->minus : it->plus) += a.mass;
    }
    std::vector<SpectralLine> out;
    for (const auto& l : acc) {
        const double m = l.plus + l.minus;
        out.push_back({l.d1, l.d2, {rep.alpha, std::clamp((l.plus - l.minus) / m, -1.0, 1.0), std::pow(m, 1.0 / rep.alpha), 0.0}});
    }
    return out;
}

namespace detail {

// Rough location of a stable law (its S0 centre).
inline double law_centre(const StableParams& p) {
    if (p.alpha == 1.0) return (2.0 / pi) * p.beta * p.sigma * std::log(p.sigma) + p.mu;
    return -p.beta * p.sigma * tan_half_pi(p.alpha) + p.mu;
}

// Radial integral int_0^inf r e^{-A r^alpha} cos(phase(r)) dr of the polar 2-D inversion.
inline double radial_integral(double alpha, double A, double B, double z, double k, double tol) {
    const double scale = std::pow(A, -1.0 / alpha);
    const double T = exp_power_truncation(A, alpha, 1.0, std::min(tol, 1e-3) * 1e-3);
    std::function<double(double, double)> rate;
    std::function<double(double)> phase;
    if (alpha == 1.0) {
        rate = [z, k](double u1, double u2) {
            return std::abs(z) + std::abs(k) * std::max(std::abs(1.0 + std::log(u1)), std::abs(1.0 + std::log(u2)));
        };
        phase = [z, k](double r) { return r * z + k * r * std::log(r); };
    } else {
        rate = [z, B, alpha](double u1, double u2) {
            return std::abs(z) + alpha * std::abs(B) * std::max(std::pow(u1, alpha - 1.0), std::pow(u2, alpha - 1.0));
        };
        phase = [z, B, alpha](double r) { return r * z - B * std::pow(r, alpha); };
    }
    const double xr = rate(scale, scale);
    const double u0 = std::min({scale, pi / std::max(xr, 1e-300), 0.5 * T});
    const OscLayout L = make_osc_layout(u0, 1, T, rate);
    auto g = [&](double r) { return std::array<double, 1>{r * std::exp(-A * std::pow(r, alpha)) * std::cos(phase(r))}; };
    auto f = osc_integrand(L, g);
    const auto res = integrate_panels<1>(f, L.panels, tol, 0.0);
    require_converged(res.converged, res.value[0], res.err[0]);
    return res.value[0];
}

}  // namespace detail

/// Joint density of the vector by polar 2-D Fourier inversion of its characteristic
/// function: f(x,y) = (1/(2 pi^2)) int_0^pi int_0^inf r Re[phi(r e) e^{-i r <e,(x,y)>}] dr dw.
inline double cf_joint_pdf_inversion(const SpectralRep& rep, double x, double y, double tol) {
    detail::require_tol(tol);
    const double a = rep.alpha, ta = (a == 1.0) ? 0.0 : tan_half_pi(a);
    std::vector<std::pair<double, double>> panels;
    std::vector<double> kinks{0.0, pi};
    for (const auto& at : rep.atoms) {
        double w = std::atan2(at.s2, at.s1) + pi / 2.0;
        w = std::fmod(std::fmod(w, pi) + pi, pi);
        kinks.push_back(w);
    }
    std::sort(kinks.begin(), kinks.end());
    for (std::size_t i = 0; i + 1 < kinks.size(); ++i) {
        const double lo = kinks[i], hi = kinks[i + 1];
        if (hi - lo < 1e-14) continue;
        for (int j = 0; j < 4; ++j) panels.emplace_back(lo + (hi - lo) * j / 4, lo + (hi - lo) * (j + 1) / 4);
    }
    const double dx = x - rep.shift[0], dy = y - rep.shift[1];
    const double inner_tol = tol * 0.1;
    auto outer = [&](double w) {
        const double e1 = std::cos(w), e2 = std::sin(w);
        double A = 0.0, B = 0.0, k = 0.0, D = 0.0;
        for (const auto& at : rep.atoms) {
            const double p = e1 * at.s1 + e2 * at.s2;
            if (p == 0.0) continue;
            if (a == 1.0) {
                A += at.mass * std::abs(p);
                k += (2.0 / pi) * at.mass * p;
                D += (2.0 / pi) * at.mass * p * std::log(std::abs(p));
            } else {
                A += at.mass * std::pow(std::abs(p), a);
                B += ta * at.mass * spow(p, a);
            }
        }
        const double z = e1 * dx + e2 * dy + D;
        return std::array<double, 1>{detail::radial_integral(a, A, B, z, k, inner_tol)};
    };
    const auto r = integrate_panels<1>(outer, panels, tol * 2.0 * pi * pi * 0.5, 0.0);
    detail::require_converged(r.converged, r.value[0], r.err[0]);
    return r.value[0] / (2.0 * pi * pi);
}

/// Joint density of a bivariate stable vector. Measures supported on at most
/// two lines factor into independent univariate laws; otherwise the density
/// is obtained by 2-D Fourier inversion.
inline double cf_joint_pdf(const SpectralRep& rep, double x, double y, double tol = 1e-8) {
    detail::require_tol(tol);
    const auto lines = spectral_lines(rep);
    if (lines.size() < 2) throw DomainError("spectral measure is degenerate (supported on one line)");
    if (lines.size() > 2) return cf_joint_pdf_inversion(rep, x, y, tol);
    const auto& L1 = lines[0];
    const auto& L2 = lines[1];
    const double det = L1.d1 * L2.d2 - L2.d1 * L1.d2;
    const double dx = x - rep.shift[0], dy = y - rep.shift[1];
    const double z1 = (dx * L2.d2 - L2.d1 * dy) / det;
    const double z2 = (L1.d1 * dy - dx * L1.d2) / det;
    return reference_pdf(L1.law, z1) * reference_pdf(L2.law, z2) / std::abs(det);
}

struct OracleResult {
    double estimate = 0.0;
    double err = 0.0;
    double tail_fraction = 0.0;  // share of the value carried by the tail completion
    bool low_confidence = false;
};

namespace detail {

// E[X2^p | X1 = x] for a two-line measure: one-dimensional integral over the
// coordinate of the second line.
inline OracleResult two_line_moment(const SpectralRep& rep, const std::vector<SpectralLine>& lines, int p, double x,
                                    double tol) {
    // i: line eliminated through X1 = x, j: integration variable
    std::size_t j = std::abs(lines[0].d2 / lines[0].d1) > std::abs(lines[1].d2 / lines[1].d1) ? 0 : 1;
    const auto& Li = lines[1 - j];
    const auto& Lj = lines[j];
    const double xr = x - rep.shift[0];
    auto integrand = [&](double z) {
        const double zi = (xr - z * Lj.d1) / Li.d1;
        const double w = reference_pdf(Li.law, zi) * reference_pdf(Lj.law, z);
        std::array<double, 5> r{};
        if (w == 0.0) return r;
        const double x2 = zi * Li.d2 + z * Lj.d2 + rep.shift[1];
        double pw = 1.0;
        for (int k = 0; k <= p; ++k) {
            r[k] = w * pw;
            pw *= x2;
        }
        return r;
    };
    const double sj = Lj.law.sigma, si = Li.law.sigma * std::abs(Li.d1 / Lj.d1);
    const double cj = law_centre(Lj.law);
    const double ci = (xr - law_centre(Li.law) * Li.d1) / Lj.d1;
    std::vector<double> pts;
    for (int k = -4; k <= 9; ++k) {
        const double f = std::ldexp(1.0, k);
        for (double c : {cj, ci}) {
            const double s = (c == cj) ? sj : si;
            pts.push_back(c - s * f);
            pts.push_back(c + s * f);
        }
    }
    pts.push_back(cj);
    pts.push_back(ci);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end(), [](double u, double v) { return std::abs(u - v) < 1e-14 * (1.0 + std::abs(u)); }),
              pts.end());
    std::vector<std::pair<double, double>> body;
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) body.emplace_back(pts[k], pts[k + 1]);
    const double lo = pts.front(), hi = pts.back();
    const double a = rep.alpha;
    const int q = std::max(1, static_cast<int>(std::ceil(2.0 / (2.0 * a + 1.0 - p))));
    const double D = std::max({std::abs(lo), std::abs(hi), sj, si});
    auto tail = [&](double edge, double dir) {
        return [&, edge, dir](double t) {
            const double tq = std::pow(t, -q);
            auto v = integrand(edge + dir * D * (tq - 1.0));
            const double jac = q * D * tq / t;
            for (auto& c : v)
                if (c != 0.0) c *= jac;
            return v;
        };
    };
    std::vector<std::pair<double, double>> unit;
    unit.emplace_back(0.0, std::ldexp(1.0, -7));
    for (int k = 7; k >= 1; --k) unit.emplace_back(std::ldexp(1.0, -k), std::ldexp(1.0, 1 - k));
    // normalise each component by its L1 size so one absolute tolerance fits all
    const auto probe = integrate_panels<5>(integrand, body, 0.0, 1e-4);
    std::array<double, 5> sc{};
    for (int k = 0; k <= p; ++k) sc[k] = 1.0 / std::max(probe.l1[k], 1e-300);
    auto scaled = [&sc](auto g) {
        return [g, &sc](double t) {
            auto v = g(t);
            for (std::size_t k = 0; k < v.size(); ++k) v[k] *= sc[k];
            return v;
        };
    };
    auto unscale = [&sc, p](VecIntegral<5> r) {
        for (int k = 0; k <= p; ++k) {
            r.value[k] /= sc[k];
            r.err[k] /= sc[k];
        }
        return r;
    };
    const auto rb = unscale(integrate_panels<5>(scaled(integrand), body, 0.4 * tol, 0.0));
    const auto rr = unscale(integrate_panels<5>(scaled(tail(hi, 1.0)), unit, 0.3 * tol, 0.0));
    const auto rl = unscale(integrate_panels<5>(scaled(tail(lo, -1.0)), unit, 0.3 * tol, 0.0));
    require_converged(rb.converged && rr.converged && rl.converged, rb.value[p], rb.err[p]);
    const double num = rb.value[p] + rr.value[p] + rl.value[p];
    const double den = rb.value[0] + rr.value[0] + rl.value[0];
    const double enum_ = rb.err[p] + rr.err[p] + rl.err[p];
    const double eden = rb.err[0] + rr.err[0] + rl.err[0];
    OracleResult out;
    out.estimate = num / den;
    out.err = enum_ / std::abs(den) + std::abs(out.estimate) * eden / std::abs(den);
    const double tl = std::abs(rr.value[p]) + std::abs(rl.value[p]);
    out.tail_fraction = tl / std::max(std::abs(num), 1e-300);
    out.low_confidence = out.tail_fraction > 0.2;
    return out;
}

// Derivatives of one line's log-CF v -> log E exp(i v Z), drift excluded, for v != 0.
inline std::array<std::complex<double>, 5> line_logcf_derivs(const StableParams& law, double v) {
    using cplx = std::complex<double>;
    std::array<cplx, 5> d{};
    const double av = std::abs(v), sg = v > 0.0 ? 1.0 : -1.0;
    if (law.alpha == 1.0) {
        const double k = (2.0 / pi) * law.beta * law.sigma;
        d[1] = cplx(-law.sigma * sg, -k * (std::log(av) + 1.0));
        d[2] = cplx(0.0, -k / v);
        return d;
    }
    const double a = law.alpha, sa = std::pow(law.sigma, a);
    const cplx w(1.0, -law.beta * sg * tan_half_pi(a));
    double ff = 1.0;
    for (int j = 1; j <= 4; ++j) {
        ff *= a - (j - 1);
        d[j] = -sa * ff * std::pow(av, a - j) * (j % 2 ? sg : 1.0) * w;
    }
    return d;
}

// E[X2^p | X1 = x] by 1-D Fourier inversion of the s-derivatives of the joint CF:
// f(x) E[X2^p | x] = (1/2 pi) int e^{-itx} (-i d/ds)^p phi(t, s)|_{s=0} dt.
// The derivatives are complete Bell polynomials in psi_k(t) = d^k/ds^k log phi; the lone
// psi_p term is integrated by parts p-1 times so that every integrand is locally integrable.
inline OracleResult derivative_moment(const SpectralRep& rep, const std::vector<SpectralLine>& lines, int p, double x,
                                      double tol) {
    using cplx = std::complex<double>;
    const double a = rep.alpha;
    double drift = rep.shift[1], rate = 0.0;
    for (const auto& l : lines) {
        drift += l.law.mu * l.d2;
        rate += std::pow(l.law.sigma * std::abs(l.d1), a);
    }
    const cplx ix(0.0, x - rep.shift[0]);
    auto integrand = [&](double t) {
        std::array<double, 5> r{};
        if (t < 1e-200) return r;
        std::array<cplx, 5> chi{}, psi{};  // t-derivatives of log phi(t, 0) - itx, s-derivatives at s = 0
        std::array<cplx, 5> lone{};
        cplx lnphi(0.0);
        for (const auto& l : lines) {
            const double v = t * l.d1;
            const auto d = line_logcf_derivs(l.law, v);
            const double av = std::abs(v);
            if (a == 1.0)
                lnphi += -l.law.sigma * av * cplx(1.0, (2.0 / pi) * l.law.beta * (v > 0 ? 1.0 : -1.0) * std::log(av)) +
                         cplx(0.0, l.law.mu * v);
            else
                lnphi += -std::pow(l.law.sigma * av, a) * cplx(1.0, -l.law.beta * (v > 0 ? 1.0 : -1.0) * tan_half_pi(a)) +
                         cplx(0.0, l.law.mu * v);
            double p1 = 1.0, p2 = 1.0;
            for (int k = 1; k <= 4; ++k) {
                p1 *= l.d1;
                p2 *= l.d2;
                chi[k] += p1 * d[k];
                psi[k] += p2 * d[k];
            }
            for (int k = 1; k <= p; ++k) lone[k] += std::pow(l.d2 / l.d1, k) * l.d1 * d[1];
            chi[1] += cplx(0.0, l.law.mu * l.d1);
        }
        chi[1] -= ix;
        const cplx g = std::exp(lnphi - ix * t);
        // g^{(p-1)} / g as a complete Bell polynomial in chi
        const cplx c1 = chi[1], c2 = chi[2], c3 = chi[3];
        const cplx gd[4] = {1.0, c1, c1 * c1 + c2, c1 * c1 * c1 + 3.0 * c1 * c2 + c3};
        const cplx s1 = psi[1], s2 = psi[2], s3 = psi[3];
        const cplx rest[5] = {0.0, 0.0, s1 * s1, 3.0 * s1 * s2 + s1 * s1 * s1,
                              4.0 * s1 * s3 + 3.0 * s2 * s2 + 6.0 * s1 * s1 * s2 + s1 * s1 * s1 * s1};
        r[0] = g.real();
        cplx mi(1.0);
        for (int k = 1; k <= p; ++k) {
            mi *= cplx(0.0, -1.0);
            const double sgn = (k % 2) ? 1.0 : -1.0;
            r[k] = (mi * g * (sgn * gd[k - 1] * lone[k] + rest[k])).real();
        }
        return r;
    };
    // t = u^8 on [0, 1] tames the t^{gamma} singularities at the origin
    auto near = [&](double u) {
        const double u7 = std::pow(u, 7);
        auto v = integrand(u7 * u);
        for (auto& c : v) c *= 8.0 * u7;
        return v;
    };
    const double T = std::max(2.0, std::pow(60.0 / rate, 1.0 / a));
    std::vector<std::pair<double, double>> p0, p1;
    for (int k = 0; k < 32; ++k) p0.emplace_back(k / 32.0, (k + 1) / 32.0);
    const int n = std::max(16, static_cast<int>(std::ceil((T - 1.0) * (std::abs(x) + 1.0))));
    for (int k = 0; k < n; ++k) p1.emplace_back(1.0 + (T - 1.0) * k / n, 1.0 + (T - 1.0) * (k + 1) / n);
    const auto A = integrate_panels<5>(near, p0, 0.0, 0.1 * tol);
    const auto B = integrate_panels<5>(integrand, p1, 0.0, 0.1 * tol);
    require_converged(A.converged && B.converged, A.value[p] + B.value[p], A.err[p] + B.err[p]);
    const double den = A.value[0] + B.value[0];
    std::array<double, 5> m{1.0};
    for (int k = 1; k <= p; ++k) m[k] = (A.value[k] + B.value[k]) / den;
    // back to moments of X2 from those of X2 - drift
    OracleResult out;
    out.estimate = 0.0;
    double binom = 1.0;
    for (int k = p; k >= 0; --k) {
        out.estimate += binom * m[k] * std::pow(drift, p - k);
        binom = binom * k / (p - k + 1);
    }
    out.err = (A.err[p] + B.err[p] + std::abs(m[p]) * (A.err[0] + B.err[0])) / std::abs(den);
    out.tail_fraction = 0.0;
    return out;
}

}  // namespace detail

/// E[X2^p | X1 = x] by the Bayes decomposition int y^p f(x,y) dy / int f(x,y) dy.
inline OracleResult cf_conditional_moment(const SpectralRep& rep, int p, double x, double tol = 1e-10) {
    require_moment(p, rep.alpha);
    detail::require_tol(tol);
    const auto lines = spectral_lines(rep);
    for (const auto& l : lines)
        if (l.d1 == 0.0) throw MomentNonexistence("spectral mass on s1 = 0: conditional moments do not exist");
    if (lines.size() == 1) {
        const auto& l = lines[0];
        return {std::pow((x - rep.shift[0]) * l.d2 / l.d1 + rep.shift[1], p), 0.0, 0.0, false};
    }
    if (lines.size() == 2) return detail::two_line_moment(rep, lines, p, x, tol);
    return detail::derivative_moment(rep, lines, p, x, tol);
}

inline OracleResult cf_conditional_moment_oracle(const ProcessModel& model, int p, double x, double h, double tol = 1e-10) {
    validate(model);
    validate_horizon(model, h);
    return cf_conditional_moment(spectral(model, h), p, x, tol);
}

// ---------------------------------------------------------------------------
// Binned Monte Carlo

struct McOptions {
    double trim = 1e-4;          // trimmed fraction per tail for the variance
    std::size_t min_hits = 200;
    std::size_t batch = 1 << 16;
};

struct McResult {
    double estimate = 0.0;
    double stderr_ = 0.0;
    std::size_t n_hits = 0;
    bool heavy_tail_warning = false;
};

/// Exact sampler of (X_t, X_{t+h}) through the line decomposition of its spectral measure.
class PairSampler {
public:
    explicit PairSampler(const SpectralRep& rep) : lines_(spectral_lines(rep)), shift_(rep.shift) {}
    std::array<double, 2> draw(Rng& rng) const {
        std::array<double, 2> x = shift_;
        for (const auto& l : lines_) {
            const double z = draw_stable(l.law, rng);
            x[0] += z * l.d1;
            x[1] += z * l.d2;
        }
        return x;
    }

private:
    std::vector<SpectralLine> lines_;
    std::array<double, 2> shift_;
};

/// Mean of X_{t+h}^p over sampled pairs with X_t in [x - half_width, x + half_width].
/// The standard error uses a variance trimmed by `trim` in each tail.
inline McResult mc_conditional_moment(const ProcessModel& model, int p, double x, double half_width, double h,
                                      std::size_t n_paths, std::uint64_t seed, const McOptions& opt = {}) {
    validate(model);
    validate_horizon(model, h);
    require_moment(p, model_alpha(model));
    if (!(half_width > 0.0)) throw ParameterError("half_width must be positive");
    if (n_paths < 1) throw ParameterError("n_paths must be at least 1");
    const PairSampler sampler(spectral(model, h));
    const std::size_t nb = (n_paths + opt.batch - 1) / opt.batch;
    std::vector<std::vector<double>> hits(nb);
    parallel_for(nb, [&](std::size_t b) {
        Rng rng = Rng::stream(seed, b);
        const std::size_t n = std::min(opt.batch, n_paths - b * opt.batch);
        auto& out = hits[b];
        for (std::size_t i = 0; i < n; ++i) {
            const auto v = sampler.draw(rng);
            if (std::abs(v[0] - x) <= half_width) out.push_back(std::pow(v[1], p));
        }
    });
    std::vector<double> all;
    for (auto& v : hits) all.insert(all.end(), v.begin(), v.end());
    McResult r;
    r.n_hits = all.size();
    if (r.n_hits < opt.min_hits)
        throw InsufficientData("only " + std::to_string(r.n_hits) + " pairs fell in the bin (need " +
                               std::to_string(opt.min_hits) + "); increase half_width or n_paths");
    double s = 0.0;
    for (double v : all) s += v;
    r.estimate = s / r.n_hits;
    std::sort(all.begin(), all.end());
    const std::size_t k = static_cast<std::size_t>(opt.trim * r.n_hits);
    const std::size_t m = r.n_hits - 2 * k;
    double mt = 0.0;
    for (std::size_t i = k; i < r.n_hits - k; ++i) mt += all[i];
    mt /= m;
    double ss = 0.0;
    for (std::size_t i = k; i < r.n_hits - k; ++i) ss += (all[i] - mt) * (all[i] - mt);
    r.stderr_ = std::sqrt(ss / (m - 1) / r.n_hits);
    r.heavy_tail_warning = p >= model_alpha(model) && r.n_hits > n_paths / 2;
    return r;
}

}  // namespace sa
