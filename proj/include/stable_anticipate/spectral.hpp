#pragma once

#include "stable_anticipate/common.hpp"
#include "stable_anticipate/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace sa {

struct Atom {
    double s1 = 0.0, s2 = 0.0;  // point on the unit circle
    double mass = 0.0;
};

/// Discrete spectral representation (Gamma, mu0) of a bivariate stable vector.
struct SpectralRep {
    double alpha = 1.5;
    std::vector<Atom> atoms;
    std::array<double, 2> shift{0.0, 0.0};

    double total_mass() const {
        double s = 0.0;
        for (const auto& a : atoms) s += a.mass;
        return s;
    }
};

/// Merges atoms closer than `tol` (Euclidean) and drops zero masses.
inline void merge_atoms(SpectralRep& rep, double tol = 1e-12) {
    std::vector<Atom> out;
    for (const auto& a : rep.atoms) {
        if (!(a.mass > 0.0)) continue;
        bool merged = false;
        for (auto& o : out) {
            if (std::hypot(o.s1 - a.s1, o.s2 - a.s2) <= tol) {
                o.mass += a.mass;
                merged = true;
                break;
            }
        }
        if (!merged) out.push_back(a);
    }
    rep.atoms = std::move(out);
}

namespace detail {

// Adds the antipodal pair +-d/|d| with masses m_plus, m_minus.
inline void add_pair(SpectralRep& rep, double d1, double d2, double m_plus, double m_minus) {
    const double n = std::hypot(d1, d2);
    rep.atoms.push_back({d1 / n, d2 / n, std::max(m_plus, 0.0)});
    rep.atoms.push_back({-d1 / n, -d2 / n, std::max(m_minus, 0.0)});
}

struct Ar1Bar {
    double sbar_alpha;  // sigma-bar^alpha
    double bbar;        // beta-bar
    double rho_alpha_h; // |rho|^{alpha h}
    double rho_sa_h;    // (rho^<alpha>)^h
};

inline Ar1Bar ar1_bar(double alpha, double beta, double sigma, double rho, int h) {
    const double ra = std::pow(std::abs(rho), alpha);
    const double rsa = std::copysign(ra, rho);
    Ar1Bar b;
    b.sbar_alpha = std::pow(sigma, alpha) / (1.0 - ra);
    b.bbar = beta * (1.0 - ra) / (1.0 - rsa);
    b.rho_alpha_h = std::pow(std::abs(rho), alpha * h);
    b.rho_sa_h = (rho < 0.0 && (h % 2 == 1)) ? -b.rho_alpha_h : b.rho_alpha_h;
    return b;
}

}  // namespace detail

/// Spectral representation of (X_t, X_{t+h}) for the anticipative AR(1).
inline SpectralRep ar1_spectral(double alpha, double beta, double sigma, double rho, int h) {
    validate(AR1{alpha, beta, sigma, rho});
    if (h < 1) throw DomainError("horizon must be an integer >= 1");
    const auto b = detail::ar1_bar(alpha, beta, sigma, rho, h);
    const double rh = std::pow(rho, h);
    const double r2h = rh * rh;
    SpectralRep rep;
    rep.alpha = alpha;
    const double half = b.sbar_alpha / 2.0;
    const double axis_sym = 1.0 - b.rho_alpha_h, axis_skew = (1.0 - b.rho_sa_h) * b.bbar;
    rep.atoms.push_back({1.0, 0.0, std::max(half * (axis_sym + axis_skew), 0.0)});
    rep.atoms.push_back({-1.0, 0.0, std::max(half * (axis_sym - axis_skew), 0.0)});
    const double off = half * std::pow(1.0 + r2h, alpha / 2.0);
    detail::add_pair(rep, rh, 1.0, off * (1.0 + b.bbar), off * (1.0 - b.bbar));
    if (alpha == 1.0) {
        const double sbar = b.sbar_alpha;
        const double mubar = -(sbar * b.bbar / pi) * rh * std::log(1.0 + 1.0 / r2h);
        const double lr = std::log(std::abs(rho));
        rep.shift[0] = mubar - (2.0 / pi) * sbar * b.bbar * rho * lr / (1.0 - rho);
        rep.shift[1] = mubar / rh - (2.0 / pi) * sbar * b.bbar * lr * (h + rho / (1.0 - rho));
    }
    merge_atoms(rep);
    return rep;
}

/// Spectral representation of (X(t), X(t+h)) for the stable OU process.
inline SpectralRep ou_spectral(double alpha, double beta, double lambda_rate, double h) {
    validate(OU{alpha, beta, lambda_rate});
    if (!(h > 0.0)) throw DomainError("horizon must be positive");
    SpectralRep rep;
    rep.alpha = alpha;
    const double k = 1.0 / (alpha * lambda_rate);
    const double e = std::exp(-lambda_rate * h);
    const double axis = k * (1.0 - std::exp(-alpha * lambda_rate * h));
    rep.atoms.push_back({1.0, 0.0, axis * (1.0 + beta) / 2.0});
    rep.atoms.push_back({-1.0, 0.0, axis * (1.0 - beta) / 2.0});
    const double off = k * std::pow(1.0 + e * e, alpha / 2.0);
    detail::add_pair(rep, e, 1.0, off * (1.0 + beta) / 2.0, off * (1.0 - beta) / 2.0);
    if (alpha == 1.0) {
        const double lh = lambda_rate * h;
        const double mubar = -(beta / (lambda_rate * pi)) * e * std::log(1.0 + std::exp(2.0 * lh));
        rep.shift[0] = mubar + 2.0 * beta / (lambda_rate * pi);
        rep.shift[1] = mubar / e + (2.0 * beta / (lambda_rate * pi)) * (1.0 + lh);
    }
    merge_atoms(rep);
    return rep;
}

inline BivariateConstants closed_form_constants(const ProcessModel& model, double h);

/// Spectral representation of the aggregated AR(1) vector.
inline SpectralRep agg_spectral(const Aggregated& m, int h) {
    validate(m);
    if (h < 1) throw DomainError("horizon must be an integer >= 1");
    SpectralRep rep;
    rep.alpha = m.alpha;
    for (const auto& j : m.components) {
        const SpectralRep r = ar1_spectral(m.alpha, j.beta, j.sigma, j.rho, h);
        const double scale = std::pow(m.c * j.pi, m.alpha);
        for (auto a : r.atoms) {
            a.mass *= scale;
            rep.atoms.push_back(a);
        }
        if (m.alpha == 1.0) {
            const auto kj = closed_form_constants(AR1{m.alpha, j.beta, j.sigma, j.rho}, h);
            const double s1 = kj.sigma1_alpha, lc = std::log(m.c * j.pi);
            rep.shift[0] += m.c * j.pi * (r.shift[0] - (2.0 / pi) * s1 * kj.beta1 * lc);
            rep.shift[1] += m.c * j.pi * (r.shift[1] - (2.0 / pi) * s1 * kj.l(1) * lc);
        }
    }
    merge_atoms(rep);
    return rep;
}

/// Spectral representation of sum_k (d1_k, d2_k) eps_k with eps_k ~ S(alpha, beta, sigma, mu).
inline SpectralRep ma_spectral(double alpha, double beta, double sigma, double mu, const std::vector<double>& d1,
                               const std::vector<double>& d2) {
    detail::check_alpha_beta(alpha, beta);
    if (!(sigma > 0.0)) throw ParameterError("sigma must be positive");
    if (d1.size() != d2.size()) throw ParameterError("coefficient sequences must be aligned");
    SpectralRep rep;
    rep.alpha = alpha;
    const double sa = std::pow(sigma, alpha);
    for (std::size_t k = 0; k < d1.size(); ++k) {
        const double n = std::hypot(d1[k], d2[k]);
        if (n == 0.0) continue;
        const double m = sa * std::pow(n, alpha);
        detail::add_pair(rep, d1[k], d2[k], m * (1.0 + beta) / 2.0, m * (1.0 - beta) / 2.0);
        rep.shift[0] += d1[k] * mu;
        rep.shift[1] += d2[k] * mu;
        if (alpha == 1.0) {
            rep.shift[0] -= (2.0 / pi) * sigma * beta * d1[k] * std::log(n);
            rep.shift[1] -= (2.0 / pi) * sigma * beta * d2[k] * std::log(n);
        }
    }
    if (rep.atoms.empty()) throw DomainError("all moving-average coefficients vanish (degenerate vector)");
    merge_atoms(rep);
    return rep;
}

/// d_0..d_K of the MA(inf) form of the anticipative AR(2).
inline std::vector<double> ar2_ma_coefficients(double psi1, double psi2, std::size_t K) {
    const auto [a1, a2] = ar2_roots(psi1, psi2);
    std::vector<double> d(K + 1);
    if (a1 == a2) {
        for (std::size_t k = 0; k <= K; ++k) d[k] = (k + 1.0) * std::pow(a1, static_cast<double>(k));
    } else {
        // d_k = (a1^{k+1} - a2^{k+1})/(a1 - a2), evaluated by the stable recursion
        // d_k = psi1 d_{k-1} + psi2 d_{k-2}.
        d[0] = 1.0;
        if (K >= 1) d[1] = a1 + a2;
        for (std::size_t k = 2; k <= K; ++k) d[k] = psi1 * d[k - 1] + psi2 * d[k - 2];
    }
    return d;
}

/// Truncation length K such that the discarded scale mass of an MA sum with
/// coefficients bounded by (k+1)|a|^k is below `rel` times the total.
inline std::size_t ma_truncation(double amax, double alpha, double rel = 1e-12) {
    const double la = alpha * std::log(std::abs(amax));
    std::size_t K = static_cast<std::size_t>(std::ceil(std::log(rel * (1.0 - std::exp(la))) / la));
    // polynomial prefactor (k+1)^alpha for repeated roots
    while (std::pow(K + 1.0, alpha) * std::exp(la * K) / (1.0 - std::exp(la)) > rel) K += 8;
    return K + 8;
}

/// Spectral representation of (X_t, X_{t+h}) for the AR(2), truncated at K terms
/// (K = 0 selects the truncation automatically).
inline SpectralRep ar2_spectral(const AR2& m, int h, std::size_t K = 0) {
    validate(m);
    if (h < 1) throw DomainError("horizon must be an integer >= 1");
    const auto [a1, a2] = ar2_roots(m.psi1, m.psi2);
    if (K == 0) K = ma_truncation(std::max(std::abs(a1), std::abs(a2)), m.alpha);
    const auto d = ar2_ma_coefficients(m.psi1, m.psi2, K + h);
    std::vector<double> d1(K + h + 1), d2(K + h + 1);
    for (std::size_t k = 0; k <= K + h; ++k) {
        d1[k] = d[k];
        d2[k] = k >= static_cast<std::size_t>(h) ? d[k - h] : 0.0;
    }
    return ma_spectral(m.alpha, m.beta, m.sigma, 0.0, d1, d2);
}

inline SpectralRep spectral(const ProcessModel& model, double h) {
    validate_horizon(model, h);
    if (auto p = std::get_if<AR1>(&model)) return ar1_spectral(p->alpha, p->beta, p->sigma, p->rho, static_cast<int>(h));
    if (auto p = std::get_if<OU>(&model)) return ou_spectral(p->alpha, p->beta, p->lambda, h);
    if (auto p = std::get_if<Aggregated>(&model)) return agg_spectral(*p, static_cast<int>(h));
    return ar2_spectral(std::get<AR2>(model), static_cast<int>(h));
}

/// Reduces a spectral representation to sigma1^alpha, beta1, kappa_p, lambda_p
/// (and q0, mu1 when alpha = 1).
inline BivariateConstants bivariate_constants(const SpectralRep& rep) {
    const double a = rep.alpha;
    BivariateConstants k;
    double sb = 0.0;
    std::array<double, 4> ks{}, ls{};
    double q = 0.0, m1 = 0.0;
    for (const auto& at : rep.atoms) {
        if (!(at.mass > 0.0)) continue;
        if (at.s1 == 0.0) throw MomentNonexistence("spectral mass on s1 = 0: conditional moments do not exist");
        const double w = at.mass * std::pow(std::abs(at.s1), a);
        const double ws = std::copysign(w, at.s1);
        k.sigma1_alpha += w;
        sb += ws;
        double r = 1.0;
        for (int p = 0; p < 4; ++p) {
            r *= at.s2 / at.s1;
            ks[p] += r * w;
            ls[p] += r * ws;
        }
        if (a == 1.0) {
            const double la = std::log(std::abs(at.s1));
            q += at.mass * at.s2 * la;
            m1 += at.mass * at.s1 * la;
        }
    }
    if (!(k.sigma1_alpha > 0.0)) throw DomainError("degenerate first coordinate (sigma1 = 0)");
    k.beta1 = sb / k.sigma1_alpha;
    for (int p = 0; p < 4; ++p) {
        k.kappa[p] = ks[p] / k.sigma1_alpha;
        k.lambda[p] = ls[p] / k.sigma1_alpha;
    }
    if (a == 1.0) {
        k.q0 = q / k.sigma1_alpha;
        k.mu1 = -(2.0 / pi) * m1;
    }
    return k;
}

/// sum of masses * |s1|^{-nu}; +inf iff positive mass sits on s1 = 0.
inline double nu_integral(const SpectralRep& rep, double nu) {
    double s = 0.0;
    for (const auto& at : rep.atoms) {
        if (!(at.mass > 0.0)) continue;
        if (at.s1 == 0.0) {
            if (nu > 0.0) return std::numeric_limits<double>::infinity();
            s += at.mass;
            continue;
        }
        s += at.mass * std::pow(std::abs(at.s1), -nu);
    }
    return s;
}

namespace detail {

inline BivariateConstants ar1_constants(const AR1& m, int h) {
    validate(m);
    const auto b = ar1_bar(m.alpha, m.beta, m.sigma, m.rho, h);
    BivariateConstants k;
    k.sigma1_alpha = b.sbar_alpha;
    k.beta1 = b.bbar;
    const double rh = std::pow(m.rho, h);
    double inv = 1.0;
    for (int p = 0; p < 4; ++p) {
        inv /= rh;
        k.kappa[p] = b.rho_alpha_h * inv;
        k.lambda[p] = b.bbar * b.rho_sa_h * inv;
    }
    if (m.alpha == 1.0) {
        const double l = std::log(1.0 + 1.0 / (rh * rh));
        k.mu1 = (1.0 / pi) * k.sigma1_alpha * k.beta1 * rh * l;
        k.q0 = -0.5 * k.beta1 * l;
    }
    return k;
}

inline BivariateConstants ou_constants(const OU& m, double h) {
    validate(m);
    BivariateConstants k;
    k.sigma1_alpha = 1.0 / (m.alpha * m.lambda);
    k.beta1 = m.beta;
    for (int p = 0; p < 4; ++p) {
        k.kappa[p] = std::exp(-m.lambda * h * (m.alpha - (p + 1)));
        k.lambda[p] = m.beta * k.kappa[p];
    }
    if (m.alpha == 1.0) {
        const double l = std::log(1.0 + std::exp(2.0 * m.lambda * h));
        k.mu1 = (m.beta / (m.lambda * pi)) * std::exp(-m.lambda * h) * l;
        k.q0 = -0.5 * m.beta * l;
    }
    return k;
}

inline BivariateConstants agg_constants(const Aggregated& m, int h) {
    validate(m);
    const double a = m.alpha;
    std::vector<BivariateConstants> comp;
    std::vector<double> w;
    double tot = 0.0;
    for (const auto& j : m.components) {
        comp.push_back(ar1_constants(AR1{a, j.beta, j.sigma, j.rho}, h));
        w.push_back(std::pow(j.pi, a) * comp.back().sigma1_alpha);
        tot += w.back();
    }
    BivariateConstants k;
    k.sigma1_alpha = std::pow(m.c, a) * tot;
    for (std::size_t j = 0; j < comp.size(); ++j) {
        const double wj = w[j] / tot;
        k.beta1 += wj * comp[j].beta1;
        for (int p = 0; p < 4; ++p) {
            k.kappa[p] += wj * comp[j].kappa[p];
            k.lambda[p] += wj * comp[j].lambda[p];
        }
    }
    if (a == 1.0) {
        double q = 0.0, mu = 0.0;
        for (std::size_t j = 0; j < comp.size(); ++j) {
            q += (w[j] / tot) * *comp[j].q0;
            mu += m.c * m.components[j].pi * *comp[j].mu1;
        }
        k.q0 = q;
        k.mu1 = mu;
    }
    return k;
}

}  // namespace detail

/// Closed-form constants for the AR(1), OU and aggregated models.
inline BivariateConstants closed_form_constants(const ProcessModel& model, double h) {
    validate_horizon(model, h);
    if (auto p = std::get_if<AR1>(&model)) return detail::ar1_constants(*p, static_cast<int>(h));
    if (auto p = std::get_if<OU>(&model)) return detail::ou_constants(*p, h);
    if (auto p = std::get_if<Aggregated>(&model)) return detail::agg_constants(*p, static_cast<int>(h));
    throw Unsupported("no closed-form constants for the AR(2) model");
}

/// Aggregation weights w_j = pi_j^alpha sigma_{1,j}^alpha / sum_i pi_i^alpha sigma_{1,i}^alpha.
inline std::vector<double> aggregation_weights(const Aggregated& m) {
    validate(m);
    std::vector<double> w;
    double tot = 0.0;
    for (const auto& j : m.components) {
        w.push_back(std::pow(j.pi, m.alpha) * std::pow(j.sigma, m.alpha) / (1.0 - std::pow(std::abs(j.rho), m.alpha)));
        tot += w.back();
    }
    for (auto& v : w) v /= tot;
    return w;
}

}  // namespace sa
