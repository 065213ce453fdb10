#pragma once

#include "stable_anticipate/common.hpp"

#include <cmath>
#include <string>
#include <variant>
#include <vector>

namespace sa {

/// Anticipative AR(1): X_t = rho X_{t+1} + eps_t, eps_t ~ S(alpha, beta, sigma, 0).
struct AR1 {
    double alpha, beta, sigma, rho;
};

/// Stable-driven anticipative Ornstein-Uhlenbeck process with mean-reversion rate lambda
/// and unit-scale driving random measure of skewness beta.
struct OU {
    double alpha, beta, lambda;
};

struct AggComponent {
    double pi, rho, beta, sigma;
};

/// X_t = c * sum_j pi_j X_{j,t} with independent AR(1) components.
struct Aggregated {
    double alpha;
    double c;
    std::vector<AggComponent> components;
};

/// Anticipative AR(2): X_t = psi1 X_{t+1} + psi2 X_{t+2} + eps_t.
struct AR2 {
    double alpha, beta, sigma, psi1, psi2;
};

using ProcessModel = std::variant<AR1, OU, Aggregated, AR2>;

inline double model_alpha(const ProcessModel& m) {
    return std::visit([](const auto& v) { return v.alpha; }, m);
}

inline const char* model_name(const ProcessModel& m) {
    switch (m.index()) {
        case 0: return "ar1";
        case 1: return "ou";
        case 2: return "agg";
        default: return "ar2";
    }
}

namespace detail {

inline void check_alpha_beta(double alpha, double beta) {
    if (!(alpha > 0.0 && alpha < 2.0)) throw ParameterError("alpha must lie in (0,2), got " + std::to_string(alpha));
    if (!(beta >= -1.0 && beta <= 1.0)) throw ParameterError("beta must lie in [-1,1], got " + std::to_string(beta));
}

inline void check_rho(double rho) {
    if (!(std::abs(rho) < 1.0 && rho != 0.0)) throw DomainError("rho must lie in (-1,0) U (0,1), got " + std::to_string(rho));
}

}  // namespace detail

inline void validate(const AR1& m) {
    detail::check_alpha_beta(m.alpha, m.beta);
    if (!(m.sigma > 0.0)) throw ParameterError("sigma must be positive");
    detail::check_rho(m.rho);
}

inline void validate(const OU& m) {
    detail::check_alpha_beta(m.alpha, m.beta);
    if (!(m.lambda > 0.0)) throw DomainError("lambda must be positive");
}

inline void validate(const Aggregated& m) {
    if (!(m.alpha > 0.0 && m.alpha < 2.0)) throw ParameterError("alpha must lie in (0,2)");
    if (!(m.c > 0.0)) throw DomainError("aggregation constant c must be positive");
    if (m.components.empty()) throw DomainError("aggregation needs at least one component");
    double s = 0.0;
    for (const auto& j : m.components) {
        if (!(j.pi > 0.0 && j.pi <= 1.0)) throw DomainError("aggregation weights must lie in (0,1]");
        detail::check_alpha_beta(m.alpha, j.beta);
        if (!(j.sigma > 0.0)) throw ParameterError("component sigma must be positive");
        detail::check_rho(j.rho);
        s += j.pi;
    }
    if (std::abs(s - 1.0) > 1e-12) throw DomainError("aggregation weights must sum to 1");
}

/// Real roots (a1, a2) of 1 - psi1 z - psi2 z^2 = (1 - a1 z)(1 - a2 z).
inline std::pair<double, double> ar2_roots(double psi1, double psi2) {
    if (psi1 == 0.0) throw DomainError("AR(2) with psi1 = 0 is excluded");
    const double disc = psi1 * psi1 + 4.0 * psi2;
    if (disc < 0.0) throw DomainError("AR(2) lag polynomial has complex roots");
    const double r = std::sqrt(disc);
    const double a1 = 0.5 * (psi1 + r), a2 = 0.5 * (psi1 - r);
    if (!(std::abs(a1) < 1.0 && std::abs(a2) < 1.0)) throw DomainError("AR(2) roots must lie inside (-1,1)");
    return {a1, a2};
}

inline void validate(const AR2& m) {
    detail::check_alpha_beta(m.alpha, m.beta);
    if (!(m.sigma > 0.0)) throw ParameterError("sigma must be positive");
    ar2_roots(m.psi1, m.psi2);
}

inline void validate(const ProcessModel& m) {
    std::visit([](const auto& v) { validate(v); }, m);
}

inline void validate_horizon(const ProcessModel& m, double h) {
    if (std::holds_alternative<OU>(m)) {
        if (!(h > 0.0)) throw DomainError("horizon must be positive");
        return;
    }
    if (!(h >= 1.0) || h != std::floor(h)) throw DomainError("horizon must be an integer >= 1");
}

}  // namespace sa
