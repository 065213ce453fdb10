#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>

namespace sa {

inline constexpr double pi = std::numbers::pi;

/// Base of every error raised by the library. `code()` is a stable,
/// machine-readable tag used by the CLI for JSON error reports.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& what)
        : std::runtime_error(what), code_(std::move(code)) {}
    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

struct ParameterError : Error {
    explicit ParameterError(const std::string& w) : Error("parameter", w) {}
};
struct DomainError : Error {
    explicit DomainError(const std::string& w) : Error("domain", w) {}
    DomainError(std::string code, const std::string& w) : Error(std::move(code), w) {}
};
struct MomentNonexistence : Error {
    explicit MomentNonexistence(const std::string& w) : Error("moment-nonexistence", w) {}
};
struct Unsupported : Error {
    explicit Unsupported(const std::string& w) : Error("unsupported", w) {}
    Unsupported(std::string code, const std::string& w) : Error(std::move(code), w) {}
};
struct InsufficientData : Error {
    explicit InsufficientData(const std::string& w) : Error("insufficient-data", w) {}
};
/// Quadrature or assembly failure; carries whatever partial value was reached.
struct NumericalError : Error {
    NumericalError(const std::string& w, double partial = std::nan(""), double err = std::nan(""))
        : Error("numerical", w), partial_value(partial), partial_err(err) {}
    double partial_value;
    double partial_err;
};

enum class Regime { exact, asymptotic, undefined };

inline const char* to_string(Regime r) {
    switch (r) {
        case Regime::exact: return "exact";
        case Regime::asymptotic: return "asymptotic";
        default: return "undefined";
    }
}

struct MomentResult {
    double value = std::nan("");
    double err = 0.0;
    Regime regime = Regime::exact;
};

struct QuadResult {
    double value = 0.0;
    double abs_err_estimate = 0.0;
    std::size_t nodes_used = 0;
};

struct ThetaPair {
    double t1 = 0.0;
    double t2 = 0.0;
};

/// Derived scalars of a bivariate stable vector (X1, X2).
/// q0 and mu1 are populated only when alpha = 1.
struct BivariateConstants {
    double sigma1_alpha = 0.0;
    double beta1 = 0.0;
    std::array<double, 4> kappa{};  // kappa[p-1] = kappa_p
    std::array<double, 4> lambda{};
    std::optional<double> q0;
    std::optional<double> mu1;

    double sigma1(double alpha) const { return std::pow(sigma1_alpha, 1.0 / alpha); }
    double k(int p) const { return kappa[p - 1]; }
    double l(int p) const { return lambda[p - 1]; }
};

/// Signed power y^<r> = sign(y)|y|^r.
inline double spow(double y, double r) {
    if (y == 0.0) return 0.0;
    return std::copysign(std::pow(std::abs(y), r), y);
}

inline double sgn(double v) { return (v > 0.0) - (v < 0.0); }

/// tan(pi*alpha/2), the skewness multiplier of the alpha != 1 characteristic function.
inline double tan_half_pi(double alpha) { return std::tan(pi * alpha / 2.0); }

/// Value with a first-order absolute error bound; arithmetic propagates the bound.
struct Val {
    double v = 0.0;
    double e = 0.0;
    Val() = default;
    Val(double value, double err = 0.0) : v(value), e(err) {}
};

inline Val operator+(Val a, Val b) { return {a.v + b.v, a.e + b.e}; }
inline Val operator-(Val a, Val b) { return {a.v - b.v, a.e + b.e}; }
inline Val operator-(Val a) { return {-a.v, a.e}; }
inline Val operator*(Val a, Val b) { return {a.v * b.v, std::abs(a.v) * b.e + std::abs(b.v) * a.e + a.e * b.e}; }
inline Val operator/(Val a, Val b) {
    const double q = a.v / b.v;
    return {q, (a.e + std::abs(q) * b.e) / std::abs(b.v)};
}
inline Val& operator+=(Val& a, Val b) { return a = a + b; }

}  // namespace sa
