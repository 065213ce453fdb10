#pragma once

#include "stable_anticipate/simulation.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace sa {

/// One measured comparison. `deviation` and `limit` are in the check's own
/// units (relative or absolute, see `name`).
struct Check {
    std::string name;
    bool pass = false;
    double deviation = 0.0;
    double limit = 0.0;
    std::string detail;
};

struct SuiteReport {
    std::string suite;
    std::vector<Check> checks;
    double seconds = 0.0;

    bool passed() const {
        if (checks.empty()) return false;
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
    std::size_t n_failed() const {
        std::size_t n = 0;
        for (const auto& c : checks) n += !c.pass;
        return n;
    }
    /// Largest deviation/limit ratio over the checks.
    double worst_ratio() const;
};

struct OracleSuiteOptions {
    std::size_t n_paths = 2'000'000;
    std::uint64_t seed = 0;
    double cf_tol = 1e-10;
};

struct SurvivalSuiteOptions {
    SurvivalConfig run{0.9999, 500, 2'000'000, 400, 0, 1e-10};
    double n_se = 3.0;
};

// Closed-form constants vs the spectral reduction on a parameter grid.
SuiteReport suite_constants();
// Integration-by-parts identities between H-integrals, and the Cauchy density.
SuiteReport suite_quadrature(double tol = 1e-10);
// alpha = 1, beta = 0 AR(1) conditional variance against x^2 + 1.
SuiteReport suite_cauchy_variance();
// Conditional mean equals kappa_1 x for rho > 0.
SuiteReport suite_linearity();
// Closed form vs CF oracle vs binned Monte Carlo on the reference bubble parameters.
SuiteReport suite_oracles(const OracleSuiteOptions& opt = {});
// Power-law limits, the kurtosis limit and the OU kurtosis-minimising horizon.
SuiteReport suite_asymptotics();
// Bubble survival probabilities against |rho|^{alpha h}.
SuiteReport suite_survival(const SurvivalSuiteOptions& opt = {});
// nu-integrals of the truncated AR(2) representation under doubling of K.
SuiteReport suite_ar2();
// Matched OU and AR(1) conditional moments.
SuiteReport suite_ou_ar1();

}  // namespace sa
