// Acceptance run: one PASS/FAIL line per criterion, failing checks listed below it.
#include "stable_anticipate/checks.hpp"

#include <cstdio>
#include <functional>
#include <string>
#include <vector>

namespace {

struct Criterion {
    const char* title;
    double budget_s;  // runtime limit, 0 = none
    std::function<sa::SuiteReport()> run;
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {"constants identity (closed form vs spectral reduction, 1e-12 rel)", 5.0, [] { return sa::suite_constants(); }},
        {"quadrature identities and Cauchy density", 10.0, [] { return sa::suite_quadrature(); }},
        {"Cauchy conditional variance equals x^2+1", 0.0, [] { return sa::suite_cauchy_variance(); }},
        {"linearity of the conditional mean for rho>0", 0.0, [] { return sa::suite_linearity(); }},
        {"three-way oracle agreement on the reference bubble parameters", 300.0, [] { return sa::suite_oracles(); }},
        {"asymptotics (power-law limit, gamma2 limit, OU h0)", 0.0, [] { return sa::suite_asymptotics(); }},
        {"bubble survival probability |rho|^(alpha h)", 120.0, [] { return sa::suite_survival(); }},
        {"AR(2) nu-integral stability under doubling K", 0.0, [] { return sa::suite_ar2(); }},
        {"OU/AR(1) equivalence of conditional moments", 0.0, [] { return sa::suite_ou_ar1(); }},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto& c = criteria[i];
        const auto rep = c.run();
        const bool in_time = c.budget_s <= 0.0 || rep.seconds <= c.budget_s;
        const bool ok = rep.passed() && in_time;
        failed += !ok;
        std::printf("%s [%zu] %s: %zu checks, %zu failed, worst deviation/limit %.3g, %.2f s%s\n", ok ? "PASS" : "FAIL", i + 1,
                    c.title, rep.checks.size(), rep.n_failed(), rep.worst_ratio(), rep.seconds,
                    in_time ? "" : " (over runtime budget)");
        for (const auto& k : rep.checks)
            if (!k.pass || rep.suite == "survival")
                std::printf("    %s %s: deviation %.4g, limit %.4g %s\n", k.pass ? "ok  " : "FAIL", k.name.c_str(), k.deviation,
                            k.limit, k.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria failed\n", failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
