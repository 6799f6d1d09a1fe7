// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Heavier counterparts of the unit tests, run at the tolerances the
// project commits to.

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include <chemolab/chemolab.hpp>

using namespace chemolab;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = 3.14159265358979323846;

int g_failures = 0;

void report(int index, const std::string& name, bool pass, const std::string& detail) {
    std::printf("[%s] %d. %s: %s\n", pass ? "PASS" : "FAIL", index, name.c_str(),
                detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// 1. V(t) = V(0) e^{-t} over 50 seeded random chemostat runs, 1e-6 relative.
void criterion_lyapunov() {
    const auto t0 = std::chrono::steady_clock::now();
    const PropertyResult res = suites::lyapunov_identity(1);
    const double elapsed = seconds_since(t0);
    report(1, "lyapunov-identity", res.pass && elapsed < 30.0,
           std::to_string(res.passed) + "/" + std::to_string(res.total) + " " + res.detail +
               " runtime=" + fmt_double(elapsed) + "s (limit 30s)");
}

// 2. 20 random parameter sets per side of the washout/survival threshold.
void criterion_dichotomy() {
    const auto t0 = std::chrono::steady_clock::now();
    const PropertyResult washout = suites::dichotomy_side(1, false);
    const PropertyResult survival = suites::dichotomy_side(1, true);
    const double elapsed = seconds_since(t0);
    report(2, "dichotomy", washout.pass && survival.pass && elapsed < 60.0,
           "washout " + std::to_string(washout.passed) + "/20, survival " +
               std::to_string(survival.passed) + "/20, runtime=" + fmt_double(elapsed) +
               "s (limit 60s)");
}

// 3. 100 hyperbolic runs never leave [-1e-7, me^{-r} + 1e-7].
void criterion_bounds() {
    const PropertyResult res = suites::bounds_hyperbolic(1);
    report(3, "boundedness-positivity",
           res.pass, std::to_string(res.passed) + "/100 " + res.detail);
}

// 4. 100 ordered hyperbolic pairs preserve order; the same harness finds a
// hutchinson violation within 200 pairs.
void criterion_monotonicity() {
    const PropertyResult hyper = suites::monotone_family(1, ModelFamily::Hyperbolic);
    const PropertyResult violation = suites::monotone_hutchinson_violation(1);
    report(4, "monotonicity", hyper.pass && violation.pass,
           "hyperbolic " + std::to_string(hyper.passed) + "/100; hutchinson " +
               violation.detail);
}

// 5. classifier verdict vs computed root sign on a 500-point random grid.
void criterion_classifier() {
    Rng rng(1);
    int checked = 0, matched = 0;
    double worst_residual = 0.0;
    while (checked < 500) {
        const double a = rng.uniform(-3.0, 3.0);
        const double b = rng.uniform(-3.0, 3.0);
        const double r = rng.uniform(0.0, 5.0);
        if (std::abs(a + b) <= 1e-6 || std::abs(b - a) <= 1e-6) continue;
        const Linearization lin{a, b, r};
        const StabilityReport rep = classify(lin);
        if (rep.stability_case == StabilityCase::C &&
            std::abs(r - *rep.critical_delay) <= 1e-6)
            continue;
        ++checked;
        const double residual = std::abs(rep.leading_root - a -
                                         b * std::exp(-rep.leading_root * r)) /
                                std::max(1.0, std::abs(rep.leading_root));
        worst_residual = std::max(worst_residual, residual);
        const double re = rep.leading_root.real();
        bool ok = residual <= 1e-10;
        switch (rep.stability_case) {
            case StabilityCase::A: ok = ok && re > 0; break;
            case StabilityCase::B: ok = ok && re < 0; break;
            case StabilityCase::C:
                ok = ok && (r < *rep.critical_delay ? re < 0 : re > 0);
                break;
            case StabilityCase::D: break;
        }
        if (ok) ++matched;
    }
    report(5, "classifier-vs-roots", matched == 500,
           std::to_string(matched) + "/500 sign matches, worst residual " +
               fmt_double(worst_residual) + " (limit 1e-10)");
}

// 6. threshold battery: r*(0,-1) = pi/2 to 1e-10; wright 1.5 -> survival;
// 2.0, 3.0 -> periodic with stable periods; 1.5706 must not read periodic.
void criterion_thresholds() {
    bool ok = true;
    std::string detail;

    const double r_star = critical_delay(0.0, -1.0);
    const bool rstar_ok = std::abs(r_star - kPi / 2) <= 1e-10;
    ok = ok && rstar_ok;
    detail += "r*(0,-1)=" + fmt_double(r_star);

    const History phi15 = History::constant(StateVec::scalar(0.5), 1.5);
    const auto v15 = asymptotic_state(Model::wright(1.5), phi15, 600.0, 1e-4);
    ok = ok && v15.state == AsymptoticState::Survival;
    detail += std::string("; rho1.5=") + asymptotic_state_name(v15.state);

    const double rhos[2] = {2.0, 3.0};
    const double horizons[2] = {120.0, 250.0};
    for (int i = 0; i < 2; ++i) {
        const History phi = History::constant(StateVec::scalar(0.5), rhos[i]);
        const auto v = asymptotic_state(Model::wright(rhos[i]), phi, horizons[i], 1e-4);
        const bool periodic_ok =
            v.state == AsymptoticState::Periodic && v.period_spread <= 0.01;
        ok = ok && periodic_ok;
        detail += "; rho" + fmt_double(rhos[i]) + "=" + asymptotic_state_name(v.state) +
                  " period=" + fmt_double(v.period) + " spread=" +
                  fmt_double(v.period_spread);
    }

    const double near = 1.5706;
    const History phi_near = History::constant(StateVec::scalar(0.5), near);
    const auto v_near =
        asymptotic_state(Model::wright(near), phi_near, 50.0 * std::max(near, 1.0), 1e-4);
    ok = ok && v_near.state != AsymptoticState::Periodic;
    detail += std::string("; rho1.5706=") + asymptotic_state_name(v_near.state) +
              " (must not be periodic)";

    report(6, "thresholds", ok, detail);
}

// 7. hutchinson (a=1, m=2, r=1) mapped through the wright change of
// variables matches direct wright integration at rho = 1, sup <= 1e-6.
void criterion_conjugacy() {
    const DimensionlessParams p{1.0, 0.0, 2.0, 1.0};
    const WrightCoordinates wc = to_wright(p);
    SolverOptions tight;
    tight.abs_tol = tight.rel_tol = 1e-10;

    const History phi_x = History::constant(StateVec::scalar(0.5), p.r);
    const Trajectory hutch =
        integrate(Model::hutchinson(p.a, p.m, p.r), phi_x, 20.0, tight);
    const History phi_xi = phi_x.map_affine(1.0 / wc.carrying_capacity, -1.0, wc.time_scale);
    const Trajectory wright =
        integrate(Model::wright(wc.rho), phi_xi, wc.to_tau(20.0), tight);

    double sup = 0.0;
    for (int i = 0; i <= 800; ++i) {
        const double t = 20.0 * (i / 800.0);
        sup = std::max(sup, std::abs(wc.to_xi(hutch.eval(t)[0]) -
                                     wright.eval(wc.to_tau(t))[0]));
    }
    report(7, "hutchinson-wright-conjugacy", sup <= 1e-6,
           "sup deviation " + fmt_double(sup) + " (limit 1e-06)");
}

// 8. x'(t) = x(t-1), phi == 1 against the hand-derived piecewise polynomial
// on [0, 3], within 10 * tol.
void criterion_steps_oracle() {
    std::vector<std::vector<double>> polys{{1.0, 1.0}};
    for (int k = 1; k < 3; ++k) {
        const std::vector<double>& prev = polys.back();
        std::vector<double> next(prev.size() + 1, 0.0);
        for (std::size_t i = 0; i < prev.size(); ++i)
            next[i + 1] = prev[i] / static_cast<double>(i + 1);
        double at1 = 0.0;
        for (std::size_t i = prev.size(); i-- > 0;) at1 = at1 * 1.0 + prev[i];
        next[0] = at1;
        polys.push_back(next);
    }
    auto oracle = [&](double t) {
        int k = std::min(static_cast<int>(std::floor(t)), 2);
        if (t == static_cast<double>(k) && k > 0) --k;
        const std::vector<double>& c = polys[static_cast<std::size_t>(k)];
        double v = 0.0;
        const double u = t - k;
        for (std::size_t i = c.size(); i-- > 0;) v = v * u + c[i];
        return v;
    };

    const Model m = Model::linear(0.0, 1.0, 1.0);
    const History phi = History::constant(StateVec::scalar(1.0), 1.0);
    const Trajectory traj = integrate(m, phi, 3.0);
    const double limit = 10.0 * traj.options().abs_tol;
    double worst = 0.0;
    for (int i = 0; i <= 900; ++i) {
        const double t = 3.0 * (i / 900.0);
        worst = std::max(worst, std::abs(traj.eval(t)[0] - oracle(t)));
    }
    report(8, "method-of-steps-oracle", worst <= limit,
           "max deviation " + fmt_double(worst) + " (limit " + fmt_double(limit) + ")");
}

// 9. repeated `verify all --seed 1` runs must be byte-identical.
void criterion_determinism() {
    const fs::path dir = fs::temp_directory_path() / "chemolab_acceptance";
    fs::create_directories(dir);
    const fs::path f1 = dir / "verify1.txt";
    const fs::path f2 = dir / "verify2.txt";
    const std::string bin = CHEMOLAB_BIN;

    auto run_once = [&](const fs::path& out) {
        const std::string cmd = bin + " verify all --seed 1 --out " + out.string() +
                                " > /dev/null 2>&1";
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    };
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };

    const int c1 = run_once(f1);
    const int c2 = run_once(f2);
    const std::string r1 = slurp(f1);
    const std::string r2 = slurp(f2);
    const bool pass = c1 == 0 && c2 == 0 && !r1.empty() && r1 == r2;
    report(9, "verify-all-determinism", pass,
           "exit codes " + std::to_string(c1) + "/" + std::to_string(c2) + ", " +
               std::to_string(r1.size()) + " bytes, byte-identical=" +
               (r1 == r2 ? "yes" : "no"));
}

} // namespace

int main() {
    std::printf("chemolab acceptance suite\n");
    criterion_lyapunov();
    criterion_dichotomy();
    criterion_bounds();
    criterion_monotonicity();
    criterion_classifier();
    criterion_thresholds();
    criterion_conjugacy();
    criterion_steps_oracle();
    criterion_determinism();
    std::printf("%s (%d failure%s)\n", g_failures == 0 ? "ALL CRITERIA PASS" : "FAILURES",
                g_failures, g_failures == 1 ? "" : "s");
    return g_failures == 0 ? 0 : 1;
}
