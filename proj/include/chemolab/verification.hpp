#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include "analysis.hpp"
#include "models.hpp"
#include "solver.hpp"

namespace chemolab {

// min/max of one state component over [t_lo, t_hi], scanned segment-wise so
// no extremum slips between coarse samples.
inline std::pair<double, double> component_extrema(const Trajectory& traj, std::size_t comp,
                                                   double t_lo, double t_hi) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const Segment& s : traj.history().segments()) {
        if (s.t1 < t_lo || s.t0 > t_hi) continue;
        const double from = std::max(s.t0, t_lo);
        const double to = std::min(s.t1, t_hi);
        for (int i = 0; i <= 6; ++i) {
            const double t = from + (to - from) * (static_cast<double>(i) / 6.0);
            double v, dv;
            if (s.t1 == s.t0) {
                v = s.y0[comp];
            } else {
                detail::hermite5_eval(s, comp, t, v, dv);
            }
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    if (!(lo <= hi)) throw std::invalid_argument("component_extrema: empty time window");
    return {lo, hi};
}

// V(t) = x(t) + m e^{-r} s(t-r) - m e^{-r}. Along chemostat solutions V
// satisfies V' = -V, so V(t) = V(0) e^{-t}; V = 0 is the invariant
// hyperplane the scalar reduction lives on.
inline double lyapunov_V(const Trajectory& traj, const DimensionlessParams& p, double t) {
    if (!traj.has_model() || traj.model().family() != ModelFamily::Chemostat2D)
        throw std::invalid_argument("lyapunov_V: requires a chemostat trajectory");
    const double cap = p.m * std::exp(-p.r);
    const double x_now = traj.eval(t)[1];
    const double s_then = traj.eval(t - p.r)[0];
    return x_now + cap * s_then - cap;
}

struct OrderTestReport {
    bool preserved = true;
    std::optional<double> first_violation_t;
    double margin = 0.0; // min over t of x2(t) - x1(t)
};

// Integrates two ordered initial conditions and reports whether the order
// x1 <= x2 survives on [0, horizon]. The margin tolerance is 10 times the
// solver's absolute tolerance.
inline OrderTestReport check_order_preservation(const Model& model, const History& phi1,
                                                const History& phi2, double horizon,
                                                SolverOptions opts = {}) {
    if (model.dim() != 1)
        throw std::invalid_argument("check_order_preservation: scalar models only");
    const double r = model.delay();
    for (int i = 0; i <= 200; ++i) {
        const double t = -r + r * (static_cast<double>(i) / 200.0);
        const double v1 = phi1.value(t)[0];
        const double v2 = phi2.value(t)[0];
        if (v1 > v2 + 1e-12 * std::max({1.0, std::abs(v1), std::abs(v2)}))
            throw std::invalid_argument("check_order_preservation: histories are not ordered");
    }

    const Trajectory t1 = integrate(model, phi1, horizon, opts);
    const Trajectory t2 = integrate(model, phi2, horizon, opts);
    const double tol = 10.0 * t1.options().abs_tol;

    OrderTestReport rep;
    rep.margin = std::numeric_limits<double>::infinity();
    const int samples = 4096;
    for (int i = 0; i <= samples; ++i) {
        const double t = horizon * (static_cast<double>(i) / samples);
        const double gap = t2.eval(t)[0] - t1.eval(t)[0];
        rep.margin = std::min(rep.margin, gap);
        if (gap < -tol && !rep.first_violation_t) rep.first_violation_t = t;
    }
    rep.preserved = rep.margin >= -tol;
    return rep;
}

enum class AsymptoticState { Washout, Survival, Periodic, Undecided };

inline const char* asymptotic_state_name(AsymptoticState s) {
    switch (s) {
        case AsymptoticState::Washout: return "washout";
        case AsymptoticState::Survival: return "survival";
        case AsymptoticState::Periodic: return "periodic";
        case AsymptoticState::Undecided: return "undecided";
    }
    return "?";
}

struct AsymptoticVerdict {
    AsymptoticState state = AsymptoticState::Undecided;
    double terminal_deviation = 0.0; // sup distance from the candidate equilibrium
    double amplitude = 0.0;          // half peak-to-peak over the last cycles
    double period = 0.0;             // mean of the last three cycle periods
    double period_spread = 0.0;      // relative spread of those periods
    double horizon = 0.0;
};

namespace detail {

struct CycleEstimate {
    bool valid = false;
    double period = 0.0;
    double spread = 0.0;
    double amplitude = 0.0;
};

// Period estimation from successive upward mean-crossings over [t_lo, t_hi].
inline CycleEstimate estimate_cycles(const Trajectory& traj, std::size_t comp,
                                     double t_lo, double t_hi) {
    CycleEstimate est;
    const int n = 8192;
    std::vector<double> ts(n + 1), vs(n + 1);
    for (int i = 0; i <= n; ++i) {
        ts[i] = t_lo + (t_hi - t_lo) * (static_cast<double>(i) / n);
        vs[i] = traj.eval(ts[i])[comp];
    }
    double mean = 0.0;
    for (double v : vs) mean += v;
    mean /= static_cast<double>(vs.size());

    std::vector<double> crossings;
    for (int i = 0; i < n; ++i) {
        if (vs[i] < mean && vs[i + 1] >= mean) {
            const double frac = (mean - vs[i]) / (vs[i + 1] - vs[i]);
            crossings.push_back(ts[i] + frac * (ts[i + 1] - ts[i]));
        }
    }
    if (crossings.size() < 4) return est;

    const std::size_t k = crossings.size();
    double periods[3];
    for (int j = 0; j < 3; ++j)
        periods[j] = crossings[k - 3 + j] - crossings[k - 4 + j];
    const double mean_period = (periods[0] + periods[1] + periods[2]) / 3.0;
    if (!(mean_period > 0)) return est;
    const double spread =
        (*std::max_element(periods, periods + 3) - *std::min_element(periods, periods + 3)) /
        mean_period;

    const auto [lo, hi] = component_extrema(traj, comp, crossings[k - 4], crossings[k - 1]);
    est.valid = true;
    est.period = mean_period;
    est.spread = spread;
    est.amplitude = (hi - lo) / 2.0;
    return est;
}

} // namespace detail

// Classifies where a solution has settled by horizon time. Washout and
// Survival use a sup check over the trailing window; Periodic additionally
// requires a stable cycle estimate, an amplitude above the floor, and a
// linearly unstable survival state -- a slowly decaying spiral near a
// stability threshold is reported Undecided, not Periodic.
inline AsymptoticVerdict asymptotic_state(const Model& model, const History& phi,
                                          double horizon, double tol,
                                          SolverOptions opts = {}) {
    const double r = model.delay();
    if (!(horizon >= 50.0 * std::max(r, 1.0)))
        throw std::invalid_argument("asymptotic_state: horizon must be >= 50*max(r,1)");
    if (!(tol > 0)) throw std::invalid_argument("asymptotic_state: tol must be positive");

    const Trajectory traj = integrate(model, phi, horizon, opts);
    const double window = 10.0 * std::max(r, 1.0);
    const std::size_t osc_comp = model.dim() - 1;

    AsymptoticVerdict verdict;
    verdict.horizon = horizon;

    std::optional<StateVec> survival, washout;
    for (const Equilibrium& eq : equilibria(model)) {
        if (eq.kind == Equilibrium::Kind::Survival) survival = eq.value;
        if (eq.kind == Equilibrium::Kind::Washout) washout = eq.value;
    }

    auto sup_distance = [&](const StateVec& target) {
        double sup = 0.0;
        for (std::size_t c = 0; c < model.dim(); ++c) {
            const auto [lo, hi] = component_extrema(traj, c, horizon - window, horizon);
            sup = std::max(sup, std::max(std::abs(lo - target[c]), std::abs(hi - target[c])));
        }
        return sup;
    };

    if (survival) {
        verdict.terminal_deviation = sup_distance(*survival);
        if (verdict.terminal_deviation < tol) {
            verdict.state = AsymptoticState::Survival;
            return verdict;
        }
    }
    if (washout) {
        const double dev = sup_distance(*washout);
        if (!survival) verdict.terminal_deviation = dev;
        if (dev < tol) {
            verdict.state = AsymptoticState::Washout;
            verdict.terminal_deviation = dev;
            return verdict;
        }
    }

    // periodic analysis over a longer tail so several cycles are visible
    const double cycle_window = std::min(0.6 * horizon, 45.0 * std::max(r, 1.0));
    const auto est = detail::estimate_cycles(traj, osc_comp, horizon - cycle_window, horizon);
    if (est.valid) {
        verdict.amplitude = est.amplitude;
        verdict.period = est.period;
        verdict.period_spread = est.spread;
        constexpr double amplitude_floor = 1e-3;
        bool unstable_equilibrium = false;
        std::optional<Linearization> gate = survival_linearization(model);
        if (!gate) gate = washout_linearization(model);
        if (gate) unstable_equilibrium = leading_root(*gate).real() > 1e-7;
        if (est.amplitude > amplitude_floor && est.spread <= 0.01 && unstable_equilibrium) {
            verdict.state = AsymptoticState::Periodic;
            return verdict;
        }
    }
    verdict.state = AsymptoticState::Undecided;
    return verdict;
}

// True iff the trajectory stayed inside [-10 tol, m e^{-r} + 10 tol], the
// invariant interval of the scalar chemostat-derived families.
inline bool check_bounds(const Model& model, const Trajectory& traj) {
    if (model.family() != ModelFamily::Hyperbolic &&
        model.family() != ModelFamily::ChemoLogistic)
        throw std::invalid_argument("check_bounds: hyperbolic or chemo-logistic models only");
    const double cap = model.me_minus_r();
    const double tol = 10.0 * traj.options().abs_tol;
    const auto [lo, hi] = component_extrema(traj, 0, traj.t_begin(), traj.t_end());
    return lo >= -tol && hi <= cap + tol;
}

} // namespace chemolab
