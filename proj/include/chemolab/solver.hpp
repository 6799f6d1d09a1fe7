#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#ifdef CHEMOLAB_STEP_TRACE
#include <cstdio>
#endif
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "history.hpp"
#include "models.hpp"
#include "state.hpp"

namespace chemolab {

struct SolverOptions {
    double abs_tol = 1e-8;
    double rel_tol = 1e-8;
    // NaN means "derive from the delay": min(r, 0.1) for r > 0, else 0.1.
    double max_step = std::numeric_limits<double>::quiet_NaN();
    // NaN means max_step / 8.
    double initial_step = std::numeric_limits<double>::quiet_NaN();
};

struct StepStats {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::size_t rhs_evals = 0;
};

// Dense solution over [-r, t_end] plus the breakpoint and stepping metadata.
class Trajectory {
public:
    Trajectory(History history, std::vector<double> breakpoints, StepStats stats,
               SolverOptions resolved_options, double delay, std::optional<Model> model)
        : history_(std::move(history)), breakpoints_(std::move(breakpoints)),
          stats_(stats), options_(resolved_options), delay_(delay),
          model_(std::move(model)) {}

    const History& history() const noexcept { return history_; }
    double t_begin() const noexcept { return history_.t_begin(); }
    double t_end() const noexcept { return history_.t_end(); }
    double delay() const noexcept { return delay_; }
    std::size_t dim() const noexcept { return history_.dim(); }

    StateVec eval(double t) const { return history_.value(t); }

    // every k*r <= t_end, k >= 0
    const std::vector<double>& breakpoints() const noexcept { return breakpoints_; }
    const StepStats& stats() const noexcept { return stats_; }
    const SolverOptions& options() const noexcept { return options_; }

    bool has_model() const noexcept { return model_.has_value(); }
    const Model& model() const {
        if (!model_) throw std::logic_error("Trajectory: no model attached");
        return *model_;
    }

private:
    History history_;
    std::vector<double> breakpoints_;
    StepStats stats_;
    SolverOptions options_;
    double delay_;
    std::optional<Model> model_;
};

namespace detail {

// Dormand-Prince 5(4) coefficients.
struct Dopri5 {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                            a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                            a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                            a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
};

inline const Segment& locate_segment(const std::vector<Segment>& segs, double t) {
    auto it = std::lower_bound(segs.begin(), segs.end(), t,
                               [](const Segment& s, double tq) { return s.t1 < tq; });
    if (it == segs.end()) --it;
    return *it;
}

template <class RHS>
class MethodOfSteps {
public:
    MethodOfSteps(RHS& f, std::size_t dim, double delay, const History& phi,
                  double t_end, const SolverOptions& opts)
        : f_(f), dim_(dim), delay_(delay), t_end_(t_end), opts_(opts) {
        segments_ = phi.segments();
    }

    Trajectory run(std::optional<Model> model) {
        build_breakpoints();
        build_stops();
        const double floor_scale = std::max(1.0, t_end_);

        double t = 0.0;
        StateVec y = eval_value(0.0);
        std::size_t stop_next = 0;
        StateVec k1 = eval_rhs(0.0, y);
        double h = opts_.initial_step;

        std::size_t attempts = 0;
        bool just_rejected = false;
        while (t < t_end_) {
            if (++attempts > 200'000'000)
                throw std::runtime_error("integrate: step limit exceeded");

            double stop = t_end_;
            while (stop_next < stops_.size() && stops_[stop_next] <= t) ++stop_next;
            if (stop_next < stops_.size()) stop = std::min(stop, stops_[stop_next]);

            if (stop - t <= 1e-13 * floor_scale) { // already there up to roundoff
                t = stop;
                continue;
            }

            h = std::min(h, opts_.max_step);
            bool hit_stop = false;
            double t_next;
            if (t + h >= stop - 1e-12 * floor_scale) {
                h = stop - t;
                t_next = stop;
                hit_stop = true;
            } else {
                t_next = t + h;
            }

            Attempt at = attempt_step(t, h, t_next, y, k1);
            if (!at.finite) {
                ++stats_.rejected;
                h *= 0.25;
                if (h < 64 * std::numeric_limits<double>::epsilon() * floor_scale)
                    throw divergence_error("integrate: nonfinite state", t);
                just_rejected = true;
                continue;
            }
            if (at.err > 1.0) {
                ++stats_.rejected;
#ifdef CHEMOLAB_STEP_TRACE
                std::fprintf(stderr,
                             "reject t=%.12g h=%.3e err=%.3e emb=%.3e defect=%.3e y0=%.3e y1=%.3e\n",
                             t, h, at.err, at.dbg_emb, at.dbg_defect, y[0], at.y1[0]);
#endif
                h *= std::max(0.1, 0.9 * std::pow(at.err, -0.2));
                if (h < 64 * std::numeric_limits<double>::epsilon() * floor_scale)
                    throw std::runtime_error("integrate: step size underflow");
                just_rejected = true;
                continue;
            }

            segments_.push_back(at.segment);
            ++stats_.accepted;
            t = t_next;
            y = at.y1;
            k1 = at.k7;
            if (hit_stop && stop_next < stops_.size() && t == stops_[stop_next])
                ++stop_next;

            double grow = at.err > 1e-12 ? 0.9 * std::pow(at.err, -0.2) : 5.0;
            grow = std::clamp(grow, 0.2, 5.0);
            if (just_rejected) grow = std::min(grow, 1.0);
            just_rejected = false;
            h = std::min(h * grow, opts_.max_step);
        }

        History full(dim_, std::move(segments_));
        return Trajectory(std::move(full), std::move(breakpoints_), stats_, opts_,
                          delay_, std::move(model));
    }

private:
    struct Attempt {
        bool finite = false;
        double err = 0.0;
        Segment segment;
        StateVec y1, k7;
#ifdef CHEMOLAB_STEP_TRACE
        double dbg_emb = 0.0, dbg_defect = 0.0;
#endif
    };

    void build_breakpoints() {
        breakpoints_.push_back(0.0);
        if (delay_ > 0) {
            for (std::size_t k = 1;; ++k) {
                const double bp = static_cast<double>(k) * delay_;
                if (bp > t_end_) break;
                breakpoints_.push_back(bp);
            }
        }
    }

    // Forced step boundaries: multiples of the delay plus the images
    // theta + k*r of every interior history join. A join carries a
    // derivative discontinuity that the delayed argument re-injects at each
    // reflection; landing on it exactly keeps every step one-sided smooth.
    void build_stops() {
        stops_.assign(breakpoints_.begin() + 1, breakpoints_.end());
        if (delay_ > 0 && segments_.size() > 1) {
            for (std::size_t i = 0; i + 1 < segments_.size(); ++i) {
                const double join = segments_[i].t1; // in (-r, 0)
                for (std::size_t k = 1;; ++k) {
                    const double image = join + static_cast<double>(k) * delay_;
                    if (image > t_end_) break;
                    if (image > 0) stops_.push_back(image);
                }
            }
        }
        std::sort(stops_.begin(), stops_.end());
        const double eps = 1e-13 * std::max(1.0, t_end_);
        stops_.erase(std::unique(stops_.begin(), stops_.end(),
                                 [eps](double a, double b) { return b - a <= eps; }),
                     stops_.end());
    }

    StateVec eval_value(double t) const {
        const Segment& s = locate_segment(segments_, t);
        StateVec out = StateVec::zero(dim_);
        if (s.t1 == s.t0 || t == s.t0) {
            for (std::size_t c = 0; c < dim_; ++c) out[c] = s.y0[c];
            return out;
        }
        if (t == s.tm) { for (std::size_t c = 0; c < dim_; ++c) out[c] = s.ym[c]; return out; }
        if (t == s.t1) { for (std::size_t c = 0; c < dim_; ++c) out[c] = s.y1[c]; return out; }
        for (std::size_t c = 0; c < dim_; ++c) {
            double v, dv;
            hermite5_eval(s, c, t, v, dv);
            out[c] = v;
        }
        return out;
    }

    // right-hand side at stage time ts; for delay 0 the delayed argument is
    // the current state itself
    StateVec eval_rhs(double ts, const StateVec& current) {
        ++stats_.rhs_evals;
        if (delay_ == 0.0) return f_(current, current);
        return f_(current, eval_value(ts - delay_));
    }

    Attempt attempt_step(double t, double h, double t_next, const StateVec& y,
                         const StateVec& k1) {
        Attempt at;
        StateVec k7_full, y1;
        double err_emb = 0.0;
        if (!rk_step(t, h, y, k1, y1, k7_full, &err_emb)) return at;

        // half step from the same state; shares k1, its FSAL stage is the
        // midpoint derivative
        StateVec ym, fm;
        if (!rk_step(t, h / 2, y, k1, ym, fm, nullptr)) return at;

        Segment seg;
        seg.t0 = t;
        seg.tm = t + h / 2;
        seg.t1 = t_next;
        for (std::size_t c = 0; c < dim_; ++c) {
            seg.y0[c] = y[c];
            seg.f0[c] = k1[c];
            seg.ym[c] = ym[c];
            seg.fm[c] = fm[c];
            seg.y1[c] = y1[c];
            seg.f1[c] = k7_full[c];
        }

        // Defect control drives acceptance: the step is accepted when the
        // interpolant's equation residual stays below a strictly
        // sub-tolerance target at the sample points, which sit near the
        // extrema of the quintic's defect profile. The embedded estimate
        // only guards against grossly wrong nodes.
        // Evaluation noise of the interpolant derivative grows like eps/h
        // through the divided-difference table; a measured defect below that
        // floor carries no information, and the control target must never
        // dip under it or fast transients reject forever.
        double node_scale = 0.0, deriv_scale = 0.0;
        for (std::size_t c = 0; c < dim_; ++c) {
            node_scale = std::max({node_scale, std::abs(seg.y0[c]), std::abs(seg.ym[c]),
                                   std::abs(seg.y1[c])});
            deriv_scale = std::max({deriv_scale, std::abs(seg.f0[c]), std::abs(seg.fm[c]),
                                    std::abs(seg.f1[c])});
        }
        const double defect_noise = 256.0 * std::numeric_limits<double>::epsilon() *
                                    (node_scale / h + deriv_scale);

        double defect_scaled = 0.0;
        for (double theta : {0.09, 0.35, 0.65, 0.91}) {
            const double ts = t + theta * h;
            StateVec p = StateVec::zero(dim_), dp = StateVec::zero(dim_);
            for (std::size_t c = 0; c < dim_; ++c)
                hermite5_eval(seg, c, ts, p[c], dp[c]);
            if (!p.finite()) return at;
            StateVec fp = eval_rhs(ts, p);
            for (std::size_t c = 0; c < dim_; ++c) {
                const double sc = opts_.abs_tol +
                                  opts_.rel_tol * std::max(std::abs(y[c]), std::abs(y1[c]));
                const double target =
                    std::max(std::pow(sc, 1.25), 4.0 * defect_noise);
                const double defect =
                    std::max(0.0, std::abs(dp[c] - fp[c]) - defect_noise);
                defect_scaled = std::max(defect_scaled, defect / target);
            }
        }
        if (!std::isfinite(defect_scaled)) return at;

        at.finite = true;
        at.err = std::max(defect_scaled, err_emb / 25.0);
#ifdef CHEMOLAB_STEP_TRACE
        at.dbg_emb = err_emb;
        at.dbg_defect = defect_scaled;
#endif
        at.segment = seg;
        at.y1 = y1;
        at.k7 = k7_full;
        return at;
    }

    // One DOPRI5 step of size h from (t, y) with precomputed k1. On success
    // fills y_out and the FSAL stage k7_out; err_out (if requested) gets the
    // scaled embedded error. Returns false on nonfinite intermediates.
    bool rk_step(double t, double h, const StateVec& y, const StateVec& k1,
                 StateVec& y_out, StateVec& k7_out, double* err_out) {
        using T = Dopri5;
        const std::size_t n = dim_;
        StateVec k2, k3, k4, k5, k6, stage = StateVec::zero(n);

        auto advance = [&](auto&&... terms) -> bool {
            for (std::size_t c = 0; c < n; ++c) {
                double acc = 0.0;
                ((acc += terms.first * terms.second[c]), ...);
                stage[c] = y[c] + h * acc;
            }
            return stage.finite();
        };

        if (!advance(std::pair{T::a21, k1})) return false;
        k2 = eval_rhs(t + T::c2 * h, stage);
        if (!advance(std::pair{T::a31, k1}, std::pair{T::a32, k2})) return false;
        k3 = eval_rhs(t + T::c3 * h, stage);
        if (!advance(std::pair{T::a41, k1}, std::pair{T::a42, k2},
                     std::pair{T::a43, k3})) return false;
        k4 = eval_rhs(t + T::c4 * h, stage);
        if (!advance(std::pair{T::a51, k1}, std::pair{T::a52, k2},
                     std::pair{T::a53, k3}, std::pair{T::a54, k4})) return false;
        k5 = eval_rhs(t + T::c5 * h, stage);
        if (!advance(std::pair{T::a61, k1}, std::pair{T::a62, k2},
                     std::pair{T::a63, k3}, std::pair{T::a64, k4},
                     std::pair{T::a65, k5})) return false;
        k6 = eval_rhs(t + h, stage);

        y_out = StateVec::zero(n);
        for (std::size_t c = 0; c < n; ++c)
            y_out[c] = y[c] + h * (T::b1 * k1[c] + T::b3 * k3[c] + T::b4 * k4[c] +
                                   T::b5 * k5[c] + T::b6 * k6[c]);
        if (!y_out.finite()) return false;
        k7_out = eval_rhs(t + h, y_out);
        if (!k7_out.finite()) return false;

        if (err_out) {
            double err_sq = 0.0;
            for (std::size_t c = 0; c < n; ++c) {
                const double e = h * (T::e1 * k1[c] + T::e3 * k3[c] + T::e4 * k4[c] +
                                      T::e5 * k5[c] + T::e6 * k6[c] + T::e7 * k7_out[c]);
                const double sc = opts_.abs_tol +
                                  opts_.rel_tol * std::max(std::abs(y[c]), std::abs(y_out[c]));
                err_sq += (e / sc) * (e / sc);
            }
            *err_out = std::sqrt(err_sq / static_cast<double>(n));
            if (!std::isfinite(*err_out)) return false;
        }
        return true;
    }

    RHS& f_;
    std::size_t dim_;
    double delay_;
    double t_end_;
    SolverOptions opts_;
    std::vector<Segment> segments_;
    std::vector<double> breakpoints_;
    std::vector<double> stops_; // breakpoints plus reflected history joins
    StepStats stats_;
};

inline SolverOptions resolve_options(SolverOptions opts, double delay) {
    if (std::isnan(opts.max_step))
        opts.max_step = delay > 0 ? std::min(delay, 0.1) : 0.1;
    if (std::isnan(opts.initial_step)) opts.initial_step = opts.max_step / 8;
    if (!(opts.abs_tol > 0 && opts.rel_tol > 0 && opts.max_step > 0 && opts.initial_step > 0))
        throw std::invalid_argument("SolverOptions: tolerances and steps must be positive");
    if (delay > 0 && opts.max_step > delay)
        throw std::invalid_argument("SolverOptions: max_step must not exceed the delay");
    if (opts.initial_step > opts.max_step)
        throw std::invalid_argument("SolverOptions: initial_step must not exceed max_step");
    return opts;
}

inline void check_integration_inputs(std::size_t dim, double delay, const History& phi,
                                     double t_end) {
    if (!(delay >= 0)) throw std::invalid_argument("integrate: delay must be >= 0");
    if (!(t_end > 0)) throw std::invalid_argument("integrate: t_end must be > 0");
    if (!std::isfinite(t_end)) throw std::invalid_argument("integrate: t_end must be finite");
    if (phi.dim() != dim)
        throw std::invalid_argument("integrate: history dimension does not match the model");
    const double slack = 1e-12 * std::max(1.0, delay);
    if (std::abs(phi.t_begin() + delay) > slack || std::abs(phi.t_end()) > slack)
        throw std::invalid_argument("integrate: history must span exactly [-r, 0]");
}

} // namespace detail

// Integrate an autonomous DDE with one constant delay given as a callable
// F(current, delayed) -> StateVec. Steps never cross a multiple of the
// delay; the dense output is evaluable anywhere in [-delay, t_end].
template <class RHS>
Trajectory integrate_rhs(RHS&& f, std::size_t dim, double delay, const History& phi,
                         double t_end, SolverOptions opts = {},
                         std::optional<Model> model = std::nullopt) {
    detail::check_integration_inputs(dim, delay, phi, t_end);
    const SolverOptions resolved = detail::resolve_options(opts, delay);
    detail::MethodOfSteps<std::remove_reference_t<RHS>> engine(f, dim, delay, phi,
                                                               t_end, resolved);
    return engine.run(std::move(model));
}

inline Trajectory integrate(const Model& model, const History& phi, double t_end,
                            SolverOptions opts = {}) {
    auto f = [&model](const StateVec& current, const StateVec& delayed) {
        return rhs(model, current, delayed);
    };
    return integrate_rhs(f, model.dim(), model.delay(), phi, t_end, opts, model);
}

// The window [t_lo, t_hi] of a trajectory re-based to [t_lo - t_hi, 0], as a
// fresh initial condition. Both cuts must land on accepted step boundaries
// (multiples of the delay always do), so the extraction is exact.
inline History extract_history(const Trajectory& traj, double t_lo, double t_hi) {
    if (!(t_lo < t_hi))
        throw std::invalid_argument("extract_history: empty window");
    std::vector<Segment> picked;
    for (const Segment& s : traj.history().segments())
        if (s.t0 >= t_lo && s.t1 <= t_hi) picked.push_back(s);
    if (picked.empty() || picked.front().t0 != t_lo || picked.back().t1 != t_hi)
        throw std::invalid_argument("extract_history: cuts must be step boundaries");
    for (Segment& s : picked) {
        s.t0 -= t_hi;
        s.tm -= t_hi;
        s.t1 -= t_hi;
    }
    picked.back().t1 = 0.0;
    return History(traj.dim(), std::move(picked));
}

} // namespace chemolab
