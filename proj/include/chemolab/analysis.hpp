#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include "errors.hpp"
#include "models.hpp"
#include "state.hpp"

namespace chemolab {

struct Equilibrium {
    enum class Kind { Washout, Survival };
    Kind kind;
    StateVec value;
    bool exists = true;
};

// Equilibria of the delay-free right-hand side. The washout state is always
// present; the survival state is included only when its defining equation
// has a positive root. For the Wright form the survival image is xi = 0 and
// the washout image xi = -1.
inline std::vector<Equilibrium> equilibria(const Model& model) {
    using Kind = Equilibrium::Kind;
    const DimensionlessParams& p = model.params();
    std::vector<Equilibrium> out;
    switch (model.family()) {
        case ModelFamily::Chemostat2D: {
            out.push_back({Kind::Washout, StateVec::planar(1.0, 0.0), true});
            const double cap = model.me_minus_r();
            if (cap * holling_response(1.0, p.a, p.b) > 1.0) {
                // m e^{-r} f(s) = 1 on the strictly increasing f; bisection
                double lo = 0.0, hi = 1.0;
                for (int i = 0; i < 200; ++i) {
                    const double mid = 0.5 * (lo + hi);
                    if (cap * holling_response(mid, p.a, p.b) - 1.0 < 0)
                        lo = mid;
                    else
                        hi = mid;
                    if (hi - lo <= 1e-17 * std::max(1.0, hi)) break;
                }
                const double s_bar = 0.5 * (lo + hi);
                out.push_back({Kind::Survival,
                               StateVec::planar(s_bar, cap * (1.0 - s_bar)), true});
            }
            break;
        }
        case ModelFamily::Hyperbolic: {
            out.push_back({Kind::Washout, StateVec::scalar(0.0), true});
            const double cap = model.me_minus_r();
            if (cap * holling_response(1.0, p.a, p.b) > 1.0) {
                // f((cap - x)/cap) = e^r/m is decreasing in x
                double lo = 0.0, hi = cap;
                for (int i = 0; i < 200; ++i) {
                    const double mid = 0.5 * (lo + hi);
                    const double g = cap * holling_response((cap - mid) / cap, p.a, p.b) - 1.0;
                    if (g > 0)
                        lo = mid;
                    else
                        hi = mid;
                    if (hi - lo <= 1e-17 * std::max(1.0, hi)) break;
                }
                out.push_back({Kind::Survival, StateVec::scalar(0.5 * (lo + hi)), true});
            }
            break;
        }
        case ModelFamily::ChemoLogistic: {
            out.push_back({Kind::Washout, StateVec::scalar(0.0), true});
            const double cap = model.me_minus_r();
            if (p.a * cap > 1.0)
                out.push_back({Kind::Survival, StateVec::scalar((p.a * cap - 1.0) / p.a), true});
            break;
        }
        case ModelFamily::Hutchinson: {
            out.push_back({Kind::Washout, StateVec::scalar(0.0), true});
            if (p.a * p.m > 1.0)
                out.push_back({Kind::Survival, StateVec::scalar((p.a * p.m - 1.0) / p.a), true});
            break;
        }
        case ModelFamily::Wright: {
            out.push_back({Kind::Washout, StateVec::scalar(-1.0), true});
            out.push_back({Kind::Survival, StateVec::scalar(0.0), true});
            break;
        }
        case ModelFamily::Linear: {
            out.push_back({Kind::Washout, StateVec::scalar(0.0), true});
            break;
        }
    }
    return out;
}

// xi'(t) = a_lin xi(t) + b_lin xi(t - r)
struct Linearization {
    double a_lin = 0.0;
    double b_lin = 0.0;
    double delay_r = 0.0;
};

inline Linearization linearize(const Model& model, const Equilibrium& eq) {
    if (model.family() == ModelFamily::Chemostat2D)
        throw std::invalid_argument(
            "linearize: planar chemostat unsupported; analyze its hyperbolic factor");
    if (eq.value.size() != model.dim())
        throw std::invalid_argument("linearize: equilibrium dimension mismatch");
    const StateVec res = rhs(model, eq.value, eq.value);
    for (std::size_t c = 0; c < res.size(); ++c)
        if (std::abs(res[c]) > 1e-10)
            throw std::invalid_argument("linearize: point is not an equilibrium (residual > 1e-10)");

    const DimensionlessParams& p = model.params();
    const double x = eq.value[0];
    Linearization lin;
    lin.delay_r = model.delay();
    switch (model.family()) {
        case ModelFamily::Hyperbolic: {
            const double cap = model.me_minus_r();
            const double s_implied = (cap - x) / cap;
            lin.a_lin = -holling_response_deriv(s_implied, p.a, p.b) * x - 1.0;
            lin.b_lin = cap * holling_response(s_implied, p.a, p.b);
            break;
        }
        case ModelFamily::ChemoLogistic:
            lin.a_lin = -1.0 - p.a * x;
            lin.b_lin = p.a * model.me_minus_r() - p.a * x;
            break;
        case ModelFamily::Hutchinson:
            lin.a_lin = p.a * p.m - 1.0 - p.a * x;
            lin.b_lin = -p.a * x;
            break;
        case ModelFamily::Wright:
            lin.a_lin = -x;
            lin.b_lin = -(1.0 + x);
            break;
        case ModelFamily::Linear:
            lin.a_lin = model.lin_a();
            lin.b_lin = model.lin_b();
            break;
        case ModelFamily::Chemostat2D:
            break; // unreachable
    }
    return lin;
}

namespace detail {

inline std::complex<double> char_residual(std::complex<double> lambda, double a, double b,
                                          double r) {
    return lambda - a - b * std::exp(-lambda * r);
}

// Adaptive phase walk along the straight edge z1 -> z2. Requires F nonzero
// along the way; throws root_search_error if a root sits (numerically) on
// the contour.
inline double phase_along_edge(double a, double b, double r, std::complex<double> z1,
                               std::complex<double> z2, int depth = 0) {
    const std::complex<double> F1 = char_residual(z1, a, b, r);
    const std::complex<double> F2 = char_residual(z2, a, b, r);
    const double floor = 1e-13 * std::max({1.0, std::abs(z1), std::abs(z2), std::abs(a) + std::abs(b)});
    if (std::abs(F1) < floor || std::abs(F2) < floor)
        throw root_search_error("argument principle: root on or near the contour");
    const double dphi = std::arg(F2 / F1);
    if (std::abs(dphi) <= 0.5 && depth >= 1) return dphi;
    if (depth > 48)
        throw root_search_error("argument principle: contour refinement failed");
    const std::complex<double> mid = 0.5 * (z1 + z2);
    return phase_along_edge(a, b, r, z1, mid, depth + 1) +
           phase_along_edge(a, b, r, mid, z2, depth + 1);
}

} // namespace detail

// Number of characteristic roots of lambda = a + b e^{-lambda r} strictly
// inside the rectangle, by the argument principle. The characteristic
// function is entire, so the winding number is the root count.
inline int count_roots_in_rectangle(double a_lin, double b_lin, double delay_r,
                                    double re_lo, double re_hi, double im_lo, double im_hi) {
    if (!(re_lo < re_hi && im_lo < im_hi))
        throw std::invalid_argument("count_roots_in_rectangle: empty rectangle");
    const std::complex<double> corners[4] = {
        {re_lo, im_lo}, {re_hi, im_lo}, {re_hi, im_hi}, {re_lo, im_hi}};
    double total = 0.0;
    for (int e = 0; e < 4; ++e) {
        const std::complex<double> z1 = corners[e];
        const std::complex<double> z2 = corners[(e + 1) % 4];
        // initial uniform split so each piece sees a bounded phase change of
        // the e^{-lambda r} factor
        const double len = std::abs(z2 - z1);
        const int pieces = std::max(8, static_cast<int>(std::ceil(len * std::max(delay_r, 0.5) / 0.5)));
        for (int i = 0; i < pieces; ++i) {
            const std::complex<double> p1 = z1 + (z2 - z1) * (static_cast<double>(i) / pieces);
            const std::complex<double> p2 = z1 + (z2 - z1) * (static_cast<double>(i + 1) / pieces);
            total += detail::phase_along_edge(a_lin, b_lin, delay_r, p1, p2);
        }
    }
    const double winding = total / (2.0 * 3.14159265358979323846);
    const double rounded = std::round(winding);
    if (std::abs(winding - rounded) > 0.25)
        throw root_search_error("argument principle: winding number is not an integer");
    return static_cast<int>(rounded);
}

namespace detail {

inline std::optional<std::complex<double>> newton_root(double a, double b, double r,
                                                       std::complex<double> z0) {
    std::complex<double> z = z0;
    for (int it = 0; it < 200; ++it) {
        const std::complex<double> F = char_residual(z, a, b, r);
        const double target = 1e-14 * std::max(1.0, std::abs(z));
        if (std::abs(F) <= target) return z;
        const std::complex<double> dF = 1.0 + b * r * std::exp(-z * r);
        if (std::abs(dF) < 1e-14) return std::nullopt;
        std::complex<double> step = F / dF;
        // damping: insist on residual decrease
        double s = 1.0;
        while (s > 1e-4 &&
               std::abs(char_residual(z - s * step, a, b, r)) > (1.0 - 0.25 * s) * std::abs(F))
            s *= 0.5;
        z -= s * step;
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return std::nullopt;
    }
    if (std::abs(char_residual(z, a, b, r)) <= 1e-12 * std::max(1.0, std::abs(z))) return z;
    return std::nullopt;
}

// Rightmost real root, when one exists.
inline std::optional<double> rightmost_real_root(double a, double b, double r) {
    auto g = [&](double x) { return x - a - b * std::exp(-x * r); };
    double lo, hi;
    if (b > 0) {
        // g is concave, -inf at -inf, +inf at +inf: exactly one real root
        lo = a - std::abs(b) - 1.0;
        hi = a + std::abs(b) + 1.0;
        double span = std::abs(b) + 1.0;
        for (int i = 0; i < 200 && g(lo) > 0; ++i) { lo -= span; span *= 2; }
        span = std::abs(b) + 1.0;
        for (int i = 0; i < 200 && g(hi) < 0; ++i) { hi += span; span *= 2; }
        if (g(lo) > 0 || g(hi) < 0) return std::nullopt;
    } else {
        // g is convex with minimum at ln(-b r)/r; real roots exist only if
        // the minimum is non-positive, and the rightmost lies to its right
        const double stat = std::log(-b * r) / r;
        if (g(stat) > 0) return std::nullopt;
        lo = stat;
        hi = stat + 1.0;
        double span = 1.0;
        for (int i = 0; i < 200 && g(hi) < 0; ++i) { hi += span; span *= 2; }
        if (g(hi) < 0) return std::nullopt;
    }
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (g(mid) < 0)
            lo = mid;
        else
            hi = mid;
        if (hi - lo <= 1e-16 * std::max(1.0, std::abs(hi))) break;
    }
    return 0.5 * (lo + hi);
}

inline void locate_roots_in_rectangle(double a, double b, double r, double re_lo,
                                      double re_hi, double im_lo, double im_hi,
                                      std::vector<std::complex<double>>& out, int depth = 0) {
    int cnt = 0;
    try {
        cnt = count_roots_in_rectangle(a, b, r, re_lo, re_hi, im_lo, im_hi);
    } catch (const root_search_error&) {
        if (depth > 60) throw;
        // nudge the box and retry once per level
        const double jr = 1e-9 * (1.0 + std::abs(re_hi - re_lo));
        const double ji = 1e-9 * (1.0 + std::abs(im_hi - im_lo));
        cnt = count_roots_in_rectangle(a, b, r, re_lo - jr, re_hi + jr, im_lo - ji, im_hi + ji);
    }
    if (cnt == 0) return;
    if ((re_hi - re_lo) + (im_hi - im_lo) < 1e-6 || depth > 60) {
        const std::complex<double> center(0.5 * (re_lo + re_hi), 0.5 * (im_lo + im_hi));
        if (auto z = newton_root(a, b, r, center)) out.push_back(*z);
        return;
    }
    if (re_hi - re_lo >= im_hi - im_lo) {
        const double mid = 0.5 * (re_lo + re_hi);
        locate_roots_in_rectangle(a, b, r, re_lo, mid, im_lo, im_hi, out, depth + 1);
        locate_roots_in_rectangle(a, b, r, mid, re_hi, im_lo, im_hi, out, depth + 1);
    } else {
        const double mid = 0.5 * (im_lo + im_hi);
        locate_roots_in_rectangle(a, b, r, re_lo, re_hi, im_lo, mid, out, depth + 1);
        locate_roots_in_rectangle(a, b, r, re_lo, re_hi, mid, im_hi, out, depth + 1);
    }
}

} // namespace detail

// Root of lambda = a + b e^{-lambda r} with maximal real part, certified by
// an argument-principle count of roots to its right. Canonical form has
// Im >= 0. For r = 0 the equation is linear and the root is a + b exactly.
inline std::complex<double> leading_root(const Linearization& lin) {
    const double a = lin.a_lin, b = lin.b_lin, r = lin.delay_r;
    if (!(std::isfinite(a) && std::isfinite(b) && r >= 0))
        throw std::invalid_argument("leading_root: coefficients must be finite, r >= 0");
    if (r == 0.0) return {a + b, 0.0};
    if (b == 0.0) return {a, 0.0};

    std::vector<std::complex<double>> candidates;
    if (auto rr = detail::rightmost_real_root(a, b, r))
        candidates.emplace_back(*rr, 0.0);

    // Newton sweeps seeded over the strip that holds the principal branch of
    // roots, plus a cushion scaled by |b|.
    const double pi = 3.14159265358979323846;
    std::vector<double> re_seeds = {a, 0.0};
    if (!candidates.empty()) re_seeds.push_back(candidates.front().real());
    for (int j = 0; j < 16; ++j) {
        const double w1 = (j + 0.5) * pi / (16.0 * r);
        for (double re : re_seeds)
            if (auto z = detail::newton_root(a, b, r, {re, w1})) candidates.push_back(*z);
    }
    for (int j = 0; j < 12; ++j) {
        const double w2 = (j + 0.5) * (pi / r + std::abs(b)) / 12.0;
        if (auto z = detail::newton_root(a, b, r, {a, w2})) candidates.push_back(*z);
    }
    if (candidates.empty())
        throw root_search_error("leading_root: no candidate roots converged");

    auto canonical = [](std::complex<double> z) {
        return std::complex<double>(z.real(), std::abs(z.imag()) < 1e-11 ? 0.0 : std::abs(z.imag()));
    };
    auto best_of = [&]() {
        std::complex<double> best = canonical(candidates.front());
        for (const auto& zc : candidates) {
            const std::complex<double> z = canonical(zc);
            if (z.real() > best.real() ||
                (z.real() == best.real() && z.imag() < best.imag()))
                best = z;
        }
        return best;
    };

    std::complex<double> best = best_of();
    bool certified = false;
    for (int round = 0; round < 3 && !certified; ++round) {
        bool counted = false;
        int cnt = 0;
        for (double gap : {1e-7, 1e-6, 1e-5}) {
            const double sigma = best.real() + gap * std::max(1.0, std::abs(best.real()));
            const double radius = std::abs(b) * std::exp(-sigma * r);
            const double re_hi = a + radius + 1.0;
            if (re_hi <= sigma) { // every root lies strictly left of sigma
                cnt = 0;
                counted = true;
                break;
            }
            try {
                cnt = count_roots_in_rectangle(a, b, r, sigma, re_hi,
                                               -(radius + 1.0), radius + 1.0);
                counted = true;
                break;
            } catch (const root_search_error&) {
                continue; // widen the gap and retry
            }
        }
        if (!counted)
            throw root_search_error("leading_root: could not certify the rightmost root");
        if (cnt == 0) {
            certified = true;
        } else {
            // a root to the right was missed; chase it down and retry
            const double sigma = best.real() + 1e-7 * std::max(1.0, std::abs(best.real()));
            const double radius = std::abs(b) * std::exp(-sigma * r);
            detail::locate_roots_in_rectangle(a, b, r, sigma, a + radius + 1.0,
                                              -(radius + 1.0), radius + 1.0, candidates);
            best = best_of();
        }
    }
    if (!certified)
        throw root_search_error("leading_root: rightmost-root certification failed");

    const double residual = std::abs(detail::char_residual(best, a, b, r));
    if (residual > 1e-10 * std::max(1.0, std::abs(best)))
        throw root_search_error("leading_root: residual above 1e-10");
    return best;
}

// First delay at which a conjugate root pair reaches the imaginary axis:
// r* = arccos(-a/b) / omega with omega = sqrt(b^2 - a^2). Only defined in
// the delay-induced-instability case a + b < 0, b < a.
inline double critical_delay(double a_lin, double b_lin) {
    if (!(a_lin + b_lin < 0 && b_lin < a_lin))
        throw std::invalid_argument(
            "critical_delay: requires a + b < 0 and b < a (delay-induced instability case)");
    const double omega = std::sqrt(b_lin * b_lin - a_lin * a_lin);
    const double r_star = std::acos(-a_lin / b_lin) / omega;
    // the formula is self-verifying: i*omega must solve the characteristic
    // equation at r*
    const double residual =
        std::abs(detail::char_residual({0.0, omega}, a_lin, b_lin, r_star));
    if (residual > 1e-10 * std::max(1.0, omega))
        throw root_search_error("critical_delay: crossing residual above 1e-10");
    return r_star;
}

enum class StabilityCase { A, B, C, D };

inline char stability_case_letter(StabilityCase c) {
    switch (c) {
        case StabilityCase::A: return 'A';
        case StabilityCase::B: return 'B';
        case StabilityCase::C: return 'C';
        case StabilityCase::D: return 'D';
    }
    return '?';
}

struct StabilityReport {
    StabilityCase stability_case;
    std::complex<double> leading_root;
    std::optional<double> critical_delay; // case C only
    std::optional<double> omega;          // case C only: crossing frequency
};

// Sign classification of the zero solution of the linearization:
//   A: a + b > 0, unstable for every delay
//   B: a + b < 0, b >= a, stable for every delay
//   C: a + b < 0, b < a, stable below the critical delay, unstable above
//   D: a + b = 0 (within 1e-12), lambda = 0 is a root
inline StabilityReport classify(const Linearization& lin) {
    if (!(std::isfinite(lin.a_lin) && std::isfinite(lin.b_lin)))
        throw std::invalid_argument("classify: coefficients must be finite");
    StabilityReport rep{StabilityCase::D, {0.0, 0.0}, std::nullopt, std::nullopt};
    const double sum = lin.a_lin + lin.b_lin;
    if (std::abs(sum) <= 1e-12) {
        rep.stability_case = StabilityCase::D;
    } else if (sum > 0) {
        rep.stability_case = StabilityCase::A;
    } else if (lin.b_lin >= lin.a_lin) {
        rep.stability_case = StabilityCase::B;
    } else {
        rep.stability_case = StabilityCase::C;
        rep.critical_delay = critical_delay(lin.a_lin, lin.b_lin);
        rep.omega = std::sqrt(lin.b_lin * lin.b_lin - lin.a_lin * lin.a_lin);
    }
    rep.leading_root = leading_root(lin);
    return rep;
}

// Linearization at the survival state when it exists (the natural gate for
// oscillation claims), otherwise at the washout state.
inline std::optional<Linearization> survival_linearization(const Model& model) {
    if (model.family() == ModelFamily::Chemostat2D)
        return survival_linearization(Model::hyperbolic(model.params()));
    for (const Equilibrium& eq : equilibria(model))
        if (eq.kind == Equilibrium::Kind::Survival) return linearize(model, eq);
    return std::nullopt;
}

inline Linearization washout_linearization(const Model& model) {
    const Model scalar_model = model.family() == ModelFamily::Chemostat2D
                                   ? Model::hyperbolic(model.params())
                                   : model;
    for (const Equilibrium& eq : equilibria(scalar_model))
        if (eq.kind == Equilibrium::Kind::Washout) return linearize(scalar_model, eq);
    throw std::logic_error("washout_linearization: washout state missing");
}

} // namespace chemolab
