#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

#include "state.hpp"

namespace chemolab {

// Dimensional chemostat parameters: vessel concentration scale C, dilution
// rate D, search rate A, handling-time composite B, conversion factor M,
// material delay R.
struct DimensionalParams {
    double C = 1.0;
    double D = 1.0;
    double A = 1.0;
    double B = 1.0;
    double M = 1.0;
    double R = 0.0;

    void validate() const {
        if (!(C > 0 && D > 0 && A > 0 && B > 0 && M > 0))
            throw std::invalid_argument("DimensionalParams: C, D, A, B, M must be positive");
        if (!(R >= 0)) throw std::invalid_argument("DimensionalParams: R must be >= 0");
    }
};

struct DimensionlessParams {
    double a = 1.0;
    double b = 0.0;
    double m = 1.0;
    double r = 0.0;

    void validate() const {
        if (!(a > 0 && m > 0))
            throw std::invalid_argument("DimensionlessParams: a and m must be positive");
        if (!(b >= 0)) throw std::invalid_argument("DimensionlessParams: b must be >= 0");
        if (!(r >= 0)) throw std::invalid_argument("DimensionlessParams: r must be >= 0");
    }
};

// t = D T, r = D R, s = S/C, x = X/C, a = A C / D, b = A B C, m = M.
inline DimensionlessParams nondimensionalize(const DimensionalParams& p) {
    p.validate();
    DimensionlessParams q;
    q.a = p.A * p.C / p.D;
    q.b = p.A * p.B * p.C;
    q.m = p.M;
    q.r = p.D * p.R;
    return q;
}

// Saturating uptake rate f(s) = a s / (1 + b s). Strictly increasing for
// s > -1/b, f(0) = 0, and negative on (-1/b, 0) -- the boundedness argument
// for the hyperbolic model uses that sign.
inline double holling_response(double s, double a, double b) {
    const double denom = 1.0 + b * s;
    if (denom == 0.0)
        throw std::domain_error("holling_response: pole at s = -1/b");
    return a * s / denom;
}

inline double holling_response_deriv(double s, double a, double b) {
    const double denom = 1.0 + b * s;
    if (denom == 0.0)
        throw std::domain_error("holling_response_deriv: pole at s = -1/b");
    return a / (denom * denom);
}

enum class ModelFamily {
    Chemostat2D,  // substrate + organism, delayed conversion
    Hyperbolic,   // scalar reduction on the invariant hyperplane
    ChemoLogistic, // b = 0 limit of the hyperbolic model
    Hutchinson,   // delayed-logistic with delay in the density term only
    Wright,       // xi'(tau) = -xi(tau - rho) (1 + xi(tau))
    Linear,       // xi'(t) = a xi(t) + b xi(t - r); test and comparison model
};

inline const char* family_name(ModelFamily f) {
    switch (f) {
        case ModelFamily::Chemostat2D: return "chemostat2d";
        case ModelFamily::Hyperbolic: return "hyperbolic";
        case ModelFamily::ChemoLogistic: return "chemologistic";
        case ModelFamily::Hutchinson: return "hutchinson";
        case ModelFamily::Wright: return "wright";
        case ModelFamily::Linear: return "linear";
    }
    return "?";
}

// One concrete right-hand side plus its parameters. Values are immutable
// once built; use the factories.
class Model {
public:
    static Model chemostat(const DimensionlessParams& p) {
        p.validate();
        return Model(ModelFamily::Chemostat2D, p, 0.0, 0.0, 0.0);
    }

    static Model hyperbolic(const DimensionlessParams& p) {
        p.validate();
        return Model(ModelFamily::Hyperbolic, p, 0.0, 0.0, 0.0);
    }

    static Model chemo_logistic(double a, double m, double r) {
        DimensionlessParams p{a, 0.0, m, r};
        p.validate();
        return Model(ModelFamily::ChemoLogistic, p, 0.0, 0.0, 0.0);
    }

    static Model hutchinson(double a, double m, double r) {
        DimensionlessParams p{a, 0.0, m, r};
        p.validate();
        return Model(ModelFamily::Hutchinson, p, 0.0, 0.0, 0.0);
    }

    static Model wright(double rho) {
        if (!(rho >= 0)) throw std::invalid_argument("Model::wright: rho must be >= 0");
        DimensionlessParams p{1.0, 0.0, 1.0, rho};
        return Model(ModelFamily::Wright, p, rho, 0.0, 0.0);
    }

    static Model linear(double a_lin, double b_lin, double r) {
        if (!(std::isfinite(a_lin) && std::isfinite(b_lin)))
            throw std::invalid_argument("Model::linear: coefficients must be finite");
        if (!(r >= 0)) throw std::invalid_argument("Model::linear: r must be >= 0");
        DimensionlessParams p{1.0, 0.0, 1.0, r};
        return Model(ModelFamily::Linear, p, 0.0, a_lin, b_lin);
    }

    ModelFamily family() const noexcept { return family_; }
    const DimensionlessParams& params() const noexcept { return params_; }
    double rho() const noexcept { return rho_; }
    double lin_a() const noexcept { return lin_a_; }
    double lin_b() const noexcept { return lin_b_; }

    std::size_t dim() const noexcept {
        return family_ == ModelFamily::Chemostat2D ? 2 : 1;
    }

    double delay() const noexcept {
        return family_ == ModelFamily::Wright ? rho_ : params_.r;
    }

    // me^{-r}: upper bound of the invariant interval of the hyperbolic and
    // chemo-logistic families.
    double me_minus_r() const noexcept {
        return params_.m * std::exp(-params_.r);
    }

private:
    Model(ModelFamily f, const DimensionlessParams& p, double rho, double la, double lb)
        : family_(f), params_(p), rho_(rho), lin_a_(la), lin_b_(lb) {}

    ModelFamily family_;
    DimensionlessParams params_;
    double rho_;
    double lin_a_, lin_b_;
};

// Right-hand side F(current, delayed) of the chosen family.
inline StateVec rhs(const Model& model, const StateVec& current, const StateVec& delayed) {
    if (current.size() != model.dim() || delayed.size() != model.dim())
        throw std::invalid_argument("rhs: state dimension does not match the model");
    const DimensionlessParams& p = model.params();
    switch (model.family()) {
        case ModelFamily::Chemostat2D: {
            const double s = current[0], x = current[1];
            const double sd = delayed[0], xd = delayed[1];
            const double uptake_now = holling_response(s, p.a, p.b);
            const double uptake_then = holling_response(sd, p.a, p.b);
            return StateVec::planar(1.0 - s - uptake_now * x,
                                    model.me_minus_r() * uptake_then * xd - x);
        }
        case ModelFamily::Hyperbolic: {
            const double cap = model.me_minus_r();
            const double x = current[0], xd = delayed[0];
            const double s_implied = (cap - x) / cap;
            return StateVec::scalar(cap * holling_response(s_implied, p.a, p.b) * xd - x);
        }
        case ModelFamily::ChemoLogistic: {
            const double x = current[0], xd = delayed[0];
            return StateVec::scalar(p.a * model.me_minus_r() * xd - x - p.a * x * xd);
        }
        case ModelFamily::Hutchinson: {
            // rearranged form am x - x - a x x_d; defined for every am
            const double x = current[0], xd = delayed[0];
            return StateVec::scalar(p.a * p.m * x - x - p.a * x * xd);
        }
        case ModelFamily::Wright: {
            const double xi = current[0], xid = delayed[0];
            return StateVec::scalar(-xid * (1.0 + xi));
        }
        case ModelFamily::Linear: {
            return StateVec::scalar(model.lin_a() * current[0] + model.lin_b() * delayed[0]);
        }
    }
    throw std::logic_error("rhs: unknown family");
}

// Product form (am-1) x (1 - x_d / K) with K = (am-1)/a; requires am != 1.
// Kept alongside the rearranged form so their pointwise agreement can be
// checked.
inline double hutchinson_product_form(const DimensionlessParams& p, double x, double x_delayed) {
    const double growth = p.a * p.m - 1.0;
    if (growth == 0.0)
        throw std::invalid_argument("hutchinson_product_form: am = 1 has no carrying capacity");
    const double capacity = growth / p.a;
    return growth * x * (1.0 - x_delayed / capacity);
}

// The chemostat restricted to its invariant hyperplane: same parameter set,
// scalar hyperbolic right-hand side.
inline Model reduce_to_hyperbolic(const DimensionlessParams& p) {
    return Model::hyperbolic(p);
}

// Change of variables taking the Hutchinson model to Wright's equation:
// tau = (am-1) t, rho = (am-1) r, xi = x / K - 1 with K = (am-1)/a.
struct WrightCoordinates {
    double time_scale;        // am - 1
    double rho;               // (am - 1) r
    double carrying_capacity; // (am - 1)/a

    double to_xi(double x) const { return x / carrying_capacity - 1.0; }
    double to_x(double xi) const { return (xi + 1.0) * carrying_capacity; }
    double to_tau(double t) const { return time_scale * t; }
};

inline WrightCoordinates to_wright(const DimensionlessParams& p) {
    p.validate();
    const double growth = p.a * p.m - 1.0;
    if (!(growth > 0))
        throw std::invalid_argument("to_wright: am <= 1, no positive survival state");
    return WrightCoordinates{growth, growth * p.r, growth / p.a};
}

} // namespace chemolab
