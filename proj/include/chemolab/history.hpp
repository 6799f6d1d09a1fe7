#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "state.hpp"

namespace chemolab {

// One dense-output segment: a two-point Hermite quintic described by value
// and derivative at the endpoints plus an interior node. Polynomials of
// degree <= 5 are reproduced exactly, so constant / linear / cubic initial
// data incur no representation error.
struct Segment {
    double t0 = 0.0, tm = 0.0, t1 = 0.0;
    std::array<double, 2> y0{}, f0{};
    std::array<double, 2> ym{}, fm{};
    std::array<double, 2> y1{}, f1{};
};

namespace detail {

// Newton divided differences over the confluent node set {0,0,1/2,1/2,1,1}
// in the segment-local coordinate sigma = (t - t0)/(t1 - t0). Working in
// local coordinates keeps the node positions exact: at large absolute times
// the rounding of t0 + h/2 would otherwise inject a relative time jitter of
// ulp(t)/h into the derivative reconstruction.
inline void hermite5_eval(const Segment& s, std::size_t comp, double t,
                          double& value, double& deriv) {
    const double span = s.t1 - s.t0;
    const double sigma = (t - s.t0) / span;
    static constexpr double z[6] = {0.0, 0.0, 0.5, 0.5, 1.0, 1.0};
    const double y0 = s.y0[comp], ym = s.ym[comp], y1 = s.y1[comp];
    double col[5];
    col[0] = s.f0[comp] * span;
    col[1] = (ym - y0) * 2.0;
    col[2] = s.fm[comp] * span;
    col[3] = (y1 - ym) * 2.0;
    col[4] = s.f1[comp] * span;
    double c[6];
    c[0] = y0;
    c[1] = col[0];
    for (int order = 2; order <= 5; ++order) {
        for (int i = 0; i + order <= 5; ++i)
            col[i] = (col[i + 1] - col[i]) / (z[i + order] - z[i]);
        c[order] = col[0];
    }
    double p = c[5], dp = 0.0;
    for (int k = 4; k >= 0; --k) {
        dp = dp * (sigma - z[k]) + p;
        p = p * (sigma - z[k]) + c[k];
    }
    value = p;
    deriv = dp / span;
}

} // namespace detail

// Dense, continuously evaluable record of state over a time window.
// Holds either the initial condition over [-r, 0] or a full solution; the
// window endpoints are hard limits and queries outside them throw.
class History {
public:
    History() = default;

    History(std::size_t dim, std::vector<Segment> segments)
        : dim_(dim), segments_(std::move(segments)) {
        if (dim_ < 1 || dim_ > 2) throw std::invalid_argument("History: dim must be 1 or 2");
        if (segments_.empty()) throw std::invalid_argument("History: no segments");
        for (std::size_t i = 0; i < segments_.size(); ++i) {
            const Segment& s = segments_[i];
            if (!(s.t1 >= s.t0)) throw std::invalid_argument("History: segment times not ordered");
            if (i > 0) {
                const Segment& p = segments_[i - 1];
                if (s.t0 != p.t1)
                    throw std::invalid_argument("History: segments not contiguous");
                for (std::size_t c = 0; c < dim_; ++c) {
                    const double scale = std::max({1.0, std::abs(p.y1[c]), std::abs(s.y0[c])});
                    if (std::abs(p.y1[c] - s.y0[c]) > 1e-9 * scale)
                        throw std::invalid_argument("History: value discontinuity at segment join");
                }
            }
        }
    }

    // phi(t) == v on [-delay, 0]. delay == 0 yields a single-point record.
    static History constant(const StateVec& v, double delay) {
        if (delay < 0) throw std::invalid_argument("History: negative delay");
        Segment s;
        s.t0 = -delay;
        s.tm = -delay / 2;
        s.t1 = 0.0;
        for (std::size_t c = 0; c < v.size(); ++c) {
            s.y0[c] = s.ym[c] = s.y1[c] = v[c];
            s.f0[c] = s.fm[c] = s.f1[c] = 0.0;
        }
        return History(v.size(), {s});
    }

    // Scalar polynomial phi(t) = sum coeffs[k] * t^k over [-delay, 0].
    // Degree <= 5 is represented exactly.
    static History polynomial(std::span<const double> coeffs, double delay) {
        std::vector<std::span<const double>> per_comp{coeffs};
        return polynomial_multi(per_comp, delay);
    }

    static History polynomial2(std::span<const double> coeffs_first,
                               std::span<const double> coeffs_second, double delay) {
        std::vector<std::span<const double>> per_comp{coeffs_first, coeffs_second};
        return polynomial_multi(per_comp, delay);
    }

    // Scalar piecewise-linear interpolant through (times[i], values[i]);
    // times must be increasing. Used heavily by the random property suites
    // because linear pieces are exact in this representation and the range
    // of the history equals the range of the knot values.
    static History piecewise_linear(std::span<const double> times,
                                    std::span<const double> values) {
        if (times.size() != values.size() || times.size() < 2)
            throw std::invalid_argument("History: need matching knot arrays, >= 2 knots");
        std::vector<Segment> segs;
        segs.reserve(times.size() - 1);
        for (std::size_t i = 0; i + 1 < times.size(); ++i) {
            const double h = times[i + 1] - times[i];
            if (!(h > 0)) throw std::invalid_argument("History: knot times must increase");
            const double slope = (values[i + 1] - values[i]) / h;
            Segment s;
            s.t0 = times[i];
            s.tm = times[i] + h / 2;
            s.t1 = times[i + 1];
            s.y0[0] = values[i];
            s.ym[0] = values[i] + slope * (h / 2);
            s.y1[0] = values[i + 1];
            s.f0[0] = s.fm[0] = s.f1[0] = slope;
            segs.push_back(s);
        }
        return History(1, std::move(segs));
    }

    std::size_t dim() const noexcept { return dim_; }
    double t_begin() const noexcept { return segments_.front().t0; }
    double t_end() const noexcept { return segments_.back().t1; }

    StateVec value(double t) const {
        StateVec out = StateVec::zero(dim_);
        const Segment& s = locate(t);
        if (s.t1 == s.t0) { // single-point record (delay == 0)
            for (std::size_t c = 0; c < dim_; ++c) out[c] = s.y0[c];
            return out;
        }
        // bit-identical at nodes
        if (t == s.t0) { for (std::size_t c = 0; c < dim_; ++c) out[c] = s.y0[c]; return out; }
        if (t == s.tm) { for (std::size_t c = 0; c < dim_; ++c) out[c] = s.ym[c]; return out; }
        if (t == s.t1) { for (std::size_t c = 0; c < dim_; ++c) out[c] = s.y1[c]; return out; }
        for (std::size_t c = 0; c < dim_; ++c) {
            double v, dv;
            detail::hermite5_eval(s, c, t, v, dv);
            out[c] = v;
        }
        return out;
    }

    void value_and_derivative(double t, StateVec& value_out, StateVec& deriv_out) const {
        value_out = StateVec::zero(dim_);
        deriv_out = StateVec::zero(dim_);
        const Segment& s = locate(t);
        if (s.t1 == s.t0) {
            for (std::size_t c = 0; c < dim_; ++c) {
                value_out[c] = s.y0[c];
                deriv_out[c] = s.f0[c];
            }
            return;
        }
        for (std::size_t c = 0; c < dim_; ++c) {
            double v, dv;
            detail::hermite5_eval(s, c, t, v, dv);
            value_out[c] = v;
            deriv_out[c] = dv;
        }
    }

    // Affine change of variables: new time = time_scale * t, new value =
    // scale * y + offset. Exact on this representation. Scalar only.
    History map_affine(double scale, double offset, double time_scale) const {
        if (dim_ != 1) throw std::invalid_argument("History::map_affine: scalar only");
        if (!(time_scale > 0)) throw std::invalid_argument("History::map_affine: time_scale must be > 0");
        std::vector<Segment> segs = segments_;
        for (Segment& s : segs) {
            s.t0 *= time_scale;
            s.tm *= time_scale;
            s.t1 *= time_scale;
            for (auto* y : {&s.y0, &s.ym, &s.y1}) (*y)[0] = scale * (*y)[0] + offset;
            for (auto* f : {&s.f0, &s.fm, &s.f1}) (*f)[0] = scale * (*f)[0] / time_scale;
        }
        return History(1, std::move(segs));
    }

    const std::vector<Segment>& segments() const noexcept { return segments_; }

private:
    static History polynomial_multi(const std::vector<std::span<const double>>& per_comp,
                                    double delay) {
        if (delay < 0) throw std::invalid_argument("History: negative delay");
        for (const auto& coeffs : per_comp)
            if (coeffs.size() > 6)
                throw std::invalid_argument("History: polynomial degree above 5 is not representable");
        Segment s;
        s.t0 = -delay;
        s.tm = -delay / 2;
        s.t1 = 0.0;
        for (std::size_t c = 0; c < per_comp.size(); ++c) {
            const auto& coeffs = per_comp[c];
            auto eval = [&coeffs](double t, double& v, double& dv) {
                v = 0.0;
                dv = 0.0;
                for (std::size_t k = coeffs.size(); k-- > 0;) {
                    dv = dv * t + v;
                    v = v * t + coeffs[k];
                }
            };
            eval(s.t0, s.y0[c], s.f0[c]);
            eval(s.tm, s.ym[c], s.fm[c]);
            eval(s.t1, s.y1[c], s.f1[c]);
        }
        return History(per_comp.size(), {s});
    }

    const Segment& locate(double t) const {
        const double lo = t_begin();
        const double hi = t_end();
        const double snap = 1e-12 * std::max({1.0, std::abs(lo), std::abs(hi)});
        if (t < lo - snap || t > hi + snap)
            throw std::out_of_range("History: query time outside the recorded window");
        t = std::clamp(t, lo, hi);
        // first segment whose right endpoint covers t
        auto it = std::lower_bound(segments_.begin(), segments_.end(), t,
                                   [](const Segment& s, double tq) { return s.t1 < tq; });
        if (it == segments_.end()) --it;
        return *it;
    }

    std::size_t dim_ = 1;
    std::vector<Segment> segments_;
};

} // namespace chemolab
