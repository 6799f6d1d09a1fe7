#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>

namespace chemolab {

// State vector for the systems handled here: scalar or planar.
class StateVec {
public:
    StateVec() : n_(1), v_{0.0, 0.0} {}

    static StateVec scalar(double x) {
        StateVec s;
        s.n_ = 1;
        s.v_[0] = x;
        return s;
    }

    static StateVec planar(double first, double second) {
        StateVec s;
        s.n_ = 2;
        s.v_[0] = first;
        s.v_[1] = second;
        return s;
    }

    static StateVec zero(std::size_t dim) {
        if (dim < 1 || dim > 2) throw std::invalid_argument("StateVec: dim must be 1 or 2");
        StateVec s;
        s.n_ = dim;
        return s;
    }

    std::size_t size() const noexcept { return n_; }

    double operator[](std::size_t i) const { return v_[i]; }
    double& operator[](std::size_t i) { return v_[i]; }

    bool finite() const {
        for (std::size_t i = 0; i < n_; ++i)
            if (!std::isfinite(v_[i])) return false;
        return true;
    }

private:
    std::size_t n_;
    std::array<double, 2> v_;
};

} // namespace chemolab
