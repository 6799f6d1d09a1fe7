#pragma once

#include <charconv>
#include <cmath>
#include <complex>
#include <string>

namespace chemolab {

// Shortest decimal representation that round-trips to the same double.
// Used for every number we emit (CSV, reports) so output is byte-stable.
inline std::string fmt_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string fmt_complex(std::complex<double> z) {
    std::string out = fmt_double(z.real());
    if (z.imag() >= 0 || std::isnan(z.imag()))
        out += "+" + fmt_double(z.imag()) + "i";
    else
        out += "-" + fmt_double(-z.imag()) + "i";
    return out;
}

inline bool nearly_equal(double a, double b, double tol) {
    return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

} // namespace chemolab
