#pragma once

#include <stdexcept>
#include <string>

namespace chemolab {

// Thrown when an integration produces a nonfinite state. Carries the last
// time at which the solution was still finite.
class divergence_error : public std::runtime_error {
public:
    divergence_error(const std::string& what, double last_valid_t)
        : std::runtime_error(what), last_valid_t_(last_valid_t) {}

    double last_valid_t() const noexcept { return last_valid_t_; }

private:
    double last_valid_t_;
};

// Thrown when a characteristic-root search fails to converge or cannot be
// certified. The message carries the diagnostics.
class root_search_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace chemolab
