// errors.hpp — exception types shared across the flowline library.
#pragma once

#include <stdexcept>
#include <string>

namespace flowline {

// The iterate left the admissible neighbourhood: a bracket that must stay
// away from zero collapsed somewhere on the grid.
struct degeneracy_error : std::runtime_error {
    explicit degeneracy_error(const std::string& what) : std::runtime_error(what) {}
};

// The mapped boundary curve does not wind once around the origin, so the
// polar coordinate change is not defined at this iterate.
struct winding_error : std::runtime_error {
    explicit winding_error(const std::string& what) : std::runtime_error(what) {}
};

// Interior data whose leading term carries |k| = 2 Fourier modes beyond
// tolerance; such data is outside the range of the linearization.
struct cokernel_violation_error : std::runtime_error {
    explicit cokernel_violation_error(const std::string& what) : std::runtime_error(what) {}
};

// Fourier coefficients show no measurable exponential decay, so an
// analyticity width cannot be estimated.
struct undefined_width_error : std::runtime_error {
    explicit undefined_width_error(const std::string& what) : std::runtime_error(what) {}
};

// Input file or configuration failed validation.  `where` carries the
// field path for the CLI to report.
struct validation_error : std::runtime_error {
    std::string where;
    validation_error(const std::string& where_, const std::string& what)
        : std::runtime_error(where_ + ": " + what), where(where_) {}
};

// compatibilize could not bracket the R = 1 root inside the scan interval.
struct incompatibility_range_error : std::runtime_error {
    explicit incompatibility_range_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace flowline
