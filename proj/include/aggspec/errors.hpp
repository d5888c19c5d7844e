#pragma once

#include <stdexcept>
#include <string>

namespace aggspec {

// Base class for all library errors.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct invalid_geometry_error : error {
    using error::error;
};
struct invalid_dipole_error : error {
    using error::error;
};
struct invalid_angle_error : error {
    using error::error;
};
struct invalid_flattening_error : error {
    using error::error;
};
struct singular_geometry_error : error {
    using error::error;
};
struct unsupported_parity_error : error {
    using error::error;
};
struct solver_failure_error : error {
    using error::error;
};
struct invalid_broadening_error : error {
    using error::error;
};
struct grid_too_narrow_error : error {
    using error::error;
};
struct support_boundary_error : error {
    using error::error;
};
struct zero_reference_error : error {
    using error::error;
};
struct io_error : error {
    using error::error;
};

// Configuration-document errors carry the offending line (0 = whole document).
struct parse_error : error {
    int line;
    parse_error(int line_, const std::string& what_)
        : error("line " + std::to_string(line_) + ": " + what_), line(line_) {}
};

struct validation_error : error {
    using error::error;
};

} // namespace aggspec
