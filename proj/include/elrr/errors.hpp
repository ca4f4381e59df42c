#pragma once

#include <stdexcept>
#include <string>

namespace elrr {

// Base class for everything thrown by this library.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed configuration, expressions that fail to parse, unknown catalog
// names.  CLI exit code 2.
struct config_error : error {
    using error::error;
};

// A quantity was requested outside its mathematical domain.  CLI exit code 3.
struct domain_error : error {
    using error::error;
};

// x = 0, y = 0 or q = 0 where the formulas divide by them.
struct singular_point_error : domain_error {
    using domain_error::domain_error;
};

// xi(s) = 0 along the queried direction.
struct singular_direction_error : domain_error {
    using domain_error::domain_error;
};

// The (q,s) chart needs x != 0.
struct chart_error : domain_error {
    using domain_error::domain_error;
};

// Cartesian reconstruction needs q/xi(s) > 0.
struct reconstruction_domain_error : domain_error {
    using domain_error::domain_error;
};

// The time rescaling dtau = dt/q needs q of one strict sign.
struct rescaling_domain_error : domain_error {
    using domain_error::domain_error;
};

// Separable RHS negative at the requested starting point.
struct forbidden_region_error : domain_error {
    using domain_error::domain_error;
};

// Closed-form parameters admit no real orbit.
struct no_real_orbit_error : domain_error {
    using domain_error::domain_error;
};

// Closed-form result escaped its admissible range (e.g. |cos(theta)| > 1).
struct parameter_inconsistency_error : domain_error {
    using domain_error::domain_error;
};

// Quadrature pipeline invoked on a time-dependent Lambda.
struct not_integrable_error : domain_error {
    using domain_error::domain_error;
};

// Step budget exhausted before reaching t_end.
struct budget_error : error {
    using error::error;
};

// Step size underflow, usually approaching a potential singularity.
struct singularity_approach_error : error {
    using error::error;
};

// Expected root of a separable RHS could not be bracketed.
struct numerical_root_error : error {
    using error::error;
};

}  // namespace elrr
