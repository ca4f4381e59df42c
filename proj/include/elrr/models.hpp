#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "elrr/core.hpp"
#include "elrr/errors.hpp"
#include "elrr/expression.hpp"

namespace elrr {

namespace detail {

inline std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "(%.17g)", v);
    return buf;
}

// Wrap a parsed expression of s (plus its first two derivatives) and an
// expression of q into a HamiltonianSpec with fully analytic derivatives.
inline HamiltonianSpec spec_from_expressions(double A, double B, double C,
                                             const Expression& lambda_q,
                                             const Expression& f_integral_s,
                                             std::string id) {
    Expression F = f_integral_s.derivative(Var::s);
    Expression Fp = F.derivative(Var::s);
    Expression dLam = lambda_q.derivative(Var::q);
    HamiltonianSpec spec(
        A, B, C,
        [lambda_q](double q, double) {
            return lambda_q.eval(Var::q, q);
        },
        [f_integral_s](double s) { return f_integral_s.eval(Var::s, s); },
        std::move(id));
    spec.with_f([F](double s) { return F.eval(Var::s, s); })
        .with_f_prime([Fp](double s) { return Fp.eval(Var::s, s); })
        .with_dlambda_dq(
            [dLam](double q, double) { return dLam.eval(Var::q, q); });
    return spec;
}

}  // namespace detail

// --- Calogero three-body system -------------------------------------------

struct CalogeroParams {
    double sigma = 1.0;
    double g1 = 1.0;
    double g2 = 1.0;
    double g3 = 1.0;
    double g4 = 0.0;

    void validate() const {
        if (sigma <= 0.0) throw config_error("calogero: sigma must be > 0");
        if (g1 < 0.0 || g2 < 0.0 || g3 < 0.0 || g4 < 0.0)
            throw config_error("calogero: couplings must be nonnegative");
    }
};

// Center of mass and Jacobi coordinates of the collinear three-body problem.
struct JacobiPoint {
    double R, x, y;
};

inline JacobiPoint jacobi_transform(double x1, double x2, double x3) {
    return {(x1 + x2 + x3) / 3.0, (x1 - x2) / std::sqrt(2.0),
            (x1 + x2 - 2.0 * x3) / std::sqrt(6.0)};
}

inline std::array<double, 3> jacobi_inverse(const JacobiPoint& p) {
    double x3 = p.R - std::sqrt(6.0) * p.y / 3.0;
    double S = 3.0 * p.R - x3;
    double x1 = 0.5 * S + p.x / std::sqrt(2.0);
    double x2 = 0.5 * S - p.x / std::sqrt(2.0);
    return {x1, x2, x3};
}

// Reduced planar Hamiltonian of the Calogero system: A = C = 1, B = 0,
// Lambda(q) = sigma^2 q + 2 g4 / q, and the rational F-integral below.
// Singular rays: s = +-1/sqrt(3) and the x = 0 line.
inline HamiltonianSpec calogero_spec(const CalogeroParams& p) {
    p.validate();
    using detail::num;
    std::string fint = "(1+s^2)/2*(" + num(p.g1) + "+4*" + num(p.g2) +
                       "/(1-sqrt(3)*s)^2+4*" + num(p.g3) +
                       "/(1+sqrt(3)*s)^2)";
    std::string lam = num(p.sigma * p.sigma) + "*q";
    if (p.g4 != 0.0) lam += "+2*" + num(p.g4) + "/q";
    auto spec = detail::spec_from_expressions(1.0, 0.0, 1.0,
                                              parse_expression(lam),
                                              parse_expression(fint),
                                              "calogero");
    spec.with_s_lower(0.0);
    return spec;
}

// q(tau') of the sigma = 1 Calogero reduction, tau' = sqrt(2I) tau.
inline double calogero_q_closed(double H, double I, double c1, double tp) {
    if (I <= 0.0)
        throw no_real_orbit_error("calogero closed form needs I > 0");
    if (H * H < 2.0 * I)
        throw no_real_orbit_error("calogero closed form needs H^2 >= 2I");
    double R = std::sqrt(H * H - 2.0 * I);
    return 2.0 * I / (H - R * std::sin(2.0 * (tp + c1)));
}

// s(tau') for equal couplings g1 = g2 = g3 = g.  For g > 0 the inner
// arcsin argument stays strictly inside (-1, 1), so the principal branch is
// smooth; at the degenerate edge 2I = 9g the orbit collapses to s = 0.
inline double calogero_s_closed(double I, double g, double c2, double tp) {
    if (I <= 0.0 || 2.0 * I < 9.0 * g)
        throw no_real_orbit_error("calogero s closed form needs 2I >= 9g > 0");
    double k = std::sqrt(1.0 - 9.0 * g / (2.0 * I));
    double w = k * std::sin(3.0 * (tp + c2));
    w = std::clamp(w, -1.0, 1.0);
    return std::tan(std::asin(w) / 3.0);
}

// Fit the phase constants from an initial condition (value and sign of the
// tau'-derivative at tau' = 0).
inline double calogero_fit_c1(double H, double I, double q0, int dq_sign) {
    double R = std::sqrt(H * H - 2.0 * I);
    double w = (H - 2.0 * I / q0) / R;
    w = std::clamp(w, -1.0, 1.0);
    double a = std::asin(w);                  // candidate for 2 c1
    if (dq_sign < 0) a = 3.14159265358979323846 - a;
    return a / 2.0;
}

inline double calogero_fit_c2(double I, double g, double s0, int ds_sign) {
    double k = std::sqrt(1.0 - 9.0 * g / (2.0 * I));
    double w = std::sin(3.0 * std::atan(s0)) / k;
    w = std::clamp(w, -1.0, 1.0);
    double a = std::asin(w);                  // candidate for 3 c2
    if (ds_sign < 0) a = 3.14159265358979323846 - a;
    return a / 3.0;
}

// --- noncentral potential with dynamic symmetry -----------------------------

struct NoncentralParams {
    double sigma = 2.0;
    double g1 = 1.0;
    double g2 = 0.5;
    double g3 = 0.0;

    void validate() const {
        if (sigma <= 0.0) throw config_error("noncentral: sigma must be > 0");
        if (g1 <= 0.0 || g2 <= 0.0)
            throw config_error("noncentral: g1 and g2 must be > 0");
        if (g3 < 0.0) throw config_error("noncentral: g3 must be >= 0");
    }
};

// V = -sigma/r + (g1 + g2 cos(theta))/r^2 sin^2(theta) [+ g3/r^2] on the
// y > 0 half-plane, where s = tan(theta) and cos(theta) carries the sign of
// s.  A = C = 1, B = 0, Lambda(q) = -2 sigma/sqrt(q) + 2 g3/q.
inline HamiltonianSpec noncentral_spec(const NoncentralParams& p) {
    p.validate();
    using detail::num;
    std::string fint = num(p.g1) + "*(1+s^2)/s^2+" + num(p.g2) +
                       "*s*sqrt(1+s^2)/(s^2*abs(s))";
    std::string lam = "-2*" + num(p.sigma) + "/sqrt(q)";
    if (p.g3 != 0.0) lam += "+2*" + num(p.g3) + "/q";
    auto spec = detail::spec_from_expressions(1.0, 0.0, 1.0,
                                              parse_expression(lam),
                                              parse_expression(fint),
                                              "noncentral");
    spec.with_s_lower(1.0);
    return spec;
}

// r(tau') for the sigma = 2 normalization, tau' = sqrt(2I) tau.
inline double noncentral_r_closed(double H, double I, double c1, double tp) {
    if (I <= 0.0)
        throw no_real_orbit_error("noncentral closed form needs I > 0");
    if (1.0 + H * I < 0.0)
        throw no_real_orbit_error("noncentral closed form needs 1 + HI >= 0");
    double R = std::sqrt(1.0 + H * I);
    return I / (1.0 - R * std::sin(tp + c1));
}

inline double noncentral_costheta_closed(double I, double g1, double g2,
                                         double c2, double tp) {
    double rad = 1.0 + 4.0 * I * (I - g1) / (g2 * g2);
    if (rad < 0.0)
        throw no_real_orbit_error("noncentral angular radicand negative");
    double v = -g2 / (2.0 * I) *
               (1.0 - std::sqrt(rad) * std::sin(tp + c2));
    if (std::abs(v) > 1.0 + 1e-9)
        throw parameter_inconsistency_error(
            "noncentral closed form left |cos(theta)| <= 1");
    return std::clamp(v, -1.0, 1.0);
}

inline double noncentral_fit_c1(double H, double I, double r0, int dr_sign) {
    double R = std::sqrt(1.0 + H * I);
    double w = (1.0 - I / r0) / R;
    w = std::clamp(w, -1.0, 1.0);
    double a = std::asin(w);
    if (dr_sign < 0) a = 3.14159265358979323846 - a;
    return a;
}

inline double noncentral_fit_c2(double I, double g1, double g2, double ct0,
                                int dct_sign) {
    double R = std::sqrt(1.0 + 4.0 * I * (I - g1) / (g2 * g2));
    double w = (1.0 + 2.0 * I * ct0 / g2) / R;
    w = std::clamp(w, -1.0, 1.0);
    double a = std::asin(w);
    if (dct_sign < 0) a = 3.14159265358979323846 - a;
    return a;
}

// Angular exclusion band chi_minus <= cos(theta) <= chi_plus of bounded
// noncentral motion.  chi_plus < 1 always; a second excluded sector around
// theta = pi exists iff chi_minus > -1, i.e. 2I > g2 and g1 > g2.
struct ChiBounds {
    double chi_minus;
    double chi_plus;
    bool second_excluded_sector;
};

inline ChiBounds chi_bounds(double I, double g1, double g2) {
    if (I <= 0.0 || g2 <= 0.0)
        throw no_real_orbit_error("chi bounds need I > 0 and g2 > 0");
    double rad = 1.0 + 4.0 * I * (I - g1) / (g2 * g2);
    if (rad < 0.0)
        throw no_real_orbit_error("chi bounds radicand negative");
    double root = std::sqrt(rad);
    double lo = -g2 / (2.0 * I) * (1.0 + root);
    double hi = -g2 / (2.0 * I) * (1.0 - root);
    return {lo, hi, lo > -1.0};
}

// --- literature special cases ----------------------------------------------

// A = C = 1, B = 0, Lambda = omega^2(t) q.
inline HamiltonianSpec cervero_lejarreta_spec(const Expression& omega2_t,
                                              const Expression& f_integral_s) {
    Expression F = f_integral_s.derivative(Var::s);
    Expression Fp = F.derivative(Var::s);
    HamiltonianSpec spec(
        1.0, 0.0, 1.0,
        [omega2_t](double q, double t) {
            return omega2_t.eval(Var::t, t) * q;
        },
        [f_integral_s](double s) { return f_integral_s.eval(Var::s, s); },
        "cervero-lejarreta");
    spec.with_f([F](double s) { return F.eval(Var::s, s); })
        .with_f_prime([Fp](double s) { return Fp.eval(Var::s, s); })
        .with_dlambda_dq([omega2_t](double, double t) {
            return omega2_t.eval(Var::t, t);
        })
        .with_time_dependent_lambda(!omega2_t.is_constant());
    return spec;
}

// A = C = 0, B = 1, Lambda(q) = 2 int_0^{-q/2} w^2(q') dq' (Gauss-Legendre
// on the interval), so dLambda/dq = -w^2(-q/2).  rho = -1, xi(s) = -2s.
inline HamiltonianSpec goedert_spec(const Expression& w2_q,
                                    const Expression& f_integral_s) {
    Expression F = f_integral_s.derivative(Var::s);
    Expression Fp = F.derivative(Var::s);
    auto lambda = [w2_q](double q, double) {
        static const double gx[5] = {-0.906179845938663992797626878299,
                                     -0.538469310105683091036314420700, 0.0,
                                     0.538469310105683091036314420700,
                                     0.906179845938663992797626878299};
        static const double gw[5] = {0.236926885056189087514264040720,
                                     0.478628670499366468041291514836,
                                     0.568888888888888888888888888889,
                                     0.478628670499366468041291514836,
                                     0.236926885056189087514264040720};
        double a = 0.0, b = -0.5 * q;
        int panels = 32;
        double acc = 0.0, h = (b - a) / panels;
        for (int p = 0; p < panels; ++p) {
            double lo = a + p * h;
            for (int g = 0; g < 5; ++g) {
                double xg = lo + 0.5 * h * (1.0 + gx[g]);
                acc += 0.5 * h * gw[g] * w2_q.eval(Var::q, xg);
            }
        }
        return 2.0 * acc;
    };
    HamiltonianSpec spec(
        0.0, 1.0, 0.0, lambda,
        [f_integral_s](double s) { return f_integral_s.eval(Var::s, s); },
        "goedert");
    spec.with_f([F](double s) { return F.eval(Var::s, s); })
        .with_f_prime([Fp](double s) { return Fp.eval(Var::s, s); })
        .with_dlambda_dq([w2_q](double q, double) {
            return -w2_q.eval(Var::q, -0.5 * q);
        });
    return spec;
}

}  // namespace elrr
