#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "elrr/errors.hpp"

namespace elrr {

using Fn1 = std::function<double(double)>;                  // f(s)
using Fn2 = std::function<double(double, double)>;          // Lambda(q,t)
using Fn3 = std::function<double(double, double, double)>;  // omega2(x,y,t)

// Central difference step scaled to the coordinate magnitude.
inline double fd_step(double at) {
    return 1e-6 * std::max(1.0, std::abs(at));
}

inline double central_diff(const Fn1& f, double at) {
    double h = fd_step(at);
    return (f(at + h) - f(at - h)) / (2.0 * h);
}

// The generic two-component system: x'' + w^2 x = f(y/x)/(y x^2),
// y'' + w^2 y = g(x/y)/(x y^2).
struct GenericElrrSystem {
    Fn1 f;
    Fn1 g;
    Fn3 omega2;
};

// Reduced form with g merged away: x'' + W^2 x = F(y/x)/(y x^2), y'' + W^2 y = 0.
// F_integral is an antiderivative of F; its lower limit s_lower is a
// convention that shifts the invariant by a constant only.
struct ElrrSystem {
    Fn1 F;
    Fn1 F_integral;
    Fn3 Omega2;
    double s_lower = 1.0;
};

struct PhaseState {
    double t = 0.0;
    double x = 0.0;
    double y = 0.0;
    double px = 0.0;
    double py = 0.0;
};

// Quadratic-kinetic Hamiltonian
//   H = A/2 px^2 + B px py + C/2 py^2 + 1/2 Lambda(q,t) + Fint(y/x)/q,
// q = A y^2 - 2 B x y + C x^2.  Optional analytic derivatives sharpen the
// gradient; central differences are the fallback.
class HamiltonianSpec {
public:
    HamiltonianSpec(double A, double B, double C, Fn2 lambda, Fn1 f_integral,
                    std::string id = "")
        : A_(A), B_(B), C_(C), lambda_(std::move(lambda)),
          f_integral_(std::move(f_integral)), id_(std::move(id)) {
        if (A * C - B * B == 0.0)
            throw config_error("kinetic discriminant rho = AC - B^2 must be nonzero");
    }

    double A() const { return A_; }
    double B() const { return B_; }
    double C() const { return C_; }
    const std::string& id() const { return id_; }

    double lambda(double q, double t) const { return lambda_(q, t); }
    double f_integral(double s) const { return f_integral_(s); }

    double f_forcing(double s) const {
        if (f_) return f_(s);
        return central_diff(f_integral_, s);
    }

    bool has_analytic_f_prime() const { return static_cast<bool>(f_prime_); }
    double f_prime(double s) const {
        if (f_prime_) return f_prime_(s);
        if (f_) return central_diff(f_, s);
        // second derivative of the antiderivative
        double h = 1e-4 * std::max(1.0, std::abs(s));
        return (f_integral_(s + h) - 2.0 * f_integral_(s) +
                f_integral_(s - h)) /
               (h * h);
    }

    double dlambda_dq(double q, double t) const {
        if (dlambda_dq_) return dlambda_dq_(q, t);
        double h = fd_step(q);
        return (lambda_(q + h, t) - lambda_(q - h, t)) / (2.0 * h);
    }

    bool lambda_time_dependent() const { return lambda_time_dependent_; }
    bool has_analytic_derivatives() const {
        return static_cast<bool>(f_) && static_cast<bool>(dlambda_dq_);
    }
    double s_lower() const { return s_lower_; }

    HamiltonianSpec& with_f(Fn1 f) {
        f_ = std::move(f);
        return *this;
    }
    HamiltonianSpec& with_f_prime(Fn1 fp) {
        f_prime_ = std::move(fp);
        return *this;
    }
    HamiltonianSpec& with_dlambda_dq(Fn2 d) {
        dlambda_dq_ = std::move(d);
        return *this;
    }
    HamiltonianSpec& with_time_dependent_lambda(bool yes) {
        lambda_time_dependent_ = yes;
        return *this;
    }
    HamiltonianSpec& with_s_lower(double s0) {
        s_lower_ = s0;
        return *this;
    }
    HamiltonianSpec& with_id(std::string id) {
        id_ = std::move(id);
        return *this;
    }

    // Raw function handles, for building derived specs.
    const Fn2& raw_lambda() const { return lambda_; }
    const Fn2& raw_dlambda_dq() const { return dlambda_dq_; }
    const Fn1& raw_f_integral() const { return f_integral_; }
    const Fn1& raw_f() const { return f_; }
    const Fn1& raw_f_prime() const { return f_prime_; }

private:
    double A_, B_, C_;
    Fn2 lambda_;
    Fn1 f_integral_;
    Fn1 f_;                // dF_integral/ds, optional analytic
    Fn1 f_prime_;          // dF/ds, optional analytic
    Fn2 dlambda_dq_;       // dLambda/dq, optional analytic
    bool lambda_time_dependent_ = false;
    double s_lower_ = 1.0;
    std::string id_;
};

inline double rho(const HamiltonianSpec& spec) {
    return spec.A() * spec.C() - spec.B() * spec.B();
}

inline double xi(const HamiltonianSpec& spec, double s) {
    return (spec.A() * s - 2.0 * spec.B()) * s + spec.C();
}

inline double q_of(const HamiltonianSpec& spec, double x, double y) {
    return spec.A() * y * y - 2.0 * spec.B() * x * y + spec.C() * x * x;
}

// --- reduction (omega, f, g) -> (Omega, F) -------------------------------

inline ElrrSystem reduce_system(const GenericElrrSystem& gsys,
                                double s_lower = 1.0) {
    Fn1 f = gsys.f;
    Fn1 g = gsys.g;
    Fn3 w2 = gsys.omega2;
    Fn1 F = [f, g](double s) {
        if (s == 0.0) throw singular_point_error("F(s) undefined at s = 0");
        return f(s) - g(1.0 / s) / (s * s);
    };
    // Adaptive Simpson antiderivative of F from s_lower; closed forms can be
    // registered by building the ElrrSystem directly.
    Fn1 Fint = [F, s_lower](double s) {
        if (s == s_lower) return 0.0;
        int n = 64;
        double prev = 0.0, cur = 0.0;
        for (int round = 0; round < 12; ++round, n *= 2) {
            double h = (s - s_lower) / n;
            double acc = F(s_lower) + F(s);
            for (int i = 1; i < n; ++i)
                acc += (i % 2 ? 4.0 : 2.0) * F(s_lower + i * h);
            cur = acc * h / 3.0;
            if (round > 0 && std::abs(cur - prev) <=
                                 1e-12 * std::max(1.0, std::abs(cur)))
                break;
            prev = cur;
        }
        return cur;
    };
    Fn3 Omega2 = [w2, g](double x, double y, double t) {
        if (y == 0.0)
            throw singular_point_error("Omega^2 undefined at y = 0");
        if (x == 0.0)
            throw singular_point_error("Omega^2 undefined at x = 0");
        return w2(x, y, t) - g(x / y) / (x * y * y * y);
    };
    return ElrrSystem{std::move(F), std::move(Fint), std::move(Omega2),
                      s_lower};
}

// --- potential and its gradient ------------------------------------------

inline double potential(const HamiltonianSpec& spec, double x, double y,
                        double t) {
    if (x == 0.0)
        throw singular_point_error("potential undefined at x = 0 (s = y/x)");
    double q = q_of(spec, x, y);
    if (q == 0.0) throw singular_point_error("potential undefined at q = 0");
    double s = y / x;
    return 0.5 * spec.lambda(q, t) + spec.f_integral(s) / q;
}

// dV/dx, dV/dy by the chain rule through (q, s).
inline std::pair<double, double> potential_gradient(const HamiltonianSpec& spec,
                                                    double x, double y,
                                                    double t) {
    if (x == 0.0)
        throw singular_point_error("potential gradient undefined at x = 0");
    double q = q_of(spec, x, y);
    if (q == 0.0)
        throw singular_point_error("potential gradient undefined at q = 0");
    double s = y / x;
    double dV_dq = 0.5 * spec.dlambda_dq(q, t) - spec.f_integral(s) / (q * q);
    double dV_ds = spec.f_forcing(s) / q;
    double qx = -2.0 * spec.B() * y + 2.0 * spec.C() * x;
    double qy = 2.0 * spec.A() * y - 2.0 * spec.B() * x;
    double sx = -y / (x * x);
    double sy = 1.0 / x;
    return {dV_dq * qx + dV_ds * sx, dV_dq * qy + dV_ds * sy};
}

inline double admissible_frequency(const HamiltonianSpec& spec, double x,
                                   double y, double t) {
    if (y == 0.0)
        throw singular_point_error("admissible frequency undefined at y = 0");
    auto [vx, vy] = potential_gradient(spec, x, y, t);
    return (spec.B() * vx + spec.C() * vy) / y;
}

struct CanonicalRhs {
    double dx, dy, dpx, dpy;
};

inline CanonicalRhs canonical_rhs(const HamiltonianSpec& spec,
                                  const PhaseState& st) {
    auto [vx, vy] = potential_gradient(spec, st.x, st.y, st.t);
    return {spec.A() * st.px + spec.B() * st.py,
            spec.B() * st.px + spec.C() * st.py, -vx, -vy};
}

// Velocities from momenta through the kinetic matrix [[A,B],[B,C]].
inline std::pair<double, double> velocities(const HamiltonianSpec& spec,
                                            const PhaseState& st) {
    return {spec.A() * st.px + spec.B() * st.py,
            spec.B() * st.px + spec.C() * st.py};
}

inline double hamiltonian(const HamiltonianSpec& spec, const PhaseState& st) {
    double T = 0.5 * spec.A() * st.px * st.px + spec.B() * st.px * st.py +
               0.5 * spec.C() * st.py * st.py;
    return T + potential(spec, st.x, st.y, st.t);
}

// --- the Lewis-Ray-Reid invariant ----------------------------------------

inline double lrri(const Fn1& f_integral, double x, double y, double vx,
                   double vy) {
    if (x == 0.0) throw singular_point_error("LRRI undefined at x = 0");
    double L = x * vy - y * vx;
    return 0.5 * L * L + f_integral(y / x);
}

inline double lrri(const ElrrSystem& sys, const PhaseState& st, double vx,
                   double vy) {
    return lrri(sys.F_integral, st.x, st.y, vx, vy);
}

inline double lrri(const HamiltonianSpec& spec, const PhaseState& st) {
    auto [vx, vy] = velocities(spec, st);
    return lrri([&spec](double s) { return spec.f_integral(s); }, st.x, st.y,
                vx, vy);
}

// Invariant of the generic (f, g) form, written with two antiderivatives;
// lower limits fixed at the given anchors.
inline double lrri_generic(const GenericElrrSystem& gsys, double x, double y,
                           double vx, double vy, double f_lower = 1.0,
                           double g_lower = 1.0) {
    if (x == 0.0 || y == 0.0)
        throw singular_point_error("generic LRRI undefined at x = 0 or y = 0");
    double L = x * vy - y * vx;
    auto integrate = [](const Fn1& fn, double a, double b) {
        int n = 256;
        double h = (b - a) / n;
        double acc = fn(a) + fn(b);
        for (int i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * fn(a + i * h);
        return acc * h / 3.0;
    };
    return 0.5 * L * L + integrate(gsys.f, f_lower, y / x) +
           integrate(gsys.g, g_lower, x / y);
}

// --- induced pair and the Hamiltonian constraint --------------------------

inline std::pair<double, double> induced_fbar_gbar(const HamiltonianSpec& spec,
                                                   double s) {
    if (s == 0.0)
        throw singular_point_error("induced pair undefined at s = 0");
    double x = xi(spec, s);
    if (x == 0.0)
        throw singular_direction_error("xi(s) = 0: singular direction");
    double r = rho(spec);
    double Fi = spec.f_integral(s);
    double F = spec.f_forcing(s);
    double fbar = 2.0 * r * s / (x * x) * Fi +
                  s / x * (spec.A() * s - spec.B()) * F;
    double gbar = 2.0 * r * s * s * s / (x * x) * Fi +
                  s * s / x * (spec.B() * s - spec.C()) * F;
    return {fbar, gbar};
}

// Residual of the compatibility identity between fbar and gbar; vanishes for
// every admissible spec.  With an analytic F' the derivatives of the induced
// pair are formed exactly; otherwise central differences on fbar/gbar.
inline double constraint_residual(const HamiltonianSpec& spec, double s) {
    auto [fbar, gbar] = induced_fbar_gbar(spec, s);
    double A = spec.A(), B = spec.B(), C = spec.C();
    double dfbar, dgbar;
    if (spec.has_analytic_f_prime()) {
        double r = rho(spec);
        double X = xi(spec, s);
        double Xp = 2.0 * A * s - 2.0 * B;
        double Fi = spec.f_integral(s);
        double F = spec.f_forcing(s);
        double Fp = spec.f_prime(s);
        double X2 = X * X;
        dfbar = 2.0 * r * (Fi / X2 + s * F / X2 - 2.0 * s * Fi * Xp / (X2 * X)) +
                (A * s - B) * F / X + s * A * F / X +
                s * (A * s - B) * Fp / X -
                s * (A * s - B) * F * Xp / X2;
        dgbar = 2.0 * r *
                    (3.0 * s * s * Fi / X2 + s * s * s * F / X2 -
                     2.0 * s * s * s * Fi * Xp / (X2 * X)) +
                2.0 * s * (B * s - C) * F / X + s * s * B * F / X +
                s * s * (B * s - C) * Fp / X -
                s * s * (B * s - C) * F * Xp / X2;
    } else {
        double h = fd_step(s);
        auto fb = [&spec](double v) {
            return induced_fbar_gbar(spec, v).first;
        };
        auto gb = [&spec](double v) {
            return induced_fbar_gbar(spec, v).second;
        };
        dfbar = (fb(s + h) - fb(s - h)) / (2.0 * h);
        dgbar = (gb(s + h) - gb(s - h)) / (2.0 * h);
    }
    return s * (B * s - C) * dfbar + (C + 2.0 * B * s) * fbar -
           (A * s - B) * dgbar - (A + 2.0 * B / s) * gbar;
}

// --- trajectories ----------------------------------------------------------

struct TrajectorySample {
    PhaseState state;
    double H = 0.0;
    double I = 0.0;
};

struct Trajectory {
    std::vector<TrajectorySample> samples;
    std::string system_id;
    std::string integrator;
    double abs_tol = 0.0;
    double rel_tol = 0.0;
    double step = 0.0;
    long accepted_steps = 0;
    long rejected_steps = 0;
};

}  // namespace elrr
