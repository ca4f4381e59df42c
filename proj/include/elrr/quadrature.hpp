#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "elrr/core.hpp"
#include "elrr/errors.hpp"

namespace elrr {

// Point of the transformed chart.  pq, ps are the momenta conjugate to q and
// s; sign_x selects the branch of x = sign_x * sqrt(q/xi(s)).
struct QsState {
    double tau = 0.0;
    double t = 0.0;
    double q = 0.0;
    double s = 0.0;
    double pq = 0.0;
    double ps = 0.0;
    int sign_x = 1;
    int sign_dq = 1;
    int sign_ds = 1;
};

struct TurningEvent {
    double tau;
    double value;         // q or s at the turning point
    double rhs_residual;  // squared-velocity RHS there, ~0
    int new_sign;
};

inline QsState to_qs(const HamiltonianSpec& spec, const PhaseState& st) {
    if (st.x == 0.0)
        throw chart_error("(q,s) chart undefined on the x = 0 line");
    double q = q_of(spec, st.x, st.y);
    double s = st.y / st.x;
    double qx = -2.0 * spec.B() * st.y + 2.0 * spec.C() * st.x;
    double qy = 2.0 * spec.A() * st.y - 2.0 * spec.B() * st.x;
    double sx = -st.y / (st.x * st.x);
    double sy = 1.0 / st.x;
    double det = qx * sy - qy * sx;  // = 2q/x^2
    if (det == 0.0)
        throw chart_error("(q,s) chart degenerate (q = 0)");
    QsState out;
    out.t = st.t;
    out.q = q;
    out.s = s;
    out.pq = (st.px * sy - st.py * sx) / det;
    out.ps = (qx * st.py - qy * st.px) / det;
    out.sign_x = st.x > 0.0 ? 1 : -1;
    auto [vx, vy] = velocities(spec, st);
    out.sign_dq = (qx * vx + qy * vy) >= 0.0 ? 1 : -1;
    out.sign_ds = (sx * vx + sy * vy) >= 0.0 ? 1 : -1;
    return out;
}

inline PhaseState from_qs(const HamiltonianSpec& spec, const QsState& qs) {
    double X = xi(spec, qs.s);
    if (X == 0.0)
        throw singular_direction_error("xi(s) = 0: cannot reconstruct x");
    double ratio = qs.q / X;
    if (ratio <= 0.0)
        throw reconstruction_domain_error(
            "q/xi(s) must be positive for Cartesian reconstruction");
    double x = qs.sign_x * std::sqrt(ratio);
    double y = qs.s * x;
    double qx = -2.0 * spec.B() * y + 2.0 * spec.C() * x;
    double qy = 2.0 * spec.A() * y - 2.0 * spec.B() * x;
    double sx = -y / (x * x);
    double sy = 1.0 / x;
    return {qs.t, x, y, qs.pq * qx + qs.ps * sx, qs.pq * qy + qs.ps * sy};
}

// H and I in the transformed variables; equal their Cartesian counterparts.
inline double hamiltonian_qs(const HamiltonianSpec& spec, const QsState& qs) {
    double r = rho(spec);
    double X = xi(spec, qs.s);
    double Is = 0.5 * X * X * qs.ps * qs.ps + spec.f_integral(qs.s);
    return 2.0 * r * qs.q * qs.pq * qs.pq + 0.5 * spec.lambda(qs.q, qs.t) +
           Is / qs.q;
}

inline double lrri_qs(const HamiltonianSpec& spec, const QsState& qs) {
    double X = xi(spec, qs.s);
    return 0.5 * X * X * qs.ps * qs.ps + spec.f_integral(qs.s);
}

// Lambda(q,t) -> Lambda(q,t) + 2 k2/q.  Orbits of the shifted spec at
// invariant value I coincide with the original quadratures at I + k2.
inline HamiltonianSpec shift_lambda(const HamiltonianSpec& spec, double k2) {
    Fn2 lam = spec.raw_lambda();
    Fn2 shifted = [lam, k2](double q, double t) {
        return lam(q, t) + 2.0 * k2 / q;
    };
    HamiltonianSpec out(spec.A(), spec.B(), spec.C(), std::move(shifted),
                        spec.raw_f_integral(),
                        spec.id().empty() ? "" : spec.id() + "+shift");
    out.with_time_dependent_lambda(spec.lambda_time_dependent());
    out.with_s_lower(spec.s_lower());
    if (spec.raw_f()) out.with_f(spec.raw_f());
    if (spec.raw_f_prime()) out.with_f_prime(spec.raw_f_prime());
    if (spec.raw_dlambda_dq()) {
        Fn2 dl = spec.raw_dlambda_dq();
        out.with_dlambda_dq([dl, k2](double q, double t) {
            return dl(q, t) - 2.0 * k2 / (q * q);
        });
    }
    return out;
}

// --- time rescaling --------------------------------------------------------

// Monotone map tau(t) obtained by integrating 1/q over the samples with a
// local degree-4 interpolant (5-point windows, Gauss-Legendre nodes).
class TauMap {
public:
    TauMap(std::vector<double> t, std::vector<double> tau)
        : t_(std::move(t)), tau_(std::move(tau)) {}

    const std::vector<double>& t() const { return t_; }
    const std::vector<double>& tau() const { return tau_; }

    double tau_at(double t) const { return interp(t_, tau_, t); }
    double t_at(double tau) const { return interp(tau_, t_, tau); }

private:
    std::vector<double> t_, tau_;

    static double interp(const std::vector<double>& xs,
                         const std::vector<double>& ys, double x) {
        auto it = std::lower_bound(xs.begin(), xs.end(), x);
        std::size_t hi = std::min<std::size_t>(
            std::max<std::ptrdiff_t>(it - xs.begin(), 1), xs.size() - 1);
        // 4-point Lagrange around the bracketing interval
        std::size_t lo = hi >= 2 ? hi - 2 : 0;
        std::size_t end = std::min(lo + 4, xs.size());
        lo = end >= 4 ? end - 4 : 0;
        double acc = 0.0;
        for (std::size_t i = lo; i < end; ++i) {
            double w = 1.0;
            for (std::size_t j = lo; j < end; ++j)
                if (j != i) w *= (x - xs[j]) / (xs[i] - xs[j]);
            acc += w * ys[i];
        }
        return acc;
    }
};

inline TauMap rescale_time(std::span<const double> t,
                           std::span<const double> q) {
    if (t.size() != q.size() || t.size() < 2)
        throw config_error("rescale_time needs matching sample arrays");
    double sign = q[0] > 0.0 ? 1.0 : -1.0;
    for (double v : q)
        if (v == 0.0 || (v > 0.0) != (sign > 0.0))
            throw rescaling_domain_error(
                "q(t) must keep one strict sign for the time rescaling");
    if (sign < 0.0)
        throw rescaling_domain_error(
            "pipeline requires q > 0 for the time rescaling");

    // 5-node Gauss-Legendre on [-1,1]
    static const double gx[5] = {-0.906179845938663992797626878299,
                                 -0.538469310105683091036314420700, 0.0,
                                 0.538469310105683091036314420700,
                                 0.906179845938663992797626878299};
    static const double gw[5] = {0.236926885056189087514264040720,
                                 0.478628670499366468041291514836,
                                 0.568888888888888888888888888889,
                                 0.478628670499366468041291514836,
                                 0.236926885056189087514264040720};

    std::size_t n = t.size();
    std::vector<double> tau(n);
    tau[0] = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        // degree-4 window around interval i
        std::size_t lo = i >= 2 ? i - 2 : 0;
        std::size_t end = std::min(lo + 5, n);
        lo = end >= 5 ? end - 5 : 0;
        double a = t[i], b = t[i + 1];
        double acc = 0.0;
        for (int g = 0; g < 5; ++g) {
            double xg = 0.5 * (a + b) + 0.5 * (b - a) * gx[g];
            double f = 0.0;
            for (std::size_t j = lo; j < end; ++j) {
                double w = 1.0;
                for (std::size_t k = lo; k < end; ++k)
                    if (k != j) w *= (xg - t[k]) / (t[j] - t[k]);
                f += w / q[j];
            }
            acc += gw[g] * f;
        }
        tau[i + 1] = tau[i] + 0.5 * (b - a) * acc;
        if (tau[i + 1] <= tau[i])
            throw rescaling_domain_error("tau(t) failed to be increasing");
    }
    std::vector<double> tv(t.begin(), t.end());
    return TauMap(std::move(tv), std::move(tau));
}

// --- separable solvers -----------------------------------------------------

struct SeparableSolution {
    std::vector<double> tau;
    std::vector<double> value;  // q or s
    std::vector<double> deriv;  // d(value)/dtau
    std::vector<TurningEvent> events;
};

struct QuadratureConfig {
    double dtau = 1e-4;        // RK4 substep in tau
    long record_every = 100;   // substeps between recorded samples
    long max_substeps = 100'000'000;
};

namespace detail {

// y'' = W'(y)/2 with (y')^2 = W(y); fixed-step RK4 with turning-event
// capture at sign changes of y'.
template <typename W, typename Wp>
SeparableSolution solve_second_order(const W& rhs2, const Wp& drhs2, double y0,
                                     int sign0, double tau_end,
                                     const QuadratureConfig& cfg,
                                     const char* what) {
    double w0 = rhs2(y0);
    if (w0 < -1e-12)
        throw forbidden_region_error(std::string(what) +
                                     ": squared velocity negative at start");
    double v = sign0 * std::sqrt(std::max(0.0, w0));

    SeparableSolution sol;
    double tau = 0.0, y = y0;
    sol.tau.push_back(tau);
    sol.value.push_back(y);
    sol.deriv.push_back(v);

    auto accel = [&](double yy) { return 0.5 * drhs2(yy); };
    long n = 0;
    double h = cfg.dtau;
    while (tau < tau_end) {
        if (++n > cfg.max_substeps)
            throw budget_error(std::string(what) + ": substep budget exceeded");
        double hh = std::min(h, tau_end - tau);
        double vprev = v, yprev = y, tauprev = tau;
        // RK4 on (y, v)
        double k1y = v, k1v = accel(y);
        double k2y = v + 0.5 * hh * k1v, k2v = accel(y + 0.5 * hh * k1y);
        double k3y = v + 0.5 * hh * k2v, k3v = accel(y + 0.5 * hh * k2y);
        double k4y = v + hh * k3v, k4v = accel(y + hh * k3y);
        y += hh / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
        v += hh / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        tau += hh;
        if (vprev != 0.0 && ((v >= 0.0) != (vprev >= 0.0))) {
            // turning point: v crosses zero inside the substep
            double frac = vprev / (vprev - v);
            double tau_star = tauprev + frac * hh;
            double y_star = yprev + frac * hh * vprev +
                            0.5 * (frac * hh) * (frac * hh) * accel(yprev);
            sol.events.push_back(
                {tau_star, y_star, rhs2(y_star), v >= 0.0 ? 1 : -1});
        }
        if (n % cfg.record_every == 0 || tau >= tau_end) {
            sol.tau.push_back(tau);
            sol.value.push_back(y);
            sol.deriv.push_back(v);
        }
    }
    return sol;
}

}  // namespace detail

// (dq/dtau)^2 = 4 rho q^2 (2qH - q Lambda(q) - 2I), autonomous Lambda.
inline SeparableSolution solve_separable_q(const HamiltonianSpec& spec,
                                           double H, double I, double q0,
                                           int sign0, double tau_end,
                                           const QuadratureConfig& cfg = {}) {
    if (spec.lambda_time_dependent())
        throw not_integrable_error(
            "separable q-equation requires autonomous Lambda");
    double r = rho(spec);
    auto W = [&spec, r, H, I](double q) {
        return 4.0 * r * q * q * (2.0 * q * H - q * spec.lambda(q, 0.0) -
                                  2.0 * I);
    };
    auto Wp = [&spec, r, H, I](double q) {
        double lam = spec.lambda(q, 0.0);
        double dlam = spec.dlambda_dq(q, 0.0);
        return 8.0 * r * q * (2.0 * q * H - q * lam - 2.0 * I) +
               4.0 * r * q * q * (2.0 * H - lam - q * dlam);
    };
    return detail::solve_second_order(W, Wp, q0, sign0, tau_end, cfg,
                                      "solve_separable_q");
}

namespace detail {

// Compactified angular variable u with s(u) = (B + sqrt(rho) tan(sqrt(rho) u))/A,
// valid for rho > 0 (which forces A != 0).  u passes smoothly through the
// poles of s, so orbits may cross the x = 0 line.
struct AngularChart {
    double A, B, sr;  // sr = sqrt(rho)

    double u_of_s(double s) const {
        return std::atan((A * s - B) / sr) / sr;
    }
    double s_of_u(double u) const { return (B + sr * std::tan(sr * u)) / A; }
    double xi_of_u(double u) const {
        double c = std::cos(sr * u);
        return sr * sr / (A * c * c);
    }
};

}  // namespace detail

// (ds/dtau)^2 = 2 xi^2(s) (I - Fint(s)).  For rho > 0 the solve runs in the
// compactified angle u = atan((As - B)/sqrt(rho))/sqrt(rho) so s may pass
// through infinity; for rho < 0 the solve stays in s and refuses to cross
// xi(s) = 0.
struct AngularSolution {
    SeparableSolution raw;     // in u (rho > 0) or s (rho < 0)
    std::vector<double> s;     // chart values on the same grid
    bool compactified = false;
};

inline AngularSolution solve_separable_s(const HamiltonianSpec& spec, double I,
                                         double s0, int sign0, double tau_end,
                                         const QuadratureConfig& cfg = {}) {
    double r = rho(spec);
    AngularSolution out;
    if (r > 0.0) {
        detail::AngularChart chart{spec.A(), spec.B(), std::sqrt(r)};
        auto W = [&spec, &chart, I](double u) {
            return 2.0 * (I - spec.f_integral(chart.s_of_u(u)));
        };
        auto Wp = [&spec, &chart](double u) {
            double s = chart.s_of_u(u);
            return -2.0 * spec.f_forcing(s) * chart.xi_of_u(u);
        };
        out.compactified = true;
        out.raw = detail::solve_second_order(W, Wp, chart.u_of_s(s0), sign0,
                                             tau_end, cfg, "solve_separable_s");
        out.s.reserve(out.raw.value.size());
        for (double u : out.raw.value) out.s.push_back(chart.s_of_u(u));
        for (auto& ev : out.raw.events) ev.value = chart.s_of_u(ev.value);
    } else {
        auto W = [&spec, I](double s) {
            double X = xi(spec, s);
            return 2.0 * X * X * (I - spec.f_integral(s));
        };
        auto Wp = [&spec, I](double s) {
            double X = xi(spec, s);
            double Xp = 2.0 * spec.A() * s - 2.0 * spec.B();
            return 4.0 * X * Xp * (I - spec.f_integral(s)) -
                   2.0 * X * X * spec.f_forcing(s);
        };
        double xi0 = xi(spec, s0);
        if (xi0 == 0.0)
            throw singular_direction_error("xi(s0) = 0");
        out.raw = detail::solve_second_order(W, Wp, s0, sign0, tau_end, cfg,
                                             "solve_separable_s");
        for (double s : out.raw.value)
            if ((xi(spec, s) > 0.0) != (xi0 > 0.0))
                throw singular_direction_error(
                    "orbit attempted to cross a xi(s) = 0 direction");
        out.s = out.raw.value;
    }
    return out;
}

// --- the full pipeline ------------------------------------------------------

struct QuadratureSolution {
    std::vector<double> tau;
    std::vector<double> t;
    std::vector<double> q;
    std::vector<double> s;
    std::vector<PhaseState> states;  // Cartesian reconstruction
    double H = 0.0;
    double I = 0.0;
    std::vector<TurningEvent> q_events;
    std::vector<TurningEvent> s_events;
    int sign_x = 1;
};

inline QuadratureSolution quadrature_pipeline(const HamiltonianSpec& spec,
                                              const PhaseState& initial,
                                              double t_end,
                                              const QuadratureConfig& cfg = {}) {
    if (spec.lambda_time_dependent())
        throw not_integrable_error(
            "quadrature pipeline requires autonomous Lambda");
    double r = rho(spec);
    if (r <= 0.0)
        throw rescaling_domain_error(
            "quadrature pipeline implemented for rho > 0 charts only");

    QsState qs0 = to_qs(spec, initial);
    if (qs0.q <= 0.0)
        throw rescaling_domain_error("pipeline requires q > 0 along the run");
    double H = hamiltonian(spec, initial);
    double I = lrri(spec, initial);

    detail::AngularChart chart{spec.A(), spec.B(), std::sqrt(r)};

    auto Wq = [&spec, r, H, I](double q) {
        return 4.0 * r * q * q *
               (2.0 * q * H - q * spec.lambda(q, 0.0) - 2.0 * I);
    };
    auto Wq_p = [&spec, r, H, I](double q) {
        double lam = spec.lambda(q, 0.0);
        double dlam = spec.dlambda_dq(q, 0.0);
        return 8.0 * r * q * (2.0 * q * H - q * lam - 2.0 * I) +
               4.0 * r * q * q * (2.0 * H - lam - q * dlam);
    };
    auto Ws_p = [&spec, &chart](double u) {
        return -2.0 * spec.f_forcing(chart.s_of_u(u)) * chart.xi_of_u(u);
    };

    double wq0 = Wq(qs0.q);
    if (wq0 < -1e-10 * std::max(1.0, qs0.q * qs0.q))
        throw forbidden_region_error("q-equation RHS negative at start");
    double ws0 = 2.0 * (I - spec.f_integral(qs0.s));
    if (ws0 < -1e-12)
        throw forbidden_region_error("s-equation RHS negative at start");

    // state: q, vq = dq/dtau, u, vu = du/dtau, t
    double q = qs0.q;
    double vq = qs0.sign_dq * std::sqrt(std::max(0.0, wq0));
    double u = chart.u_of_s(qs0.s);
    double vu = qs0.sign_ds * std::sqrt(std::max(0.0, ws0));
    double t = initial.t, tau = 0.0;

    QuadratureSolution sol;
    sol.H = H;
    sol.I = I;
    sol.sign_x = qs0.sign_x;

    auto record = [&]() {
        sol.tau.push_back(tau);
        sol.t.push_back(t);
        sol.q.push_back(q);
        sol.s.push_back(chart.s_of_u(u));
        // smooth Cartesian reconstruction through the compactified angle
        double phi = chart.sr * u;
        double cphi = std::cos(phi), sphi = std::sin(phi);
        double alpha = std::sqrt(spec.A() * q / r);        // |x| / |cos phi|
        double beta = std::sqrt(q / (spec.A() * r));
        double x = qs0.sign_x * alpha * cphi;
        double y = qs0.sign_x * beta * (spec.B() * cphi + chart.sr * sphi);
        double dalpha = vq * std::sqrt(spec.A() / r) / (2.0 * std::sqrt(q));
        double dbeta = vq / (2.0 * std::sqrt(spec.A() * r * q));
        double dx = qs0.sign_x *
                    (dalpha * cphi - alpha * sphi * chart.sr * vu);
        double dy = qs0.sign_x *
                    (dbeta * (spec.B() * cphi + chart.sr * sphi) +
                     beta * (-spec.B() * sphi + chart.sr * cphi) * chart.sr *
                         vu);
        double vx = dx / q, vy = dy / q;  // d/dt = (1/q) d/dtau
        // momenta from velocities through the inverse kinetic matrix
        double px = (spec.C() * vx - spec.B() * vy) / r;
        double py = (spec.A() * vy - spec.B() * vx) / r;
        sol.states.push_back({t, x, y, px, py});
    };
    record();

    long n = 0;
    while (t < t_end) {
        if (++n > cfg.max_substeps)
            throw budget_error("quadrature pipeline substep budget exceeded");
        double h = cfg.dtau;
        double vq_prev = vq, vu_prev = vu, q_prev = q, u_prev = u,
               tau_prev = tau;
        // RK4 on (q, vq, u, vu, t)
        auto deriv = [&](double qq, double vqq, double uu, double vuu,
                         double& dq, double& dvq, double& du, double& dvu,
                         double& dt) {
            dq = vqq;
            dvq = 0.5 * Wq_p(qq);
            du = vuu;
            dvu = 0.5 * Ws_p(uu);
            dt = qq;
        };
        double k1[5], k2[5], k3[5], k4[5];
        deriv(q, vq, u, vu, k1[0], k1[1], k1[2], k1[3], k1[4]);
        deriv(q + 0.5 * h * k1[0], vq + 0.5 * h * k1[1], u + 0.5 * h * k1[2],
              vu + 0.5 * h * k1[3], k2[0], k2[1], k2[2], k2[3], k2[4]);
        deriv(q + 0.5 * h * k2[0], vq + 0.5 * h * k2[1], u + 0.5 * h * k2[2],
              vu + 0.5 * h * k2[3], k3[0], k3[1], k3[2], k3[3], k3[4]);
        deriv(q + h * k3[0], vq + h * k3[1], u + h * k3[2], vu + h * k3[3],
              k4[0], k4[1], k4[2], k4[3], k4[4]);
        q += h / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]);
        vq += h / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]);
        u += h / 6.0 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2]);
        vu += h / 6.0 * (k1[3] + 2 * k2[3] + 2 * k3[3] + k4[3]);
        t += h / 6.0 * (k1[4] + 2 * k2[4] + 2 * k3[4] + k4[4]);
        tau += h;
        if (q <= 0.0)
            throw rescaling_domain_error(
                "q reached zero: time rescaling broke down");
        if ((vq >= 0.0) != (vq_prev >= 0.0) && vq_prev != 0.0) {
            double frac = vq_prev / (vq_prev - vq);
            double q_star = q_prev + frac * h * vq_prev;
            sol.q_events.push_back(
                {tau_prev + frac * h, q_star, Wq(q_star), vq >= 0.0 ? 1 : -1});
        }
        if ((vu >= 0.0) != (vu_prev >= 0.0) && vu_prev != 0.0) {
            double frac = vu_prev / (vu_prev - vu);
            double u_star = u_prev + frac * h * vu_prev;
            double s_star = chart.s_of_u(u_star);
            sol.s_events.push_back({tau_prev + frac * h, s_star,
                                    2.0 * (sol.I - spec.f_integral(s_star)),
                                    vu >= 0.0 ? 1 : -1});
        }
        if (n % cfg.record_every == 0 || t >= t_end) record();
    }
    return sol;
}

}  // namespace elrr
