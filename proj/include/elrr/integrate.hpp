#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <span>
#include <vector>

#include "elrr/core.hpp"
#include "elrr/errors.hpp"

namespace elrr {

enum class Method { adaptive_embedded_rk, symplectic_splitting };

struct IntegratorConfig {
    Method method = Method::adaptive_embedded_rk;
    double abs_tol = 1e-10;   // adaptive
    double rel_tol = 1e-10;   // adaptive
    double step = 1e-2;       // symplectic
    long max_steps = 50'000'000;
    long record_every = 1;    // accepted steps between recorded samples

    void validate() const {
        if (abs_tol <= 0.0 || rel_tol <= 0.0)
            throw config_error("integrator tolerances must be positive");
        if (step <= 0.0) throw config_error("integrator step must be positive");
        if (max_steps <= 0)
            throw config_error("integrator max_steps must be positive");
        if (record_every <= 0)
            throw config_error("integrator record_every must be positive");
    }
};

struct DriftReport {
    double max_drift_H = 0.0;
    double max_drift_I = 0.0;
    double mean_drift_H = 0.0;
    double mean_drift_I = 0.0;
    std::vector<double> drift_H;
    std::vector<double> drift_I;
    long accepted_steps = 0;
    long rejected_steps = 0;
    double wall_seconds = 0.0;
};

namespace detail {

using Vec4 = std::array<double, 4>;

inline Vec4 add_scaled(const Vec4& y, double h, const Vec4& k) {
    return {y[0] + h * k[0], y[1] + h * k[1], y[2] + h * k[2], y[3] + h * k[3]};
}

// Dormand-Prince 5(4) tableau.
struct Dopri5 {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5,
                            c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                            a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                            a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                            a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113,
                            b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                            b6 = 11.0 / 84;
    // 4th-order weights for the error estimate
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695,
                            e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                            e6 = 22.0 / 525, e7 = -1.0 / 40;
};

// One DP5(4) attempt.  Returns the 5th-order result, the scaled error norm,
// and the FSAL stage k7 = f(t+h, y5).
template <typename Rhs>
void dopri5_stage(const Rhs& f, double t, const Vec4& y, double h,
                  const Vec4& k1, Vec4& y5, double& err_norm, Vec4& k7,
                  double abs_tol, double rel_tol) {
    using T = Dopri5;
    Vec4 k2 = f(t + T::c2 * h, add_scaled(y, h * T::a21, k1));
    Vec4 tmp;
    for (int i = 0; i < 4; ++i)
        tmp[i] = y[i] + h * (T::a31 * k1[i] + T::a32 * k2[i]);
    Vec4 k3 = f(t + T::c3 * h, tmp);
    for (int i = 0; i < 4; ++i)
        tmp[i] = y[i] + h * (T::a41 * k1[i] + T::a42 * k2[i] + T::a43 * k3[i]);
    Vec4 k4 = f(t + T::c4 * h, tmp);
    for (int i = 0; i < 4; ++i)
        tmp[i] = y[i] + h * (T::a51 * k1[i] + T::a52 * k2[i] +
                             T::a53 * k3[i] + T::a54 * k4[i]);
    Vec4 k5 = f(t + T::c5 * h, tmp);
    for (int i = 0; i < 4; ++i)
        tmp[i] = y[i] + h * (T::a61 * k1[i] + T::a62 * k2[i] +
                             T::a63 * k3[i] + T::a64 * k4[i] + T::a65 * k5[i]);
    Vec4 k6 = f(t + h, tmp);
    for (int i = 0; i < 4; ++i)
        y5[i] = y[i] + h * (T::b1 * k1[i] + T::b3 * k3[i] + T::b4 * k4[i] +
                            T::b5 * k5[i] + T::b6 * k6[i]);
    k7 = f(t + h, y5);
    double err = 0.0;
    for (int i = 0; i < 4; ++i) {
        double e = h * (T::e1 * k1[i] + T::e3 * k3[i] + T::e4 * k4[i] +
                        T::e5 * k5[i] + T::e6 * k6[i] + T::e7 * k7[i]);
        double sc =
            abs_tol + rel_tol * std::max(std::abs(y[i]), std::abs(y5[i]));
        err += (e / sc) * (e / sc);
    }
    err_norm = std::sqrt(err / 4.0);
}

// Hairer's starting-step heuristic (order 5).
template <typename Rhs>
double initial_step(const Rhs& f, double t0, const Vec4& y0, double abs_tol,
                    double rel_tol, double direction) {
    Vec4 f0 = f(t0, y0);
    double d0 = 0.0, d1 = 0.0;
    for (int i = 0; i < 4; ++i) {
        double sc = abs_tol + rel_tol * std::abs(y0[i]);
        d0 += (y0[i] / sc) * (y0[i] / sc);
        d1 += (f0[i] / sc) * (f0[i] / sc);
    }
    d0 = std::sqrt(d0 / 4.0);
    d1 = std::sqrt(d1 / 4.0);
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    Vec4 y1 = add_scaled(y0, direction * h0, f0);
    Vec4 f1 = f(t0 + direction * h0, y1);
    double d2 = 0.0;
    for (int i = 0; i < 4; ++i) {
        double sc = abs_tol + rel_tol * std::abs(y0[i]);
        double df = (f1[i] - f0[i]) / sc;
        d2 += df * df;
    }
    d2 = std::sqrt(d2 / 4.0) / h0;
    double dm = std::max(d1, d2);
    double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3)
                            : std::pow(0.01 / dm, 1.0 / 5.0);
    return direction * std::min(100.0 * h0, h1);
}

}  // namespace detail

// Adaptive DP5(4) driver over a generic 4-vector RHS.  Calls `observe(t, y)`
// after every accepted step; hits `t_end` exactly by clipping the last step.
template <typename Rhs, typename Observer>
void dopri5_integrate(const Rhs& f, double t0, detail::Vec4 y, double t_end,
                      const IntegratorConfig& cfg, Observer&& observe,
                      long* accepted = nullptr, long* rejected = nullptr) {
    using detail::Vec4;
    if (t_end <= t0) throw config_error("t_end must exceed the initial time");
    double t = t0;
    double h = detail::initial_step(f, t0, y, cfg.abs_tol, cfg.rel_tol, 1.0);
    Vec4 k1 = f(t, y);
    long n_acc = 0, n_rej = 0;
    double err_prev = 1.0;
    const double beta = 0.4 / 5.0, alpha = 0.7 / 5.0;
    for (long steps = 0;; ++steps) {
        if (steps >= cfg.max_steps)
            throw budget_error("max_steps exceeded at t = " + std::to_string(t));
        if (t >= t_end) break;
        bool clipped = false;
        if (t + h >= t_end) {
            h = t_end - t;
            clipped = true;
        }
        if (h < 1e-14 * std::abs(t) + 1e-16)
            throw singularity_approach_error(
                "step size underflow at t = " + std::to_string(t));
        Vec4 y5, k7;
        double err;
        detail::dopri5_stage(f, t, y, h, k1, y5, err, k7, cfg.abs_tol,
                             cfg.rel_tol);
        if (err <= 1.0) {
            t += h;
            y = y5;
            k1 = k7;  // FSAL
            ++n_acc;
            observe(t, y);
            double fac = 0.9 * std::pow(err > 0 ? err : 1e-16, -alpha) *
                         std::pow(err_prev, beta);
            fac = std::clamp(fac, 0.2, 5.0);
            err_prev = std::max(err, 1e-4);
            if (!clipped) h *= fac;
        } else {
            ++n_rej;
            h *= std::max(0.2, 0.9 * std::pow(err, -alpha));
        }
    }
    if (accepted) *accepted = n_acc;
    if (rejected) *rejected = n_rej;
}

namespace detail {

inline Vec4 canonical_vec_rhs(const HamiltonianSpec& spec, double t,
                              const Vec4& y) {
    PhaseState st{t, y[0], y[1], y[2], y[3]};
    CanonicalRhs r = canonical_rhs(spec, st);
    return {r.dx, r.dy, r.dpx, r.dpy};
}

}  // namespace detail

// Strang kick-drift-kick.  Kicks of a time-dependent Lambda are evaluated at
// the step midpoint, which keeps the scheme second order.
inline PhaseState symplectic_step(const HamiltonianSpec& spec,
                                  const PhaseState& st, double h) {
    double t_kick = spec.lambda_time_dependent() ? st.t + 0.5 * h : st.t;
    auto [gx, gy] = potential_gradient(spec, st.x, st.y, t_kick);
    double px = st.px - 0.5 * h * gx;
    double py = st.py - 0.5 * h * gy;
    double x = st.x + h * (spec.A() * px + spec.B() * py);
    double y = st.y + h * (spec.B() * px + spec.C() * py);
    auto [gx2, gy2] = potential_gradient(spec, x, y, t_kick);
    px -= 0.5 * h * gx2;
    py -= 0.5 * h * gy2;
    return {st.t + h, x, y, px, py};
}

inline Trajectory integrate(const HamiltonianSpec& spec,
                            const PhaseState& initial, double t_end,
                            const IntegratorConfig& cfg) {
    cfg.validate();
    if (initial.x == 0.0)
        throw singular_point_error("initial state on the x = 0 line");
    if (q_of(spec, initial.x, initial.y) == 0.0)
        throw singular_point_error("initial state on the q = 0 surface");

    Trajectory traj;
    traj.system_id = spec.id();
    traj.abs_tol = cfg.abs_tol;
    traj.rel_tol = cfg.rel_tol;
    traj.step = cfg.step;

    auto record = [&](const PhaseState& st) {
        traj.samples.push_back(
            {st, hamiltonian(spec, st), lrri(spec, st)});
    };
    record(initial);

    if (cfg.method == Method::adaptive_embedded_rk) {
        traj.integrator = "adaptive-embedded-rk";
        auto f = [&spec](double t, const detail::Vec4& y) {
            return detail::canonical_vec_rhs(spec, t, y);
        };
        long count = 0;
        dopri5_integrate(
            f, initial.t, {initial.x, initial.y, initial.px, initial.py},
            t_end, cfg,
            [&](double t, const detail::Vec4& y) {
                if (++count % cfg.record_every == 0 || t == t_end)
                    record({t, y[0], y[1], y[2], y[3]});
            },
            &traj.accepted_steps, &traj.rejected_steps);
    } else {
        traj.integrator = "symplectic-splitting";
        PhaseState st = initial;
        long count = 0;
        while (st.t < t_end) {
            double h = std::min(cfg.step, t_end - st.t);
            if (++count > cfg.max_steps)
                throw budget_error("max_steps exceeded at t = " +
                                   std::to_string(st.t));
            st = symplectic_step(spec, st, h);
            if (count % cfg.record_every == 0 || st.t >= t_end) record(st);
        }
        traj.accepted_steps = count;
    }
    return traj;
}

// Integrate and return states at exactly the requested times (strictly
// increasing, first one >= initial.t).
inline std::vector<PhaseState> integrate_dense(const HamiltonianSpec& spec,
                                               const PhaseState& initial,
                                               std::span<const double> times,
                                               const IntegratorConfig& cfg) {
    std::vector<PhaseState> out;
    out.reserve(times.size());
    PhaseState st = initial;
    auto f = [&spec](double t, const detail::Vec4& y) {
        return detail::canonical_vec_rhs(spec, t, y);
    };
    for (double target : times) {
        if (target < st.t - 1e-13)
            throw config_error("dense output times must be increasing");
        if (target > st.t + 1e-14) {
            detail::Vec4 y{st.x, st.y, st.px, st.py};
            detail::Vec4 last = y;
            double t_last = st.t;
            dopri5_integrate(f, st.t, y, target, cfg,
                             [&](double t, const detail::Vec4& yy) {
                                 t_last = t;
                                 last = yy;
                             });
            st = {t_last, last[0], last[1], last[2], last[3]};
        }
        out.push_back(st);
    }
    return out;
}

inline DriftReport drift_report(const Trajectory& traj) {
    if (traj.samples.empty())
        throw config_error("drift report of an empty trajectory");
    DriftReport rep;
    double H0 = traj.samples.front().H;
    double I0 = traj.samples.front().I;
    double denH = std::max(1.0, std::abs(H0));
    double denI = std::max(1.0, std::abs(I0));
    rep.drift_H.reserve(traj.samples.size());
    rep.drift_I.reserve(traj.samples.size());
    double sumH = 0.0, sumI = 0.0;
    for (const auto& s : traj.samples) {
        double dH = std::abs(s.H - H0) / denH;
        double dI = std::abs(s.I - I0) / denI;
        rep.drift_H.push_back(dH);
        rep.drift_I.push_back(dI);
        rep.max_drift_H = std::max(rep.max_drift_H, dH);
        rep.max_drift_I = std::max(rep.max_drift_I, dI);
        sumH += dH;
        sumI += dI;
    }
    rep.mean_drift_H = sumH / traj.samples.size();
    rep.mean_drift_I = sumI / traj.samples.size();
    rep.accepted_steps = traj.accepted_steps;
    rep.rejected_steps = traj.rejected_steps;
    return rep;
}

}  // namespace elrr
