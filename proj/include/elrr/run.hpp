#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "elrr/config.hpp"
#include "elrr/core.hpp"
#include "elrr/errors.hpp"
#include "elrr/integrate.hpp"
#include "elrr/models.hpp"
#include "elrr/quadrature.hpp"
#include "elrr/serialize.hpp"

namespace elrr {

struct RunResult {
    int exit_code = 0;
    nlohmann::json report;
};

// Max |constraint residual| over an s-grid, skipping points too close to
// roots of xi and to s = 0.
inline double check_constraint(const HamiltonianSpec& spec, double s_min,
                               double s_max, int n) {
    if (n < 2 || s_max <= s_min)
        throw config_error("constraint check needs s_max > s_min and n >= 2");
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
        double s = s_min + (s_max - s_min) * i / (n - 1);
        if (std::abs(s) < 1e-6) continue;
        if (std::abs(xi(spec, s)) < 1e-3 * std::max(1.0, s * s)) continue;
        worst = std::max(worst, std::abs(constraint_residual(spec, s)));
    }
    return worst;
}

namespace detail {

inline std::string out_path(const RunSpec& rs, const std::string& name) {
    std::filesystem::create_directories(rs.out_dir);
    return (std::filesystem::path(rs.out_dir) / name).string();
}

inline const char* format_ext(OutputFormat f) {
    return f == OutputFormat::csv ? ".csv" : ".json";
}

// Integrate the generic second-order system (positions and velocities) and
// record the compact-form invariant.
inline Trajectory integrate_generic(const GenericElrrSystem& gsys,
                                    const PhaseState& initial, double t_end,
                                    const IntegratorConfig& cfg) {
    ElrrSystem red = reduce_system(gsys);
    auto f = [&gsys](double t, const Vec4& v) -> Vec4 {
        double x = v[0], y = v[1];
        if (x == 0.0 || y == 0.0)
            throw singular_point_error("generic system forcing at x=0 or y=0");
        double w2 = gsys.omega2(x, y, t);
        return {v[2], v[3], -w2 * x + gsys.f(y / x) / (y * x * x),
                -w2 * y + gsys.g(x / y) / (x * y * y)};
    };
    Trajectory traj;
    traj.system_id = "generic";
    traj.integrator = "adaptive-embedded-rk";
    traj.abs_tol = cfg.abs_tol;
    traj.rel_tol = cfg.rel_tol;
    auto record = [&](double t, const Vec4& v) {
        PhaseState st{t, v[0], v[1], v[2], v[3]};  // px,py hold velocities
        double I = lrri(red.F_integral, v[0], v[1], v[2], v[3]);
        traj.samples.push_back({st, std::nan(""), I});
    };
    Vec4 y0{initial.x, initial.y, initial.px, initial.py};
    record(initial.t, y0);
    long count = 0;
    dopri5_integrate(f, initial.t, y0, t_end, cfg,
                     [&](double t, const Vec4& v) {
                         if (++count % cfg.record_every == 0 || t == t_end)
                             record(t, v);
                     },
                     &traj.accepted_steps, &traj.rejected_steps);
    return traj;
}

struct ClosedFormSupport {
    bool q_form = false;   // q (calogero) or r (noncentral)
    bool s_form = false;   // s (calogero equal-g) or cos(theta) (noncentral)
    bool noncentral = false;
    double equal_g = 0.0;  // calogero coupling when s_form holds
    double shift = 0.0;    // g4 or g3, folded into the radial invariant
};

inline ClosedFormSupport closed_form_support(const RunSpec& rs) {
    ClosedFormSupport cs;
    if (!rs.catalog) return cs;
    const auto& p = rs.params;
    if (*rs.catalog == "calogero") {
        if (number_or(p, "sigma", 1.0) != 1.0) return cs;
        cs.q_form = true;
        cs.shift = number_or(p, "g4", 0.0);
        double g1 = number_or(p, "g1", 1.0), g2 = number_or(p, "g2", 1.0),
               g3 = number_or(p, "g3", 1.0);
        if (g1 == g2 && g2 == g3 && g1 > 0.0) {
            cs.s_form = true;
            cs.equal_g = g1;
        }
    } else if (*rs.catalog == "noncentral") {
        if (number_or(p, "sigma", 2.0) != 2.0) return cs;
        cs.noncentral = true;
        cs.q_form = true;
        cs.s_form = true;
        cs.shift = number_or(p, "g3", 0.0);
    }
    return cs;
}

}  // namespace detail

// Execute the selected pipeline; writes artifacts under rs.out_dir and
// returns exit code 0 (success) or 4 (tolerance violation in compare mode).
// Guard and config errors propagate as exceptions.
inline RunResult run(const RunSpec& rs) {
    RunResult res;

    if (rs.generic) {
        if (rs.pipeline != Pipeline::integrate)
            throw config_error(
                "generic (omega2, f, g) systems support the integrate "
                "pipeline only");
        Trajectory traj = detail::integrate_generic(
            build_generic(rs), rs.initial, rs.t_end, rs.integrator);
        std::string path = detail::out_path(
            rs, std::string("trajectory") + detail::format_ext(rs.format));
        serialize_trajectory(traj, rs.format, path);
        res.report["trajectory"] = path;
        res.report["samples"] = traj.samples.size();
        return res;
    }

    HamiltonianSpec spec = build_spec(rs);

    switch (rs.pipeline) {
        case Pipeline::integrate: {
            Trajectory traj = integrate(spec, rs.initial, rs.t_end,
                                        rs.integrator);
            std::string path = detail::out_path(
                rs, std::string("trajectory") + detail::format_ext(rs.format));
            serialize_trajectory(traj, rs.format, path);
            DriftReport rep = drift_report(traj);
            nlohmann::json drift;
            drift["max_drift_H"] = rep.max_drift_H;
            drift["max_drift_I"] = rep.max_drift_I;
            drift["mean_drift_H"] = rep.mean_drift_H;
            drift["mean_drift_I"] = rep.mean_drift_I;
            drift["accepted_steps"] = rep.accepted_steps;
            drift["rejected_steps"] = rep.rejected_steps;
            write_file(detail::out_path(rs, "drift.json"), drift.dump(1) + "\n");
            res.report["trajectory"] = path;
            res.report["drift"] = drift;
            return res;
        }
        case Pipeline::quadrature: {
            QuadratureSolution sol =
                quadrature_pipeline(spec, rs.initial, rs.t_end, rs.quadrature);
            Trajectory traj;
            traj.system_id = spec.id();
            traj.integrator = "quadrature-pipeline";
            QsColumns cols{sol.tau, sol.q, sol.s};
            for (const auto& st : sol.states)
                traj.samples.push_back(
                    {st, hamiltonian(spec, st), lrri(spec, st)});
            std::string path = detail::out_path(
                rs, std::string("quadrature") + detail::format_ext(rs.format));
            serialize_trajectory(traj, rs.format, path, &cols);
            res.report["quadrature"] = path;
            res.report["H"] = sol.H;
            res.report["I"] = sol.I;
            res.report["q_turning_points"] = sol.q_events.size();
            res.report["s_turning_points"] = sol.s_events.size();
            return res;
        }
        case Pipeline::closed_form:
        case Pipeline::compare:
            break;
    }

    // closed-form and compare both start from the quadrature solution
    detail::ClosedFormSupport cs = detail::closed_form_support(rs);
    if (rs.pipeline == Pipeline::closed_form && !cs.q_form)
        throw config_error(
            "closed-form pipeline requires the calogero (sigma = 1) or "
            "noncentral (sigma = 2) catalog system");

    QuadratureSolution sol =
        quadrature_pipeline(spec, rs.initial, rs.t_end, rs.quadrature);
    QsState qs0 = to_qs(spec, rs.initial);

    std::vector<double> q_closed, s_closed;  // s slot holds cos(theta) for
                                             // the noncentral system
    if (cs.q_form) {
        double Iq = sol.I + cs.shift;
        double wq = std::sqrt(2.0 * Iq);
        if (!cs.noncentral) {
            double c1 = calogero_fit_c1(sol.H, Iq, qs0.q, qs0.sign_dq);
            for (double tau : sol.tau)
                q_closed.push_back(
                    calogero_q_closed(sol.H, Iq, c1, wq * tau));
            if (cs.s_form) {
                double c2 = calogero_fit_c2(sol.I, cs.equal_g, qs0.s,
                                            qs0.sign_ds);
                double ws = std::sqrt(2.0 * sol.I);
                for (double tau : sol.tau)
                    s_closed.push_back(
                        calogero_s_closed(sol.I, cs.equal_g, c2, ws * tau));
            }
        } else {
            double c1 = noncentral_fit_c1(sol.H, Iq, std::sqrt(qs0.q),
                                          qs0.sign_dq);
            for (double tau : sol.tau)
                q_closed.push_back(
                    noncentral_r_closed(sol.H, Iq, c1, wq * tau));
            // cos(theta) and its initial trend from the Cartesian state
            double r0 = std::sqrt(qs0.q);
            double ct0 = rs.initial.x / r0;
            auto [vx, vy] = velocities(spec, rs.initial);
            double rdot = (rs.initial.x * vx + rs.initial.y * vy) / r0;
            double dct = (vx * r0 - rs.initial.x * rdot) / qs0.q;
            const auto& p = rs.params;
            double g1 = detail::number_or(p, "g1", 1.0);
            double g2 = detail::number_or(p, "g2", 0.5);
            double c2 = noncentral_fit_c2(sol.I, g1, g2, ct0,
                                          dct >= 0.0 ? 1 : -1);
            double ws = std::sqrt(2.0 * sol.I);
            for (double tau : sol.tau)
                s_closed.push_back(
                    noncentral_costheta_closed(sol.I, g1, g2, c2, ws * tau));
        }
    }

    if (rs.pipeline == Pipeline::closed_form) {
        std::ostringstream out;
        out << (cs.noncentral ? "t,tau,r,costheta\n" : "t,tau,q,s\n");
        for (std::size_t i = 0; i < sol.tau.size(); ++i) {
            out << fmt17(sol.t[i]) << ',' << fmt17(sol.tau[i]) << ','
                << fmt17(q_closed[i]) << ','
                << (cs.s_form && !s_closed.empty() ? fmt17(s_closed[i]) : "")
                << "\n";
        }
        std::string path = detail::out_path(rs, "closed_form.csv");
        write_file(path, out.str());
        res.report["closed_form"] = path;
        res.report["H"] = sol.H;
        res.report["I"] = sol.I;
        return res;
    }

    // compare: direct integration at the pipeline's own sample times
    IntegratorConfig icfg = rs.integrator;
    icfg.method = Method::adaptive_embedded_rk;
    std::vector<PhaseState> direct =
        integrate_dense(spec, rs.initial, sol.t, icfg);

    double err_x = 0.0, err_y = 0.0, err_qc = 0.0, err_sc = 0.0;
    for (std::size_t i = 0; i < direct.size(); ++i) {
        err_x = std::max(err_x, std::abs(direct[i].x - sol.states[i].x));
        err_y = std::max(err_y, std::abs(direct[i].y - sol.states[i].y));
        if (cs.q_form) {
            double qd = q_of(spec, direct[i].x, direct[i].y);
            double ref = cs.noncentral ? std::sqrt(qd) : qd;
            err_qc = std::max(err_qc, std::abs(ref - q_closed[i]));
            if (cs.s_form) {
                double sd = cs.noncentral
                                ? direct[i].x / std::sqrt(qd)
                                : direct[i].y / direct[i].x;
                err_sc = std::max(err_sc, std::abs(sd - s_closed[i]));
            }
        }
    }

    res.report["sup_error_x"] = err_x;
    res.report["sup_error_y"] = err_y;
    if (cs.q_form)
        res.report[cs.noncentral ? "sup_error_r_closed" : "sup_error_q_closed"] =
            err_qc;
    if (cs.s_form)
        res.report[cs.noncentral ? "sup_error_costheta_closed"
                                 : "sup_error_s_closed"] = err_sc;
    res.report["tolerance"] = rs.compare_tol;
    res.report["H"] = sol.H;
    res.report["I"] = sol.I;
    write_file(detail::out_path(rs, "compare.json"),
               res.report.dump(1) + "\n");
    double worst = std::max({err_x, err_y, err_qc, err_sc});
    res.exit_code = worst <= rs.compare_tol ? 0 : 4;
    return res;
}

}  // namespace elrr
