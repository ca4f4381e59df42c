#pragma once

#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "elrr/core.hpp"
#include "elrr/errors.hpp"
#include "elrr/expression.hpp"
#include "elrr/integrate.hpp"
#include "elrr/models.hpp"
#include "elrr/quadrature.hpp"
#include "elrr/serialize.hpp"

namespace elrr {

enum class Pipeline { integrate, quadrature, closed_form, compare };

// Declarative run description.  Exactly one system source: a catalog entry,
// a raw Hamiltonian (A, B, C, lambda, f_integral expressions), or a generic
// (omega2, f, g) system integrated in second-order form.
struct RunSpec {
    // catalog source
    std::optional<std::string> catalog;
    nlohmann::json params;
    // raw Hamiltonian source
    std::optional<nlohmann::json> hamiltonian;
    // generic source
    std::optional<nlohmann::json> generic;

    PhaseState initial;
    double t_end = 10.0;
    Pipeline pipeline = Pipeline::integrate;
    IntegratorConfig integrator;
    QuadratureConfig quadrature;
    double compare_tol = 1e-6;
    std::string out_dir = "out";
    OutputFormat format = OutputFormat::csv;
};

namespace detail {

inline double require_number(const nlohmann::json& j, const char* field) {
    if (!j.contains(field) || !j[field].is_number())
        throw config_error(std::string("config field '") + field +
                           "' missing or not a number");
    return j[field].get<double>();
}

inline double number_or(const nlohmann::json& j, const char* field,
                        double dflt) {
    if (!j.contains(field)) return dflt;
    if (!j[field].is_number())
        throw config_error(std::string("config field '") + field +
                           "' must be a number");
    return j[field].get<double>();
}

inline Expression parse_field_expr(const nlohmann::json& j, const char* field,
                                   const char* dflt = nullptr) {
    if (!j.contains(field)) {
        if (dflt) return parse_expression(dflt);
        throw config_error(std::string("config field '") + field +
                           "' (expression) is required");
    }
    if (!j[field].is_string())
        throw config_error(std::string("config field '") + field +
                           "' must be an expression string");
    try {
        return parse_expression(j[field].get<std::string>());
    } catch (const expr_syntax_error& e) {
        throw config_error(std::string("config field '") + field +
                           "': " + e.what());
    }
}

}  // namespace detail

inline RunSpec parse_run_spec(const nlohmann::json& j) {
    RunSpec rs;
    if (!j.contains("system") || !j["system"].is_object())
        throw config_error("config field 'system' missing or not an object");
    const auto& sys = j["system"];
    int sources = 0;
    if (sys.contains("catalog")) {
        rs.catalog = sys["catalog"].get<std::string>();
        rs.params = sys.value("params", nlohmann::json::object());
        ++sources;
    }
    if (sys.contains("hamiltonian")) {
        rs.hamiltonian = sys["hamiltonian"];
        ++sources;
    }
    if (sys.contains("generic")) {
        rs.generic = sys["generic"];
        ++sources;
    }
    if (sources != 1)
        throw config_error(
            "config field 'system' must name exactly one source "
            "(catalog | hamiltonian | generic)");

    if (!j.contains("initial") || !j["initial"].is_object())
        throw config_error("config field 'initial' missing or not an object");
    {
        const auto& init = j["initial"];
        rs.initial.t = detail::number_or(init, "t", 0.0);
        rs.initial.x = detail::require_number(init, "x");
        rs.initial.y = detail::require_number(init, "y");
        rs.initial.px = detail::number_or(init, "px", 0.0);
        rs.initial.py = detail::number_or(init, "py", 0.0);
    }
    rs.t_end = detail::number_or(j, "t_end", 10.0);
    if (rs.t_end <= rs.initial.t)
        throw config_error("config field 't_end' must exceed initial.t");

    if (j.contains("pipeline")) {
        std::string p = j["pipeline"].get<std::string>();
        if (p == "integrate")
            rs.pipeline = Pipeline::integrate;
        else if (p == "quadrature")
            rs.pipeline = Pipeline::quadrature;
        else if (p == "closed-form")
            rs.pipeline = Pipeline::closed_form;
        else if (p == "compare")
            rs.pipeline = Pipeline::compare;
        else
            throw config_error("config field 'pipeline': unknown value '" + p +
                               "'");
    }

    if (j.contains("integrator")) {
        const auto& ic = j["integrator"];
        if (ic.contains("method")) {
            std::string m = ic["method"].get<std::string>();
            if (m == "adaptive-embedded-rk")
                rs.integrator.method = Method::adaptive_embedded_rk;
            else if (m == "symplectic-splitting")
                rs.integrator.method = Method::symplectic_splitting;
            else
                throw config_error(
                    "config field 'integrator.method': unknown value '" + m +
                    "'");
        }
        rs.integrator.abs_tol =
            detail::number_or(ic, "abs_tol", rs.integrator.abs_tol);
        rs.integrator.rel_tol =
            detail::number_or(ic, "rel_tol", rs.integrator.rel_tol);
        rs.integrator.step = detail::number_or(ic, "step", rs.integrator.step);
        rs.integrator.max_steps = static_cast<long>(
            detail::number_or(ic, "max_steps",
                              static_cast<double>(rs.integrator.max_steps)));
        rs.integrator.record_every = static_cast<long>(detail::number_or(
            ic, "record_every",
            static_cast<double>(rs.integrator.record_every)));
        rs.integrator.validate();
    }
    if (j.contains("quadrature")) {
        const auto& qc = j["quadrature"];
        rs.quadrature.dtau =
            detail::number_or(qc, "dtau", rs.quadrature.dtau);
        rs.quadrature.record_every = static_cast<long>(detail::number_or(
            qc, "record_every",
            static_cast<double>(rs.quadrature.record_every)));
        if (rs.quadrature.dtau <= 0.0 || rs.quadrature.record_every <= 0)
            throw config_error("config field 'quadrature' values must be > 0");
    }
    if (j.contains("tolerances"))
        rs.compare_tol = detail::number_or(j["tolerances"], "sup", 1e-6);

    if (j.contains("output")) {
        const auto& o = j["output"];
        rs.out_dir = o.value("dir", rs.out_dir);
        std::string f = o.value("format", "csv");
        if (f == "csv")
            rs.format = OutputFormat::csv;
        else if (f == "json")
            rs.format = OutputFormat::json;
        else
            throw config_error("config field 'output.format': unknown value '" +
                               f + "'");
    }
    return rs;
}

// Instantiate the Hamiltonian named by a RunSpec (catalog or raw
// expressions).  Generic (omega2, f, g) sources have no Hamiltonian; callers
// handle them through build_generic.
inline HamiltonianSpec build_spec(const RunSpec& rs) {
    if (rs.catalog) {
        const std::string& name = *rs.catalog;
        const auto& p = rs.params;
        if (name == "calogero") {
            CalogeroParams cp;
            cp.sigma = detail::number_or(p, "sigma", 1.0);
            cp.g1 = detail::number_or(p, "g1", 1.0);
            cp.g2 = detail::number_or(p, "g2", 1.0);
            cp.g3 = detail::number_or(p, "g3", 1.0);
            cp.g4 = detail::number_or(p, "g4", 0.0);
            return calogero_spec(cp);
        }
        if (name == "noncentral") {
            NoncentralParams np;
            np.sigma = detail::number_or(p, "sigma", 2.0);
            np.g1 = detail::number_or(p, "g1", 1.0);
            np.g2 = detail::number_or(p, "g2", 0.5);
            np.g3 = detail::number_or(p, "g3", 0.0);
            return noncentral_spec(np);
        }
        if (name == "cervero-lejarreta")
            return cervero_lejarreta_spec(
                detail::parse_field_expr(p, "omega2", "1"),
                detail::parse_field_expr(p, "f_integral", "0"));
        if (name == "goedert")
            return goedert_spec(detail::parse_field_expr(p, "w2", "1"),
                                detail::parse_field_expr(p, "f_integral", "0"));
        throw config_error("unknown catalog system '" + name + "'");
    }
    if (rs.hamiltonian) {
        const auto& h = *rs.hamiltonian;
        double A = detail::require_number(h, "A");
        double B = detail::require_number(h, "B");
        double C = detail::require_number(h, "C");
        Expression lam = detail::parse_field_expr(h, "lambda");
        Expression fint = detail::parse_field_expr(h, "f_integral", "0");
        bool time_dep = false;
        {
            // Lambda may mention t; detect by comparing evaluations
            Bindings b1, b2;
            b1[Var::q] = 1.37;
            b2[Var::q] = 1.37;
            b2[Var::t] = 0.77;
            try {
                time_dep = lam.eval(b1) != lam.eval(b2) ||
                           !lam.derivative(Var::t).is_constant();
            } catch (const domain_error&) {
                time_dep = true;
            }
        }
        Expression F = fint.derivative(Var::s);
        Expression Fp = F.derivative(Var::s);
        Expression dLam = lam.derivative(Var::q);
        HamiltonianSpec spec(
            A, B, C,
            [lam](double q, double t) {
                Bindings b;
                b[Var::q] = q;
                b[Var::t] = t;
                return lam.eval(b);
            },
            [fint](double s) { return fint.eval(Var::s, s); }, "custom");
        spec.with_f([F](double s) { return F.eval(Var::s, s); })
            .with_f_prime([Fp](double s) { return Fp.eval(Var::s, s); })
            .with_dlambda_dq([dLam](double q, double t) {
                Bindings b;
                b[Var::q] = q;
                b[Var::t] = t;
                return dLam.eval(b);
            })
            .with_time_dependent_lambda(time_dep);
        return spec;
    }
    throw config_error(
        "generic (omega2, f, g) systems support the integrate pipeline only");
}

inline GenericElrrSystem build_generic(const RunSpec& rs) {
    if (!rs.generic)
        throw config_error("config has no generic system source");
    const auto& g = *rs.generic;
    Expression w2 = detail::parse_field_expr(g, "omega2", "0");
    Expression fe = detail::parse_field_expr(g, "f", "0");
    Expression ge = detail::parse_field_expr(g, "g", "0");
    return GenericElrrSystem{
        [fe](double s) { return fe.eval(Var::s, s); },
        [ge](double s) { return ge.eval(Var::s, s); },
        [w2](double x, double y, double t) {
            Bindings b;
            b[Var::x] = x;
            b[Var::y] = y;
            b[Var::t] = t;
            return w2.eval(b);
        }};
}

}  // namespace elrr
