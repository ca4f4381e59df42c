#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "elrr/integrate.hpp"
#include "elrr/models.hpp"
#include "elrr/quadrature.hpp"

using namespace elrr;

namespace {

HamiltonianSpec isotropic() {
    return detail::spec_from_expressions(1.0, 0.0, 1.0, parse_expression("q"),
                                         parse_expression("0"), "isotropic");
}

}  // namespace

TEST_CASE("chart transform basics") {
    auto spec = isotropic();
    QsState qs = to_qs(spec, {0.0, 3.0, 4.0, 0.0, 0.0});
    CHECK(qs.q == 25.0);
    CHECK(qs.s == Catch::Approx(4.0 / 3.0).epsilon(1e-15));
    CHECK(qs.sign_x == 1);

    auto goe = goedert_spec(parse_expression("1"), parse_expression("0"));
    QsState qg = to_qs(goe, {0.0, 1.0, 2.0, 0.0, 0.0});
    CHECK(qg.q == -4.0);  // q = -2xy
    CHECK(qg.s == 2.0);

    CHECK_THROWS_AS(to_qs(spec, {0.0, 0.0, 1.0, 0.0, 0.0}), chart_error);
}

TEST_CASE("chart round trip over random states") {
    auto spec = detail::spec_from_expressions(2.0, 0.5, 1.5,
                                              parse_expression("q"),
                                              parse_expression("s^2/2"),
                                              "skewed");
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    int done = 0;
    while (done < 100) {
        PhaseState st{0.0, u(rng), u(rng), u(rng), u(rng)};
        if (std::abs(st.x) < 0.05) continue;
        if (std::abs(q_of(spec, st.x, st.y)) < 0.05) continue;
        QsState qs = to_qs(spec, st);
        PhaseState back = from_qs(spec, qs);
        CHECK(back.x == Catch::Approx(st.x).margin(1e-12).epsilon(1e-12));
        CHECK(back.y == Catch::Approx(st.y).margin(1e-12).epsilon(1e-12));
        CHECK(back.px == Catch::Approx(st.px).margin(1e-11).epsilon(1e-11));
        CHECK(back.py == Catch::Approx(st.py).margin(1e-11).epsilon(1e-11));
        ++done;
    }
}

TEST_CASE("transformed H and I equal the Cartesian values") {
    for (const HamiltonianSpec& spec :
         {calogero_spec({}), noncentral_spec({})}) {
        std::mt19937 rng(23);
        std::uniform_real_distribution<double> u(0.2, 1.8);
        for (int i = 0; i < 50; ++i) {
            PhaseState st{0.0, u(rng), u(rng), u(rng) - 1.0, u(rng) - 1.0};
            QsState qs = to_qs(spec, st);
            CHECK(hamiltonian_qs(spec, qs) ==
                  Catch::Approx(hamiltonian(spec, st))
                      .margin(1e-10)
                      .epsilon(1e-10));
            CHECK(lrri_qs(spec, qs) ==
                  Catch::Approx(lrri(spec, st)).margin(1e-12).epsilon(1e-12));
        }
    }
}

TEST_CASE("reconstruction guards") {
    // xi(1) = 1 - 4 + 1 = -2 with q > 0: no real x
    auto spec = detail::spec_from_expressions(1.0, 2.0, 1.0,
                                              parse_expression("q"),
                                              parse_expression("0"), "hyper");
    QsState qs;
    qs.q = 1.0;
    qs.s = 1.0;
    CHECK_THROWS_AS(from_qs(spec, qs), reconstruction_domain_error);
    // xi(s) = 2s^2 - 3s + 1 vanishes exactly at s = 1
    auto wedge = detail::spec_from_expressions(2.0, 1.5, 1.0,
                                               parse_expression("q"),
                                               parse_expression("0"), "wedge");
    CHECK_THROWS_AS(from_qs(wedge, qs), singular_direction_error);
}

TEST_CASE("lambda shift") {
    auto spec = calogero_spec({});
    SECTION("zero shift is the identity") {
        auto same = shift_lambda(spec, 0.0);
        CHECK(same.lambda(1.7, 0.0) ==
              Catch::Approx(spec.lambda(1.7, 0.0)).epsilon(1e-15));
        CHECK(same.dlambda_dq(1.7, 0.0) ==
              Catch::Approx(spec.dlambda_dq(1.7, 0.0)).epsilon(1e-15));
    }
    SECTION("shift adds 2 k2 / q") {
        auto shifted = shift_lambda(spec, 0.7);
        CHECK(shifted.lambda(2.0, 0.0) ==
              Catch::Approx(spec.lambda(2.0, 0.0) + 0.7).epsilon(1e-14));
        CHECK(shifted.dlambda_dq(2.0, 0.0) ==
              Catch::Approx(spec.dlambda_dq(2.0, 0.0) - 0.35).epsilon(1e-14));
        CHECK(shifted.f_integral(0.4) ==
              Catch::Approx(spec.f_integral(0.4)).epsilon(1e-15));
    }
}

TEST_CASE("time rescaling") {
    SECTION("q == 1 gives tau == t") {
        std::vector<double> t, q;
        for (int i = 0; i <= 40; ++i) {
            t.push_back(0.1 * i);
            q.push_back(1.0);
        }
        TauMap map = rescale_time(t, q);
        CHECK(map.tau().back() == Catch::Approx(4.0).epsilon(1e-13));
        CHECK(map.tau_at(2.0) == Catch::Approx(2.0).epsilon(1e-12));
        CHECK(map.t_at(1.5) == Catch::Approx(1.5).epsilon(1e-12));
    }
    SECTION("q == 2 halves the clock") {
        std::vector<double> t, q;
        for (int i = 0; i <= 40; ++i) {
            t.push_back(0.1 * i);
            q.push_back(2.0);
        }
        TauMap map = rescale_time(t, q);
        CHECK(map.tau().back() == Catch::Approx(2.0).epsilon(1e-13));
    }
    SECTION("smooth q integrates to the analytic value") {
        // q(t) = 1 + t^2: integral of 1/q = atan(t)
        std::vector<double> t, q;
        for (int i = 0; i <= 200; ++i) {
            double ti = 0.02 * i;
            t.push_back(ti);
            q.push_back(1.0 + ti * ti);
        }
        TauMap map = rescale_time(t, q);
        CHECK(map.tau().back() ==
              Catch::Approx(std::atan(4.0)).margin(1e-10));
    }
    SECTION("sign changes are rejected") {
        std::vector<double> t{0.0, 1.0, 2.0}, q{1.0, -1.0, 1.0};
        CHECK_THROWS_AS(rescale_time(t, q), rescaling_domain_error);
        std::vector<double> qneg{-1.0, -1.0, -1.0};
        CHECK_THROWS_AS(rescale_time(t, qneg), rescaling_domain_error);
        std::vector<double> qzero{1.0, 0.0, 1.0};
        CHECK_THROWS_AS(rescale_time(t, qzero), rescaling_domain_error);
    }
}

TEST_CASE("angular quadrature with no forcing is a free rotation") {
    auto spec = isotropic();
    double I = 0.72, s0 = 0.4;
    AngularSolution sol = solve_separable_s(spec, I, s0, +1, 1.0, {});
    REQUIRE(sol.compactified);
    double w = std::sqrt(2.0 * I);
    for (std::size_t i = 0; i < sol.raw.tau.size(); ++i) {
        double expect = std::tan(std::atan(s0) + w * sol.raw.tau[i]);
        // skip samples too close to the pole of tan
        if (std::abs(expect) > 50.0) continue;
        CHECK(sol.s[i] == Catch::Approx(expect).margin(5e-8).epsilon(5e-8));
    }
    CHECK(sol.raw.events.empty());  // no turning points in free rotation
}

TEST_CASE("angular solve refuses a forbidden start") {
    auto spec = calogero_spec({});
    // Fint(0.5) >> 0.1
    CHECK_THROWS_AS(solve_separable_s(spec, 0.1, 0.5, +1, 1.0, {}),
                    forbidden_region_error);
}

TEST_CASE("radial quadrature matches the Calogero closed form") {
    auto spec = calogero_spec({});
    PhaseState init{0.0, 1.0, 0.3, 0.2, 0.6};
    double H = hamiltonian(spec, init);
    double I = lrri(spec, init);
    QsState qs0 = to_qs(spec, init);
    double tau_end = 2.0 * 3.14159265358979323846 / std::sqrt(2.0 * I);
    QuadratureConfig qcfg;
    qcfg.dtau = 2e-5;  // the radial equation is stiff near its apex
    qcfg.record_every = 500;
    SeparableSolution sol =
        solve_separable_q(spec, H, I, qs0.q, qs0.sign_dq, tau_end, qcfg);
    double c1 = calogero_fit_c1(H, I, qs0.q, qs0.sign_dq);
    double w = std::sqrt(2.0 * I);
    double worst = 0.0;
    for (std::size_t i = 0; i < sol.tau.size(); ++i) {
        double expect = calogero_q_closed(H, I, c1, w * sol.tau[i]);
        worst = std::max(worst, std::abs(sol.value[i] - expect));
    }
    CHECK(worst < 1e-8);
    // over a full radial period the orbit turns twice
    CHECK(sol.events.size() >= 2);
    double r = rho(spec);
    for (const auto& ev : sol.events) {
        // residual of the squared-velocity relation at the interpolated
        // turning point, bounded by the local slope times the locator error
        double q = ev.value;
        double lam = spec.lambda(q, 0.0);
        double Wp = 8.0 * r * q * (2.0 * q * H - q * lam - 2.0 * I) +
                    4.0 * r * q * q *
                        (2.0 * H - lam - q * spec.dlambda_dq(q, 0.0));
        CHECK(std::abs(ev.rhs_residual) < 1e-6 * std::max(1.0, std::abs(Wp)));
    }
    // range of q from the closed form
    double R = std::sqrt(H * H - 2.0 * I);
    double qmin = 2.0 * I / (H + R), qmax = 2.0 * I / (H - R);
    for (double q : sol.value) {
        CHECK(q > qmin - 1e-6);
        CHECK(q < qmax + 1e-6);
    }
}

TEST_CASE("separable solutions satisfy their energy relation") {
    auto spec = calogero_spec({});
    PhaseState init{0.0, 1.0, 0.3, 0.2, 0.6};
    double H = hamiltonian(spec, init);
    double I = lrri(spec, init);
    QsState qs0 = to_qs(spec, init);
    SeparableSolution sol =
        solve_separable_q(spec, H, I, qs0.q, qs0.sign_dq, 1.0, {});
    double r = rho(spec);
    for (std::size_t i = 0; i < sol.tau.size(); ++i) {
        double q = sol.value[i];
        double W = 4.0 * r * q * q *
                   (2.0 * q * H - q * spec.lambda(q, 0.0) - 2.0 * I);
        CHECK(sol.deriv[i] * sol.deriv[i] ==
              Catch::Approx(W).margin(1e-6).epsilon(1e-6));
    }
}

TEST_CASE("pipeline reproduces the isotropic oscillator") {
    auto spec = isotropic();
    PhaseState init{0.0, 1.0, 0.2, 0.3, 1.0};
    QuadratureSolution sol = quadrature_pipeline(spec, init, 6.0, {});
    auto [vx0, vy0] = velocities(spec, init);
    double worst = 0.0;
    for (std::size_t i = 0; i < sol.states.size(); ++i) {
        double t = sol.t[i];
        double xe = init.x * std::cos(t) + vx0 * std::sin(t);
        double ye = init.y * std::cos(t) + vy0 * std::sin(t);
        worst = std::max({worst, std::abs(sol.states[i].x - xe),
                          std::abs(sol.states[i].y - ye)});
    }
    CHECK(worst < 1e-8);
}

TEST_CASE("pipeline agrees with direct integration for the Calogero benchmark") {
    auto spec = calogero_spec({});
    PhaseState init{0.0, 1.0, 0.3, 0.2, 0.6};
    QuadratureSolution sol = quadrature_pipeline(spec, init, 5.0, {});
    IntegratorConfig cfg;
    std::vector<PhaseState> direct = integrate_dense(spec, init, sol.t, cfg);
    double worst = 0.0;
    for (std::size_t i = 0; i < direct.size(); ++i) {
        worst = std::max({worst, std::abs(direct[i].x - sol.states[i].x),
                          std::abs(direct[i].y - sol.states[i].y)});
    }
    CHECK(worst < 1e-6);
    // invariants along the reconstruction
    for (const auto& st : sol.states) {
        CHECK(hamiltonian(spec, st) ==
              Catch::Approx(sol.H).margin(1e-8).epsilon(1e-8));
        CHECK(lrri(spec, st) ==
              Catch::Approx(sol.I).margin(1e-8).epsilon(1e-8));
    }
}

TEST_CASE("shifted spec reproduces the shifted-invariant quadrature") {
    auto base = calogero_spec({});
    auto shifted = shift_lambda(base, 0.7);
    PhaseState init{0.0, 1.0, 0.3, 0.2, 0.6};
    double H = hamiltonian(shifted, init);
    double I = lrri(shifted, init);
    QsState qs0 = to_qs(shifted, init);
    double tau_end = 1.0;
    SeparableSolution a =
        solve_separable_q(shifted, H, I, qs0.q, qs0.sign_dq, tau_end, {});
    SeparableSolution b =
        solve_separable_q(base, H, I + 0.7, qs0.q, qs0.sign_dq, tau_end, {});
    REQUIRE(a.tau.size() == b.tau.size());
    for (std::size_t i = 0; i < a.tau.size(); ++i)
        CHECK(a.value[i] == Catch::Approx(b.value[i]).margin(1e-8));
}

TEST_CASE("pipeline guards") {
    SECTION("time-dependent Lambda is not integrable by quadratures") {
        auto spec = cervero_lejarreta_spec(parse_expression("1+t"),
                                           parse_expression("0"));
        CHECK_THROWS_AS(
            quadrature_pipeline(spec, {0.0, 1.0, 0.2, 0.0, 0.5}, 1.0, {}),
            not_integrable_error);
    }
    SECTION("negative-discriminant charts are rejected") {
        auto goe = goedert_spec(parse_expression("1"), parse_expression("0"));
        CHECK_THROWS_AS(
            quadrature_pipeline(goe, {0.0, 1.0, 1.0, 0.0, 0.0}, 1.0, {}),
            rescaling_domain_error);
    }
}
