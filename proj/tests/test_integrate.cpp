#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "elrr/integrate.hpp"
#include "elrr/models.hpp"

using namespace elrr;

namespace {

HamiltonianSpec isotropic() {
    return detail::spec_from_expressions(1.0, 0.0, 1.0, parse_expression("q"),
                                         parse_expression("0"), "isotropic");
}

// Fixed-step classical RK4 on the canonical equations, used as an
// independent oracle for the adaptive driver.
PhaseState rk4_oracle(const HamiltonianSpec& spec, PhaseState st, double t_end,
                      double h) {
    auto f = [&spec](const PhaseState& s) {
        CanonicalRhs r = canonical_rhs(spec, s);
        return std::array<double, 4>{r.dx, r.dy, r.dpx, r.dpy};
    };
    auto advance = [&](const PhaseState& s, double hh,
                       const std::array<double, 4>& k) {
        return PhaseState{s.t + hh, st.x + hh * k[0], st.y + hh * k[1],
                          st.px + hh * k[2], st.py + hh * k[3]};
    };
    while (st.t < t_end - 1e-12) {
        double hh = std::min(h, t_end - st.t);
        auto k1 = f(st);
        auto k2 = f(advance(st, 0.5 * hh, k1));
        auto k3 = f(advance(st, 0.5 * hh, k2));
        auto k4 = f(advance(st, hh, k3));
        st = {st.t + hh,
              st.x + hh / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
              st.y + hh / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]),
              st.px + hh / 6.0 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2]),
              st.py + hh / 6.0 * (k1[3] + 2 * k2[3] + 2 * k3[3] + k4[3])};
    }
    return st;
}

}  // namespace

TEST_CASE("adaptive run stays on the oscillator circle") {
    auto spec = isotropic();
    IntegratorConfig cfg;
    Trajectory traj = integrate(spec, {0.0, 1.0, 0.0, 0.0, 1.0}, 10.0, cfg);
    REQUIRE(traj.samples.size() > 10);
    for (const auto& s : traj.samples) {
        double r2 = s.state.x * s.state.x + s.state.y * s.state.y;
        CHECK(std::abs(r2 - 1.0) < 1e-8);
        // exact circular solution x = cos t, y = sin t
        CHECK(std::abs(s.state.x - std::cos(s.state.t)) < 1e-8);
        CHECK(std::abs(s.state.y - std::sin(s.state.t)) < 1e-8);
    }
    CHECK(traj.samples.back().state.t == 10.0);
    DriftReport rep = drift_report(traj);
    CHECK(rep.max_drift_H < 1e-8);
    CHECK(rep.max_drift_I < 1e-8);
}

TEST_CASE("Calogero invariants are conserved by the adaptive driver") {
    auto spec = calogero_spec({});
    IntegratorConfig cfg;
    PhaseState init{0.0, 1.0, 0.3, 0.2, 0.6};
    Trajectory traj = integrate(spec, init, 5.0, cfg);
    DriftReport rep = drift_report(traj);
    CHECK(rep.max_drift_H < 1e-8);
    CHECK(rep.max_drift_I < 1e-8);
}

TEST_CASE("adaptive driver matches a fixed-step oracle") {
    auto spec = calogero_spec({});
    PhaseState init{0.0, 1.0, 0.3, 0.2, 0.6};
    IntegratorConfig cfg;
    Trajectory traj = integrate(spec, init, 2.0, cfg);
    PhaseState oracle = rk4_oracle(spec, init, 2.0, 1e-5);
    const PhaseState& got = traj.samples.back().state;
    CHECK(got.x == Catch::Approx(oracle.x).margin(1e-7));
    CHECK(got.y == Catch::Approx(oracle.y).margin(1e-7));
    CHECK(got.px == Catch::Approx(oracle.px).margin(1e-7));
    CHECK(got.py == Catch::Approx(oracle.py).margin(1e-7));
}

TEST_CASE("bounded noncentral motion never reaches the origin") {
    auto spec = noncentral_spec({});  // sigma=2, g1=1, g2=0.5
    PhaseState init{0.0, -0.347, 1.970, 0.1, 0.1};
    REQUIRE(hamiltonian(spec, init) < 0.0);
    REQUIRE(lrri(spec, init) > 0.0);
    Trajectory traj = integrate(spec, init, 10.0, {});
    double rmin = 1e30, rmax = 0.0;
    for (const auto& s : traj.samples) {
        double r = std::hypot(s.state.x, s.state.y);
        rmin = std::min(rmin, r);
        rmax = std::max(rmax, r);
    }
    CHECK(rmin > 0.1);
    CHECK(rmax < 10.0);
    DriftReport rep = drift_report(traj);
    CHECK(rep.max_drift_H < 1e-8);
    CHECK(rep.max_drift_I < 1e-8);
}

TEST_CASE("symplectic free motion translates exactly") {
    auto spec = detail::spec_from_expressions(2.0, 0.5, 1.0,
                                              parse_expression("0"),
                                              parse_expression("0"), "free");
    PhaseState st{0.0, 1.0, 2.0, 0.3, -0.4};
    double h = 0.25;
    PhaseState next = symplectic_step(spec, st, h);
    auto [vx, vy] = velocities(spec, st);
    CHECK(next.x == st.x + h * vx);
    CHECK(next.y == st.y + h * vy);
    CHECK(next.px == st.px);
    CHECK(next.py == st.py);
}

TEST_CASE("symplectic step is time reversible") {
    auto spec = calogero_spec({});
    PhaseState st{0.0, 1.0, 0.3, 0.2, 0.6};
    PhaseState fwd = symplectic_step(spec, st, 1e-2);
    PhaseState back = symplectic_step(spec, fwd, -1e-2);
    CHECK(back.x == Catch::Approx(st.x).margin(1e-12));
    CHECK(back.y == Catch::Approx(st.y).margin(1e-12));
    CHECK(back.px == Catch::Approx(st.px).margin(1e-12));
    CHECK(back.py == Catch::Approx(st.py).margin(1e-12));
}

TEST_CASE("symplectic energy error is bounded over 1e5 steps") {
    auto spec = isotropic();
    IntegratorConfig cfg;
    cfg.method = Method::symplectic_splitting;
    cfg.step = 1e-2;
    cfg.record_every = 100;
    Trajectory traj = integrate(spec, {0.0, 1.0, 0.0, 0.0, 1.0}, 1000.0, cfg);
    CHECK(traj.accepted_steps >= 100000);  // final clipped step may add one
    DriftReport rep = drift_report(traj);
    CHECK(rep.max_drift_H < 1e-4);  // oscillatory, no secular growth
}

TEST_CASE("halving the symplectic step reduces drift by the expected order") {
    auto spec = calogero_spec({});
    PhaseState init{0.0, 1.0, 0.3, 0.2, 0.6};
    auto drift_at = [&](double h) {
        IntegratorConfig cfg;
        cfg.method = Method::symplectic_splitting;
        cfg.step = h;
        cfg.record_every = 10;
        return drift_report(integrate(spec, init, 5.0, cfg)).max_drift_H;
    };
    double d1 = drift_at(2e-3);
    double d2 = drift_at(1e-3);
    CHECK(d1 / d2 >= 3.5);  // second-order scheme: ratio ~ 4
}

TEST_CASE("adaptive and symplectic integrations agree") {
    auto spec = calogero_spec({});
    PhaseState init{0.0, 1.0, 0.3, 0.2, 0.6};
    IntegratorConfig sym;
    sym.method = Method::symplectic_splitting;
    sym.step = 1e-5;
    sym.record_every = 1000000;
    Trajectory a = integrate(spec, init, 10.0, sym);
    IntegratorConfig ada;
    Trajectory b = integrate(spec, init, 10.0, ada);
    const PhaseState& sa = a.samples.back().state;
    const PhaseState& sb = b.samples.back().state;
    REQUIRE(sa.t == Catch::Approx(10.0).margin(1e-12));
    CHECK(sa.x == Catch::Approx(sb.x).margin(1e-6));
    CHECK(sa.y == Catch::Approx(sb.y).margin(1e-6));
}

TEST_CASE("integration guards") {
    auto spec = isotropic();
    IntegratorConfig cfg;
    SECTION("initial state on a singular line") {
        CHECK_THROWS_AS(integrate(spec, {0.0, 0.0, 1.0, 0.0, 0.0}, 1.0, cfg),
                        singular_point_error);
    }
    SECTION("step budget") {
        cfg.max_steps = 3;
        CHECK_THROWS_AS(integrate(spec, {0.0, 1.0, 0.0, 0.0, 1.0}, 10.0, cfg),
                        budget_error);
    }
    SECTION("config validation") {
        cfg.abs_tol = -1.0;
        CHECK_THROWS_AS(cfg.validate(), config_error);
        IntegratorConfig c2;
        c2.step = 0.0;
        CHECK_THROWS_AS(c2.validate(), config_error);
    }
    SECTION("t_end must advance") {
        CHECK_THROWS_AS(
            integrate(spec, {1.0, 1.0, 0.0, 0.0, 1.0}, 0.5, IntegratorConfig{}),
            config_error);
    }
}

TEST_CASE("drift report arithmetic") {
    Trajectory traj;
    traj.samples.push_back({{0, 1, 0, 0, 1}, 1.0, 2.0});
    traj.samples.push_back({{1, 1, 0, 0, 1}, 1.0, 2.0});
    DriftReport flat = drift_report(traj);
    CHECK(flat.max_drift_H == 0.0);
    CHECK(flat.max_drift_I == 0.0);
    traj.samples.push_back({{2, 1, 0, 0, 1}, 1.0 + 1e-6, 2.0});
    DriftReport bumped = drift_report(traj);
    CHECK(bumped.max_drift_H == Catch::Approx(1e-6).epsilon(1e-9));
    CHECK(bumped.max_drift_I == 0.0);
    Trajectory empty;
    CHECK_THROWS_AS(drift_report(empty), config_error);
}

TEST_CASE("dense output hits requested times") {
    auto spec = isotropic();
    const double times[] = {1.0, 2.5, 7.0};
    auto states = integrate_dense(spec, {0.0, 1.0, 0.0, 0.0, 1.0}, times, {});
    REQUIRE(states.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(states[i].t == Catch::Approx(times[i]).margin(1e-12));
        CHECK(states[i].x == Catch::Approx(std::cos(times[i])).margin(1e-8));
        CHECK(states[i].y == Catch::Approx(std::sin(times[i])).margin(1e-8));
    }
}
