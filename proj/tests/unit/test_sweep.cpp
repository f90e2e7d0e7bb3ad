#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <random>

#include "sqpc/errors.hpp"
#include "sqpc/sweep.hpp"

using namespace sqpc;
using namespace sqpc::sweep;

namespace {

// Steps of height one centred at -4.5, -3.5, -2.5, -1.5 V; G = 4 at 0 V, 0 past -4.5 V.
Trace staircase(double step, double width, double shift = 0.0) {
    Trace t;
    for (double v : SweepRange{0.0, -5.0, step}.values()) {
        double g = 0.0;
        for (double c : {-4.5, -3.5, -2.5, -1.5}) g += 1.0 / (1.0 + std::exp(-(v - c) / width));
        t.V_g.push_back(v + shift);
        t.G.push_back(g);
    }
    return t;
}

SimulationConfig device5(double delta_0) {
    auto c = default_config();
    c.physics.delta_0 = delta_0;
    return c;
}

}  // namespace

TEST_CASE("clean staircase") {
    const auto t = staircase(0.005, 0.01);
    const auto r = analyze_trace(t, {});
    REQUIRE(r.plateaus.size() == 5);
    CHECK(r.G_off.value() < 1e-3);   // the run reaches into the tail of the last step
    CHECK(std::abs(*r.H1 - 1.0) < 1e-9);
    CHECK(std::abs(*r.H2 - 2.0) < 1e-9);
    CHECK(std::abs(r.plateaus[0].height - 4.0) < 1e-3);
    CHECK(std::abs(r.plateaus[1].height - 3.0) < 1e-9);
    CHECK(*r.V_p1 == doctest::Approx(-4.5).epsilon(1e-6));
    CHECK(*r.V_p2 == doctest::Approx(-3.5).epsilon(1e-6));
    CHECK(*r.V_p1 < *r.V_p2);
}

TEST_CASE("noisy staircase") {
    auto t = staircase(0.02, 0.01);
    std::mt19937_64 rng(17);
    std::normal_distribution<double> noise(0.0, 0.01);
    for (double& g : t.G) g += noise(rng);
    AnalysisParams p;
    p.slope_eps = 1.5;
    p.min_width = 0.1;
    const auto r = analyze_trace(t, p);
    REQUIRE(r.H1.has_value());
    REQUIRE(r.H2.has_value());
    CHECK(std::abs(*r.H1 - 1.0) < 0.02);
    CHECK(std::abs(*r.H2 - 2.0) < 0.02);
    CHECK(std::abs(*r.V_p1 + 4.5) < 0.02);
}

TEST_CASE("linear ramp has no plateaus") {
    Trace t;
    for (double v : SweepRange{0.0, -2.0, 0.01}.values()) {
        t.V_g.push_back(v);
        t.G.push_back(3.0 * (v + 2.0));
    }
    const auto r = analyze_trace(t, {});
    CHECK(r.plateaus.empty());
    CHECK_FALSE(r.H1.has_value());
    CHECK_FALSE(r.V_p1.has_value());
}

TEST_CASE("logistic pinch-off") {
    Trace t;
    for (double v : SweepRange{0.0, -2.0, 0.001}.values()) {
        t.V_g.push_back(v);
        t.G.push_back(1.0 / (1.0 + std::exp(-(v + 1.2) / 0.05)));
    }
    CHECK(pinch_off(t, 0.5) == doctest::Approx(-1.2).epsilon(1e-5));
    CHECK(pinch_off(t, 0.05) < pinch_off(t, 0.5));
    CHECK_THROWS_AS(pinch_off(t, 2.0), NotFoundError);
    CHECK(off_conductance(t, -2.0, -1.9) < 1e-6);
    CHECK_THROWS_AS(off_conductance(t, 0.5, 0.6), DomainError);
}

TEST_CASE("translation moves only the voltages") {
    const auto a = analyze_trace(staircase(0.005, 0.01), {});
    const auto b = analyze_trace(staircase(0.005, 0.01, 0.73), {});
    CHECK(*b.V_p1 - *a.V_p1 == doctest::Approx(0.73).epsilon(1e-9));
    CHECK(*b.V_p2 - *a.V_p2 == doctest::Approx(0.73).epsilon(1e-9));
    CHECK(*b.H1 == *a.H1);
    CHECK(*b.H2 == *a.H2);
}

TEST_CASE("reversed trace gives the same report") {
    auto t = staircase(0.005, 0.01);
    const auto a = analyze_trace(t, {});
    std::reverse(t.V_g.begin(), t.V_g.end());
    std::reverse(t.G.begin(), t.G.end());
    const auto b = analyze_trace(t, {});
    CHECK(*b.H1 == doctest::Approx(*a.H1).epsilon(1e-12));
    CHECK(*b.H2 == doctest::Approx(*a.H2).epsilon(1e-12));
    CHECK(*b.V_p1 == doctest::Approx(*a.V_p1).epsilon(1e-9));
    CHECK(*b.V_p2 == doctest::Approx(*a.V_p2).epsilon(1e-9));
}

TEST_CASE("analytic sweeps are deterministic and thread independent") {
    const auto c = device5(1.4);
    const SweepRange gate{0.0, -6.6, 0.02};
    ::setenv("SQPC_THREADS", "1", 1);
    const auto one = gate_sweep(c, TransportModel::analytic, 0.3, gate);
    ::setenv("SQPC_THREADS", "4", 1);
    const auto four = gate_sweep(c, TransportModel::analytic, 0.3, gate);
    const auto again = gate_sweep(c, TransportModel::analytic, 0.3, gate);
    ::unsetenv("SQPC_THREADS");
    CHECK(one.G == four.G);
    CHECK(four.G == again.G);

    const auto down = gate_sweep(c, TransportModel::analytic, 0.3, {-6.6, 0.0, 0.02});
    REQUIRE(down.G.size() == one.G.size());
    for (std::size_t i = 0; i < one.G.size(); ++i)
        CHECK(std::abs(down.G[one.G.size() - 1 - i] - one.G[i]) < 1e-9);   // grid points differ in the last bits
}

TEST_CASE("zero gap gives integer plateaus") {
    const auto t = gate_sweep(device5(0.0), TransportModel::analytic, 0.0, {0.0, -6.6, 0.01});
    const auto r = analyze_trace(t, {});
    REQUIRE(r.H2.has_value());
    CHECK(std::abs(*r.H1 - 1.0) < 0.01);
    CHECK(std::abs(*r.H2 - 2.0) < 0.02);
    CHECK(*r.G_off < AnalysisParams{}.pinch_threshold);
}

TEST_CASE("grid refinement") {
    const auto c = device5(1.4);
    const auto coarse = analyze_trace(gate_sweep(c, TransportModel::analytic, 0.0, {0.0, -6.6, 0.01}), {});
    const auto fine = analyze_trace(gate_sweep(c, TransportModel::analytic, 0.0, {0.0, -6.6, 0.005}), {});
    CHECK(*fine.H1 == doctest::Approx(*coarse.H1).epsilon(2e-3));
    CHECK(std::abs(*fine.V_p1 - *coarse.V_p1) < 0.01);
}

TEST_CASE("field map rows") {
    const auto c = device5(1.4);
    const SweepRange gate{-5.0, -6.6, 0.05};
    const auto m = field_gate_map(c, TransportModel::analytic, {0.0, 2.0, 0.5}, gate);
    REQUIRE(m.B.size() == 5);
    CHECK(m.traces[0].G == gate_sweep(c, TransportModel::analytic, 0.0, gate).G);
    const auto normal = device5(0.0);
    for (std::size_t i = 0; i < m.B.size(); ++i) {
        if (m.B[i] < c.physics.B_c) continue;
        const auto n = gate_sweep(normal, TransportModel::analytic, m.B[i], gate);
        for (std::size_t k = 0; k < n.G.size(); ++k) CHECK(std::abs(m.traces[i].G[k] - n.G[k]) < 1e-10);
    }
    CHECK_THROWS_AS(field_gate_map(c, TransportModel::analytic, {0.0, -1.0, 0.5}, gate), DomainError);
}

TEST_CASE("lattice points above the critical field are normal") {
    auto c = device5(1.4);
    c.device.interfaces = Interfaces::one;
    auto n = device5(0.0);
    n.device.interfaces = Interfaces::one;
    for (double v : {-5.6, -6.1})
        CHECK(std::abs(point_conductance(c, TransportModel::bdg, 1.8, v) -
                       point_conductance(n, TransportModel::bdg, 1.8, v)) < 1e-10);
}

TEST_CASE("analytic and lattice agree on normal plateaus") {
    auto c = device5(0.0);
    c.device.interfaces = Interfaces::one;
    const SweepRange gate{-5.4, -6.6, 0.02};
    const auto a = analyze_trace(gate_sweep(c, TransportModel::analytic, 0.0, gate), {});
    const auto b = analyze_trace(gate_sweep(c, TransportModel::bdg, 0.0, gate), {});
    REQUIRE(a.H1.has_value());
    REQUIRE(b.H1.has_value());
    CHECK(std::abs(*a.H1 - *b.H1) < 0.05 * *b.H1);
    if (a.H2 && b.H2) CHECK(std::abs(*a.H2 - *b.H2) < 0.05 * *b.H2);
}
