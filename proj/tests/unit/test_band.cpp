#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "sqpc/core_model.hpp"
#include "sqpc/errors.hpp"
#include "sqpc/schrodinger_poisson.hpp"
#include "sqpc/units.hpp"

using namespace sqpc;
using namespace sqpc::band;

namespace ref {
// tests/oracle/oracles.py
constexpr double square_well_E1 = 11.292197060206382;      // meV, 30 nm, m* = 0.037
constexpr double degenerate_sheet = 2241129340817157.0;    // m^-2 for E_F - E_1 = 14.5 meV
}  // namespace ref

namespace {

int sign_changes(const std::vector<double>& v) {
    const double peak = std::abs(*std::max_element(v.begin(), v.end(), [](double a, double b) { return std::abs(a) < std::abs(b); }));
    int count = 0;
    double last = 0.0;
    for (double x : v) {
        if (std::abs(x) < 1e-6 * peak) continue;
        if (last != 0.0 && (x > 0.0) != (last > 0.0)) ++count;
        last = x;
    }
    return count;
}

double in_window(const Eigenpair& s, const Grid1D& g, double lo, double hi) {
    double in = 0.0, total = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double p = s.envelope[i] * s.envelope[i];
        total += p;
        if (g.positions[i] >= lo && g.positions[i] <= hi) in += p;
    }
    return in / total;
}

}  // namespace

TEST_CASE("infinite square well spectrum") {
    const double h = 0.05;
    // Nodes span L - 2h; the wavefunction vanishes one step beyond each end.
    const auto g = Grid1D::uniform(30.0 - 2.0 * h, h);
    std::vector<double> v(g.size(), 0.0), m(g.size() - 1, 0.037);
    const auto states = solve_schrodinger_1d(v, m, g, 3);
    REQUIRE(states.size() == 3);
    CHECK(states[0].energy == doctest::Approx(ref::square_well_E1).epsilon(1e-4));
    CHECK(states[1].energy / states[0].energy == doctest::Approx(4.0).epsilon(0.01));
    CHECK(sign_changes(states[0].envelope) == 0);
    CHECK(sign_changes(states[1].envelope) == 1);
    CHECK(sign_changes(states[2].envelope) == 2);
    double norm = 0.0;
    for (double x : states[1].envelope) norm += x * x * g.spacing;
    CHECK(norm == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("harmonic well level spacing") {
    // U = 1/2 k x^2 with hbar w = 2 meV; levels at (n + 1/2) hbar w.
    const double hw = 2.0, m = 0.037;
    const auto g = Grid1D::uniform(400.0, 0.2);
    const double k = hw * hw * m / (2.0 * units::hbar2_over_2me);   // meV/nm^2
    std::vector<double> v(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double x = g.positions[i] - 200.0;
        v[i] = 0.5 * k * x * x;
    }
    std::vector<double> mass(g.size() - 1, m);
    const auto s = solve_schrodinger_1d(v, mass, g, 4);
    for (int n = 0; n < 4; ++n) CHECK(s[n].energy == doctest::Approx((n + 0.5) * hw).epsilon(1e-3));
}

TEST_CASE("poisson closed forms") {
    const auto g = Grid1D::uniform(100.0, 0.5);
    const std::size_t n = g.size();
    std::vector<double> eps(n - 1, 12.0);

    SUBCASE("zero charge between grounded ends") {
        std::vector<double> q(n, 0.0);
        const auto u = solve_poisson_1d(q, eps, g, PoissonBoundary::dirichlet(0.0), PoissonBoundary::dirichlet(0.0));
        for (double x : u) CHECK(x == 0.0);
    }
    SUBCASE("uniform slab is a parabola") {
        const double rho = 1e-5;   // nm^-3
        std::vector<double> q(n, rho);
        const auto u = solve_poisson_1d(q, eps, g, PoissonBoundary::dirichlet(0.0), PoissonBoundary::dirichlet(0.0));
        const double c = units::poisson_coupling * rho / (2.0 * 12.0);
        double worst = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double x = g.positions[i];
            worst = std::max(worst, std::abs(u[i] - c * x * (x - 100.0)));
        }
        CHECK(worst < 1e-8);
    }
    SUBCASE("charge sheet gives a slope jump") {
        const double sigma = 1e-4;   // nm^-2
        std::vector<double> q(n, 0.0);
        const std::size_t mid = n / 2;
        q[mid] = sigma / g.spacing;
        const auto u = solve_poisson_1d(q, eps, g, PoissonBoundary::dirichlet(0.0), PoissonBoundary::dirichlet(0.0));
        const double left = (u[mid] - u[mid - 10]) / (10 * g.spacing);
        const double right = (u[mid + 10] - u[mid]) / (10 * g.spacing);
        CHECK(12.0 * (right - left) == doctest::Approx(units::poisson_coupling * sigma).epsilon(1e-10));
        // linear on each side
        CHECK((u[mid - 10] - u[mid - 20]) / (10 * g.spacing) == doctest::Approx(left).epsilon(1e-10));
        CHECK(boundary_charge(u, q, eps, g) == doctest::Approx(-sigma * (1.0 - g.positions[mid] / 100.0)).epsilon(1e-9));
    }
    SUBCASE("two Neumann ends are rejected") {
        std::vector<double> q(n, 0.0);
        CHECK_THROWS_AS(solve_poisson_1d(q, eps, g, PoissonBoundary::neumann(), PoissonBoundary::neumann()), ConfigError);
    }
}

TEST_CASE("subband occupation") {
    const double m = 0.037;
    const double dos = m / (2.0 * units::pi * units::hbar2_over_2me);
    const double kt = units::thermal_energy(0.01);
    CHECK(subband_sheet_density(0.0, 0.0, 0.01, m) == doctest::Approx(dos * kt * std::log(2.0)).epsilon(1e-12));
    CHECK(subband_sheet_density(20.0, 0.0, 0.28, m) < 1e-4 * dos * 1.0);
    const double n = subband_sheet_density(-14.5, 0.0, 0.28, m) / units::m2_to_nm2;
    CHECK(n == doctest::Approx(ref::degenerate_sheet).epsilon(1e-6));
    CHECK_THROWS_AS(subband_sheet_density(0.0, 0.0, 0.0, m), DomainError);
}

TEST_CASE("self-consistent band of the calibrated wafer") {
    const auto w = calibrated_wafer();
    const auto a = self_consistent_band(w, 0.28, 0.3, 1e-6);
    // 2.1e11 cm^-2 within 20%
    CHECK(a.sheet_density / units::cm2_to_m2 == doctest::Approx(2.1e11).epsilon(0.2));
    CHECK(a.sheet_density == doctest::Approx(2.1085e15).epsilon(2e-3));

    // charge neutrality: donors = electrons - surface charge
    const double donors = integrate(a.donors, a.grid) * 1e-9;
    CHECK(std::abs(donors - a.sheet_density + a.surface_charge) / donors < 1e-6);

    // 30 nm well at 122..152 nm, padded by 10 nm on both sides
    int occupied = 0;
    for (const auto& s : a.eigenstates) {
        if (s.energy > 0.0) continue;
        ++occupied;
        CHECK(in_window(s, a.grid, 112.0, 162.0) >= 0.9);
    }
    CHECK(occupied >= 1);

    SUBCASE("initial guess independence") {
        BandOptions o;
        o.initial = InitialGuess::donor_screened;
        const auto b = self_consistent_band(w, 0.28, 0.3, 1e-6, o);
        CHECK(std::abs(b.sheet_density / a.sheet_density - 1.0) <= 2e-6);
    }
    SUBCASE("grid refinement") {
        BandOptions o;
        o.spacing = 0.25;
        const auto b = self_consistent_band(w, 0.28, 0.3, 1e-6, o);
        CHECK(std::abs(b.sheet_density / a.sheet_density - 1.0) < 0.01);
    }
    SUBCASE("mixing fraction") {
        const auto b = self_consistent_band(w, 0.28, 0.6, 1e-6);
        CHECK(std::abs(b.sheet_density / a.sheet_density - 1.0) <= 1e-6);
    }
}

TEST_CASE("undoped stack has no carriers") {
    auto w = calibrated_wafer();
    for (auto& l : w.layers) l.doping = 0.0;
    const auto p = self_consistent_band(w, 0.28, 0.3, 1e-6);
    CHECK(p.sheet_density < 1e9);
    for (std::size_t i = 0; i < p.grid.size(); ++i)
        if (p.grid.positions[i] >= 122.0 && p.grid.positions[i] <= 152.0) CHECK(p.cb_edge[i] > 0.0);
}

TEST_CASE("iteration cap raises with the residual history") {
    BandOptions o;
    o.max_iterations = 3;
    try {
        self_consistent_band(calibrated_wafer(), 0.28, 0.3, 1e-6, o);
        FAIL("expected ConvergenceError");
    } catch (const ConvergenceError& e) {
        CHECK(e.residual_history().size() == 2);
    }
}
