// Acceptance run: one PASS/FAIL line per criterion. Exits non-zero on failure only with --strict.

#include <algorithm>
#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "sqpc/analytic_transport.hpp"
#include "sqpc/bdg.hpp"
#include "sqpc/core_model.hpp"
#include "sqpc/schrodinger_poisson.hpp"
#include "sqpc/sweep.hpp"
#include "sqpc/units.hpp"

using namespace sqpc;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
    char buf[1024];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

int failures = 0;

void run(int id, const char* name, double limit_s, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool ok = o.pass && s < limit_s;
    if (!ok) ++failures;
    std::printf("criterion %d %s: %s | %s | %.2f s (limit %.0f s)\n", id, ok ? "PASS" : "FAIL", name, o.detail.c_str(),
                s, limit_s);
    std::fflush(stdout);
}

SimulationConfig device5(double delta_0, Interfaces interfaces) {
    auto c = default_config();
    c.physics.delta_0 = delta_0;
    c.device.interfaces = interfaces;
    return c;
}

double interpolate(const sweep::Trace& t, double v) {
    for (std::size_t i = 0; i + 1 < t.V_g.size(); ++i) {
        const double a = t.V_g[i], b = t.V_g[i + 1];
        if ((v - a) * (v - b) <= 0.0) {
            const double f = b == a ? 0.0 : (v - a) / (b - a);
            return t.G[i] + f * (t.G[i + 1] - t.G[i]);
        }
    }
    return NAN;
}

double normal_sum(const bdg::BdGLattice& L) {
    double s = 0.0;
    for (double tau : bdg::transmission_eigenvalues(L, 0.0)) s += tau;
    return s;
}

gates::PotentialField flat(std::size_t nx, std::size_t ny, double a) {
    gates::PotentialField f;
    f.grid = gates::Grid2D::centered(nx, ny, a);
    f.depth = 120.0;
    f.energy.assign(nx * ny, 0.0);
    return f;
}

sweep::Trace staircase(double step, double width) {
    sweep::Trace t;
    for (double v : SweepRange{0.0, -5.0, step}.values()) {
        double g = 0.0;
        for (double c : {-4.5, -3.5, -2.5, -1.5}) g += 1.0 / (1.0 + std::exp(-(v - c) / width));
        t.V_g.push_back(v);
        t.G.push_back(g);
    }
    return t;
}

// H1 of every row of a field map.
struct FieldEvolution {
    std::vector<double> B;
    std::vector<std::optional<double>> H1;
};

FieldEvolution field_evolution(const SimulationConfig& c) {
    const SweepRange field{0.6, 1.8375, 0.1375};
    const SweepRange gate{-5.0, -6.47, 0.03};
    const auto m = sweep::field_gate_map(c, TransportModel::bdg, field, gate);
    FieldEvolution out;
    out.B = m.B;
    for (const auto& t : m.traces) out.H1.push_back(sweep::analyze_trace(t, c.analysis).H1);
    return out;
}

Outcome judge_field(const FieldEvolution& f, double normal_H1, double B_c) {
    bool ok = true;
    std::string rows;
    std::optional<double> last;
    for (std::size_t i = 0; i < f.B.size(); ++i) {
        const auto& h = f.H1[i];
        rows += fmt(" %.4g:%s", f.B[i], h ? fmt("%.4f", *h).c_str() : "null");
        if (!h) {
            ok = false;
            continue;
        }
        if (f.B[i] <= B_c + 1e-9 && last && *h > *last + 1e-3) ok = false;
        if (f.B[i] >= B_c - 1e-9 && std::abs(*h - normal_H1) > 0.05 * normal_H1) ok = false;
        last = h;
    }
    return {ok, fmt("normal H1 %.4f; B:H1%s", normal_H1, rows.c_str())};
}

}  // namespace

int main(int argc, char** argv) {
    const bool strict = argc > 1 && std::strcmp(argv[1], "--strict") == 0;

    run(1, "normal staircase, analytic saddle", 1.0, [] {
        const auto c = device5(0.0, Interfaces::one);
        const auto t = sweep::gate_sweep(c, TransportModel::analytic, 0.0, c.sweep.gate);
        auto plateaus = sweep::detect_plateaus(t, c.analysis.slope_eps, c.analysis.min_width);
        std::reverse(plateaus.begin(), plateaus.end());   // from the off end upward
        std::vector<double> mid;
        for (const auto& p : plateaus) {
            const double g = interpolate(t, 0.5 * (p.v_start + p.v_end));
            if (g >= c.analysis.pinch_threshold) mid.push_back(g);
        }
        if (mid.size() < 4) return Outcome{false, fmt("only %zu plateaus", mid.size())};
        bool ok = true;
        std::string d;
        for (int n = 1; n <= 4; ++n) {
            ok = ok && std::abs(mid[n - 1] - n) < 0.005 * n;
            d += fmt(" %.5f", mid[n - 1]);
        }
        return Outcome{ok, "plateau centres" + d};
    });

    run(2, "Andreev doubling, lattice NS, Z = 0", 600.0, [] {
        auto c = device5(1.4, Interfaces::one);
        c.device.Z = 0.0;
        const auto L = bdg::device_lattice(c, -5.0, 0.0, bdg::LeadKind::superconducting);
        const auto t = sweep::gate_sweep(c, TransportModel::bdg, 0.0, {-5.0, -6.6, 0.01});
        const auto r = sweep::analyze_trace(t, c.analysis);
        if (!r.H1) return Outcome{false, "no first plateau"};
        const bool ok = std::abs(*r.H1 - 2.0) < 0.05 * 2.0 && L.orbitals() <= 20000;
        return Outcome{ok, fmt("H1 = %.4f G0, %zu orbitals", *r.H1, L.orbitals())};
    });

    run(3, "BTK and Beenakker agree", 1.0, [] {
        double worst = 0.0;
        for (int i = 0; i <= 20; ++i) {
            const double Z = 0.25 * i;
            const double g = analytic::beenakker_ns_conductance({{1.0 / (1.0 + Z * Z)}});
            worst = std::max(worst, std::abs(g - 2.0 * analytic::btk_coefficients(0.0, 1.0, Z).A));
        }
        return Outcome{worst < 1e-12, fmt("max deviation %.2e over 21 Z", worst)};
    });

    run(4, "BTK probabilities sum to one", 1.0, [] {
        std::mt19937_64 rng(4);
        std::uniform_real_distribution<double> e(0.0, 5.0), d(0.01, 3.0), z(0.0, 5.0);
        double worst = 0.0;
        for (int i = 0; i < 1000; ++i) {
            const auto k = analytic::btk_coefficients(e(rng), d(rng), z(rng));
            worst = std::max(worst, std::abs(k.A + k.B + k.C + k.D - 1.0));
        }
        return Outcome{worst < 1e-12, fmt("max |A+B+C+D-1| = %.2e over 1000 draws", worst)};
    });

    run(5, "NSN series composition", 900.0, [] {
        bool ok = true;
        for (double g : {0.3, 1.0, 2.0, 3.7})
            ok = ok && analytic::series_nsn(g, g) == g / 2.0;
        std::string d = ok ? "series(G,G) = G/2 exact;" : "series(G,G) != G/2;";
        auto c = device5(1.4, Interfaces::two);
        c.device.Z = 0.5;
        double worst = 0.0;
        int used = 0;
        for (double v : SweepRange{-5.0, -6.4, 0.1}.values()) {
            const double lattice = sweep::point_conductance(c, TransportModel::series, 0.0, v);
            const auto left = bdg::device_lattice(c, v, 0.0, bdg::LeadKind::normal, false);
            const auto right = bdg::device_lattice(c, v, 0.0, bdg::LeadKind::normal, true);
            const double predicted = analytic::series_nsn(
                analytic::beenakker_ns_conductance({bdg::transmission_eigenvalues(left, 0.0)}),
                analytic::beenakker_ns_conductance({bdg::transmission_eigenvalues(right, 0.0)}));
            if (predicted < 0.1) continue;
            ++used;
            worst = std::max(worst, std::abs(lattice - predicted) / predicted);
        }
        ok = ok && used > 0 && worst < 0.15;
        return Outcome{ok, d + fmt(" Z = 0.5, max relative deviation %.4f over %d gate points", worst, used)};
    });

    const auto c6 = device5(1.4, Interfaces::one);
    double normal_H1 = 0.0;
    {
        const auto t = sweep::gate_sweep(device5(0.0, Interfaces::one), TransportModel::bdg, 0.0, {-5.0, -6.47, 0.03});
        normal_H1 = sweep::analyze_trace(t, c6.analysis).H1.value_or(NAN);
    }
    run(6, "field evolution of H1, lattice with orbital field", 1800.0,
        [&] { return judge_field(field_evolution(c6), normal_H1, c6.physics.B_c); });
    {
        // Diagnostic only: pairing follows Delta(B), no Peierls phases.
        auto c = c6;
        c.physics.orbital = false;
        const auto t0 = std::chrono::steady_clock::now();
        const auto o = judge_field(field_evolution(c), normal_H1, c.physics.B_c);
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("diagnostic 6 (Delta(B) only, no orbital phases): %s | %s | %.2f s\n", o.pass ? "pass" : "fail",
                    o.detail.c_str(), s);
    }

    run(7, "self-consistent band of the calibrated wafer", 60.0, [] {
        const auto p = band::self_consistent_band(calibrated_wafer(), 0.28, 0.3, 1e-6);
        const double n_cm2 = p.sheet_density / units::cm2_to_m2;
        double in = 0.0, total = 0.0;
        for (const auto& s : p.eigenstates) {
            if (s.energy > 0.0) continue;
            for (std::size_t i = 0; i < p.grid.size(); ++i) {
                const double w = s.envelope[i] * s.envelope[i];
                total += w;
                if (p.grid.positions[i] >= 112.0 && p.grid.positions[i] <= 162.0) in += w;
            }
        }
        const double frac = total > 0.0 ? in / total : 0.0;
        const bool ok = std::abs(n_cm2 / 2.1e11 - 1.0) <= 0.2 && frac >= 0.9;
        return Outcome{ok, fmt("n_s = %.4g cm^-2, confined weight %.4f, %d iterations", n_cm2, frac, p.iterations)};
    });

    run(8, "derived 2DEG parameters", 1.0, [] {
        const auto d = derive_2deg_parameters(2.24e15, 0.037, 1.4);
        const bool ok = std::abs(d.lambda_F - 53.0) <= 0.1 && std::abs(d.E_F - 14.5) <= 0.1;
        return Outcome{ok, fmt("lambda_F = %.4f nm, E_F = %.4f meV", d.lambda_F, d.E_F)};
    });

    run(9, "invariant suites", 600.0, [] {
        std::string d;
        bool ok = true;

        double unitarity = 0.0;
        std::mt19937_64 rng(9);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int i = 0; i < 20; ++i) {
            bdg::LatticeOptions o;
            o.mu = 8.0 + 10.0 * u(rng);
            o.delta = 0.2 + 1.5 * u(rng);
            o.Z = 1.5 * u(rng);
            o.B = 0.8 * u(rng);
            o.disorder = 5.0 * u(rng);
            o.seed = static_cast<std::uint64_t>(i + 1);
            const auto L = bdg::build_bdg_lattice(flat(6 + i % 9, 2 + i % 7, o.a), o);
            const auto s = bdg::scattering_matrix(L, 0.9 * o.delta * u(rng));
            const Eigen::MatrixXcd m = s.S.adjoint() * s.S;
            unitarity = std::max(unitarity, (m - Eigen::MatrixXcd::Identity(m.rows(), m.cols())).norm());
        }
        ok = ok && unitarity < 1e-8;
        d += fmt("unitarity %.1e;", unitarity);

        const auto c = device5(1.4, Interfaces::one);
        const double B = 0.3, V = -5.5;
        const double ref = bdg::ns_conductance(
            bdg::reflection_matrix(bdg::device_lattice(c, V, B, bdg::LeadKind::superconducting), 0.0));
        double gauge = 0.0;
        for (double y0 : {-40.0, 65.0}) {
            auto L = bdg::device_lattice(c, V, B, bdg::LeadKind::superconducting);
            const double k = 2.0 * units::pi * B * L.a / units::flux_quantum;
            for (double& p : L.phase) p -= k * y0;
            gauge = std::max(gauge, std::abs(bdg::ns_conductance(bdg::reflection_matrix(L, 0.0)) - ref));
        }
        ok = ok && gauge < 1e-8;
        d += fmt(" gauge %.1e;", gauge);

        bdg::LatticeOptions o;
        o.mu = 14.49;
        o.B = 0.3;
        o.Z = 0.4;
        o.disorder = 4.0;
        const auto S = bdg::build_bdg_lattice(flat(14, 7, o.a), o);
        o.right_lead = bdg::LeadKind::normal;
        const auto N = bdg::build_bdg_lattice(flat(14, 7, o.a), o);
        const double landauer = std::abs(bdg::ns_conductance(bdg::reflection_matrix(S, 0.0)) - normal_sum(N));
        ok = ok && landauer < 1e-10;
        d += fmt(" Delta->0 %.1e;", landauer);

        const SweepRange gate{-5.6, -6.2, 0.1};
        const auto a = sweep::gate_sweep(c, TransportModel::bdg, 0.0, gate);
        const auto b = sweep::gate_sweep(c, TransportModel::bdg, 0.0, gate);
        const auto x = sweep::gate_sweep(c, TransportModel::analytic, 0.0, c.sweep.gate);
        const auto y = sweep::gate_sweep(c, TransportModel::analytic, 0.0, c.sweep.gate);
        const bool same = a.G == b.G && x.G == y.G;
        ok = ok && same;
        d += same ? " reruns bit-identical;" : " reruns differ;";

        const auto clean = sweep::analyze_trace(staircase(0.005, 0.01), {});
        const double e_clean = std::max(std::abs(clean.H1.value_or(1e9) - 1.0), std::abs(clean.H2.value_or(1e9) - 2.0));
        auto noisy = staircase(0.02, 0.01);
        std::normal_distribution<double> noise(0.0, 0.01);
        for (double& g : noisy.G) g += noise(rng);
        AnalysisParams p;
        p.slope_eps = 1.5;
        p.min_width = 0.1;
        const auto r = sweep::analyze_trace(noisy, p);
        const double e_noisy = std::max(std::abs(r.H1.value_or(1e9) - 1.0), std::abs(r.H2.value_or(1e9) - 2.0));
        ok = ok && e_clean < 1e-9 && e_noisy < 0.02;
        d += fmt(" staircase clean %.1e, noisy %.4f", e_clean, e_noisy);
        return Outcome{ok, d};
    });

    std::printf("%d of 9 criteria failed\n", failures);
    return strict && failures > 0 ? 1 : 0;
}
