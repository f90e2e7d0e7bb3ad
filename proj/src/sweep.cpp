#include "sqpc/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "sqpc/analytic_transport.hpp"
#include "sqpc/bdg.hpp"
#include "sqpc/errors.hpp"
#include "sqpc/gate_potential.hpp"
#include "sqpc/units.hpp"

namespace sqpc::sweep {

void Trace::validate() const {
    if (V_g.size() != G.size()) throw DomainError("trace: V_g and G lengths differ");
    if (V_g.size() < 2) throw DomainError("trace: at least two samples required");
    const bool up = V_g[1] > V_g[0];
    for (std::size_t i = 1; i < V_g.size(); ++i) {
        if (up ? !(V_g[i] > V_g[i - 1]) : !(V_g[i] < V_g[i - 1]))
            throw DomainError("trace: V_g must be strictly monotone");
    }
    for (double g : G)
        if (!std::isfinite(g)) throw DomainError("trace: non-finite conductance");
}

void FieldMap::validate() const {
    if (B.size() != traces.size()) throw DomainError("map: one trace per field value required");
    for (std::size_t i = 0; i < traces.size(); ++i) {
        traces[i].validate();
        if (traces[i].V_g != traces.front().V_g) throw DomainError("map: traces must share the V_g grid");
    }
}

unsigned thread_count() {
    if (const char* env = std::getenv("SQPC_THREADS")) {
        char* end = nullptr;
        const long n = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && n >= 1) return static_cast<unsigned>(n);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

double analytic_point(const SimulationConfig& c, double delta, double v_g, double E) {
    const auto d = c.derived();
    const auto s = gates::fit_saddle(c.device, v_g, c.gates.lever, c.physics.m_eff);
    // Flat potential has no saddle; a vanishing frequency keeps the mode
    // count set by the strip width and makes the steps sharp.
    const double wy = std::max(s.hbar_omega_y, 1e-9);
    const int modes = static_cast<int>(std::floor(d.k_F * 1e-9 * c.sim_width() / units::pi));
    const auto t = analytic::saddle_transmissions(d.E_F + E, s.V0, s.hbar_omega_x, wy, modes);
    return analytic::btk_ns_conductance(t, E, delta, c.device.Z);
}

double lattice_point(const SimulationConfig& c, double B, double v_g, double E, bool mirrored) {
    const auto L = bdg::device_lattice(c, v_g, B, bdg::LeadKind::superconducting, mirrored);
    return bdg::ns_conductance(bdg::reflection_matrix(L, E));
}

template <class F>
double thermal(const SimulationConfig& c, F&& at_energy) {
    if (!c.sweep.thermal) return at_energy(0.0);
    const auto grid = analytic::thermal_energy_grid(c.physics.temperature, c.sweep.energy_points);
    std::vector<double> g(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) g[i] = at_energy(grid[i]);
    return analytic::thermal_broaden(grid, g, c.physics.temperature);
}

}  // namespace

double point_conductance(const SimulationConfig& c, TransportModel model, double B, double v_g) {
    const double delta = bdg::delta_vs_field(B, c.delta(), c.physics.B_c);
    // With the gap closed the contacts are ohmic and only the constriction quantizes.
    const bool two = c.device.interfaces == Interfaces::two && delta > 0.0;
    switch (model) {
        case TransportModel::analytic: {
            const double g = thermal(c, [&](double E) { return analytic_point(c, delta, v_g, E); });
            return two ? analytic::series_nsn(g, g) : g;
        }
        case TransportModel::bdg: {
            if (two)
                throw ConfigError("model bdg: coherent two-interface solve is not available; use model series");
            return thermal(c, [&](double E) { return lattice_point(c, B, v_g, E, false); });
        }
        case TransportModel::series: {
            const double left = thermal(c, [&](double E) { return lattice_point(c, B, v_g, E, false); });
            if (!two) return left;
            const double right = thermal(c, [&](double E) { return lattice_point(c, B, v_g, E, true); });
            return analytic::series_nsn(left, right);
        }
    }
    throw ConfigError("unknown transport model");
}

namespace {

// Evaluates f(i) for i in [0, n) on the configured worker threads.
template <class F>
void parallel_for(std::size_t n, F&& f) {
    const unsigned workers = std::min<std::size_t>(thread_count(), std::max<std::size_t>(n, 1));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::size_t failed_at = n;
    std::mutex m;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    f(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(m);
                    // Report the lowest failing index so errors are scheduling independent.
                    if (i < failed_at) {
                        failed_at = i;
                        failure = std::current_exception();
                    }
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

Trace empty_trace(const SimulationConfig& c, TransportModel model, double B, std::vector<double> v) {
    Trace t;
    t.V_g = std::move(v);
    t.G.assign(t.V_g.size(), 0.0);
    t.B = B;
    t.model = model;
    t.device = c.device_index;
    t.delta_0 = c.delta();
    t.Z = c.device.Z;
    t.temperature = c.physics.temperature;
    return t;
}

double evaluate(const SimulationConfig& c, TransportModel model, double B, double v) {
    try {
        return point_conductance(c, model, B, v);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        std::ostringstream os;
        os << "sweep failed at V_g = " << v << " V, B = " << B << " T: " << e.what();
        throw NumericError(os.str(), 0.0);
    }
}

}  // namespace

Trace gate_sweep(const SimulationConfig& config, TransportModel model, double B, const SweepRange& gate) {
    config.validate();
    auto t = empty_trace(config, model, B, gate.values());
    parallel_for(t.V_g.size(), [&](std::size_t i) { t.G[i] = evaluate(config, model, B, t.V_g[i]); });
    return t;
}

FieldMap field_gate_map(const SimulationConfig& config, TransportModel model, const SweepRange& field,
                        const SweepRange& gate) {
    config.validate();
    FieldMap map;
    map.B = field.values();
    const auto v = gate.values();
    for (double b : map.B) {
        if (!(b >= 0.0)) throw DomainError("map: B >= 0 required");
        map.traces.push_back(empty_trace(config, model, b, v));
    }
    const std::size_t nv = v.size();
    parallel_for(map.B.size() * nv, [&](std::size_t k) {
        const std::size_t row = k / nv, col = k % nv;
        map.traces[row].G[col] = evaluate(config, model, map.B[row], v[col]);
    });
    return map;
}

std::vector<Plateau> detect_plateaus(const Trace& trace, double slope_eps, double min_width) {
    trace.validate();
    if (!(slope_eps > 0.0) || !(min_width > 0.0)) throw DomainError("plateaus: slope_eps > 0 and min_width > 0 required");
    const auto& v = trace.V_g;
    const auto& g = trace.G;
    const std::size_t n = v.size();
    std::vector<bool> flat(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = i == 0 ? 0 : i - 1;
        const std::size_t hi = i + 1 == n ? n - 1 : i + 1;
        flat[i] = std::abs((g[hi] - g[lo]) / (v[hi] - v[lo])) < slope_eps;
    }
    std::vector<Plateau> out;
    for (std::size_t i = 0; i < n;) {
        if (!flat[i]) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < n && flat[j + 1]) ++j;
        if (std::abs(v[j] - v[i]) >= min_width * (1.0 - 1e-9)) {
            double sum = 0.0;
            for (std::size_t k = i; k <= j; ++k) sum += g[k];
            out.push_back({v[i], v[j], sum / static_cast<double>(j - i + 1)});
        }
        i = j + 1;
    }
    return out;
}

double pinch_off(const Trace& trace, double threshold) {
    trace.validate();
    const auto& v = trace.V_g;
    const auto& g = trace.G;
    const std::size_t n = v.size();
    // Walk from the open end toward the off end.
    const bool forward = g.front() >= g.back();
    for (std::size_t k = 0; k + 1 < n; ++k) {
        const std::size_t i = forward ? k : n - 1 - k;
        const std::size_t j = forward ? k + 1 : n - 2 - k;
        if (g[i] >= threshold && g[j] < threshold) {
            const double f = (g[i] - threshold) / (g[i] - g[j]);
            return v[i] + f * (v[j] - v[i]);
        }
    }
    std::ostringstream os;
    os << "pinch-off: G never crosses " << threshold << " G0 in the trace";
    throw NotFoundError(os.str());
}

double off_conductance(const Trace& trace, double v_lo, double v_hi) {
    trace.validate();
    if (v_lo > v_hi) std::swap(v_lo, v_hi);
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < trace.V_g.size(); ++i) {
        if (trace.V_g[i] >= v_lo && trace.V_g[i] <= v_hi) {
            sum += trace.G[i];
            ++count;
        }
    }
    if (count == 0) throw DomainError("off conductance: no samples in the window");
    return sum / static_cast<double>(count);
}

PlateauReport analyze_trace(const Trace& trace, const AnalysisParams& params) {
    PlateauReport r;
    r.plateaus = detect_plateaus(trace, params.slope_eps, params.min_width);
    if (r.plateaus.empty()) return r;
    // Order plateaus from the off end (smaller G) upward.
    std::vector<Plateau> ordered = r.plateaus;
    if (trace.G.front() >= trace.G.back()) std::reverse(ordered.begin(), ordered.end());
    std::size_t first = 0;
    double below = 0.0;
    if (ordered.front().height < params.pinch_threshold) {
        r.G_off = off_conductance(trace, ordered.front().v_start, ordered.front().v_end);
        below = *r.G_off;
        first = 1;
    }
    auto crossing = [&](double threshold) -> std::optional<double> {
        try {
            return pinch_off(trace, threshold);
        } catch (const NotFoundError&) {
            return std::nullopt;
        }
    };
    if (first < ordered.size()) {
        r.H1 = ordered[first].height;
        r.V_p1 = crossing(0.5 * (below + *r.H1));
    }
    if (first + 1 < ordered.size()) {
        r.H2 = ordered[first + 1].height;
        r.V_p2 = crossing(0.5 * (*r.H1 + *r.H2));
    }
    return r;
}

}  // namespace sqpc::sweep
