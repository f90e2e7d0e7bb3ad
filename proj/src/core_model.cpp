#include "sqpc/core_model.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "sqpc/errors.hpp"
#include "sqpc/units.hpp"

namespace sqpc {

namespace {

void require_positive(double value, const char* field) {
    if (!(value > 0.0) || !std::isfinite(value)) {
        std::ostringstream os;
        os << field << " > 0 required (got " << value << ")";
        throw DomainError(os.str());
    }
}

}  // namespace

void MaterialParams::validate() const {
    if (!(m_eff > 0.0)) throw DomainError("material " + name + ": m_eff > 0 required");
    if (!(eps_r >= 1.0)) throw DomainError("material " + name + ": eps_r >= 1 required");
}

namespace materials {

// Literature values; conduction-band offsets are effective (strain absorbed).
MaterialParams in075ga025as() { return {"In0.75Ga0.25As", 0.037, 0.0, 14.6}; }
MaterialParams in075al025as() { return {"In0.75Al0.25As", 0.050, 520.0, 13.9}; }
MaterialParams in010al090as() { return {"In0.10Al0.90As", 0.120, 1000.0, 10.6}; }
MaterialParams gaas() { return {"GaAs", 0.067, 500.0, 12.9}; }
MaterialParams alas() { return {"AlAs", 0.150, 1000.0, 10.1}; }

}  // namespace materials

void WaferStack::validate() const {
    if (layers.empty()) throw DomainError("wafer: at least one layer required");
    for (const auto& layer : layers) {
        layer.material.validate();
        if (layer.grade_to) layer.grade_to->validate();
        if (!(layer.thickness > 0.0))
            throw DomainError("wafer layer " + layer.material.name + ": thickness > 0 required");
        if (layer.doping < 0.0)
            throw DomainError("wafer layer " + layer.material.name + ": doping >= 0 required");
    }
}

double WaferStack::total_thickness() const {
    double total = 0.0;
    for (const auto& layer : layers) total += layer.thickness;
    return total;
}

void DeviceGeometry::validate() const {
    if (!(L_c > 0.0)) throw DomainError("L_c > 0 required");
    if (!(W_c > 0.0)) throw DomainError("W_c > 0 required");
    if (!(L_J > 0.0)) throw DomainError("L_J > 0 required");
    if (!(W_J > 0.0)) throw DomainError("W_J > 0 required");
    if (!(depth > 0.0)) throw DomainError("depth > 0 required");
    if (!(Z >= 0.0)) throw DomainError("Z >= 0 required");
}

Derived2DEG derive_2deg_parameters(double n_s, double m_eff, double delta_0, double mu_e) {
    require_positive(n_s, "n_s");
    require_positive(m_eff, "m_eff");
    require_positive(delta_0, "delta_0");

    Derived2DEG d;
    d.n_s = n_s;
    d.mu_e = mu_e;
    d.k_F = std::sqrt(2.0 * units::pi * n_s);
    d.lambda_F = 2.0 * units::pi / d.k_F * 1e9;
    const double k_nm = d.k_F * 1e-9;
    d.E_F = units::hbar2_over_2me * k_nm * k_nm / m_eff;
    d.v_F = units::hbar_si * d.k_F / (m_eff * units::m_e_si);
    const double delta_j = delta_0 / units::mev_per_joule;
    d.xi_0 = units::hbar_si * d.v_F / (2.0 * units::pi * delta_j) * 1e9;
    return d;
}

int estimate_mode_count(double width, double lambda_F) {
    require_positive(width, "width");
    require_positive(lambda_F, "lambda_F");
    return static_cast<int>(std::floor(2.0 * width / lambda_F));
}

void SweepRange::validate(const std::string& what) const {
    if (!(step > 0.0)) throw DomainError(what + ": step > 0 required");
    if (!std::isfinite(start) || !std::isfinite(stop)) throw DomainError(what + ": finite bounds required");
}

std::vector<double> SweepRange::values() const {
    validate("sweep range");
    const double span = stop - start;
    const auto n = static_cast<long>(std::floor(std::abs(span) / step + 1e-9));
    const double dir = span < 0.0 ? -1.0 : 1.0;
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(n + 1));
    for (long i = 0; i <= n; ++i) out.push_back(start + dir * step * static_cast<double>(i));
    return out;
}

std::string to_string(TransportModel m) {
    switch (m) {
        case TransportModel::analytic: return "analytic";
        case TransportModel::bdg: return "bdg";
        case TransportModel::series: return "series";
    }
    return "analytic";
}

TransportModel transport_model_from_string(const std::string& s) {
    if (s == "analytic") return TransportModel::analytic;
    if (s == "bdg") return TransportModel::bdg;
    if (s == "series") return TransportModel::series;
    throw ConfigError("model must be one of analytic|bdg|series (got '" + s + "')");
}

Derived2DEG SimulationConfig::derived() const {
    if (physics.delta_0 > 0.0) return derive_2deg_parameters(physics.n_s, physics.m_eff, physics.delta_0, physics.mu_e);
    // Normal-state run: no coherence length.
    auto d = derive_2deg_parameters(physics.n_s, physics.m_eff, 1.0, physics.mu_e);
    d.xi_0 = std::numeric_limits<double>::infinity();
    return d;
}

double SimulationConfig::sim_width() const {
    return gates.sim_width > 0.0 ? gates.sim_width : device.W_c + 200.0;
}

double SimulationConfig::margin() const {
    return gates.margin > 0.0 ? gates.margin : 2.0 * device.depth;
}

void SimulationConfig::validate() const {
    device.validate();
    wafer.validate();
    require_positive(physics.n_s, "n_s");
    require_positive(physics.m_eff, "m_eff");
    if (!(physics.delta_0 >= 0.0)) throw DomainError("delta_0 >= 0 required");
    if (!(physics.gap_scale >= 0.0)) throw DomainError("gap_scale >= 0 required");
    require_positive(physics.B_c, "B_c");
    require_positive(physics.temperature, "temperature");
    require_positive(physics.lattice_a, "lattice_a");
    const auto d = derived();
    if (physics.lattice_a > d.lambda_F / 8.0) {
        std::ostringstream os;
        os << "lattice_a <= lambda_F/8 required (lattice_a = " << physics.lattice_a
           << " nm, lambda_F/8 = " << d.lambda_F / 8.0 << " nm)";
        throw ConfigError(os.str());
    }
    require_positive(gates.lever, "lever");
    if (gates.sim_width < 0.0) throw DomainError("sim_width >= 0 required");
    if (gates.margin < 0.0) throw DomainError("margin >= 0 required");
    if (gates.disorder < 0.0) throw DomainError("disorder >= 0 required");
    sweep.gate.validate("gate sweep");
    sweep.field.validate("field sweep");
    if (sweep.energy_points < 3) throw DomainError("energy_points >= 3 required");
    require_positive(analysis.slope_eps, "slope_eps");
    require_positive(analysis.min_width, "min_width");
    require_positive(analysis.pinch_threshold, "pinch_threshold");
}

WaferStack calibrated_wafer() {
    using namespace materials;
    WaferStack w;
    w.surface_pinning = 200.0;
    w.layers = {
        {in075ga025as(), 2.0, 0.0, std::nullopt},        // cap
        {in075al025as(), 45.0, 0.0, std::nullopt},       // spacer
        {in075al025as(), 15.0, calibrated_donor_density, std::nullopt},   // Si-doped
        {in075al025as(), 60.0, 0.0, std::nullopt},       // spacer
        {in075ga025as(), 30.0, 0.0, std::nullopt},       // quantum well
        {in075al025as(), 250.0, 0.0, std::nullopt},      // buffer
        {in075al025as(), 1300.0, 0.0, in010al090as()},   // linearly graded buffer
        {gaas(), 250.0, 0.0, std::nullopt},
        {alas(), 70.0, 0.0, std::nullopt},
        {gaas(), 50.0, 0.0, std::nullopt},
    };
    return w;
}

DeviceGeometry preset_device(int index) {
    if (index < 1 || index > 8) throw ConfigError("device index must be in 1..8");
    static constexpr double widths[8] = {400, 300, 200, 100, 100, 100, 100, 100};
    DeviceGeometry g;
    g.L_c = 400.0;
    g.W_c = widths[index - 1];
    g.L_J = index == 8 ? 3.2 : 1.4;
    g.W_J = 5.0;
    g.depth = 122.0;
    g.interfaces = Interfaces::two;
    g.Z = 0.0;
    return g;
}

SimulationConfig default_config() {
    SimulationConfig c;
    c.device = preset_device(5);
    c.device_index = 5;
    c.wafer = calibrated_wafer();
    return c;
}

}  // namespace sqpc
