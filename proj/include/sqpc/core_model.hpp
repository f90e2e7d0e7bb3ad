#pragma once

#include <optional>
#include <string>
#include <vector>

namespace sqpc {

struct MaterialParams {
    std::string name;
    double m_eff = 0.037;      // units of m_e
    double cb_offset = 0.0;    // meV, relative to the In0.75Ga0.25As well
    double eps_r = 14.6;

    void validate() const;
};

namespace materials {
MaterialParams in075ga025as();
MaterialParams in075al025as();
/// Bottom end of the compositionally graded InAlAs buffer (GaAs-matched side).
MaterialParams in010al090as();
MaterialParams gaas();
MaterialParams alas();
}  // namespace materials

/// One epitaxial layer. A graded layer interpolates linearly from `material`
/// at its top face to `grade_to` at its bottom face.
struct Layer {
    MaterialParams material;
    double thickness = 0.0;    // nm
    double doping = 0.0;       // ionized donors, m^-3
    std::optional<MaterialParams> grade_to;
};

/// Layers are listed from the surface downward (reverse growth order); the
/// substrate itself is not part of the stack.
struct WaferStack {
    std::vector<Layer> layers;
    double surface_pinning = 200.0;   // conduction-band edge at the surface, meV above E_F

    void validate() const;
    double total_thickness() const;
};

enum class Interfaces { one, two };

struct DeviceGeometry {
    double L_c = 400.0;     // constriction (gate) length, nm
    double W_c = 100.0;     // gap between split gates, nm
    double L_J = 1.4;       // junction length, um
    double W_J = 5.0;       // junction width, um
    double depth = 122.0;   // 2DEG depth below surface, nm
    Interfaces interfaces = Interfaces::two;
    double Z = 0.0;         // interface barrier strength

    void validate() const;
};

struct Derived2DEG {
    double n_s = 0.0;        // m^-2
    double mu_e = 0.0;       // cm^2/Vs, provenance only
    double k_F = 0.0;        // m^-1
    double lambda_F = 0.0;   // nm
    double v_F = 0.0;        // m/s
    double E_F = 0.0;        // meV above band bottom
    double xi_0 = 0.0;       // nm
};

/// Fermi-surface quantities of a spin-degenerate parabolic 2DEG.
/// Throws DomainError naming the offending input when one is non-positive.
Derived2DEG derive_2deg_parameters(double n_s, double m_eff, double delta_0, double mu_e = 0.0);

/// floor(2 * width / lambda_F): number of transverse modes fitting in a hard-wall channel.
int estimate_mode_count(double width, double lambda_F);

struct SweepRange {
    double start = 0.0;
    double stop = 0.0;
    double step = 0.0;   // magnitude; direction follows start -> stop

    void validate(const std::string& what) const;
    std::vector<double> values() const;
};

enum class TransportModel { analytic, bdg, series };

std::string to_string(TransportModel m);
TransportModel transport_model_from_string(const std::string& s);

struct PhysicsParams {
    double n_s = 2.24e15;         // m^-2
    double mu_e = 2.5e5;          // cm^2/Vs
    double m_eff = 0.037;
    double delta_0 = 1.4;         // meV, bulk Nb scale
    double gap_scale = 1.0;       // induced-gap reduction factor applied to delta_0
    double B_c = 1.7;             // T
    double temperature = 0.28;    // K
    double lattice_a = 6.0;       // nm
    bool orbital = true;          // Peierls phases in the lattice; false keeps only Delta(B)
};

struct GateParams {
    double lever = 0.005;         // linear screening factor on the bare gate potential
    double sim_width = 0.0;       // nm; 0 selects W_c + 200 nm
    double margin = 0.0;          // nm on each side of the gates; 0 selects 2 * depth
    double disorder = 0.0;        // meV, uniform onsite disorder amplitude
    unsigned long long seed = 1;
};

struct SweepParams {
    SweepRange gate{0.0, -6.6, 0.01};
    SweepRange field{0.0, 0.0, 0.1};
    TransportModel model = TransportModel::analytic;
    bool thermal = false;
    int energy_points = 41;       // E-grid size for thermal smearing
};

struct AnalysisParams {
    double slope_eps = 0.5;       // G0/V
    double min_width = 0.03;      // V
    double pinch_threshold = 0.05;   // G0
};

struct SimulationConfig {
    DeviceGeometry device;
    std::optional<int> device_index;
    WaferStack wafer;
    PhysicsParams physics;
    GateParams gates;
    SweepParams sweep;
    AnalysisParams analysis;

    /// Effective pairing amplitude used by the transport solvers.
    double delta() const { return physics.delta_0 * physics.gap_scale; }
    Derived2DEG derived() const;
    double sim_width() const;
    double margin() const;
    void validate() const;
};

/// The heterostructure of the InGaAs/InAlAs wafer with the calibrated donor density.
WaferStack calibrated_wafer();

/// Donor density (m^-3) of the 15 nm modulation-doped layer that reproduces
/// an integrated sheet density of 2.1e11 cm^-2 with the default band parameters.
inline constexpr double calibrated_donor_density = 5.48e23;

/// Preset device by index 1..8. Interfaces default to two (a contact on each side).
DeviceGeometry preset_device(int index);

SimulationConfig default_config();

}  // namespace sqpc
