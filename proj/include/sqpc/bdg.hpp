#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "sqpc/core_model.hpp"
#include "sqpc/gate_potential.hpp"

namespace sqpc::bdg {

using cplx = std::complex<double>;

enum class LeadKind { normal, superconducting };
enum class Side { left, right };
enum class Particle { electron, hole };

/// Square tight-binding lattice of the scattering region. Slices run along x
/// (transport); each slice holds ny sites with hard walls beyond both ends.
/// The left lead is normal. The right lead is semi-infinite and carries the
/// pairing `delta` when superconducting. Both leads are field-free and repeat
/// the potential of the adjacent edge slice.
struct BdGLattice {
    std::size_t nx = 0, ny = 0;
    double a = 0.0;         // nm
    double t = 0.0;         // meV
    double mu = 0.0;        // meV
    double B = 0.0;         // T
    double gauge_y0 = 0.0;  // nm, A_x = -B (y - gauge_y0)
    std::vector<double> onsite;         // electron onsite 4t + V - mu, index ix * ny + iy
    std::vector<double> phase;          // Peierls phase of bond (ix, iy) -> (ix + 1, iy), (nx - 1) * ny
    std::vector<double> left_onsite;    // lead slices, ny each
    std::vector<double> right_onsite;
    LeadKind right_lead = LeadKind::superconducting;
    cplx delta{0.0, 0.0};               // meV, right lead only

    std::size_t orbitals() const { return 2 * nx * ny; }
    /// Pairing per region site: the region is normal, so this is all zero.
    std::vector<cplx> pairing() const { return std::vector<cplx>(nx * ny, cplx{}); }
};

struct LatticeOptions {
    double a = 6.0;
    double m_eff = 0.037;
    double mu = 0.0;              // meV; the 2DEG Fermi energy
    double B = 0.0;
    double delta = 0.0;           // meV, right-lead pairing magnitude
    double delta_phase = 0.0;     // rad
    LeadKind right_lead = LeadKind::superconducting;
    double Z = 0.0;               // barrier on the last slice, 0 = none
    double disorder = 0.0;        // meV, uniform in [-W/2, W/2]
    std::uint64_t seed = 1;
    double gauge_y0 = 0.0;
    double lambda_F = 0.0;        // nm; > 0 enables the a <= lambda_F/8 guard
};

/// hbar^2 / (2 m* a^2) in meV.
double hopping(double a, double m_eff);

/// Flux through one plaquette in units of the phase it imprints: 2 pi B a^2 / Phi0.
double plaquette_phase(double B, double a);

/// Onsite barrier U_b = Z * 2t sin(k a), k the lattice wavevector at energy mu.
double barrier_height(double Z, double t, double mu);

/// Pair potential suppressed by a perpendicular field.
double delta_vs_field(double B, double delta_0, double B_c);

/// Region sites sample `potential` one to one (its grid spacing must equal a).
BdGLattice build_bdg_lattice(const gates::PotentialField& potential, const LatticeOptions& options);

/// Lattice for a device at gate voltage v_g: constriction centred in a strip
/// of the configured width, margins on both sides. `mirrored` flips x, which
/// places the constriction as seen from the other contact.
BdGLattice device_lattice(const SimulationConfig& config, double v_g, double B, LeadKind right_lead,
                          bool mirrored = false);

/// Propagating channels of a lead at energy E for one particle type.
struct LeadModes {
    Eigen::MatrixXd vectors;             // ny x N transverse wavefunctions
    std::vector<double> transverse;      // eigenvalues of the lead slice, meV
    std::vector<double> momenta;         // k a, in (0, pi)
    std::vector<double> velocities;      // hbar v / a in meV, positive for outgoing
    std::size_t count() const { return momenta.size(); }
};

/// Normal-lead channels. Throws DomainError for the right lead when it is
/// superconducting.
LeadModes lead_channels(const BdGLattice& lattice, Side side, double E, Particle p = Particle::electron);

/// Sub-blocks of the left-lead reflection matrix. Indices: (outgoing, incoming).
struct ReflectionBlocks {
    Eigen::MatrixXcd r_ee, r_he, r_eh, r_hh;
    std::size_t n_e() const { return static_cast<std::size_t>(r_ee.cols()); }
    std::size_t n_h() const { return static_cast<std::size_t>(r_hh.cols()); }
};

/// Full scattering matrix. The transmission blocks are empty unless the
/// right lead is normal. Channel order: left electrons, left holes, right
/// electrons, right holes.
struct ScatteringMatrix {
    ReflectionBlocks left;
    Eigen::MatrixXcd S;
    bool has_transmission = false;
};

ScatteringMatrix scattering_matrix(const BdGLattice& lattice, double E);
ReflectionBlocks reflection_matrix(const BdGLattice& lattice, double E);

/// N - Tr(r_ee^+ r_ee) + Tr(r_he^+ r_he) in G0.
double ns_conductance(const ReflectionBlocks& blocks);
/// The same expression built from the hole-sector blocks.
double hole_sector_conductance(const ReflectionBlocks& blocks);

/// Eigenvalues of t^+ t for electrons crossing to a normal right lead.
std::vector<double> transmission_eigenvalues(const BdGLattice& lattice, double E);

}  // namespace sqpc::bdg
