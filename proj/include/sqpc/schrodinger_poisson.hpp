#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sqpc/core_model.hpp"

namespace sqpc::band {

/// Uniform grid along the growth direction, x = 0 at the wafer surface.
struct Grid1D {
    std::vector<double> positions;   // nm
    double spacing = 0.0;            // nm

    static Grid1D uniform(double length, double spacing);
    std::size_t size() const { return positions.size(); }
    void validate() const;
};

/// Material parameters sampled on a grid. Node quantities are averages of the
/// two adjacent half cells; mass and permittivity live on the n-1 half points
/// so that layer interfaces falling on nodes are represented exactly.
struct MaterialProfile {
    std::vector<double> cb_offset;   // meV, nodes
    std::vector<double> doping;      // nm^-3, nodes
    std::vector<double> mass_half;   // m_e, half points
    std::vector<double> eps_half;    // half points
};

MaterialProfile sample_wafer(const WaferStack& wafer, const Grid1D& grid);

struct Eigenpair {
    double energy = 0.0;              // meV
    std::vector<double> envelope;     // nm^-1/2, sum |psi|^2 * h = 1
};

/// Lowest `n_states` eigenpairs of the BenDaniel-Duke effective-mass
/// Hamiltonian with psi = 0 one step outside both ends of the grid.
/// `potential` is sampled on nodes, `mass_half` on the n-1 half points.
std::vector<Eigenpair> solve_schrodinger_1d(std::span<const double> potential,
                                            std::span<const double> mass_half,
                                            const Grid1D& grid, int n_states);

struct PoissonBoundary {
    enum class Kind { dirichlet, neumann };
    Kind kind = Kind::neumann;
    double value = 0.0;   // potential energy (meV) or eps_r * dU/dx (meV/nm)

    static PoissonBoundary dirichlet(double u) { return {Kind::dirichlet, u}; }
    static PoissonBoundary neumann(double flux = 0.0) { return {Kind::neumann, flux}; }
};

/// Solves d/dx(eps_r dU/dx) = C * charge for the electron potential energy
/// U = -e*phi in meV. `charge` is the net positive charge density in nm^-3 on nodes.
std::vector<double> solve_poisson_1d(std::span<const double> charge,
                                     std::span<const double> eps_half,
                                     const Grid1D& grid,
                                     PoissonBoundary left, PoissonBoundary right);

/// Surface charge (nm^-2) implied at the left boundary by a potential profile:
/// the amount of positive sheet charge that closes the discrete Gauss law.
double boundary_charge(std::span<const double> potential, std::span<const double> charge,
                       std::span<const double> eps_half, const Grid1D& grid);

/// 2D subband occupation at temperature T: sheet density per subband (nm^-2)
/// for a subband with mass m at energy e relative to the Fermi level fermi.
double subband_sheet_density(double energy, double fermi, double temperature, double mass);

/// Electron density (nm^-3) on nodes from the occupied subbands. Each state's
/// in-plane mass is its probability-weighted average of `mass_half`.
std::vector<double> compute_density(const std::vector<Eigenpair>& states, double fermi,
                                    double temperature, std::span<const double> mass_half,
                                    const Grid1D& grid);

/// Trapezoidal integral of a node profile over the grid.
double integrate(std::span<const double> values, const Grid1D& grid);

struct BandProfile {
    Grid1D grid;
    std::vector<double> cb_edge;         // meV, Fermi level at 0
    std::vector<double> density;         // m^-3
    double sheet_density = 0.0;          // m^-2
    std::vector<Eigenpair> eigenstates;  // envelopes span the full grid
    std::vector<double> donors;          // m^-3, ionized donors
    double surface_charge = 0.0;         // m^-2
    int iterations = 0;
    std::vector<double> residual_history;
};

enum class InitialGuess { flat_band, donor_screened };

struct BandOptions {
    double spacing = 0.5;          // nm
    int n_states = 8;
    int max_iterations = 500;
    InitialGuess initial = InitialGuess::flat_band;
    double window_padding = 100.0; // nm below the well kept in the quantum region
};

/// Self-consistent Schrodinger-Poisson fixed point (Hartree, full donor
/// ionization, pinned surface, field-free deep boundary). Each outer step
/// solves the nonlinear Poisson equation with the subband occupations
/// frozen up to a rigid local potential shift and mixes the result linearly.
/// Throws ConvergenceError carrying the density-change history.
BandProfile self_consistent_band(const WaferStack& wafer, double temperature, double mixing,
                                 double tol, const BandOptions& options = {});

/// Index range [begin, end) of the quantum region: from the surface to
/// `padding` nm below the deepest layer with the lowest conduction-band offset.
std::pair<std::size_t, std::size_t> quantum_window(const WaferStack& wafer, const Grid1D& grid,
                                                   double padding);

}  // namespace sqpc::band
