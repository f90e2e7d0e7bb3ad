#pragma once

// Repo-wide unit convention: lengths in nm, energies in meV, fields in T,
// temperatures in K, conductances in units of G0 = 2e^2/h. Densities that
// cross module boundaries are SI (m^-2, m^-3); solvers work in nm^-2/nm^-3.

#include <numbers>

namespace sqpc::units {

inline constexpr double pi = std::numbers::pi;

// CODATA 2018 exact / recommended SI values.
inline constexpr double hbar_si = 1.054571817e-34;      // J s
inline constexpr double h_si = 6.62607015e-34;          // J s
inline constexpr double e_si = 1.602176634e-19;         // C
inline constexpr double m_e_si = 9.1093837015e-31;      // kg
inline constexpr double k_b_si = 1.380649e-23;          // J/K
inline constexpr double eps0_si = 8.8541878128e-12;     // F/m

inline constexpr double mev_per_joule = 1e3 / e_si;

/// hbar^2 / (2 m_e) in meV nm^2 (about 38.0998).
inline constexpr double hbar2_over_2me = hbar_si * hbar_si / (2.0 * m_e_si) * mev_per_joule * 1e18;

/// Boltzmann constant in meV/K.
inline constexpr double k_b = k_b_si * mev_per_joule;

/// Flux quantum h/e in T nm^2.
inline constexpr double flux_quantum = h_si / e_si * 1e18;

/// e/eps0 expressed so that d/dx(eps_r dU/dx) [meV/nm^2] = poisson_coupling * rho [nm^-3].
inline constexpr double poisson_coupling = e_si / eps0_si * 1e12;

inline constexpr double cm2_to_m2 = 1e4;   // n[m^-2] = n[cm^-2] * 1e4
inline constexpr double cm3_to_m3 = 1e6;   // n[m^-3] = n[cm^-3] * 1e6
inline constexpr double m2_to_nm2 = 1e-18;
inline constexpr double m3_to_nm3 = 1e-27;

inline constexpr double thermal_energy(double temperature_k) { return k_b * temperature_k; }

}  // namespace sqpc::units
