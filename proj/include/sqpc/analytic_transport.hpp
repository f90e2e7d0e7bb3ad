#pragma once

#include <span>
#include <vector>

namespace sqpc::analytic {

/// Per-mode transmission probabilities of a constriction.
struct TransmissionSet {
    std::vector<double> T;

    void validate() const;
};

/// Andreev (A), normal reflection (B), electron-like (C) and hole-like (D)
/// transmission probabilities of a BTK interface.
struct BTKCoeffs {
    double A = 0.0, B = 0.0, C = 0.0, D = 0.0;
};

/// Saddle-point constriction: mode n opens around E_F = V0 + hw_y (n + 1/2)
/// with a logistic width set by hw_x. hw_x = 0 gives sharp steps.
TransmissionSet saddle_transmissions(double E_F, double V0, double hbar_omega_x, double hbar_omega_y,
                                     int n_modes);

/// Landauer sum in G0.
double normal_conductance(const TransmissionSet& t);

/// E = Delta returns the E -> Delta from below limit (A = 1, B = 0 for any Z).
BTKCoeffs btk_coefficients(double E, double delta, double Z);

/// Zero-energy NS conductance in G0, sum of 2 T^2 / (2 - T)^2.
double beenakker_ns_conductance(const TransmissionSet& t);

/// Two contacts in series. Zero if either is zero.
double series_nsn(double g_left, double g_right);

/// Transmission of a delta barrier of strength Z.
double barrier_transmission(double Z);

/// Incoherent composition of a mode transmission with a delta barrier.
double combine_transmissions(double t_mode, double t_barrier);

/// BTK conductance (G0) at energy E of modes with transmissions t, each
/// mapped to an effective barrier Z_n^2 = 1/tau_n - 1 after adding the
/// interface barrier Z. Delta = 0 reduces to the normal Landauer sum.
double btk_ns_conductance(const TransmissionSet& t, double E, double delta, double Z);

/// Symmetric energy grid covering +-12 kT.
std::vector<double> thermal_energy_grid(double temperature, int points);

/// Integral of -df/dE G(E) with trapezoid weights, normalized to unit weight
/// on the sampled window. The samples must cover +-10 kT.
double thermal_broaden(std::span<const double> energies, std::span<const double> conductance,
                       double temperature);

}  // namespace sqpc::analytic
