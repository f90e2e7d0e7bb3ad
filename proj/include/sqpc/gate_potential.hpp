#pragma once

#include <string>
#include <vector>

#include "sqpc/core_model.hpp"

namespace sqpc::gates {

/// Surface-plane gate rectangle (nm) driven by control gate 1 or 2.
struct GateRect {
    double x_min = 0.0, x_max = 0.0;
    double y_min = 0.0, y_max = 0.0;
    int source = 1;

    void validate() const;
};

/// Tensor-product sample points in the 2DEG plane (nm). x runs along transport.
struct Grid2D {
    std::vector<double> x, y;

    /// nx * ny points with spacing a, centred on the origin.
    static Grid2D centered(std::size_t nx, std::size_t ny, double a);
    std::size_t nx() const { return x.size(); }
    std::size_t ny() const { return y.size(); }
};

/// Electron potential energy at the 2DEG depth, row-major in x (index ix * ny + iy).
struct PotentialField {
    Grid2D grid;
    double depth = 0.0;
    std::vector<double> energy;   // meV

    double at(std::size_t ix, std::size_t iy) const { return energy[ix * grid.ny() + iy]; }
};

/// Fraction of the gate voltage reaching depth d below the corner of a
/// quarter-plane gate, for a point with in-plane offsets (u, v) inside it.
double rect_gate_kernel(double u, double v, double d);

/// Sum of the four corner kernels: fraction of V_gate seen at (x, y, depth).
double rect_fraction(const GateRect& rect, double x, double y, double depth);

/// The two rectangles of a split gate: length L_c along x, gap W_c, reaching
/// to the junction edges at |y| = W_J / 2. Gate 1 is the upper one.
std::vector<GateRect> split_gate_layout(const DeviceGeometry& geometry);

/// `lever` scales the bare pinned-surface potential (linear 2DEG screening).
PotentialField split_gate_potential(const std::vector<GateRect>& layout, double v_g1, double v_g2,
                                    double depth, const Grid2D& grid, double lever = 1.0);

PotentialField constriction_profile(const DeviceGeometry& geometry, double v_g, const Grid2D& grid,
                                    double lever = 1.0);

/// Electron energy at a single point, same conventions as split_gate_potential.
double gate_energy(const std::vector<GateRect>& layout, double v_g1, double v_g2, double depth,
                   double x, double y, double lever = 1.0);

/// Quadratic expansion of the constriction potential about its centre.
struct SaddleFit {
    double V0 = 0.0;             // meV at the saddle point
    double curvature_x = 0.0;    // d2U/dx2, meV/nm^2 (negative for a barrier)
    double curvature_y = 0.0;    // d2U/dy2, meV/nm^2
    double hbar_omega_x = 0.0;   // meV
    double hbar_omega_y = 0.0;   // meV
};

SaddleFit fit_saddle(const DeviceGeometry& geometry, double v_g, double lever, double m_eff);

/// x, y, energy rows with a header line. Throws IoError on failure.
void write_potential_csv(const PotentialField& field, const std::string& path);

}  // namespace sqpc::gates
