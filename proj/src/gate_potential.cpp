#include "sqpc/gate_potential.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "sqpc/errors.hpp"
#include "sqpc/units.hpp"

namespace sqpc::gates {

void GateRect::validate() const {
    if (!(x_min < x_max) || !(y_min < y_max)) {
        std::ostringstream os;
        os << "gate rectangle: x_min < x_max and y_min < y_max required (got [" << x_min << ", "
           << x_max << "] x [" << y_min << ", " << y_max << "])";
        throw DomainError(os.str());
    }
    if (source != 1 && source != 2) throw DomainError("gate rectangle: source must be 1 or 2");
}

Grid2D Grid2D::centered(std::size_t nx, std::size_t ny, double a) {
    if (nx == 0 || ny == 0 || !(a > 0.0)) throw DomainError("grid: nx, ny >= 1 and a > 0 required");
    Grid2D g;
    g.x.resize(nx);
    g.y.resize(ny);
    for (std::size_t i = 0; i < nx; ++i) g.x[i] = (static_cast<double>(i) - 0.5 * static_cast<double>(nx - 1)) * a;
    for (std::size_t j = 0; j < ny; ++j) g.y[j] = (static_cast<double>(j) - 0.5 * static_cast<double>(ny - 1)) * a;
    return g;
}

double rect_gate_kernel(double u, double v, double d) {
    if (!(d > 0.0)) throw DomainError("gate kernel: depth d > 0 required");
    if (std::isinf(u) || std::isinf(v)) {
        if (u == 0.0 || v == 0.0) return 0.0;
        const double s = (u > 0.0) == (v > 0.0) ? 1.0 : -1.0;
        if (std::isinf(u) && std::isinf(v)) return 0.25 * s;
        // one side infinite: atan(finite / d) / 2 pi
        const double f = std::isinf(u) ? std::abs(v) : std::abs(u);
        return s * std::atan(f / d) / (2.0 * units::pi);
    }
    const double r = std::sqrt(u * u + v * v + d * d);
    return std::atan(u * v / (d * r)) / (2.0 * units::pi);
}

double rect_fraction(const GateRect& rect, double x, double y, double depth) {
    const double u1 = x - rect.x_min, u2 = rect.x_max - x;
    const double v1 = y - rect.y_min, v2 = rect.y_max - y;
    return rect_gate_kernel(u1, v1, depth) + rect_gate_kernel(u1, v2, depth) +
           rect_gate_kernel(u2, v1, depth) + rect_gate_kernel(u2, v2, depth);
}

std::vector<GateRect> split_gate_layout(const DeviceGeometry& geometry) {
    geometry.validate();
    const double half_l = 0.5 * geometry.L_c;
    const double edge = 0.5 * geometry.W_J * 1000.0;
    const double gap = 0.5 * geometry.W_c;
    if (!(edge > gap)) throw ConfigError("split gate: W_J must exceed W_c");
    return {{-half_l, half_l, gap, edge, 1}, {-half_l, half_l, -edge, -gap, 2}};
}

namespace {

void check_layout(const std::vector<GateRect>& layout) {
    if (layout.empty()) throw DomainError("split gate: layout must not be empty");
    for (const auto& r : layout) r.validate();
    for (std::size_t i = 0; i < layout.size(); ++i) {
        for (std::size_t j = i + 1; j < layout.size(); ++j) {
            const auto& a = layout[i];
            const auto& b = layout[j];
            if (a.source == b.source) continue;
            const bool overlap = std::min(a.x_max, b.x_max) > std::max(a.x_min, b.x_min) &&
                                 std::min(a.y_max, b.y_max) > std::max(a.y_min, b.y_min);
            if (overlap) {
                std::ostringstream os;
                os << "split gate: rectangles " << i << " and " << j << " overlap but are driven by different gates";
                throw ConfigError(os.str());
            }
        }
    }
}

double energy_at(const std::vector<GateRect>& layout, double v_g1, double v_g2, double depth, double x,
                 double y, double lever) {
    double phi = 0.0;   // volts
    for (const auto& r : layout) {
        const double v = r.source == 1 ? v_g1 : v_g2;
        if (v != 0.0) phi += v * rect_fraction(r, x, y, depth);
    }
    return -1000.0 * lever * phi;
}

}  // namespace

double gate_energy(const std::vector<GateRect>& layout, double v_g1, double v_g2, double depth, double x,
                   double y, double lever) {
    check_layout(layout);
    if (!(depth > 0.0)) throw DomainError("split gate: depth > 0 required");
    return energy_at(layout, v_g1, v_g2, depth, x, y, lever);
}

PotentialField split_gate_potential(const std::vector<GateRect>& layout, double v_g1, double v_g2,
                                    double depth, const Grid2D& grid, double lever) {
    check_layout(layout);
    if (!(depth > 0.0)) throw DomainError("split gate: depth > 0 required");
    if (!(lever > 0.0)) throw DomainError("split gate: lever > 0 required");
    PotentialField f;
    f.grid = grid;
    f.depth = depth;
    f.energy.resize(grid.nx() * grid.ny());
    for (std::size_t i = 0; i < grid.nx(); ++i)
        for (std::size_t j = 0; j < grid.ny(); ++j)
            f.energy[i * grid.ny() + j] = energy_at(layout, v_g1, v_g2, depth, grid.x[i], grid.y[j], lever);
    return f;
}

PotentialField constriction_profile(const DeviceGeometry& geometry, double v_g, const Grid2D& grid,
                                    double lever) {
    return split_gate_potential(split_gate_layout(geometry), v_g, v_g, geometry.depth, grid, lever);
}

SaddleFit fit_saddle(const DeviceGeometry& geometry, double v_g, double lever, double m_eff) {
    if (!(m_eff > 0.0)) throw DomainError("saddle fit: m_eff > 0 required");
    const auto layout = split_gate_layout(geometry);
    const double d = geometry.depth;
    auto u = [&](double x, double y) { return energy_at(layout, v_g, v_g, d, x, y, lever); };
    // The potential varies on the scale of the depth; h = d/50 keeps the
    // truncation error of the second difference near 1e-4 relative.
    const double h = d / 50.0;
    SaddleFit s;
    s.V0 = u(0.0, 0.0);
    s.curvature_x = (u(h, 0.0) - 2.0 * s.V0 + u(-h, 0.0)) / (h * h);
    s.curvature_y = (u(0.0, h) - 2.0 * s.V0 + u(0.0, -h)) / (h * h);
    const double kinetic = units::hbar2_over_2me / m_eff;
    s.hbar_omega_x = std::sqrt(2.0 * kinetic * std::abs(s.curvature_x));
    s.hbar_omega_y = std::sqrt(2.0 * kinetic * std::abs(s.curvature_y));
    return s;
}

void write_potential_csv(const PotentialField& field, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << "x[nm],y[nm],U[meV]\n";
    char buf[96];
    for (std::size_t i = 0; i < field.grid.nx(); ++i) {
        for (std::size_t j = 0; j < field.grid.ny(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", field.grid.x[i], field.grid.y[j], field.at(i, j));
            out << buf;
        }
    }
    if (!out) throw IoError("write failed for " + path);
}

}  // namespace sqpc::gates
