#include "sqpc/schrodinger_poisson.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "sqpc/errors.hpp"
#include "sqpc/units.hpp"

namespace sqpc::band {

namespace {

// Solves a general tridiagonal system in place with partial pivoting
// (LAPACK dgtsv scheme). `sub`, `diag`, `sup` are destroyed. Returns false
// on an exactly singular pivot.
bool solve_tridiagonal(std::vector<double> sub, std::vector<double> diag, std::vector<double> sup,
                       std::vector<double>& rhs) {
    const std::size_t n = diag.size();
    if (n == 0) return true;
    std::vector<double> sup2(n > 2 ? n - 2 : 0, 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (std::abs(diag[i]) >= std::abs(sub[i])) {
            if (diag[i] == 0.0) return false;
            const double fact = sub[i] / diag[i];
            diag[i + 1] -= fact * sup[i];
            rhs[i + 1] -= fact * rhs[i];
        } else {
            const double fact = diag[i] / sub[i];
            diag[i] = sub[i];
            const double temp = diag[i + 1];
            diag[i + 1] = sup[i] - fact * temp;
            if (i + 2 < n) {
                sup2[i] = sup[i + 1];
                sup[i + 1] = -fact * sup2[i];
            }
            sup[i] = temp;
            const double b = rhs[i];
            rhs[i] = rhs[i + 1];
            rhs[i + 1] = b - fact * rhs[i + 1];
        }
    }
    if (diag[n - 1] == 0.0) return false;
    rhs[n - 1] /= diag[n - 1];
    if (n > 1) rhs[n - 2] = (rhs[n - 2] - sup[n - 2] * rhs[n - 1]) / diag[n - 2];
    for (std::size_t k = n - 2; k-- > 0;) {
        rhs[k] = (rhs[k] - sup[k] * rhs[k + 1] - sup2[k] * rhs[k + 2]) / diag[k];
    }
    return true;
}

// Number of eigenvalues of the symmetric tridiagonal (d, e) strictly below x.
std::size_t sturm_count(const std::vector<double>& d, const std::vector<double>& e, double x) {
    constexpr double tiny = 1e-300;
    std::size_t count = 0;
    double q = d[0] - x;
    if (q < 0.0) ++count;
    for (std::size_t i = 1; i < d.size(); ++i) {
        if (q == 0.0) q = tiny;
        q = d[i] - x - e[i - 1] * e[i - 1] / q;
        if (q < 0.0) ++count;
    }
    return count;
}

double softplus(double x) {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double fermi_dirac(double x) {   // 1 / (1 + exp(-x))
    return x > 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

// Material at depth x (nm); graded layers interpolate linearly.
MaterialParams material_at(const WaferStack& wafer, double x, double* doping) {
    double top = 0.0;
    for (std::size_t i = 0; i < wafer.layers.size(); ++i) {
        const auto& layer = wafer.layers[i];
        const bool last = i + 1 == wafer.layers.size();
        if (x < top + layer.thickness || last) {
            *doping = layer.doping * units::m3_to_nm3;
            if (!layer.grade_to) return layer.material;
            const double f = std::clamp((x - top) / layer.thickness, 0.0, 1.0);
            const auto& a = layer.material;
            const auto& b = *layer.grade_to;
            MaterialParams m;
            m.name = a.name + "->" + b.name;
            m.m_eff = a.m_eff + f * (b.m_eff - a.m_eff);
            m.cb_offset = a.cb_offset + f * (b.cb_offset - a.cb_offset);
            m.eps_r = a.eps_r + f * (b.eps_r - a.eps_r);
            return m;
        }
        top += layer.thickness;
    }
    *doping = 0.0;
    return wafer.layers.back().material;
}

struct LinearOperator {
    // Tridiagonal discretisation of d/dx(eps dU/dx) integrated over node cells.
    std::vector<double> sub, diag, sup, cell;
};

LinearOperator poisson_operator(std::span<const double> eps_half, const Grid1D& grid,
                                PoissonBoundary left, PoissonBoundary right) {
    const std::size_t n = grid.size();
    const double h = grid.spacing;
    LinearOperator op;
    op.sub.assign(n - 1, 0.0);
    op.sup.assign(n - 1, 0.0);
    op.diag.assign(n, 0.0);
    op.cell.assign(n, h);
    op.cell.front() = op.cell.back() = 0.5 * h;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double c = eps_half[i] / h;
        op.diag[i] -= c;
        op.diag[i + 1] -= c;
        op.sup[i] += c;
        op.sub[i] += c;
    }
    if (left.kind == PoissonBoundary::Kind::dirichlet) {
        op.diag[0] = 1.0;
        op.sup[0] = 0.0;
    }
    if (right.kind == PoissonBoundary::Kind::dirichlet) {
        op.diag[n - 1] = 1.0;
        op.sub[n - 2] = 0.0;
    }
    return op;
}

std::vector<double> poisson_rhs(std::span<const double> charge, const LinearOperator& op,
                                PoissonBoundary left, PoissonBoundary right) {
    const std::size_t n = op.diag.size();
    std::vector<double> rhs(n);
    for (std::size_t i = 0; i < n; ++i) rhs[i] = units::poisson_coupling * charge[i] * op.cell[i];
    if (left.kind == PoissonBoundary::Kind::dirichlet) rhs[0] = left.value;
    else rhs[0] += left.value;        // -(-flux) moved to the right-hand side
    if (right.kind == PoissonBoundary::Kind::dirichlet) rhs[n - 1] = right.value;
    else rhs[n - 1] -= right.value;
    return rhs;
}

void check_sizes(std::size_t nodes, std::size_t half, std::size_t grid, const char* what) {
    if (nodes != grid || half + 1 != grid) {
        std::ostringstream os;
        os << what << ": profile sizes do not match grid (" << nodes << " nodes, " << half
           << " half points, grid " << grid << ")";
        throw DomainError(os.str());
    }
}

}  // namespace

Grid1D Grid1D::uniform(double length, double spacing) {
    if (!(length > 0.0) || !(spacing > 0.0)) throw DomainError("grid: length and spacing must be > 0");
    const auto cells = std::max<long>(1, std::lround(length / spacing));
    Grid1D g;
    g.spacing = length / static_cast<double>(cells);
    g.positions.resize(static_cast<std::size_t>(cells) + 1);
    for (long i = 0; i <= cells; ++i) g.positions[static_cast<std::size_t>(i)] = g.spacing * static_cast<double>(i);
    return g;
}

void Grid1D::validate() const {
    if (positions.size() < 2) throw DomainError("grid: at least two points required");
    if (!(spacing > 0.0)) throw DomainError("grid: spacing > 0 required");
    for (std::size_t i = 1; i < positions.size(); ++i) {
        const double d = positions[i] - positions[i - 1];
        if (!(d > 0.0)) throw DomainError("grid: positions must be strictly increasing");
        if (std::abs(d - spacing) > 1e-9 * spacing) throw DomainError("grid: spacing must be uniform");
    }
}

MaterialProfile sample_wafer(const WaferStack& wafer, const Grid1D& grid) {
    wafer.validate();
    grid.validate();
    const std::size_t n = grid.size();
    MaterialProfile p;
    p.mass_half.resize(n - 1);
    p.eps_half.resize(n - 1);
    std::vector<double> offset_half(n - 1), doping_half(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double x = 0.5 * (grid.positions[i] + grid.positions[i + 1]);
        double doping = 0.0;
        const auto m = material_at(wafer, x, &doping);
        p.mass_half[i] = m.m_eff;
        p.eps_half[i] = m.eps_r;
        offset_half[i] = m.cb_offset;
        doping_half[i] = doping;
    }
    p.cb_offset.resize(n);
    p.doping.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t a = i == 0 ? 0 : i - 1;
        const std::size_t b = i + 1 == n ? n - 2 : i;
        p.cb_offset[i] = 0.5 * (offset_half[a] + offset_half[b]);
        p.doping[i] = 0.5 * (doping_half[a] + doping_half[b]);
    }
    return p;
}

std::vector<Eigenpair> solve_schrodinger_1d(std::span<const double> potential,
                                            std::span<const double> mass_half,
                                            const Grid1D& grid, int n_states) {
    grid.validate();
    check_sizes(potential.size(), mass_half.size(), grid.size(), "schrodinger");
    if (n_states < 1) throw DomainError("schrodinger: n_states >= 1 required");
    const std::size_t n = grid.size();
    const double h = grid.spacing;
    const auto wanted = std::min<std::size_t>(static_cast<std::size_t>(n_states), n);

    // Kinetic couplings on half points; psi vanishes one step beyond each end,
    // using the end masses for the two outer half points.
    std::vector<double> kin(n + 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (!(mass_half[i] > 0.0)) throw DomainError("schrodinger: mass > 0 required");
        kin[i + 1] = units::hbar2_over_2me / (mass_half[i] * h * h);
    }
    kin[0] = kin[1];
    kin[n] = kin[n - 1];
    std::vector<double> d(n), e(n - 1);
    for (std::size_t i = 0; i < n; ++i) d[i] = potential[i] + kin[i] + kin[i + 1];
    for (std::size_t i = 0; i + 1 < n; ++i) e[i] = -kin[i + 1];

    double lo = std::numeric_limits<double>::max();
    double hi = std::numeric_limits<double>::lowest();
    for (std::size_t i = 0; i < n; ++i) {
        const double r = (i > 0 ? std::abs(e[i - 1]) : 0.0) + (i + 1 < n ? std::abs(e[i]) : 0.0);
        lo = std::min(lo, d[i] - r);
        hi = std::max(hi, d[i] + r);
    }
    const double scale = std::max({std::abs(lo), std::abs(hi), 1.0});

    std::vector<Eigenpair> out;
    out.reserve(wanted);
    for (std::size_t k = 0; k < wanted; ++k) {
        double a = lo, b = hi;
        for (int it = 0; it < 200 && b - a > 4.0 * std::numeric_limits<double>::epsilon() * scale; ++it) {
            const double mid = 0.5 * (a + b);
            if (sturm_count(d, e, mid) > k) b = mid;
            else a = mid;
        }
        const double lambda = 0.5 * (a + b);

        // Inverse iteration from a deterministic start vector.
        std::vector<double> v(n);
        for (std::size_t i = 0; i < n; ++i) v[i] = 1.0 + 0.1 * std::sin(0.7 * static_cast<double>(i) + 0.3 * static_cast<double>(k));
        const double shift = lambda + 1e-12 * scale;
        for (int it = 0; it < 4; ++it) {
            std::vector<double> diag(n);
            for (std::size_t i = 0; i < n; ++i) diag[i] = d[i] - shift;
            if (!solve_tridiagonal(e, diag, e, v)) {
                for (std::size_t i = 0; i < n; ++i) diag[i] = d[i] - shift * (1.0 + 1e-10);
                solve_tridiagonal(e, diag, e, v);
            }
            for (const auto& prev : out) {
                double dot = 0.0;
                for (std::size_t i = 0; i < n; ++i) dot += prev.envelope[i] * v[i] * h;
                for (std::size_t i = 0; i < n; ++i) v[i] -= dot * prev.envelope[i];
            }
            double norm = 0.0;
            for (double x : v) norm += x * x;
            norm = std::sqrt(norm);
            if (!(norm > 0.0) || !std::isfinite(norm)) throw NumericError("schrodinger: inverse iteration collapsed", norm);
            for (double& x : v) x /= norm;
        }
        // Residual ||T v - lambda v|| with unit-norm v.
        double res = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double tv = d[i] * v[i];
            if (i > 0) tv += e[i - 1] * v[i - 1];
            if (i + 1 < n) tv += e[i] * v[i + 1];
            res = std::max(res, std::abs(tv - lambda * v[i]));
        }
        if (res > 1e-7 * scale) {
            std::ostringstream os;
            os << "schrodinger: eigenpair " << k << " did not converge (residual " << res << " meV)";
            throw NumericError(os.str(), res);
        }
        const auto peak = std::max_element(v.begin(), v.end(), [](double x, double y) { return std::abs(x) < std::abs(y); });
        const double sign = *peak < 0.0 ? -1.0 : 1.0;
        const double norm = sign / std::sqrt(h);
        for (double& x : v) x *= norm;
        out.push_back({lambda, std::move(v)});
    }
    return out;
}

std::vector<double> solve_poisson_1d(std::span<const double> charge, std::span<const double> eps_half,
                                     const Grid1D& grid, PoissonBoundary left, PoissonBoundary right) {
    grid.validate();
    check_sizes(charge.size(), eps_half.size(), grid.size(), "poisson");
    if (left.kind == PoissonBoundary::Kind::neumann && right.kind == PoissonBoundary::Kind::neumann)
        throw ConfigError("poisson: at least one Dirichlet (pinned) boundary is required");
    auto op = poisson_operator(eps_half, grid, left, right);
    auto rhs = poisson_rhs(charge, op, left, right);
    if (!solve_tridiagonal(op.sub, op.diag, op.sup, rhs))
        throw NumericError("poisson: singular system", 0.0);
    return rhs;
}

double boundary_charge(std::span<const double> potential, std::span<const double> charge,
                       std::span<const double> eps_half, const Grid1D& grid) {
    const double h = grid.spacing;
    const double flux = eps_half[0] * (potential[1] - potential[0]) / h;
    return flux / units::poisson_coupling - 0.5 * h * charge[0];
}

double subband_sheet_density(double energy, double fermi, double temperature, double mass) {
    if (!(temperature > 0.0)) throw DomainError("density: T > 0 required");
    const double kt = units::thermal_energy(temperature);
    const double dos = mass / (2.0 * units::pi * units::hbar2_over_2me);   // m/(pi hbar^2), nm^-2 meV^-1
    return dos * kt * softplus((fermi - energy) / kt);
}

std::vector<double> compute_density(const std::vector<Eigenpair>& states, double fermi,
                                    double temperature, std::span<const double> mass_half,
                                    const Grid1D& grid) {
    if (!(temperature > 0.0)) throw DomainError("density: T > 0 required");
    const std::size_t n = grid.size();
    std::vector<double> density(n, 0.0);
    for (const auto& s : states) {
        double mass = 0.0, weight = 0.0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const double w = 0.5 * (s.envelope[i] * s.envelope[i] + s.envelope[i + 1] * s.envelope[i + 1]);
            mass += w * mass_half[i];
            weight += w;
        }
        mass = weight > 0.0 ? mass / weight : mass_half[0];
        const double sheet = subband_sheet_density(s.energy, fermi, temperature, mass);
        for (std::size_t i = 0; i < n; ++i) density[i] += s.envelope[i] * s.envelope[i] * sheet;
    }
    return density;
}

double integrate(std::span<const double> values, const Grid1D& grid) {
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < values.size(); ++i) total += 0.5 * (values[i] + values[i + 1]) * grid.spacing;
    return total;
}

std::pair<std::size_t, std::size_t> quantum_window(const WaferStack& wafer, const Grid1D& grid,
                                                   double padding) {
    double min_offset = std::numeric_limits<double>::max();
    for (const auto& l : wafer.layers) {
        min_offset = std::min(min_offset, l.material.cb_offset);
        if (l.grade_to) min_offset = std::min(min_offset, l.grade_to->cb_offset);
    }
    double top = 0.0, bottom = 0.0;
    for (const auto& l : wafer.layers) {
        if (!l.grade_to && l.material.cb_offset == min_offset) bottom = top + l.thickness;
        top += l.thickness;
    }
    if (bottom == 0.0) bottom = top;
    const double end_x = std::min(bottom + padding, grid.positions.back());
    std::size_t end = 0;
    while (end < grid.size() && grid.positions[end] <= end_x + 1e-9) ++end;
    return {0, std::max<std::size_t>(end, 3)};
}

namespace {

struct QuantumState {
    std::vector<Eigenpair> states;   // envelopes on the window
    std::vector<double> masses;
};

// Newton solve of Poisson with electron density n_i(U) from frozen subbands
// rigidly shifted by the local change U - reference.
std::vector<double> predictor_corrector_poisson(const QuantumState& qs, std::size_t window_end,
                                                const std::vector<double>& reference,
                                                const MaterialProfile& mat, const Grid1D& grid,
                                                PoissonBoundary left, double temperature) {
    const std::size_t n = grid.size();
    const double kt = units::thermal_energy(temperature);
    const PoissonBoundary right = PoissonBoundary::neumann();
    const auto op = poisson_operator(mat.eps_half, grid, left, right);
    std::vector<double> dos(qs.states.size());
    for (std::size_t k = 0; k < qs.states.size(); ++k)
        dos[k] = qs.masses[k] / (2.0 * units::pi * units::hbar2_over_2me);

    // -F is the gradient of a convex functional (n(U) decreases with U), so a
    // Newton direction followed by a 1D root search of the directional
    // derivative converges globally despite the near-step occupation at low T.
    std::vector<double> u = reference;
    std::vector<double> dens(n), ddens(n);
    auto residual = [&](const std::vector<double>& v, std::vector<double>& f, std::vector<double>* jd) {
        std::fill(dens.begin(), dens.end(), 0.0);
        std::fill(ddens.begin(), ddens.end(), 0.0);
        for (std::size_t i = 0; i < window_end; ++i) {
            const double shift = v[i] - reference[i];
            for (std::size_t k = 0; k < qs.states.size(); ++k) {
                const double psi2 = qs.states[k].envelope[i] * qs.states[k].envelope[i];
                const double x = -(qs.states[k].energy + shift) / kt;
                dens[i] += psi2 * dos[k] * kt * softplus(x);
                ddens[i] -= psi2 * dos[k] * fermi_dirac(x);
            }
        }
        f.resize(n);
        if (jd) *jd = op.diag;
        for (std::size_t i = 0; i < n; ++i) {
            double lu = op.diag[i] * v[i];
            if (i > 0) lu += op.sub[i - 1] * v[i - 1];
            if (i + 1 < n) lu += op.sup[i] * v[i + 1];
            f[i] = lu - units::poisson_coupling * op.cell[i] * (mat.doping[i] - dens[i]);
            if (jd) (*jd)[i] += units::poisson_coupling * op.cell[i] * ddens[i];
        }
        if (left.kind == PoissonBoundary::Kind::dirichlet) {
            f[0] = v[0] - left.value;
            if (jd) (*jd)[0] = 1.0;
        }
    };
    auto slope = [&](const std::vector<double>& f, const std::vector<double>& dir) {
        double g = 0.0;
        const std::size_t first = left.kind == PoissonBoundary::Kind::dirichlet ? 1 : 0;
        for (std::size_t i = first; i < n; ++i) g -= f[i] * dir[i];
        return g;
    };

    std::vector<double> f, jd, trial(n), ftrial;
    for (int it = 0; it < 200; ++it) {
        residual(u, f, &jd);
        std::vector<double> dir(f);
        for (double& x : dir) x = -x;
        if (!solve_tridiagonal(op.sub, jd, op.sup, dir)) throw NumericError("band: singular Newton system", 0.0);
        double step = 0.0;
        for (double x : dir) step = std::max(step, std::abs(x));
        if (step < 1e-10) break;

        const double g0 = slope(f, dir);
        auto eval = [&](double alpha) {
            for (std::size_t i = 0; i < n; ++i) trial[i] = u[i] + alpha * dir[i];
            residual(trial, ftrial, nullptr);
            return slope(ftrial, dir);
        };
        double alpha = 1.0;
        double g1 = eval(1.0);
        if (g1 > 0.0 && g0 < 0.0) {
            // Illinois regula falsi on the directional derivative over [0, 1].
            double a = 0.0, ga = g0, b = 1.0, gb = g1;
            int side = 0;
            for (int k = 0; k < 60; ++k) {
                alpha = (a * gb - b * ga) / (gb - ga);
                const double g = eval(alpha);
                if (std::abs(g) < 1e-3 * std::abs(g0)) break;
                if (g < 0.0) {
                    a = alpha; ga = g;
                    if (side == -1) gb *= 0.5;
                    side = -1;
                } else {
                    b = alpha; gb = g;
                    if (side == 1) ga *= 0.5;
                    side = 1;
                }
            }
        }
        for (std::size_t i = 0; i < n; ++i) u[i] += alpha * dir[i];
    }
    return u;
}

QuantumState solve_quantum(const std::vector<double>& u, const MaterialProfile& mat,
                           const Grid1D& grid, std::size_t window_end, int n_states) {
    Grid1D w;
    w.spacing = grid.spacing;
    w.positions.assign(grid.positions.begin(), grid.positions.begin() + static_cast<long>(window_end));
    std::vector<double> v(window_end);
    for (std::size_t i = 0; i < window_end; ++i) v[i] = mat.cb_offset[i] + u[i];
    std::span<const double> mass(mat.mass_half.data(), window_end - 1);
    QuantumState qs;
    qs.states = solve_schrodinger_1d(v, mass, w, n_states);
    for (const auto& s : qs.states) {
        double m = 0.0, wsum = 0.0;
        for (std::size_t i = 0; i + 1 < window_end; ++i) {
            const double p = 0.5 * (s.envelope[i] * s.envelope[i] + s.envelope[i + 1] * s.envelope[i + 1]);
            m += p * mass[i];
            wsum += p;
        }
        qs.masses.push_back(wsum > 0.0 ? m / wsum : mass[0]);
    }
    return qs;
}

std::vector<double> quantum_density(const QuantumState& qs, std::size_t n, double temperature) {
    std::vector<double> dens(n, 0.0);
    for (std::size_t k = 0; k < qs.states.size(); ++k) {
        const double sheet = subband_sheet_density(qs.states[k].energy, 0.0, temperature, qs.masses[k]);
        const auto& env = qs.states[k].envelope;
        for (std::size_t i = 0; i < env.size(); ++i) dens[i] += env[i] * env[i] * sheet;
    }
    return dens;
}

}  // namespace

BandProfile self_consistent_band(const WaferStack& wafer, double temperature, double mixing,
                                 double tol, const BandOptions& options) {
    wafer.validate();
    if (!(mixing > 0.0 && mixing <= 1.0)) throw DomainError("band: 0 < mixing <= 1 required");
    if (!(tol > 0.0)) throw DomainError("band: tol > 0 required");
    if (!(temperature > 0.0)) throw DomainError("band: T > 0 required");

    const Grid1D grid = Grid1D::uniform(wafer.total_thickness(), options.spacing);
    const MaterialProfile mat = sample_wafer(wafer, grid);
    const std::size_t n = grid.size();
    const auto [wbegin, wend] = quantum_window(wafer, grid, options.window_padding);
    (void)wbegin;
    const auto left = PoissonBoundary::dirichlet(wafer.surface_pinning - mat.cb_offset[0]);
    const auto right = PoissonBoundary::neumann();

    std::vector<double> u(n, left.value);
    if (options.initial == InitialGuess::donor_screened) {
        // Donors partially screened by an electron slab spread over the quantum window's well.
        double donors = 0.0;
        for (std::size_t i = 0; i < n; ++i) donors += mat.doping[i] * (i == 0 || i + 1 == n ? 0.5 : 1.0) * grid.spacing;
        double min_offset = std::numeric_limits<double>::max();
        for (std::size_t i = 0; i < wend; ++i) min_offset = std::min(min_offset, mat.cb_offset[i]);
        std::vector<double> well;
        for (std::size_t i = wend / 2; i < wend; ++i)
            if (mat.cb_offset[i] == min_offset) well.push_back(static_cast<double>(i));
        std::vector<double> charge(mat.doping);
        if (!well.empty()) {
            const double per_node = 0.8 * donors / (static_cast<double>(well.size()) * grid.spacing);
            for (double idx : well) charge[static_cast<std::size_t>(idx)] -= per_node;
        }
        u = solve_poisson_1d(charge, mat.eps_half, grid, left, right);
    }

    const double floor = 1e-12;   // nm^-3, density scale below which the well counts as empty
    std::vector<double> previous;
    std::vector<double> history;
    QuantumState qs;
    std::vector<double> density;
    bool converged = false;
    int it = 0;
    for (; it < options.max_iterations; ++it) {
        qs = solve_quantum(u, mat, grid, wend, options.n_states);
        density = quantum_density(qs, n, temperature);
        const auto target = predictor_corrector_poisson(qs, wend, u, mat, grid, left, temperature);
        double shift = 0.0;
        for (std::size_t i = 0; i < n; ++i) shift = std::max(shift, std::abs(target[i] - u[i]));
        if (!previous.empty()) {
            double change = 0.0, peak = floor;
            for (std::size_t i = 0; i < n; ++i) {
                change = std::max(change, std::abs(density[i] - previous[i]));
                peak = std::max(peak, std::abs(density[i]));
            }
            history.push_back(change / peak);
            // Damped iteration: stop once the estimated distance to the fixed point is below tol.
            // The potential update must be small too, or an empty well would stop at once.
            if (history.back() < 0.25 * tol * mixing && shift < 1e3 * tol) {
                converged = true;
                break;
            }
        }
        previous = density;
        for (std::size_t i = 0; i < n; ++i) u[i] += mixing * (target[i] - u[i]);
    }
    if (!converged) {
        std::ostringstream os;
        os << "band: no convergence after " << options.max_iterations << " iterations (last change "
           << (history.empty() ? 0.0 : history.back()) << ")";
        throw ConvergenceError(os.str(), history);
    }

    std::vector<double> charge(n);
    for (std::size_t i = 0; i < n; ++i) charge[i] = mat.doping[i] - density[i];
    const auto potential = solve_poisson_1d(charge, mat.eps_half, grid, left, right);

    BandProfile out;
    out.grid = grid;
    out.cb_edge.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.cb_edge[i] = mat.cb_offset[i] + potential[i];
    out.density.resize(n);
    out.donors.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.density[i] = density[i] / units::m3_to_nm3;
        out.donors[i] = mat.doping[i] / units::m3_to_nm3;
    }
    out.sheet_density = integrate(density, grid) / units::m2_to_nm2;
    out.surface_charge = boundary_charge(potential, charge, mat.eps_half, grid) / units::m2_to_nm2;
    for (auto& s : qs.states) {
        s.envelope.resize(n, 0.0);
        out.eigenstates.push_back(std::move(s));
    }
    out.iterations = it + 1;
    out.residual_history = std::move(history);
    return out;
}

}  // namespace sqpc::band
