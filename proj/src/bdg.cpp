#include "sqpc/bdg.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "sqpc/errors.hpp"
#include "sqpc/units.hpp"

namespace sqpc::bdg {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;

double hopping(double a, double m_eff) {
    if (!(a > 0.0) || !(m_eff > 0.0)) throw DomainError("hopping: a > 0 and m_eff > 0 required");
    return units::hbar2_over_2me / (m_eff * a * a);
}

double plaquette_phase(double B, double a) {
    return 2.0 * units::pi * B * a * a / units::flux_quantum;
}

double barrier_height(double Z, double t, double mu) {
    if (!(Z >= 0.0)) throw DomainError("barrier: Z >= 0 required");
    if (!(mu > 0.0 && mu < 4.0 * t)) throw DomainError("barrier: 0 < mu < 4t required for a propagating lattice wave");
    const double ka = std::acos(1.0 - mu / (2.0 * t));
    return Z * 2.0 * t * std::sin(ka);
}

double delta_vs_field(double B, double delta_0, double B_c) {
    if (!(B >= 0.0)) throw DomainError("delta_vs_field: B >= 0 required");
    if (!(B_c > 0.0)) throw DomainError("delta_vs_field: B_c > 0 required");
    const double r = B / B_c;
    return delta_0 * std::max(0.0, 1.0 - r * r);
}

BdGLattice build_bdg_lattice(const gates::PotentialField& potential, const LatticeOptions& o) {
    const auto& g = potential.grid;
    if (g.nx() < 1 || g.ny() < 1) throw DomainError("lattice: empty potential grid");
    if (potential.energy.size() != g.nx() * g.ny()) throw DomainError("lattice: potential size does not match its grid");
    const double t = hopping(o.a, o.m_eff);
    if (o.lambda_F > 0.0 && o.a > o.lambda_F / 8.0 * (1.0 + 1e-12)) {
        std::ostringstream os;
        os << "lattice: a <= lambda_F/8 required (a = " << o.a << " nm, lambda_F/8 = " << o.lambda_F / 8.0 << " nm)";
        throw ConfigError(os.str());
    }
    auto spacing_ok = [&](const std::vector<double>& v) {
        for (std::size_t i = 1; i < v.size(); ++i)
            if (std::abs(std::abs(v[i] - v[i - 1]) - o.a) > 1e-9 * o.a) return false;
        return true;
    };
    if (!spacing_ok(g.x) || !spacing_ok(g.y)) throw DomainError("lattice: potential grid spacing must equal a");
    if (o.disorder < 0.0) throw DomainError("lattice: disorder >= 0 required");

    BdGLattice L;
    L.nx = g.nx();
    L.ny = g.ny();
    L.a = o.a;
    L.t = t;
    L.mu = o.mu;
    L.B = o.B;
    L.gauge_y0 = o.gauge_y0;
    L.right_lead = o.right_lead;
    L.delta = std::polar(o.delta, o.delta_phase);
    L.onsite.resize(L.nx * L.ny);
    for (std::size_t i = 0; i < L.onsite.size(); ++i) L.onsite[i] = 4.0 * t + potential.energy[i] - o.mu;
    L.left_onsite.assign(L.onsite.begin(), L.onsite.begin() + static_cast<long>(L.ny));
    L.right_onsite.assign(L.onsite.end() - static_cast<long>(L.ny), L.onsite.end());

    if (o.disorder > 0.0) {
        std::mt19937_64 rng(o.seed);
        std::uniform_real_distribution<double> dist(-0.5 * o.disorder, 0.5 * o.disorder);
        for (double& e : L.onsite) e += dist(rng);
    }
    if (o.Z > 0.0) {
        const double ub = barrier_height(o.Z, t, o.mu);
        for (std::size_t iy = 0; iy < L.ny; ++iy) L.onsite[(L.nx - 1) * L.ny + iy] += ub;
    }
    // Landau gauge A_x = -B (y - y0); the phase of an x bond is -(2 pi / Phi0) A_x a.
    L.phase.assign((L.nx > 0 ? L.nx - 1 : 0) * L.ny, 0.0);
    if (o.B != 0.0) {
        const double k = 2.0 * units::pi * o.B * o.a / units::flux_quantum;
        for (std::size_t ix = 0; ix + 1 < L.nx; ++ix)
            for (std::size_t iy = 0; iy < L.ny; ++iy) L.phase[ix * L.ny + iy] = k * (g.y[iy] - o.gauge_y0);
    }
    return L;
}

BdGLattice device_lattice(const SimulationConfig& config, double v_g, double B, LeadKind right_lead,
                          bool mirrored) {
    const auto d = config.derived();
    const double a = config.physics.lattice_a;
    const double length = config.device.L_c + 2.0 * config.margin();
    const auto nx = static_cast<std::size_t>(std::max(2L, std::lround(length / a)));
    const auto ny = static_cast<std::size_t>(std::max(1L, std::lround(config.sim_width() / a)));
    auto grid = gates::Grid2D::centered(nx, ny, a);
    if (mirrored)
        for (double& x : grid.x) x = -x;
    const auto field = gates::constriction_profile(config.device, v_g, grid, config.gates.lever);

    LatticeOptions o;
    o.a = a;
    o.m_eff = config.physics.m_eff;
    o.mu = d.E_F;
    o.B = config.physics.orbital ? B : 0.0;
    o.delta = right_lead == LeadKind::superconducting
                  ? delta_vs_field(B, config.delta(), config.physics.B_c)
                  : 0.0;
    o.right_lead = right_lead;
    o.Z = config.device.Z;
    o.disorder = config.gates.disorder;
    o.seed = config.gates.seed;
    o.lambda_F = d.lambda_F;
    return build_bdg_lattice(field, o);
}

namespace {

struct Transverse {
    MatrixXd vectors;
    Eigen::VectorXd values;
};

Transverse transverse_modes(const std::vector<double>& onsite, double t) {
    const auto n = static_cast<Eigen::Index>(onsite.size());
    MatrixXd h = MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        h(i, i) = onsite[static_cast<std::size_t>(i)];
        if (i + 1 < n) h(i, i + 1) = h(i + 1, i) = -t;
    }
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(h);
    return {es.eigenvectors(), es.eigenvalues()};
}

// One transverse mode of a normal lead seen as a 1D chain (onsite eps, hop
// -t for electrons, +t for holes). Sigma is the retarded self-energy.
struct ChainMode {
    cplx sigma;
    double gamma = 0.0;   // -2 Im sigma, zero when evanescent
    double ka = 0.0;
    bool open = false;
};

ChainMode normal_chain(double eps, double E, double t, Particle p) {
    const bool electron = p == Particle::electron;
    const double c = electron ? (eps - E) / (2.0 * t) : (E + eps) / (2.0 * t);
    const double hop = electron ? -t : t;
    ChainMode m;
    if (std::abs(c) < 1.0) {
        const double k = std::acos(c);
        // Outgoing: electrons move with +sin k, holes with -sin k.
        const cplx lambda = electron ? std::polar(1.0, k) : std::polar(1.0, -k);
        m.sigma = hop * lambda;
        m.gamma = 2.0 * t * std::sin(k);
        m.ka = k;
        m.open = true;
    } else {
        const double s = 2.0 * c;
        const double lambda = 0.5 * (s - std::copysign(std::sqrt(s * s - 4.0), s));
        m.sigma = hop * lambda;
    }
    return m;
}

// 2x2 self-energy of one transverse mode of the superconducting lead.
Eigen::Matrix2cd superconducting_chain(double eps, double E, double t, cplx delta) {
    const double d2 = std::norm(delta);
    double e = E;
    if (std::abs(e * e - d2) < 1e-10 * d2) e += (e >= 0.0 ? 1.0 : -1.0) * 1e-6 * std::sqrt(d2);
    const cplx root = std::sqrt(cplx(e * e - d2, 0.0));
    Eigen::Matrix2cd U;
    Eigen::Vector2cd lam;
    for (int b = 0; b < 2; ++b) {
        const cplx eta = b == 0 ? root : -root;
        const cplx s = (eps - eta) / t;
        const cplx disc = std::sqrt(s * s - 4.0);
        const cplx l1 = 0.5 * (s + disc);
        const cplx l2 = 0.5 * (s - disc);
        cplx pick;
        if (std::abs(std::abs(l1) - 1.0) > 1e-9) {
            pick = std::abs(l1) < 1.0 ? l1 : l2;
        } else {
            // Propagating: group velocity ~ (eta / E) Im(lambda) must be positive.
            pick = (eta.real() * l1.imag() / e) > 0.0 ? l1 : l2;
        }
        lam(b) = pick;
        U(0, b) = delta;
        U(1, b) = e - eta;
    }
    const Eigen::Matrix2cd F = U * lam.asDiagonal() * U.inverse();
    Eigen::Matrix2cd V = Eigen::Matrix2cd::Zero();
    V(0, 0) = -t;
    V(1, 1) = t;
    return V * F;
}

void check_energy(double E) {
    if (!std::isfinite(E)) throw DomainError("bdg: finite energy required");
}

MatrixXcd invert(const MatrixXcd& m, const char* what) {
    Eigen::PartialPivLU<MatrixXcd> lu(m);
    const double rc = lu.rcond();
    if (!(rc > 1e-14)) {
        std::ostringstream os;
        os << "bdg: singular " << what << " (condition estimate " << (rc > 0.0 ? 1.0 / rc : INFINITY) << ")";
        throw NumericError(os.str(), rc);
    }
    return lu.inverse();
}

// Region Green's function of one particle sector with only the left lead
// attached, projected on the left channel basis at slice 0.
struct SectorGreen {
    MatrixXcd g00;   // P x P
    MatrixXcd g0n;   // P x ny
    MatrixXcd gn0;   // ny x P
    MatrixXcd gnn;   // ny x ny
};

SectorGreen sector_green(const BdGLattice& L, double E, Particle p, const MatrixXcd& sigma_left,
                         const MatrixXd& proj) {
    const auto ny = static_cast<Eigen::Index>(L.ny);
    const double sign = p == Particle::electron ? 1.0 : -1.0;
    auto slice = [&](std::size_t ix) {
        MatrixXcd m = MatrixXcd::Zero(ny, ny);
        for (Eigen::Index i = 0; i < ny; ++i) {
            m(i, i) = E - sign * L.onsite[ix * L.ny + static_cast<std::size_t>(i)];
            if (i + 1 < ny) m(i, i + 1) = m(i + 1, i) = sign * L.t;   // E - H with H hop -sign t
        }
        return m;
    };
    // x coupling H_{ix, ix+1} = diag(d): -t e^{i phi} for electrons, t e^{-i phi} for holes.
    auto coupling = [&](std::size_t ix) {
        VectorXcd d(ny);
        for (Eigen::Index i = 0; i < ny; ++i) {
            const double ph = L.phase[ix * L.ny + static_cast<std::size_t>(i)];
            d(i) = p == Particle::electron ? -L.t * std::polar(1.0, ph) : L.t * std::polar(1.0, -ph);
        }
        return d;
    };

    MatrixXcd g = invert(slice(0) - sigma_left, "slice matrix");
    SectorGreen out;
    out.g0n = proj.transpose() * g;
    out.gn0 = g * proj;
    out.g00 = proj.transpose() * out.gn0;
    for (std::size_t ix = 1; ix < L.nx; ++ix) {
        const VectorXcd d = coupling(ix - 1);
        MatrixXcd m = slice(ix);
        for (Eigen::Index b = 0; b < ny; ++b)
            for (Eigen::Index a = 0; a < ny; ++a) m(a, b) -= std::conj(d(a)) * g(a, b) * d(b);
        g = invert(m, "slice matrix");
        const MatrixXcd left = out.g0n * d.asDiagonal();
        out.gn0 = g * (d.conjugate().asDiagonal() * out.gn0);
        out.g00 += left * out.gn0;
        out.g0n = left * g;
    }
    out.gnn = g;
    return out;
}

struct LeadData {
    Transverse modes;
    std::vector<ChainMode> e, h;
};

LeadData normal_lead(const std::vector<double>& onsite, double t, double E) {
    LeadData d;
    d.modes = transverse_modes(onsite, t);
    for (Eigen::Index n = 0; n < d.modes.values.size(); ++n) {
        d.e.push_back(normal_chain(d.modes.values(n), E, t, Particle::electron));
        d.h.push_back(normal_chain(d.modes.values(n), E, t, Particle::hole));
    }
    return d;
}

MatrixXcd mode_sum(const MatrixXd& chi, const VectorXcd& diag) {
    return chi * diag.asDiagonal() * chi.transpose();
}

struct Channel {
    Eigen::Index column;   // position in the projected BdG basis
    double gamma;
};

struct Solution {
    MatrixXcd G_LL, G_RL, G_LR, G_RR;   // projected retarded Green's blocks
    std::vector<Channel> left_e, left_h, right_e, right_h;
    bool right_normal = false;
};

Solution solve(const BdGLattice& L, double E) {
    check_energy(E);
    if (L.nx == 0 || L.ny == 0) throw DomainError("bdg: empty lattice");
    const auto ny = static_cast<Eigen::Index>(L.ny);
    const bool s_lead = L.right_lead == LeadKind::superconducting && std::abs(L.delta) > 1e-9;

    const LeadData left = normal_lead(L.left_onsite, L.t, E);
    // Project on transverse modes that are open for either particle type.
    std::vector<Eigen::Index> open;
    for (Eigen::Index n = 0; n < ny; ++n)
        if (left.e[static_cast<std::size_t>(n)].open || left.h[static_cast<std::size_t>(n)].open) open.push_back(n);
    const auto P = static_cast<Eigen::Index>(open.size());
    MatrixXd proj(ny, P);
    for (Eigen::Index k = 0; k < P; ++k) proj.col(k) = left.modes.vectors.col(open[static_cast<std::size_t>(k)]);

    VectorXcd se(ny), sh(ny);
    for (Eigen::Index n = 0; n < ny; ++n) {
        se(n) = left.e[static_cast<std::size_t>(n)].sigma;
        sh(n) = left.h[static_cast<std::size_t>(n)].sigma;
    }
    const SectorGreen ge = sector_green(L, E, Particle::electron, mode_sum(left.modes.vectors, se), proj);
    const SectorGreen gh = sector_green(L, E, Particle::hole, mode_sum(left.modes.vectors, sh), proj);

    // Right lead self-energy on the last slice, BdG ordering (e, h).
    const Transverse right_modes = transverse_modes(L.right_onsite, L.t);
    MatrixXcd sigma_r = MatrixXcd::Zero(2 * ny, 2 * ny);
    std::vector<ChainMode> re, rh;
    if (s_lead) {
        VectorXcd ee(ny), eh(ny), he(ny), hh(ny);
        for (Eigen::Index n = 0; n < ny; ++n) {
            const auto s = superconducting_chain(right_modes.values(n), E, L.t, L.delta);
            ee(n) = s(0, 0);
            eh(n) = s(0, 1);
            he(n) = s(1, 0);
            hh(n) = s(1, 1);
        }
        sigma_r.topLeftCorner(ny, ny) = mode_sum(right_modes.vectors, ee);
        sigma_r.topRightCorner(ny, ny) = mode_sum(right_modes.vectors, eh);
        sigma_r.bottomLeftCorner(ny, ny) = mode_sum(right_modes.vectors, he);
        sigma_r.bottomRightCorner(ny, ny) = mode_sum(right_modes.vectors, hh);
    } else {
        VectorXcd ee(ny), hh(ny);
        for (Eigen::Index n = 0; n < ny; ++n) {
            re.push_back(normal_chain(right_modes.values(n), E, L.t, Particle::electron));
            rh.push_back(normal_chain(right_modes.values(n), E, L.t, Particle::hole));
            ee(n) = re.back().sigma;
            hh(n) = rh.back().sigma;
        }
        sigma_r.topLeftCorner(ny, ny) = mode_sum(right_modes.vectors, ee);
        sigma_r.bottomRightCorner(ny, ny) = mode_sum(right_modes.vectors, hh);
    }

    // Attach the right lead by Dyson's equation on the last slice.
    MatrixXcd g0nn = MatrixXcd::Zero(2 * ny, 2 * ny);
    g0nn.topLeftCorner(ny, ny) = ge.gnn;
    g0nn.bottomRightCorner(ny, ny) = gh.gnn;
    MatrixXcd g0n0 = MatrixXcd::Zero(2 * ny, 2 * P);
    g0n0.topLeftCorner(ny, P) = ge.gn0;
    g0n0.bottomRightCorner(ny, P) = gh.gn0;
    MatrixXcd g00n = MatrixXcd::Zero(2 * P, 2 * ny);
    g00n.topLeftCorner(P, ny) = ge.g0n;
    g00n.bottomRightCorner(P, ny) = gh.g0n;
    MatrixXcd g000 = MatrixXcd::Zero(2 * P, 2 * P);
    g000.topLeftCorner(P, P) = ge.g00;
    g000.bottomRightCorner(P, P) = gh.g00;

    const MatrixXcd K = invert(MatrixXcd::Identity(2 * ny, 2 * ny) - g0nn * sigma_r, "lead coupling matrix");
    const MatrixXcd gn0 = K * g0n0;
    Solution sol;
    sol.G_LL = g000 + g00n * sigma_r * gn0;

    for (Eigen::Index k = 0; k < P; ++k) {
        const auto n = static_cast<std::size_t>(open[static_cast<std::size_t>(k)]);
        if (left.e[n].open) sol.left_e.push_back({k, left.e[n].gamma});
        if (left.h[n].open) sol.left_h.push_back({P + k, left.h[n].gamma});
    }

    if (!s_lead) {
        sol.right_normal = true;
        std::vector<Eigen::Index> ropen;
        for (Eigen::Index n = 0; n < ny; ++n)
            if (re[static_cast<std::size_t>(n)].open || rh[static_cast<std::size_t>(n)].open) ropen.push_back(n);
        const auto R = static_cast<Eigen::Index>(ropen.size());
        MatrixXd rproj(ny, R);
        for (Eigen::Index k = 0; k < R; ++k) rproj.col(k) = right_modes.vectors.col(ropen[static_cast<std::size_t>(k)]);
        MatrixXcd phi_r = MatrixXcd::Zero(2 * ny, 2 * R);
        phi_r.topLeftCorner(ny, R) = rproj.cast<cplx>();
        phi_r.bottomRightCorner(ny, R) = rproj.cast<cplx>();
        const MatrixXcd gnn = K * g0nn;
        sol.G_RL = phi_r.transpose() * gn0;
        sol.G_RR = phi_r.transpose() * gnn * phi_r;
        sol.G_LR = g00n * (MatrixXcd::Identity(2 * ny, 2 * ny) + sigma_r * gnn) * phi_r;
        for (Eigen::Index k = 0; k < R; ++k) {
            const auto n = static_cast<std::size_t>(ropen[static_cast<std::size_t>(k)]);
            if (re[n].open) sol.right_e.push_back({k, re[n].gamma});
            if (rh[n].open) sol.right_h.push_back({R + k, rh[n].gamma});
        }
    }
    return sol;
}

MatrixXcd fisher_lee(const MatrixXcd& G, const std::vector<Channel>& out, const std::vector<Channel>& in,
                     bool diagonal) {
    const auto no = static_cast<Eigen::Index>(out.size());
    const auto ni = static_cast<Eigen::Index>(in.size());
    MatrixXcd r(no, ni);
    const cplx I(0.0, 1.0);
    for (Eigen::Index i = 0; i < no; ++i) {
        for (Eigen::Index j = 0; j < ni; ++j) {
            const auto& a = out[static_cast<std::size_t>(i)];
            const auto& b = in[static_cast<std::size_t>(j)];
            r(i, j) = I * std::sqrt(a.gamma * b.gamma) * G(a.column, b.column);
            if (diagonal && i == j) r(i, j) -= 1.0;
        }
    }
    return r;
}

ReflectionBlocks reflection_from(const Solution& s) {
    ReflectionBlocks b;
    b.r_ee = fisher_lee(s.G_LL, s.left_e, s.left_e, true);
    b.r_he = fisher_lee(s.G_LL, s.left_h, s.left_e, false);
    b.r_eh = fisher_lee(s.G_LL, s.left_e, s.left_h, false);
    b.r_hh = fisher_lee(s.G_LL, s.left_h, s.left_h, true);
    return b;
}

}  // namespace

LeadModes lead_channels(const BdGLattice& lattice, Side side, double E, Particle p) {
    check_energy(E);
    if (side == Side::right && lattice.right_lead == LeadKind::superconducting && std::abs(lattice.delta) > 1e-9)
        throw DomainError("lead_channels: the right lead is superconducting");
    const auto& onsite = side == Side::left ? lattice.left_onsite : lattice.right_onsite;
    const auto modes = transverse_modes(onsite, lattice.t);
    LeadModes out;
    std::vector<Eigen::Index> cols;
    for (Eigen::Index n = 0; n < modes.values.size(); ++n) {
        out.transverse.push_back(modes.values(n));
        const auto m = normal_chain(modes.values(n), E, lattice.t, p);
        if (!m.open) continue;
        cols.push_back(n);
        out.momenta.push_back(m.ka);
        out.velocities.push_back(m.gamma);
    }
    out.vectors.resize(modes.vectors.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) out.vectors.col(static_cast<Eigen::Index>(k)) = modes.vectors.col(cols[k]);
    return out;
}

ReflectionBlocks reflection_matrix(const BdGLattice& lattice, double E) {
    return reflection_from(solve(lattice, E));
}

ScatteringMatrix scattering_matrix(const BdGLattice& lattice, double E) {
    const Solution s = solve(lattice, E);
    ScatteringMatrix out;
    out.left = reflection_from(s);
    std::vector<Channel> left = s.left_e;
    left.insert(left.end(), s.left_h.begin(), s.left_h.end());
    if (!s.right_normal) {
        out.S = fisher_lee(s.G_LL, left, left, true);
        return out;
    }
    std::vector<Channel> right = s.right_e;
    right.insert(right.end(), s.right_h.begin(), s.right_h.end());
    const auto nl = static_cast<Eigen::Index>(left.size());
    const auto nr = static_cast<Eigen::Index>(right.size());
    out.S.resize(nl + nr, nl + nr);
    out.S.topLeftCorner(nl, nl) = fisher_lee(s.G_LL, left, left, true);
    out.S.topRightCorner(nl, nr) = fisher_lee(s.G_LR, left, right, false);
    out.S.bottomLeftCorner(nr, nl) = fisher_lee(s.G_RL, right, left, false);
    out.S.bottomRightCorner(nr, nr) = fisher_lee(s.G_RR, right, right, true);
    out.has_transmission = true;
    return out;
}

double ns_conductance(const ReflectionBlocks& b) {
    return static_cast<double>(b.r_ee.cols()) - b.r_ee.squaredNorm() + b.r_he.squaredNorm();
}

double hole_sector_conductance(const ReflectionBlocks& b) {
    return static_cast<double>(b.r_hh.cols()) - b.r_hh.squaredNorm() + b.r_eh.squaredNorm();
}

std::vector<double> transmission_eigenvalues(const BdGLattice& lattice, double E) {
    if (lattice.right_lead == LeadKind::superconducting && std::abs(lattice.delta) > 1e-9)
        throw DomainError("transmission_eigenvalues: the right lead must be normal");
    const Solution s = solve(lattice, E);
    const MatrixXcd t = fisher_lee(s.G_RL, s.right_e, s.left_e, false);
    std::vector<double> out;
    if (t.cols() == 0) return out;
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(t.adjoint() * t);
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) out.push_back(std::clamp(es.eigenvalues()(i), 0.0, 1.0));
    return out;
}

}  // namespace sqpc::bdg
