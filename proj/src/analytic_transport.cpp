#include "sqpc/analytic_transport.hpp"

#include <cmath>
#include <sstream>

#include "sqpc/errors.hpp"
#include "sqpc/units.hpp"

namespace sqpc::analytic {

void TransmissionSet::validate() const {
    for (std::size_t i = 0; i < T.size(); ++i) {
        if (!(T[i] >= 0.0 && T[i] <= 1.0)) {
            std::ostringstream os;
            os << "transmission T_" << i << " = " << T[i] << " outside [0, 1]";
            throw DomainError(os.str());
        }
    }
}

TransmissionSet saddle_transmissions(double E_F, double V0, double hbar_omega_x, double hbar_omega_y,
                                     int n_modes) {
    if (!(hbar_omega_x >= 0.0) || !(hbar_omega_y > 0.0))
        throw DomainError("saddle: hbar_omega_x >= 0 and hbar_omega_y > 0 required");
    if (n_modes < 0) throw DomainError("saddle: n_modes >= 0 required");
    TransmissionSet out;
    out.T.resize(static_cast<std::size_t>(n_modes));
    for (int n = 0; n < n_modes; ++n) {
        const double excess = E_F - V0 - hbar_omega_y * (n + 0.5);
        double t;
        if (hbar_omega_x == 0.0) {
            t = excess > 0.0 ? 1.0 : (excess == 0.0 ? 0.5 : 0.0);
        } else {
            const double x = 2.0 * units::pi * excess / hbar_omega_x;
            t = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
        }
        out.T[static_cast<std::size_t>(n)] = t;
    }
    return out;
}

double normal_conductance(const TransmissionSet& t) {
    t.validate();
    double g = 0.0;
    for (double x : t.T) g += x;
    return g;
}

BTKCoeffs btk_coefficients(double E, double delta, double Z) {
    if (!(delta > 0.0)) throw DomainError("btk: Delta > 0 required");
    if (!(Z >= 0.0)) throw DomainError("btk: Z >= 0 required");
    if (!(E >= 0.0)) throw DomainError("btk: E >= 0 required");
    const double z2 = Z * Z;
    BTKCoeffs c;
    if (E <= delta) {
        const double k = 1.0 + 2.0 * z2;
        const double d2 = delta * delta;
        const double e2 = std::min(E * E, d2);
        c.A = d2 / (e2 + (d2 - e2) * k * k);
        c.B = 1.0 - c.A;
        return c;
    }
    // u0^2 - v0^2 = sqrt(E^2 - Delta^2) / E, computed without cancellation.
    const double diff = std::sqrt((E - delta) * (E + delta)) / E;
    const double u2 = 0.5 * (1.0 + diff);
    const double v2 = 0.5 * (1.0 - diff);
    const double gamma = u2 + z2 * diff;
    const double g2 = gamma * gamma;
    c.A = u2 * v2 / g2;
    c.B = diff * diff * z2 * (1.0 + z2) / g2;
    c.C = u2 * diff * (1.0 + z2) / g2;
    c.D = v2 * diff * z2 / g2;
    return c;
}

double beenakker_ns_conductance(const TransmissionSet& t) {
    t.validate();
    double g = 0.0;
    for (double x : t.T) g += 2.0 * x * x / ((2.0 - x) * (2.0 - x));
    return g;
}

double series_nsn(double g_left, double g_right) {
    if (!(g_left >= 0.0) || !(g_right >= 0.0)) throw DomainError("series: conductances >= 0 required");
    if (g_left == 0.0 || g_right == 0.0) return 0.0;
    if (std::isinf(g_left)) return g_right;
    if (std::isinf(g_right)) return g_left;
    return g_left * g_right / (g_left + g_right);
}

double barrier_transmission(double Z) {
    if (!(Z >= 0.0)) throw DomainError("barrier: Z >= 0 required");
    return 1.0 / (1.0 + Z * Z);
}

double combine_transmissions(double t_mode, double t_barrier) {
    if (t_mode <= 0.0 || t_barrier <= 0.0) return 0.0;
    return 1.0 / (1.0 / t_mode + 1.0 / t_barrier - 1.0);
}

double btk_ns_conductance(const TransmissionSet& t, double E, double delta, double Z) {
    t.validate();
    const double tb = barrier_transmission(Z);
    double g = 0.0;
    for (double x : t.T) {
        const double tau = combine_transmissions(x, tb);
        if (tau <= 0.0) continue;
        if (delta == 0.0) {
            g += tau;
            continue;
        }
        const double zn = std::sqrt(std::max(0.0, 1.0 / tau - 1.0));
        const auto c = btk_coefficients(std::abs(E), delta, zn);
        g += 1.0 + c.A - c.B;
    }
    return g;
}

std::vector<double> thermal_energy_grid(double temperature, int points) {
    if (!(temperature > 0.0)) throw DomainError("thermal grid: T > 0 required");
    if (points < 3) throw DomainError("thermal grid: at least 3 points required");
    const double half = 12.0 * units::thermal_energy(temperature);
    std::vector<double> e(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i) e[static_cast<std::size_t>(i)] = -half + 2.0 * half * i / (points - 1);
    return e;
}

double thermal_broaden(std::span<const double> energies, std::span<const double> conductance,
                       double temperature) {
    if (!(temperature > 0.0)) throw DomainError("thermal: T > 0 required");
    if (energies.size() != conductance.size() || energies.size() < 2)
        throw DomainError("thermal: need matching energy and conductance samples");
    const double kt = units::thermal_energy(temperature);
    for (std::size_t i = 1; i < energies.size(); ++i)
        if (!(energies[i] > energies[i - 1])) throw DomainError("thermal: energies must increase");
    // Small slack so a grid built at exactly +-10 kT passes despite rounding.
    const double need = 10.0 * kt * (1.0 - 1e-12);
    if (energies.front() > -need || energies.back() < need) {
        std::ostringstream os;
        os << "thermal: samples must span +-10 kT = +-" << 10.0 * kt << " meV (got [" << energies.front()
           << ", " << energies.back() << "])";
        throw DomainError(os.str());
    }
    double sum = 0.0, weight = 0.0;
    for (std::size_t i = 0; i < energies.size(); ++i) {
        const double left = i > 0 ? energies[i] - energies[i - 1] : 0.0;
        const double right = i + 1 < energies.size() ? energies[i + 1] - energies[i] : 0.0;
        const double c = std::cosh(0.5 * energies[i] / kt);
        const double w = 0.5 * (left + right) / (4.0 * kt * c * c);
        sum += w * conductance[i];
        weight += w;
    }
    return sum / weight;
}

}  // namespace sqpc::analytic
