#pragma once

#include <string>

#include "qdsdc/hilbert.hpp"

namespace qdsdc {

/// Reduced Planck constant in ueV*ps.
inline constexpr double kHbar = 658.2119569;

/// Converts an energy in ueV to an angular frequency in rad/ps.
constexpr double ueV_to_rad_per_ps(double energy_ueV) { return energy_ueV / kHbar; }
constexpr double meV_to_rad_per_ps(double energy_meV) { return 1000.0 * energy_meV / kHbar; }

/// Bias dependence of the exciton (X) and biexciton-to-exciton (XX) emission
/// lines, expanded about the two-photon resonance voltage.
///
///   E_X(V)  = E_tpe + binding/2 + slope_x  (V - v_ref) + curvature_x  (V - v_ref)^2
///   E_XX(V) = E_tpe - binding/2 + slope_xx (V - v_ref) + curvature_xx (V - v_ref)^2
///
/// so that E_B = E_X + E_XX equals 2 E_tpe at v_ref exactly. Energies in meV,
/// voltages in V.
struct StarkModel {
    double v_ref = -0.12;
    double tpe_energy = 1341.17;
    double binding = 6.0;
    double slope_x = -0.7;
    double slope_xx = -1.3;
    double curvature_x = 0.0;
    double curvature_xx = 0.0;
    double v_min = -1.5;
    double v_max = 1.5;

    double exciton(double v) const;
    double biexciton_line(double v) const;
    double biexciton(double v) const { return exciton(v) + biexciton_line(v); }

    double exciton_slope(double v) const;
    double biexciton_line_slope(double v) const;
    double biexciton_slope(double v) const {
        return exciton_slope(v) + biexciton_line_slope(v);
    }

    bool in_range(double v) const { return v >= v_min && v <= v_max; }
    bool operator==(const StarkModel&) const = default;
};

/// Level energies in meV at one bias. E_G is pinned to zero and E_V tracks the
/// exciton line of the Stark model; E_H = E_V + fine-structure splitting.
struct LevelEnergies {
    double ground = 0.0;
    double exciton_h = 0.0;
    double exciton_v = 0.0;
    double biexciton = 0.0;

    double operator[](BasisLabel label) const;
};

enum class Polarization { H, V };

/// Gaussian laser pulse. Amplitude in ueV, times in ps, photon energy in meV.
struct PulseSpec {
    double amplitude = 0.0;
    double center = 0.0;
    double width = 100.0;
    double photon_energy = 0.0;
    Polarization polarization = Polarization::H;

    double envelope(double t) const;
    bool operator==(const PulseSpec&) const = default;
};

/// All three stored as energies hbar*gamma in ueV.
struct DissipatorRates {
    double gamma_pure = 4.0;
    double gamma_rad = 4.0;
    double pump_incoh = 4.0;
    bool operator==(const DissipatorRates&) const = default;
};

struct DeviceModel {
    StarkModel stark;
    double fss = 0.0;  // ueV
    DissipatorRates rates;
    PulseSpec tpe{288.7, 200.0, 100.0, 1341.17, Polarization::H};
    PulseSpec control{103.1, 300.0, 100.0, 1342.47, Polarization::V};
    double bias = -0.12;  // operating point, V

    /// Throws std::invalid_argument describing the first broken invariant.
    void validate() const;

    /// Same model with both pulses and the incoherent pump switched off.
    DeviceModel undriven() const;
    bool operator==(const DeviceModel&) const = default;
};

/// Frame in which the dynamics is integrated. The lab frame has a zero
/// reference energy; a rotating frame removes n * reference from the
/// diagonal, n being the excitation number (0, 1, 1, 2).
struct Frame {
    double reference = 0.0;  // photon energy in meV

    static Frame lab() { return Frame{0.0}; }
    static Frame rotating(double photon_energy_meV) { return Frame{photon_energy_meV}; }

    bool is_lab() const { return reference == 0.0; }
    bool operator==(const Frame&) const = default;
    std::string describe() const;
};

/// Throws std::out_of_range naming the valid range when v is outside it.
LevelEnergies level_energies(const DeviceModel& model, double v);

/// Omega(t) = (Omega0/hbar) exp(-(t - t0)^2 / (2 Sigma^2) + i omega t), in rad/ps.
Complex pulse_amplitude(const PulseSpec& pulse, double t);

/// Hamiltonian in ueV at time t (ps) and the model's bias.
///
/// The drive enters as Omega_i on |G><X_i| and |X_i><B| plus Hermitian
/// conjugates, which makes a laser at photon energy E resonant with
/// transitions of energy E. In a rotating frame each coupling carries only
/// the residual carrier exp(i (omega_i - omega_frame) t).
Operator hamiltonian(const DeviceModel& model, double t, const Frame& frame);

/// Same as above with precomputed level energies, for hot loops.
Operator hamiltonian(const DeviceModel& model, const LevelEnergies& levels, double t,
                     const Frame& frame);

}  // namespace qdsdc
