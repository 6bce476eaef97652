#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "qdsdc/hilbert.hpp"
#include "qdsdc/model.hpp"
#include "qdsdc/propagator.hpp"

namespace qdsdc {

/// sigma_V = |G><X_V| + |X_V><B|, the V-polarized emission operator.
Operator emission_operator_v();

/// g(t, tau) = <sigma^+(t) sigma(t + tau)> on a triangular grid:
/// t_k = start + k * outer_step for t_k <= window_end, and
/// tau_j = j * inner_step for tau_j <= window_end - t_k.
struct CorrelationGrid {
    double start = 0.0;
    double outer_step = 0.5;
    double inner_step = 0.5;
    double window_end = 300.0;
    Frame frame;
    std::vector<std::vector<Complex>> values;  // values[k][j]

    std::size_t outer_samples() const { return values.size(); }
    double outer_time(std::size_t k) const { return start + static_cast<double>(k) * outer_step; }
    double delay(std::size_t j) const { return static_cast<double>(j) * inner_step; }
};

struct CorrelationOptions {
    double outer_step = 0.0;   // ps, multiple of the trajectory step; 0 = trajectory step
    double inner_step = 0.05;  // ps, must divide the outer step
    double window_end = 300.0; // ps
    Frame frame;               // expected frame of the trajectory
    int workers = 1;
};

/// Quantum regression: for each outer time the conditioned matrix
/// rho(t) sigma^+ is pushed forward by the same generator as the state and
/// traced against sigma.
CorrelationGrid qrt_correlation(const DeviceModel& model, const Trajectory& traj,
                                const Operator& sigma, const CorrelationOptions& options);

/// Detector bandwidth hbar*Gamma (ueV) and the end of the integration window (ps).
struct FilterSpec {
    double width = 4.0;
    double window_end = 300.0;
    bool operator==(const FilterSpec&) const = default;
};

/// Uniform lab-frame photon-energy bins (meV).
struct EnergyAxis {
    double start = 0.0;
    double step = 0.005;
    std::size_t count = 0;

    double energy(std::size_t i) const { return start + static_cast<double>(i) * step; }
    static EnergyAxis centered(double center, double half_span, double step);
    bool operator==(const EnergyAxis&) const = default;
};

struct Spectrum {
    EnergyAxis axis;
    std::vector<double> intensity;  // arbitrary units
};

/// Half-width (meV) of the band a frame can represent with the given delay step.
double representable_half_band(double inner_step);

/// Windowed, filtered emission spectrum
///   S(w) = Re int_0^T dt int_0^{T-t} dtau g(t,tau) e^{i w tau}
///          e^{-Gamma/2 (T-t)} e^{-Gamma/2 (T-t-tau)}
/// by the trapezoidal rule in both variables. The sum over t is done first
/// for every delay, leaving one transform with kernel e^{(i w + Gamma/2) tau}
/// per bin. Bins are reported in lab photon energy.
Spectrum filtered_spectrum(const CorrelationGrid& grid, const FilterSpec& filter,
                           const EnergyAxis& axis, int workers = 1);

struct Peak {
    std::size_t bin = 0;
    double energy = 0.0;  // parabolic refinement of the bin center
    double height = 0.0;
};

/// Local maxima with height >= min_height. A flat top counts once, at its
/// middle bin. Edge bins are never maxima.
std::vector<Peak> local_maxima(const Spectrum& spectrum, double min_height);

/// Light-induced shift scale (meV) of a transition detuned by `detuning` meV
/// from a drive with coupling `amplitude_ueV`: sqrt(D^2 + 4 W^2) - |D|, the
/// growth of the dressed-pair splitting at pulse peak. A single dressed level
/// moves by half of this.
double ac_stark_scale(double amplitude_ueV, double detuning_meV);

/// AC-Stark scale of one pulse at time t against the nearer of the two
/// transitions it couples (G-X_i and X_i-B for its polarization) at the
/// model's bias.
double pulse_ac_stark_scale(const DeviceModel& model, const PulseSpec& pulse, double t);

/// Tolerance (meV) for light-shifted line positions read from a spectrum
/// windowed at t: half the summed AC-Stark scales of both pulses at t.
double light_shift_tolerance(const DeviceModel& model, double t);

struct SdcCheck {
    bool detected = false;
    bool degenerate = false;  // control at E_B/2: flagged, never scored
    bool pass = false;
    double expected = 0.0;    // E_B - E_c
    double peak_energy = 0.0;
    double deviation = 0.0;
    double tolerance = 0.0;
    std::string diagnostic;
};

/// Locates the strongest local maximum inside [E_B - E_c - window, E_B - E_c + window]
/// and compares it with E_B - E_c. Energies in meV.
SdcCheck sdc_peak_check(const Spectrum& spectrum, double biexciton_energy, double control_energy,
                        double window, double tolerance);

/// Everything needed to turn a model into one spectrum.
struct SimulationSettings {
    TimeGrid grid{0.0, 600.0, 0.05}; // state propagation
    double outer_step = 0.5;         // correlation start times
    double inner_step = 0.05;        // correlation delays
    FilterSpec filter{4.0, 300.0};
    EnergyAxis axis;
    std::optional<Frame> frame;  // defaults to rotating at the TPE photon energy
    DensityMatrix initial = dyad(BasisLabel::G, BasisLabel::G);

    Frame resolved_frame(const DeviceModel& model) const {
        return frame ? *frame : Frame::rotating(model.tpe.photon_energy);
    }
};

/// propagate -> qrt_correlation -> filtered_spectrum at the model's bias.
Spectrum simulate_spectrum(const DeviceModel& model, const SimulationSettings& settings,
                           int workers = 1);

}  // namespace qdsdc
