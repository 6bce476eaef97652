#include "qdsdc/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace qdsdc {

double StarkModel::exciton(double v) const {
    const double dv = v - v_ref;
    return tpe_energy + 0.5 * binding + slope_x * dv + curvature_x * dv * dv;
}

double StarkModel::biexciton_line(double v) const {
    const double dv = v - v_ref;
    return tpe_energy - 0.5 * binding + slope_xx * dv + curvature_xx * dv * dv;
}

double StarkModel::exciton_slope(double v) const {
    return slope_x + 2.0 * curvature_x * (v - v_ref);
}

double StarkModel::biexciton_line_slope(double v) const {
    return slope_xx + 2.0 * curvature_xx * (v - v_ref);
}

double LevelEnergies::operator[](BasisLabel label) const {
    switch (label) {
        case BasisLabel::G: return ground;
        case BasisLabel::XH: return exciton_h;
        case BasisLabel::XV: return exciton_v;
        case BasisLabel::B: return biexciton;
    }
    return 0.0;
}

double PulseSpec::envelope(double t) const {
    const double x = (t - center) / width;
    return std::exp(-0.5 * x * x);
}

namespace {

void require(bool condition, const std::string& message) {
    if (!condition) throw std::invalid_argument(message);
}

void validate_pulse(const PulseSpec& p, const char* name) {
    require(p.width > 0.0, std::string(name) + " pulse width must be > 0 ps");
    require(p.amplitude >= 0.0, std::string(name) + " pulse amplitude must be >= 0");
    require(std::isfinite(p.center) && std::isfinite(p.photon_energy),
            std::string(name) + " pulse has non-finite parameters");
}

}  // namespace

void DeviceModel::validate() const {
    validate_pulse(tpe, "TPE");
    validate_pulse(control, "control");
    require(tpe.polarization == Polarization::H, "TPE pulse must be H-polarized");
    require(control.polarization == Polarization::V, "control pulse must be V-polarized");
    require(rates.gamma_pure >= 0.0 && rates.gamma_rad >= 0.0 && rates.pump_incoh >= 0.0,
            "dissipator rates must be >= 0");
    require(stark.v_min < stark.v_max, "Stark validity range is empty");
    require(stark.in_range(stark.v_ref), "calibration voltage outside validity range");
    require(stark.in_range(bias), "bias outside the Stark model validity range");
    for (int i = 0; i <= 100; ++i) {
        const double v = stark.v_min + (stark.v_max - stark.v_min) * i / 100.0;
        const double ex = stark.exciton(v);
        require(ex > 0.0 && stark.biexciton(v) > ex + 1e-3 * std::max(fss, 0.0),
                "level ordering E_B > E_X > E_G broken inside the validity range");
    }
}

DeviceModel DeviceModel::undriven() const {
    DeviceModel copy = *this;
    copy.tpe.amplitude = 0.0;
    copy.control.amplitude = 0.0;
    copy.rates.pump_incoh = 0.0;
    return copy;
}

std::string Frame::describe() const {
    if (is_lab()) return "lab";
    std::ostringstream os;
    os.precision(12);
    os << "rotating@" << reference << "meV";
    return os.str();
}

LevelEnergies level_energies(const DeviceModel& model, double v) {
    const StarkModel& s = model.stark;
    if (!s.in_range(v) || !std::isfinite(v)) {
        std::ostringstream os;
        os << "bias " << v << " V outside the Stark model validity range [" << s.v_min << ", "
           << s.v_max << "] V";
        throw std::out_of_range(os.str());
    }
    LevelEnergies e;
    e.exciton_v = s.exciton(v);
    e.exciton_h = e.exciton_v + 1e-3 * model.fss;
    e.biexciton = s.biexciton(v);
    return e;
}

Complex pulse_amplitude(const PulseSpec& pulse, double t) {
    const double x = (t - pulse.center) / pulse.width;
    const double omega = meV_to_rad_per_ps(pulse.photon_energy);
    return (pulse.amplitude / kHbar) * std::exp(Complex(-0.5 * x * x, omega * t));
}

Operator hamiltonian(const DeviceModel& model, double t, const Frame& frame) {
    return hamiltonian(model, level_energies(model, model.bias), t, frame);
}

Operator hamiltonian(const DeviceModel& model, const LevelEnergies& levels, double t,
                     const Frame& frame) {
    Operator h = Operator::Zero();
    for (BasisLabel label : kAllLabels) {
        const double shifted = levels[label] - excitation_number(label) * frame.reference;
        h(index(label), index(label)) = 1000.0 * shifted;
    }

    auto add_pulse = [&](const PulseSpec& pulse) {
        if (pulse.amplitude == 0.0) return;
        const double residual = meV_to_rad_per_ps(pulse.photon_energy - frame.reference);
        const Complex c =
            pulse.amplitude * pulse.envelope(t) * std::exp(Complex(0.0, residual * t));
        const int x = pulse.polarization == Polarization::H ? index(BasisLabel::XH)
                                                            : index(BasisLabel::XV);
        const int g = index(BasisLabel::G);
        const int b = index(BasisLabel::B);
        h(g, x) += c;
        h(x, b) += c;
        h(x, g) += std::conj(c);
        h(b, x) += std::conj(c);
    };
    add_pulse(model.tpe);
    add_pulse(model.control);
    return h;
}

}  // namespace qdsdc
