#include "qdsdc/spectrum.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "qdsdc/parallel.hpp"

namespace qdsdc {

Operator emission_operator_v() {
    return dyad(BasisLabel::G, BasisLabel::XV) + dyad(BasisLabel::XV, BasisLabel::B);
}

namespace {

std::size_t exact_ratio(double numerator, double denominator, const char* what) {
    const double ratio = numerator / denominator;
    const double rounded = std::round(ratio);
    if (!(denominator > 0.0) || rounded < 0.0 || std::abs(ratio - rounded) > 1e-9) {
        std::ostringstream os;
        os << what << ": " << denominator << " does not divide " << numerator;
        throw std::invalid_argument(os.str());
    }
    return static_cast<std::size_t>(rounded);
}

}  // namespace

CorrelationGrid qrt_correlation(const DeviceModel& model, const Trajectory& traj,
                                const Operator& sigma, const CorrelationOptions& options) {
    if (!(traj.frame == options.frame)) {
        throw std::invalid_argument("trajectory frame " + traj.frame.describe() +
                                    " does not match requested frame " +
                                    options.frame.describe());
    }
    const TimeGrid& g = traj.grid;
    if (options.window_end < g.start || options.window_end > g.end + 1e-9) {
        throw std::invalid_argument("correlation window end lies outside the trajectory");
    }
    const double outer_step = options.outer_step > 0.0 ? options.outer_step : g.step;
    const std::size_t stride = exact_ratio(outer_step, g.step, "trajectory step vs outer step");
    const std::size_t ratio = exact_ratio(outer_step, options.inner_step, "delay step");
    const std::size_t outer =
        exact_ratio(options.window_end - g.start, outer_step, "outer step vs window");

    const TimeGrid inner_grid{g.start, g.start + static_cast<double>(outer) * outer_step,
                              options.inner_step};
    const Rk4Stepper stepper(model, traj.frame, inner_grid);
    const Operator sigma_dag = sigma.adjoint();

    // The conditioned update is linear, so each RK4 step is tabulated once as a
    // 16x16 matrix (columns = images of the basis dyads) and shared by all rows.
    const std::size_t steps = inner_grid.intervals();
    std::vector<Superoperator> transfer(steps);
    parallel_for(steps, options.workers, [&](std::size_t j) {
        for (std::size_t c = 0; c < 16; ++c) {
            Operator basis = Operator::Zero();
            basis(static_cast<Eigen::Index>(c % 4), static_cast<Eigen::Index>(c / 4)) = 1.0;
            stepper.advance(j, basis, StepMode::Conditioned);
            transfer[j].col(static_cast<Eigen::Index>(c)) = vectorize(basis);
        }
    });
    // tr(sigma X) = sum_ij sigma(j, i) X(i, j) = probe . vec(X)
    const VecOperator probe = vectorize(sigma.transpose());

    CorrelationGrid grid;
    grid.start = g.start;
    grid.outer_step = outer_step;
    grid.inner_step = options.inner_step;
    grid.window_end = options.window_end;
    grid.frame = traj.frame;
    grid.values.resize(outer + 1);

    parallel_for(outer + 1, options.workers, [&](std::size_t k) {
        const std::size_t first = k * ratio;
        const std::size_t delays = (outer - k) * ratio;
        std::vector<Complex>& row = grid.values[k];
        row.resize(delays + 1);
        VecOperator x = vectorize(traj.states[k * stride] * sigma_dag);
        row[0] = (probe.transpose() * x).value();
        for (std::size_t s = 0; s < delays; ++s) {
            x = transfer[first + s] * x;
            row[s + 1] = (probe.transpose() * x).value();
        }
    });
    return grid;
}

EnergyAxis EnergyAxis::centered(double center, double half_span, double step) {
    if (!(step > 0.0)) throw std::invalid_argument("energy bin width must be > 0");
    const auto half = static_cast<std::size_t>(std::llround(half_span / step));
    return {center - static_cast<double>(half) * step, step, 2 * half + 1};
}

double representable_half_band(double inner_step) {
    return std::numbers::pi * kHbar / inner_step / 1000.0;
}

Spectrum filtered_spectrum(const CorrelationGrid& grid, const FilterSpec& filter,
                           const EnergyAxis& axis, int workers) {
    if (!(filter.width > 0.0)) throw std::invalid_argument("filter width must be > 0");
    if (std::abs(filter.window_end - grid.window_end) > 1e-9) {
        throw std::invalid_argument("filter window end does not match the correlation grid");
    }
    const double band = representable_half_band(grid.inner_step);
    for (std::size_t i = 0; i < axis.count; ++i) {
        const double offset = axis.energy(i) - grid.frame.reference;
        if (std::abs(offset) > band) {
            std::ostringstream os;
            os << "energy bin " << axis.energy(i) << " meV lies " << offset
               << " meV from the " << grid.frame.describe()
               << " frame; with a delay step of " << grid.inner_step
               << " ps only +-" << band << " meV around the frame reference is representable";
            throw std::domain_error(os.str());
        }
    }

    const double gamma = ueV_to_rad_per_ps(filter.width);
    const std::size_t outer = grid.outer_samples();
    std::size_t longest = 0;
    for (const auto& row : grid.values) longest = std::max(longest, row.size());

    // Outer sum first: weights[j] = sum_t w_t w_tau e^{-Gamma (T - t)} g(t, tau_j).
    std::vector<Complex> weighted(longest, Complex(0.0, 0.0));
    for (std::size_t k = 0; k < outer; ++k) {
        const auto& row = grid.values[k];
        if (row.size() < 2 || outer < 2) continue;
        const double w_outer = (k == 0 || k + 1 == outer ? 0.5 : 1.0) * grid.outer_step;
        const double damp = std::exp(-gamma * (grid.window_end - grid.outer_time(k)));
        const std::size_t last = row.size() - 1;
        for (std::size_t j = 0; j <= last; ++j) {
            const double w_inner = (j == 0 || j == last ? 0.5 : 1.0) * grid.inner_step;
            weighted[j] += (w_outer * damp * w_inner) * row[j];
        }
    }

    Spectrum spectrum{axis, std::vector<double>(axis.count, 0.0)};
    parallel_for(axis.count, workers, [&](std::size_t i) {
        const double omega = meV_to_rad_per_ps(axis.energy(i) - grid.frame.reference);
        const Complex q = std::exp(Complex(0.5 * gamma, omega) * grid.inner_step);
        Complex acc(0.0, 0.0);
        for (std::size_t j = longest; j-- > 0;) acc = acc * q + weighted[j];
        spectrum.intensity[i] = acc.real();
    });
    return spectrum;
}

std::vector<Peak> local_maxima(const Spectrum& spectrum, double min_height) {
    const auto& y = spectrum.intensity;
    std::vector<Peak> peaks;
    const std::size_t n = y.size();
    std::size_t i = 1;
    while (i + 1 < n) {
        if (!(y[i] > y[i - 1])) {
            ++i;
            continue;
        }
        std::size_t end = i;
        while (end + 1 < n && y[end + 1] == y[i]) ++end;
        if (end + 1 < n && y[end + 1] < y[i] && y[i] >= min_height) {
            Peak p;
            p.bin = (i + end) / 2;
            p.height = y[p.bin];
            double shift = 0.0;
            if (i == end) {
                const double curvature = y[i - 1] - 2.0 * y[i] + y[i + 1];
                if (curvature < 0.0) shift = 0.5 * (y[i - 1] - y[i + 1]) / curvature;
            } else {
                shift = 0.5 * static_cast<double>(i + end) - static_cast<double>(p.bin);
            }
            p.energy = spectrum.axis.energy(p.bin) + shift * spectrum.axis.step;
            peaks.push_back(p);
        }
        i = end + 1;
    }
    return peaks;
}

double ac_stark_scale(double amplitude_ueV, double detuning_meV) {
    const double coupling = 1e-3 * amplitude_ueV;
    return std::sqrt(detuning_meV * detuning_meV + 4.0 * coupling * coupling) -
           std::abs(detuning_meV);
}

double pulse_ac_stark_scale(const DeviceModel& model, const PulseSpec& pulse, double t) {
    const LevelEnergies e = level_energies(model, model.bias);
    const double exciton = pulse.polarization == Polarization::H ? e.exciton_h : e.exciton_v;
    const double to_x = pulse.photon_energy - exciton;
    const double to_xx = pulse.photon_energy - (e.biexciton - exciton);
    const double detuning = std::abs(to_x) < std::abs(to_xx) ? to_x : to_xx;
    return ac_stark_scale(pulse.amplitude * pulse.envelope(t), detuning);
}

double light_shift_tolerance(const DeviceModel& model, double t) {
    return 0.5 * (pulse_ac_stark_scale(model, model.tpe, t) +
                  pulse_ac_stark_scale(model, model.control, t));
}

SdcCheck sdc_peak_check(const Spectrum& spectrum, double biexciton_energy, double control_energy,
                        double window, double tolerance) {
    SdcCheck check;
    check.expected = biexciton_energy - control_energy;
    check.tolerance = tolerance;

    const double step = spectrum.axis.step;
    if (std::abs(control_energy - 0.5 * biexciton_energy) < step) {
        check.degenerate = true;
        check.diagnostic =
            "control at the two-photon-symmetric point: SDC coincides with the laser energy; "
            "flagged, not scored";
        return check;
    }
    if (spectrum.intensity.empty()) {
        check.diagnostic = "SDC line not detected: empty spectrum";
        return check;
    }

    const Peak* best = nullptr;
    const auto peaks = local_maxima(spectrum, 0.0);
    for (const Peak& p : peaks) {
        if (p.height <= 0.0 || std::abs(p.energy - check.expected) > window) continue;
        if (!best || p.height > best->height) best = &p;
    }
    if (!best) {
        std::ostringstream os;
        os << "SDC line not detected: no local maximum within " << window << " meV of "
           << check.expected << " meV";
        check.diagnostic = os.str();
        return check;
    }

    check.detected = true;
    check.peak_energy = best->energy;
    check.deviation = best->energy - check.expected;
    check.pass = std::abs(check.deviation) <= tolerance;
    std::ostringstream os;
    os << "SDC peak at " << best->energy << " meV, expected " << check.expected
       << " meV, deviation " << check.deviation << " meV (tolerance " << tolerance << ")";
    check.diagnostic = os.str();
    return check;
}

Spectrum simulate_spectrum(const DeviceModel& model, const SimulationSettings& settings,
                           int workers) {
    const Frame frame = settings.resolved_frame(model);
    const Trajectory traj = propagate(model, settings.initial, settings.grid, frame);
    CorrelationOptions options;
    options.outer_step = settings.outer_step;
    options.inner_step = settings.inner_step;
    options.window_end = settings.filter.window_end;
    options.frame = frame;
    options.workers = workers;
    const CorrelationGrid grid = qrt_correlation(model, traj, emission_operator_v(), options);
    return filtered_spectrum(grid, settings.filter, settings.axis, workers);
}

}  // namespace qdsdc
