#pragma once

#include <string>
#include <vector>

#include "qdsdc/config.hpp"

namespace qdsdc {

struct CheckResult {
    std::string module;
    std::string name;
    bool pass = false;
    std::string detail;
};

/// Every invariant of the operator algebra, model, propagator, spectrum,
/// sweep and output layers, evaluated on `config` where a model is needed.
std::vector<CheckResult> invariant_suite(const RunConfig& config, int workers = 1);

/// Full width at half maximum (meV) of the highest peak, linear interpolation
/// between bins; 0 when the half-maximum crossing leaves the axis.
double full_width_half_max(const Spectrum& spectrum);

/// RK4 against the piecewise-constant matrix-exponential propagator.
struct OracleReport {
    double step = 0.0;           // RK4 step, ps
    int substeps = 0;            // oracle sub-intervals per step
    double max_deviation = 0.0;  // max Frobenius distance over shared samples
    double deviation_coarse_oracle = 0.0;  // same against a one-substep oracle
    double error_double_step = 0.0;        // RK4 at 2*step against the oracle
    double order_ratio = 0.0;              // error_double_step / max_deviation
    double oracle_trace_deviation = 0.0;
    double tolerance = 1e-6;
    bool deviation_ok() const { return max_deviation < tolerance; }
    bool order_ok() const { return order_ratio >= 8.0 && order_ratio <= 32.0; }
    bool trace_ok() const { return oracle_trace_deviation < 1e-10; }
    std::string text() const;
};

OracleReport oracle_comparison(const DeviceModel& model, const Frame& frame, const TimeGrid& grid,
                               int substeps = 16);

/// g(t, tau) = exp(-(kappa + i omega0) tau), constant in t, on the given grid.
/// kappa and omega0 in ps^-1 (omega0 in the frame).
CorrelationGrid exponential_correlation(double kappa, double omega0, double window_end,
                                        double outer_step, double inner_step, const Frame& frame);

/// Exact double integral of the filtered spectrum for that correlation.
Spectrum exponential_spectrum_exact(double kappa, double omega0, const FilterSpec& filter,
                                    const EnergyAxis& axis, const Frame& frame);

}  // namespace qdsdc
