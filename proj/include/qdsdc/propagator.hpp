#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qdsdc/hilbert.hpp"
#include "qdsdc/model.hpp"

namespace qdsdc {

/// Uniform time grid [start, end] with spacing step (ps).
struct TimeGrid {
    double start = 0.0;
    double end = 600.0;
    double step = 0.5;

    /// Number of intervals. Throws std::invalid_argument if step does not
    /// divide the span to within 1e-9.
    std::size_t intervals() const;
    std::size_t samples() const { return intervals() + 1; }
    double time(std::size_t i) const { return start + static_cast<double>(i) * step; }
    bool operator==(const TimeGrid&) const = default;
};

struct Trajectory {
    TimeGrid grid;
    Frame frame;
    std::vector<double> times;
    std::vector<DensityMatrix> states;
    /// Steps after which the trace drift exceeded 1e-12 and was renormalized.
    std::vector<std::size_t> renormalized_steps;
};

/// Raised when a state leaves the physical set during integration.
class PropagationError : public std::runtime_error {
public:
    PropagationError(std::size_t step, const std::string& what)
        : std::runtime_error(what), step_(step) {}
    std::size_t step() const { return step_; }

private:
    std::size_t step_;
};

/// Master-equation rates converted to ps^-1 (divided by hbar exactly once).
struct GeneratorRates {
    double gamma_pure = 0.0;
    double gamma_rad = 0.0;
    double pump_incoh = 0.0;

    static GeneratorRates from(const DissipatorRates& rates);
};

/// Applies the full generator with a given Hamiltonian (ueV).
Operator apply_generator(const GeneratorRates& rates, const Operator& hamiltonian_ueV,
                         const Operator& rho);

/// (1/i hbar)[H(t), rho] - (gamma_pure/2) offdiag(rho)
///   + gamma_rad sum_i (L_{|G><X_i|} + L_{|X_i><B|})(rho) + P_incoh L_{|B><G|}(rho),
/// in ps^-1.
Operator liouvillian_apply(const DeviceModel& model, double t, const DensityMatrix& rho,
                           const Frame& frame);

/// What a step does after the raw Runge-Kutta update.
enum class StepMode {
    /// Hermitize, renormalize trace drift above 1e-12, check physicality.
    State,
    /// Raw linear update; the operand is not a state (e.g. rho * sigma^+).
    Conditioned,
};

/// Classic fourth-order Runge-Kutta for the time-dependent generator on a
/// fixed grid. Hamiltonians at every half step are tabulated up front, so
/// many operands can be pushed through the same grid cheaply.
class Rk4Stepper {
public:
    Rk4Stepper(const DeviceModel& model, const Frame& frame, const TimeGrid& grid);

    const TimeGrid& grid() const { return grid_; }
    const Frame& frame() const { return frame_; }

    /// Advances x from grid time j to j + 1 (no post-processing).
    Operator step(std::size_t j, const Operator& x) const;

    /// Advances x from grid time j to j + 1 with the given post-processing.
    /// In State mode returns true when the trace was renormalized.
    bool advance(std::size_t j, Operator& x, StepMode mode,
                 const PhysicalityTolerances& tol = {}) const;

private:
    TimeGrid grid_;
    Frame frame_;
    GeneratorRates rates_;
    std::vector<Operator> half_step_hamiltonians_;
};

Trajectory propagate(const DeviceModel& model, const DensityMatrix& rho0, const TimeGrid& grid,
                     const Frame& frame, const PhysicalityTolerances& tol = {});

using Superoperator = Eigen::Matrix<Complex, 16, 16>;
using VecOperator = Eigen::Matrix<Complex, 16, 1>;

/// Column-major vectorization: vec(rho)[i + 4 j] = rho(i, j).
VecOperator vectorize(const Operator& op);
Operator unvectorize(const VecOperator& v);

/// 16x16 generator matrix assembled from Kronecker products; independent of
/// liouvillian_apply.
Superoperator liouvillian_matrix(const DeviceModel& model, double t, const Frame& frame);

/// Piecewise-constant propagation: on each of `substeps` sub-intervals per grid
/// step, the generator is frozen at the sub-interval midpoint and applied
/// through its matrix exponential.
Trajectory expm_oracle(const DeviceModel& model, const DensityMatrix& rho0, const TimeGrid& grid,
                       const Frame& frame, int substeps = 1);

/// Largest Frobenius distance between samples of equal index.
double max_frobenius_deviation(const Trajectory& a, const Trajectory& b);

}  // namespace qdsdc
