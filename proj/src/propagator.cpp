#include "qdsdc/propagator.hpp"

#include <cmath>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

namespace qdsdc {

std::size_t TimeGrid::intervals() const {
    if (!(step > 0.0)) throw std::invalid_argument("time step must be > 0 ps");
    if (!(end >= start)) throw std::invalid_argument("time grid end precedes start");
    const double ratio = (end - start) / step;
    const double rounded = std::round(ratio);
    if (std::abs(ratio - rounded) > 1e-9) {
        std::ostringstream os;
        os << "time step " << step << " ps does not divide [" << start << ", " << end << "] ps";
        throw std::invalid_argument(os.str());
    }
    return static_cast<std::size_t>(rounded);
}

GeneratorRates GeneratorRates::from(const DissipatorRates& rates) {
    return {rates.gamma_pure / kHbar, rates.gamma_rad / kHbar, rates.pump_incoh / kHbar};
}

namespace {

// rate * L_{|a><b|}(rho) added in place, using
// L(rho)_ij = 2 rho_bb d_ia d_ja - d_ib rho_bj - rho_ib d_jb.
void add_dyad_dissipator(double rate, int a, int b, const Operator& rho, Operator& out) {
    if (rate == 0.0) return;
    out.row(b) -= rate * rho.row(b);
    out.col(b) -= rate * rho.col(b);
    out(a, a) += 2.0 * rate * rho(b, b);
}

constexpr int kG = index(BasisLabel::G);
constexpr int kXH = index(BasisLabel::XH);
constexpr int kXV = index(BasisLabel::XV);
constexpr int kB = index(BasisLabel::B);

}  // namespace

Operator apply_generator(const GeneratorRates& rates, const Operator& hamiltonian_ueV,
                         const Operator& rho) {
    const Complex minus_i_over_hbar(0.0, -1.0 / kHbar);
    Operator out = minus_i_over_hbar * (hamiltonian_ueV * rho - rho * hamiltonian_ueV);
    out += pure_dephasing_term(rates.gamma_pure, rho);
    for (int x : {kXH, kXV}) {
        add_dyad_dissipator(rates.gamma_rad, kG, x, rho, out);
        add_dyad_dissipator(rates.gamma_rad, x, kB, rho, out);
    }
    add_dyad_dissipator(rates.pump_incoh, kB, kG, rho, out);
    return out;
}

Operator liouvillian_apply(const DeviceModel& model, double t, const DensityMatrix& rho,
                           const Frame& frame) {
    return apply_generator(GeneratorRates::from(model.rates), hamiltonian(model, t, frame), rho);
}

Rk4Stepper::Rk4Stepper(const DeviceModel& model, const Frame& frame, const TimeGrid& grid)
    : grid_(grid), frame_(frame), rates_(GeneratorRates::from(model.rates)) {
    const std::size_t n = grid.intervals();
    const LevelEnergies levels = level_energies(model, model.bias);
    half_step_hamiltonians_.reserve(2 * n + 1);
    for (std::size_t k = 0; k <= 2 * n; ++k) {
        const double t = grid.start + 0.5 * static_cast<double>(k) * grid.step;
        half_step_hamiltonians_.push_back(hamiltonian(model, levels, t, frame));
    }
}

Operator Rk4Stepper::step(std::size_t j, const Operator& x) const {
    const double h = grid_.step;
    const Operator& h0 = half_step_hamiltonians_[2 * j];
    const Operator& h1 = half_step_hamiltonians_[2 * j + 1];
    const Operator& h2 = half_step_hamiltonians_[2 * j + 2];
    const Operator k1 = apply_generator(rates_, h0, x);
    const Operator k2 = apply_generator(rates_, h1, x + (0.5 * h) * k1);
    const Operator k3 = apply_generator(rates_, h1, x + (0.5 * h) * k2);
    const Operator k4 = apply_generator(rates_, h2, x + h * k3);
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

bool Rk4Stepper::advance(std::size_t j, Operator& x, StepMode mode,
                         const PhysicalityTolerances& tol) const {
    x = step(j, x);
    if (mode == StepMode::Conditioned) return false;

    x = 0.5 * (x + x.adjoint()).eval();
    bool renormalized = false;
    const double trace = x.trace().real();
    if (std::abs(trace - 1.0) > 1e-12) {
        x /= trace;
        renormalized = true;
    }
    const PhysicalityReport report = assert_physical(x, tol);
    if (!report.ok()) {
        std::ostringstream os;
        os << "state became unphysical at step " << j + 1 << " (t = " << grid_.time(j + 1)
           << " ps): " << report.summary();
        throw PropagationError(j + 1, os.str());
    }
    return renormalized;
}

Trajectory propagate(const DeviceModel& model, const DensityMatrix& rho0, const TimeGrid& grid,
                     const Frame& frame, const PhysicalityTolerances& tol) {
    const PhysicalityReport initial = assert_physical(rho0, tol);
    if (!initial.ok()) throw PropagationError(0, "initial state unphysical: " + initial.summary());

    const Rk4Stepper stepper(model, frame, grid);
    const std::size_t n = grid.intervals();
    Trajectory traj{grid, frame, {}, {}, {}};
    traj.times.reserve(n + 1);
    traj.states.reserve(n + 1);
    traj.times.push_back(grid.start);
    traj.states.push_back(rho0);

    Operator rho = rho0;
    for (std::size_t j = 0; j < n; ++j) {
        if (stepper.advance(j, rho, StepMode::State, tol)) traj.renormalized_steps.push_back(j + 1);
        traj.times.push_back(grid.time(j + 1));
        traj.states.push_back(rho);
    }
    return traj;
}

VecOperator vectorize(const Operator& op) {
    VecOperator v;
    for (int j = 0; j < kDim; ++j)
        for (int i = 0; i < kDim; ++i) v(i + kDim * j) = op(i, j);
    return v;
}

Operator unvectorize(const VecOperator& v) {
    Operator op;
    for (int j = 0; j < kDim; ++j)
        for (int i = 0; i < kDim; ++i) op(i, j) = v(i + kDim * j);
    return op;
}

namespace {

Superoperator kron(const Operator& a, const Operator& b) {
    Superoperator out;
    for (int i = 0; i < kDim; ++i)
        for (int j = 0; j < kDim; ++j) out.block<kDim, kDim>(kDim * i, kDim * j) = a(i, j) * b;
    return out;
}

}  // namespace

Superoperator liouvillian_matrix(const DeviceModel& model, double t, const Frame& frame) {
    const Operator id = Operator::Identity();
    const Operator h = hamiltonian(model, t, frame);
    const GeneratorRates rates = GeneratorRates::from(model.rates);

    // vec(A X B) = (B^T kron A) vec(X)
    Superoperator l = Complex(0.0, -1.0 / kHbar) * (kron(id, h) - kron(h.transpose(), id));

    for (int j = 0; j < kDim; ++j)
        for (int i = 0; i < kDim; ++i)
            if (i != j) l(i + kDim * j, i + kDim * j) -= 0.5 * rates.gamma_pure;

    auto add_channel = [&](double rate, BasisLabel a, BasisLabel b) {
        const Operator s = dyad(a, b);
        const Operator n = s.adjoint() * s;
        l += rate * (2.0 * kron(s.conjugate(), s) - kron(id, n) - kron(n.transpose(), id));
    };
    for (BasisLabel x : {BasisLabel::XH, BasisLabel::XV}) {
        add_channel(rates.gamma_rad, BasisLabel::G, x);
        add_channel(rates.gamma_rad, x, BasisLabel::B);
    }
    add_channel(rates.pump_incoh, BasisLabel::B, BasisLabel::G);
    return l;
}

Trajectory expm_oracle(const DeviceModel& model, const DensityMatrix& rho0, const TimeGrid& grid,
                       const Frame& frame, int substeps) {
    if (substeps < 1) throw std::invalid_argument("oracle substeps must be >= 1");
    const PhysicalityReport initial = assert_physical(rho0);
    if (!initial.ok()) throw PropagationError(0, "initial state unphysical: " + initial.summary());

    const std::size_t n = grid.intervals();
    const double h = grid.step / substeps;
    Trajectory traj{grid, frame, {}, {}, {}};
    traj.times.push_back(grid.start);
    traj.states.push_back(rho0);

    VecOperator v = vectorize(rho0);
    for (std::size_t j = 0; j < n; ++j) {
        for (int s = 0; s < substeps; ++s) {
            const double mid = grid.time(j) + (s + 0.5) * h;
            const Superoperator propagator = (liouvillian_matrix(model, mid, frame) * h).exp();
            v = propagator * v;
        }
        const Operator rho = unvectorize(v);
        const PhysicalityReport report = assert_physical(rho, {1e-8, 1e-8, 1e-8});
        if (!report.ok()) {
            throw PropagationError(j + 1, "oracle state unphysical: " + report.summary());
        }
        traj.times.push_back(grid.time(j + 1));
        traj.states.push_back(rho);
    }
    return traj;
}

double max_frobenius_deviation(const Trajectory& a, const Trajectory& b) {
    if (a.states.size() != b.states.size())
        throw std::invalid_argument("trajectories have different sample counts");
    double worst = 0.0;
    for (std::size_t i = 0; i < a.states.size(); ++i)
        worst = std::max(worst, (a.states[i] - b.states[i]).norm());
    return worst;
}

}  // namespace qdsdc
