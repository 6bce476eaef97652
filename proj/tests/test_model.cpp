#include <doctest.h>

#include <random>

#include "qdsdc/model.hpp"
#include "qdsdc/propagator.hpp"

using namespace qdsdc;
using BL = BasisLabel;

TEST_CASE("Stark model identities") {
    const StarkModel s;
    CHECK(s.biexciton(s.v_ref) == doctest::Approx(2.0 * s.tpe_energy).epsilon(1e-15));
    for (double v = -1.4; v <= 1.4; v += 0.1) {
        CHECK(s.biexciton(v) == doctest::Approx(s.exciton(v) + s.biexciton_line(v)));
        CHECK(s.biexciton_slope(v) ==
              doctest::Approx(s.exciton_slope(v) + s.biexciton_line_slope(v)));
    }
    CHECK(s.exciton(s.v_ref) - s.biexciton_line(s.v_ref) == doctest::Approx(s.binding));
}

TEST_CASE("curvature enters the slope") {
    StarkModel s;
    s.curvature_x = 0.2;
    const double h = 1e-4;
    const double fd = (s.exciton(0.3 + h) - s.exciton(0.3 - h)) / (2 * h);
    CHECK(fd == doctest::Approx(s.exciton_slope(0.3)).epsilon(1e-8));
}

TEST_CASE("level energies: ordering, fine structure and range") {
    DeviceModel m;
    m.fss = 10.0;
    const LevelEnergies e = level_energies(m, 0.0);
    CHECK(e.ground == 0.0);
    CHECK(e.exciton_h - e.exciton_v == doctest::Approx(0.010));
    CHECK(e.biexciton > e.exciton_h);
    CHECK_THROWS_AS(level_energies(m, 5.0), std::out_of_range);
}

TEST_CASE("model validation rejects broken parameters") {
    DeviceModel m;
    CHECK_NOTHROW(m.validate());
    DeviceModel bad = m;
    bad.tpe.width = -5.0;
    CHECK_THROWS(bad.validate());
    bad = m;
    bad.rates.gamma_rad = -1.0;
    CHECK_THROWS(bad.validate());
    bad = m;
    bad.bias = 3.0;
    CHECK_THROWS(bad.validate());
}

TEST_CASE("undriven lab Hamiltonian is diag(0, E_H, E_V, E_B)") {
    DeviceModel m = DeviceModel{}.undriven();
    m.fss = 5.0;
    const LevelEnergies e = level_energies(m, m.bias);
    const Operator h = hamiltonian(m, 123.0, Frame::lab());
    CHECK(h(0, 0).real() == 0.0);
    CHECK(h(1, 1).real() == doctest::Approx(1000.0 * e.exciton_h));
    CHECK(h(2, 2).real() == doctest::Approx(1000.0 * e.exciton_v));
    CHECK(h(3, 3).real() == doctest::Approx(1000.0 * e.biexciton));
    CHECK((h - Operator(h.diagonal().asDiagonal())).norm() == 0.0);
}

TEST_CASE("rotating at E_B/2 without fine structure: G and B degenerate") {
    DeviceModel m = DeviceModel{}.undriven();
    m.bias = m.stark.v_ref;
    const LevelEnergies e = level_energies(m, m.bias);
    const Operator h = hamiltonian(m, 0.0, Frame::rotating(0.5 * e.biexciton));
    CHECK(std::abs(h(0, 0)) < 1e-9);
    CHECK(std::abs(h(3, 3)) < 1e-6);
    CHECK(h(1, 1).real() == doctest::Approx(h(2, 2).real()));
}

TEST_CASE("Hamiltonian Hermitian for random times and biases") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> t(0.0, 600.0), v(-1.4, 1.4);
    DeviceModel m;
    for (int i = 0; i < 1000; ++i) {
        m.bias = v(rng);
        CHECK(hermiticity_deviation(hamiltonian(m, t(rng), Frame::rotating(1341.17))) == 0.0);
    }
}

TEST_CASE("pulse amplitude: peak and one-sigma modulus") {
    const PulseSpec p{288.7, 200.0, 100.0, 1341.17, Polarization::H};
    CHECK(std::abs(pulse_amplitude(p, 200.0)) == doctest::Approx(288.7 / kHbar));
    CHECK(std::abs(pulse_amplitude(p, 300.0)) ==
          doctest::Approx(288.7 / kHbar * std::exp(-0.5)));
    CHECK(p.envelope(200.0) == 1.0);
}

TEST_CASE("coupling sits on the polarization branch of each pulse") {
    DeviceModel m;
    m.control.amplitude = 0.0;
    const Operator h = hamiltonian(m, m.tpe.center, Frame::rotating(m.tpe.photon_energy));
    CHECK(std::abs(h(0, 1)) > 0.0);
    CHECK(std::abs(h(1, 3)) > 0.0);
    CHECK(std::abs(h(0, 2)) == 0.0);
    CHECK(std::abs(h(2, 3)) == 0.0);
    CHECK(std::abs(h(0, 3)) == 0.0);
}

TEST_CASE("lab and rotating frames agree on populations for a small-carrier toy") {
    DeviceModel m;
    m.stark.tpe_energy = 2.0;
    m.stark.binding = 0.5;
    m.stark.v_ref = 0.0;
    m.stark.v_min = -1.0;
    m.stark.v_max = 1.0;
    m.bias = 0.0;
    m.tpe = {150.0, 10.0, 4.0, 2.0, Polarization::H};
    m.control = {80.0, 12.0, 4.0, 2.2, Polarization::V};
    const TimeGrid g{0.0, 20.0, 0.002};
    const auto lab = propagate(m, dyad(BL::G, BL::G), g, Frame::lab());
    const auto rot = propagate(m, dyad(BL::G, BL::G), g, Frame::rotating(2.0));
    double worst = 0.0;
    for (std::size_t i = 0; i < lab.states.size(); ++i)
        for (int k = 0; k < 4; ++k)
            worst = std::max(worst, std::abs(lab.states[i](k, k) - rot.states[i](k, k)));
    CHECK(worst < 1e-6);
    // the drive actually moved population
    CHECK(lab.states.back()(0, 0).real() < 0.99);
}
