#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "qdsdc/checks.hpp"
#include "qdsdc/spectrum.hpp"

using namespace qdsdc;
using BL = BasisLabel;

namespace {

const Frame kFrame = Frame::rotating(1341.17);

double max_of(const std::vector<double>& v) { return *std::max_element(v.begin(), v.end()); }

}  // namespace

TEST_CASE("energy axis") {
    const EnergyAxis a = EnergyAxis::centered(1340.0, 1.0, 0.005);
    CHECK(a.count == 401);
    CHECK(a.energy(200) == doctest::Approx(1340.0));
    CHECK(representable_half_band(0.05) == doctest::Approx(M_PI * kHbar / 1000.0 / 0.05));
}

TEST_CASE("g(t, 0) is the V-branch upper population and |g| <= 1") {
    const DeviceModel m;
    const auto traj = propagate(m, dyad(BL::G, BL::G), {0.0, 600.0, 0.05}, kFrame);
    const CorrelationGrid g =
        qrt_correlation(m, traj, emission_operator_v(), {10.0, 0.05, 300.0, kFrame, 2});
    REQUIRE(g.outer_samples() == 31);
    for (std::size_t k = 0; k < g.outer_samples(); ++k) {
        const auto& s = traj.states[k * 200];
        CHECK(std::abs(g.values[k][0] - (s(2, 2) + s(3, 3))) < 1e-10);
        CHECK(g.values[k].size() == (30 - k) * 200 + 1);
        for (const Complex& v : g.values[k]) CHECK(std::abs(v) <= 1.0 + 1e-9);
    }
}

TEST_CASE("frame mismatch is refused") {
    const DeviceModel m;
    const auto traj = propagate(m, dyad(BL::G, BL::G), {0.0, 10.0, 0.05}, kFrame);
    CHECK_THROWS(qrt_correlation(m, traj, emission_operator_v(),
                                 {0.5, 0.05, 10.0, Frame::rotating(1340.0), 1}));
}

TEST_CASE("coherence of the undriven X decays at gamma_rad + gamma_pure/2") {
    const DeviceModel m = DeviceModel{}.undriven();
    const auto traj = propagate(m, dyad(BL::XV, BL::XV), {0.0, 200.0, 0.05}, kFrame);
    const auto g = qrt_correlation(m, traj, emission_operator_v(), {200.0, 0.05, 200.0, kFrame, 1});
    const auto& row = g.values[0];
    const double rate = -std::log(std::abs(row.back()) / std::abs(row.front())) / 200.0;
    CHECK(rate == doctest::Approx(ueV_to_rad_per_ps(4.0 + 2.0)).epsilon(0.005));
}

TEST_CASE("filtered spectrum matches the closed form for an exponential correlation") {
    const Frame f = Frame::rotating(1340.0);
    for (double omega0 : {0.0, 0.05, -0.3}) {
        for (double kappa : {0.005, 0.02}) {
            const FilterSpec filter{4.0, 300.0};
            const EnergyAxis axis =
                EnergyAxis::centered(1340.0 + omega0 * kHbar / 1000.0, 0.1, 0.005);
            const Spectrum num = filtered_spectrum(
                exponential_correlation(kappa, omega0, 300.0, 0.1, 0.1, f), filter, axis);
            const Spectrum ref = exponential_spectrum_exact(kappa, omega0, filter, axis, f);
            const double top = max_of(ref.intensity);
            for (std::size_t i = 0; i < axis.count; ++i)
                CHECK(std::abs(num.intensity[i] - ref.intensity[i]) / top < 1e-6);
        }
    }
}

TEST_CASE("bins outside the representable band are refused") {
    const auto g = exponential_correlation(0.01, 0.0, 50.0, 1.0, 0.5, kFrame);
    const double band = representable_half_band(0.5);
    CHECK_THROWS(filtered_spectrum(g, {4.0, 50.0},
                                   EnergyAxis::centered(kFrame.reference + band + 0.5, 0.1, 0.01)));
    CHECK_NOTHROW(filtered_spectrum(g, {4.0, 50.0},
                                    EnergyAxis::centered(kFrame.reference, 0.1, 0.01)));
}

TEST_CASE("filtered spectrum is identical for any worker count") {
    const auto g = exponential_correlation(0.01, 0.02, 100.0, 0.5, 0.05, kFrame);
    const EnergyAxis axis = EnergyAxis::centered(kFrame.reference, 0.2, 0.005);
    const auto a = filtered_spectrum(g, {4.0, 100.0}, axis, 1);
    const auto b = filtered_spectrum(g, {4.0, 100.0}, axis, 5);
    CHECK(a.intensity == b.intensity);
}

TEST_CASE("local maxima") {
    Spectrum s{{0.0, 1.0, 9}, {0, 1, 0, 2, 2, 2, 0, 3, 5}};
    const auto peaks = local_maxima(s, 0.5);
    REQUIRE(peaks.size() == 2);
    CHECK(peaks[0].bin == 1);
    CHECK(peaks[1].bin == 4);
    CHECK(local_maxima(s, 1.5).size() == 1);
}

TEST_CASE("AC-Stark scale") {
    CHECK(ac_stark_scale(0.0, 1.0) == 0.0);
    CHECK(ac_stark_scale(100.0, 0.0) == doctest::Approx(0.2));
    CHECK(ac_stark_scale(100.0, 10.0) == doctest::Approx(0.002).epsilon(1e-3));
}

TEST_CASE("SDC peak check on synthetic spectra") {
    const EnergyAxis axis = EnergyAxis::centered(1338.0, 2.0, 0.005);
    Spectrum s{axis, std::vector<double>(axis.count, 0.0)};
    for (std::size_t i = 0; i < axis.count; ++i) {
        const double d = (axis.energy(i) - 1338.5) / 0.01;
        s.intensity[i] = 1.0 / (1.0 + d * d);
    }
    const auto hit = sdc_peak_check(s, 2680.0, 1341.5, 0.1, 0.01);
    CHECK(hit.detected);
    CHECK(hit.pass);
    CHECK(std::abs(hit.deviation) < 0.005);
    const auto miss = sdc_peak_check(s, 2680.0, 1341.2, 0.1, 0.01);
    CHECK_FALSE(miss.pass);
    const Spectrum empty{axis, std::vector<double>(axis.count, 0.0)};
    const auto none = sdc_peak_check(empty, 2680.0, 1341.5, 0.1, 0.01);
    CHECK_FALSE(none.detected);
    CHECK_FALSE(none.diagnostic.empty());
    const auto sym = sdc_peak_check(s, 2680.0, 1340.0, 0.1, 0.01);
    CHECK(sym.degenerate);
    CHECK_FALSE(sym.pass);
}

TEST_CASE("undriven X decay spectrum peaks at the X line") {
    const DeviceModel m = DeviceModel{}.undriven();
    SimulationSettings st;
    st.initial = dyad(BL::XV, BL::XV);
    const double ex = level_energies(m, m.bias).exciton_v;
    st.axis = EnergyAxis::centered(ex, 0.1, 0.005);
    const Spectrum s = simulate_spectrum(m, st, 2);
    const auto top = std::max_element(s.intensity.begin(), s.intensity.end());
    CHECK(std::abs(s.axis.energy(static_cast<std::size_t>(top - s.intensity.begin())) - ex) <
          0.005 + 1e-9);
}

TEST_CASE("full width at half maximum of a Lorentzian") {
    const EnergyAxis axis = EnergyAxis::centered(0.0, 1.0, 0.001);
    Spectrum s{axis, std::vector<double>(axis.count)};
    for (std::size_t i = 0; i < axis.count; ++i) {
        const double d = axis.energy(i) / 0.05;
        s.intensity[i] = 1.0 / (1.0 + d * d);
    }
    CHECK(full_width_half_max(s) == doctest::Approx(0.1).epsilon(1e-3));
}
