#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "qdsdc/model.hpp"
#include "qdsdc/propagator.hpp"
#include "qdsdc/spectrum.hpp"
#include "qdsdc/sweep.hpp"

namespace qdsdc {

/// Configuration problem, with the 1-based line it refers to (0 = whole file).
class ConfigError : public std::runtime_error {
public:
    ConfigError(int line, const std::string& message);
    int line() const { return line_; }
    /// The message without the line prefix.
    const std::string& message() const { return message_; }

private:
    int line_;
    std::string message_;
};

enum class Scenario { Custom, Fig5a, Fig5b, Fig3 };
std::string_view to_string(Scenario scenario);
std::optional<Scenario> parse_scenario(std::string_view name);

struct GridSection {
    TimeGrid state{0.0, 600.0, 0.05};
    double outer_step = 0.5;  // ps
    double inner_step = 0.05; // ps
    bool operator==(const GridSection&) const = default;
};

struct SpectrumSection {
    double filter_width = 4.0;    // ueV
    double window_end = 300.0;    // ps
    double bin = 0.005;           // meV
    std::optional<double> center; // meV; unset = E_X at the bias
    double half_span = 3.0;       // meV
    std::optional<double> frame;  // meV; unset = TPE photon energy
    bool operator==(const SpectrumSection&) const = default;
};

struct SweepSection {
    double v_start = -1.0;            // V
    double v_stop = 1.4;              // V
    int count = 25;
    double resonance_voltage = 0.2;   // V, where the control meets its line
    double notch_half_width = 0.4;    // meV
    bool mask_notches = false;
    TrackingOptions tracking;
    ClassificationOptions classification;
    bool operator==(const SweepSection&) const = default;
};

struct OutputSection {
    double gamma = 0.5;
    bool operator==(const OutputSection&) const = default;
};

struct RunConfig {
    DeviceModel model;
    GridSection grid;
    SpectrumSection spectrum;
    SweepSection sweep;
    OutputSection output;
    Scenario scenario = Scenario::Custom;
    /// "section.key" for every key given in the file; presets leave these alone.
    std::set<std::string> explicit_keys;

    bool operator==(const RunConfig& other) const;

    std::vector<double> voltages() const;
    EnergyAxis axis() const;
    Frame frame() const;
    SimulationSettings simulation() const;
    SweepConfig sweep_config(int workers) const;
    /// Control photon energy for classification; nullopt with the control off.
    std::optional<double> control_energy() const;
};

/// Parses `[section]` / `key = value` text. Every physical value needs a unit.
/// Throws ConfigError naming the line on unknown sections or keys, missing or
/// wrong units, malformed numbers and out-of-range values.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::string& path);

/// Cross-field checks of parse_config, for configs edited after parsing.
void validate_config(const RunConfig& config);

/// Canonical text listing every resolved value; parse_config reads it back to
/// an equal RunConfig (scenario presets are already folded in).
std::string serialize_config(const RunConfig& config);

/// FNV-1a 64 of the canonical text.
std::uint64_t config_hash(const RunConfig& config);
std::string hash_string(std::uint64_t hash);

/// Applies a preset to every field the file did not set explicitly.
///   fig5a  control at E_X(V_res): SDC crosses the XX line at V_res.
///   fig5b  control at E_XX(V_res): SDC crosses the X line at V_res.
///   fig3   control off, fine sweep across the two-photon resonance V_ref.
///   custom no change.
void apply_scenario(RunConfig& config, Scenario scenario);

/// The line energy a preset's avoided crossing forms around, at the voltage
/// returned by crossing_voltage(). nullopt for custom.
std::optional<double> crossing_energy(const RunConfig& config);
double crossing_voltage(const RunConfig& config);

}  // namespace qdsdc
