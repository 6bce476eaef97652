#include "qdsdc/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace qdsdc {

ConfigError::ConfigError(int line, const std::string& message)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + message : message),
      line_(line),
      message_(message) {}

std::string_view to_string(Scenario scenario) {
    switch (scenario) {
        case Scenario::Fig5a: return "fig5a";
        case Scenario::Fig5b: return "fig5b";
        case Scenario::Fig3: return "fig3";
        case Scenario::Custom: return "custom";
    }
    return "custom";
}

std::optional<Scenario> parse_scenario(std::string_view name) {
    for (Scenario s : {Scenario::Custom, Scenario::Fig5a, Scenario::Fig5b, Scenario::Fig3})
        if (to_string(s) == name) return s;
    return std::nullopt;
}

namespace {

// Energies stored in meV (Energy) or ueV (SmallEnergy); both accept either unit.
enum class Kind { Energy, SmallEnergy, Time, Voltage, Slope, Curvature, Count, Number, Flag };

const char* canonical_unit(Kind kind) {
    switch (kind) {
        case Kind::Energy: return "meV";
        case Kind::SmallEnergy: return "ueV";
        case Kind::Time: return "ps";
        case Kind::Voltage: return "V";
        case Kind::Slope: return "meV/V";
        case Kind::Curvature: return "meV/V^2";
        default: return "";
    }
}

// Factor converting a value in `unit` into the stored unit; nullopt if not accepted.
std::optional<double> unit_factor(Kind kind, const std::string& unit) {
    const bool micro = unit == "ueV" || unit == "μeV" || unit == "µeV";
    switch (kind) {
        case Kind::Energy:
            if (unit == "meV") return 1.0;
            if (micro) return 1e-3;
            return std::nullopt;
        case Kind::SmallEnergy:
            if (micro) return 1.0;
            if (unit == "meV") return 1e3;
            return std::nullopt;
        case Kind::Time: return unit == "ps" ? std::optional(1.0) : std::nullopt;
        case Kind::Voltage: return unit == "V" ? std::optional(1.0) : std::nullopt;
        case Kind::Slope: return unit == "meV/V" ? std::optional(1.0) : std::nullopt;
        case Kind::Curvature:
            return unit == "meV/V^2" || unit == "meV/V²" ? std::optional(1.0) : std::nullopt;
        default: return unit.empty() ? std::optional(1.0) : std::nullopt;
    }
}

using Check = std::function<std::string(double)>;

Check any() {
    return [](double) { return std::string(); };
}
Check positive() {
    return [](double v) { return v > 0.0 ? std::string() : std::string("must be > 0"); };
}
Check non_negative() {
    return [](double v) { return v >= 0.0 ? std::string() : std::string("must be >= 0"); };
}
Check at_least(double lo) {
    return [lo](double v) {
        return v >= lo ? std::string() : "must be >= " + std::to_string(static_cast<long long>(lo));
    };
}
Check fraction() {
    return [](double v) {
        return v >= 0.0 && v < 1.0 ? std::string() : std::string("must lie in [0, 1)");
    };
}

struct Key {
    std::string section;
    std::string name;
    Kind kind;
    Check check;
    std::function<void(RunConfig&, double)> set;
    std::function<std::optional<double>(const RunConfig&)> get;
};

template <class Member>
Key plain(std::string section, std::string name, Kind kind, Check check, Member member) {
    return {std::move(section), std::move(name), kind, std::move(check),
            [member](RunConfig& c, double v) { member(c) = v; },
            [member](const RunConfig& c) {
                return std::optional<double>(member(const_cast<RunConfig&>(c)));
            }};
}

const std::vector<Key>& keys() {
    static const std::vector<Key> table = [] {
        std::vector<Key> k;
        auto add = [&](Key key) { k.push_back(std::move(key)); };
        // [device]
        add(plain("device", "v_ref", Kind::Voltage, any(),
                  [](RunConfig& c) -> double& { return c.model.stark.v_ref; }));
        add(plain("device", "anchor_energy", Kind::Energy, positive(),
                  [](RunConfig& c) -> double& { return c.model.stark.tpe_energy; }));
        add(plain("device", "binding", Kind::Energy, positive(),
                  [](RunConfig& c) -> double& { return c.model.stark.binding; }));
        add(plain("device", "slope_x", Kind::Slope, any(),
                  [](RunConfig& c) -> double& { return c.model.stark.slope_x; }));
        add(plain("device", "slope_xx", Kind::Slope, any(),
                  [](RunConfig& c) -> double& { return c.model.stark.slope_xx; }));
        add(plain("device", "curvature_x", Kind::Curvature, any(),
                  [](RunConfig& c) -> double& { return c.model.stark.curvature_x; }));
        add(plain("device", "curvature_xx", Kind::Curvature, any(),
                  [](RunConfig& c) -> double& { return c.model.stark.curvature_xx; }));
        add(plain("device", "v_min", Kind::Voltage, any(),
                  [](RunConfig& c) -> double& { return c.model.stark.v_min; }));
        add(plain("device", "v_max", Kind::Voltage, any(),
                  [](RunConfig& c) -> double& { return c.model.stark.v_max; }));
        add(plain("device", "fss", Kind::SmallEnergy, any(),
                  [](RunConfig& c) -> double& { return c.model.fss; }));
        add(plain("device", "bias", Kind::Voltage, any(),
                  [](RunConfig& c) -> double& { return c.model.bias; }));
        // [rates]
        add(plain("rates", "gamma_pure", Kind::SmallEnergy, non_negative(),
                  [](RunConfig& c) -> double& { return c.model.rates.gamma_pure; }));
        add(plain("rates", "gamma_rad", Kind::SmallEnergy, non_negative(),
                  [](RunConfig& c) -> double& { return c.model.rates.gamma_rad; }));
        add(plain("rates", "pump_incoh", Kind::SmallEnergy, non_negative(),
                  [](RunConfig& c) -> double& { return c.model.rates.pump_incoh; }));
        // [pulses]; `sigma` sets both widths and is read back as the two keys
        add({"pulses", "sigma", Kind::Time, positive(),
             [](RunConfig& c, double v) { c.model.tpe.width = c.model.control.width = v; },
             [](const RunConfig&) { return std::optional<double>(); }});
        add(plain("pulses", "tpe_amplitude", Kind::SmallEnergy, non_negative(),
                  [](RunConfig& c) -> double& { return c.model.tpe.amplitude; }));
        add(plain("pulses", "tpe_center", Kind::Time, any(),
                  [](RunConfig& c) -> double& { return c.model.tpe.center; }));
        add(plain("pulses", "tpe_sigma", Kind::Time, positive(),
                  [](RunConfig& c) -> double& { return c.model.tpe.width; }));
        add(plain("pulses", "tpe_energy", Kind::Energy, positive(),
                  [](RunConfig& c) -> double& { return c.model.tpe.photon_energy; }));
        add(plain("pulses", "control_amplitude", Kind::SmallEnergy, non_negative(),
                  [](RunConfig& c) -> double& { return c.model.control.amplitude; }));
        add(plain("pulses", "control_center", Kind::Time, any(),
                  [](RunConfig& c) -> double& { return c.model.control.center; }));
        add(plain("pulses", "control_sigma", Kind::Time, positive(),
                  [](RunConfig& c) -> double& { return c.model.control.width; }));
        add(plain("pulses", "control_energy", Kind::Energy, positive(),
                  [](RunConfig& c) -> double& { return c.model.control.photon_energy; }));
        // [grid]
        add(plain("grid", "t_start", Kind::Time, any(),
                  [](RunConfig& c) -> double& { return c.grid.state.start; }));
        add(plain("grid", "t_end", Kind::Time, any(),
                  [](RunConfig& c) -> double& { return c.grid.state.end; }));
        add(plain("grid", "step", Kind::Time, positive(),
                  [](RunConfig& c) -> double& { return c.grid.state.step; }));
        add(plain("grid", "outer_step", Kind::Time, positive(),
                  [](RunConfig& c) -> double& { return c.grid.outer_step; }));
        add(plain("grid", "inner_step", Kind::Time, positive(),
                  [](RunConfig& c) -> double& { return c.grid.inner_step; }));
        // [spectrum]
        add(plain("spectrum", "filter_width", Kind::SmallEnergy, positive(),
                  [](RunConfig& c) -> double& { return c.spectrum.filter_width; }));
        add(plain("spectrum", "window_end", Kind::Time, positive(),
                  [](RunConfig& c) -> double& { return c.spectrum.window_end; }));
        add(plain("spectrum", "bin", Kind::Energy, positive(),
                  [](RunConfig& c) -> double& { return c.spectrum.bin; }));
        add({"spectrum", "center", Kind::Energy, positive(),
             [](RunConfig& c, double v) { c.spectrum.center = v; },
             [](const RunConfig& c) { return c.spectrum.center; }});
        add(plain("spectrum", "half_span", Kind::Energy, positive(),
                  [](RunConfig& c) -> double& { return c.spectrum.half_span; }));
        add({"spectrum", "frame", Kind::Energy, non_negative(),
             [](RunConfig& c, double v) { c.spectrum.frame = v; },
             [](const RunConfig& c) { return c.spectrum.frame; }});
        // [sweep]
        add(plain("sweep", "v_start", Kind::Voltage, any(),
                  [](RunConfig& c) -> double& { return c.sweep.v_start; }));
        add(plain("sweep", "v_stop", Kind::Voltage, any(),
                  [](RunConfig& c) -> double& { return c.sweep.v_stop; }));
        add({"sweep", "count", Kind::Count, at_least(2),
             [](RunConfig& c, double v) { c.sweep.count = static_cast<int>(v); },
             [](const RunConfig& c) { return std::optional<double>(c.sweep.count); }});
        add(plain("sweep", "resonance_voltage", Kind::Voltage, any(),
                  [](RunConfig& c) -> double& { return c.sweep.resonance_voltage; }));
        add(plain("sweep", "notch_half_width", Kind::Energy, non_negative(),
                  [](RunConfig& c) -> double& { return c.sweep.notch_half_width; }));
        add({"sweep", "mask_notches", Kind::Flag, any(),
             [](RunConfig& c, double v) { c.sweep.mask_notches = v != 0.0; },
             [](const RunConfig& c) {
                 return std::optional<double>(c.sweep.mask_notches ? 1.0 : 0.0);
             }});
        add(plain("sweep", "prominence", Kind::Number, fraction(),
                  [](RunConfig& c) -> double& { return c.sweep.tracking.prominence; }));
        add(plain("sweep", "max_jump", Kind::Energy, positive(),
                  [](RunConfig& c) -> double& { return c.sweep.tracking.max_jump; }));
        add(plain("sweep", "max_deviation", Kind::Energy, positive(),
                  [](RunConfig& c) -> double& { return c.sweep.tracking.max_deviation; }));
        add({"sweep", "min_points", Kind::Count, at_least(2),
             [](RunConfig& c, double v) {
                 c.sweep.tracking.min_points = static_cast<std::size_t>(v);
             },
             [](const RunConfig& c) {
                 return std::optional<double>(static_cast<double>(c.sweep.tracking.min_points));
             }});
        add(plain("sweep", "slope_tolerance", Kind::Number, positive(),
                  [](RunConfig& c) -> double& { return c.sweep.classification.slope_tolerance; }));
        add(plain("sweep", "energy_tolerance", Kind::Energy, positive(),
                  [](RunConfig& c) -> double& {
                      return c.sweep.classification.energy_tolerance;
                  }));
        // [output]
        add(plain("output", "gamma", Kind::Number, positive(),
                  [](RunConfig& c) -> double& { return c.output.gamma; }));
        return k;
    }();
    return table;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

double parse_value(const Key& key, const std::string& text, int line) {
    const std::string where = "[" + key.section + "] " + key.name + ": ";
    if (key.kind == Kind::Flag) {
        if (text == "true" || text == "yes" || text == "on" || text == "1") return 1.0;
        if (text == "false" || text == "no" || text == "off" || text == "0") return 0.0;
        throw ConfigError(line, where + "expected true or false, got '" + text + "'");
    }
    double number = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    if (first != last && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, number);
    if (ec != std::errc() || ptr == first)
        throw ConfigError(line, where + "expected a number, got '" + text + "'");
    if (!std::isfinite(number)) throw ConfigError(line, where + "value must be finite");
    const std::string unit = trim(std::string_view(ptr, static_cast<std::size_t>(last - ptr)));

    const auto factor = unit_factor(key.kind, unit);
    if (!factor) {
        const std::string expected = canonical_unit(key.kind);
        if (expected.empty())
            throw ConfigError(line, where + "dimensionless value takes no unit, got '" + unit + "'");
        if (unit.empty()) throw ConfigError(line, where + "missing unit (expected " + expected + ")");
        throw ConfigError(line, where + "unit '" + unit + "' not accepted (expected " + expected +
                                    ")");
    }
    const double value = number * *factor;
    if (key.kind == Kind::Count && value != std::floor(value))
        throw ConfigError(line, where + "expected an integer, got '" + text + "'");
    if (const std::string problem = key.check(value); !problem.empty())
        throw ConfigError(line, where + "value " + text + " out of range: " + problem);
    return value;
}

std::string format_number(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

void validate_config(const RunConfig& c, const std::map<std::string, int>& lines) {
    auto line_of = [&](std::initializer_list<const char*> names) {
        int best = 0;
        for (const char* n : names) {
            auto it = lines.find(n);
            if (it != lines.end()) best = std::max(best, it->second);
        }
        return best;
    };
    try {
        c.model.validate();
    } catch (const std::exception& e) {
        throw ConfigError(line_of({"device.v_min", "device.v_max", "device.v_ref",
                                   "device.binding", "device.fss", "device.bias"}),
                          e.what());
    }
    try {
        (void)c.grid.state.intervals();
    } catch (const std::exception& e) {
        throw ConfigError(line_of({"grid.t_start", "grid.t_end", "grid.step"}), e.what());
    }
    if (!(c.grid.state.end > c.grid.state.start))
        throw ConfigError(line_of({"grid.t_start", "grid.t_end"}), "t_end must exceed t_start");
    auto multiple = [](double big, double small) {
        const double r = big / small;
        return std::abs(r - std::round(r)) < 1e-9 && std::round(r) >= 1.0;
    };
    if (!multiple(c.grid.outer_step, c.grid.state.step))
        throw ConfigError(line_of({"grid.outer_step", "grid.step"}),
                          "outer_step must be a multiple of the state step");
    if (!multiple(c.grid.outer_step, c.grid.inner_step))
        throw ConfigError(line_of({"grid.outer_step", "grid.inner_step"}),
                          "inner_step must divide outer_step");
    if (c.spectrum.window_end > c.grid.state.end + 1e-9 ||
        c.spectrum.window_end <= c.grid.state.start)
        throw ConfigError(line_of({"spectrum.window_end", "grid.t_end"}),
                          "window_end must lie inside the propagation grid");
    if (!(c.sweep.v_stop > c.sweep.v_start))
        throw ConfigError(line_of({"sweep.v_start", "sweep.v_stop"}),
                          "v_stop must exceed v_start");
    if (!c.model.stark.in_range(c.sweep.v_start) || !c.model.stark.in_range(c.sweep.v_stop))
        throw ConfigError(line_of({"sweep.v_start", "sweep.v_stop", "device.v_min", "device.v_max"}),
                          "sweep range leaves the Stark model validity range");
}

}  // namespace

bool RunConfig::operator==(const RunConfig& other) const {
    return model == other.model && grid == other.grid && spectrum == other.spectrum &&
           sweep == other.sweep && output == other.output;
}

std::vector<double> RunConfig::voltages() const {
    std::vector<double> v(static_cast<std::size_t>(sweep.count));
    const double step = (sweep.v_stop - sweep.v_start) / static_cast<double>(sweep.count - 1);
    for (std::size_t i = 0; i < v.size(); ++i) {
        // snap to 1e-12 V so that nominal grid points (e.g. 0.2 V) come out exact
        v[i] = std::round((sweep.v_start + static_cast<double>(i) * step) * 1e12) / 1e12;
    }
    return v;
}

EnergyAxis RunConfig::axis() const {
    const double center = spectrum.center ? *spectrum.center : model.stark.exciton(model.bias);
    return EnergyAxis::centered(center, spectrum.half_span, spectrum.bin);
}

Frame RunConfig::frame() const {
    if (!spectrum.frame) return Frame::rotating(model.tpe.photon_energy);
    return *spectrum.frame == 0.0 ? Frame::lab() : Frame::rotating(*spectrum.frame);
}

SimulationSettings RunConfig::simulation() const {
    SimulationSettings s;
    s.grid = grid.state;
    s.outer_step = grid.outer_step;
    s.inner_step = grid.inner_step;
    s.filter = {spectrum.filter_width, spectrum.window_end};
    s.axis = axis();
    s.frame = frame();
    return s;
}

std::optional<double> RunConfig::control_energy() const {
    if (!(model.control.amplitude > 0.0)) return std::nullopt;
    return model.control.photon_energy;
}

SweepConfig RunConfig::sweep_config(int workers) const {
    SweepConfig s;
    s.voltages = voltages();
    s.model = model;
    s.simulation = simulation();
    s.notch_centers = {model.tpe.photon_energy};
    if (control_energy()) s.notch_centers.push_back(*control_energy());
    s.notch_half_width = sweep.notch_half_width;
    s.mask_notches = sweep.mask_notches;
    s.workers = workers;
    return s;
}

RunConfig parse_config(std::string_view text) {
    RunConfig config;
    std::map<std::string, int> lines;
    std::string section;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t end = std::min(text.find('\n', pos), text.size());
        std::string line(text.substr(pos, end - pos));
        pos = end + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) {
            if (end == text.size()) break;
            continue;
        }
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(line_no, "malformed section header");
            section = trim(std::string_view(line).substr(1, line.size() - 2));
            const bool known = std::any_of(keys().begin(), keys().end(),
                                           [&](const Key& k) { return k.section == section; });
            if (!known) throw ConfigError(line_no, "unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(line_no, "expected key = value");
        if (section.empty()) throw ConfigError(line_no, "key outside of any section");
        const std::string name = trim(std::string_view(line).substr(0, eq));
        const std::string value = trim(std::string_view(line).substr(eq + 1));
        const auto it = std::find_if(keys().begin(), keys().end(), [&](const Key& k) {
            return k.section == section && k.name == name;
        });
        if (it == keys().end())
            throw ConfigError(line_no, "unknown key '" + name + "' in [" + section + "]");
        const std::string id = section + "." + name;
        if (lines.count(id))
            throw ConfigError(line_no, "duplicate key '" + name + "' in [" + section + "]");
        it->set(config, parse_value(*it, value, line_no));
        lines[id] = line_no;
        config.explicit_keys.insert(id);
        if (id == "pulses.sigma") {
            config.explicit_keys.insert("pulses.tpe_sigma");
            config.explicit_keys.insert("pulses.control_sigma");
        }
        if (end == text.size()) break;
    }
    validate_config(config, lines);
    return config;
}

void validate_config(const RunConfig& config) { validate_config(config, {}); }

RunConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(0, "cannot read configuration file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& config) {
    std::ostringstream os;
    std::string section;
    for (const Key& key : keys()) {
        const auto value = key.get(config);
        if (!value) continue;
        if (key.section != section) {
            if (!section.empty()) os << '\n';
            section = key.section;
            os << '[' << section << "]\n";
        }
        os << key.name << " = ";
        if (key.kind == Kind::Flag) {
            os << (*value != 0.0 ? "true" : "false");
        } else {
            os << format_number(*value);
            if (const std::string unit = canonical_unit(key.kind); !unit.empty()) os << ' ' << unit;
        }
        os << '\n';
    }
    return os.str();
}

std::uint64_t config_hash(const RunConfig& config) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : serialize_config(config)) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hash_string(std::uint64_t hash) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

namespace {

// Axis spanning every line the sweep can show, padded by 0.5 meV, on the bin grid.
void cover_lines(RunConfig& c) {
    const StarkModel& s = c.model.stark;
    std::vector<double> e{c.model.tpe.photon_energy};
    if (c.control_energy()) e.push_back(*c.control_energy());
    for (double v : {c.sweep.v_start, c.sweep.v_stop}) {
        e.push_back(s.exciton(v));
        e.push_back(s.biexciton_line(v));
        if (c.control_energy()) e.push_back(s.biexciton(v) - *c.control_energy());
    }
    const double lo = *std::min_element(e.begin(), e.end()) - 0.5;
    const double hi = *std::max_element(e.begin(), e.end()) + 0.5;
    const double bin = c.spectrum.bin;
    c.spectrum.center = std::round(0.5 * (lo + hi) / bin) * bin;
    c.spectrum.half_span = std::ceil(0.5 * (hi - lo) / bin) * bin;
}

}  // namespace

void apply_scenario(RunConfig& c, Scenario scenario) {
    c.scenario = scenario;
    if (scenario == Scenario::Custom) return;
    auto free = [&](const char* id) { return c.explicit_keys.count(id) == 0; };
    const StarkModel& s = c.model.stark;

    double center_voltage = s.v_ref;
    double half_range = 0.12;
    TrackingOptions tracking{0.005, 0.1, 0.02, 3};
    if (scenario == Scenario::Fig3) {
        if (free("pulses.control_amplitude")) c.model.control.amplitude = 0.0;
    } else {
        const double vr = c.sweep.resonance_voltage;
        center_voltage = vr;
        half_range = 1.2;
        tracking = {0.02, 0.3, 0.05, 3};
        if (free("pulses.control_energy"))
            c.model.control.photon_energy =
                scenario == Scenario::Fig5a ? s.exciton(vr) : s.biexciton_line(vr);
    }
    if (free("device.bias")) c.model.bias = center_voltage;
    if (free("sweep.v_start")) c.sweep.v_start = center_voltage - half_range;
    if (free("sweep.v_stop")) c.sweep.v_stop = center_voltage + half_range;
    if (free("sweep.count")) c.sweep.count = 25;
    if (free("sweep.prominence")) c.sweep.tracking.prominence = tracking.prominence;
    if (free("sweep.max_jump")) c.sweep.tracking.max_jump = tracking.max_jump;
    if (free("sweep.max_deviation")) c.sweep.tracking.max_deviation = tracking.max_deviation;
    if (free("spectrum.center") && free("spectrum.half_span")) cover_lines(c);
}

double crossing_voltage(const RunConfig& c) {
    return c.scenario == Scenario::Fig3 ? c.model.stark.v_ref : c.sweep.resonance_voltage;
}

std::optional<double> crossing_energy(const RunConfig& c) {
    const double v = crossing_voltage(c);
    switch (c.scenario) {
        case Scenario::Fig5a: return c.model.stark.biexciton_line(v);
        case Scenario::Fig5b: return c.model.stark.exciton(v);
        case Scenario::Fig3: return c.model.stark.biexciton_line(v);
        case Scenario::Custom: return std::nullopt;
    }
    return std::nullopt;
}

}  // namespace qdsdc
