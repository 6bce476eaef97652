#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "qdsdc/checks.hpp"
#include "qdsdc/pipeline.hpp"

namespace py = pybind11;
using namespace qdsdc;

namespace {

py::array_t<double> to_array(const std::vector<double>& v) {
    const std::vector<py::ssize_t> shape{static_cast<py::ssize_t>(v.size())};
    const std::vector<py::ssize_t> strides{static_cast<py::ssize_t>(sizeof(double))};
    return py::array_t<double>(shape, strides, v.data());
}

py::array_t<double> energies(const EnergyAxis& axis) {
    std::vector<double> e(axis.count);
    for (std::size_t k = 0; k < axis.count; ++k) e[k] = axis.energy(k);
    return to_array(e);
}

// rows = energy bins, columns = voltages, as in the TSV
py::array_t<double> map_matrix(const SpectralMap& map) {
    const auto rows = static_cast<py::ssize_t>(map.axis.count);
    const auto cols = static_cast<py::ssize_t>(map.columns.size());
    py::array_t<double> out({rows, cols});
    auto m = out.mutable_unchecked<2>();
    for (py::ssize_t i = 0; i < cols; ++i)
        for (py::ssize_t k = 0; k < rows; ++k) m(k, i) = map.columns[i][k];
    return out;
}

py::dict track_dict(const PeakTrack& t) {
    std::vector<double> v, e, h;
    for (const TrackPoint& p : t.points) {
        v.push_back(p.voltage);
        e.push_back(p.energy);
        h.push_back(p.intensity);
    }
    py::dict d;
    d["label"] = std::string(to_string(t.label));
    d["slope"] = t.slope;
    d["intercept"] = t.intercept;
    d["residual"] = t.residual;
    d["voltage"] = to_array(v);
    d["energy"] = to_array(e);
    d["intensity"] = to_array(h);
    return d;
}

BasisLabel label_from(const std::string& name) {
    for (BasisLabel l : kAllLabels) {
        std::string compact(to_string(l));
        std::erase(compact, '_');
        if (to_string(l) == name || compact == name) return l;
    }
    throw py::value_error("unknown basis label '" + name + "' (use G, X_H, X_V or B)");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Four-level quantum dot emission spectra under two-laser driving";
    m.attr("__version__") = QDSDC_VERSION;
    m.attr("HBAR_UEV_PS") = kHbar;

    static py::exception<ConfigError> config_error(m, "ConfigError", PyExc_ValueError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const ConfigError& e) {
            py::object err = py::reinterpret_borrow<py::object>(config_error.ptr())(e.what());
            err.attr("line") = e.line();
            PyErr_SetObject(config_error.ptr(), err.ptr());
        }
    });

    py::class_<RunConfig>(m, "RunConfig", "Resolved run configuration")
        .def(py::init<>())
        .def_static("parse", &parse_config, py::arg("text"), "Parse configuration text")
        .def_static("load", &load_config, py::arg("path"), "Read a configuration file")
        .def("text", &serialize_config, "Canonical text of every resolved value")
        .def_property_readonly("hash", [](const RunConfig& c) { return hash_string(config_hash(c)); })
        .def_property_readonly("scenario",
                               [](const RunConfig& c) { return std::string(to_string(c.scenario)); })
        .def(
            "with_scenario",
            [](RunConfig c, const std::string& name) {
                const auto s = parse_scenario(name);
                if (!s) throw ConfigError(0, "unknown scenario '" + name + "'");
                apply_scenario(c, *s);
                validate_config(c);
                return c;
            },
            py::arg("name"), "Copy with a preset applied to keys the file left unset")
        .def_property(
            "bias", [](const RunConfig& c) { return c.model.bias; },
            [](RunConfig& c, double v) { c.model.bias = v; }, "operating bias, V")
        .def_property(
            "mask_notches", [](const RunConfig& c) { return c.sweep.mask_notches; },
            [](RunConfig& c, bool v) { c.sweep.mask_notches = v; })
        .def_property(
            "control_energy", [](const RunConfig& c) { return c.model.control.photon_energy; },
            [](RunConfig& c, double v) { c.model.control.photon_energy = v; }, "meV")
        .def_property(
            "control_amplitude", [](const RunConfig& c) { return c.model.control.amplitude; },
            [](RunConfig& c, double v) { c.model.control.amplitude = v; }, "ueV")
        .def_property_readonly("voltages", [](const RunConfig& c) { return to_array(c.voltages()); })
        .def_property_readonly("energies", [](const RunConfig& c) { return energies(c.axis()); })
        .def(
            "levels",
            [](const RunConfig& c, double v) {
                const LevelEnergies e = level_energies(c.model, v);
                py::dict d;
                d["G"] = e.ground;
                d["XH"] = e.exciton_h;
                d["XV"] = e.exciton_v;
                d["B"] = e.biexciton;
                d["XX"] = e.biexciton - e.exciton_v;
                return d;
            },
            py::arg("voltage"), "Level energies (meV) at a bias")
        .def("__eq__", [](const RunConfig& a, const RunConfig& b) { return a == b; })
        .def("__repr__", [](const RunConfig& c) {
            return "<RunConfig " + std::string(to_string(c.scenario)) + " " +
                   hash_string(config_hash(c)) + ">";
        });

    m.def(
        "simulate",
        [](const RunConfig& c, int workers) {
            validate_config(c);
            SpectralMap map;
            {
                py::gil_scoped_release release;
                map = run_simulation(c, workers);
            }
            if (!map.complete()) throw std::runtime_error(map.info[0].diagnostic);
            return py::make_tuple(energies(map.axis), to_array(map.columns[0]));
        },
        py::arg("config"), py::arg("workers") = 1,
        "Spectrum at the configured bias: (energies meV, intensities)");

    m.def(
        "sweep",
        [](const RunConfig& c, int workers) {
            validate_config(c);
            SweepOutcome r;
            {
                py::gil_scoped_release release;
                r = run_configured_sweep(c, workers);
            }
            py::list tracks;
            for (const PeakTrack& t : r.tracks) tracks.append(track_dict(t));
            py::dict d;
            d["voltages"] = to_array(r.map.voltages);
            d["energies"] = energies(r.map.axis);
            d["intensity"] = map_matrix(r.map);
            d["tracks"] = tracks;
            d["complete"] = r.map.complete();
            return d;
        },
        py::arg("config"), py::arg("workers") = 1,
        "Bias sweep: voltages, energies, intensity[energy, voltage] and classified tracks");

    m.def(
        "write_sweep",
        [](const RunConfig& c, const std::string& out, int workers) {
            validate_config(c);
            py::gil_scoped_release release;
            return write_sweep_outputs(run_configured_sweep(c, workers), c, out);
        },
        py::arg("config"), py::arg("out"), py::arg("workers") = 1,
        "Run a sweep and write map TSV, sidecar, tracks and heatmap; returns the paths");

    m.def(
        "validate",
        [](const RunConfig& c, int workers) {
            std::vector<CheckResult> results;
            {
                py::gil_scoped_release release;
                results = invariant_suite(c, workers);
            }
            py::list out;
            for (const auto& r : results) out.append(py::make_tuple(r.module, r.name, r.pass, r.detail));
            return out;
        },
        py::arg("config"), py::arg("workers") = 1,
        "Invariant suite: list of (module, name, passed, detail)");

    m.def(
        "oracle",
        [](const RunConfig& c, double step, int substeps) {
            TimeGrid grid = c.grid.state;
            grid.step = step;
            OracleReport r;
            {
                py::gil_scoped_release release;
                r = oracle_comparison(c.model, c.frame(), grid, substeps);
            }
            py::dict d;
            d["max_deviation"] = r.max_deviation;
            d["order_ratio"] = r.order_ratio;
            d["oracle_trace_deviation"] = r.oracle_trace_deviation;
            d["passed"] = r.deviation_ok() && r.order_ok() && r.trace_ok();
            d["report"] = r.text();
            return d;
        },
        py::arg("config"), py::arg("step") = 0.1, py::arg("substeps") = 16,
        "RK4 against the matrix-exponential propagator");

    m.def(
        "populations",
        [](const RunConfig& c, const std::string& initial, double t_end, double step,
           bool undriven) {
            const DeviceModel model = undriven ? c.model.undriven() : c.model;
            const BasisLabel l = label_from(initial);
            Trajectory t;
            {
                py::gil_scoped_release release;
                t = propagate(model, dyad(l, l), {0.0, t_end, step}, c.frame());
            }
            const auto n = static_cast<py::ssize_t>(t.states.size());
            py::array_t<double> pops({n, py::ssize_t{4}});
            auto p = pops.mutable_unchecked<2>();
            for (py::ssize_t i = 0; i < n; ++i)
                for (int k = 0; k < 4; ++k) p(i, k) = t.states[i](k, k).real();
            std::vector<double> times(t.states.size());
            for (std::size_t i = 0; i < times.size(); ++i) times[i] = t.grid.time(i);
            return py::make_tuple(to_array(times), pops);
        },
        py::arg("config"), py::arg("initial") = "G", py::arg("t_end") = 600.0,
        py::arg("step") = 0.05, py::arg("undriven") = false,
        "Propagate from a basis state: (times ps, populations[time, G/XH/XV/B])");
}
