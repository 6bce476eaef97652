#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <thread>

#include "qdsdc/checks.hpp"
#include "qdsdc/pipeline.hpp"

using namespace qdsdc;

namespace {

enum Exit { kOk = 0, kValidation = 1, kConfig = 2, kRuntime = 3 };

struct Options {
    std::string config;
    std::string out = ".";
    int workers = 0;
    bool mask = false;
    std::string scenario = "custom";
    double oracle_step = 0.1;
    int oracle_substeps = 16;
};

RunConfig resolve(const Options& o) {
    RunConfig c = o.config.empty() ? RunConfig{} : load_config(o.config);
    const auto scenario = parse_scenario(o.scenario);
    if (!scenario) throw ConfigError(0, "unknown scenario '" + o.scenario + "'");
    apply_scenario(c, *scenario);
    if (o.mask) c.sweep.mask_notches = true;
    validate_config(c);
    return c;
}

int workers(const Options& o) {
    if (o.workers > 0) return o.workers;
    return std::max(1u, std::thread::hardware_concurrency());
}

int cmd_simulate(const Options& o) {
    const RunConfig c = resolve(o);
    const SpectralMap map = run_simulation(c, workers(o));
    if (!map.complete()) {
        std::cerr << "simulation failed: " << map.info[0].diagnostic << '\n';
        return kRuntime;
    }
    const auto path = std::filesystem::path(o.out) / "spectrum.tsv";
    write_map(map, path, output_header(c, "simulate " + std::string(to_string(c.scenario))));
    const Spectrum s = map.column(0);
    const double top = *std::max_element(s.intensity.begin(), s.intensity.end());
    std::printf("bias %.6g V, config %s\n", c.model.bias, hash_string(config_hash(c)).c_str());
    for (const Peak& p : local_maxima(s, 0.01 * top))
        std::printf("  peak %.4f meV  relative height %.4f\n", p.energy, p.height / top);
    std::printf("wrote %s\n", path.string().c_str());
    return kOk;
}

int cmd_sweep(const Options& o) {
    const RunConfig c = resolve(o);
    const SweepOutcome r = run_configured_sweep(c, workers(o));
    for (const PeakTrack& t : r.tracks) {
        if (t.label == TrackLabel::Unknown) continue;
        std::printf("track %-3s %2zu points  V %+.3f..%+.3f  slope %+.4f meV/V  rms %.4f meV\n",
                    std::string(to_string(t.label)).c_str(), t.points.size(),
                    t.points.front().voltage, t.points.back().voltage, t.slope, t.residual);
    }
    for (const std::string& p : write_sweep_outputs(r, c, o.out))
        std::printf("wrote %s\n", p.c_str());
    if (!r.map.complete()) {
        for (std::size_t i = 0; i < r.map.info.size(); ++i)
            if (!r.map.info[i].ok)
                std::cerr << "column " << r.map.voltages[i] << " V failed: "
                          << r.map.info[i].diagnostic << '\n';
        return kRuntime;
    }
    return kOk;
}

int cmd_validate(const Options& o) {
    const RunConfig c = resolve(o);
    const auto results = invariant_suite(c, workers(o));
    int failed = 0;
    for (const CheckResult& r : results) {
        std::printf("%-4s  %-10s  %-70s  %s\n", r.pass ? "PASS" : "FAIL", r.module.c_str(),
                    r.name.c_str(), r.detail.c_str());
        failed += r.pass ? 0 : 1;
    }
    std::printf("%zu checks, %d failed\n", results.size(), failed);
    return failed ? kValidation : kOk;
}

int cmd_oracle(const Options& o) {
    const RunConfig c = resolve(o);
    TimeGrid grid = c.grid.state;
    grid.step = o.oracle_step;
    (void)grid.intervals();
    const OracleReport r = oracle_comparison(c.model, c.frame(), grid, o.oracle_substeps);
    std::fputs(r.text().c_str(), stdout);
    return r.deviation_ok() && r.order_ok() && r.trace_ok() ? kOk : kValidation;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Four-level quantum dot spectra under two-laser driving"};
    app.set_version_flag("--version", QDSDC_VERSION);
    app.require_subcommand(1);
    Options o;
    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "configuration file")->check(CLI::ExistingFile);
        sub->add_option("--out", o.out, "output directory");
        sub->add_option("--workers", o.workers, "worker threads (default: all cores)")
            ->check(CLI::NonNegativeNumber);
        sub->add_flag("--mask-notches", o.mask, "zero the bins around the laser energies");
        sub->add_option("--scenario", o.scenario, "preset applied to keys the file leaves unset")
            ->check(CLI::IsMember({"fig5a", "fig5b", "fig3", "custom"}));
    };
    auto* simulate = app.add_subcommand("simulate", "spectrum at the configured bias");
    auto* sweep = app.add_subcommand("sweep", "bias sweep: map, tracks and heatmap");
    auto* validate = app.add_subcommand("validate", "run the invariant suite");
    auto* oracle = app.add_subcommand("oracle", "RK4 against the matrix-exponential propagator");
    for (auto* s : {simulate, sweep, validate, oracle}) common(s);
    oracle->add_option("--step", o.oracle_step, "RK4 step, ps")->check(CLI::PositiveNumber);
    oracle->add_option("--substeps", o.oracle_substeps, "oracle midpoint substeps per step")
        ->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }
    try {
        if (*simulate) return cmd_simulate(o);
        if (*sweep) return cmd_sweep(o);
        if (*validate) return cmd_validate(o);
        return cmd_oracle(o);
    } catch (const ConfigError& e) {
        if (e.line() > 0)
            std::cerr << "config error: " << (o.config.empty() ? "<defaults>" : o.config) << ':'
                      << e.line() << ": " << e.message() << '\n';
        else
            std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntime;
    }
}
