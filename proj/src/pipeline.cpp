#include "qdsdc/pipeline.hpp"

#include <algorithm>
#include <filesystem>

namespace qdsdc {

SpectralMap run_simulation(const RunConfig& config, int workers) {
    SpectralMap map;
    map.voltages = {config.model.bias};
    map.axis = config.axis();
    const LevelEnergies e = level_energies(config.model, config.model.bias);
    ColumnInfo info{e.exciton_v, e.biexciton - e.exciton_v, e.biexciton,
                    config.model.control.photon_energy, true, {}};
    try {
        map.columns = {simulate_spectrum(config.model, config.simulation(), workers).intensity};
    } catch (const std::exception& ex) {
        map.columns = {std::vector<double>(map.axis.count, 0.0)};
        info.ok = false;
        info.diagnostic = ex.what();
    }
    map.info = {info};
    if (config.sweep.mask_notches) {
        const SweepConfig s = config.sweep_config(workers);
        map = apply_notch_mask(std::move(map), s.notch_centers, s.notch_half_width);
    }
    return map;
}

SweepOutcome run_configured_sweep(const RunConfig& config, int workers) {
    SweepOutcome out;
    out.map = run_sweep(config.sweep_config(workers));
    out.tracks = classify_tracks(track_peaks(out.map, config.sweep.tracking), config.model,
                                 config.control_energy(), config.sweep.classification);
    std::stable_sort(out.tracks.begin(), out.tracks.end(),
                     [](const PeakTrack& a, const PeakTrack& b) {
                         return a.points.size() > b.points.size();
                     });
    return out;
}

OutputHeader output_header(const RunConfig& config, const std::string& description) {
    std::string meta = "# scenario " + std::string(to_string(config.scenario)) + "\n# frame " +
                       config.frame().describe() + "\n" + serialize_config(config);
    return {hash_string(config_hash(config)), QDSDC_VERSION, description, std::move(meta)};
}

std::vector<std::string> write_sweep_outputs(const SweepOutcome& outcome, const RunConfig& config,
                                             const std::string& dir) {
    const std::filesystem::path base(dir);
    const std::string stem(to_string(config.scenario));
    const OutputHeader header = output_header(config, "sweep " + stem);
    const auto map_path = base / (stem + "_map.tsv");
    const auto tracks_path = base / (stem + "_tracks.tsv");
    const auto pgm_path = base / (stem + "_map.pgm");
    write_map(outcome.map, map_path, header);
    write_tracks(outcome.tracks, tracks_path, header);
    render_heatmap(outcome.map, pgm_path, config.output.gamma);
    return {map_path.string(), metadata_path(map_path).string(), tracks_path.string(),
            pgm_path.string()};
}

}  // namespace qdsdc
