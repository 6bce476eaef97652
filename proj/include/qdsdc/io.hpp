#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "qdsdc/sweep.hpp"

namespace qdsdc {

/// Header material shared by every output file of one run.
struct OutputHeader {
    std::string config_hash;   // hex
    std::string version;       // tool version
    std::string description;   // one line, e.g. "sweep fig5a"
    std::string metadata;      // resolved parameters for the sidecar
};

/// Path of the sidecar written next to a TSV: "<stem>.meta.txt".
std::filesystem::path metadata_path(const std::filesystem::path& tsv);

/// Writes the map as TSV: '#' header lines (description, version, config
/// hash, units, layout), then two axis lines
///   #axis voltage_V <v_0> ... <v_{n-1}>
///   #axis energy_meV <e_0> ... <e_{m-1}>
/// then one row per energy bin with one tab-separated column per voltage.
/// Numbers use 9 significant digits, newlines are LF. Also writes the sidecar
/// holding header.metadata plus per-column level energies and diagnostics.
/// Throws std::runtime_error when a file cannot be written.
void write_map(const SpectralMap& map, const std::filesystem::path& path,
               const OutputHeader& header);

/// One "track" line per track followed by its "point" lines.
void write_tracks(const std::vector<PeakTrack>& tracks, const std::filesystem::path& path,
                  const OutputHeader& header);

/// 16-bit binary graymap (P5, maxval 65535, big-endian samples). Column x is
/// voltage index x (increasing to the right); row y is energy bin
/// count - 1 - y (highest energy on top). Pixel = round(65535 (I / I_max)^gamma)
/// with negative intensities clamped to 0; an all-zero map renders black.
void render_heatmap(const SpectralMap& map, const std::filesystem::path& path, double gamma);

}  // namespace qdsdc
