#pragma once

#include <string>
#include <vector>

#include "qdsdc/config.hpp"
#include "qdsdc/io.hpp"

namespace qdsdc {

/// Spectrum at the configured bias, as a one-column map.
SpectralMap run_simulation(const RunConfig& config, int workers);

struct SweepOutcome {
    SpectralMap map;
    std::vector<PeakTrack> tracks;  // classified, longest first
};

/// Sweep, optional notch masking, tracking and classification.
SweepOutcome run_configured_sweep(const RunConfig& config, int workers);

/// Header for every output of a run: hash of the canonical config and the
/// canonical text itself as sidecar metadata.
OutputHeader output_header(const RunConfig& config, const std::string& description);

/// Writes map TSV, sidecar, tracks and heatmap under `dir`; returns the paths.
std::vector<std::string> write_sweep_outputs(const SweepOutcome& outcome, const RunConfig& config,
                                             const std::string& dir);

}  // namespace qdsdc
