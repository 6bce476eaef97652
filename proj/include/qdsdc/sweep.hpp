#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qdsdc/model.hpp"
#include "qdsdc/spectrum.hpp"

namespace qdsdc {

struct SweepConfig {
    std::vector<double> voltages;  // strictly increasing, V
    DeviceModel model;
    /// Per-voltage control photon energies (meV); empty keeps model.control fixed.
    std::vector<double> control_energies;
    SimulationSettings simulation;
    std::vector<double> notch_centers;  // meV
    double notch_half_width = 0.4;      // meV
    bool mask_notches = false;
    int workers = 1;

    /// Throws std::invalid_argument on the first broken invariant.
    void validate() const;
    /// Model used for column i.
    DeviceModel column_model(std::size_t i) const;
};

struct ColumnInfo {
    double exciton = 0.0;         // E_X, meV
    double biexciton_line = 0.0;  // E_XX, meV
    double biexciton = 0.0;       // E_B, meV
    double control_energy = 0.0;  // meV
    bool ok = true;
    std::string diagnostic;
};

struct MaskedBand {
    double center = 0.0;
    double half_width = 0.0;
    std::size_t bins = 0;
};

/// Intensity over (voltage x photon energy). columns[i][k] is the intensity at
/// voltages[i] and axis.energy(k).
struct SpectralMap {
    std::vector<double> voltages;
    EnergyAxis axis;
    std::vector<std::vector<double>> columns;
    std::vector<ColumnInfo> info;
    std::vector<MaskedBand> masked;

    bool complete() const;
    Spectrum column(std::size_t i) const { return {axis, columns[i]}; }
};

/// One spectrum per voltage, computed concurrently. A failing column is
/// zero-filled and its diagnostic recorded; the remaining columns still run.
SpectralMap run_sweep(const SweepConfig& config);

enum class TrackLabel { Unknown, X, XX, SDC };
std::string_view to_string(TrackLabel label);

struct TrackPoint {
    double voltage = 0.0;
    double energy = 0.0;
    double intensity = 0.0;
};

struct PeakTrack {
    std::vector<TrackPoint> points;
    double slope = 0.0;      // meV/V, least squares
    double intercept = 0.0;  // meV at V = 0
    double residual = 0.0;   // rms, meV
    TrackLabel label = TrackLabel::Unknown;

    double mean_energy() const;
    double mean_voltage() const;
    /// Linear interpolation of the track energy; nullopt outside its span.
    std::optional<double> energy_at(double voltage) const;
};

struct TrackingOptions {
    double prominence = 0.05;  // fraction of the column maximum
    double max_jump = 0.1;     // meV between adjacent voltages
    /// Once a track has two points, a candidate must also lie within this
    /// distance (meV) of the straight-line extrapolation of its last two points.
    double max_deviation = 0.05;
    std::size_t min_points = 3;
    bool operator==(const TrackingOptions&) const = default;
};

/// Finds local maxima per column and links them across adjacent voltages,
/// smallest deviation from the predicted energy first, each candidate used at
/// most once. Tracks that find no partner end; unmatched candidates open new
/// tracks. Maxima touching a masked band are ignored (mask edges are artifacts).
std::vector<PeakTrack> track_peaks(const SpectralMap& map, const TrackingOptions& options = {});

/// Least-squares line through the track points.
void fit_track(PeakTrack& track);

struct ClassificationOptions {
    double slope_tolerance = 0.15;  // relative
    double energy_tolerance = 0.3;  // meV, mean |E_track - E_model|
    bool operator==(const ClassificationOptions&) const = default;
};

/// Labels tracks by slope against dE_X/dV, dE_XX/dV, dE_B/dV and by mean energy
/// against E_X, E_XX and E_B - E_c. control_energy may be absent (no SDC).
std::vector<PeakTrack> classify_tracks(std::vector<PeakTrack> tracks, const DeviceModel& model,
                                       std::optional<double> control_energy,
                                       const ClassificationOptions& options = {});

struct CrossingGap {
    double gap = 0.0;      // meV
    double voltage = 0.0;  // V at the closest approach
};

/// Minimum |E_A - E_B| over the shared voltages, linear in V between samples.
/// Throws std::invalid_argument when the tracks share fewer than 3 voltages.
CrossingGap avoided_crossing_gap(const PeakTrack& a, const PeakTrack& b);

/// Of the tracks with a point at `voltage` within `window` meV of `energy`,
/// the two closest to `energy` (indices into `tracks`, lower energy first).
std::optional<std::pair<std::size_t, std::size_t>> closest_tracks(
    const std::vector<PeakTrack>& tracks, double voltage, double energy, double window);

/// Pair of maxima in one spectrum bracketing a line energy.
struct Doublet {
    double lower = 0.0;  // meV
    double upper = 0.0;  // meV
    double splitting() const { return upper - lower; }
};

/// Outermost local maxima (height >= min_fraction of the spectrum maximum)
/// within `window` meV below and above `energy`. nullopt unless both sides
/// hold one.
std::optional<Doublet> dressed_doublet(const Spectrum& spectrum, double energy, double window,
                                       double min_fraction);

/// Zeroes every bin within half_width of a center and records the bands.
SpectralMap apply_notch_mask(SpectralMap map, const std::vector<double>& centers,
                             double half_width);

}  // namespace qdsdc
