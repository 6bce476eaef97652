#include "qdsdc/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "qdsdc/parallel.hpp"

namespace qdsdc {

namespace {
// bins sitting exactly on a band edge count as inside despite rounding
constexpr double kMaskSlack = 1e-9;  // meV
}  // namespace

void SweepConfig::validate() const {
    if (voltages.size() < 2) throw std::invalid_argument("a sweep needs at least 2 voltages");
    for (std::size_t i = 1; i < voltages.size(); ++i) {
        if (!(voltages[i] > voltages[i - 1]))
            throw std::invalid_argument("sweep voltages must be strictly increasing");
    }
    if (!control_energies.empty() && control_energies.size() != voltages.size()) {
        throw std::invalid_argument("per-voltage control energies must match the voltage count");
    }
    for (double e : control_energies)
        if (!(e > 0.0)) throw std::invalid_argument("control energies must be positive");
    if (!(model.tpe.photon_energy > 0.0) || !(model.control.photon_energy > 0.0))
        throw std::invalid_argument("laser energies must be positive");
    model.validate();
}

DeviceModel SweepConfig::column_model(std::size_t i) const {
    DeviceModel m = model;
    m.bias = voltages[i];
    if (!control_energies.empty()) m.control.photon_energy = control_energies[i];
    return m;
}

bool SpectralMap::complete() const {
    return std::all_of(info.begin(), info.end(), [](const ColumnInfo& c) { return c.ok; });
}

SpectralMap run_sweep(const SweepConfig& config) {
    config.validate();
    const std::size_t n = config.voltages.size();
    SpectralMap map;
    map.voltages = config.voltages;
    map.axis = config.simulation.axis;
    map.columns.assign(n, std::vector<double>(map.axis.count, 0.0));
    map.info.resize(n);

    parallel_for(n, config.workers, [&](std::size_t i) {
        const DeviceModel m = config.column_model(i);
        ColumnInfo& info = map.info[i];
        info.control_energy = m.control.photon_energy;
        try {
            const LevelEnergies e = level_energies(m, m.bias);
            info.exciton = e.exciton_v;
            info.biexciton = e.biexciton;
            info.biexciton_line = e.biexciton - e.exciton_v;
            Spectrum s = simulate_spectrum(m, config.simulation, 1);
            for (double value : s.intensity) {
                if (!std::isfinite(value)) throw std::runtime_error("non-finite intensity");
            }
            map.columns[i] = std::move(s.intensity);
        } catch (const std::exception& ex) {
            std::ostringstream os;
            os << "column " << i << " (V = " << m.bias << " V) failed: " << ex.what();
            info.ok = false;
            info.diagnostic = os.str();
            std::fill(map.columns[i].begin(), map.columns[i].end(), 0.0);
        }
    });

    if (config.mask_notches) return apply_notch_mask(std::move(map), config.notch_centers,
                                                      config.notch_half_width);
    return map;
}

std::string_view to_string(TrackLabel label) {
    switch (label) {
        case TrackLabel::X: return "X";
        case TrackLabel::XX: return "XX";
        case TrackLabel::SDC: return "SDC";
        case TrackLabel::Unknown: return "UNKNOWN";
    }
    return "UNKNOWN";
}

double PeakTrack::mean_energy() const {
    if (points.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& p : points) sum += p.energy;
    return sum / static_cast<double>(points.size());
}

double PeakTrack::mean_voltage() const {
    if (points.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& p : points) sum += p.voltage;
    return sum / static_cast<double>(points.size());
}

std::optional<double> PeakTrack::energy_at(double voltage) const {
    if (points.empty() || voltage < points.front().voltage - 1e-12 ||
        voltage > points.back().voltage + 1e-12)
        return std::nullopt;
    for (std::size_t i = 0; i + 1 < points.size(); ++i) {
        const auto& a = points[i];
        const auto& b = points[i + 1];
        if (voltage <= b.voltage + 1e-12) {
            const double f = (voltage - a.voltage) / (b.voltage - a.voltage);
            return a.energy + std::clamp(f, 0.0, 1.0) * (b.energy - a.energy);
        }
    }
    return points.back().energy;
}

void fit_track(PeakTrack& track) {
    const auto n = static_cast<double>(track.points.size());
    if (track.points.size() < 2) {
        track.slope = 0.0;
        track.intercept = track.points.empty() ? 0.0 : track.points.front().energy;
        track.residual = 0.0;
        return;
    }
    const double mv = track.mean_voltage();
    const double me = track.mean_energy();
    double sxx = 0.0, sxy = 0.0;
    for (const auto& p : track.points) {
        sxx += (p.voltage - mv) * (p.voltage - mv);
        sxy += (p.voltage - mv) * (p.energy - me);
    }
    track.slope = sxy / sxx;
    track.intercept = me - track.slope * mv;
    double ss = 0.0;
    for (const auto& p : track.points) {
        const double r = p.energy - (track.intercept + track.slope * p.voltage);
        ss += r * r;
    }
    track.residual = std::sqrt(ss / n);
}

std::vector<PeakTrack> track_peaks(const SpectralMap& map, const TrackingOptions& options) {
    std::vector<PeakTrack> tracks;
    std::vector<std::size_t> active;  // indices into tracks ending at the previous column

    std::vector<bool> masked(map.axis.count, false);
    for (const MaskedBand& band : map.masked) {
        for (std::size_t k = 0; k < map.axis.count; ++k)
            if (std::abs(map.axis.energy(k) - band.center) <= band.half_width + kMaskSlack)
                masked[k] = true;
    }
    auto touches_mask = [&](std::size_t k) {
        return masked[k] || (k > 0 && masked[k - 1]) || (k + 1 < masked.size() && masked[k + 1]);
    };

    for (std::size_t i = 0; i < map.columns.size(); ++i) {
        const auto& column = map.columns[i];
        const double top =
            column.empty() ? 0.0 : *std::max_element(column.begin(), column.end());
        std::vector<Peak> candidates;
        if (top > 0.0) candidates = local_maxima(map.column(i), options.prominence * top);
        std::erase_if(candidates, [&](const Peak& p) { return touches_mask(p.bin); });

        std::vector<std::tuple<double, std::size_t, std::size_t>> pairs;
        for (std::size_t a = 0; a < active.size(); ++a) {
            const auto& pts = tracks[active[a]].points;
            const double last = pts.back().energy;
            std::optional<double> predicted;
            if (pts.size() >= 2) {
                const auto& p0 = pts[pts.size() - 2];
                const auto& p1 = pts.back();
                predicted = p1.energy + (p1.energy - p0.energy) * (map.voltages[i] - p1.voltage) /
                                            (p1.voltage - p0.voltage);
            }
            for (std::size_t c = 0; c < candidates.size(); ++c) {
                const double jump = std::abs(candidates[c].energy - last);
                if (jump > options.max_jump) continue;
                if (!predicted) {
                    pairs.emplace_back(jump, a, c);
                    continue;
                }
                const double miss = std::abs(candidates[c].energy - *predicted);
                if (miss <= options.max_deviation) pairs.emplace_back(miss, a, c);
            }
        }
        std::sort(pairs.begin(), pairs.end());

        std::vector<bool> track_used(active.size(), false);
        std::vector<bool> cand_used(candidates.size(), false);
        std::vector<std::size_t> next_active;
        for (const auto& [jump, a, c] : pairs) {
            if (track_used[a] || cand_used[c]) continue;
            track_used[a] = cand_used[c] = true;
            tracks[active[a]].points.push_back(
                {map.voltages[i], candidates[c].energy, candidates[c].height});
            next_active.push_back(active[a]);
        }
        for (std::size_t c = 0; c < candidates.size(); ++c) {
            if (cand_used[c]) continue;
            PeakTrack t;
            t.points.push_back({map.voltages[i], candidates[c].energy, candidates[c].height});
            tracks.push_back(std::move(t));
            next_active.push_back(tracks.size() - 1);
        }
        active = std::move(next_active);
    }

    std::vector<PeakTrack> kept;
    for (auto& t : tracks) {
        if (t.points.size() < std::max<std::size_t>(options.min_points, 1)) continue;
        fit_track(t);
        kept.push_back(std::move(t));
    }
    std::stable_sort(kept.begin(), kept.end(), [](const PeakTrack& a, const PeakTrack& b) {
        if (a.points.front().voltage != b.points.front().voltage)
            return a.points.front().voltage < b.points.front().voltage;
        return a.points.front().energy < b.points.front().energy;
    });
    return kept;
}

std::vector<PeakTrack> classify_tracks(std::vector<PeakTrack> tracks, const DeviceModel& model,
                                       std::optional<double> control_energy,
                                       const ClassificationOptions& options) {
    const StarkModel& s = model.stark;
    for (PeakTrack& track : tracks) {
        track.label = TrackLabel::Unknown;
        if (track.points.size() < 2) continue;
        const double v = track.mean_voltage();

        struct Reference {
            TrackLabel label;
            double slope;
        };
        std::vector<Reference> refs{{TrackLabel::X, s.exciton_slope(v)},
                                    {TrackLabel::XX, s.biexciton_line_slope(v)}};
        if (control_energy) refs.push_back({TrackLabel::SDC, s.biexciton_slope(v)});

        double best = std::numeric_limits<double>::infinity();
        for (const Reference& ref : refs) {
            const double rel = std::abs(track.slope - ref.slope) / std::abs(ref.slope);
            if (rel > options.slope_tolerance || rel >= best) continue;

            double offset = 0.0;
            for (const TrackPoint& p : track.points) {
                double expected = 0.0;
                switch (ref.label) {
                    case TrackLabel::X: expected = s.exciton(p.voltage); break;
                    case TrackLabel::XX: expected = s.biexciton_line(p.voltage); break;
                    default: expected = s.biexciton(p.voltage) - *control_energy; break;
                }
                offset += std::abs(p.energy - expected);
            }
            offset /= static_cast<double>(track.points.size());
            if (offset > options.energy_tolerance) continue;
            best = rel;
            track.label = ref.label;
        }
    }
    return tracks;
}

CrossingGap avoided_crossing_gap(const PeakTrack& a, const PeakTrack& b) {
    std::vector<std::pair<double, double>> diff;  // (voltage, E_a - E_b)
    for (const auto& pa : a.points) {
        for (const auto& pb : b.points) {
            if (std::abs(pa.voltage - pb.voltage) < 1e-9) {
                diff.emplace_back(pa.voltage, pa.energy - pb.energy);
                break;
            }
        }
    }
    if (diff.size() < 3) {
        std::ostringstream os;
        os << "tracks share " << diff.size() << " voltages; at least 3 are required";
        throw std::invalid_argument(os.str());
    }

    CrossingGap result{std::abs(diff.front().second), diff.front().first};
    for (std::size_t i = 0; i < diff.size(); ++i) {
        const auto [v, d] = diff[i];
        if (std::abs(d) < result.gap) result = {std::abs(d), v};
        if (i + 1 < diff.size()) {
            const auto [v2, d2] = diff[i + 1];
            if ((d < 0.0 && d2 > 0.0) || (d > 0.0 && d2 < 0.0)) {
                return {0.0, v + (v2 - v) * d / (d - d2)};
            }
        }
    }
    return result;
}

std::optional<std::pair<std::size_t, std::size_t>> closest_tracks(
    const std::vector<PeakTrack>& tracks, double voltage, double energy, double window) {
    std::vector<std::pair<double, std::size_t>> near;  // (distance, index)
    for (std::size_t i = 0; i < tracks.size(); ++i) {
        for (const TrackPoint& p : tracks[i].points) {
            if (std::abs(p.voltage - voltage) > 1e-9) continue;
            const double d = std::abs(p.energy - energy);
            if (d <= window) near.emplace_back(d, i);
            break;
        }
    }
    if (near.size() < 2) return std::nullopt;
    std::sort(near.begin(), near.end());
    std::size_t a = near[0].second, b = near[1].second;
    if (*tracks[b].energy_at(voltage) < *tracks[a].energy_at(voltage)) std::swap(a, b);
    return std::make_pair(a, b);
}

std::optional<Doublet> dressed_doublet(const Spectrum& spectrum, double energy, double window,
                                       double min_fraction) {
    if (spectrum.intensity.empty()) return std::nullopt;
    const double top = *std::max_element(spectrum.intensity.begin(), spectrum.intensity.end());
    if (!(top > 0.0)) return std::nullopt;
    std::optional<double> lower, upper;
    for (const Peak& p : local_maxima(spectrum, min_fraction * top)) {
        if (p.energy < energy && p.energy >= energy - window && !lower) lower = p.energy;
        if (p.energy > energy && p.energy <= energy + window) upper = p.energy;
    }
    if (!lower || !upper) return std::nullopt;
    return Doublet{*lower, *upper};
}

SpectralMap apply_notch_mask(SpectralMap map, const std::vector<double>& centers,
                             double half_width) {
    if (!(half_width > 0.0)) return map;
    for (double c : centers) {
        MaskedBand band{c, half_width, 0};
        for (std::size_t k = 0; k < map.axis.count; ++k) {
            if (std::abs(map.axis.energy(k) - c) > half_width + kMaskSlack) continue;
            ++band.bins;
            for (auto& column : map.columns) column[k] = 0.0;
        }
        map.masked.push_back(band);
    }
    return map;
}

}  // namespace qdsdc
