#include "qdsdc/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace qdsdc {

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v == 0.0 ? 0.0 : v);  // no "-0"
    return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) throw std::runtime_error("write to '" + path.string() + "' failed");
}

void common_header(std::ostream& os, const OutputHeader& h) {
    os << "# qdsdc " << h.version << ": " << h.description << '\n';
    os << "# config_hash " << h.config_hash << '\n';
}

}  // namespace

std::filesystem::path metadata_path(const std::filesystem::path& tsv) {
    std::filesystem::path p = tsv;
    p.replace_extension(".meta.txt");
    return p;
}

void write_map(const SpectralMap& map, const std::filesystem::path& path,
               const OutputHeader& header) {
    std::ostringstream os;
    common_header(os, header);
    os << "# units: intensity arb. units, energy meV (lab photon energy), voltage V\n";
    os << "# layout: one row per energy bin, one column per voltage\n";
    os << "#axis voltage_V";
    for (double v : map.voltages) os << '\t' << num(v);
    os << '\n';
    os << "#axis energy_meV";
    for (std::size_t k = 0; k < map.axis.count; ++k) os << '\t' << num(map.axis.energy(k));
    os << '\n';
    for (std::size_t k = 0; k < map.axis.count; ++k) {
        for (std::size_t i = 0; i < map.columns.size(); ++i) {
            if (i) os << '\t';
            os << num(map.columns[i][k]);
        }
        os << '\n';
    }
    auto out = open_out(path);
    out << os.str();
    finish(out, path);

    std::ostringstream meta;
    common_header(meta, header);
    meta << "# resolved parameters\n" << header.metadata;
    if (!header.metadata.empty() && header.metadata.back() != '\n') meta << '\n';
    meta << "\n# columns: voltage_V E_X_meV E_XX_meV E_B_meV control_meV status\n";
    for (std::size_t i = 0; i < map.voltages.size(); ++i) {
        const ColumnInfo& c = i < map.info.size() ? map.info[i] : ColumnInfo{};
        meta << "column\t" << num(map.voltages[i]) << '\t' << num(c.exciton) << '\t'
             << num(c.biexciton_line) << '\t' << num(c.biexciton) << '\t'
             << num(c.control_energy) << '\t' << (c.ok ? "ok" : c.diagnostic) << '\n';
    }
    for (const MaskedBand& b : map.masked) {
        meta << "masked\t" << num(b.center) << '\t' << num(b.half_width) << '\t' << b.bins
             << '\n';
    }
    const auto meta_path = metadata_path(path);
    auto mout = open_out(meta_path);
    mout << meta.str();
    finish(mout, meta_path);
}

void write_tracks(const std::vector<PeakTrack>& tracks, const std::filesystem::path& path,
                  const OutputHeader& header) {
    std::ostringstream os;
    common_header(os, header);
    os << "# track <id> <label> <points> <slope meV/V> <intercept meV> <rms residual meV>\n";
    os << "# point <id> <voltage V> <energy meV> <intensity>\n";
    for (std::size_t t = 0; t < tracks.size(); ++t) {
        const PeakTrack& tr = tracks[t];
        os << "track\t" << t << '\t' << to_string(tr.label) << '\t' << tr.points.size() << '\t'
           << num(tr.slope) << '\t' << num(tr.intercept) << '\t' << num(tr.residual) << '\n';
        for (const TrackPoint& p : tr.points) {
            os << "point\t" << t << '\t' << num(p.voltage) << '\t' << num(p.energy) << '\t'
               << num(p.intensity) << '\n';
        }
    }
    auto out = open_out(path);
    out << os.str();
    finish(out, path);
}

void render_heatmap(const SpectralMap& map, const std::filesystem::path& path, double gamma) {
    if (!(gamma > 0.0)) throw std::invalid_argument("heatmap gamma must be > 0");
    const std::size_t width = map.columns.size();
    const std::size_t height = map.axis.count;
    double top = 0.0;
    for (const auto& c : map.columns)
        for (double v : c) top = std::max(top, v);

    std::ostringstream os;
    os << "P5\n# x: voltage " << (width ? num(map.voltages.front()) : "") << " V (left) to "
       << (width ? num(map.voltages.back()) : "") << " V (right)\n# y: energy "
       << num(map.axis.energy(height ? height - 1 : 0)) << " meV (top) to "
       << num(map.axis.energy(0)) << " meV (bottom)\n"
       << width << ' ' << height << "\n65535\n";
    std::string pixels(2 * width * height, '\0');
    for (std::size_t y = 0; y < height; ++y) {
        const std::size_t k = height - 1 - y;
        for (std::size_t x = 0; x < width; ++x) {
            const double v = map.columns[x][k];
            unsigned value = 0;
            if (top > 0.0 && v > 0.0) {
                value = static_cast<unsigned>(std::lround(65535.0 * std::pow(v / top, gamma)));
                value = std::min(value, 65535u);
            }
            const std::size_t at = 2 * (y * width + x);
            pixels[at] = static_cast<char>(value >> 8);
            pixels[at + 1] = static_cast<char>(value & 0xff);
        }
    }
    auto out = open_out(path);
    out << os.str() << pixels;
    finish(out, path);
}

}  // namespace qdsdc
