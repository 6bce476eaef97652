#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "qdsdc/io.hpp"

using namespace qdsdc;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("qdsdc_io_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

SpectralMap small_map() {
    SpectralMap m;
    m.axis = {1340.0, 0.5, 3};
    m.voltages = {0.0, 0.1};
    m.columns = {{1.0, 2.0, 3.0}, {4.0, 5.0, 6.123456789012}};
    m.info.resize(2);
    return m;
}

const OutputHeader kHeader{"00000000deadbeef", "0.1.0", "test map", "[device]\nbias = 0 V\n"};

}  // namespace

TEST_CASE("2x3 map: header lines, two axis lines, three rows of two columns") {
    TempDir dir;
    write_map(small_map(), dir.path / "m.tsv", kHeader);
    std::istringstream in(slurp(dir.path / "m.tsv"));
    std::string line;
    int axis = 0, rows = 0;
    bool hash = false, version = false;
    while (std::getline(in, line)) {
        if (line.rfind("#axis", 0) == 0) {
            ++axis;
        } else if (line[0] == '#') {
            hash = hash || line.find("deadbeef") != std::string::npos;
            version = version || line.find("0.1.0") != std::string::npos;
        } else {
            ++rows;
            CHECK(std::count(line.begin(), line.end(), '\t') == 1);
        }
    }
    CHECK(axis == 2);
    CHECK(rows == 3);
    CHECK(hash);
    CHECK(version);
    const std::string text = slurp(dir.path / "m.tsv");
    CHECK(text.find('\r') == std::string::npos);
    CHECK(text.find("3\t6.12345679\n") != std::string::npos);
    CHECK(text.find("#axis energy_meV\t1340\t1340.5\t1341\n") != std::string::npos);
    const std::string meta = slurp(dir.path / "m.meta.txt");
    CHECK(meta.find("bias = 0 V") != std::string::npos);
    CHECK(meta.find("column\t0.1") != std::string::npos);
}

TEST_CASE("writing twice gives byte-identical files") {
    TempDir dir;
    write_map(small_map(), dir.path / "a.tsv", kHeader);
    write_map(small_map(), dir.path / "b.tsv", kHeader);
    CHECK(slurp(dir.path / "a.tsv") == slurp(dir.path / "b.tsv"));
    CHECK(slurp(dir.path / "a.meta.txt") == slurp(dir.path / "b.meta.txt"));
}

TEST_CASE("unwritable path throws") {
    TempDir dir;
    std::ofstream(dir.path / "file") << "x";
    CHECK_THROWS_AS(write_map(small_map(), dir.path / "file" / "m.tsv", kHeader),
                    std::runtime_error);
}

namespace {

struct Pgm {
    std::size_t width = 0, height = 0, maxval = 0;
    std::vector<unsigned> pixels;
};

Pgm read_pgm(const std::string& data) {
    std::istringstream in(data);
    std::string magic;
    in >> magic;
    REQUIRE(magic == "P5");
    Pgm p;
    auto next = [&]() {
        in >> std::ws;
        while (in.peek() == '#') {
            std::string skip;
            std::getline(in, skip);
            in >> std::ws;
        }
        std::size_t v;
        in >> v;
        return v;
    };
    p.width = next();
    p.height = next();
    p.maxval = next();
    in.get();
    for (std::size_t i = 0; i < p.width * p.height; ++i) {
        const auto hi = static_cast<unsigned char>(in.get());
        const auto lo = static_cast<unsigned char>(in.get());
        p.pixels.push_back(hi * 256u + lo);
    }
    CHECK(in.peek() == EOF);
    return p;
}

}  // namespace

TEST_CASE("heatmap: uniform map is white, orientation and single hot bin") {
    TempDir dir;
    SpectralMap m = small_map();
    m.columns = {{1.0, 1.0, 1.0}, {1.0, 1.0, 1.0}};
    render_heatmap(m, dir.path / "u.pgm", 1.0);
    const Pgm u = read_pgm(slurp(dir.path / "u.pgm"));
    CHECK(u.width == 2);
    CHECK(u.height == 3);
    CHECK(u.maxval == 65535);
    for (unsigned v : u.pixels) CHECK(v == 65535);

    m.columns = {{0.0, 0.0, 0.0}, {0.0, 0.0, 7.0}};
    render_heatmap(m, dir.path / "h.pgm", 0.5);
    const Pgm h = read_pgm(slurp(dir.path / "h.pgm"));
    CHECK(std::count(h.pixels.begin(), h.pixels.end(), 65535u) == 1);
    CHECK(h.pixels[1] == 65535);  // top row = highest energy, right = last voltage

    m.columns = {{0.0, 0.25, -1.0}, {1.0, 0.0, 0.0}};
    render_heatmap(m, dir.path / "g.pgm", 0.5);
    const Pgm g = read_pgm(slurp(dir.path / "g.pgm"));
    CHECK(g.pixels[0] == 0);        // negative clamps to black
    CHECK(g.pixels[2] == 32768);    // sqrt(0.25) of full scale, rounded
    CHECK(g.pixels[5] == 65535);
    CHECK_THROWS(render_heatmap(m, dir.path / "x.pgm", 0.0));
}

TEST_CASE("tracks file") {
    TempDir dir;
    PeakTrack t;
    t.points = {{0.0, 1340.0, 1.0}, {0.1, 1339.9, 0.5}};
    t.slope = -1.0;
    t.label = TrackLabel::XX;
    write_tracks({t}, dir.path / "t.tsv", kHeader);
    const std::string s = slurp(dir.path / "t.tsv");
    CHECK(s.find("track\t0\tXX\t2\t-1\t") != std::string::npos);
    CHECK(s.find("point\t0\t0.1\t1339.9\t0.5\n") != std::string::npos);
}
