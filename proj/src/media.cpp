#include "pfm/media.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace fs = std::filesystem;

namespace pfm {
namespace {

constexpr double kLumR = 0.299, kLumG = 0.587, kLumB = 0.114;

[[noreturn]] void fail(const fs::path& file, const std::string& what) {
    throw std::runtime_error("frame file '" + file.string() + "': " + what);
}

// Reads the next whitespace-delimited token of a PNM header, skipping
// '#' comments.
std::string next_header_token(std::istream& in) {
    std::string tok;
    for (;;) {
        const int c = in.get();
        if (c == EOF) return tok;
        if (c == '#') {
            std::string line;
            std::getline(in, line);
            continue;
        }
        if (std::isspace(c)) {
            if (!tok.empty()) return tok;
            continue;
        }
        tok.push_back(char(c));
    }
}

bool numeric_stem(const std::string& stem, long& value) {
    if (stem.empty()) return false;
    for (char c : stem) {
        if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    }
    value = std::stol(stem);
    return true;
}

}  // namespace

Frame read_pnm(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) fail(file, "cannot open");
    const std::string magic = next_header_token(in);
    const bool color = magic == "P6";
    if (!color && magic != "P5") fail(file, "unsupported format '" + magic + "' (need binary PGM/PPM)");

    long w = 0, h = 0, maxval = 0;
    try {
        w = std::stol(next_header_token(in));
        h = std::stol(next_header_token(in));
        maxval = std::stol(next_header_token(in));
    } catch (const std::exception&) {
        fail(file, "malformed header");
    }
    if (w < 16 || h < 16) fail(file, "frame must be at least 16x16");
    if (maxval != 255) fail(file, "unsupported maxval (need 255)");

    const std::size_t npix = std::size_t(w) * std::size_t(h);
    std::vector<unsigned char> raw(npix * (color ? 3 : 1));
    in.read(reinterpret_cast<char*>(raw.data()), std::streamsize(raw.size()));
    if (std::size_t(in.gcount()) != raw.size()) fail(file, "truncated pixel data");

    Frame f;
    f.width = int(w);
    f.height = int(h);
    f.gray.resize(npix);
    if (color) {
        f.color.resize(npix * 3);
        for (std::size_t i = 0; i < npix; ++i) {
            const double r = raw[i * 3 + 0] / 255.0;
            const double g = raw[i * 3 + 1] / 255.0;
            const double b = raw[i * 3 + 2] / 255.0;
            f.color[i * 3 + 0] = float(r);
            f.color[i * 3 + 1] = float(g);
            f.color[i * 3 + 2] = float(b);
            f.gray[i] = float(kLumR * r + kLumG * g + kLumB * b);
        }
    } else {
        for (std::size_t i = 0; i < npix; ++i) f.gray[i] = float(raw[i] / 255.0);
    }
    return f;
}

FrameSequence load_sequence(const fs::path& directory, const std::string& camera_id) {
    fs::path dir = directory;
    if (!camera_id.empty() && fs::is_directory(directory / camera_id)) dir = directory / camera_id;
    if (!fs::is_directory(dir)) {
        throw std::runtime_error("sequence directory '" + dir.string() + "' does not exist");
    }

    std::vector<std::pair<long, fs::path>> entries;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        const fs::path& p = e.path();
        const std::string ext = p.extension().string();
        if (ext != ".pgm" && ext != ".ppm") continue;
        long stem = 0;
        if (!numeric_stem(p.stem().string(), stem)) continue;
        entries.emplace_back(stem, p);
    }
    if (entries.empty()) {
        throw std::runtime_error("sequence directory '" + dir.string() + "' contains no PGM/PPM frames");
    }
    std::sort(entries.begin(), entries.end());
    for (std::size_t i = 1; i < entries.size(); ++i) {
        if (entries[i].first == entries[i - 1].first) {
            throw std::runtime_error("sequence directory '" + dir.string() +
                                     "' has duplicate frame index " + std::to_string(entries[i].first));
        }
    }

    FrameSequence seq;
    seq.camera_id = camera_id;
    seq.frames.reserve(entries.size());
    for (const auto& [stem, path] : entries) {
        Frame f = read_pnm(path);
        f.index = int(stem);
        if (!seq.frames.empty() &&
            (f.width != seq.width() || f.height != seq.height())) {
            fail(path, "dimensions differ from the rest of the sequence");
        }
        seq.frames.push_back(std::move(f));
    }
    return seq;
}

Frame mirror_frame(const Frame& f) {
    Frame out = f;
    for (int y = 0; y < f.height; ++y) {
        for (int x = 0; x < f.width; ++x) {
            out.gray[std::size_t(y) * f.width + x] = f.at(f.width - 1 - x, y);
        }
    }
    if (f.has_color()) {
        for (int y = 0; y < f.height; ++y) {
            for (int x = 0; x < f.width; ++x) {
                for (int c = 0; c < 3; ++c) {
                    out.color[(std::size_t(y) * f.width + x) * 3 + c] =
                        f.color_at(f.width - 1 - x, y, c);
                }
            }
        }
    }
    return out;
}

FrameSequence mirror_sequence(const FrameSequence& seq) {
    FrameSequence out;
    out.camera_id = seq.camera_id;
    out.subject_id = seq.subject_id;
    out.trajectory_id = seq.trajectory_id;
    out.mirrored = !seq.mirrored;
    out.frames.reserve(seq.frames.size());
    for (const Frame& f : seq.frames) out.frames.push_back(mirror_frame(f));
    return out;
}

void write_pgm(const fs::path& file, const Frame& f) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + file.string() + "'");
    out << "P5\n" << f.width << " " << f.height << "\n255\n";
    std::vector<unsigned char> raw(f.gray.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const float v = std::clamp(f.gray[i], 0.0f, 1.0f);
        raw[i] = static_cast<unsigned char>(v * 255.0f + 0.5f);
    }
    out.write(reinterpret_cast<const char*>(raw.data()), std::streamsize(raw.size()));
}

void write_ppm(const fs::path& file, const Frame& f) {
    if (!f.has_color()) throw std::runtime_error("frame has no color plane");
    std::ofstream out(file, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + file.string() + "'");
    out << "P6\n" << f.width << " " << f.height << "\n255\n";
    std::vector<unsigned char> raw(f.color.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const float v = std::clamp(f.color[i], 0.0f, 1.0f);
        raw[i] = static_cast<unsigned char>(v * 255.0f + 0.5f);
    }
    out.write(reinterpret_cast<const char*>(raw.data()), std::streamsize(raw.size()));
}

}  // namespace pfm
