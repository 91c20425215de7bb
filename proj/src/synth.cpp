#include "pfm/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "pfm/media.hpp"
#include "pfm/util.hpp"

namespace fs = std::filesystem;

namespace pfm {
namespace {

constexpr double kTau = 6.28318530717958647692;

double lattice_hash(std::uint64_t seed, int ix, int iy) {
    std::uint64_t h = seed;
    h ^= std::uint64_t(std::uint32_t(ix)) * 0x9e3779b97f4a7c15ULL;
    h ^= std::uint64_t(std::uint32_t(iy)) * 0xc2b2ae3d27d4eb4fULL;
    h ^= h >> 29;
    h *= 0xbf58476d1ce4e5b9ULL;
    h ^= h >> 32;
    return double(h >> 11) * 0x1.0p-53;
}

// Bilinear value noise on a lattice of the given pitch.
double value_noise(std::uint64_t seed, double x, double y, double pitch) {
    const double gx = x / pitch, gy = y / pitch;
    const int x0 = int(std::floor(gx)), y0 = int(std::floor(gy));
    const double fx = gx - x0, fy = gy - y0;
    const double a = lattice_hash(seed, x0, y0);
    const double b = lattice_hash(seed, x0 + 1, y0);
    const double c = lattice_hash(seed, x0, y0 + 1);
    const double d = lattice_hash(seed, x0 + 1, y0 + 1);
    return (1 - fx) * (1 - fy) * a + fx * (1 - fy) * b + (1 - fx) * fy * c + fx * fy * d;
}

// Subject-specific oscillation parameters.
struct GaitSignature {
    double stride_freq;   // cycles/frame
    double leg_amp, arm_amp;
    double arm_phase;
    double bob_amp;
    double phase_skew;
};

GaitSignature make_signature(std::uint64_t seed, int subject, int total, int slot) {
    Rng rng(derive_seed(seed, 40 + std::uint64_t(subject)));
    GaitSignature g;
    // slot spreads the base frequencies over a fixed range; the permutation
    // and jitter come from the seed
    const double t = total > 1 ? double(slot) / double(total - 1) : 0.5;
    g.stride_freq = 0.055 + 0.085 * t + rng.uniform(-0.003, 0.003);
    g.leg_amp = rng.uniform(5.5, 9.5);
    g.arm_amp = rng.uniform(3.0, 6.0);
    g.arm_phase = rng.uniform(0.0, kTau);
    g.bob_amp = rng.uniform(0.8, 2.2);
    g.phase_skew = rng.uniform(-0.6, 0.6);
    return g;
}

struct Blob {
    double cx, cy;   // center, frame coordinates
    double rx, ry;   // ellipse semi-axes
    std::uint64_t texture_seed;
    double base;     // base brightness
};

void paint_blob(Frame& f, const Blob& b) {
    const int x0 = std::max(0, int(std::floor(b.cx - b.rx)));
    const int x1 = std::min(f.width - 1, int(std::ceil(b.cx + b.rx)));
    const int y0 = std::max(0, int(std::floor(b.cy - b.ry)));
    const int y1 = std::min(f.height - 1, int(std::ceil(b.cy + b.ry)));
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            const double dx = (x - b.cx) / b.rx;
            const double dy = (y - b.cy) / b.ry;
            if (dx * dx + dy * dy > 1.0) continue;
            // texture anchored to the blob center so it moves rigidly with it
            const double tex = value_noise(b.texture_seed, x - b.cx + 64.0, y - b.cy + 64.0, 2.5);
            f.at(x, y) = float(std::clamp(b.base + 0.35 * (tex - 0.5), 0.02, 0.98));
        }
    }
}

struct PathPoint {
    double x, y;
};

// Canonical walking path for a trajectory, then the camera's affine map.
PathPoint walker_path(int traj, int cam, int frame, int frames, int width, int height) {
    const double t = double(frame) / double(std::max(frames - 1, 1));
    const double w = width, h = height;
    double x = 0.0, y = 0.0;
    switch (traj % 3) {
        case 0:
            x = 0.18 * w + (0.82 - 0.18) * w * t;
            y = 0.52 * h;
            break;
        case 1:
            x = 0.82 * w - (0.82 - 0.20) * w * t;
            y = 0.50 * h + 0.02 * h * std::sin(kTau * t);
            break;
        default:
            x = 0.20 * w + (0.80 - 0.20) * w * t;
            y = 0.55 * h + 0.05 * h * std::sin(kTau * t * 0.5);
            break;
    }
    // per-camera affine view of the path
    switch (cam % 4) {
        case 0: break;
        case 1: x = w - x; break;
        case 2:
            x = 0.90 * x + 0.05 * w;
            y = 0.92 * y + 0.03 * h;
            break;
        default:
            x = w - (0.92 * x + 0.04 * w);
            y = y + 0.05 * h;
            break;
    }
    return {x, y};
}

std::string pad2(int v) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "%02d", v);
    return buf;
}

std::string pad3(int v) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "%03d", v);
    return buf;
}

}  // namespace

SynthResult synth_generate(const SynthParams& p, const fs::path& out_root) {
    if (p.subjects < 2) throw std::runtime_error("synth_generate: need at least 2 subjects");
    if (p.cameras < 1 || p.trajectories < 1) throw std::runtime_error("synth_generate: bad counts");
    if (p.frames < 30) throw std::runtime_error("synth_generate: need at least 30 frames");
    if (p.width < 64 || p.height < 64) throw std::runtime_error("synth_generate: frame too small");

    fs::create_directories(out_root);

    // seeded permutation spreads stride frequencies across subjects
    std::vector<int> slot(std::size_t(p.subjects), 0);
    std::iota(slot.begin(), slot.end(), 0);
    Rng perm_rng(derive_seed(p.seed, 7));
    perm_rng.shuffle(slot);

    std::vector<GaitSignature> sig{std::size_t(p.subjects)};
    for (int s = 0; s < p.subjects; ++s) {
        const int src = p.identical_signatures ? 0 : s;
        sig[std::size_t(s)] =
            make_signature(p.seed, src, p.subjects, slot[std::size_t(src)]);
    }

    SynthResult result;
    std::ofstream manifest(out_root / "manifest.txt");
    if (!manifest) throw std::runtime_error("synth_generate: cannot write manifest");

    const double body_h = 0.62 * p.height;  // total walker height
    const double unit = body_h / 64.0;      // canonical blob scale

    for (int s = 0; s < p.subjects; ++s) {
        const std::string subject = "s" + pad2(s);
        const GaitSignature& g = sig[std::size_t(s)];
        for (int r = 0; r < p.trajectories; ++r) {
            const std::string traj = "t" + std::to_string(r);
            for (int c = 0; c < p.cameras; ++c) {
                const std::string camera = "cam" + std::to_string(c);
                const fs::path seq_dir = out_root / subject / traj;
                const fs::path frame_dir = seq_dir / camera;
                fs::create_directories(frame_dir);

                SynthSequenceTruth truth;
                truth.subject = subject;
                truth.trajectory = traj;
                truth.camera = camera;

                const std::uint64_t bg_seed =
                    derive_seed(p.seed, 9000 + std::uint64_t(r) * 97 + std::uint64_t(c));
                std::vector<BoundingBox> dets;

                for (int t = 0; t < p.frames; ++t) {
                    Frame f;
                    f.width = p.width;
                    f.height = p.height;
                    f.index = t;
                    f.gray.resize(std::size_t(p.width) * p.height);
                    for (int y = 0; y < p.height; ++y) {
                        for (int x = 0; x < p.width; ++x) {
                            f.at(x, y) = float(0.30 + 0.40 * value_noise(bg_seed, x, y, 7.0));
                        }
                    }

                    const PathPoint pos = walker_path(r, c, t, p.frames, p.width, p.height);
                    const double phase = kTau * g.stride_freq * t;
                    const double bob = g.bob_amp * unit * std::sin(2.0 * phase);
                    const double cy = pos.y + bob;

                    const double arm1x = pos.x - g.arm_amp * unit * std::sin(phase + g.arm_phase);
                    const double arm2x = pos.x + g.arm_amp * unit * std::sin(phase + g.arm_phase + g.phase_skew * 0.5);
                    const double leg1x = pos.x + g.leg_amp * unit * std::sin(phase);
                    const double leg2x = pos.x - g.leg_amp * unit * std::sin(phase + g.phase_skew);
                    const double leg1y = cy + 22 * unit - 2.0 * unit * std::max(0.0, std::sin(phase));
                    const double leg2y = cy + 22 * unit - 2.0 * unit * std::max(0.0, -std::sin(phase + g.phase_skew));

                    const std::array<Blob, 6> blobs{{
                        {pos.x, cy - 26 * unit, 5 * unit, 5 * unit, derive_seed(p.seed, 7001), 0.72},
                        {pos.x, cy - 6 * unit, 7 * unit, 14 * unit, derive_seed(p.seed, 7002), 0.60},
                        {arm1x, cy + 4 * unit, 4.5 * unit, 4.5 * unit, derive_seed(p.seed, 7003), 0.82},
                        {arm2x, cy + 5 * unit, 4.5 * unit, 4.5 * unit, derive_seed(p.seed, 7004), 0.80},
                        {leg1x, leg1y, 5.5 * unit, 5.5 * unit, derive_seed(p.seed, 7005), 0.88},
                        {leg2x, leg2y, 5.5 * unit, 5.5 * unit, derive_seed(p.seed, 7006), 0.86},
                    }};
                    for (const Blob& b : blobs) paint_blob(f, b);

                    double x0 = 1e9, x1 = -1e9, y0 = 1e9, y1 = -1e9;
                    for (const Blob& b : blobs) {
                        x0 = std::min(x0, b.cx - b.rx);
                        x1 = std::max(x1, b.cx + b.rx);
                        y0 = std::min(y0, b.cy - b.ry);
                        y1 = std::max(y1, b.cy + b.ry);
                    }
                    BoundingBox box;
                    box.cx = 0.5 * (x0 + x1);
                    box.cy = 0.5 * (y0 + y1);
                    box.w = x1 - x0 + 4.0;
                    box.h = y1 - y0 + 4.0;
                    box.score = 1.0;
                    box.kind = BoxKind::FullBody;
                    box.frame = t;
                    dets.push_back(box);
                    truth.boxes.push_back(box);
                    truth.limb_centers.push_back({Point{arm1x, cy + 4 * unit}, Point{arm2x, cy + 5 * unit},
                                                  Point{leg1x, leg1y}, Point{leg2x, leg2y}});

                    write_pgm(frame_dir / (pad3(t) + ".pgm"), f);
                }

                const fs::path dets_file = seq_dir / (camera + ".dets");
                write_detections(dets_file, dets);
                manifest << subject << ' ' << traj << ' ' << camera << ' '
                         << (fs::path(subject) / traj).generic_string() << ' '
                         << fs::relative(dets_file, out_root).generic_string() << '\n';
                result.sequences.push_back(std::move(truth));
            }
        }
    }
    return result;
}

}  // namespace pfm
