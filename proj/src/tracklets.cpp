#include "pfm/tracklets.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace pfm {
namespace {

constexpr double kPi = 3.14159265358979323846;

double step_length(const Point& a, const Point& b) {
    return std::hypot(b.x - a.x, b.y - a.y);
}

float median9(float* v) {
    std::nth_element(v, v + 4, v + 9);
    return v[4];
}

// Per-frame, per-pair orientation bin and magnitude planes. Shared between
// the single and batch descriptor paths so both produce identical values.
struct PairPlanes {
    std::vector<std::uint8_t> bin;
    std::vector<float> mag;
};

enum PairKind { kDivCurl = 0, kCurlShear = 1, kDivShear = 2 };

PairPlanes make_pair_planes(const KinematicMaps& km, PairKind kind, int bins) {
    const std::size_t n = km.div.size();
    PairPlanes out;
    out.bin.resize(n);
    out.mag.resize(n);
    const float* a = nullptr;
    const float* b = nullptr;
    switch (kind) {
        case kDivCurl: a = km.div.data(); b = km.curl.data(); break;
        case kCurlShear: a = km.curl.data(); b = km.shear.data(); break;
        case kDivShear: a = km.div.data(); b = km.shear.data(); break;
    }
    for (std::size_t i = 0; i < n; ++i) {
        const double va = a[i], vb = b[i];
        const float mag = float(std::hypot(va, vb));
        out.mag[i] = mag;
        if (mag > 0.0f) {
            const double ang = std::atan2(vb, va);  // (-pi, pi]
            int bin = int((ang + kPi) / (2.0 * kPi) * bins);
            out.bin[i] = std::uint8_t(std::min(bin, bins - 1));
        } else {
            out.bin[i] = 0;
        }
    }
    return out;
}

class DescriptorBuilder {
public:
    DescriptorBuilder(const std::vector<KinematicMaps>& kin, const TrackletParams& params)
        : kin_(kin), params_(params), cache_(kin.size()) {}

    DcsDescriptor describe(const Tracklet& t) const {
        const int steps = int(t.points.size()) - 1;
        if (steps < 1) throw std::runtime_error("dcs_descriptor: tracklet too short");
        if (std::size_t(t.start_frame) + std::size_t(steps) > kin_.size()) {
            throw std::runtime_error("dcs_descriptor: kinematic maps missing for tracklet frames");
        }

        DcsDescriptor d;
        d.full.assign(std::size_t(2 * steps + 3 * pair_dim()), 0.0f);

        write_coords(t, steps, d.full.data());
        for (int pair = 0; pair < 3; ++pair) {
            write_pair_histogram(t, steps, PairKind(pair),
                                 d.full.data() + 2 * steps + pair * pair_dim());
        }

        double ax = 0.0, ay = 0.0;
        for (const Point& p : t.points) {
            ax += p.x;
            ay += p.y;
        }
        d.anchor_x = ax / double(t.points.size());
        d.anchor_y = ay / double(t.points.size());
        d.mid_frame = t.start_frame + steps / 2;
        return d;
    }

private:
    int pair_dim() const {
        return params_.spatial_cells * params_.spatial_cells * params_.temporal_cells *
               params_.orientation_bins;
    }

    void write_coords(const Tracklet& t, int steps, float* out) const {
        if (params_.absolute_coords) {
            // Alternative reading: positions normalized by the frame size is
            // not available here (no frame), so normalize by the bounding
            // extent of the trajectory instead.
            double minx = t.points[0].x, maxx = minx, miny = t.points[0].y, maxy = miny;
            for (const Point& p : t.points) {
                minx = std::min(minx, p.x);
                maxx = std::max(maxx, p.x);
                miny = std::min(miny, p.y);
                maxy = std::max(maxy, p.y);
            }
            const double sx = std::max(maxx - minx, 1e-9), sy = std::max(maxy - miny, 1e-9);
            for (int s = 0; s < steps; ++s) {
                out[2 * s] = float((t.points[std::size_t(s) + 1].x - minx) / sx);
                out[2 * s + 1] = float((t.points[std::size_t(s) + 1].y - miny) / sy);
            }
            return;
        }
        double denom = 0.0;
        for (int s = 0; s < steps; ++s) {
            denom += step_length(t.points[std::size_t(s)], t.points[std::size_t(s) + 1]);
        }
        if (denom <= 0.0) throw std::runtime_error("dcs_descriptor: degenerate (zero-displacement) trajectory");
        for (int s = 0; s < steps; ++s) {
            out[2 * s] = float((t.points[std::size_t(s) + 1].x - t.points[std::size_t(s)].x) / denom);
            out[2 * s + 1] = float((t.points[std::size_t(s) + 1].y - t.points[std::size_t(s)].y) / denom);
        }
    }

    const PairPlanes& planes(std::size_t frame, PairKind kind) const {
        auto& slot = cache_[frame][kind];
        if (!slot.has_value()) slot = make_pair_planes(kin_[frame], kind, params_.orientation_bins);
        return *slot;
    }

    void write_pair_histogram(const Tracklet& t, int steps, PairKind kind, float* out) const {
        const int cells = params_.spatial_cells;
        const int bins = params_.orientation_bins;
        const int half = params_.volume_size / 2;
        std::vector<double> hist(std::size_t(pair_dim()), 0.0);

        for (int s = 0; s < steps; ++s) {
            const std::size_t frame = std::size_t(t.start_frame) + std::size_t(s);
            const PairPlanes& pp = planes(frame, kind);
            const KinematicMaps& km = kin_[frame];
            const int cx = int(std::lround(t.points[std::size_t(s)].x));
            const int cy = int(std::lround(t.points[std::size_t(s)].y));
            const int tcell = s * params_.temporal_cells / steps;
            for (int dy = -half; dy < half; ++dy) {
                const int py = std::clamp(cy + dy, 0, km.height - 1);
                const int row = (dy + half) * cells / params_.volume_size;
                for (int dx = -half; dx < half; ++dx) {
                    const int px = std::clamp(cx + dx, 0, km.width - 1);
                    const std::size_t idx = std::size_t(py) * km.width + px;
                    const float mag = pp.mag[idx];
                    if (mag <= 0.0f) continue;
                    const int col = (dx + half) * cells / params_.volume_size;
                    const std::size_t h =
                        std::size_t(((tcell * cells + row) * cells + col) * bins + pp.bin[idx]);
                    hist[h] += mag;
                }
            }
        }

        double norm = 0.0;
        for (double v : hist) norm += v * v;
        norm = std::sqrt(norm);
        for (int i = 0; i < pair_dim(); ++i) {
            out[i] = norm > 0.0 ? float(hist[std::size_t(i)] / norm) : 0.0f;
        }
    }

    const std::vector<KinematicMaps>& kin_;
    const TrackletParams& params_;
    mutable std::vector<std::array<std::optional<PairPlanes>, 3>> cache_;
};

}  // namespace

std::vector<float> min_eigenvalue_map(const Frame& frame) {
    const int w = frame.width, h = frame.height;
    std::vector<float> gx(std::size_t(w) * h), gy(std::size_t(w) * h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double dx = x == 0       ? frame.at(1, y) - frame.at(0, y)
                              : x == w - 1 ? frame.at(x, y) - frame.at(x - 1, y)
                                           : 0.5 * (frame.at(x + 1, y) - frame.at(x - 1, y));
            const double dy = y == 0       ? frame.at(x, 1) - frame.at(x, 0)
                              : y == h - 1 ? frame.at(x, y) - frame.at(x, y - 1)
                                           : 0.5 * (frame.at(x, y + 1) - frame.at(x, y - 1));
            gx[std::size_t(y) * w + x] = float(dx);
            gy[std::size_t(y) * w + x] = float(dy);
        }
    }
    std::vector<float> out(std::size_t(w) * h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double sxx = 0.0, sxy = 0.0, syy = 0.0;
            for (int j = -1; j <= 1; ++j) {
                const int py = std::clamp(y + j, 0, h - 1);
                for (int i = -1; i <= 1; ++i) {
                    const int px = std::clamp(x + i, 0, w - 1);
                    const double a = gx[std::size_t(py) * w + px];
                    const double b = gy[std::size_t(py) * w + px];
                    sxx += a * a;
                    sxy += a * b;
                    syy += b * b;
                }
            }
            const double tr = sxx + syy;
            const double det = std::sqrt((sxx - syy) * (sxx - syy) + 4.0 * sxy * sxy);
            out[std::size_t(y) * w + x] = float(0.5 * (tr - det));
        }
    }
    return out;
}

std::vector<SeedPoint> seed_points(const Frame& frame, const std::vector<Point>& occupied,
                                   const TrackletParams& params) {
    const int w = frame.width, h = frame.height;
    const std::vector<float> lambda = min_eigenvalue_map(frame);
    float max_lambda = 0.0f;
    for (float v : lambda) max_lambda = std::max(max_lambda, v);
    const double threshold = params.quality * double(max_lambda);

    std::vector<std::uint8_t> taken(std::size_t(w) * h, 0);
    const int radius = std::max(0, (params.grid_step + 1) / 2 - 1);
    auto stamp = [&](int x, int y) {
        for (int j = -radius; j <= radius; ++j) {
            const int py = y + j;
            if (py < 0 || py >= h) continue;
            for (int i = -radius; i <= radius; ++i) {
                const int px = x + i;
                if (px < 0 || px >= w) continue;
                taken[std::size_t(py) * w + px] = 1;
            }
        }
    };
    for (const Point& p : occupied) {
        stamp(int(std::lround(p.x)), int(std::lround(p.y)));
    }

    std::vector<SeedPoint> seeds;
    double spacing = params.grid_step;
    for (int s = 0; s < params.scales; ++s, spacing *= std::sqrt(2.0)) {
        for (double yy = spacing; yy <= h - 2; yy += spacing) {
            const int y = int(std::lround(yy));
            for (double xx = spacing; xx <= w - 2; xx += spacing) {
                const int x = int(std::lround(xx));
                if (taken[std::size_t(y) * w + x]) continue;
                if (double(lambda[std::size_t(y) * w + x]) <= threshold) continue;
                seeds.push_back({Point{double(x), double(y)}, s});
                stamp(x, y);
            }
        }
    }
    return seeds;
}

std::optional<Point> track_point(const Point& p, const FlowField& flow) {
    const int w = flow.width, h = flow.height;
    const int cx = std::clamp(int(std::lround(p.x)), 0, w - 1);
    const int cy = std::clamp(int(std::lround(p.y)), 0, h - 1);
    float ubuf[9], vbuf[9];
    int n = 0;
    for (int j = -1; j <= 1; ++j) {
        const int y = std::clamp(cy + j, 0, h - 1);
        for (int i = -1; i <= 1; ++i) {
            const int x = std::clamp(cx + i, 0, w - 1);
            ubuf[n] = flow.u_at(x, y);
            vbuf[n] = flow.v_at(x, y);
            ++n;
        }
    }
    const Point q{p.x + median9(ubuf), p.y + median9(vbuf)};
    if (q.x < 0.0 || q.x > w - 1 || q.y < 0.0 || q.y > h - 1) return std::nullopt;
    return q;
}

std::vector<Tracklet> build_tracklets(const FrameSequence& seq, const std::vector<FlowField>& flows,
                                      const TrackletParams& params) {
    if (flows.size() + 1 != seq.frames.size()) {
        throw std::runtime_error("build_tracklets: flows must align with consecutive frame pairs");
    }
    struct Active {
        std::vector<Point> points;
        int start = 0;
        int scale = 0;
    };
    std::vector<Active> active;
    std::vector<Tracklet> done;
    std::vector<Point> occupied;

    const int last_seed_frame = int(flows.size()) - params.length;
    for (std::size_t t = 0; t < flows.size(); ++t) {
        if (int(t) <= last_seed_frame) {
            occupied.clear();
            occupied.reserve(active.size());
            for (const Active& a : active) occupied.push_back(a.points.back());
            for (const SeedPoint& s : seed_points(seq.frames[t], occupied, params)) {
                active.push_back({{s.pos}, int(t), s.scale});
            }
        }

        std::size_t keep = 0;
        for (std::size_t i = 0; i < active.size(); ++i) {
            Active& a = active[i];
            const auto q = track_point(a.points.back(), flows[t]);
            if (!q.has_value()) continue;  // left the frame: discard
            const double step = step_length(a.points.back(), *q);
            if (step >= params.max_step) continue;  // sudden large displacement
            a.points.push_back(*q);
            if (int(a.points.size()) == params.length + 1) {
                double path = 0.0;
                for (std::size_t s = 0; s + 1 < a.points.size(); ++s) {
                    path += step_length(a.points[s], a.points[s + 1]);
                }
                if (path > params.min_total) {
                    done.push_back({std::move(a.points), a.start, a.scale});
                }
                continue;  // finished either way
            }
            if (keep != i) active[keep] = std::move(active[i]);
            ++keep;
        }
        active.resize(keep);
    }
    return done;
}

DcsDescriptor dcs_descriptor(const Tracklet& t, const std::vector<KinematicMaps>& kin,
                             const TrackletParams& params) {
    return DescriptorBuilder(kin, params).describe(t);
}

std::vector<DcsDescriptor> dcs_descriptors(const std::vector<Tracklet>& tracklets,
                                           const std::vector<KinematicMaps>& kin,
                                           const TrackletParams& params) {
    DescriptorBuilder builder(kin, params);
    std::vector<DcsDescriptor> out;
    out.reserve(tracklets.size());
    for (const Tracklet& t : tracklets) out.push_back(builder.describe(t));
    return out;
}

}  // namespace pfm
