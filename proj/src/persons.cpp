#include "pfm/persons.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "pfm/util.hpp"

namespace pfm {
namespace {

constexpr double kChi2Eps = 1e-10;

std::vector<std::size_t> indices_by_descending_score(const std::vector<BoundingBox>& boxes) {
    std::vector<std::size_t> idx(boxes.size());
    std::iota(idx.begin(), idx.end(), std::size_t(0));
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return boxes[a].score > boxes[b].score; });
    return idx;
}

}  // namespace

double iou(const BoundingBox& a, const BoundingBox& b) {
    const double ix = std::max(0.0, std::min(a.right(), b.right()) - std::max(a.left(), b.left()));
    const double iy = std::max(0.0, std::min(a.bottom(), b.bottom()) - std::max(a.top(), b.top()));
    const double inter = ix * iy;
    const double uni = a.area() + b.area() - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

double PersonTrack::mean_score() const {
    if (boxes.empty()) return 0.0;
    double s = 0.0;
    for (const BoundingBox& b : boxes) s += b.score;
    return s / double(boxes.size());
}

const BoundingBox* PersonTrack::box_at(int frame) const {
    const auto it = std::lower_bound(boxes.begin(), boxes.end(), frame,
                                     [](const BoundingBox& b, int f) { return b.frame < f; });
    if (it != boxes.end() && it->frame == frame) return &*it;
    return nullptr;
}

const BoundingBox& PersonTrack::nearest_box(int frame) const {
    const BoundingBox* best = &boxes.front();
    int best_d = std::abs(best->frame - frame);
    for (const BoundingBox& b : boxes) {
        const int d = std::abs(b.frame - frame);
        if (d < best_d) {
            best = &b;
            best_d = d;
        }
    }
    return *best;
}

TransformParams fit_transform_params(const std::vector<std::pair<BoundingBox, BoundingBox>>& pairs) {
    if (pairs.empty()) throw std::runtime_error("fit_transform_params: no training pairs");
    TransformParams p{0.0, 0.0, 0.0, 0.0};
    for (const auto& [fb, ub] : pairs) {
        if (ub.w <= 0.0 || ub.h <= 0.0) {
            throw std::runtime_error("fit_transform_params: non-positive upper-body dimensions");
        }
        p.mu_x += (fb.cx - ub.cx) / ub.h;
        p.mu_y += (fb.cy - ub.cy) / ub.h;
        p.mu_w += fb.w / ub.w;
        p.mu_h += fb.h / ub.h;
    }
    const double n = double(pairs.size());
    p.mu_x /= n;
    p.mu_y /= n;
    p.mu_w /= n;
    p.mu_h /= n;
    return p;
}

BoundingBox ub_to_fb(const BoundingBox& ub, const TransformParams& params) {
    BoundingBox out = ub;
    out.cx = ub.cx + params.mu_x * ub.h;
    out.cy = ub.cy + params.mu_y * ub.h;
    out.w = params.mu_w * ub.w;
    out.h = params.mu_h * ub.h;
    return out;
}

void scale_scores(std::vector<BoundingBox>& boxes) {
    if (boxes.empty()) return;
    double lo = boxes.front().score, hi = lo;
    for (const BoundingBox& b : boxes) {
        lo = std::min(lo, b.score);
        hi = std::max(hi, b.score);
    }
    if (hi - lo <= 0.0) {
        for (BoundingBox& b : boxes) b.score = 1.0;
        return;
    }
    for (BoundingBox& b : boxes) b.score = (b.score - lo) / (hi - lo);
}

std::vector<BoundingBox> combine_detections(const std::vector<BoundingBox>& fbs,
                                            const std::vector<BoundingBox>& ubs,
                                            const TransformParams& params, double tau_c) {
    std::vector<BoundingBox> tubs;
    tubs.reserve(ubs.size());
    for (const BoundingBox& ub : ubs) tubs.push_back(ub_to_fb(ub, params));

    std::vector<bool> ub_used(tubs.size(), false);
    std::vector<bool> fb_used(fbs.size(), false);
    std::vector<BoundingBox> out;
    out.reserve(fbs.size() + tubs.size());

    for (std::size_t fi : indices_by_descending_score(fbs)) {
        const BoundingBox& fb = fbs[fi];
        double best_iou = 0.0;
        std::size_t best = tubs.size();
        for (std::size_t ui = 0; ui < tubs.size(); ++ui) {
            if (ub_used[ui]) continue;
            const double ov = iou(fb, tubs[ui]);
            if (ov > best_iou) {
                best_iou = ov;
                best = ui;
            }
        }
        if (best < tubs.size() && best_iou > tau_c) {
            const BoundingBox& tub = tubs[best];
            BoundingBox fused = fb.area() >= tub.area() ? fb : tub;
            fused.kind = BoxKind::Fused;
            fused.score = fb.score * ubs[best].score * best_iou;
            out.push_back(fused);
            ub_used[best] = true;
            fb_used[fi] = true;
        }
    }
    for (std::size_t ui = 0; ui < tubs.size(); ++ui) {
        if (!ub_used[ui]) out.push_back(tubs[ui]);
    }
    for (std::size_t fi = 0; fi < fbs.size(); ++fi) {
        if (!fb_used[fi]) out.push_back(fbs[fi]);
    }
    return out;
}

std::vector<BoundingBox> nms(const std::vector<BoundingBox>& boxes, double iou_max) {
    std::vector<BoundingBox> kept;
    for (std::size_t i : indices_by_descending_score(boxes)) {
        bool ok = true;
        for (const BoundingBox& k : kept) {
            if (iou(boxes[i], k) > iou_max) {
                ok = false;
                break;
            }
        }
        if (ok) kept.push_back(boxes[i]);
    }
    return kept;
}

std::vector<PersonTrack> build_tracks(const std::vector<std::vector<BoundingBox>>& detections_per_frame,
                                      const TrackBuildParams& params) {
    std::vector<PersonTrack> tracks;
    for (std::size_t t = 0; t < detections_per_frame.size(); ++t) {
        for (std::size_t di : indices_by_descending_score(detections_per_frame[t])) {
            const BoundingBox& det = detections_per_frame[t][di];
            double best_iou = params.min_iou;
            std::size_t best = tracks.size();
            for (std::size_t k = 0; k < tracks.size(); ++k) {
                const int gap = int(t) - tracks[k].last_frame();
                if (gap < 1 || gap > params.max_gap) continue;
                const double ov = iou(det, tracks[k].boxes.back());
                if (ov > best_iou) {
                    best_iou = ov;
                    best = k;
                }
            }
            BoundingBox b = det;
            b.frame = int(t);
            if (best < tracks.size()) {
                tracks[best].boxes.push_back(b);
            } else {
                PersonTrack nt;
                nt.track_id = "t" + std::to_string(tracks.size());
                nt.boxes.push_back(b);
                tracks.push_back(std::move(nt));
            }
        }
    }

    std::vector<PersonTrack> kept;
    for (PersonTrack& tr : tracks) {
        const int span = tr.last_frame() - tr.first_frame() + 1;
        if (span < params.min_length && tr.mean_score() < params.min_mean_score) continue;
        double path = 0.0, mean_w = 0.0;
        for (std::size_t i = 0; i < tr.boxes.size(); ++i) {
            mean_w += tr.boxes[i].w;
            if (i > 0) {
                path += std::hypot(tr.boxes[i].cx - tr.boxes[i - 1].cx,
                                   tr.boxes[i].cy - tr.boxes[i - 1].cy);
            }
        }
        mean_w /= double(tr.boxes.size());
        if (path < params.static_factor * mean_w) continue;  // static object
        kept.push_back(std::move(tr));
    }
    return kept;
}

double chi2_distance(const ColorHistogram& a, const ColorHistogram& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        d += diff * diff / (a[i] + b[i] + kChi2Eps);
    }
    return 0.5 * d;
}

ColorHistogram box_color_histogram(const Frame& frame, const BoundingBox& box) {
    ColorHistogram h{};
    const int x0 = std::max(0, int(std::floor(box.left())));
    const int x1 = std::min(frame.width - 1, int(std::ceil(box.right())));
    const int y0 = std::max(0, int(std::floor(box.top())));
    const int y1 = std::min(frame.height - 1, int(std::ceil(box.bottom())));
    std::array<double, 3> totals{};
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            for (int c = 0; c < 3; ++c) {
                const float v = frame.has_color() ? frame.color_at(x, y, c) : frame.at(x, y);
                const int bin = std::min(15, int(v * 16.0f));
                h[std::size_t(c * 16 + bin)] += 1.0;
                totals[std::size_t(c)] += 1.0;
            }
        }
    }
    for (int c = 0; c < 3; ++c) {
        if (totals[std::size_t(c)] > 0.0) {
            for (int i = 0; i < 16; ++i) h[std::size_t(c * 16 + i)] /= totals[std::size_t(c)];
        }
    }
    return h;
}

namespace {

struct TrackHist {
    ColorHistogram sum{};
    std::size_t count = 0;

    ColorHistogram mean() const {
        ColorHistogram m{};
        for (std::size_t i = 0; i < m.size(); ++i) m[i] = sum[i] / double(count);
        return m;
    }
};

bool overlap_in_time(const PersonTrack& a, const PersonTrack& b) {
    return !(a.last_frame() < b.first_frame() || b.last_frame() < a.first_frame());
}

}  // namespace

std::vector<PersonTrack> link_tracks(std::vector<PersonTrack> tracks, const FrameSequence& seq,
                                     double chi2_max) {
    std::vector<TrackHist> hists(tracks.size());
    for (std::size_t k = 0; k < tracks.size(); ++k) {
        for (const BoundingBox& b : tracks[k].boxes) {
            if (b.frame < 0 || std::size_t(b.frame) >= seq.frames.size()) continue;
            const ColorHistogram bh = box_color_histogram(seq.frames[std::size_t(b.frame)], b);
            for (std::size_t i = 0; i < bh.size(); ++i) hists[k].sum[i] += bh[i];
            ++hists[k].count;
        }
        tracks[k].mean_color_hist = hists[k].count > 0 ? hists[k].mean() : ColorHistogram{};
    }

    for (;;) {
        double best_d = chi2_max;
        std::size_t bi = tracks.size(), bj = tracks.size();
        for (std::size_t i = 0; i < tracks.size(); ++i) {
            for (std::size_t j = i + 1; j < tracks.size(); ++j) {
                if (overlap_in_time(tracks[i], tracks[j])) continue;
                if (hists[i].count == 0 || hists[j].count == 0) continue;
                const double d = chi2_distance(tracks[i].mean_color_hist, tracks[j].mean_color_hist);
                if (d < best_d) {
                    best_d = d;
                    bi = i;
                    bj = j;
                }
            }
        }
        if (bi >= tracks.size()) break;
        // keep the earlier track first
        if (tracks[bj].first_frame() < tracks[bi].first_frame()) std::swap(bi, bj);
        PersonTrack& dst = tracks[bi];
        PersonTrack& src = tracks[bj];
        dst.boxes.insert(dst.boxes.end(), src.boxes.begin(), src.boxes.end());
        std::sort(dst.boxes.begin(), dst.boxes.end(),
                  [](const BoundingBox& a, const BoundingBox& b) { return a.frame < b.frame; });
        for (std::size_t i = 0; i < hists[bi].sum.size(); ++i) hists[bi].sum[i] += hists[bj].sum[i];
        hists[bi].count += hists[bj].count;
        dst.mean_color_hist = hists[bi].mean();
        tracks.erase(tracks.begin() + std::ptrdiff_t(bj));
        hists.erase(hists.begin() + std::ptrdiff_t(bj));
    }
    return tracks;
}

namespace {

// Tiny 1-D diagonal EM for the per-pixel background model.
struct PixelGmm {
    std::array<double, 3> w{}, mu{}, var{};
    int k = 0;

    bool explains(double x) const {
        for (int i = 0; i < k; ++i) {
            if (w[std::size_t(i)] < 0.05) continue;
            const double d = x - mu[std::size_t(i)];
            if (d * d <= 6.25 * var[std::size_t(i)]) return true;  // within 2.5 sigma
        }
        return false;
    }
};

PixelGmm fit_pixel_gmm(std::vector<double>& samples) {
    constexpr double kVarFloor = 1e-6;
    const std::size_t n = samples.size();
    double mean = 0.0;
    for (double v : samples) mean += v;
    mean /= double(n);
    double var = 0.0;
    for (double v : samples) var += (v - mean) * (v - mean);
    var /= double(n);

    PixelGmm g;
    if (var < kVarFloor) {  // effectively constant pixel
        g.k = 1;
        g.w[0] = 1.0;
        g.mu[0] = mean;
        g.var[0] = kVarFloor;
        return g;
    }

    std::vector<double> sorted = samples;
    std::sort(sorted.begin(), sorted.end());
    g.k = 3;
    for (int i = 0; i < 3; ++i) {
        g.w[std::size_t(i)] = 1.0 / 3.0;
        g.mu[std::size_t(i)] = sorted[std::min(n - 1, n * std::size_t(2 * i + 1) / 6)];
        g.var[std::size_t(i)] = std::max(var, kVarFloor);
    }

    std::vector<double> resp(n * 3);
    for (int iter = 0; iter < 25; ++iter) {
        for (std::size_t t = 0; t < n; ++t) {
            double norm = 0.0;
            for (int i = 0; i < 3; ++i) {
                const double d = samples[t] - g.mu[std::size_t(i)];
                const double p = g.w[std::size_t(i)] / std::sqrt(g.var[std::size_t(i)]) *
                                 std::exp(-0.5 * d * d / g.var[std::size_t(i)]);
                resp[t * 3 + std::size_t(i)] = p;
                norm += p;
            }
            if (norm <= 0.0) {
                for (int i = 0; i < 3; ++i) resp[t * 3 + std::size_t(i)] = 1.0 / 3.0;
            } else {
                for (int i = 0; i < 3; ++i) resp[t * 3 + std::size_t(i)] /= norm;
            }
        }
        for (int i = 0; i < 3; ++i) {
            double rw = 0.0, rm = 0.0;
            for (std::size_t t = 0; t < n; ++t) {
                rw += resp[t * 3 + std::size_t(i)];
                rm += resp[t * 3 + std::size_t(i)] * samples[t];
            }
            if (rw < 1e-9) continue;
            const double m = rm / rw;
            double rv = 0.0;
            for (std::size_t t = 0; t < n; ++t) {
                rv += resp[t * 3 + std::size_t(i)] * (samples[t] - m) * (samples[t] - m);
            }
            g.w[std::size_t(i)] = rw / double(n);
            g.mu[std::size_t(i)] = m;
            g.var[std::size_t(i)] = std::max(rv / rw, kVarFloor);
        }
    }
    return g;
}

}  // namespace

std::vector<std::vector<BoundingBox>> localize_by_background(const FrameSequence& seq, int n_train) {
    if (n_train < 1 || std::size_t(n_train) > seq.frames.size()) {
        throw std::runtime_error("localize_by_background: n_train exceeds the sequence length");
    }
    const int w = seq.width(), h = seq.height();
    const std::size_t npix = std::size_t(w) * h;

    std::vector<PixelGmm> model(npix);
    {
        std::vector<double> samples(std::size_t(n_train), 0.0);
        for (std::size_t p = 0; p < npix; ++p) {
            for (int t = 0; t < n_train; ++t) samples[std::size_t(t)] = seq.frames[std::size_t(t)].gray[p];
            model[p] = fit_pixel_gmm(samples);
        }
    }

    constexpr int kMinArea = 50;
    std::vector<std::vector<BoundingBox>> out(seq.frames.size());
    std::vector<std::uint8_t> mask(npix);
    std::vector<int> comp(npix);
    std::vector<std::size_t> stack;
    for (std::size_t t = 0; t < seq.frames.size(); ++t) {
        const Frame& f = seq.frames[t];
        for (std::size_t p = 0; p < npix; ++p) mask[p] = model[p].explains(f.gray[p]) ? 0 : 1;

        // largest 4-connected foreground component
        std::fill(comp.begin(), comp.end(), -1);
        int best_label = -1, best_area = 0;
        int bx0 = 0, bx1 = 0, by0 = 0, by1 = 0;
        int label = 0;
        for (std::size_t p = 0; p < npix; ++p) {
            if (!mask[p] || comp[p] >= 0) continue;
            int area = 0, x0 = w, x1 = -1, y0 = h, y1 = -1;
            stack.clear();
            stack.push_back(p);
            comp[p] = label;
            while (!stack.empty()) {
                const std::size_t q = stack.back();
                stack.pop_back();
                const int qx = int(q % std::size_t(w)), qy = int(q / std::size_t(w));
                ++area;
                x0 = std::min(x0, qx);
                x1 = std::max(x1, qx);
                y0 = std::min(y0, qy);
                y1 = std::max(y1, qy);
                const int nx[4] = {qx - 1, qx + 1, qx, qx};
                const int ny[4] = {qy, qy, qy - 1, qy + 1};
                for (int d = 0; d < 4; ++d) {
                    if (nx[d] < 0 || nx[d] >= w || ny[d] < 0 || ny[d] >= h) continue;
                    const std::size_t r = std::size_t(ny[d]) * w + nx[d];
                    if (mask[r] && comp[r] < 0) {
                        comp[r] = label;
                        stack.push_back(r);
                    }
                }
            }
            if (area > best_area) {
                best_area = area;
                best_label = label;
                bx0 = x0;
                bx1 = x1;
                by0 = y0;
                by1 = y1;
            }
            ++label;
        }
        if (best_label < 0 || best_area < kMinArea) continue;

        BoundingBox box;
        box.cx = 0.5 * (bx0 + bx1);
        box.cy = 0.5 * (by0 + by1);
        box.w = double(bx1 - bx0 + 1);
        box.h = double(by1 - by0 + 1);
        // expand symmetrically to an exact 1:3 aspect
        if (3.0 * box.w >= box.h) {
            box.h = 3.0 * box.w;
        } else {
            box.w = box.h / 3.0;
        }
        box.score = 1.0;
        box.kind = BoxKind::FullBody;
        box.frame = int(t);
        out[t].push_back(box);
    }
    return out;
}

std::vector<std::pair<Tracklet, std::string>> filter_tracklets(const std::vector<Tracklet>& tracklets,
                                                               const std::vector<PersonTrack>& tracks) {
    std::vector<std::pair<Tracklet, std::string>> out;
    for (const Tracklet& t : tracklets) {
        std::size_t best = tracks.size();
        int best_hits = 0;
        for (std::size_t k = 0; k < tracks.size(); ++k) {
            int hits = 0;
            for (std::size_t i = 0; i < t.points.size(); ++i) {
                const BoundingBox* b = tracks[k].box_at(t.start_frame + int(i));
                if (b != nullptr && b->contains(t.points[i].x, t.points[i].y)) ++hits;
            }
            if (hits > best_hits ||
                (hits == best_hits && hits > 0 && best < tracks.size() &&
                 tracks[k].mean_score() > tracks[best].mean_score())) {
                best_hits = hits;
                best = k;
            }
        }
        if (best_hits > 0) out.emplace_back(t, tracks[best].track_id);
    }
    return out;
}

std::vector<BoundingBox> read_detections(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open detections file '" + file.string() + "'");
    std::vector<BoundingBox> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line.substr(0, line.find('#')));
        if (t.empty()) continue;
        BoundingBox b;
        std::string kind;
        std::istringstream iss(t);
        if (!(iss >> b.frame >> kind >> b.cx >> b.cy >> b.w >> b.h >> b.score) ||
            (kind != "fb" && kind != "ub")) {
            throw std::runtime_error("detections file '" + file.string() + "' line " +
                                     std::to_string(lineno) + ": malformed");
        }
        b.kind = kind == "fb" ? BoxKind::FullBody : BoxKind::UpperBody;
        out.push_back(b);
    }
    return out;
}

void write_detections(const std::filesystem::path& file, const std::vector<BoundingBox>& boxes) {
    std::ofstream out(file);
    if (!out) throw std::runtime_error("cannot write detections file '" + file.string() + "'");
    for (const BoundingBox& b : boxes) {
        out << b.frame << ' ' << (b.kind == BoxKind::UpperBody ? "ub" : "fb") << ' ' << b.cx << ' '
            << b.cy << ' ' << b.w << ' ' << b.h << ' ' << b.score << '\n';
    }
}

TransformParams read_transform_params(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open transform-params file '" + file.string() + "'");
    TransformParams p;
    if (!(in >> p.mu_x >> p.mu_y >> p.mu_w >> p.mu_h)) {
        throw std::runtime_error("transform-params file '" + file.string() + "': need four reals");
    }
    return p;
}

}  // namespace pfm
