#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "pfm/media.hpp"
#include "pfm/tracklets.hpp"

namespace pfm {

enum class BoxKind { FullBody, UpperBody, Fused };

struct BoundingBox {
    double cx = 0.0, cy = 0.0;  // center, pixels
    double w = 0.0, h = 0.0;
    double score = 0.0;
    BoxKind kind = BoxKind::FullBody;
    int frame = 0;

    double area() const { return w * h; }
    double left() const { return cx - 0.5 * w; }
    double right() const { return cx + 0.5 * w; }
    double top() const { return cy - 0.5 * h; }
    double bottom() const { return cy + 0.5 * h; }
    bool contains(double x, double y) const {
        return x >= left() && x <= right() && y >= top() && y <= bottom();
    }
};

double iou(const BoundingBox& a, const BoundingBox& b);

// Mean relative geometry between matched full-body and upper-body boxes:
//   x_r = (x_f - x_u)/h_u,  y_r = (y_f - y_u)/h_u,  w_r = w_f/w_u,  h_r = h_f/h_u
struct TransformParams {
    double mu_x = 0.0;
    double mu_y = 0.0;
    double mu_w = 1.0;
    double mu_h = 1.0;
};

// 16 bins per RGB channel, L1-normalized per channel.
using ColorHistogram = std::array<double, 48>;

struct PersonTrack {
    std::vector<BoundingBox> boxes;  // at most one per frame, frames ascending
    std::string track_id;
    ColorHistogram mean_color_hist{};

    int first_frame() const { return boxes.front().frame; }
    int last_frame() const { return boxes.back().frame; }
    double mean_score() const;
    const BoundingBox* box_at(int frame) const;          // exact frame or null
    const BoundingBox& nearest_box(int frame) const;      // closest frame, earlier wins ties
};

TransformParams fit_transform_params(const std::vector<std::pair<BoundingBox, BoundingBox>>& pairs);
BoundingBox ub_to_fb(const BoundingBox& ub, const TransformParams& params);

// Min-max scales scores to [0,1] within the given set; a constant set maps
// to 1.0.
void scale_scores(std::vector<BoundingBox>& boxes);

// Klaser-style combination of one frame's detections. Scores must already be
// scaled to [0,1] per class. The caller applies NMS afterwards.
std::vector<BoundingBox> combine_detections(const std::vector<BoundingBox>& fbs,
                                            const std::vector<BoundingBox>& ubs,
                                            const TransformParams& params, double tau_c);

std::vector<BoundingBox> nms(const std::vector<BoundingBox>& boxes, double iou_max);

struct TrackBuildParams {
    int max_gap = 5;
    double min_iou = 0.3;
    int min_length = 10;          // frame span below which low-scored tracks are dropped
    double min_mean_score = 0.2;
    double static_factor = 0.5;   // center path length < factor * mean width => static
};

std::vector<PersonTrack> build_tracks(const std::vector<std::vector<BoundingBox>>& detections_per_frame,
                                      const TrackBuildParams& params = {});

// chi^2 histogram distance with an epsilon guard.
double chi2_distance(const ColorHistogram& a, const ColorHistogram& b);

ColorHistogram box_color_histogram(const Frame& frame, const BoundingBox& box);

// Fills mean color histograms and merges temporally disjoint tracks whose
// histograms are closer than chi2_max, smallest distances first.
std::vector<PersonTrack> link_tracks(std::vector<PersonTrack> tracks, const FrameSequence& seq,
                                     double chi2_max);

// Fallback localizer: per-pixel 3-component Gaussian mixture background
// model fitted on the first n_train frames; per frame the largest foreground
// component yields one 1:3 aspect box (none when the foreground is tiny).
std::vector<std::vector<BoundingBox>> localize_by_background(const FrameSequence& seq, int n_train);

// Keeps tracklets that pass through at least one box of any track, tagged
// with the id of the track containing most of their points.
std::vector<std::pair<Tracklet, std::string>> filter_tracklets(const std::vector<Tracklet>& tracklets,
                                                               const std::vector<PersonTrack>& tracks);

// Detections file: one `frame kind cx cy w h score` line per detection,
// kind in {fb, ub}. '#' starts a comment.
std::vector<BoundingBox> read_detections(const std::filesystem::path& file);
void write_detections(const std::filesystem::path& file, const std::vector<BoundingBox>& boxes);

// Transform-params file: four whitespace-separated reals.
TransformParams read_transform_params(const std::filesystem::path& file);

}  // namespace pfm
