#pragma once

#include <optional>
#include <vector>

#include "pfm/flow.hpp"
#include "pfm/media.hpp"

namespace pfm {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

struct SeedPoint {
    Point pos;
    int scale = 0;
};

// A short-term trajectory: L+1 sub-pixel positions starting at frame
// `start_frame` (frames are positional indices into the sequence).
struct Tracklet {
    std::vector<Point> points;
    int start_frame = 0;
    int scale_level = 0;
};

struct TrackletParams {
    int length = 15;              // L: tracked steps per trajectory
    int grid_step = 5;            // W: base sampling stride in pixels
    int scales = 8;               // sampling scales, stride grows by sqrt(2)
    double max_step = 20.0;       // discard on any single step >= this
    double min_total = 1.0;       // discard when the path length is below this
    double quality = 0.001;       // structure-tensor eigenvalue fraction
    int volume_size = 32;         // N: descriptor patch side
    int spatial_cells = 2;        // cells per spatial axis
    int temporal_cells = 3;       // cells along the trajectory
    int orientation_bins = 8;
    bool absolute_coords = false; // alternative coords block: frame-normalized positions
};

// Trajectory-shape block plus the three pairwise kinematic histograms,
// concatenated into a 318-dim vector:
//   [0,30)    coords      displacement shape
//   [30,126)  div+curl    orientation histograms
//   [126,222) curl+shear
//   [222,318) div+shear
struct DcsDescriptor {
    std::vector<float> full;
    double anchor_x = 0.0;
    double anchor_y = 0.0;
    int mid_frame = 0;

    static constexpr int kCoordsDim = 30;
    static constexpr int kPairDim = 96;
    static constexpr int kFullDim = 318;
};

// Grid seeds at every sampling scale, skipping positions within
// grid_step/2 (Chebyshev) of an already-tracked point and positions whose
// 3x3 structure-tensor minimum eigenvalue falls below
// quality * (frame maximum). Seeds accepted earlier in the same call also
// occupy their cell.
std::vector<SeedPoint> seed_points(const Frame& frame, const std::vector<Point>& occupied,
                                   const TrackletParams& params = {});

// One tracking step: p + median_3x3(flow) sampled at round(p). Empty when
// the new position leaves the frame.
std::optional<Point> track_point(const Point& p, const FlowField& flow);

// Runs dense sampling and tracking over the whole sequence; flows[t] must be
// the flow from frames[t] to frames[t+1]. Every returned tracklet has
// exactly length+1 points and obeys the pruning thresholds.
std::vector<Tracklet> build_tracklets(const FrameSequence& seq, const std::vector<FlowField>& flows,
                                      const TrackletParams& params = {});

// Descriptor for a single tracklet; kin[t] must correspond to flows[t].
// Throws when the trajectory has zero total displacement.
DcsDescriptor dcs_descriptor(const Tracklet& t, const std::vector<KinematicMaps>& kin,
                             const TrackletParams& params = {});

// Batch variant sharing per-frame orientation/magnitude planes across
// tracklets; results are identical to calling dcs_descriptor per tracklet.
std::vector<DcsDescriptor> dcs_descriptors(const std::vector<Tracklet>& tracklets,
                                           const std::vector<KinematicMaps>& kin,
                                           const TrackletParams& params = {});

// Minimum eigenvalue of the 3x3-aggregated gradient structure tensor at
// every pixel. Exposed for the seeding tests.
std::vector<float> min_eigenvalue_map(const Frame& frame);

}  // namespace pfm
