#pragma once

#include <vector>

#include "pfm/media.hpp"

namespace pfm {

// Dense per-pixel displacement from one frame to the next, in pixels/frame.
struct FlowField {
    int width = 0;
    int height = 0;
    std::vector<float> u;
    std::vector<float> v;

    float u_at(int x, int y) const { return u[std::size_t(y) * width + x]; }
    float v_at(int x, int y) const { return v[std::size_t(y) * width + x]; }
};

// First-order kinematic fields of a flow field (units 1/frame):
//   div  = du/dx + dv/dy
//   curl = -du/dy + dv/dx
//   hyp1 = du/dx - dv/dy
//   hyp2 = du/dy + dv/dx
//   shear = sqrt(hyp1^2 + hyp2^2)
struct KinematicMaps {
    int width = 0;
    int height = 0;
    std::vector<float> div, curl, hyp1, hyp2, shear;
};

struct FlowParams {
    int pyramid_levels = 3;
    double pyramid_scale = 0.5;
    int poly_window = 5;      // polynomial expansion window (odd)
    double poly_sigma = 1.1;  // Gaussian applicability width
    int blur_window = 13;     // aggregation window for the normal equations
    int iterations = 3;       // displacement refinements per level
};

// Dense displacement from prev to next via pyramidal polynomial expansion.
// Throws on dimension mismatch.
FlowField estimate_flow(const Frame& prev, const Frame& next, const FlowParams& params = {});

// Central differences in the interior, one-sided at the borders.
KinematicMaps kinematic_maps(const FlowField& flow);

}  // namespace pfm
