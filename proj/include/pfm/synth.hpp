#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pfm/persons.hpp"
#include "pfm/tracklets.hpp"

namespace pfm {

struct SynthParams {
    int subjects = 2;
    int cameras = 1;
    int trajectories = 1;
    int frames = 60;
    std::uint64_t seed = 0;
    int width = 128;
    int height = 96;
    bool identical_signatures = false;  // ablation: every subject walks like subject 0
};

// Ground truth for one rendered sequence.
struct SynthSequenceTruth {
    std::string subject, trajectory, camera;
    std::vector<BoundingBox> boxes;                   // one per frame
    std::vector<std::array<Point, 4>> limb_centers;   // arms then legs, per frame
};

struct SynthResult {
    std::vector<SynthSequenceTruth> sequences;
};

// Renders a textured articulated walker per (subject, trajectory, camera):
// torso/head plus four oscillating limb blobs translating over a static
// textured background. The per-subject gait signature (limb frequencies,
// phases, amplitudes) comes deterministically from the seed; each camera
// applies a distinct affine transform to the walking path. Writes PGM frame
// directories, a full-body detections file per sequence, and manifest.txt.
SynthResult synth_generate(const SynthParams& params, const std::filesystem::path& out_root);

}  // namespace pfm
