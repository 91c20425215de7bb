#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pfm/encode.hpp"
#include "pfm/flow.hpp"
#include "pfm/persons.hpp"
#include "pfm/tracklets.hpp"

namespace pfm {

enum class DetectionSource { Files, Background };

struct ExperimentConfig {
    std::filesystem::path dataset_root;
    std::vector<std::string> cameras;             // empty = all in the manifest
    std::vector<std::string> train_trajectories;
    std::vector<std::string> test_trajectories;
    std::vector<std::string> dict_trajectories;   // dictionary split; empty = train
    bool rotate = false;                          // leave-one-out over all trajectories

    std::array<bool, 4> ft{true, true, true, true};  // coords, DC, CS, DS
    int k = 64;
    bool use_pcal = false;
    PcaTarget pcal;
    int pcah_dims = 0;  // 0 = none
    PyramidConfig pyramid;
    double svm_c = 1.0;
    std::uint64_t seed = 0;
    DetectionSource detections = DetectionSource::Files;
    int bg_train_frames = 40;
    int threads = 0;  // 0 = hardware concurrency
    int gmm_max_samples = 20000;
    bool mirror_augment = true;
    std::string encoder = "fv";  // fv | bow

    double tau_c = 0.5;
    double nms_iou = 0.4;
    double chi2_max = 0.25;
    std::filesystem::path ub_transform_file;  // optional
    TransformParams ub_transform{0.0, 0.55, 1.0, 2.8};

    TrackletParams tracklet;
    TrackBuildParams tracks;
    FlowParams flow;
};

// Flat `key = value` text; '#' starts a comment; unknown keys are errors.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& file);

// Canonical serialization; parse_config_text(echo_config(c)) reproduces c.
std::string echo_config(const ExperimentConfig& c);

}  // namespace pfm
