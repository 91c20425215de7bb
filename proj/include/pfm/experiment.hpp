#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "pfm/classify.hpp"
#include "pfm/config.hpp"
#include "pfm/encode.hpp"
#include "pfm/model_io.hpp"

namespace pfm {

struct ManifestEntry {
    std::string subject, trajectory, camera;
    std::filesystem::path seq_dir;    // relative to the dataset root
    std::filesystem::path dets_file;  // relative to the dataset root
};

// Reads `<root>/manifest.txt`: one `subject trajectory camera seq_dir dets`
// line per sequence.
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& root);

struct MetricsReport {
    double multiview_accuracy = 0.0;  // percent
    std::vector<std::pair<std::string, double>> per_camera_accuracy;
    std::vector<std::pair<std::string, double>> per_rotation_multiview;

    std::vector<std::string> confusion_labels;  // plus a trailing "(none)" column
    std::vector<std::vector<int>> confusion;    // per-video counts, row = true subject

    struct SeqPrediction {
        std::string subject, trajectory, camera;
        Prediction pred;  // empty label when the sequence produced no signal
        bool correct = false;
    };
    std::vector<SeqPrediction> predictions;

    std::string config_echo;
    std::vector<std::pair<std::string, double>> timings;  // seconds per stage
};

// The full pipeline: extract, fit on the training split only, encode,
// classify, and score per-camera plus multiview accuracy. With
// `rotate = 1` every trajectory serves once as the test split and the
// metrics pool over rotations.
MetricsReport run_experiment(const ExperimentConfig& config);

// Training half only (fixed split); the returned bundle persists via
// save_model.
ModelBundle train_models(const ExperimentConfig& config);

// Evaluation of a saved bundle on the config's test split.
MetricsReport evaluate_with_bundle(const ExperimentConfig& config, const ModelBundle& bundle);

// include_timings=false renders only the deterministic content (used when
// comparing reports across runs).
std::string format_report(const MetricsReport& report, bool include_timings = true);
std::string report_csv(const MetricsReport& report);

// Front half of the pipeline for one sequence (shared with the CLI's
// tracklet dump): flow, tracklets, person tracks, filtering, descriptors.
struct ExtractedSequence {
    struct Feature {
        std::vector<float> full;  // 318-dim DCS descriptor
        double anchor_x = 0.0, anchor_y = 0.0;
        int mid_frame = 0;
        int start_frame = 0;
        int scale_level = 0;
        std::vector<Point> points;
    };
    std::vector<Feature> features;
    PersonTrack main_track;
    int t_begin = 0, t_end = 0;
    bool valid = false;  // a person track with at least one tracklet exists
};

ExtractedSequence extract_sequence(const ExperimentConfig& config,
                                   const std::filesystem::path& seq_dir, const std::string& camera,
                                   const std::filesystem::path& dets_file, bool mirrored,
                                   const std::string& subject = "", const std::string& trajectory = "");

}  // namespace pfm
