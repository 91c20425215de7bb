#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace pfm {

// One video frame. Pixel planes are row-major with values in [0,1];
// the color plane, when present, is interleaved RGB.
struct Frame {
    int width = 0;
    int height = 0;
    int index = 0;
    std::vector<float> gray;
    std::vector<float> color;

    bool has_color() const { return !color.empty(); }
    float at(int x, int y) const { return gray[std::size_t(y) * width + x]; }
    float& at(int x, int y) { return gray[std::size_t(y) * width + x]; }
    float color_at(int x, int y, int c) const {
        return color[(std::size_t(y) * width + x) * 3 + c];
    }
};

// One recorded sample: the frames of a single camera watching a single
// subject performing one trajectory.
struct FrameSequence {
    std::vector<Frame> frames;
    std::string camera_id;
    std::string subject_id;
    std::string trajectory_id;
    bool mirrored = false;

    int width() const { return frames.empty() ? 0 : frames.front().width; }
    int height() const { return frames.empty() ? 0 : frames.front().height; }
    std::size_t size() const { return frames.size(); }
};

// Loads all binary PGM/PPM frames found in `directory/camera_id` (or in
// `directory` itself when no such subdirectory exists), ordered by the
// numeric value of the file stem. Color frames also get a BT.601 luminance
// plane. Throws on a missing directory, an unreadable or malformed frame,
// or mixed frame dimensions.
FrameSequence load_sequence(const std::filesystem::path& directory, const std::string& camera_id);

// Horizontal flip of every plane; toggles the `mirrored` flag, keeps labels.
FrameSequence mirror_sequence(const FrameSequence& seq);
Frame mirror_frame(const Frame& f);

// Single-frame IO, maxval 255. Used by the synthetic generator and tests.
Frame read_pnm(const std::filesystem::path& file);
void write_pgm(const std::filesystem::path& file, const Frame& f);
void write_ppm(const std::filesystem::path& file, const Frame& f);

}  // namespace pfm
