#include "pfm/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "pfm/util.hpp"

namespace pfm {
namespace {

std::vector<std::string> parse_list(const std::string& value) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream iss(value);
    while (std::getline(iss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::string join_list(const std::vector<std::string>& items) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i > 0) out += ",";
        out += items[i];
    }
    return out;
}

PyramidConfig parse_pyramid(const std::string& value) {
    PyramidConfig p;
    p.levels.clear();
    for (const std::string& lv : parse_list(value)) {
        const auto x = lv.find('x');
        if (x == std::string::npos) throw std::runtime_error("config: pyramid level '" + lv + "' must be RxC");
        PyramidLevel level;
        level.rows = std::stoi(lv.substr(0, x));
        level.cols = std::stoi(lv.substr(x + 1));
        if (level.rows < 1 || level.cols < 1) throw std::runtime_error("config: pyramid level out of range");
        p.levels.push_back(level);
    }
    if (p.levels.empty()) throw std::runtime_error("config: pyramid needs at least one level");
    return p;
}

std::string pyramid_to_string(const PyramidConfig& p) {
    std::string out;
    for (std::size_t i = 0; i < p.levels.size(); ++i) {
        if (i > 0) out += ",";
        out += std::to_string(p.levels[i].rows) + "x" + std::to_string(p.levels[i].cols);
    }
    return out;
}

bool parse_bool(const std::string& v) {
    if (v == "1" || v == "true" || v == "yes") return true;
    if (v == "0" || v == "false" || v == "no") return false;
    throw std::runtime_error("config: boolean value expected, got '" + v + "'");
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig c;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    bool have_pcal = false;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string stripped = trim(line.substr(0, line.find('#')));
        if (stripped.empty()) continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw std::runtime_error("config line " + std::to_string(lineno) + ": expected key = value");
        }
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        try {
            if (key == "dataset_root") {
                c.dataset_root = value;
            } else if (key == "cameras") {
                c.cameras = value == "all" ? std::vector<std::string>{} : parse_list(value);
            } else if (key == "train_trajectories") {
                c.train_trajectories = parse_list(value);
            } else if (key == "test_trajectories") {
                c.test_trajectories = parse_list(value);
            } else if (key == "dict_trajectories") {
                c.dict_trajectories = parse_list(value);
            } else if (key == "rotate") {
                c.rotate = parse_bool(value);
            } else if (key == "ft") {
                if (value.size() != 4) throw std::runtime_error("ft needs 4 binary digits");
                bool any = false;
                for (int i = 0; i < 4; ++i) {
                    if (value[std::size_t(i)] != '0' && value[std::size_t(i)] != '1') {
                        throw std::runtime_error("ft needs 4 binary digits");
                    }
                    c.ft[std::size_t(i)] = value[std::size_t(i)] == '1';
                    any = any || c.ft[std::size_t(i)];
                }
                if (!any) throw std::runtime_error("ft must select at least one subtype");
            } else if (key == "k") {
                c.k = std::stoi(value);
                if (c.k < 1) throw std::runtime_error("k must be >= 1");
            } else if (key == "pcal") {
                if (value == "none") {
                    c.use_pcal = false;
                } else if (!value.empty() && value[0] == 'x') {
                    c.use_pcal = true;
                    c.pcal = PcaTarget::fraction(std::stod(value.substr(1)) / 100.0);
                } else {
                    c.use_pcal = true;
                    c.pcal = PcaTarget::dims(std::stoi(value));
                }
                have_pcal = true;
            } else if (key == "pcah") {
                c.pcah_dims = value == "none" ? 0 : std::stoi(value);
            } else if (key == "pyramid") {
                const PyramidConfig parsed = parse_pyramid(value);
                c.pyramid.levels = parsed.levels;
            } else if (key == "temporal_cells") {
                c.pyramid.temporal_cells = std::stoi(value);
            } else if (key == "subseq_len") {
                c.pyramid.subseq_len = std::stoi(value);
            } else if (key == "subseq_overlap") {
                c.pyramid.subseq_overlap = std::stoi(value);
            } else if (key == "svm_c") {
                c.svm_c = std::stod(value);
            } else if (key == "seed") {
                c.seed = std::stoull(value);
            } else if (key == "detections") {
                if (value == "files") {
                    c.detections = DetectionSource::Files;
                } else if (value == "background") {
                    c.detections = DetectionSource::Background;
                } else {
                    throw std::runtime_error("detections must be 'files' or 'background'");
                }
            } else if (key == "bg_train_frames") {
                c.bg_train_frames = std::stoi(value);
            } else if (key == "threads") {
                c.threads = std::stoi(value);
            } else if (key == "gmm_max_samples") {
                c.gmm_max_samples = std::stoi(value);
            } else if (key == "mirror") {
                c.mirror_augment = parse_bool(value);
            } else if (key == "encoder") {
                if (value != "fv" && value != "bow") throw std::runtime_error("encoder must be 'fv' or 'bow'");
                c.encoder = value;
            } else if (key == "tau_c") {
                c.tau_c = std::stod(value);
            } else if (key == "nms_iou") {
                c.nms_iou = std::stod(value);
            } else if (key == "chi2_max") {
                c.chi2_max = std::stod(value);
            } else if (key == "ub_transform") {
                c.ub_transform_file = value;
            } else if (key == "tracklet_length") {
                c.tracklet.length = std::stoi(value);
            } else if (key == "grid_step") {
                c.tracklet.grid_step = std::stoi(value);
            } else if (key == "scales") {
                c.tracklet.scales = std::stoi(value);
            } else if (key == "max_step") {
                c.tracklet.max_step = std::stod(value);
            } else if (key == "min_total") {
                c.tracklet.min_total = std::stod(value);
            } else if (key == "quality") {
                c.tracklet.quality = std::stod(value);
            } else if (key == "track_max_gap") {
                c.tracks.max_gap = std::stoi(value);
            } else if (key == "track_min_iou") {
                c.tracks.min_iou = std::stod(value);
            } else if (key == "track_min_length") {
                c.tracks.min_length = std::stoi(value);
            } else if (key == "track_min_mean_score") {
                c.tracks.min_mean_score = std::stod(value);
            } else if (key == "track_static_factor") {
                c.tracks.static_factor = std::stod(value);
            } else if (key == "flow_levels") {
                c.flow.pyramid_levels = std::stoi(value);
            } else if (key == "flow_window") {
                c.flow.blur_window = std::stoi(value);
            } else if (key == "flow_iterations") {
                c.flow.iterations = std::stoi(value);
            } else {
                throw std::runtime_error("unknown key '" + key + "'");
            }
        } catch (const std::invalid_argument&) {
            throw std::runtime_error("config line " + std::to_string(lineno) + ": bad value for '" + key + "'");
        }
    }
    if (!have_pcal) c.use_pcal = false;
    if (c.tracklet.length < 1) throw std::runtime_error("config: tracklet_length must be >= 1");
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open config file '" + file.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

std::string echo_config(const ExperimentConfig& c) {
    std::ostringstream out;
    out << "dataset_root = " << c.dataset_root.string() << "\n";
    out << "cameras = " << (c.cameras.empty() ? "all" : join_list(c.cameras)) << "\n";
    out << "train_trajectories = " << join_list(c.train_trajectories) << "\n";
    out << "test_trajectories = " << join_list(c.test_trajectories) << "\n";
    if (!c.dict_trajectories.empty()) out << "dict_trajectories = " << join_list(c.dict_trajectories) << "\n";
    out << "rotate = " << (c.rotate ? 1 : 0) << "\n";
    out << "ft = ";
    for (bool b : c.ft) out << (b ? '1' : '0');
    out << "\n";
    out << "k = " << c.k << "\n";
    if (c.use_pcal) {
        if (c.pcal.is_fraction) {
            out << "pcal = x" << c.pcal.value * 100.0 << "\n";
        } else {
            out << "pcal = " << int(c.pcal.value) << "\n";
        }
    } else {
        out << "pcal = none\n";
    }
    out << "pcah = " << (c.pcah_dims > 0 ? std::to_string(c.pcah_dims) : "none") << "\n";
    out << "pyramid = " << pyramid_to_string(c.pyramid) << "\n";
    out << "temporal_cells = " << c.pyramid.temporal_cells << "\n";
    out << "subseq_len = " << c.pyramid.subseq_len << "\n";
    out << "subseq_overlap = " << c.pyramid.subseq_overlap << "\n";
    out << "svm_c = " << c.svm_c << "\n";
    out << "seed = " << c.seed << "\n";
    out << "detections = " << (c.detections == DetectionSource::Files ? "files" : "background") << "\n";
    out << "bg_train_frames = " << c.bg_train_frames << "\n";
    out << "threads = " << c.threads << "\n";
    out << "gmm_max_samples = " << c.gmm_max_samples << "\n";
    out << "mirror = " << (c.mirror_augment ? 1 : 0) << "\n";
    out << "encoder = " << c.encoder << "\n";
    out << "tau_c = " << c.tau_c << "\n";
    out << "nms_iou = " << c.nms_iou << "\n";
    out << "chi2_max = " << c.chi2_max << "\n";
    if (!c.ub_transform_file.empty()) out << "ub_transform = " << c.ub_transform_file.string() << "\n";
    out << "tracklet_length = " << c.tracklet.length << "\n";
    out << "grid_step = " << c.tracklet.grid_step << "\n";
    out << "scales = " << c.tracklet.scales << "\n";
    out << "max_step = " << c.tracklet.max_step << "\n";
    out << "min_total = " << c.tracklet.min_total << "\n";
    out << "quality = " << c.tracklet.quality << "\n";
    out << "track_max_gap = " << c.tracks.max_gap << "\n";
    out << "track_min_iou = " << c.tracks.min_iou << "\n";
    out << "track_min_length = " << c.tracks.min_length << "\n";
    out << "track_min_mean_score = " << c.tracks.min_mean_score << "\n";
    out << "track_static_factor = " << c.tracks.static_factor << "\n";
    out << "flow_levels = " << c.flow.pyramid_levels << "\n";
    out << "flow_window = " << c.flow.blur_window << "\n";
    out << "flow_iterations = " << c.flow.iterations << "\n";
    return out.str();
}

}  // namespace pfm
