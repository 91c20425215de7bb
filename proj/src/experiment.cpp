#include "pfm/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "pfm/media.hpp"
#include "pfm/util.hpp"

namespace fs = std::filesystem;

namespace pfm {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

// DCS subtype blocks: coords, div+curl, curl+shear, div+shear.
constexpr int kBlockOffsets[4] = {0, 30, 126, 222};
constexpr int kBlockDims[4] = {30, 96, 96, 96};

std::vector<int> selected_blocks(const std::array<bool, 4>& ft) {
    std::vector<int> dims;
    for (int b = 0; b < 4; ++b) {
        if (ft[std::size_t(b)]) dims.push_back(kBlockDims[b]);
    }
    return dims;
}

std::vector<double> select_subtypes(const std::vector<float>& full, const std::array<bool, 4>& ft) {
    std::vector<double> out;
    out.reserve(full.size());
    for (int b = 0; b < 4; ++b) {
        if (!ft[std::size_t(b)]) continue;
        for (int i = 0; i < kBlockDims[b]; ++i) {
            out.push_back(double(full[std::size_t(kBlockOffsets[b] + i)]));
        }
    }
    return out;
}

struct SampleKey {
    std::string subject, trajectory, camera;
    bool mirrored = false;

    bool operator<(const SampleKey& o) const {
        return std::tie(subject, trajectory, camera, mirrored) <
               std::tie(o.subject, o.trajectory, o.camera, o.mirrored);
    }
};

struct Dataset {
    const ExperimentConfig* config = nullptr;
    std::vector<ManifestEntry> entries;
    std::map<SampleKey, std::shared_ptr<const ExtractedSequence>> cache;

    const ManifestEntry& entry(const SampleKey& key) const {
        for (const ManifestEntry& e : entries) {
            if (e.subject == key.subject && e.trajectory == key.trajectory && e.camera == key.camera) {
                return e;
            }
        }
        throw std::runtime_error("no manifest entry for " + key.subject + "/" + key.trajectory + "/" +
                                 key.camera);
    }

    // Extracts any missing keys in parallel; the cache map keeps results
    // keyed, so the outcome is independent of the thread count.
    void ensure(const std::vector<SampleKey>& keys) {
        std::vector<SampleKey> missing;
        for (const SampleKey& k : keys) {
            if (cache.find(k) == cache.end()) missing.push_back(k);
        }
        std::sort(missing.begin(), missing.end());
        missing.erase(std::unique(missing.begin(), missing.end(),
                                  [](const SampleKey& a, const SampleKey& b) { return !(a < b) && !(b < a); }),
                      missing.end());
        std::vector<std::shared_ptr<const ExtractedSequence>> results(missing.size());
        parallel_for(missing.size(), config->threads, [&](std::size_t i) {
            const ManifestEntry& e = entry(missing[i]);
            results[i] = std::make_shared<ExtractedSequence>(
                extract_sequence(*config, config->dataset_root / e.seq_dir, e.camera,
                                 e.dets_file.empty() ? fs::path{} : config->dataset_root / e.dets_file,
                                 missing[i].mirrored, e.subject, e.trajectory));
        });
        for (std::size_t i = 0; i < missing.size(); ++i) cache[missing[i]] = results[i];
    }

    const ExtractedSequence& get(const SampleKey& key) const { return *cache.at(key); }
};

// One encodable sample: a sequence, or one of its training subsequence
// windows.
struct Sample {
    SampleKey key;
    int window_begin = 0, window_end = 0;  // frame range
};

std::vector<LocalFeature> sample_features(const ExtractedSequence& seq, const Sample& s,
                                          const std::array<bool, 4>& ft) {
    std::vector<LocalFeature> out;
    for (const auto& f : seq.features) {
        if (f.mid_frame < s.window_begin || f.mid_frame >= s.window_end) continue;
        out.push_back({select_subtypes(f.full, ft), f.anchor_x, f.anchor_y, f.mid_frame});
    }
    return out;
}

// Training samples for one sequence: the whole span, or overlapping windows
// when subsequence splitting is configured.
std::vector<Sample> make_samples(const SampleKey& key, const ExtractedSequence& seq, bool split,
                                 const PyramidConfig& pyr) {
    std::vector<Sample> out;
    if (!split || pyr.subseq_len <= 0 || pyr.subseq_len >= seq.t_end - seq.t_begin) {
        out.push_back({key, seq.t_begin, seq.t_end});
        return out;
    }
    const int step = std::max(1, pyr.subseq_len - pyr.subseq_overlap);
    for (int b = seq.t_begin; b + pyr.subseq_len <= seq.t_end; b += step) {
        out.push_back({key, b, b + pyr.subseq_len});
    }
    if (out.empty()) out.push_back({key, seq.t_begin, seq.t_end});
    return out;
}

struct FittedModels {
    ModelBundle bundle;
    std::array<bool, 4> ft{};
    PyramidConfig pyramid;
    std::string encoder;
};

std::vector<double> encode_sample(const FittedModels& fitted, const ExtractedSequence& seq,
                                  const Sample& s) {
    const std::vector<LocalFeature> feats = sample_features(seq, s, fitted.ft);
    if (feats.empty()) return {};
    const PcaModel* pca_low = fitted.bundle.pca_low.has_value() ? &*fitted.bundle.pca_low : nullptr;
    PfmDescriptor pfm;
    if (fitted.encoder == "bow") {
        pfm = pfm_encode_bow(feats, seq.main_track, fitted.bundle.bow_centers, fitted.bundle.bow_k,
                             pca_low, fitted.pyramid, s.window_begin, s.window_end);
    } else {
        pfm = pfm_encode(feats, seq.main_track, fitted.bundle.gmm, pca_low, fitted.pyramid,
                         s.window_begin, s.window_end);
    }
    if (fitted.bundle.pca_high.has_value()) return apply_pca(*fitted.bundle.pca_high, pfm.vector);
    return pfm.vector;
}

std::vector<std::string> sorted_unique_trajectories(const std::vector<ManifestEntry>& entries) {
    std::set<std::string> t;
    for (const ManifestEntry& e : entries) t.insert(e.trajectory);
    return {t.begin(), t.end()};
}

std::vector<SampleKey> keys_for(const std::vector<ManifestEntry>& entries,
                                const std::vector<std::string>& trajectories, bool mirrored) {
    std::set<std::string> want(trajectories.begin(), trajectories.end());
    std::vector<SampleKey> keys;
    for (const ManifestEntry& e : entries) {
        if (want.count(e.trajectory) == 0) continue;
        keys.push_back({e.subject, e.trajectory, e.camera, mirrored});
    }
    std::sort(keys.begin(), keys.end());
    return keys;
}

FittedModels fit_models_on_split(const ExperimentConfig& config, Dataset& data,
                                 const std::vector<std::string>& train_trajs, std::uint64_t seed,
                                 std::vector<std::pair<std::string, double>>& timings) {
    const std::vector<std::string>& dict_trajs =
        config.dict_trajectories.empty() ? train_trajs : config.dict_trajectories;

    std::vector<SampleKey> train_keys = keys_for(data.entries, train_trajs, false);
    if (config.mirror_augment) {
        for (const SampleKey& k : keys_for(data.entries, train_trajs, true)) train_keys.push_back(k);
    }
    std::vector<SampleKey> dict_keys = keys_for(data.entries, dict_trajs, false);
    if (config.mirror_augment) {
        for (const SampleKey& k : keys_for(data.entries, dict_trajs, true)) dict_keys.push_back(k);
    }
    std::sort(train_keys.begin(), train_keys.end());
    std::sort(dict_keys.begin(), dict_keys.end());

    auto t0 = Clock::now();
    {
        std::vector<SampleKey> all = train_keys;
        all.insert(all.end(), dict_keys.begin(), dict_keys.end());
        data.ensure(all);
    }
    timings.emplace_back("extract_train", seconds_since(t0));

    // ---- dictionary data: subtype-selected low-level descriptors
    t0 = Clock::now();
    std::vector<std::vector<double>> dict_rows;
    for (const SampleKey& k : dict_keys) {
        const ExtractedSequence& seq = data.get(k);
        for (const auto& f : seq.features) dict_rows.push_back(select_subtypes(f.full, config.ft));
    }
    if (dict_rows.empty()) throw std::runtime_error("run_experiment: no training descriptors");

    if (int(dict_rows.size()) > config.gmm_max_samples) {
        std::vector<std::size_t> idx(dict_rows.size());
        std::iota(idx.begin(), idx.end(), std::size_t(0));
        Rng rng(derive_seed(seed, 11));
        rng.shuffle(idx);
        idx.resize(std::size_t(config.gmm_max_samples));
        std::sort(idx.begin(), idx.end());
        std::vector<std::vector<double>> sub;
        sub.reserve(idx.size());
        for (std::size_t i : idx) sub.push_back(std::move(dict_rows[i]));
        dict_rows.swap(sub);
    }

    FittedModels fitted;
    fitted.ft = config.ft;
    fitted.pyramid = config.pyramid;
    fitted.encoder = config.encoder;

    if (config.use_pcal) {
        const std::vector<int> blocks =
            config.pcal.is_fraction ? selected_blocks(config.ft) : std::vector<int>{};
        fitted.bundle.pca_low = fit_pca(dict_rows, config.pcal, PcaScope::LowLevel, blocks);
        for (auto& row : dict_rows) row = apply_pca(*fitted.bundle.pca_low, row);
    }
    timings.emplace_back("pcal", seconds_since(t0));

    t0 = Clock::now();
    if (config.encoder == "bow") {
        fitted.bundle.bow_k = config.k;
        fitted.bundle.bow_centers = kmeans(dict_rows, config.k, derive_seed(seed, 13));
        // a 1-component placeholder keeps the bundle's GMM section valid
        fitted.bundle.gmm = fit_gmm(dict_rows, 1, derive_seed(seed, 13));
    } else {
        fitted.bundle.gmm = fit_gmm(dict_rows, config.k, derive_seed(seed, 13));
    }
    timings.emplace_back("gmm", seconds_since(t0));

    // ---- encode training samples
    t0 = Clock::now();
    std::vector<Sample> train_samples;
    for (const SampleKey& k : train_keys) {
        const ExtractedSequence& seq = data.get(k);
        if (!seq.valid) continue;
        for (const Sample& s : make_samples(k, seq, true, config.pyramid)) train_samples.push_back(s);
    }
    if (train_samples.empty()) throw std::runtime_error("run_experiment: empty training split");

    std::vector<std::vector<double>> train_x(train_samples.size());
    parallel_for(train_samples.size(), config.threads, [&](std::size_t i) {
        train_x[i] = encode_sample(fitted, data.get(train_samples[i].key), train_samples[i]);
    });

    std::vector<std::vector<double>> kept_x;
    std::vector<std::string> kept_y;
    for (std::size_t i = 0; i < train_samples.size(); ++i) {
        if (train_x[i].empty()) continue;  // window without tracklets
        kept_x.push_back(std::move(train_x[i]));
        kept_y.push_back(train_samples[i].key.subject);
    }
    timings.emplace_back("encode_train", seconds_since(t0));

    t0 = Clock::now();
    if (config.pcah_dims > 0) {
        fitted.bundle.pca_high =
            fit_pca(kept_x, PcaTarget::dims(config.pcah_dims), PcaScope::HighLevel);
        for (auto& row : kept_x) row = apply_pca(*fitted.bundle.pca_high, row);
    }
    timings.emplace_back("pcah", seconds_since(t0));

    t0 = Clock::now();
    fitted.bundle.ova = train_ova(kept_x, kept_y, config.svm_c, derive_seed(seed, 17));
    timings.emplace_back("train_svm", seconds_since(t0));

    fitted.bundle.config_echo = echo_config(config);
    return fitted;
}

struct EvalOutcome {
    std::vector<MetricsReport::SeqPrediction> predictions;
    double multiview_accuracy = 0.0;
};

EvalOutcome evaluate_split(const ExperimentConfig& config, Dataset& data, const FittedModels& fitted,
                           const std::vector<std::string>& test_trajs,
                           std::vector<std::pair<std::string, double>>& timings) {
    auto t0 = Clock::now();
    const std::vector<SampleKey> test_keys = keys_for(data.entries, test_trajs, false);
    if (test_keys.empty()) throw std::runtime_error("run_experiment: empty test split");
    data.ensure(test_keys);
    timings.emplace_back("extract_test", seconds_since(t0));

    t0 = Clock::now();
    std::vector<Prediction> preds(test_keys.size());
    parallel_for(test_keys.size(), config.threads, [&](std::size_t i) {
        const ExtractedSequence& seq = data.get(test_keys[i]);
        if (!seq.valid) return;
        const Sample s{test_keys[i], seq.t_begin, seq.t_end};
        const std::vector<double> x = encode_sample(fitted, seq, s);
        if (!x.empty()) preds[i] = predict(fitted.bundle.ova, x);
    });

    EvalOutcome out;
    for (std::size_t i = 0; i < test_keys.size(); ++i) {
        MetricsReport::SeqPrediction sp;
        sp.subject = test_keys[i].subject;
        sp.trajectory = test_keys[i].trajectory;
        sp.camera = test_keys[i].camera;
        sp.pred = preds[i];
        sp.correct = preds[i].label == test_keys[i].subject;
        out.predictions.push_back(std::move(sp));
    }

    // multiview: one vote per camera, grouped by (subject, trajectory)
    std::map<std::pair<std::string, std::string>, std::vector<Prediction>> groups;
    for (std::size_t i = 0; i < test_keys.size(); ++i) {
        if (preds[i].label.empty()) continue;
        groups[{test_keys[i].subject, test_keys[i].trajectory}].push_back(preds[i]);
    }
    std::set<std::pair<std::string, std::string>> instances;
    for (const SampleKey& k : test_keys) instances.insert({k.subject, k.trajectory});
    int mv_correct = 0;
    for (const auto& inst : instances) {
        const auto it = groups.find(inst);
        if (it == groups.end()) continue;
        if (majority_vote(it->second) == inst.first) ++mv_correct;
    }
    out.multiview_accuracy = instances.empty() ? 0.0 : 100.0 * mv_correct / double(instances.size());
    timings.emplace_back("evaluate", seconds_since(t0));
    return out;
}

void finalize_report(MetricsReport& report, const std::vector<ManifestEntry>& entries) {
    std::set<std::string> subject_set;
    for (const ManifestEntry& e : entries) subject_set.insert(e.subject);
    report.confusion_labels.assign(subject_set.begin(), subject_set.end());
    report.confusion_labels.push_back("(none)");
    const std::size_t ncols = report.confusion_labels.size();
    const std::size_t nrows = ncols - 1;
    report.confusion.assign(nrows, std::vector<int>(ncols, 0));

    std::map<std::string, std::pair<int, int>> per_camera;  // correct, total
    auto col_of = [&](const std::string& label) {
        const auto it = std::find(report.confusion_labels.begin(), report.confusion_labels.end(), label);
        return it == report.confusion_labels.end() ? ncols - 1
                                                   : std::size_t(it - report.confusion_labels.begin());
    };
    for (const auto& sp : report.predictions) {
        auto& cam = per_camera[sp.camera];
        cam.second += 1;
        cam.first += sp.correct ? 1 : 0;
        const std::size_t row = col_of(sp.subject);
        const std::size_t col = sp.pred.label.empty() ? ncols - 1 : col_of(sp.pred.label);
        if (row < nrows) report.confusion[row][col] += 1;
    }
    report.per_camera_accuracy.clear();
    for (const auto& [camera, counts] : per_camera) {
        report.per_camera_accuracy.emplace_back(
            camera, counts.second > 0 ? 100.0 * counts.first / counts.second : 0.0);
    }
}

std::vector<std::pair<std::string, double>> merge_timings(
    const std::vector<std::pair<std::string, double>>& raw) {
    std::map<std::string, double> acc;
    for (const auto& [k, v] : raw) acc[k] += v;
    return {acc.begin(), acc.end()};
}

}  // namespace

std::vector<ManifestEntry> read_manifest(const fs::path& root) {
    const fs::path file = root / "manifest.txt";
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open manifest '" + file.string() + "'");
    std::vector<ManifestEntry> entries;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line.substr(0, line.find('#')));
        if (t.empty()) continue;
        const std::vector<std::string> tok = split_tokens(t);
        if (tok.size() < 4) {
            throw std::runtime_error("manifest line " + std::to_string(lineno) + ": malformed");
        }
        ManifestEntry e;
        e.subject = tok[0];
        e.trajectory = tok[1];
        e.camera = tok[2];
        e.seq_dir = tok[3];
        if (tok.size() > 4) e.dets_file = tok[4];
        entries.push_back(std::move(e));
    }
    std::sort(entries.begin(), entries.end(), [](const ManifestEntry& a, const ManifestEntry& b) {
        return std::tie(a.subject, a.trajectory, a.camera) < std::tie(b.subject, b.trajectory, b.camera);
    });
    return entries;
}

ExtractedSequence extract_sequence(const ExperimentConfig& config, const fs::path& seq_dir,
                                   const std::string& camera, const fs::path& dets_file,
                                   bool mirrored, const std::string& subject,
                                   const std::string& trajectory) {
    FrameSequence seq = load_sequence(seq_dir, camera);
    seq.subject_id = subject;
    seq.trajectory_id = trajectory;
    if (mirrored) seq = mirror_sequence(seq);
    const int frames = int(seq.frames.size());
    if (frames < 2) throw std::runtime_error("sequence too short: " + seq_dir.string());

    std::vector<FlowField> flows{std::size_t(frames - 1)};
    std::vector<KinematicMaps> kin{std::size_t(frames - 1)};
    for (int t = 0; t + 1 < frames; ++t) {
        flows[std::size_t(t)] =
            estimate_flow(seq.frames[std::size_t(t)], seq.frames[std::size_t(t) + 1], config.flow);
        kin[std::size_t(t)] = kinematic_maps(flows[std::size_t(t)]);
    }

    const std::vector<Tracklet> tracklets = build_tracklets(seq, flows, config.tracklet);
    flows.clear();
    flows.shrink_to_fit();

    // person detections
    std::vector<std::vector<BoundingBox>> per_frame{std::size_t(frames)};
    if (config.detections == DetectionSource::Files) {
        if (dets_file.empty()) throw std::runtime_error("detections file missing for " + seq_dir.string());
        // map file frame indices (stems) to positions in the sequence
        std::map<int, int> stem_to_pos;
        for (int i = 0; i < frames; ++i) stem_to_pos[seq.frames[std::size_t(i)].index] = i;
        std::vector<std::vector<BoundingBox>> fbs{std::size_t(frames)}, ubs{std::size_t(frames)};
        for (BoundingBox b : read_detections(dets_file)) {
            const auto it = stem_to_pos.find(b.frame);
            if (it == stem_to_pos.end()) continue;
            b.frame = it->second;
            if (mirrored) b.cx = double(seq.width() - 1) - b.cx;
            (b.kind == BoxKind::UpperBody ? ubs : fbs)[std::size_t(it->second)].push_back(b);
        }
        TransformParams tp = config.ub_transform;
        if (!config.ub_transform_file.empty()) tp = read_transform_params(config.ub_transform_file);
        for (int t = 0; t < frames; ++t) {
            scale_scores(fbs[std::size_t(t)]);
            scale_scores(ubs[std::size_t(t)]);
            const std::vector<BoundingBox> combined =
                combine_detections(fbs[std::size_t(t)], ubs[std::size_t(t)], tp, config.tau_c);
            per_frame[std::size_t(t)] = nms(combined, config.nms_iou);
        }
    } else {
        per_frame = localize_by_background(seq, config.bg_train_frames);
        for (auto& dets : per_frame) dets = nms(dets, config.nms_iou);
    }

    std::vector<PersonTrack> tracks = build_tracks(per_frame, config.tracks);
    if (tracks.size() > 1) tracks = link_tracks(std::move(tracks), seq, config.chi2_max);

    ExtractedSequence out;
    out.t_begin = 0;
    out.t_end = frames;
    if (tracks.empty()) return out;

    const auto kept = filter_tracklets(tracklets, tracks);

    // the sequence's person = the track owning the most tracklets
    std::map<std::string, int> votes;
    for (const auto& [t, id] : kept) ++votes[id];
    std::string main_id;
    int best_votes = -1;
    for (const PersonTrack& tr : tracks) {
        const auto it = votes.find(tr.track_id);
        const int v = it == votes.end() ? 0 : it->second;
        if (v > best_votes) {
            best_votes = v;
            main_id = tr.track_id;
        }
    }
    std::vector<Tracklet> main_tracklets;
    for (const auto& [t, id] : kept) {
        if (id == main_id) main_tracklets.push_back(t);
    }
    if (main_tracklets.empty()) return out;

    const std::vector<DcsDescriptor> descs = dcs_descriptors(main_tracklets, kin, config.tracklet);
    for (std::size_t i = 0; i < descs.size(); ++i) {
        ExtractedSequence::Feature f;
        f.full = descs[i].full;
        f.anchor_x = descs[i].anchor_x;
        f.anchor_y = descs[i].anchor_y;
        f.mid_frame = descs[i].mid_frame;
        f.start_frame = main_tracklets[i].start_frame;
        f.scale_level = main_tracklets[i].scale_level;
        f.points = main_tracklets[i].points;
        out.features.push_back(std::move(f));
    }
    for (const PersonTrack& tr : tracks) {
        if (tr.track_id == main_id) {
            out.main_track = tr;
            break;
        }
    }
    out.valid = true;
    return out;
}

MetricsReport run_experiment(const ExperimentConfig& config) {
    Dataset data;
    data.config = &config;
    data.entries = read_manifest(config.dataset_root);
    if (!config.cameras.empty()) {
        std::set<std::string> want(config.cameras.begin(), config.cameras.end());
        std::erase_if(data.entries, [&](const ManifestEntry& e) { return want.count(e.camera) == 0; });
    }
    if (data.entries.empty()) throw std::runtime_error("run_experiment: no sequences selected");

    std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>> rotations;
    if (config.rotate) {
        const std::vector<std::string> all = sorted_unique_trajectories(data.entries);
        if (all.size() < 2) throw std::runtime_error("run_experiment: rotation needs >= 2 trajectories");
        for (const std::string& test : all) {
            std::vector<std::string> train;
            for (const std::string& t : all) {
                if (t != test) train.push_back(t);
            }
            rotations.emplace_back(train, std::vector<std::string>{test});
        }
    } else {
        if (config.train_trajectories.empty() || config.test_trajectories.empty()) {
            throw std::runtime_error("run_experiment: train/test split is empty");
        }
        for (const std::string& t : config.train_trajectories) {
            for (const std::string& u : config.test_trajectories) {
                if (t == u) throw std::runtime_error("run_experiment: train/test split overlaps on " + t);
            }
        }
        rotations.emplace_back(config.train_trajectories, config.test_trajectories);
    }

    MetricsReport report;
    report.config_echo = echo_config(config);
    std::vector<std::pair<std::string, double>> timings;
    double mv_sum = 0.0;
    for (std::size_t rot = 0; rot < rotations.size(); ++rot) {
        const FittedModels fitted = fit_models_on_split(config, data, rotations[rot].first,
                                                        derive_seed(config.seed, 100 + rot), timings);
        const EvalOutcome outcome = evaluate_split(config, data, fitted, rotations[rot].second, timings);
        for (const auto& sp : outcome.predictions) report.predictions.push_back(sp);
        report.per_rotation_multiview.emplace_back("test=" + rotations[rot].second.front(),
                                                   outcome.multiview_accuracy);
        mv_sum += outcome.multiview_accuracy;
    }
    report.multiview_accuracy = mv_sum / double(rotations.size());
    finalize_report(report, data.entries);
    report.timings = merge_timings(timings);
    return report;
}

ModelBundle train_models(const ExperimentConfig& config) {
    if (config.rotate) throw std::runtime_error("train_models: rotation is an evaluation protocol; use a fixed split");
    Dataset data;
    data.config = &config;
    data.entries = read_manifest(config.dataset_root);
    if (!config.cameras.empty()) {
        std::set<std::string> want(config.cameras.begin(), config.cameras.end());
        std::erase_if(data.entries, [&](const ManifestEntry& e) { return want.count(e.camera) == 0; });
    }
    if (config.train_trajectories.empty()) throw std::runtime_error("train_models: empty training split");
    std::vector<std::pair<std::string, double>> timings;
    return fit_models_on_split(config, data, config.train_trajectories, derive_seed(config.seed, 100),
                               timings)
        .bundle;
}

MetricsReport evaluate_with_bundle(const ExperimentConfig& config, const ModelBundle& bundle) {
    Dataset data;
    data.config = &config;
    data.entries = read_manifest(config.dataset_root);
    if (!config.cameras.empty()) {
        std::set<std::string> want(config.cameras.begin(), config.cameras.end());
        std::erase_if(data.entries, [&](const ManifestEntry& e) { return want.count(e.camera) == 0; });
    }
    FittedModels fitted;
    fitted.bundle = bundle;
    fitted.ft = config.ft;
    fitted.pyramid = config.pyramid;
    fitted.encoder = bundle.bow_centers.empty() ? "fv" : "bow";

    MetricsReport report;
    report.config_echo = echo_config(config);
    std::vector<std::pair<std::string, double>> timings;
    const EvalOutcome outcome =
        evaluate_split(config, data, fitted, config.test_trajectories, timings);
    report.predictions = outcome.predictions;
    report.multiview_accuracy = outcome.multiview_accuracy;
    finalize_report(report, data.entries);
    report.timings = merge_timings(timings);
    return report;
}

std::string format_report(const MetricsReport& report, bool include_timings) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(1);
    out << "multiview accuracy: " << report.multiview_accuracy << "%\n";
    if (report.per_rotation_multiview.size() > 1) {
        for (const auto& [name, acc] : report.per_rotation_multiview) {
            out << "  rotation " << name << ": " << acc << "%\n";
        }
    }
    out << "per-camera accuracy:\n";
    for (const auto& [camera, acc] : report.per_camera_accuracy) {
        out << "  " << camera << ": " << acc << "%\n";
    }
    out << "confusion (rows = truth):\n";
    out << "            ";
    for (const auto& l : report.confusion_labels) out << std::setw(7) << l;
    out << "\n";
    for (std::size_t r = 0; r < report.confusion.size(); ++r) {
        out << "  " << std::setw(10) << report.confusion_labels[r];
        for (int v : report.confusion[r]) out << std::setw(7) << v;
        out << "\n";
    }
    if (include_timings) {
        out << "timings (s):\n";
        out << std::setprecision(2);
        for (const auto& [stage, sec] : report.timings) out << "  " << stage << ": " << sec << "\n";
    }
    return out.str();
}

std::string report_csv(const MetricsReport& report) {
    std::ostringstream out;
    out << "subject,trajectory,camera,predicted,correct\n";
    for (const auto& sp : report.predictions) {
        out << sp.subject << ',' << sp.trajectory << ',' << sp.camera << ','
            << (sp.pred.label.empty() ? "(none)" : sp.pred.label) << ',' << (sp.correct ? 1 : 0)
            << "\n";
    }
    return out.str();
}

}  // namespace pfm
