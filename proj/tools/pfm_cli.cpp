// Command-line front end: synthetic dataset generation, tracklet dumps,
// training, evaluation, and model inspection.

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "pfm/config.hpp"
#include "pfm/experiment.hpp"
#include "pfm/media.hpp"
#include "pfm/model_io.hpp"
#include "pfm/synth.hpp"
#include "pfm/util.hpp"

namespace fs = std::filesystem;

namespace {

int cmd_synth(const std::string& out, int subjects, int cameras, int trajectories, int frames,
              std::uint64_t seed, int width, int height) {
    pfm::SynthParams p;
    p.subjects = subjects;
    p.cameras = cameras;
    p.trajectories = trajectories;
    p.frames = frames;
    p.seed = seed;
    p.width = width;
    p.height = height;
    const pfm::SynthResult r = pfm::synth_generate(p, out);
    std::cout << "wrote " << r.sequences.size() << " sequences under " << out << "\n";
    return 0;
}

// One line per tracklet: start_frame scale x0 y0 ... xL yL then the 318
// descriptor values.
int cmd_extract(const std::string& seq_dir, const std::string& camera, const std::string& out_file) {
    const pfm::FrameSequence seq = pfm::load_sequence(seq_dir, camera);
    pfm::TrackletParams params;
    std::vector<pfm::FlowField> flows(seq.frames.size() - 1);
    std::vector<pfm::KinematicMaps> kin(flows.size());
    for (std::size_t t = 0; t + 1 < seq.frames.size(); ++t) {
        flows[t] = pfm::estimate_flow(seq.frames[t], seq.frames[t + 1]);
        kin[t] = pfm::kinematic_maps(flows[t]);
    }
    const std::vector<pfm::Tracklet> tracklets = pfm::build_tracklets(seq, flows, params);
    const std::vector<pfm::DcsDescriptor> descs = pfm::dcs_descriptors(tracklets, kin, params);

    std::ofstream out(out_file);
    if (!out) throw std::runtime_error("cannot write '" + out_file + "'");
    for (std::size_t i = 0; i < tracklets.size(); ++i) {
        out << tracklets[i].start_frame << ' ' << tracklets[i].scale_level;
        char buf[32];
        for (const pfm::Point& p : tracklets[i].points) {
            std::snprintf(buf, sizeof(buf), " %.9g %.9g", p.x, p.y);
            out << buf;
        }
        for (float v : descs[i].full) {
            std::snprintf(buf, sizeof(buf), " %.9g", double(v));
            out << buf;
        }
        out << '\n';
    }
    std::cout << "wrote " << tracklets.size() << " tracklets to " << out_file << "\n";
    return 0;
}

int cmd_train(const std::string& config_file, const std::string& model_file) {
    const pfm::ExperimentConfig config = pfm::load_config(config_file);
    const pfm::ModelBundle bundle = pfm::train_models(config);
    pfm::save_model(bundle, model_file);
    std::cout << "model written to " << model_file << " (" << bundle.ova.labels.size()
              << " subjects, feature dim " << bundle.ova.dim << ")\n";
    return 0;
}

int cmd_eval(const std::string& config_file, const std::string& model_file,
             const std::string& csv_file) {
    const pfm::ExperimentConfig config = pfm::load_config(config_file);
    pfm::MetricsReport report;
    if (model_file.empty()) {
        report = pfm::run_experiment(config);
    } else {
        report = pfm::evaluate_with_bundle(config, pfm::load_model(model_file));
    }
    std::cout << pfm::format_report(report);
    if (!csv_file.empty()) {
        std::ofstream out(csv_file);
        if (!out) throw std::runtime_error("cannot write '" + csv_file + "'");
        out << pfm::report_csv(report);
        std::cout << "per-sequence CSV written to " << csv_file << "\n";
    }
    return 0;
}

int cmd_inspect(const std::string& model_file) {
    const pfm::ModelBundle b = pfm::load_model(model_file);
    std::cout << "model: " << model_file << "\n";
    std::cout << "  gmm: K=" << b.gmm.K << " D=" << b.gmm.D << "\n";
    if (b.pca_low.has_value()) {
        std::cout << "  pca_low: " << b.pca_low->input_dim << " -> " << b.pca_low->output_dim << " ("
                  << b.pca_low->blocks.size() << " blocks)\n";
    }
    if (b.pca_high.has_value()) {
        std::cout << "  pca_high: " << b.pca_high->input_dim << " -> " << b.pca_high->output_dim
                  << "\n";
    }
    if (!b.bow_centers.empty()) std::cout << "  bow codebook: K=" << b.bow_k << "\n";
    std::cout << "  classifier: " << b.ova.labels.size() << " classes, dim " << b.ova.dim
              << ", C=" << b.ova.reg_c << "\n  labels:";
    for (const auto& l : b.ova.labels) std::cout << ' ' << l;
    std::cout << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pyramidal Fisher Motion gait identification"};
    app.require_subcommand(1);

    auto* synth = app.add_subcommand("synth", "generate a synthetic walker dataset");
    std::string out_dir;
    int subjects = 4, cameras = 2, trajectories = 3, frames = 48, width = 128, height = 96;
    std::uint64_t seed = 0;
    synth->add_option("--out", out_dir, "output dataset root")->required();
    synth->add_option("--subjects", subjects);
    synth->add_option("--cameras", cameras);
    synth->add_option("--trajectories", trajectories);
    synth->add_option("--frames", frames);
    synth->add_option("--seed", seed);
    synth->add_option("--width", width);
    synth->add_option("--height", height);

    auto* extract = app.add_subcommand("extract", "dump tracklets and descriptors for one sequence");
    std::string seq_dir, camera, out_file;
    extract->add_option("--seq", seq_dir, "sequence directory")->required();
    extract->add_option("--camera", camera, "camera id")->required();
    extract->add_option("--out", out_file, "output text file")->required();

    auto* train = app.add_subcommand("train", "fit models on the config's training split");
    std::string config_file, model_file;
    train->add_option("--config", config_file)->required();
    train->add_option("--model", model_file, "output model file")->required();

    auto* eval = app.add_subcommand("eval", "run the experiment described by a config");
    std::string eval_config, eval_model, csv_file;
    eval->add_option("--config", eval_config)->required();
    eval->add_option("--model", eval_model, "evaluate a saved model instead of retraining");
    eval->add_option("--csv", csv_file, "write per-sequence predictions CSV");

    auto* inspect = app.add_subcommand("inspect-model", "print a model file summary");
    std::string inspect_model;
    inspect->add_option("--model", inspect_model)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) {
            return cmd_synth(out_dir, subjects, cameras, trajectories, frames, seed, width, height);
        }
        if (extract->parsed()) return cmd_extract(seq_dir, camera, out_file);
        if (train->parsed()) return cmd_train(config_file, model_file);
        if (eval->parsed()) return cmd_eval(eval_config, eval_model, csv_file);
        if (inspect->parsed()) return cmd_inspect(inspect_model);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
