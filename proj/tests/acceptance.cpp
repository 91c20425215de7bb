// Acceptance suite: runs every criterion at its stated tolerance and prints
// one pass/fail line per criterion. Exits nonzero if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "pfm/classify.hpp"
#include "pfm/config.hpp"
#include "pfm/encode.hpp"
#include "pfm/experiment.hpp"
#include "pfm/flow.hpp"
#include "pfm/model_io.hpp"
#include "pfm/synth.hpp"
#include "pfm/util.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
using namespace pfm;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

struct Check {
    int id;
    std::string name;
    double budget_seconds;
    std::function<Outcome()> fn;
};

void expect(Outcome& o, bool cond, const std::string& what) {
    if (!cond) {
        o.pass = false;
        if (!o.detail.empty()) o.detail += "; ";
        o.detail += what;
    }
}

GmmModel random_gmm(std::uint64_t seed, int k, int d) {
    Rng rng(seed);
    GmmModel m;
    m.K = k;
    m.D = d;
    double wsum = 0.0;
    for (int i = 0; i < k; ++i) {
        m.weights.push_back(rng.uniform(0.2, 1.0));
        wsum += m.weights.back();
    }
    for (double& w : m.weights) w /= wsum;
    for (int i = 0; i < k * d; ++i) {
        m.means.push_back(rng.uniform(-2.0, 2.0));
        m.variances.push_back(rng.uniform(0.3, 2.0));
    }
    return m;
}

std::vector<std::vector<double>> random_rows(std::uint64_t seed, int n, int d) {
    Rng rng(seed);
    std::vector<std::vector<double>> rows{std::size_t(n)};
    for (auto& r : rows) {
        for (int j = 0; j < d; ++j) r.push_back(rng.normal());
    }
    return rows;
}

PersonTrack unit_track(int frames) {
    PersonTrack tr;
    tr.track_id = "t0";
    for (int t = 0; t < frames; ++t) {
        BoundingBox b;
        b.cx = 50;
        b.cy = 50;
        b.w = 40;
        b.h = 80;
        b.score = 1.0;
        b.kind = BoxKind::Fused;
        b.frame = t;
        tr.boxes.push_back(b);
    }
    return tr;
}

// ---- criterion 1: dimensionality ------------------------------------------

Outcome criterion_dimensionality() {
    Outcome o;
    const GmmModel gmm = random_gmm(1, 100, 318);
    const auto descs = random_rows(2, 4, 318);
    const std::vector<double> fv = fisher_vector(descs, gmm);
    expect(o, fv.size() == 63600, "FV length " + std::to_string(fv.size()) + " != 63600");

    std::vector<LocalFeature> feats;
    Rng rng(3);
    for (int i = 0; i < 8; ++i) {
        std::vector<double> d(318);
        for (double& v : d) v = rng.normal();
        feats.push_back({d, rng.uniform(35, 65), rng.uniform(15, 85), int(rng.index(10))});
    }
    PyramidConfig pyr;
    pyr.levels = {{2, 1}};
    const PfmDescriptor pfm = pfm_encode(feats, unit_track(10), gmm, nullptr, pyr, 0, 10);
    expect(o, pfm.vector.size() == 2 * 63600,
           "PFM length " + std::to_string(pfm.vector.size()) + " != 127200");
    return o;
}

// ---- criterion 2: FV gradient fidelity -------------------------------------

Outcome criterion_fv_gradients() {
    Outcome o;
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        Rng rng(seed);
        const int k = 1 + int(rng.index(3));
        const int d = 1 + int(rng.index(4));
        const int t = 1 + int(rng.index(10));
        const GmmModel m = random_gmm(seed * 31 + 1, k, d);
        const auto descs = random_rows(seed * 17 + 2, t, d);
        const std::vector<double> raw = fisher_vector_raw(descs, m);
        for (int kk = 0; kk < k; ++kk) {
            for (int dd = 0; dd < d; ++dd) {
                const std::size_t idx = std::size_t(kk) * d + dd;
                GmmModel plus = m, minus = m;
                const double hm = 1e-5 * (1.0 + std::abs(m.means[idx]));
                plus.means[idx] += hm;
                minus.means[idx] -= hm;
                const double grad_mu = (gmm_mean_log_likelihood(plus, descs) -
                                        gmm_mean_log_likelihood(minus, descs)) /
                                       (2.0 * hm);
                const double sigma = std::sqrt(m.variances[idx]);
                const double want_mu = grad_mu * sigma / std::sqrt(m.weights[std::size_t(kk)]);
                worst = std::max(worst, std::abs(raw[idx] - want_mu) / (1.0 + std::abs(want_mu)));

                const double hs = 1e-5 * sigma;
                GmmModel ps = m, ms = m;
                ps.variances[idx] = (sigma + hs) * (sigma + hs);
                ms.variances[idx] = (sigma - hs) * (sigma - hs);
                const double grad_s = (gmm_mean_log_likelihood(ps, descs) -
                                       gmm_mean_log_likelihood(ms, descs)) /
                                      (2.0 * hs);
                const double want_s = grad_s * sigma / std::sqrt(2.0 * m.weights[std::size_t(kk)]);
                const std::size_t vidx = std::size_t(k) * d + idx;
                worst = std::max(worst, std::abs(raw[vidx] - want_s) / (1.0 + std::abs(want_s)));
            }
        }
    }
    std::ostringstream ss;
    ss << "max relative error " << worst;
    o.detail = ss.str();
    expect(o, worst < 1e-4, "gradient mismatch above 1e-4");
    return o;
}

// ---- criterion 3: EM ---------------------------------------------------------

Outcome criterion_em() {
    Outcome o;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto data = random_rows(500 + seed, 200, 3);
        std::vector<double> trace;
        fit_gmm(data, 4, seed, {}, &trace);
        for (std::size_t i = 1; i < trace.size(); ++i) {
            expect(o, trace[i] >= trace[i - 1] - 1e-9,
                   "log-likelihood decreased at seed " + std::to_string(seed));
        }
    }
    Rng rng(99);
    std::vector<std::vector<double>> data;
    for (int i = 0; i < 1000; ++i) data.push_back({rng.normal(-5.0, 1.0)});
    for (int i = 0; i < 1000; ++i) data.push_back({rng.normal(5.0, 1.0)});
    const GmmModel m = fit_gmm(data, 2, 1);
    const double lo = std::min(m.means[0], m.means[1]);
    const double hi = std::max(m.means[0], m.means[1]);
    expect(o, std::abs(lo + 5.0) <= 0.1, "low mean off by " + std::to_string(lo + 5.0));
    expect(o, std::abs(hi - 5.0) <= 0.1, "high mean off by " + std::to_string(hi - 5.0));
    return o;
}

// ---- criterion 4: kinematics -----------------------------------------------

Outcome criterion_kinematics() {
    Outcome o;
    const int w = 48, h = 36;
    const FlowField lin = pfm_test::analytic_flow(
        w, h, [](int x, int y) { return 0.1 * x - 0.05 * y; },
        [](int x, int y) { return 0.02 * x + 0.07 * y; });
    const KinematicMaps m = kinematic_maps(lin);
    for (int y = 1; y < h - 1; ++y) {
        for (int x = 1; x < w - 1; ++x) {
            const std::size_t i = std::size_t(y) * w + x;
            expect(o, std::abs(m.div[i] - 0.17) <= 1e-6, "div not exact on a linear field");
            expect(o, std::abs(m.curl[i] - 0.07) <= 1e-6, "curl not exact on a linear field");
            expect(o, std::abs(m.hyp1[i] - 0.03) <= 1e-6, "hyp1 not exact");
            expect(o, std::abs(m.hyp2[i] - (-0.03)) <= 1e-6, "hyp2 not exact");
            expect(o, std::abs(m.shear[i] - std::hypot(0.03, -0.03)) <= 1e-6, "shear not exact");
        }
    }

    // random smooth flow vs an independent stencil recomputation
    const auto tu = pfm_test::smooth_texture(w, h, 41);
    const auto tv = pfm_test::smooth_texture(w, h, 42);
    FlowField f;
    f.width = w;
    f.height = h;
    f.u.assign(tu.begin(), tu.end());
    f.v.assign(tv.begin(), tv.end());
    const KinematicMaps km = kinematic_maps(f);
    auto gx = [&](const std::vector<float>& p, int x, int y) {
        if (x == 0) return double(p[std::size_t(y) * w + 1]) - double(p[std::size_t(y) * w]);
        if (x == w - 1) return double(p[std::size_t(y) * w + x]) - double(p[std::size_t(y) * w + x - 1]);
        return 0.5 * (double(p[std::size_t(y) * w + x + 1]) - double(p[std::size_t(y) * w + x - 1]));
    };
    auto gy = [&](const std::vector<float>& p, int x, int y) {
        if (y == 0) return double(p[std::size_t(w) + x]) - double(p[std::size_t(x)]);
        if (y == h - 1) return double(p[std::size_t(y) * w + x]) - double(p[std::size_t(y - 1) * w + x]);
        return 0.5 * (double(p[std::size_t(y + 1) * w + x]) - double(p[std::size_t(y - 1) * w + x]));
    };
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t i = std::size_t(y) * w + x;
            const double ux = gx(f.u, x, y), uy = gy(f.u, x, y);
            const double vx = gx(f.v, x, y), vy = gy(f.v, x, y);
            expect(o, std::abs(km.div[i] - (ux + vy)) <= 1e-10 + 1e-6 * std::abs(ux + vy),
                   "div oracle mismatch");
            expect(o, std::abs(km.curl[i] - (-uy + vx)) <= 1e-10 + 1e-6 * std::abs(-uy + vx),
                   "curl oracle mismatch");
            const double sh = std::hypot(ux - vy, uy + vx);
            expect(o, std::abs(km.shear[i] - sh) <= 1e-10 + 1e-6 * sh, "shear oracle mismatch");
        }
    }
    return o;
}

// ---- criterion 5: flow -------------------------------------------------------

Outcome criterion_flow() {
    Outcome o;
    const int cw = 320, ch = 280, w = 240, h = 200;
    const auto canvas = pfm_test::smooth_texture(cw, ch, 7);
    const int shifts[3][2] = {{3, 0}, {-2, 1}, {2, -2}};
    double worst_mae = 0.0;
    for (const auto& s : shifts) {
        const Frame a = pfm_test::window_frame(canvas, cw, w, h, 30, 30);
        const Frame b = pfm_test::window_frame(canvas, cw, w, h, 30 - s[0], 30 - s[1]);
        const FlowField f = estimate_flow(a, b);
        double mae = 0.0;
        int n = 0;
        for (int y = 32; y < h - 32; ++y) {
            for (int x = 32; x < w - 32; ++x) {
                mae += std::abs(f.u_at(x, y) - s[0]) + std::abs(f.v_at(x, y) - s[1]);
                n += 2;
            }
        }
        mae /= n;
        worst_mae = std::max(worst_mae, mae);
    }
    std::ostringstream ss;
    ss << "worst interior MAE " << worst_mae << " px";
    o.detail = ss.str();
    expect(o, worst_mae <= 0.25, "translation error above 0.25 px");
    return o;
}

// ---- criterion 6: detection fusion ------------------------------------------

Outcome criterion_fusion() {
    Outcome o;
    Rng rng(17);
    // round-trip identity on single pairs
    for (int i = 0; i < 50; ++i) {
        BoundingBox fb, ub;
        fb.cx = rng.uniform(20, 200);
        fb.cy = rng.uniform(40, 300);
        fb.w = rng.uniform(20, 80);
        fb.h = rng.uniform(60, 200);
        ub.cx = rng.uniform(20, 200);
        ub.cy = rng.uniform(20, 200);
        ub.w = rng.uniform(10, 60);
        ub.h = rng.uniform(10, 60);
        ub.kind = BoxKind::UpperBody;
        const TransformParams p = fit_transform_params({{fb, ub}});
        const BoundingBox back = ub_to_fb(ub, p);
        expect(o,
               std::abs(back.cx - fb.cx) <= 1e-9 && std::abs(back.cy - fb.cy) <= 1e-9 &&
                   std::abs(back.w - fb.w) <= 1e-9 && std::abs(back.h - fb.h) <= 1e-9,
               "UB->FB round trip not exact");
    }

    // fused score is S_f * S_u * IoU to 1e-12
    for (int i = 0; i < 50; ++i) {
        BoundingBox fb;
        fb.cx = rng.uniform(60, 120);
        fb.cy = rng.uniform(80, 140);
        fb.w = rng.uniform(30, 50);
        fb.h = rng.uniform(80, 120);
        fb.score = rng.uniform(0.2, 1.0);
        BoundingBox ub;  // transformed by identity params into an overlapping box
        ub.cx = fb.cx + rng.uniform(-5, 5);
        ub.cy = fb.cy + rng.uniform(-5, 5);
        ub.w = fb.w * rng.uniform(0.8, 1.2);
        ub.h = fb.h * rng.uniform(0.8, 1.2);
        ub.score = rng.uniform(0.2, 1.0);
        ub.kind = BoxKind::UpperBody;
        const double ov = iou(fb, ub);
        if (ov <= 0.5) continue;
        const auto out = combine_detections({fb}, {ub}, {0, 0, 1, 1}, 0.5);
        bool found = false;
        for (const BoundingBox& b : out) {
            if (b.kind == BoxKind::Fused) {
                found = true;
                expect(o, std::abs(b.score - fb.score * ub.score * ov) <= 1e-12,
                       "fused score not S_f*S_u*IoU");
            }
        }
        expect(o, found, "expected a fused box");
    }

    // NMS vs brute force on 100 random frames
    for (int frame = 0; frame < 100; ++frame) {
        std::vector<BoundingBox> boxes;
        for (int i = 0; i < 12; ++i) {
            BoundingBox b;
            b.cx = rng.uniform(20, 120);
            b.cy = rng.uniform(20, 120);
            b.w = rng.uniform(10, 60);
            b.h = rng.uniform(10, 60);
            b.score = rng.uniform();
            boxes.push_back(b);
        }
        const double iou_max = 0.4;
        const auto kept = nms(boxes, iou_max);
        std::vector<BoundingBox> sorted = boxes;
        std::stable_sort(sorted.begin(), sorted.end(),
                         [](const BoundingBox& a, const BoundingBox& b) { return a.score > b.score; });
        std::vector<BoundingBox> expect_kept;
        for (const BoundingBox& b : sorted) {
            bool ok = true;
            for (const BoundingBox& k : expect_kept) ok = ok && iou(b, k) <= iou_max;
            if (ok) expect_kept.push_back(b);
        }
        expect(o, kept.size() == expect_kept.size(), "NMS differs from the brute-force oracle");
        for (std::size_t i = 0; i < std::min(kept.size(), expect_kept.size()); ++i) {
            expect(o, kept[i].score == expect_kept[i].score && kept[i].cx == expect_kept[i].cx,
                   "NMS kept a different box than the oracle");
        }
    }
    return o;
}

// ---- criterion 7: encoding invariants ---------------------------------------

Outcome criterion_encoding_invariants() {
    Outcome o;
    const GmmModel m = random_gmm(23, 5, 6);
    const auto data = random_rows(24, 200, 6);
    std::vector<double> gamma(5);
    for (const auto& x : data) {
        gmm_posteriors(m, x.data(), gamma.data());
        const double s = std::accumulate(gamma.begin(), gamma.end(), 0.0);
        expect(o, std::abs(s - 1.0) <= 1e-9, "posteriors do not sum to 1");
    }

    // PFM cell norms
    Rng rng(25);
    std::vector<LocalFeature> feats;
    for (int i = 0; i < 30; ++i) {
        std::vector<double> d(6);
        for (double& v : d) v = rng.normal();
        feats.push_back({d, rng.uniform(32, 68), rng.uniform(12, 88), int(rng.index(20))});
    }
    PyramidConfig pyr;
    pyr.levels = {{1, 1}, {2, 1}};
    pyr.temporal_cells = 2;
    const PfmDescriptor pfm = pfm_encode(feats, unit_track(20), m, nullptr, pyr, 0, 20);
    for (const PfmCell& cell : pfm.layout) {
        double norm = 0.0;
        for (std::size_t i = 0; i < cell.length; ++i) {
            norm += pfm.vector[cell.offset + i] * pfm.vector[cell.offset + i];
        }
        norm = std::sqrt(norm);
        expect(o, norm == 0.0 || std::abs(norm - 1.0) <= 1e-9, "cell block norm not 1 or 0");
    }

    // FV order invariance under 20 permutations
    auto descs = random_rows(26, 50, 6);
    const std::vector<double> base = fisher_vector(descs, m);
    for (int p = 0; p < 20; ++p) {
        rng.shuffle(descs);
        const std::vector<double> fv = fisher_vector(descs, m);
        for (std::size_t i = 0; i < fv.size(); ++i) {
            expect(o, std::abs(fv[i] - base[i]) <= 1e-12, "FV depends on descriptor order");
        }
    }
    return o;
}

// ---- criterion 8: classifier -------------------------------------------------

Outcome criterion_classifier() {
    Outcome o;
    Rng rng(31);
    // 20 classes x 10 samples, linearly separable blobs on a circle
    std::vector<std::vector<double>> x;
    std::vector<std::string> labels;
    for (int cl = 0; cl < 20; ++cl) {
        const double ang = 2.0 * 3.14159265358979323846 * cl / 20.0;
        for (int i = 0; i < 10; ++i) {
            x.push_back({10.0 * std::cos(ang) + 0.3 * rng.normal(),
                         10.0 * std::sin(ang) + 0.3 * rng.normal()});
            char buf[8];
            std::snprintf(buf, sizeof(buf), "p%02d", cl);
            labels.push_back(buf);
        }
    }
    const OvaModel model = train_ova(x, labels, 10.0, 0);
    int correct = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        correct += predict(model, x[i]).label == labels[i] ? 1 : 0;
    }
    std::ostringstream ss;
    ss << "training accuracy " << correct << "/" << x.size();
    o.detail = ss.str();
    expect(o, correct == int(x.size()), "training accuracy below 100%");

    // argmax invariance under positive scaling for zero-bias models
    OvaModel zb;
    zb.labels = {"a", "b", "c"};
    zb.dim = 4;
    for (int i = 0; i < 12; ++i) zb.weights.push_back(rng.normal());
    zb.biases = {0.0, 0.0, 0.0};
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> v(4), scaled(4);
        const double c = rng.uniform(0.01, 100.0);
        for (int j = 0; j < 4; ++j) {
            v[std::size_t(j)] = rng.normal();
            scaled[std::size_t(j)] = c * v[std::size_t(j)];
        }
        expect(o, predict(zb, v).label == predict(zb, scaled).label,
               "positive scaling changed the argmax");
    }
    return o;
}

// ---- criteria 9 & 11: end-to-end experiment + determinism --------------------

struct E2EState {
    fs::path root;
    MetricsReport report;
    std::string csv;
    bool ready = false;
};

E2EState g_e2e;

ExperimentConfig e2e_config(const fs::path& root, int threads) {
    ExperimentConfig c;
    c.dataset_root = root;
    c.rotate = true;
    c.k = 24;
    c.use_pcal = true;
    c.pcal = PcaTarget::fraction(0.4);
    c.pcah_dims = 64;
    c.pyramid.levels = {{2, 1}};
    c.svm_c = 1.0;
    c.seed = 11;
    c.threads = threads;
    c.gmm_max_samples = 20000;
    return c;
}

Outcome criterion_end_to_end() {
    Outcome o;
    g_e2e.root = fs::temp_directory_path() / "pfm_acceptance_e2e";
    fs::remove_all(g_e2e.root);
    SynthParams sp;
    sp.subjects = 10;
    sp.cameras = 4;
    sp.trajectories = 3;
    sp.frames = 48;
    sp.seed = 1;
    synth_generate(sp, g_e2e.root);

    const MetricsReport r = run_experiment(e2e_config(g_e2e.root, 0));
    g_e2e.report = r;
    g_e2e.csv = report_csv(r);
    g_e2e.ready = true;

    double cam_sum = 0.0;
    for (const auto& [cam, acc] : r.per_camera_accuracy) cam_sum += acc;
    const double cam_avg = cam_sum / double(r.per_camera_accuracy.size());

    std::ostringstream ss;
    ss << "multiview " << r.multiview_accuracy << "%, per-camera avg " << cam_avg << "%";
    o.detail = ss.str();
    expect(o, r.multiview_accuracy >= 90.0, "multiview accuracy below 90%");
    expect(o, r.multiview_accuracy >= cam_avg - 5.0, "multiview more than 5 points below per-camera");
    return o;
}

Outcome criterion_determinism() {
    Outcome o;
    expect(o, g_e2e.ready, "end-to-end run unavailable");
    if (!g_e2e.ready) return o;
    const MetricsReport r = run_experiment(e2e_config(g_e2e.root, 1));
    expect(o, report_csv(r) == g_e2e.csv, "per-sequence predictions differ across thread counts");
    expect(o, r.multiview_accuracy == g_e2e.report.multiview_accuracy, "multiview accuracy differs");
    expect(o, format_report(r, false) == format_report(g_e2e.report, false),
           "reports differ (accuracies or confusion)");
    return o;
}

// ---- criterion 10: persistence ----------------------------------------------

Outcome criterion_persistence() {
    Outcome o;
    Rng rng(55);
    ModelBundle b;
    b.gmm = random_gmm(56, 4, 7);
    PcaModel pl;
    pl.scope = PcaScope::LowLevel;
    pl.input_dim = 7;
    pl.output_dim = 3;
    pl.blocks = {{7, 3}};
    for (int i = 0; i < 7; ++i) pl.mean.push_back(rng.normal() * 1e6);
    for (int i = 0; i < 21; ++i) pl.basis.push_back(rng.normal());
    b.pca_low = pl;
    PcaModel ph = pl;
    ph.scope = PcaScope::HighLevel;
    b.pca_high = ph;
    b.ova.labels = {"s00", "s01", "s02"};
    b.ova.dim = 5;
    for (int i = 0; i < 15; ++i) b.ova.weights.push_back(rng.normal() / 1e5);
    for (int i = 0; i < 3; ++i) b.ova.biases.push_back(rng.normal());
    b.ova.reg_c = 2.5;
    b.config_echo = "k = 4\nseed = 2\n";

    const fs::path dir = fs::temp_directory_path() / "pfm_acceptance_model";
    fs::create_directories(dir);
    save_model(b, dir / "m.pfm");
    const ModelBundle r = load_model(dir / "m.pfm");
    expect(o,
           r.gmm.weights == b.gmm.weights && r.gmm.means == b.gmm.means &&
               r.gmm.variances == b.gmm.variances,
           "GMM round trip not bit-exact");
    expect(o, r.pca_low->basis == b.pca_low->basis && r.pca_low->mean == b.pca_low->mean,
           "PCA round trip not bit-exact");
    expect(o, r.ova.weights == b.ova.weights && r.ova.biases == b.ova.biases,
           "classifier round trip not bit-exact");
    expect(o, r.config_echo == b.config_echo, "config echo round trip failed");

    const std::string text = serialize_model(b);
    bool threw = false;
    try {
        std::string bad = text;
        bad[3] = '9';
        deserialize_model(bad);
    } catch (const std::exception&) {
        threw = true;
    }
    expect(o, threw, "bad magic accepted");
    threw = false;
    try {
        deserialize_model(text.substr(0, text.size() * 2 / 3));
    } catch (const std::exception&) {
        threw = true;
    }
    expect(o, threw, "truncated file accepted");
    threw = false;
    try {
        std::string bad = text;
        const auto pos = bad.find("ova");
        bad[pos + 1] = 'x';
        deserialize_model(bad);
    } catch (const std::exception&) {
        threw = true;
    }
    expect(o, threw, "corrupted payload accepted");
    return o;
}

}  // namespace

int main() {
    std::vector<Check> checks{
        {1, "dimensionality: FV is 2KD (63600) and PFM concatenates cells", 1.0, criterion_dimensionality},
        {2, "FV gradient fidelity vs finite differences (< 1e-4)", 10.0, criterion_fv_gradients},
        {3, "EM monotone log-likelihood and 1-D recovery (+-0.1)", 30.0, criterion_em},
        {4, "kinematics exact on affine flows, stencil oracle (1e-10)", 5.0, criterion_kinematics},
        {5, "flow recovers integer translations (MAE <= 0.25 px)", 30.0, criterion_flow},
        {6, "detection fusion round trip, scores, NMS oracle", 10.0, criterion_fusion},
        {7, "encoding invariants: posteriors, cell norms, order", 10.0, criterion_encoding_invariants},
        {8, "classifier: separable accuracy and scaling invariance", 30.0, criterion_classifier},
        {9, "end-to-end synthetic multiview experiment (>= 90%)", 300.0, criterion_end_to_end},
        {10, "model persistence round trip and corruption guards", 5.0, criterion_persistence},
        {11, "determinism across runs and thread counts", 600.0, criterion_determinism},
    };

    int failures = 0;
    for (const Check& c : checks) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.fn();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (sec > c.budget_seconds) {
            o.pass = false;
            o.detail += (o.detail.empty() ? "" : "; ") + std::string("over time budget");
        }
        std::printf("[%s] criterion %2d: %s (%.2fs)%s%s\n", o.pass ? "PASS" : "FAIL", c.id,
                    c.name.c_str(), sec, o.detail.empty() ? "" : " -- ", o.detail.c_str());
        std::fflush(stdout);
        failures += o.pass ? 0 : 1;
    }
    if (failures > 0) {
        std::printf("%d criterion(s) failed\n", failures);
        return 1;
    }
    std::printf("all %zu criteria passed\n", checks.size());
    return 0;
}
