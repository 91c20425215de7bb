#include "pfm/encode.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

namespace pfm {
namespace {

void check_descriptors(const std::vector<std::vector<double>>& descriptors, int dim,
                       const char* where) {
    if (descriptors.empty()) throw std::runtime_error(std::string(where) + ": empty descriptor set");
    for (const auto& x : descriptors) {
        if (int(x.size()) != dim) {
            throw std::runtime_error(std::string(where) + ": descriptor dimension mismatch");
        }
    }
}

void signed_sqrt_l2(std::vector<double>& v) {
    double norm = 0.0;
    for (double& z : v) {
        z = z >= 0.0 ? std::sqrt(z) : -std::sqrt(-z);
        norm += z * z;
    }
    norm = std::sqrt(norm);
    if (norm > 0.0) {
        for (double& z : v) z /= norm;
    }
}

}  // namespace

std::vector<double> fisher_vector_raw(const std::vector<std::vector<double>>& descriptors,
                                      const GmmModel& gmm) {
    check_descriptors(descriptors, gmm.D, "fisher_vector");
    const int K = gmm.K, D = gmm.D;
    const std::size_t T = descriptors.size();

    std::vector<double> fv(std::size_t(2 * K) * D, 0.0);
    std::vector<double> gamma(std::size_t(K), 0.0);
    std::vector<double> inv_sigma(std::size_t(K) * D);
    for (int k = 0; k < K; ++k) {
        for (int d = 0; d < D; ++d) {
            inv_sigma[std::size_t(k) * D + d] = 1.0 / std::sqrt(gmm.variances[std::size_t(k) * D + d]);
        }
    }

    for (const auto& x : descriptors) {
        gmm_posteriors(gmm, x.data(), gamma.data());
        for (int k = 0; k < K; ++k) {
            const double g = gamma[std::size_t(k)];
            if (g < 1e-14) continue;
            const double* mu = gmm.means.data() + std::size_t(k) * D;
            const double* is = inv_sigma.data() + std::size_t(k) * D;
            double* fm = fv.data() + std::size_t(k) * D;
            double* fs = fv.data() + std::size_t(K + k) * D;
            for (int d = 0; d < D; ++d) {
                const double z = (x[std::size_t(d)] - mu[d]) * is[d];
                fm[d] += g * z;
                fs[d] += g * (z * z - 1.0);
            }
        }
    }

    for (int k = 0; k < K; ++k) {
        const double cm = 1.0 / (double(T) * std::sqrt(gmm.weights[std::size_t(k)]));
        const double cs = 1.0 / (double(T) * std::sqrt(2.0 * gmm.weights[std::size_t(k)]));
        double* fm = fv.data() + std::size_t(k) * D;
        double* fs = fv.data() + std::size_t(K + k) * D;
        for (int d = 0; d < D; ++d) {
            fm[d] *= cm;
            fs[d] *= cs;
        }
    }
    return fv;
}

std::vector<double> fisher_vector(const std::vector<std::vector<double>>& descriptors,
                                  const GmmModel& gmm) {
    std::vector<double> fv = fisher_vector_raw(descriptors, gmm);
    signed_sqrt_l2(fv);
    return fv;
}

std::vector<double> bow_encode(const std::vector<std::vector<double>>& descriptors,
                               const std::vector<double>& centers, int k) {
    if (k < 1 || centers.size() % std::size_t(k) != 0) {
        throw std::runtime_error("bow_encode: malformed codebook");
    }
    const int d = int(centers.size() / std::size_t(k));
    std::vector<double> hist(std::size_t(k), 0.0);
    if (descriptors.empty()) return hist;
    check_descriptors(descriptors, d, "bow_encode");

    for (const auto& x : descriptors) {
        int best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (int c = 0; c < k; ++c) {
            const double* ctr = centers.data() + std::size_t(c) * d;
            double dist = 0.0;
            for (int j = 0; j < d; ++j) {
                const double diff = x[std::size_t(j)] - ctr[j];
                dist += diff * diff;
            }
            if (dist < best_d) {
                best_d = dist;
                best = c;
            }
        }
        hist[std::size_t(best)] += 1.0;
    }
    for (double& v : hist) v /= double(descriptors.size());
    return hist;
}

namespace {

// Cell indices for every feature, flattened per pyramid level.
struct CellAssignment {
    std::vector<std::vector<std::vector<std::size_t>>> per_level;  // level -> cell -> feature idx
};

CellAssignment assign_cells(const std::vector<LocalFeature>& features, const PersonTrack& track,
                            const PyramidConfig& pyramid, int t_begin, int t_end) {
    if (features.empty()) throw std::runtime_error("pfm_encode: no tracklets to encode");
    if (pyramid.levels.empty()) throw std::runtime_error("pfm_encode: pyramid needs at least one level");
    if (track.boxes.empty()) throw std::runtime_error("pfm_encode: person track has no boxes");
    const int tc = std::max(1, pyramid.temporal_cells);
    const double span = std::max(1, t_end - t_begin);

    CellAssignment out;
    out.per_level.resize(pyramid.levels.size());
    for (std::size_t l = 0; l < pyramid.levels.size(); ++l) {
        const PyramidLevel& lv = pyramid.levels[l];
        out.per_level[l].resize(std::size_t(lv.rows) * std::size_t(lv.cols) * std::size_t(tc));
    }

    for (std::size_t f = 0; f < features.size(); ++f) {
        const LocalFeature& ft = features[f];
        const BoundingBox* box = track.box_at(ft.mid_frame);
        if (box == nullptr) box = &track.nearest_box(ft.mid_frame);
        const double rx = (ft.anchor_x - box->left()) / std::max(box->w, 1e-9);
        const double ry = (ft.anchor_y - box->top()) / std::max(box->h, 1e-9);
        const int tcell = std::clamp(int(double(tc) * (ft.mid_frame - t_begin) / span), 0, tc - 1);
        for (std::size_t l = 0; l < pyramid.levels.size(); ++l) {
            const PyramidLevel& lv = pyramid.levels[l];
            const int row = std::clamp(int(std::floor(lv.rows * ry)), 0, lv.rows - 1);
            const int col = std::clamp(int(std::floor(lv.cols * rx)), 0, lv.cols - 1);
            const std::size_t cell =
                (std::size_t(row) * std::size_t(lv.cols) + std::size_t(col)) * std::size_t(tc) +
                std::size_t(tcell);
            out.per_level[l][cell].push_back(f);
        }
    }
    return out;
}

PfmDescriptor encode_cells(const std::vector<LocalFeature>& features, const PersonTrack& track,
                           const PcaModel* pca_low, const PyramidConfig& pyramid, int t_begin,
                           int t_end, std::size_t block_len,
                           const std::function<std::vector<double>(const std::vector<std::vector<double>>&)>& cell_encoder) {
    const CellAssignment cells = assign_cells(features, track, pyramid, t_begin, t_end);

    std::vector<std::vector<double>> reduced(features.size());
    for (std::size_t f = 0; f < features.size(); ++f) {
        reduced[f] = pca_low != nullptr ? apply_pca(*pca_low, features[f].descriptor)
                                        : features[f].descriptor;
    }

    const int tc = std::max(1, pyramid.temporal_cells);
    PfmDescriptor out;
    std::size_t total = 0;
    for (const auto& level : cells.per_level) total += level.size() * block_len;
    out.vector.assign(total, 0.0);

    std::size_t offset = 0;
    for (std::size_t l = 0; l < cells.per_level.size(); ++l) {
        const PyramidLevel& lv = pyramid.levels[l];
        for (int row = 0; row < lv.rows; ++row) {
            for (int col = 0; col < lv.cols; ++col) {
                for (int t = 0; t < tc; ++t) {
                    const std::size_t cell =
                        (std::size_t(row) * std::size_t(lv.cols) + std::size_t(col)) * std::size_t(tc) +
                        std::size_t(t);
                    const auto& members = cells.per_level[l][cell];
                    if (!members.empty()) {
                        std::vector<std::vector<double>> descs;
                        descs.reserve(members.size());
                        for (std::size_t f : members) descs.push_back(reduced[f]);
                        const std::vector<double> block = cell_encoder(descs);
                        std::copy(block.begin(), block.end(), out.vector.begin() + std::ptrdiff_t(offset));
                    }
                    out.layout.push_back({int(l), row, col, t, offset, block_len});
                    offset += block_len;
                }
            }
        }
    }
    return out;
}

}  // namespace

PfmDescriptor pfm_encode(const std::vector<LocalFeature>& features, const PersonTrack& track,
                         const GmmModel& gmm, const PcaModel* pca_low, const PyramidConfig& pyramid,
                         int t_begin, int t_end) {
    const std::size_t block_len = std::size_t(2 * gmm.K) * std::size_t(gmm.D);
    return encode_cells(features, track, pca_low, pyramid, t_begin, t_end, block_len,
                        [&](const std::vector<std::vector<double>>& descs) {
                            return fisher_vector(descs, gmm);
                        });
}

PfmDescriptor pfm_encode_bow(const std::vector<LocalFeature>& features, const PersonTrack& track,
                             const std::vector<double>& centers, int k, const PcaModel* pca_low,
                             const PyramidConfig& pyramid, int t_begin, int t_end) {
    return encode_cells(features, track, pca_low, pyramid, t_begin, t_end, std::size_t(k),
                        [&](const std::vector<std::vector<double>>& descs) {
                            return bow_encode(descs, centers, k);
                        });
}

}  // namespace pfm
