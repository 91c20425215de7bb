#pragma once

#include <string>
#include <vector>

#include "pfm/gmm.hpp"
#include "pfm/pca.hpp"
#include "pfm/persons.hpp"

namespace pfm {

// Unnormalized Fisher-vector statistics of a descriptor set under the GMM:
// per component the mean gradients (1/(T*sqrt(w_k))) * sum_t gamma*(x-mu)/sigma
// followed by the variance gradients (1/(T*sqrt(2*w_k))) * sum_t
// gamma*((x-mu)^2/var - 1). Layout: all K mean blocks, then all K variance
// blocks, D values each (2*K*D total).
std::vector<double> fisher_vector_raw(const std::vector<std::vector<double>>& descriptors,
                                      const GmmModel& gmm);

// Signed square root followed by L2 normalization of the raw statistics.
std::vector<double> fisher_vector(const std::vector<std::vector<double>>& descriptors,
                                  const GmmModel& gmm);

// Hard-assignment histogram over a k-means codebook, L1-normalized.
// An empty descriptor set yields the zero histogram.
std::vector<double> bow_encode(const std::vector<std::vector<double>>& descriptors,
                               const std::vector<double>& centers, int k);

struct PyramidLevel {
    int rows = 1;
    int cols = 1;
};

struct PyramidConfig {
    std::vector<PyramidLevel> levels{{2, 1}};
    int temporal_cells = 1;
    int subseq_len = 0;      // optional training-sample splitting, frames
    int subseq_overlap = 0;
};

struct PfmCell {
    int level = 0, row = 0, col = 0, tcell = 0;
    std::size_t offset = 0;
    std::size_t length = 0;
};

// Concatenation of the cell-level Fisher vectors over every pyramid level,
// in (level, row, col, time) order. Every nonzero cell block has unit L2
// norm; empty cells stay exactly zero.
struct PfmDescriptor {
    std::vector<double> vector;
    std::vector<PfmCell> layout;
    std::string subject_id;
    std::string camera_id;
};

// One filtered tracklet prepared for encoding: its (subtype-selected)
// descriptor plus the anchor and temporal midpoint used for cell assignment.
struct LocalFeature {
    std::vector<double> descriptor;
    double anchor_x = 0.0;
    double anchor_y = 0.0;
    int mid_frame = 0;
};

// Fisher-vector encoding over the spatial pyramid. Cell assignment uses the
// anchor's relative position inside the track's box at the feature's
// mid-frame (nearest box when that frame has none) and the mid-frame's
// position inside [t_begin, t_end) for the temporal cells. pca_low, when
// given, reduces each descriptor before encoding.
PfmDescriptor pfm_encode(const std::vector<LocalFeature>& features, const PersonTrack& track,
                         const GmmModel& gmm, const PcaModel* pca_low, const PyramidConfig& pyramid,
                         int t_begin, int t_end);

// Bag-of-words variant over the same pyramid; cell blocks are L1-normalized
// codebook histograms of length k.
PfmDescriptor pfm_encode_bow(const std::vector<LocalFeature>& features, const PersonTrack& track,
                             const std::vector<double>& centers, int k, const PcaModel* pca_low,
                             const PyramidConfig& pyramid, int t_begin, int t_end);

}  // namespace pfm
