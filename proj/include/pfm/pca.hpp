#pragma once

#include <utility>
#include <vector>

namespace pfm {

enum class PcaScope { LowLevel, HighLevel };

// Reduction target: an absolute output dimension or a per-block fraction.
struct PcaTarget {
    bool is_fraction = false;
    double value = 0.0;

    static PcaTarget dims(int d) { return {false, double(d)}; }
    static PcaTarget fraction(double f) { return {true, f}; }
};

// Centered orthonormal projection. Under a subtype split the basis is
// block-diagonal, so each output block depends only on its input block.
struct PcaModel {
    PcaScope scope = PcaScope::LowLevel;
    int input_dim = 0;
    int output_dim = 0;
    std::vector<double> mean;                   // input_dim
    std::vector<double> basis;                  // input_dim x output_dim, column-major
    std::vector<std::pair<int, int>> blocks;    // (input, output) dims per block
};

// Covariance eigendecomposition (Gram-matrix route when samples are fewer
// than dimensions). With subtype_split given, the target must be a fraction
// and each block keeps ceil(fraction * block_dim) dimensions. The
// largest-magnitude entry of every basis column is made positive. Throws
// when the target exceeds the achievable rank.
PcaModel fit_pca(const std::vector<std::vector<double>>& rows, PcaTarget target, PcaScope scope,
                 const std::vector<int>& subtype_split = {});

std::vector<double> apply_pca(const PcaModel& m, const std::vector<double>& v);

// mean + basis * z; exact inverse of apply_pca on in-subspace data.
std::vector<double> pca_reconstruct(const PcaModel& m, const std::vector<double>& z);

}  // namespace pfm
