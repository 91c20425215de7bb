#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "pfm/classify.hpp"
#include "pfm/gmm.hpp"
#include "pfm/pca.hpp"

namespace pfm {

// Everything a trained identity model needs at evaluation time, persisted as
// one artifact.
struct ModelBundle {
    GmmModel gmm;
    std::optional<PcaModel> pca_low;
    std::optional<PcaModel> pca_high;
    OvaModel ova;
    std::vector<double> bow_centers;  // nonempty when the BOW encoder was used
    int bow_k = 0;
    std::string config_echo;
};

// Versioned text format: a `PFM1` magic line, named sections with explicit
// dimensions and full-precision reals, and a trailing checksum line.
// load(save(m)) reproduces every parameter bit-exactly.
void save_model(const ModelBundle& bundle, const std::filesystem::path& path);
ModelBundle load_model(const std::filesystem::path& path);

std::string serialize_model(const ModelBundle& bundle);
ModelBundle deserialize_model(const std::string& text);

}  // namespace pfm
