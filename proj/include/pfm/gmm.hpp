#pragma once

#include <cstdint>
#include <vector>

namespace pfm {

// Diagonal-covariance Gaussian mixture; the Fisher-vector dictionary.
struct GmmModel {
    int K = 0;
    int D = 0;
    std::vector<double> weights;    // K, positive, sums to 1
    std::vector<double> means;      // K*D row-major
    std::vector<double> variances;  // K*D, floored above 0
};

struct GmmFitOptions {
    int kmeans_iters = 10;
    int max_iters = 100;
    double tol = 1e-5;             // relative mean log-likelihood gain
    double var_floor_frac = 1e-4;  // of the per-dimension data variance
};

// Lloyd k-means with farthest-point seeding. Returns k*D centers.
std::vector<double> kmeans(const std::vector<std::vector<double>>& data, int k, std::uint64_t seed,
                           int iters = 10);

// EM from a k-means start. Throws when fewer than 10*k descriptors are given
// or the data is degenerate. The mean log-likelihood after each E-step is
// appended to ll_trace when provided (a non-decreasing sequence).
GmmModel fit_gmm(const std::vector<std::vector<double>>& data, int k, std::uint64_t seed,
                 const GmmFitOptions& opts = {}, std::vector<double>* ll_trace = nullptr);

// Posterior responsibilities gamma[k] for one descriptor; returns log p(x).
double gmm_posteriors(const GmmModel& m, const double* x, double* gamma);

double gmm_mean_log_likelihood(const GmmModel& m, const std::vector<std::vector<double>>& data);

}  // namespace pfm
