#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace pfm {

// One-vs-all linear maximum-margin classifiers, one per subject.
struct OvaModel {
    std::vector<std::string> labels;  // P class labels, sorted ascending
    int dim = 0;
    std::vector<double> weights;      // P x dim, row-major
    std::vector<double> biases;       // P
    double reg_c = 1.0;
};

struct Prediction {
    std::string label;                 // argmax of scores, ties to the
    std::vector<std::string> classes;  // lexicographically smallest label
    std::vector<double> scores;        // per-class decision values
};

struct BinarySvm {
    std::vector<double> w;
    double b = 0.0;
};

// Minimizes 0.5*||w||^2 + C * sum_i max(0, 1 - y_i*(w.x_i + b)) via SMO on
// the dual (the bias stays unregularized). Deterministic for a fixed data
// order.
BinarySvm train_binary_svm(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                           double c, double tol = 1e-4, long max_iter = 2000000);

double svm_primal_objective(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                            double c, const std::vector<double>& w, double b);

// Requires at least two classes and consistent dimensions. The seed is kept
// for interface stability; training itself is deterministic.
OvaModel train_ova(const std::vector<std::vector<double>>& features,
                   const std::vector<std::string>& labels, double c, std::uint64_t seed);

Prediction predict(const OvaModel& model, const std::vector<double>& feature);

// Most frequent label; ties broken by the largest sum of winning-class
// decision values, then lexicographically. Throws on empty input.
std::string majority_vote(const std::vector<Prediction>& predictions);

}  // namespace pfm
