#include "pfm/pca.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace pfm {
namespace {

// Top-d orthonormal eigenvectors of the covariance of the centered block,
// columns in decreasing eigenvalue order.
Eigen::MatrixXd principal_basis(const Eigen::MatrixXd& centered, int d_out) {
    const Eigen::Index n = centered.rows();
    const Eigen::Index dim = centered.cols();
    Eigen::MatrixXd basis(dim, d_out);

    if (dim <= n) {
        const Eigen::MatrixXd cov = centered.transpose() * centered / double(std::max<Eigen::Index>(n - 1, 1));
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
        if (es.info() != Eigen::Success) throw std::runtime_error("fit_pca: eigendecomposition failed");
        for (int j = 0; j < d_out; ++j) {
            basis.col(j) = es.eigenvectors().col(dim - 1 - j);  // descending order
        }
    } else {
        // Gram route: eigenvectors of X X^T mapped back through X^T.
        const Eigen::MatrixXd gram = centered * centered.transpose();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
        if (es.info() != Eigen::Success) throw std::runtime_error("fit_pca: eigendecomposition failed");
        for (int j = 0; j < d_out; ++j) {
            const double lambda = es.eigenvalues()(n - 1 - j);
            if (lambda <= 1e-12 * std::max(1.0, es.eigenvalues()(n - 1))) {
                throw std::runtime_error("fit_pca: target exceeds the data rank");
            }
            basis.col(j) = centered.transpose() * es.eigenvectors().col(n - 1 - j) / std::sqrt(lambda);
        }
    }

    // deterministic sign: largest-magnitude entry of each column positive
    for (int j = 0; j < d_out; ++j) {
        Eigen::Index arg = 0;
        basis.col(j).cwiseAbs().maxCoeff(&arg);
        if (basis(arg, j) < 0.0) basis.col(j) = -basis.col(j);
    }
    return basis;
}

}  // namespace

PcaModel fit_pca(const std::vector<std::vector<double>>& rows, PcaTarget target, PcaScope scope,
                 const std::vector<int>& subtype_split) {
    if (rows.empty()) throw std::runtime_error("fit_pca: no samples");
    const int dim = int(rows.front().size());
    for (const auto& r : rows) {
        if (int(r.size()) != dim) throw std::runtime_error("fit_pca: inconsistent dimensions");
    }

    std::vector<std::pair<int, int>> blocks;
    if (subtype_split.empty()) {
        int d_out;
        if (target.is_fraction) {
            d_out = int(std::ceil(target.value * dim));
        } else {
            d_out = int(target.value);
        }
        blocks.emplace_back(dim, d_out);
    } else {
        if (!target.is_fraction) {
            throw std::runtime_error("fit_pca: a subtype split requires a fractional target");
        }
        int total = 0;
        for (int b : subtype_split) {
            blocks.emplace_back(b, int(std::ceil(target.value * b)));
            total += b;
        }
        if (total != dim) throw std::runtime_error("fit_pca: subtype split does not cover the input");
    }

    const int n = int(rows.size());
    PcaModel m;
    m.scope = scope;
    m.input_dim = dim;
    m.blocks = blocks;
    m.output_dim = 0;
    for (const auto& [bi, bo] : blocks) {
        if (bo < 1 || bo > bi) throw std::runtime_error("fit_pca: block target out of range");
        if (bo > n - 1) throw std::runtime_error("fit_pca: target exceeds the data rank");
        m.output_dim += bo;
    }

    m.mean.assign(std::size_t(dim), 0.0);
    for (const auto& r : rows) {
        for (int j = 0; j < dim; ++j) m.mean[std::size_t(j)] += r[std::size_t(j)];
    }
    for (double& v : m.mean) v /= n;

    m.basis.assign(std::size_t(dim) * std::size_t(m.output_dim), 0.0);
    int in_off = 0, out_off = 0;
    for (const auto& [bi, bo] : blocks) {
        Eigen::MatrixXd centered(n, bi);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < bi; ++j) {
                centered(i, j) = rows[std::size_t(i)][std::size_t(in_off + j)] - m.mean[std::size_t(in_off + j)];
            }
        }
        const Eigen::MatrixXd basis = principal_basis(centered, bo);
        for (int j = 0; j < bo; ++j) {
            for (int i = 0; i < bi; ++i) {
                m.basis[std::size_t(in_off + i) + std::size_t(out_off + j) * std::size_t(dim)] = basis(i, j);
            }
        }
        in_off += bi;
        out_off += bo;
    }
    return m;
}

std::vector<double> apply_pca(const PcaModel& m, const std::vector<double>& v) {
    if (int(v.size()) != m.input_dim) throw std::runtime_error("apply_pca: dimension mismatch");
    std::vector<double> out(std::size_t(m.output_dim), 0.0);
    for (int j = 0; j < m.output_dim; ++j) {
        const double* col = m.basis.data() + std::size_t(j) * std::size_t(m.input_dim);
        double acc = 0.0;
        for (int i = 0; i < m.input_dim; ++i) {
            acc += col[i] * (v[std::size_t(i)] - m.mean[std::size_t(i)]);
        }
        out[std::size_t(j)] = acc;
    }
    return out;
}

std::vector<double> pca_reconstruct(const PcaModel& m, const std::vector<double>& z) {
    if (int(z.size()) != m.output_dim) throw std::runtime_error("pca_reconstruct: dimension mismatch");
    std::vector<double> out(m.mean);
    for (int j = 0; j < m.output_dim; ++j) {
        const double* col = m.basis.data() + std::size_t(j) * std::size_t(m.input_dim);
        for (int i = 0; i < m.input_dim; ++i) out[std::size_t(i)] += col[i] * z[std::size_t(j)];
    }
    return out;
}

}  // namespace pfm
