#include "pfm/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "pfm/util.hpp"

namespace pfm {
namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

double sq_dist(const double* a, const double* b, int d) {
    double s = 0.0;
    for (int i = 0; i < d; ++i) {
        const double diff = a[i] - b[i];
        s += diff * diff;
    }
    return s;
}

void check_rows(const std::vector<std::vector<double>>& data) {
    if (data.empty()) throw std::runtime_error("gmm: empty data");
    const std::size_t d = data.front().size();
    for (const auto& row : data) {
        if (row.size() != d) throw std::runtime_error("gmm: inconsistent descriptor dimensions");
    }
}

// Precomputed per-component log normalization constants.
struct GmmEval {
    const GmmModel* m;
    std::vector<double> log_const;  // log w_k - 0.5*sum_d log(2*pi*var)
    std::vector<double> inv_var;    // K*D

    explicit GmmEval(const GmmModel& model) : m(&model) {
        log_const.resize(std::size_t(model.K));
        inv_var.resize(std::size_t(model.K) * model.D);
        for (int k = 0; k < model.K; ++k) {
            double c = std::log(model.weights[std::size_t(k)]);
            for (int d = 0; d < model.D; ++d) {
                const double var = model.variances[std::size_t(k) * model.D + d];
                c -= 0.5 * (kLog2Pi + std::log(var));
                inv_var[std::size_t(k) * model.D + d] = 1.0 / var;
            }
            log_const[std::size_t(k)] = c;
        }
    }

    double posteriors(const double* x, double* gamma) const {
        const int K = m->K, D = m->D;
        double mx = -std::numeric_limits<double>::infinity();
        for (int k = 0; k < K; ++k) {
            const double* mu = m->means.data() + std::size_t(k) * D;
            const double* iv = inv_var.data() + std::size_t(k) * D;
            double q = 0.0;
            for (int d = 0; d < D; ++d) {
                const double diff = x[d] - mu[d];
                q += diff * diff * iv[d];
            }
            gamma[k] = log_const[std::size_t(k)] - 0.5 * q;
            mx = std::max(mx, gamma[k]);
        }
        double sum = 0.0;
        for (int k = 0; k < K; ++k) sum += std::exp(gamma[k] - mx);
        const double lse = mx + std::log(sum);
        for (int k = 0; k < K; ++k) gamma[k] = std::exp(gamma[k] - lse);
        return lse;
    }
};

}  // namespace

std::vector<double> kmeans(const std::vector<std::vector<double>>& data, int k, std::uint64_t seed,
                           int iters) {
    check_rows(data);
    const int n = int(data.size());
    const int d = int(data.front().size());
    if (k < 1 || k > n) throw std::runtime_error("kmeans: k out of range");

    // farthest-point seeding
    Rng rng(seed);
    std::vector<double> centers(std::size_t(k) * d);
    std::vector<double> min_d(std::size_t(n), std::numeric_limits<double>::infinity());
    std::size_t first = rng.index(std::size_t(n));
    std::copy(data[first].begin(), data[first].end(), centers.begin());
    for (int c = 1; c < k; ++c) {
        const double* prev = centers.data() + std::size_t(c - 1) * d;
        int far = 0;
        double far_d = -1.0;
        for (int i = 0; i < n; ++i) {
            min_d[std::size_t(i)] = std::min(min_d[std::size_t(i)], sq_dist(data[std::size_t(i)].data(), prev, d));
            if (min_d[std::size_t(i)] > far_d) {
                far_d = min_d[std::size_t(i)];
                far = i;
            }
        }
        std::copy(data[std::size_t(far)].begin(), data[std::size_t(far)].end(),
                  centers.begin() + std::size_t(c) * d);
    }

    std::vector<int> assign(std::size_t(n), 0);
    std::vector<double> sums(std::size_t(k) * d);
    std::vector<int> counts(std::size_t(k), 0);
    for (int it = 0; it < iters; ++it) {
        std::fill(sums.begin(), sums.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (int i = 0; i < n; ++i) {
            int best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (int c = 0; c < k; ++c) {
                const double dist = sq_dist(data[std::size_t(i)].data(), centers.data() + std::size_t(c) * d, d);
                if (dist < best_d) {
                    best_d = dist;
                    best = c;
                }
            }
            assign[std::size_t(i)] = best;
            ++counts[std::size_t(best)];
            double* s = sums.data() + std::size_t(best) * d;
            for (int j = 0; j < d; ++j) s[j] += data[std::size_t(i)][std::size_t(j)];
        }
        for (int c = 0; c < k; ++c) {
            if (counts[std::size_t(c)] == 0) {
                // re-seed an empty cluster on the point farthest from its center
                int far = 0;
                double far_d = -1.0;
                for (int i = 0; i < n; ++i) {
                    const int a = assign[std::size_t(i)];
                    const double dist =
                        sq_dist(data[std::size_t(i)].data(), centers.data() + std::size_t(a) * d, d);
                    if (dist > far_d) {
                        far_d = dist;
                        far = i;
                    }
                }
                std::copy(data[std::size_t(far)].begin(), data[std::size_t(far)].end(),
                          centers.begin() + std::size_t(c) * d);
                continue;
            }
            for (int j = 0; j < d; ++j) {
                centers[std::size_t(c) * d + j] = sums[std::size_t(c) * d + j] / counts[std::size_t(c)];
            }
        }
    }
    return centers;
}

GmmModel fit_gmm(const std::vector<std::vector<double>>& data, int k, std::uint64_t seed,
                 const GmmFitOptions& opts, std::vector<double>* ll_trace) {
    check_rows(data);
    const int n = int(data.size());
    const int d = int(data.front().size());
    if (k < 1) throw std::runtime_error("fit_gmm: k must be positive");
    if (n < 10 * k) throw std::runtime_error("fit_gmm: need at least 10*K descriptors");

    // per-dimension data variance for the floor
    std::vector<double> dmean(std::size_t(d), 0.0), dvar(std::size_t(d), 0.0);
    for (const auto& row : data) {
        for (int j = 0; j < d; ++j) dmean[std::size_t(j)] += row[std::size_t(j)];
    }
    for (int j = 0; j < d; ++j) dmean[std::size_t(j)] /= n;
    for (const auto& row : data) {
        for (int j = 0; j < d; ++j) {
            const double diff = row[std::size_t(j)] - dmean[std::size_t(j)];
            dvar[std::size_t(j)] += diff * diff;
        }
    }
    double total_var = 0.0;
    for (int j = 0; j < d; ++j) {
        dvar[std::size_t(j)] /= n;
        total_var += dvar[std::size_t(j)];
    }
    if (total_var <= 0.0) throw std::runtime_error("fit_gmm: degenerate (all-identical) data");
    std::vector<double> floor(std::size_t(d), 0.0);
    for (int j = 0; j < d; ++j) {
        floor[std::size_t(j)] = std::max(opts.var_floor_frac * dvar[std::size_t(j)],
                                         1e-12 * total_var / d);
    }

    GmmModel m;
    m.K = k;
    m.D = d;
    m.means = kmeans(data, k, seed, opts.kmeans_iters);
    m.weights.assign(std::size_t(k), 0.0);
    m.variances.assign(std::size_t(k) * d, 0.0);
    {
        // cluster statistics for the initial mixture
        std::vector<int> counts(std::size_t(k), 0);
        std::vector<double> sum(std::size_t(k) * d, 0.0), sum2(std::size_t(k) * d, 0.0);
        for (const auto& row : data) {
            int best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (int c = 0; c < k; ++c) {
                const double dist = sq_dist(row.data(), m.means.data() + std::size_t(c) * d, d);
                if (dist < best_d) {
                    best_d = dist;
                    best = c;
                }
            }
            ++counts[std::size_t(best)];
            for (int j = 0; j < d; ++j) {
                sum[std::size_t(best) * d + j] += row[std::size_t(j)];
                sum2[std::size_t(best) * d + j] += row[std::size_t(j)] * row[std::size_t(j)];
            }
        }
        for (int c = 0; c < k; ++c) {
            const double cnt = std::max(1, counts[std::size_t(c)]);
            m.weights[std::size_t(c)] = std::max(1.0, double(counts[std::size_t(c)])) / n;
            for (int j = 0; j < d; ++j) {
                const double mu = counts[std::size_t(c)] > 0 ? sum[std::size_t(c) * d + j] / cnt
                                                             : m.means[std::size_t(c) * d + j];
                m.means[std::size_t(c) * d + j] = mu;
                const double var = sum2[std::size_t(c) * d + j] / cnt - mu * mu;
                m.variances[std::size_t(c) * d + j] = std::max(var, floor[std::size_t(j)]);
            }
        }
        double wsum = 0.0;
        for (double w : m.weights) wsum += w;
        for (double& w : m.weights) w /= wsum;
    }

    std::vector<double> gamma(std::size_t(k), 0.0);
    std::vector<double> nk(std::size_t(k), 0.0), sx(std::size_t(k) * d), sxx(std::size_t(k) * d);
    double prev_ll = -std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < opts.max_iters; ++iter) {
        GmmEval eval(m);
        std::fill(nk.begin(), nk.end(), 0.0);
        std::fill(sx.begin(), sx.end(), 0.0);
        std::fill(sxx.begin(), sxx.end(), 0.0);
        double ll = 0.0;
        for (const auto& row : data) {
            ll += eval.posteriors(row.data(), gamma.data());
            for (int c = 0; c < k; ++c) {
                const double g = gamma[std::size_t(c)];
                if (g < 1e-12) continue;
                nk[std::size_t(c)] += g;
                double* s = sx.data() + std::size_t(c) * d;
                double* s2 = sxx.data() + std::size_t(c) * d;
                for (int j = 0; j < d; ++j) {
                    const double x = row[std::size_t(j)];
                    s[j] += g * x;
                    s2[j] += g * x * x;
                }
            }
        }
        ll /= n;
        if (ll_trace != nullptr) ll_trace->push_back(ll);
        if (iter > 0 && ll - prev_ll <= opts.tol * (std::abs(ll) + 1.0)) break;
        prev_ll = ll;

        for (int c = 0; c < k; ++c) {
            if (nk[std::size_t(c)] < 1e-10) continue;  // starved component: keep parameters
            m.weights[std::size_t(c)] = nk[std::size_t(c)] / n;
            for (int j = 0; j < d; ++j) {
                const double mu = sx[std::size_t(c) * d + j] / nk[std::size_t(c)];
                m.means[std::size_t(c) * d + j] = mu;
                const double var = sxx[std::size_t(c) * d + j] / nk[std::size_t(c)] - mu * mu;
                m.variances[std::size_t(c) * d + j] = std::max(var, floor[std::size_t(j)]);
            }
        }
        double wsum = 0.0;
        for (double w : m.weights) wsum += w;
        for (double& w : m.weights) w /= wsum;
    }
    return m;
}

double gmm_posteriors(const GmmModel& m, const double* x, double* gamma) {
    return GmmEval(m).posteriors(x, gamma);
}

double gmm_mean_log_likelihood(const GmmModel& m, const std::vector<std::vector<double>>& data) {
    GmmEval eval(m);
    std::vector<double> gamma(std::size_t(m.K), 0.0);
    double ll = 0.0;
    for (const auto& row : data) ll += eval.posteriors(row.data(), gamma.data());
    return ll / double(data.size());
}

}  // namespace pfm
