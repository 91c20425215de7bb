#include "pfm/classify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>

#include "pfm/util.hpp"

namespace pfm {
namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace

BinarySvm train_binary_svm(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                           double c, double tol, long max_iter) {
    const std::size_t n = x.size();
    if (n == 0 || y.size() != n) throw std::runtime_error("train_binary_svm: bad inputs");
    const std::size_t dim = x.front().size();
    for (const auto& row : x) {
        if (row.size() != dim) throw std::runtime_error("train_binary_svm: dimension mismatch");
    }

    // cached linear kernel
    std::vector<double> ker(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            ker[i * n + j] = ker[j * n + i] = dot(x[i], x[j]);
        }
    }

    std::vector<double> alpha(n, 0.0);
    std::vector<double> grad(n, -1.0);  // gradient of the dual objective

    double m_up = 0.0, m_low = 0.0;
    for (long it = 0; it < max_iter; ++it) {
        // maximal violating pair
        std::size_t i = n, j = n;
        m_up = -std::numeric_limits<double>::infinity();
        m_low = std::numeric_limits<double>::infinity();
        for (std::size_t t = 0; t < n; ++t) {
            const double v = -y[t] * grad[t];
            const bool in_up = (y[t] > 0 && alpha[t] < c) || (y[t] < 0 && alpha[t] > 0.0);
            const bool in_low = (y[t] > 0 && alpha[t] > 0.0) || (y[t] < 0 && alpha[t] < c);
            if (in_up && v > m_up) {
                m_up = v;
                i = t;
            }
            if (in_low && v < m_low) {
                m_low = v;
                j = t;
            }
        }
        if (i >= n || j >= n || m_up - m_low <= tol) break;

        // two-variable subproblem along d = y_i e_i - y_j e_j
        double quad = ker[i * n + i] + ker[j * n + j] - 2.0 * ker[i * n + j];
        quad = std::max(quad, 1e-12);
        double step = (m_up - m_low) / quad;  // = -(y_i g_i - y_j g_j)/quad > 0

        double lo, hi;
        if (y[i] > 0) {
            lo = -alpha[i];
            hi = c - alpha[i];
        } else {
            lo = alpha[i] - c;
            hi = alpha[i];
        }
        if (y[j] > 0) {
            lo = std::max(lo, alpha[j] - c);
            hi = std::min(hi, alpha[j]);
        } else {
            lo = std::max(lo, -alpha[j]);
            hi = std::min(hi, c - alpha[j]);
        }
        step = std::clamp(step, lo, hi);
        if (step == 0.0) break;

        // delta alpha_i = y_i*step, delta alpha_j = -y_j*step, hence
        // delta grad_t = y_t*step*(K_ti - K_tj)
        alpha[i] += y[i] * step;
        alpha[j] -= y[j] * step;
        for (auto t : {i, j}) {
            if (alpha[t] < 1e-12 * c) {
                alpha[t] = 0.0;
            } else if (alpha[t] > (1.0 - 1e-12) * c) {
                alpha[t] = c;
            }
        }
        for (std::size_t t = 0; t < n; ++t) {
            grad[t] += y[t] * step * (ker[t * n + i] - ker[t * n + j]);
        }
    }

    BinarySvm out;
    out.w.assign(dim, 0.0);
    for (std::size_t t = 0; t < n; ++t) {
        if (alpha[t] == 0.0) continue;
        const double coef = alpha[t] * y[t];
        for (std::size_t d = 0; d < dim; ++d) out.w[d] += coef * x[t][d];
    }

    // bias from the free support vectors, else the midpoint of the bounds
    double bsum = 0.0;
    int bcount = 0;
    for (std::size_t t = 0; t < n; ++t) {
        if (alpha[t] > 1e-9 * c && alpha[t] < c * (1.0 - 1e-9)) {
            bsum += -y[t] * grad[t];
            ++bcount;
        }
    }
    out.b = bcount > 0 ? bsum / bcount : 0.5 * (m_up + m_low);
    if (!std::isfinite(out.b)) out.b = 0.0;
    return out;
}

double svm_primal_objective(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                            double c, const std::vector<double>& w, double b) {
    double obj = 0.5 * dot(w, w);
    for (std::size_t i = 0; i < x.size(); ++i) {
        obj += c * std::max(0.0, 1.0 - y[i] * (dot(w, x[i]) + b));
    }
    return obj;
}

OvaModel train_ova(const std::vector<std::vector<double>>& features,
                   const std::vector<std::string>& labels, double c, std::uint64_t seed) {
    (void)seed;
    if (features.size() != labels.size() || features.empty()) {
        throw std::runtime_error("train_ova: features and labels must align");
    }
    const std::size_t dim = features.front().size();
    for (const auto& f : features) {
        if (f.size() != dim) throw std::runtime_error("train_ova: dimension mismatch");
    }

    std::set<std::string> unique(labels.begin(), labels.end());
    if (unique.size() < 2) throw std::runtime_error("train_ova: need at least two classes");

    OvaModel m;
    m.labels.assign(unique.begin(), unique.end());
    m.dim = int(dim);
    m.reg_c = c;
    const std::size_t p = m.labels.size();
    m.weights.assign(p * dim, 0.0);
    m.biases.assign(p, 0.0);

    parallel_for(p, 0, [&](std::size_t k) {
        std::vector<int> y(labels.size());
        for (std::size_t i = 0; i < labels.size(); ++i) {
            y[i] = labels[i] == m.labels[k] ? 1 : -1;
        }
        const BinarySvm svm = train_binary_svm(features, y, c);
        std::copy(svm.w.begin(), svm.w.end(), m.weights.begin() + std::ptrdiff_t(k * dim));
        m.biases[k] = svm.b;
    });
    return m;
}

Prediction predict(const OvaModel& model, const std::vector<double>& feature) {
    if (int(feature.size()) != model.dim) throw std::runtime_error("predict: dimension mismatch");
    Prediction p;
    p.classes = model.labels;
    p.scores.resize(model.labels.size());
    std::size_t best = 0;
    for (std::size_t k = 0; k < model.labels.size(); ++k) {
        double s = model.biases[k];
        const double* w = model.weights.data() + k * std::size_t(model.dim);
        for (int d = 0; d < model.dim; ++d) s += w[d] * feature[std::size_t(d)];
        p.scores[k] = s;
        if (s > p.scores[best]) best = k;  // ties keep the smaller label
    }
    p.label = model.labels[best];
    return p;
}

std::string majority_vote(const std::vector<Prediction>& predictions) {
    if (predictions.empty()) throw std::runtime_error("majority_vote: no predictions");
    std::map<std::string, int> counts;
    for (const Prediction& p : predictions) ++counts[p.label];
    int top = 0;
    for (const auto& [label, n] : counts) top = std::max(top, n);

    std::string winner;
    double winner_sum = -std::numeric_limits<double>::infinity();
    for (const auto& [label, n] : counts) {
        if (n != top) continue;
        double sum = 0.0;
        for (const Prediction& p : predictions) {
            if (p.label != label) continue;
            const auto it = std::find(p.classes.begin(), p.classes.end(), label);
            sum += it != p.classes.end() ? p.scores[std::size_t(it - p.classes.begin())] : 0.0;
        }
        if (sum > winner_sum) {  // map order makes the final tie lexicographic
            winner_sum = sum;
            winner = label;
        }
    }
    return winner;
}

}  // namespace pfm
