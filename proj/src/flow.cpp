#include "pfm/flow.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pfm {
namespace {

struct PlaneF {
    int w = 0, h = 0;
    std::vector<float> d;

    PlaneF() = default;
    PlaneF(int w_, int h_) : w(w_), h(h_), d(std::size_t(w_) * h_, 0.0f) {}
    float at(int x, int y) const { return d[std::size_t(y) * w + x]; }
    float& at(int x, int y) { return d[std::size_t(y) * w + x]; }
    float at_clamped(int x, int y) const {
        x = std::clamp(x, 0, w - 1);
        y = std::clamp(y, 0, h - 1);
        return d[std::size_t(y) * w + x];
    }
};

std::vector<double> gauss_kernel(int size, double sigma) {
    const int r = size / 2;
    std::vector<double> k(std::size_t(size), 0.0);
    double sum = 0.0;
    for (int i = -r; i <= r; ++i) {
        k[std::size_t(i + r)] = std::exp(-0.5 * i * i / (sigma * sigma));
        sum += k[std::size_t(i + r)];
    }
    for (double& v : k) v /= sum;
    return k;
}

void separable_blur(PlaneF& img, const std::vector<double>& kernel, PlaneF& tmp) {
    const int r = int(kernel.size()) / 2;
    const int w = img.w, h = img.h;
    tmp.w = w;
    tmp.h = h;
    tmp.d.resize(img.d.size());
    const int inner = std::max(0, w - r);
    for (int y = 0; y < h; ++y) {
        const float* row = img.d.data() + std::size_t(y) * w;
        float* out = tmp.d.data() + std::size_t(y) * w;
        for (int x = 0; x < std::min(r, w); ++x) {
            double acc = 0.0;
            for (int i = -r; i <= r; ++i) {
                acc += kernel[std::size_t(i + r)] * row[std::clamp(x + i, 0, w - 1)];
            }
            out[x] = float(acc);
        }
        for (int x = r; x < inner; ++x) {
            double acc = 0.0;
            for (int i = -r; i <= r; ++i) acc += kernel[std::size_t(i + r)] * row[x + i];
            out[x] = float(acc);
        }
        for (int x = std::max(r, inner); x < w; ++x) {
            double acc = 0.0;
            for (int i = -r; i <= r; ++i) {
                acc += kernel[std::size_t(i + r)] * row[std::clamp(x + i, 0, w - 1)];
            }
            out[x] = float(acc);
        }
    }
    for (int y = 0; y < h; ++y) {
        float* out = img.d.data() + std::size_t(y) * w;
        if (y >= r && y < h - r) {
            const float* base = tmp.d.data() + std::size_t(y - r) * w;
            for (int x = 0; x < w; ++x) {
                double acc = 0.0;
                for (int i = 0; i <= 2 * r; ++i) {
                    acc += kernel[std::size_t(i)] * base[std::size_t(i) * w + x];
                }
                out[x] = float(acc);
            }
        } else {
            for (int x = 0; x < w; ++x) {
                double acc = 0.0;
                for (int i = -r; i <= r; ++i) {
                    acc += kernel[std::size_t(i + r)] * tmp.at_clamped(x, y + i);
                }
                out[x] = float(acc);
            }
        }
    }
}

PlaneF downsample(const PlaneF& src) {
    // 5-tap binomial smoothing, then decimation by 2.
    static const double k[5] = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};
    PlaneF tmp(src.w, src.h);
    for (int y = 0; y < src.h; ++y) {
        for (int x = 0; x < src.w; ++x) {
            double acc = 0.0;
            for (int i = -2; i <= 2; ++i) acc += k[i + 2] * src.at_clamped(x + i, y);
            tmp.at(x, y) = float(acc);
        }
    }
    PlaneF smooth(src.w, src.h);
    for (int y = 0; y < src.h; ++y) {
        for (int x = 0; x < src.w; ++x) {
            double acc = 0.0;
            for (int i = -2; i <= 2; ++i) acc += k[i + 2] * tmp.at_clamped(x, y + i);
            smooth.at(x, y) = float(acc);
        }
    }
    PlaneF out((src.w + 1) / 2, (src.h + 1) / 2);
    for (int y = 0; y < out.h; ++y) {
        for (int x = 0; x < out.w; ++x) {
            out.at(x, y) = smooth.at(std::min(2 * x, src.w - 1), std::min(2 * y, src.h - 1));
        }
    }
    return out;
}

// Quadratic expansion f(x) ~ x^T A x + b^T x + c around every pixel,
// Gaussian-weighted least squares over a (2r+1)^2 window.
struct PolyExpansion {
    PlaneF bx, by, a11, a22, a12;
};

PolyExpansion poly_expansion(const PlaneF& img, int window, double sigma) {
    const int r = window / 2;
    const std::vector<double> w = gauss_kernel(window, sigma);
    double s2 = 0.0, s4 = 0.0;
    for (int i = -r; i <= r; ++i) {
        s2 += w[std::size_t(i + r)] * i * i;
        s4 += w[std::size_t(i + r)] * i * i * i * i;
    }
    // Normal-equation matrix for (c, axx, ayy); odd moments vanish.
    const double g[3][3] = {{1.0, s2, s2}, {s2, s4, s2 * s2}, {s2, s2 * s2, s4}};
    const double det = g[0][0] * (g[1][1] * g[2][2] - g[1][2] * g[2][1]) -
                       g[0][1] * (g[1][0] * g[2][2] - g[1][2] * g[2][0]) +
                       g[0][2] * (g[1][0] * g[2][1] - g[1][1] * g[2][0]);
    double inv[3][3];
    inv[0][0] = (g[1][1] * g[2][2] - g[1][2] * g[2][1]) / det;
    inv[0][1] = (g[0][2] * g[2][1] - g[0][1] * g[2][2]) / det;
    inv[0][2] = (g[0][1] * g[1][2] - g[0][2] * g[1][1]) / det;
    inv[1][0] = inv[0][1];
    inv[1][1] = (g[0][0] * g[2][2] - g[0][2] * g[2][0]) / det;
    inv[1][2] = (g[0][2] * g[1][0] - g[0][0] * g[1][2]) / det;
    inv[2][0] = inv[0][2];
    inv[2][1] = inv[1][2];
    inv[2][2] = (g[0][0] * g[1][1] - g[0][1] * g[1][0]) / det;

    // Separable moment accumulation: horizontal pass keeps plain, i- and
    // i^2-weighted sums, the vertical pass combines them with j weights.
    const int iw = img.w, ih = img.h;
    PlaneF t0(iw, ih), t1(iw, ih), t2(iw, ih);
    for (int y = 0; y < ih; ++y) {
        const float* row = img.d.data() + std::size_t(y) * iw;
        float* o0 = t0.d.data() + std::size_t(y) * iw;
        float* o1 = t1.d.data() + std::size_t(y) * iw;
        float* o2 = t2.d.data() + std::size_t(y) * iw;
        for (int x = 0; x < iw; ++x) {
            double m0 = 0.0, m1 = 0.0, m2 = 0.0;
            if (x >= r && x < iw - r) {
                for (int i = -r; i <= r; ++i) {
                    const double f = row[x + i];
                    const double wi = w[std::size_t(i + r)];
                    m0 += wi * f;
                    m1 += wi * i * f;
                    m2 += wi * i * i * f;
                }
            } else {
                for (int i = -r; i <= r; ++i) {
                    const double f = row[std::clamp(x + i, 0, iw - 1)];
                    const double wi = w[std::size_t(i + r)];
                    m0 += wi * f;
                    m1 += wi * i * f;
                    m2 += wi * i * i * f;
                }
            }
            o0[x] = float(m0);
            o1[x] = float(m1);
            o2[x] = float(m2);
        }
    }

    PolyExpansion e;
    e.bx = PlaneF(iw, ih);
    e.by = PlaneF(iw, ih);
    e.a11 = PlaneF(iw, ih);
    e.a22 = PlaneF(iw, ih);
    e.a12 = PlaneF(iw, ih);
    for (int y = 0; y < ih; ++y) {
        const bool border = y < r || y >= ih - r;
        for (int x = 0; x < iw; ++x) {
            double m00 = 0, m01 = 0, m02 = 0, m10 = 0, m11 = 0, m20 = 0;
            if (!border) {
                const std::size_t base = std::size_t(y - r) * iw + x;
                for (int j = -r; j <= r; ++j) {
                    const double wj = w[std::size_t(j + r)];
                    const std::size_t idx = base + std::size_t(j + r) * iw;
                    const double v0 = t0.d[idx];
                    const double v1 = t1.d[idx];
                    const double v2 = t2.d[idx];
                    m00 += wj * v0;
                    m01 += wj * j * v0;
                    m02 += wj * j * j * v0;
                    m10 += wj * v1;
                    m11 += wj * j * v1;
                    m20 += wj * v2;
                }
            } else {
                for (int j = -r; j <= r; ++j) {
                    const double wj = w[std::size_t(j + r)];
                    const double v0 = t0.at_clamped(x, y + j);
                    const double v1 = t1.at_clamped(x, y + j);
                    const double v2 = t2.at_clamped(x, y + j);
                    m00 += wj * v0;
                    m01 += wj * j * v0;
                    m02 += wj * j * j * v0;
                    m10 += wj * v1;
                    m11 += wj * j * v1;
                    m20 += wj * v2;
                }
            }
            const double axx = inv[1][0] * m00 + inv[1][1] * m20 + inv[1][2] * m02;
            const double ayy = inv[2][0] * m00 + inv[2][1] * m20 + inv[2][2] * m02;
            e.bx.at(x, y) = float(m10 / s2);
            e.by.at(x, y) = float(m01 / s2);
            e.a11.at(x, y) = float(axx);
            e.a22.at(x, y) = float(ayy);
            e.a12.at(x, y) = float(m11 / (s2 * s2) * 0.5);
        }
    }
    return e;
}

// One refinement pass: build the aggregated normal equations for the local
// displacement and solve per pixel.
void refine_flow(const PolyExpansion& e1, const PolyExpansion& e2, PlaneF& du, PlaneF& dv,
                 const std::vector<double>& blur_kernel) {
    const int w = du.w, h = du.h;
    PlaneF g11(w, h), g12(w, h), g22(w, h), h1(w, h), h2(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double dx = du.at(x, y);
            const double dy = dv.at(x, y);
            const double x2 = std::clamp(x + dx, 0.0, double(w - 1));
            const double y2 = std::clamp(y + dy, 0.0, double(h - 1));
            const int x0 = int(x2), y0 = int(y2);
            const int x1 = std::min(x0 + 1, w - 1);
            const int y1 = std::min(y0 + 1, h - 1);
            const double fx = x2 - x0, fy = y2 - y0;
            const double w00 = (1 - fx) * (1 - fy), w10 = fx * (1 - fy);
            const double w01 = (1 - fx) * fy, w11 = fx * fy;
            const std::size_t i00 = std::size_t(y0) * w + x0, i10 = std::size_t(y0) * w + x1;
            const std::size_t i01 = std::size_t(y1) * w + x0, i11 = std::size_t(y1) * w + x1;
            auto fetch = [&](const PlaneF& p) {
                return w00 * p.d[i00] + w10 * p.d[i10] + w01 * p.d[i01] + w11 * p.d[i11];
            };
            const double a11 = 0.5 * (e1.a11.at(x, y) + fetch(e2.a11));
            const double a12 = 0.5 * (e1.a12.at(x, y) + fetch(e2.a12));
            const double a22 = 0.5 * (e1.a22.at(x, y) + fetch(e2.a22));
            const double dbx = -0.5 * (fetch(e2.bx) - e1.bx.at(x, y)) + a11 * dx + a12 * dy;
            const double dby = -0.5 * (fetch(e2.by) - e1.by.at(x, y)) + a12 * dx + a22 * dy;
            g11.at(x, y) = float(a11 * a11 + a12 * a12);
            g12.at(x, y) = float(a12 * (a11 + a22));
            g22.at(x, y) = float(a12 * a12 + a22 * a22);
            h1.at(x, y) = float(a11 * dbx + a12 * dby);
            h2.at(x, y) = float(a12 * dbx + a22 * dby);
        }
    }
    PlaneF tmp;
    separable_blur(g11, blur_kernel, tmp);
    separable_blur(g12, blur_kernel, tmp);
    separable_blur(g22, blur_kernel, tmp);
    separable_blur(h1, blur_kernel, tmp);
    separable_blur(h2, blur_kernel, tmp);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double a = g11.at(x, y), b = g12.at(x, y), c = g22.at(x, y);
            const double det = a * c - b * b;
            if (std::abs(det) > 1e-12) {
                const double r1 = h1.at(x, y), r2 = h2.at(x, y);
                du.at(x, y) = float((c * r1 - b * r2) / det);
                dv.at(x, y) = float((a * r2 - b * r1) / det);
            }
            // else: keep the prior displacement (textureless region).
        }
    }
}

PlaneF upsample_to(const PlaneF& coarse, int wf, int hf, double gain) {
    PlaneF out(wf, hf);
    for (int y = 0; y < hf; ++y) {
        for (int x = 0; x < wf; ++x) {
            const double sx = std::min(x * 0.5, double(coarse.w - 1));
            const double sy = std::min(y * 0.5, double(coarse.h - 1));
            const int x0 = int(sx), y0 = int(sy);
            const int x1 = std::min(x0 + 1, coarse.w - 1);
            const int y1 = std::min(y0 + 1, coarse.h - 1);
            const double fx = sx - x0, fy = sy - y0;
            const double v = (1 - fx) * (1 - fy) * coarse.at(x0, y0) +
                             fx * (1 - fy) * coarse.at(x1, y0) +
                             (1 - fx) * fy * coarse.at(x0, y1) +
                             fx * fy * coarse.at(x1, y1);
            out.at(x, y) = float(gain * v);
        }
    }
    return out;
}

}  // namespace

FlowField estimate_flow(const Frame& prev, const Frame& next, const FlowParams& params) {
    if (prev.width != next.width || prev.height != next.height) {
        throw std::runtime_error("estimate_flow: frame dimensions differ");
    }
    if (prev.gray.empty() || next.gray.empty()) {
        throw std::runtime_error("estimate_flow: grayscale plane missing");
    }

    PlaneF p0(prev.width, prev.height), p1(prev.width, prev.height);
    p0.d.assign(prev.gray.begin(), prev.gray.end());
    p1.d.assign(next.gray.begin(), next.gray.end());

    std::vector<PlaneF> pyr0{p0}, pyr1{p1};
    for (int l = 1; l < params.pyramid_levels; ++l) {
        const PlaneF& top0 = pyr0.back();
        if (std::min(top0.w, top0.h) < 24) break;
        pyr0.push_back(downsample(pyr0.back()));
        pyr1.push_back(downsample(pyr1.back()));
    }

    const std::vector<double> blur = gauss_kernel(
        params.blur_window, 0.3 * ((params.blur_window - 1) * 0.5 - 1) + 0.8);

    PlaneF du, dv;
    for (int l = int(pyr0.size()) - 1; l >= 0; --l) {
        const PlaneF& i0 = pyr0[std::size_t(l)];
        const PlaneF& i1 = pyr1[std::size_t(l)];
        if (du.d.empty()) {
            du = PlaneF(i0.w, i0.h);
            dv = PlaneF(i0.w, i0.h);
        } else {
            du = upsample_to(du, i0.w, i0.h, 2.0);
            dv = upsample_to(dv, i0.w, i0.h, 2.0);
        }
        const PolyExpansion e0 = poly_expansion(i0, params.poly_window, params.poly_sigma);
        const PolyExpansion e1 = poly_expansion(i1, params.poly_window, params.poly_sigma);
        for (int it = 0; it < params.iterations; ++it) {
            refine_flow(e0, e1, du, dv, blur);
        }
    }

    FlowField f;
    f.width = prev.width;
    f.height = prev.height;
    f.u = std::move(du.d);
    f.v = std::move(dv.d);
    return f;
}

KinematicMaps kinematic_maps(const FlowField& flow) {
    const int w = flow.width, h = flow.height;
    if (w <= 0 || h <= 0 || flow.u.size() != std::size_t(w) * h || flow.v.size() != std::size_t(w) * h) {
        throw std::runtime_error("kinematic_maps: invalid flow field");
    }
    KinematicMaps m;
    m.width = w;
    m.height = h;
    const std::size_t n = std::size_t(w) * h;
    m.div.resize(n);
    m.curl.resize(n);
    m.hyp1.resize(n);
    m.hyp2.resize(n);
    m.shear.resize(n);

    auto dxd = [&](const std::vector<float>& p, int x, int y) -> double {
        if (x == 0) return double(p[std::size_t(y) * w + 1]) - p[std::size_t(y) * w];
        if (x == w - 1) return double(p[std::size_t(y) * w + x]) - p[std::size_t(y) * w + x - 1];
        return 0.5 * (double(p[std::size_t(y) * w + x + 1]) - p[std::size_t(y) * w + x - 1]);
    };
    auto dyd = [&](const std::vector<float>& p, int x, int y) -> double {
        if (y == 0) return double(p[std::size_t(w) + x]) - p[x];
        if (y == h - 1) return double(p[std::size_t(y) * w + x]) - p[std::size_t(y - 1) * w + x];
        return 0.5 * (double(p[std::size_t(y + 1) * w + x]) - p[std::size_t(y - 1) * w + x]);
    };

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t i = std::size_t(y) * w + x;
            const double dudx = dxd(flow.u, x, y);
            const double dudy = dyd(flow.u, x, y);
            const double dvdx = dxd(flow.v, x, y);
            const double dvdy = dyd(flow.v, x, y);
            m.div[i] = float(dudx + dvdy);
            m.curl[i] = float(-dudy + dvdx);
            m.hyp1[i] = float(dudx - dvdy);
            m.hyp2[i] = float(dudy + dvdx);
            m.shear[i] = float(std::hypot(dudx - dvdy, dudy + dvdx));
        }
    }
    return m;
}

}  // namespace pfm
