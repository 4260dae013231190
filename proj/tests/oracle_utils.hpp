// Test-only reference implementations, deliberately independent of the
// library's numerical path: plain-vector matrices, hand-written cosine
// products, Gauss-Jordan inversion, and finite-difference gradients.
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "gpada/model.hpp"

namespace oracle {

using Mat = std::vector<std::vector<double>>;

inline Mat zeros(std::size_t r, std::size_t c) { return Mat(r, std::vector<double>(c, 0.0)); }

inline Mat matmul(const Mat& a, const Mat& b) {
    Mat out = zeros(a.size(), b[0].size());
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t k = 0; k < b.size(); ++k)
            for (std::size_t j = 0; j < b[0].size(); ++j) out[i][j] += a[i][k] * b[k][j];
    return out;
}

inline double row_norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

inline Mat cosine(const Mat& p, const Mat& q) {
    Mat out = zeros(p.size(), q.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        for (std::size_t j = 0; j < q.size(); ++j) {
            double dot = 0.0;
            for (std::size_t k = 0; k < p[i].size(); ++k) dot += p[i][k] * q[j][k];
            out[i][j] = dot / (row_norm(p[i]) * row_norm(q[j]));
        }
    }
    return out;
}

/// Gauss-Jordan with partial pivoting.
inline Mat invert(Mat a) {
    const std::size_t n = a.size();
    Mat inv = zeros(n, n);
    for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1.0;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
        if (std::abs(a[pivot][col]) < 1e-300) throw std::runtime_error("oracle: singular matrix");
        std::swap(a[col], a[pivot]);
        std::swap(inv[col], inv[pivot]);
        const double d = a[col][col];
        for (std::size_t j = 0; j < n; ++j) {
            a[col][j] /= d;
            inv[col][j] /= d;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a[r][col];
            if (f == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) {
                a[r][j] -= f * a[col][j];
                inv[r][j] -= f * inv[col][j];
            }
        }
    }
    return inv;
}

struct GpResult {
    Mat mean;
    Mat cov;
};

/// Direct-inversion posterior: mean = K_ul (K_ll + jI)^-1 F_l,
/// cov = K_uu - K_ul (K_ll + jI)^-1 K_lu. Every kernel block recomputed here.
inline GpResult gp_direct(const Mat& f_u, const Mat& f_l, double jitter) {
    Mat k_ll = cosine(f_l, f_l);
    for (std::size_t i = 0; i < k_ll.size(); ++i) k_ll[i][i] += jitter;
    const Mat k_ul = cosine(f_u, f_l);
    const Mat k_lu = cosine(f_l, f_u);
    const Mat k_uu = cosine(f_u, f_u);
    const Mat a_inv = invert(k_ll);
    GpResult res;
    res.mean = matmul(matmul(k_ul, a_inv), f_l);
    res.cov = k_uu;
    const Mat correction = matmul(matmul(k_ul, a_inv), k_lu);
    for (std::size_t i = 0; i < res.cov.size(); ++i)
        for (std::size_t j = 0; j < res.cov[i].size(); ++j) res.cov[i][j] -= correction[i][j];
    return res;
}

/// Central finite differences of a scalar loss over all model parameters.
/// Returns max relative error against the provided analytic gradient.
inline double gradient_check(gpada::ModelState model,
                             const std::function<double(const gpada::ModelState&)>& loss,
                             const gpada::Gradients& analytic, double h = 1e-6) {
    const int C = model.num_classes(), d = model.dim();
    double num2 = 0.0, ana2 = 0.0, diff2 = 0.0;
    auto probe = [&](double& slot, double analytic_g) {
        const double orig = slot;
        slot = orig + h;
        const double up = loss(model);
        slot = orig - h;
        const double down = loss(model);
        slot = orig;
        const double fd = (up - down) / (2.0 * h);
        num2 += fd * fd;
        ana2 += analytic_g * analytic_g;
        diff2 += (fd - analytic_g) * (fd - analytic_g);
    };
    for (int c = 0; c < C; ++c)
        for (int j = 0; j < d; ++j) probe(model.weights(c, j), analytic.w(c, j));
    for (int c = 0; c < C; ++c) probe(model.bias[c], analytic.b[c]);
    const double denom = std::max({std::sqrt(num2), std::sqrt(ana2), 1e-12});
    return std::sqrt(diff2) / denom;
}

}  // namespace oracle
