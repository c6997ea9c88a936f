#include "gcd/kernels.hpp"

#include <cstring>
#include <string>

#include "gcd/errors.hpp"

namespace gcd::kernels {

ConvDims conv_dims(int C, int H, int W, int F, int KH, int KW, int stride, int pad) {
    if (C <= 0 || H <= 0 || W <= 0 || F <= 0 || KH <= 0 || KW <= 0)
        throw ConfigError("conv2d: all extents must be positive");
    if (stride <= 0 || pad < 0)
        throw ConfigError("conv2d: stride must be > 0 and padding >= 0");
    const int eh = H + 2 * pad - KH;
    const int ew = W + 2 * pad - KW;
    if (eh < 0 || ew < 0 || eh % stride != 0 || ew % stride != 0)
        throw ConfigError("conv2d: output size (" + std::to_string(H) + "+2*" + std::to_string(pad) +
                          "-" + std::to_string(KH) + ")/" + std::to_string(stride) +
                          "+1 is not a positive integer");
    ConvDims d;
    d.C = C; d.H = H; d.W = W; d.F = F; d.KH = KH; d.KW = KW;
    d.stride = stride; d.pad = pad;
    d.Hout = eh / stride + 1;
    d.Wout = ew / stride + 1;
    return d;
}

namespace {

inline double conv_out_element(const double* x, const double* k, const ConvDims& d,
                               int f, int ho, int wo) {
    double acc = 0.0;
    const double* kf = k + static_cast<long>(f) * d.C * d.KH * d.KW;
    for (int c = 0; c < d.C; ++c) {
        const double* xc = x + static_cast<long>(c) * d.H * d.W;
        const double* kc = kf + static_cast<long>(c) * d.KH * d.KW;
        for (int kh = 0; kh < d.KH; ++kh) {
            const int hi = ho * d.stride - d.pad + kh;
            if (hi < 0 || hi >= d.H) continue;
            for (int kw = 0; kw < d.KW; ++kw) {
                const int wi = wo * d.stride - d.pad + kw;
                if (wi < 0 || wi >= d.W) continue;
                acc += xc[hi * d.W + wi] * kc[kh * d.KW + kw];
            }
        }
    }
    return acc;
}

// dL/dx[c,hi,wi] gathered over every output element whose window covers it.
inline double conv_input_grad_element(const double* gy, const double* k, const ConvDims& d,
                                      int c, int hi, int wi) {
    double acc = 0.0;
    for (int f = 0; f < d.F; ++f) {
        const double* gyf = gy + static_cast<long>(f) * d.Hout * d.Wout;
        const double* kc = k + (static_cast<long>(f) * d.C + c) * d.KH * d.KW;
        for (int kh = 0; kh < d.KH; ++kh) {
            const int ht = hi + d.pad - kh;
            if (ht < 0 || ht % d.stride != 0) continue;
            const int ho = ht / d.stride;
            if (ho >= d.Hout) continue;
            for (int kw = 0; kw < d.KW; ++kw) {
                const int wt = wi + d.pad - kw;
                if (wt < 0 || wt % d.stride != 0) continue;
                const int wo = wt / d.stride;
                if (wo >= d.Wout) continue;
                acc += gyf[ho * d.Wout + wo] * kc[kh * d.KW + kw];
            }
        }
    }
    return acc;
}

inline double conv_kernel_grad_element(const double* gy, const double* x, const ConvDims& d,
                                       int f, int c, int kh, int kw) {
    double acc = 0.0;
    const double* gyf = gy + static_cast<long>(f) * d.Hout * d.Wout;
    const double* xc = x + static_cast<long>(c) * d.H * d.W;
    for (int ho = 0; ho < d.Hout; ++ho) {
        const int hi = ho * d.stride - d.pad + kh;
        if (hi < 0 || hi >= d.H) continue;
        for (int wo = 0; wo < d.Wout; ++wo) {
            const int wi = wo * d.stride - d.pad + kw;
            if (wi < 0 || wi >= d.W) continue;
            acc += gyf[ho * d.Wout + wo] * xc[hi * d.W + wi];
        }
    }
    return acc;
}

} // namespace

void conv2d_forward_serial(const double* x, const double* k, double* y, const ConvDims& d) {
    for (int f = 0; f < d.F; ++f)
        for (int ho = 0; ho < d.Hout; ++ho)
            for (int wo = 0; wo < d.Wout; ++wo)
                y[(static_cast<long>(f) * d.Hout + ho) * d.Wout + wo] =
                    conv_out_element(x, k, d, f, ho, wo);
}

void conv2d_forward(const double* x, const double* k, double* y, const ConvDims& d) {
#pragma omp parallel for collapse(2) schedule(static)
    for (int f = 0; f < d.F; ++f)
        for (int ho = 0; ho < d.Hout; ++ho)
            for (int wo = 0; wo < d.Wout; ++wo)
                y[(static_cast<long>(f) * d.Hout + ho) * d.Wout + wo] =
                    conv_out_element(x, k, d, f, ho, wo);
}

void conv2d_backward_input_serial(const double* gy, const double* k, double* gx, const ConvDims& d) {
    for (int c = 0; c < d.C; ++c)
        for (int hi = 0; hi < d.H; ++hi)
            for (int wi = 0; wi < d.W; ++wi)
                gx[(static_cast<long>(c) * d.H + hi) * d.W + wi] =
                    conv_input_grad_element(gy, k, d, c, hi, wi);
}

void conv2d_backward_input(const double* gy, const double* k, double* gx, const ConvDims& d) {
#pragma omp parallel for collapse(2) schedule(static)
    for (int c = 0; c < d.C; ++c)
        for (int hi = 0; hi < d.H; ++hi)
            for (int wi = 0; wi < d.W; ++wi)
                gx[(static_cast<long>(c) * d.H + hi) * d.W + wi] =
                    conv_input_grad_element(gy, k, d, c, hi, wi);
}

void conv2d_backward_kernels_serial(const double* gy, const double* x, double* gk, const ConvDims& d) {
    for (int f = 0; f < d.F; ++f)
        for (int c = 0; c < d.C; ++c)
            for (int kh = 0; kh < d.KH; ++kh)
                for (int kw = 0; kw < d.KW; ++kw)
                    gk[((static_cast<long>(f) * d.C + c) * d.KH + kh) * d.KW + kw] =
                        conv_kernel_grad_element(gy, x, d, f, c, kh, kw);
}

void conv2d_backward_kernels(const double* gy, const double* x, double* gk, const ConvDims& d) {
#pragma omp parallel for collapse(2) schedule(static)
    for (int f = 0; f < d.F; ++f)
        for (int c = 0; c < d.C; ++c)
            for (int kh = 0; kh < d.KH; ++kh)
                for (int kw = 0; kw < d.KW; ++kw)
                    gk[((static_cast<long>(f) * d.C + c) * d.KH + kh) * d.KW + kw] =
                        conv_kernel_grad_element(gy, x, d, f, c, kh, kw);
}

void matmul_serial(const double* a, const double* b, double* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int p = 0; p < k; ++p) acc += a[i * k + p] * b[p * n + j];
            c[i * n + j] = acc;
        }
}

void matmul(const double* a, const double* b, double* c, int m, int k, int n) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int p = 0; p < k; ++p) acc += a[i * k + p] * b[p * n + j];
            c[i * n + j] = acc;
        }
}

void matmul_tn_serial(const double* a, const double* b, double* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int p = 0; p < k; ++p) acc += a[p * m + i] * b[p * n + j];
            c[i * n + j] = acc;
        }
}

void matmul_tn(const double* a, const double* b, double* c, int m, int k, int n) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int p = 0; p < k; ++p) acc += a[p * m + i] * b[p * n + j];
            c[i * n + j] = acc;
        }
}

void matmul_nt_serial(const double* a, const double* b, double* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int p = 0; p < k; ++p) acc += a[i * k + p] * b[j * k + p];
            c[i * n + j] = acc;
        }
}

void matmul_nt(const double* a, const double* b, double* c, int m, int k, int n) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int p = 0; p < k; ++p) acc += a[i * k + p] * b[j * k + p];
            c[i * n + j] = acc;
        }
}

namespace {

inline void pool_channel(const double* x, double* y, int* argmax, int c, int H, int W) {
    const int Ho = H / 2, Wo = W / 2;
    const double* xc = x + static_cast<long>(c) * H * W;
    double* yc = y + static_cast<long>(c) * Ho * Wo;
    int* ac = argmax + static_cast<long>(c) * Ho * Wo;
    const long base = static_cast<long>(c) * H * W;
    for (int ho = 0; ho < Ho; ++ho)
        for (int wo = 0; wo < Wo; ++wo) {
            const int h0 = 2 * ho, w0 = 2 * wo;
            int best = h0 * W + w0;
            double bv = xc[best];
            const int cand[3] = {h0 * W + w0 + 1, (h0 + 1) * W + w0, (h0 + 1) * W + w0 + 1};
            for (int t = 0; t < 3; ++t)
                if (xc[cand[t]] > bv) { bv = xc[cand[t]]; best = cand[t]; }
            yc[ho * Wo + wo] = bv;
            ac[ho * Wo + wo] = static_cast<int>(base) + best;
        }
}

} // namespace

void maxpool2x2_forward_serial(const double* x, double* y, int* argmax, int C, int H, int W) {
    for (int c = 0; c < C; ++c) pool_channel(x, y, argmax, c, H, W);
}

void maxpool2x2_forward(const double* x, double* y, int* argmax, int C, int H, int W) {
#pragma omp parallel for schedule(static)
    for (int c = 0; c < C; ++c) pool_channel(x, y, argmax, c, H, W);
}

void maxpool2x2_backward_serial(const double* gy, const int* argmax, double* gx, int C, int H, int W) {
    const int n = C * (H / 2) * (W / 2);
    for (int i = 0; i < n; ++i) gx[argmax[i]] += gy[i];
}

void maxpool2x2_backward(const double* gy, const int* argmax, double* gx, int C, int H, int W) {
    const int Ho = H / 2, Wo = W / 2;
    // Windows are disjoint, so each gx element has exactly one writer.
#pragma omp parallel for schedule(static)
    for (int c = 0; c < C; ++c) {
        const long off = static_cast<long>(c) * Ho * Wo;
        for (int i = 0; i < Ho * Wo; ++i) gx[argmax[off + i]] += gy[off + i];
    }
}

} // namespace gcd::kernels
