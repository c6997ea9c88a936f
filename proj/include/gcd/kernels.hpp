#ifndef GCD_KERNELS_HPP
#define GCD_KERNELS_HPP

namespace gcd::kernels {

/// Geometry of a single-image cross-correlation: input C×H×W, kernels
/// F×C×KH×KW, output F×Hout×Wout.
struct ConvDims {
    int C = 0, H = 0, W = 0;
    int F = 0, KH = 0, KW = 0;
    int stride = 1, pad = 0;
    int Hout = 0, Wout = 0;
};

/// Validates and completes the geometry. Throws ConfigError when the output
/// extent (H + 2*pad - KH)/stride + 1 is not a positive integer.
ConvDims conv_dims(int C, int H, int W, int F, int KH, int KW, int stride, int pad);

// Every kernel comes in two flavours: a plain serial reference and an
// OpenMP version. Both accumulate per output element in the same order, so
// results are bit-identical across flavours and thread counts.

void conv2d_forward_serial(const double* x, const double* k, double* y, const ConvDims& d);
void conv2d_forward(const double* x, const double* k, double* y, const ConvDims& d);

void conv2d_backward_input_serial(const double* gy, const double* k, double* gx, const ConvDims& d);
void conv2d_backward_input(const double* gy, const double* k, double* gx, const ConvDims& d);

void conv2d_backward_kernels_serial(const double* gy, const double* x, double* gk, const ConvDims& d);
void conv2d_backward_kernels(const double* gy, const double* x, double* gk, const ConvDims& d);

// C[m×n] = A[m×k] · B[k×n]
void matmul_serial(const double* a, const double* b, double* c, int m, int k, int n);
void matmul(const double* a, const double* b, double* c, int m, int k, int n);

// C[m×n] = Aᵀ · B with A stored k×m (used for grad wrt the right operand)
void matmul_tn_serial(const double* a, const double* b, double* c, int m, int k, int n);
void matmul_tn(const double* a, const double* b, double* c, int m, int k, int n);

// C[m×n] = A · Bᵀ with B stored n×k (used for grad wrt the left operand)
void matmul_nt_serial(const double* a, const double* b, double* c, int m, int k, int n);
void matmul_nt(const double* a, const double* b, double* c, int m, int k, int n);

// 2×2 max pooling with stride 2 over C×H×W (H, W even). argmax records the
// flat input index of each window winner for the backward pass.
void maxpool2x2_forward_serial(const double* x, double* y, int* argmax, int C, int H, int W);
void maxpool2x2_forward(const double* x, double* y, int* argmax, int C, int H, int W);

void maxpool2x2_backward_serial(const double* gy, const int* argmax, double* gx, int C, int H, int W);
void maxpool2x2_backward(const double* gy, const int* argmax, double* gx, int C, int H, int W);

} // namespace gcd::kernels

#endif
