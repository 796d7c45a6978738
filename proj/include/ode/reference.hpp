#pragma once

#include "ode/sampling.hpp"
#include "ode/tensor.hpp"

// Serial, loop-level reference implementations. They share no code with the
// parallel kernels: tests use them as independent oracles and bench_kernels
// reports the parallel speedup against them.
namespace ode::ref {

/// Naive triple-loop matmul, C = A * B (row-major).
template <typename T>
void matmul(const T* a, const T* b, T* c, int m, int k, int n);

/// Direct nested-loop 2-D convolution over one batch element set.
/// Input NxCxHxW, weights CoxCixKxK, zero pad vertically, pad mode picks the
/// horizontal behavior.
template <typename T>
Tensor<T> conv2d_direct(const Tensor<T>& x, const Tensor<T>& weight, const T* bias, int stride,
                        int pad, PadMode mode);

/// Direct transposed convolution (scatter form), output spatial = in * stride.
/// Weights CixCoxKxK.
template <typename T>
Tensor<T> tconv2d_direct(const Tensor<T>& x, const Tensor<T>& weight, const T* bias, int stride);

/// Nested-loop patch unfolding (same layout as ode::im2col).
template <typename T>
void im2col_naive(const T* x, int c, int h, int w, int k, int stride, int pad, PadMode mode,
                  ColumnBuffer<T>& out);

/// Scalar bilinear fetch of a single channel.
template <typename T>
double bilinear_scalar(const T* plane, int h, int w, double row, double col, WrapPolicy policy);

/// One vanilla CSPN step on a 1-channel map with the integer 8-neighborhood:
/// out(x) = k0(x) * h0(x) + sum_d k_d(x) * h(x + d). Neighbor taps are
/// row-major over the 3x3 stencil minus the center; edges wrap horizontally
/// and reflect across the poles.
template <typename T>
Tensor<T> cspn_step_8neighbor(const Tensor<T>& h_tau, const Tensor<T>& h0,
                              const Tensor<T>& kappa, const Tensor<T>& kappa0);

/// Per-pixel loop over the depth metrics; mirrors ode::evaluate's contract.
struct NaiveMetrics {
  double abs_rel, sq_rel, rmse, rms_log, d1, d2, d3;
};
template <typename T>
NaiveMetrics metrics_naive(const Tensor<T>& pred, const Tensor<T>& gt, const Tensor<T>& mask);

}  // namespace ode::ref
