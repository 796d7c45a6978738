#include "ode/reference.hpp"

#include <cmath>

namespace ode::ref {

namespace {

inline int mod(int a, int m) {
  int r = a % m;
  return r < 0 ? r + m : r;
}

// Fetch with the pad behavior spelled out long-hand.
template <typename T>
T padded_fetch(const T* plane, int h, int w, int i, int j, PadMode mode) {
  if (i < 0 || i >= h) return T(0);
  if (mode == PadMode::ZeroVWrapH) return plane[static_cast<std::size_t>(i) * w + mod(j, w)];
  if (j < 0 || j >= w) return T(0);
  return plane[static_cast<std::size_t>(i) * w + j];
}

template <typename T>
T sphere_fetch(const T* plane, int h, int w, int i, int j) {
  int r = mod(i, 2 * h);
  int c = mod(j, w);
  if (r >= h) {
    r = 2 * h - 1 - r;
    c = mod(c + w / 2, w);
  }
  return plane[static_cast<std::size_t>(r) * w + c];
}

}  // namespace

template <typename T>
void matmul(const T* a, const T* b, T* c, int m, int k, int n) {
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      T acc = 0;
      for (int kk = 0; kk < k; ++kk)
        acc += a[static_cast<std::size_t>(i) * k + kk] * b[static_cast<std::size_t>(kk) * n + j];
      c[static_cast<std::size_t>(i) * n + j] = acc;
    }
}

template <typename T>
Tensor<T> conv2d_direct(const Tensor<T>& x, const Tensor<T>& weight, const T* bias, int stride,
                        int pad, PadMode mode) {
  const int n = x.dim(0), ci = x.dim(1), h = x.dim(2), w = x.dim(3);
  const int co = weight.dim(0), k = weight.dim(2);
  const int oh = (h + 2 * pad - k) / stride + 1;
  const int ow = (w + 2 * pad - k) / stride + 1;
  Tensor<T> out({n, co, oh, ow});
  for (int bn = 0; bn < n; ++bn)
    for (int oc = 0; oc < co; ++oc)
      for (int oi = 0; oi < oh; ++oi)
        for (int oj = 0; oj < ow; ++oj) {
          T acc = bias ? bias[oc] : T(0);
          for (int ic = 0; ic < ci; ++ic) {
            const T* plane = x.data.data() + x.idx4(bn, ic, 0, 0);
            for (int a = 0; a < k; ++a)
              for (int b = 0; b < k; ++b)
                acc += weight.at(oc, ic, a, b) *
                       padded_fetch(plane, h, w, oi * stride - pad + a, oj * stride - pad + b,
                                    mode);
          }
          out.at(bn, oc, oi, oj) = acc;
        }
  return out;
}

template <typename T>
Tensor<T> tconv2d_direct(const Tensor<T>& x, const Tensor<T>& weight, const T* bias, int stride) {
  const int n = x.dim(0), ci = x.dim(1), h = x.dim(2), w = x.dim(3);
  const int co = weight.dim(1), k = weight.dim(2);
  const int pad = k / 2;
  const int oh = h * stride, ow = w * stride;
  Tensor<T> out({n, co, oh, ow});
  if (bias)
    for (int bn = 0; bn < n; ++bn)
      for (int oc = 0; oc < co; ++oc)
        for (int i = 0; i < oh; ++i)
          for (int j = 0; j < ow; ++j) out.at(bn, oc, i, j) = bias[oc];
  for (int bn = 0; bn < n; ++bn)
    for (int ic = 0; ic < ci; ++ic)
      for (int oc = 0; oc < co; ++oc)
        for (int i = 0; i < h; ++i)
          for (int j = 0; j < w; ++j) {
            const T v = x.at(bn, ic, i, j);
            for (int a = 0; a < k; ++a) {
              const int ti = i * stride - pad + a;
              if (ti < 0 || ti >= oh) continue;
              for (int b = 0; b < k; ++b) {
                const int tj = mod(j * stride - pad + b, ow);
                out.at(bn, oc, ti, tj) += v * weight.at(ic, oc, a, b);
              }
            }
          }
  return out;
}

template <typename T>
void im2col_naive(const T* x, int c, int h, int w, int k, int stride, int pad, PadMode mode,
                  ColumnBuffer<T>& out) {
  const int oh = (h + 2 * pad - k) / stride + 1;
  const int ow = (w + 2 * pad - k) / stride + 1;
  out.resize(c * k * k, oh * ow);
  for (int ch = 0; ch < c; ++ch)
    for (int a = 0; a < k; ++a)
      for (int b = 0; b < k; ++b)
        for (int oi = 0; oi < oh; ++oi)
          for (int oj = 0; oj < ow; ++oj)
            out.m[(static_cast<std::size_t>((ch * k + a) * k + b)) * (oh * ow) + oi * ow + oj] =
                padded_fetch(x + static_cast<std::size_t>(ch) * h * w, h, w,
                             oi * stride - pad + a, oj * stride - pad + b, mode);
}

template <typename T>
double bilinear_scalar(const T* plane, int h, int w, double row, double col, WrapPolicy policy) {
  const int r0 = static_cast<int>(std::floor(row));
  const int c0 = static_cast<int>(std::floor(col));
  const double fr = row - r0, fc = col - c0;
  double v[2][2];
  for (int dr = 0; dr < 2; ++dr)
    for (int dc = 0; dc < 2; ++dc) {
      int rr, cc;
      if (resolve_corner(r0 + dr, c0 + dc, h, w, policy, rr, cc))
        v[dr][dc] = plane[static_cast<std::size_t>(rr) * w + cc];
      else
        v[dr][dc] = 0.0;
    }
  return (1 - fr) * ((1 - fc) * v[0][0] + fc * v[0][1]) + fr * ((1 - fc) * v[1][0] + fc * v[1][1]);
}

template <typename T>
Tensor<T> cspn_step_8neighbor(const Tensor<T>& h_tau, const Tensor<T>& h0, const Tensor<T>& kappa,
                              const Tensor<T>& kappa0) {
  const int n = h_tau.dim(0), h = h_tau.dim(2), w = h_tau.dim(3);
  Tensor<T> out(h_tau.shape);
  for (int bn = 0; bn < n; ++bn)
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j) {
        T acc = kappa0.at(bn, 0, i, j) * h0.at(bn, 0, i, j);
        int t = 0;
        for (int a = -1; a <= 1; ++a)
          for (int b = -1; b <= 1; ++b) {
            if (a == 0 && b == 0) continue;
            acc += kappa.at(bn, t, i, j) *
                   sphere_fetch(h_tau.data.data() + h_tau.idx4(bn, 0, 0, 0), h, w, i + a, j + b);
            ++t;
          }
        out.at(bn, 0, i, j) = acc;
      }
  return out;
}

template <typename T>
NaiveMetrics metrics_naive(const Tensor<T>& pred, const Tensor<T>& gt, const Tensor<T>& mask) {
  NaiveMetrics m{0, 0, 0, 0, 0, 0, 0};
  std::size_t count = 0;
  for (std::size_t i = 0; i < pred.numel(); ++i) {
    if (mask.data[i] <= T(0)) continue;
    const double d = pred.data[i], g = gt.data[i];
    ++count;
    m.abs_rel += std::abs(d - g) / g;
    m.sq_rel += (d - g) * (d - g) / g;
    m.rmse += (d - g) * (d - g);
    m.rms_log += (std::log(d) - std::log(g)) * (std::log(d) - std::log(g));
    const double ratio = std::max(d / g, g / d);
    if (ratio < 1.25) m.d1 += 1;
    if (ratio < 1.25 * 1.25) m.d2 += 1;
    if (ratio < 1.25 * 1.25 * 1.25) m.d3 += 1;
  }
  m.abs_rel /= count;
  m.sq_rel /= count;
  m.rmse = std::sqrt(m.rmse / count);
  m.rms_log = std::sqrt(m.rms_log / count);
  m.d1 = 100.0 * m.d1 / count;
  m.d2 = 100.0 * m.d2 / count;
  m.d3 = 100.0 * m.d3 / count;
  return m;
}

#define ODE_INSTANTIATE(T)                                                                      \
  template void matmul<T>(const T*, const T*, T*, int, int, int);                               \
  template Tensor<T> conv2d_direct<T>(const Tensor<T>&, const Tensor<T>&, const T*, int, int,   \
                                      PadMode);                                                 \
  template Tensor<T> tconv2d_direct<T>(const Tensor<T>&, const Tensor<T>&, const T*, int);      \
  template void im2col_naive<T>(const T*, int, int, int, int, int, int, PadMode,                \
                                ColumnBuffer<T>&);                                              \
  template double bilinear_scalar<T>(const T*, int, int, double, double, WrapPolicy);           \
  template Tensor<T> cspn_step_8neighbor<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, \
                                            const Tensor<T>&);                                  \
  template NaiveMetrics metrics_naive<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);

ODE_INSTANTIATE(float)
ODE_INSTANTIATE(double)
#undef ODE_INSTANTIATE

}  // namespace ode::ref
