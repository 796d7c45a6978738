#include "ode/sampling.hpp"

#include <algorithm>
#include <cmath>

namespace ode {

namespace {

thread_local std::size_t g_im2col_bytes = 0;
thread_local std::size_t g_deform_bytes = 0;

inline int mod(int a, int m) {
  int r = a % m;
  return r < 0 ? r + m : r;
}

struct Corner {
  int row, col;
  bool valid;
};

inline Corner corner(int row, int col, int h, int w, WrapPolicy policy) {
  Corner c{0, 0, true};
  switch (policy) {
    case WrapPolicy::Clamp:
      c.row = std::clamp(row, 0, h - 1);
      c.col = std::clamp(col, 0, w - 1);
      break;
    case WrapPolicy::PanoramaZeroV:
      if (row < 0 || row >= h) {
        c.valid = false;
        break;
      }
      c.row = row;
      c.col = mod(col, w);
      break;
    case WrapPolicy::Sphere: {
      // Latitude period is 2h; the mirrored half lies on the far meridian.
      int r2 = mod(row, 2 * h);
      int cc = mod(col, w);
      if (r2 >= h) {
        r2 = 2 * h - 1 - r2;
        cc = mod(cc + w / 2, w);
      }
      c.row = r2;
      c.col = cc;
      break;
    }
  }
  return c;
}

struct BilinearCell {
  Corner c00, c01, c10, c11;
  double fr, fc;  // fractional parts
};

inline BilinearCell cell_at(double row, double col, int h, int w, WrapPolicy policy) {
  if (!std::isfinite(row) || !std::isfinite(col))
    throw NumericError("bilinear_sample: non-finite coordinate");
  const double rf = std::floor(row), cf = std::floor(col);
  const int r0 = static_cast<int>(rf), c0 = static_cast<int>(cf);
  BilinearCell cell;
  cell.fr = row - rf;
  cell.fc = col - cf;
  cell.c00 = corner(r0, c0, h, w, policy);
  cell.c01 = corner(r0, c0 + 1, h, w, policy);
  cell.c10 = corner(r0 + 1, c0, h, w, policy);
  cell.c11 = corner(r0 + 1, c0 + 1, h, w, policy);
  return cell;
}

template <typename T>
inline T fetch(const T* plane, const Corner& c, int w) {
  return c.valid ? plane[static_cast<std::size_t>(c.row) * w + c.col] : T(0);
}

}  // namespace

bool resolve_corner(int row, int col, int h, int w, WrapPolicy policy, int& out_row,
                    int& out_col) {
  Corner c = corner(row, col, h, w, policy);
  out_row = c.row;
  out_col = c.col;
  return c.valid;
}

SamplingGrid ig_sampling_grid(const EquirectGrid& g, int k, double step) {
  if (k < 1 || k % 2 == 0) throw ConfigError("ig_sampling_grid: kernel size must be odd");
  if (step <= 0.0) step = kPi / g.h;  // angular pixel pitch
  SamplingGrid grid;
  grid.h = g.h;
  grid.w = g.w;
  grid.k = k;
  grid.step = step;
  grid.policy = WrapPolicy::Sphere;
  grid.spherical = true;
  grid.coords.resize(static_cast<std::size_t>(g.h) * g.w * k * k * 2);
  const int r = k / 2;
#pragma omp parallel for schedule(static) num_threads(num_threads())
  for (int i = 0; i < g.h; ++i) {
    for (int j = 0; j < g.w; ++j) {
      const SphereCoord t = pixel_to_sphere(g, i, j);
      double* dst = grid.coords.data() + (static_cast<std::size_t>(i) * g.w + j) * k * k * 2;
      for (int a = 0; a < k; ++a) {
        for (int b = 0; b < k; ++b) {
          const TangentCoord s{(b - r) * step, -(a - r) * step};
          const ProjectedTap tap = project_tangent_tap(g, t, s);
          dst[(a * k + b) * 2 + 0] = tap.row;
          dst[(a * k + b) * 2 + 1] = tap.col;
        }
      }
    }
  }
  return grid;
}

SamplingGrid planar_grid(int h, int w, int k, WrapPolicy policy) {
  if (k < 1 || k % 2 == 0) throw ConfigError("planar_grid: kernel size must be odd");
  SamplingGrid grid;
  grid.h = h;
  grid.w = w;
  grid.k = k;
  grid.step = 1.0;
  grid.policy = policy;
  grid.spherical = false;
  grid.coords.resize(static_cast<std::size_t>(h) * w * k * k * 2);
  const int r = k / 2;
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) {
      double* dst = grid.coords.data() + (static_cast<std::size_t>(i) * w + j) * k * k * 2;
      for (int a = 0; a < k; ++a)
        for (int b = 0; b < k; ++b) {
          dst[(a * k + b) * 2 + 0] = i + a - r;
          dst[(a * k + b) * 2 + 1] = j + b - r;
        }
    }
  return grid;
}

template <typename T>
void bilinear_sample(const T* features, int c, int h, int w, double row, double col,
                     WrapPolicy policy, T* out) {
  const BilinearCell cell = cell_at(row, col, h, w, policy);
  const T w00 = static_cast<T>((1.0 - cell.fr) * (1.0 - cell.fc));
  const T w01 = static_cast<T>((1.0 - cell.fr) * cell.fc);
  const T w10 = static_cast<T>(cell.fr * (1.0 - cell.fc));
  const T w11 = static_cast<T>(cell.fr * cell.fc);
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  for (int ch = 0; ch < c; ++ch) {
    const T* p = features + ch * plane;
    out[ch] = w00 * fetch(p, cell.c00, w) + w01 * fetch(p, cell.c01, w) +
              w10 * fetch(p, cell.c10, w) + w11 * fetch(p, cell.c11, w);
  }
}

template <typename T>
std::vector<T> bilinear_sample(const Tensor<T>& features, double row, double col,
                               WrapPolicy policy) {
  if (features.shape.size() != 4 || features.dim(0) != 1)
    throw ConfigError("bilinear_sample: expects a 1xCxHxW tensor");
  std::vector<T> out(features.dim(1));
  bilinear_sample(features.data.data(), features.dim(1), features.dim(2), features.dim(3), row,
                  col, policy, out.data());
  return out;
}

template <typename T>
void bilinear_coord_grad(const T* features, int c, int h, int w, double row, double col,
                         WrapPolicy policy, const T* dout, double& drow, double& dcol) {
  const BilinearCell cell = cell_at(row, col, h, w, policy);
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  drow = dcol = 0.0;
  for (int ch = 0; ch < c; ++ch) {
    const T* p = features + ch * plane;
    const double v00 = fetch(p, cell.c00, w), v01 = fetch(p, cell.c01, w);
    const double v10 = fetch(p, cell.c10, w), v11 = fetch(p, cell.c11, w);
    const double d = dout[ch];
    drow += d * ((1.0 - cell.fc) * (v10 - v00) + cell.fc * (v11 - v01));
    dcol += d * ((1.0 - cell.fr) * (v01 - v00) + cell.fr * (v11 - v10));
  }
}

template <typename T>
void im2col(const T* x, int c, int h, int w, int k, int stride, int pad, PadMode mode,
            ColumnBuffer<T>& out) {
  if (k < 1 || k % 2 == 0) throw ConfigError("im2col: kernel size must be odd");
  const int oh = (h + 2 * pad - k) / stride + 1;
  const int ow = (w + 2 * pad - k) / stride + 1;
  if (oh < 1 || ow < 1) throw ConfigError("im2col: output size < 1");
  out.resize(c * k * k, oh * ow);
  g_im2col_bytes = out.bytes();
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  const int rows = c * k * k;
  // Each column-buffer row is the image shifted by one tap offset.
#pragma omp parallel for schedule(static) num_threads(num_threads())
  for (int rr = 0; rr < rows; ++rr) {
    const int ch = rr / (k * k);
    const int a = (rr / k) % k;
    const int b = rr % k;
    const T* src = x + ch * plane;
    T* dst = out.row(rr);
    for (int oi = 0; oi < oh; ++oi) {
      const int si = oi * stride - pad + a;
      const bool row_ok = si >= 0 && si < h;
      for (int oj = 0; oj < ow; ++oj) {
        T v = T(0);
        if (row_ok) {
          int sj = oj * stride - pad + b;
          if (mode == PadMode::ZeroVWrapH)
            v = src[static_cast<std::size_t>(si) * w + mod(sj, w)];
          else if (sj >= 0 && sj < w)
            v = src[static_cast<std::size_t>(si) * w + sj];
        }
        dst[static_cast<std::size_t>(oi) * ow + oj] = v;
      }
    }
  }
}

template <typename T>
void col2im_accum(const ColumnBuffer<T>& dcol, int c, int h, int w, int k, int stride, int pad,
                  PadMode mode, T* dx) {
  const int oh = (h + 2 * pad - k) / stride + 1;
  const int ow = (w + 2 * pad - k) / stride + 1;
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  // Gather form: each input pixel sums the taps that read it, so threads own
  // disjoint outputs and the summation order is fixed.
#pragma omp parallel for schedule(static) num_threads(num_threads())
  for (int ch = 0; ch < c; ++ch) {
    T* dst = dx + ch * plane;
    for (int ii = 0; ii < h; ++ii) {
      for (int jj = 0; jj < w; ++jj) {
        T acc = T(0);
        for (int a = 0; a < k; ++a) {
          const int num = ii + pad - a;
          if (num < 0 || num % stride != 0) continue;
          const int oi = num / stride;
          if (oi >= oh) continue;
          for (int b = 0; b < k; ++b) {
            const int raw = jj + pad - b;
            const T* row = dcol.row((ch * k + a) * k + b);
            if (mode == PadMode::ZeroVWrapH) {
              for (int shift = -2; shift <= 2; ++shift) {
                const int cand = raw + shift * w;
                if (cand < 0 || cand % stride != 0) continue;
                const int oj = cand / stride;
                if (oj < ow) acc += row[static_cast<std::size_t>(oi) * ow + oj];
              }
            } else {
              if (raw < 0 || raw % stride != 0) continue;
              const int oj = raw / stride;
              if (oj < ow) acc += row[static_cast<std::size_t>(oi) * ow + oj];
            }
          }
        }
        dst[static_cast<std::size_t>(ii) * w + jj] += acc;
      }
    }
  }
}

namespace {

// Final fractional coordinates of one tap, with the Jacobian w.r.t. the
// learned delta when one is attached.
struct TapCoord {
  double row, col;
  double jrx, jry, jcx, jcy;
};

inline TapCoord resolve_tap(const SamplingGrid& grid, int i, int j, int tap, double d0, double d1,
                            DeformMode mode) {
  TapCoord out{0, 0, 0, 0, 0, 0};
  if (mode == DeformMode::Tangent) {
    if (!grid.spherical)
      throw ConfigError("deform_im2col: tangent deformation requires a spherical grid");
    const EquirectGrid g(grid.h, grid.w);
    const int r = grid.k / 2;
    const int a = tap / grid.k, b = tap % grid.k;
    const TangentCoord s{(b - r) * grid.step + d0, -(a - r) * grid.step + d1};
    const ProjectedTap p = project_tangent_tap(g, pixel_to_sphere(g, i, j), s);
    out.row = p.row;
    out.col = p.col;
    out.jrx = p.drow_dx;
    out.jry = p.drow_dy;
    out.jcx = p.dcol_dx;
    out.jcy = p.dcol_dy;
  } else {
    const double* base = grid.at(i, j) + tap * 2;
    out.row = base[0];
    out.col = base[1];
    if (mode == DeformMode::Pixel) {
      out.row += d0;
      out.col += d1;
      out.jrx = 1.0;
      out.jcy = 1.0;
    }
  }
  return out;
}

}  // namespace

template <typename T>
void deform_im2col(const T* x, int c, int h, int w, const SamplingGrid& grid, const T* offsets,
                   DeformMode mode, ColumnBuffer<T>& out) {
  if (grid.h != h || grid.w != w)
    throw ConfigError("deform_im2col: grid resolution does not match features");
  if (mode != DeformMode::None && offsets == nullptr)
    throw ConfigError("deform_im2col: deformation mode set but no offsets given");
  const int k2 = grid.taps();
  out.resize(c * k2, h * w);
  g_deform_bytes = out.bytes() + grid.bytes();
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  const std::size_t cols = plane;
#pragma omp parallel for schedule(static) num_threads(num_threads())
  for (int px = 0; px < static_cast<int>(plane); ++px) {
    const int i = px / w, j = px % w;
    for (int t = 0; t < k2; ++t) {
      double d0 = 0.0, d1 = 0.0;
      if (offsets) {
        d0 = offsets[(2 * t) * plane + px];
        d1 = offsets[(2 * t + 1) * plane + px];
      }
      const TapCoord tc = resolve_tap(grid, i, j, t, d0, d1, mode);
      const BilinearCell cell = cell_at(tc.row, tc.col, h, w, grid.policy);
      const T w00 = static_cast<T>((1.0 - cell.fr) * (1.0 - cell.fc));
      const T w01 = static_cast<T>((1.0 - cell.fr) * cell.fc);
      const T w10 = static_cast<T>(cell.fr * (1.0 - cell.fc));
      const T w11 = static_cast<T>(cell.fr * cell.fc);
      for (int ch = 0; ch < c; ++ch) {
        const T* p = x + ch * plane;
        out.m[(static_cast<std::size_t>(ch) * k2 + t) * cols + px] =
            w00 * fetch(p, cell.c00, w) + w01 * fetch(p, cell.c01, w) +
            w10 * fetch(p, cell.c10, w) + w11 * fetch(p, cell.c11, w);
      }
    }
  }
}

template <typename T>
void deform_im2col_backward(const ColumnBuffer<T>& dcol, const T* x, int c, int h, int w,
                            const SamplingGrid& grid, const T* offsets, DeformMode mode, T* dx,
                            T* doffsets) {
  if (grid.h != h || grid.w != w)
    throw ConfigError("deform_im2col_backward: grid resolution does not match features");
  const int k2 = grid.taps();
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  // Scatter into dx: sequential over pixels (callers parallelize over batch).
  for (std::size_t px = 0; px < plane; ++px) {
    const int i = static_cast<int>(px) / w, j = static_cast<int>(px) % w;
    for (int t = 0; t < k2; ++t) {
      double d0 = 0.0, d1 = 0.0;
      if (offsets) {
        d0 = offsets[(2 * t) * plane + px];
        d1 = offsets[(2 * t + 1) * plane + px];
      }
      const TapCoord tc = resolve_tap(grid, i, j, t, d0, d1, mode);
      const BilinearCell cell = cell_at(tc.row, tc.col, h, w, grid.policy);
      const double w00 = (1.0 - cell.fr) * (1.0 - cell.fc);
      const double w01 = (1.0 - cell.fr) * cell.fc;
      const double w10 = cell.fr * (1.0 - cell.fc);
      const double w11 = cell.fr * cell.fc;
      double drow = 0.0, dcol_g = 0.0;
      for (int ch = 0; ch < c; ++ch) {
        const T dval = dcol.m[(static_cast<std::size_t>(ch) * k2 + t) * plane + px];
        if (dval == T(0)) continue;
        T* gp = dx + ch * plane;
        if (cell.c00.valid) gp[static_cast<std::size_t>(cell.c00.row) * w + cell.c00.col] += static_cast<T>(w00) * dval;
        if (cell.c01.valid) gp[static_cast<std::size_t>(cell.c01.row) * w + cell.c01.col] += static_cast<T>(w01) * dval;
        if (cell.c10.valid) gp[static_cast<std::size_t>(cell.c10.row) * w + cell.c10.col] += static_cast<T>(w10) * dval;
        if (cell.c11.valid) gp[static_cast<std::size_t>(cell.c11.row) * w + cell.c11.col] += static_cast<T>(w11) * dval;
        if (doffsets) {
          const T* p = x + ch * plane;
          const double v00 = fetch(p, cell.c00, w), v01 = fetch(p, cell.c01, w);
          const double v10 = fetch(p, cell.c10, w), v11 = fetch(p, cell.c11, w);
          drow += dval * ((1.0 - cell.fc) * (v10 - v00) + cell.fc * (v11 - v01));
          dcol_g += dval * ((1.0 - cell.fr) * (v01 - v00) + cell.fr * (v11 - v10));
        }
      }
      if (doffsets) {
        doffsets[(2 * t) * plane + px] += static_cast<T>(drow * tc.jrx + dcol_g * tc.jcx);
        doffsets[(2 * t + 1) * plane + px] += static_cast<T>(drow * tc.jry + dcol_g * tc.jcy);
      }
    }
  }
}

std::size_t last_im2col_workspace_bytes() { return g_im2col_bytes; }
std::size_t last_deform_workspace_bytes() { return g_deform_bytes; }

#define ODE_INSTANTIATE(T)                                                                      \
  template void bilinear_sample<T>(const T*, int, int, int, double, double, WrapPolicy, T*);    \
  template std::vector<T> bilinear_sample<T>(const Tensor<T>&, double, double, WrapPolicy);     \
  template void bilinear_coord_grad<T>(const T*, int, int, int, double, double, WrapPolicy,     \
                                       const T*, double&, double&);                             \
  template void im2col<T>(const T*, int, int, int, int, int, int, PadMode, ColumnBuffer<T>&);   \
  template void col2im_accum<T>(const ColumnBuffer<T>&, int, int, int, int, int, int, PadMode,  \
                                T*);                                                            \
  template void deform_im2col<T>(const T*, int, int, int, const SamplingGrid&, const T*,        \
                                 DeformMode, ColumnBuffer<T>&);                                 \
  template void deform_im2col_backward<T>(const ColumnBuffer<T>&, const T*, int, int, int,      \
                                          const SamplingGrid&, const T*, DeformMode, T*, T*);

ODE_INSTANTIATE(float)
ODE_INSTANTIATE(double)
#undef ODE_INSTANTIATE

}  // namespace ode
