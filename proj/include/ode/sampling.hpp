#pragma once

#include "ode/sphere.hpp"
#include "ode/tensor.hpp"

namespace ode {

/// How out-of-range source coordinates are resolved.
///  Sphere:        longitude wraps; latitude overshoot reflects across the
///                 pole with a half-turn longitude shift.
///  PanoramaZeroV: longitude wraps; rows outside the image read as zero
///                 (matches the planar convolution padding).
///  Clamp:         clamp both axes.
enum class WrapPolicy { Sphere, PanoramaZeroV, Clamp };

/// Per-output-pixel fractional source coordinates, k*k taps each, laid out
/// (row, col) per tap in row-major tap order.
struct SamplingGrid {
  int h = 0, w = 0, k = 0;
  double step = 0.0;  // tangent-plane tap spacing (spherical grids)
  WrapPolicy policy = WrapPolicy::Sphere;
  bool spherical = false;
  std::vector<double> coords;  // h*w*k*k*2

  int taps() const { return k * k; }
  std::size_t bytes() const { return coords.size() * sizeof(double); }
  const double* at(int i, int j) const {
    return coords.data() + (static_cast<std::size_t>(i) * w + j) * taps() * 2;
  }
};

/// Spherical grid: the k*k tangent-plane stencil (spacing `step`, default the
/// angular pixel pitch pi/h) pushed through inverse gnomonic projection at
/// every pixel. Tap order is row-major over (dy, dx) with y up north.
SamplingGrid ig_sampling_grid(const EquirectGrid& g, int k, double step = 0.0);

/// Planar integer stencil grid (degenerates deform_im2col to im2col).
SamplingGrid planar_grid(int h, int w, int k, WrapPolicy policy = WrapPolicy::PanoramaZeroV);

/// Resolve an integer (row, col) corner index under a wrap policy.
/// Returns false when the corner reads as zero (PanoramaZeroV outside rows).
bool resolve_corner(int row, int col, int h, int w, WrapPolicy policy, int& out_row,
                    int& out_col);

/// Bilinear fetch of all channels at one fractional location; out has c slots.
/// The sub-gradient at integer coordinates takes the right-continuous branch
/// (floor cell).
template <typename T>
void bilinear_sample(const T* features, int c, int h, int w, double row, double col,
                     WrapPolicy policy, T* out);

/// Convenience wrapper over a 1xCxHxW tensor.
template <typename T>
std::vector<T> bilinear_sample(const Tensor<T>& features, double row, double col,
                               WrapPolicy policy);

/// d(output)/d(row), d(output)/d(col) summed against a per-channel weight
/// vector; used by tests and the deformation backward.
template <typename T>
void bilinear_coord_grad(const T* features, int c, int h, int w, double row, double col,
                         WrapPolicy policy, const T* dout, double& drow, double& dcol);

/// Unfolded patches: rows = c*k*k, cols = output pixels, per batch element.
template <typename T>
struct ColumnBuffer {
  int rows = 0, cols = 0;
  std::vector<T> m;
  void resize(int r, int c) {
    rows = r;
    cols = c;
    m.assign(static_cast<std::size_t>(r) * c, T(0));
  }
  T* row(int r) { return m.data() + static_cast<std::size_t>(r) * cols; }
  const T* row(int r) const { return m.data() + static_cast<std::size_t>(r) * cols; }
  std::size_t bytes() const { return m.size() * sizeof(T); }
};

enum class PadMode { Zero, ZeroVWrapH };

/// Integer-offset unfolding of one c x h x w slab. Exact (no interpolation).
template <typename T>
void im2col(const T* x, int c, int h, int w, int k, int stride, int pad, PadMode mode,
            ColumnBuffer<T>& out);

/// Adjoint of im2col: gathers dcol back into dx (+=), one c x h x w slab.
template <typename T>
void col2im_accum(const ColumnBuffer<T>& dcol, int c, int h, int w, int k, int stride, int pad,
                  PadMode mode, T* dx);

/// Where learned deltas are applied:
///  None:    sample exactly at the grid coordinates.
///  Tangent: deltas are tangent-plane offsets added before the projection
///           (2 channels per tap: x, y).
///  Pixel:   deltas are pixel-space offsets added to the projected
///           coordinates (2 channels per tap: row, col).
enum class DeformMode { None, Tangent, Pixel };

/// Fractional unfolding: every tap bilinearly sampled at the grid coordinate
/// plus an optional learned delta. `offsets` is 2*k*k x h x w or null.
template <typename T>
void deform_im2col(const T* x, int c, int h, int w, const SamplingGrid& grid, const T* offsets,
                   DeformMode mode, ColumnBuffer<T>& out);

/// Backward of deform_im2col: scatters feature gradients into dx (+=) and,
/// when doffsets is non-null, accumulates per-tap coordinate gradients.
template <typename T>
void deform_im2col_backward(const ColumnBuffer<T>& dcol, const T* x, int c, int h, int w,
                            const SamplingGrid& grid, const T* offsets, DeformMode mode, T* dx,
                            T* doffsets);

/// Workspace bytes allocated by the most recent im2col / deform_im2col call
/// on this thread (column buffer plus, for the deformed path, the grid and
/// per-tap coordinate storage). Feeds the bench reports.
std::size_t last_im2col_workspace_bytes();
std::size_t last_deform_workspace_bytes();

}  // namespace ode
