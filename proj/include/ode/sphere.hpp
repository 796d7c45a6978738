#pragma once

#include "ode/tensor.hpp"

namespace ode {

inline constexpr double kPi = 3.14159265358979323846;

/// Point on the unit sphere: latitude phi in [-pi/2, pi/2], longitude theta
/// normalized into [-pi, pi).
struct SphereCoord {
  double phi = 0.0;
  double theta = 0.0;
};

/// Point on the local tangent plane (unit sphere, so one unit of tangent
/// distance subtends 45 degrees of arc).
struct TangentCoord {
  double x = 0.0;
  double y = 0.0;
};

/// Equirectangular pixel lattice. Full panoramas satisfy w == 2h; row 0 is
/// the northernmost row and pixel centers sit at half-integer offsets.
struct EquirectGrid {
  int h = 0;
  int w = 0;
  EquirectGrid() = default;
  EquirectGrid(int h_, int w_) : h(h_), w(w_) {
    if (h < 1 || w < 1) throw ConfigError("equirect grid dims must be >= 1");
    if (w != 2 * h) throw ConfigError("equirect grid requires w == 2h");
  }
};

/// Pinhole frustum on the sphere; center defaults to the front view (0, 0).
struct PinholeFov {
  double hfov = 0.0;
  double vfov = 0.0;
  SphereCoord center{0.0, 0.0};
  PinholeFov() = default;
  PinholeFov(double hf, double vf, SphereCoord c = {0.0, 0.0}) : hfov(hf), vfov(vf), center(c) {
    if (!(hfov > 0.0 && hfov < kPi) || !(vfov > 0.0 && vfov < kPi))
      throw ConfigError("fov angles must lie in (0, pi)");
  }
};

/// Normalize a longitude into [-pi, pi).
double wrap_theta(double theta);

/// Unit direction: x = cos(phi)cos(theta), y = cos(phi)sin(theta), z = sin(phi).
void sphere_to_unit(const SphereCoord& p, double out[3]);

SphereCoord pixel_to_sphere(const EquirectGrid& g, double i, double j);
void sphere_to_pixel(const EquirectGrid& g, const SphereCoord& p, double& i, double& j);

/// Inverse gnomonic projection: map a tangent-plane point s, with the plane
/// touching the sphere at t, back onto the sphere. |s| below 1e-12 returns t
/// exactly (the analytic limit of the projection).
SphereCoord inverse_gnomonic(const SphereCoord& t, const TangentCoord& s);

/// Gnomonic projection of p onto the tangent plane at t. Throws NumericError
/// when p is 90 degrees or more away from t (undefined there).
TangentCoord forward_gnomonic(const SphereCoord& t, const SphereCoord& p);

/// Central angle between two sphere points, in radians.
double great_circle_distance(const SphereCoord& a, const SphereCoord& b);

/// Tangent tap pushed through inverse gnomonic projection and converted to
/// fractional pixel coordinates, with the Jacobian of (row, col) w.r.t. the
/// tangent offset attached for the deformation backward pass.
struct ProjectedTap {
  double row = 0.0, col = 0.0;
  double drow_dx = 0.0, drow_dy = 0.0;
  double dcol_dx = 0.0, dcol_dy = 0.0;
};
ProjectedTap project_tangent_tap(const EquirectGrid& g, const SphereCoord& t,
                                 const TangentCoord& s);

/// {0,1} mask of pixels whose rays fall inside the pinhole frustum, as a
/// 1x1xhxw tensor.
template <typename T>
Tensor<T> fov_mask(const EquirectGrid& g, const PinholeFov& fov);

}  // namespace ode
