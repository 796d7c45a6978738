#include "ode/sphere.hpp"

#include <algorithm>
#include <cmath>

namespace ode {

double wrap_theta(double theta) {
  double t = std::fmod(theta + kPi, 2.0 * kPi);
  if (t < 0.0) t += 2.0 * kPi;
  return t - kPi;
}

void sphere_to_unit(const SphereCoord& p, double out[3]) {
  const double cp = std::cos(p.phi);
  out[0] = cp * std::cos(p.theta);
  out[1] = cp * std::sin(p.theta);
  out[2] = std::sin(p.phi);
}

SphereCoord pixel_to_sphere(const EquirectGrid& g, double i, double j) {
  SphereCoord p;
  p.phi = kPi / 2.0 - (i + 0.5) * kPi / g.h;
  p.theta = wrap_theta(-kPi + (j + 0.5) * 2.0 * kPi / g.w);
  return p;
}

void sphere_to_pixel(const EquirectGrid& g, const SphereCoord& p, double& i, double& j) {
  i = (kPi / 2.0 - p.phi) * g.h / kPi - 0.5;
  j = (wrap_theta(p.theta) + kPi) * g.w / (2.0 * kPi) - 0.5;
}

// The tangent-plane point (x, y) at tangent point t is the 3-D point
// f + x*e + y*n (f = unit(t), e = east, n = north); normalizing it back onto
// the sphere is algebraically identical to the textbook inverse gnomonic
// formulas with rho = |s| and phi_v = arctan(rho).
SphereCoord inverse_gnomonic(const SphereCoord& t, const TangentCoord& s) {
  const double rho = std::hypot(s.x, s.y);
  if (rho < 1e-12) return {t.phi, wrap_theta(t.theta)};
  const double sp = std::sin(t.phi), cp = std::cos(t.phi);
  const double st = std::sin(t.theta), ct = std::cos(t.theta);
  const double px = cp * ct - s.x * st - s.y * sp * ct;
  const double py = cp * st + s.x * ct - s.y * sp * st;
  const double pz = sp + s.y * cp;
  const double r = std::sqrt(1.0 + s.x * s.x + s.y * s.y);
  SphereCoord out;
  out.phi = std::asin(std::clamp(pz / r, -1.0, 1.0));
  out.theta = wrap_theta(std::atan2(py, px));
  return out;
}

TangentCoord forward_gnomonic(const SphereCoord& t, const SphereCoord& p) {
  const double dtheta = p.theta - t.theta;
  const double cosc = std::sin(t.phi) * std::sin(p.phi) +
                      std::cos(t.phi) * std::cos(p.phi) * std::cos(dtheta);
  if (cosc <= 1e-12)
    throw NumericError("forward_gnomonic: point at or beyond 90 degrees from tangent point");
  TangentCoord s;
  s.x = std::cos(p.phi) * std::sin(dtheta) / cosc;
  s.y = (std::cos(t.phi) * std::sin(p.phi) -
         std::sin(t.phi) * std::cos(p.phi) * std::cos(dtheta)) /
        cosc;
  return s;
}

double great_circle_distance(const SphereCoord& a, const SphereCoord& b) {
  double ua[3], ub[3];
  sphere_to_unit(a, ua);
  sphere_to_unit(b, ub);
  const double dot = ua[0] * ub[0] + ua[1] * ub[1] + ua[2] * ub[2];
  return std::acos(std::clamp(dot, -1.0, 1.0));
}

ProjectedTap project_tangent_tap(const EquirectGrid& g, const SphereCoord& t,
                                 const TangentCoord& s) {
  ProjectedTap tap;
  const double sp = std::sin(t.phi), cp = std::cos(t.phi);
  const double rho = std::hypot(s.x, s.y);
  const double row_per_phi = -g.h / kPi;
  const double col_per_theta = g.w / (2.0 * kPi);
  if (rho < 1e-12) {
    // Exact tangent point; Jacobian is the analytic limit at s = 0.
    sphere_to_pixel(g, t, tap.row, tap.col);
    tap.drow_dy = row_per_phi;
    tap.dcol_dx = cp > 1e-30 ? col_per_theta / cp : 0.0;
    return tap;
  }
  const double st = std::sin(t.theta), ct = std::cos(t.theta);
  const double ex = -st, ey = ct;                    // east basis (z component 0)
  const double nx = -sp * ct, ny = -sp * st, nz = cp;  // north basis
  const double px = cp * ct + s.x * ex + s.y * nx;
  const double py = cp * st + s.x * ey + s.y * ny;
  const double pz = sp + s.y * nz;
  const double r2 = 1.0 + s.x * s.x + s.y * s.y;
  const double r = std::sqrt(r2);

  SphereCoord q;
  q.phi = std::asin(std::clamp(pz / r, -1.0, 1.0));
  q.theta = wrap_theta(std::atan2(py, px));
  sphere_to_pixel(g, q, tap.row, tap.col);

  // phi = asin(pz/r): dphi = (r*dpz - pz*dr/ .. ) / (r^2 cos(phi)), with
  // cos(phi) = sqrt(px^2 + py^2)/r and dr/ds = s/r.
  const double horiz = std::sqrt(px * px + py * py);
  if (horiz > 1e-30) {
    const double dphi_dx = (0.0 * r - pz * (s.x / r)) / (r * horiz);
    const double dphi_dy = (nz * r - pz * (s.y / r)) / (r * horiz);
    const double inv_h2 = 1.0 / (px * px + py * py);
    const double dtheta_dx = (px * ey - py * ex) * inv_h2;
    const double dtheta_dy = (px * ny - py * nx) * inv_h2;
    tap.drow_dx = row_per_phi * dphi_dx;
    tap.drow_dy = row_per_phi * dphi_dy;
    tap.dcol_dx = col_per_theta * dtheta_dx;
    tap.dcol_dy = col_per_theta * dtheta_dy;
  }
  return tap;
}

template <typename T>
Tensor<T> fov_mask(const EquirectGrid& g, const PinholeFov& fov) {
  // Camera frame at the frustum center: forward f, right = z_hat x f, up = f x right.
  double f[3];
  sphere_to_unit(fov.center, f);
  const double horiz = std::hypot(f[0], f[1]);
  if (horiz < 1e-12) throw ConfigError("fov_mask: frustum centered on a pole is unsupported");
  double rax = -f[1] / horiz, ray = f[0] / horiz;  // z_hat x f, normalized (z comp 0)
  double ux = f[1] * 0.0 - f[2] * ray, uy = f[2] * rax - f[0] * 0.0,
         uz = f[0] * ray - f[1] * rax;

  Tensor<T> mask({1, 1, g.h, g.w});
  const double half_h = fov.hfov / 2.0, half_v = fov.vfov / 2.0;
#pragma omp parallel for schedule(static) num_threads(num_threads())
  for (int i = 0; i < g.h; ++i) {
    for (int j = 0; j < g.w; ++j) {
      double d[3];
      sphere_to_unit(pixel_to_sphere(g, i, j), d);
      const double fwd = d[0] * f[0] + d[1] * f[1] + d[2] * f[2];
      if (fwd <= 0.0) continue;
      const double right = d[0] * rax + d[1] * ray;
      const double up = d[0] * ux + d[1] * uy + d[2] * uz;
      if (std::abs(std::atan2(right, fwd)) <= half_h && std::abs(std::atan2(up, fwd)) <= half_v)
        mask.at(0, 0, i, j) = T(1);
    }
  }
  return mask;
}

template Tensor<float> fov_mask<float>(const EquirectGrid&, const PinholeFov&);
template Tensor<double> fov_mask<double>(const EquirectGrid&, const PinholeFov&);

}  // namespace ode
