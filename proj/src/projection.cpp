// SPDX-License-Identifier: Apache-2.0
#include "panometric/projection.hpp"

#include <cmath>
#include <utility>

#include "panometric/error.hpp"
#include "panometric/parallel.hpp"

namespace panometric {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Vec3 {
  double x, y, z;
};

// R_y(yaw) * R_x(pitch) applied to v: camera-to-world.
Vec3 rotate_cam_to_world(const Vec3& v, double yaw, double pitch) {
  const double cp = std::cos(pitch), sp = std::sin(pitch);
  const double cy = std::cos(yaw), sy = std::sin(yaw);
  const double y1 = cp * v.y - sp * v.z;
  const double z1 = sp * v.y + cp * v.z;
  return {cy * v.x + sy * z1, y1, -sy * v.x + cy * z1};
}

}  // namespace

void require_view(const ViewSpec& view) {
  if (!(view.fov > 0.0) || !(view.fov < kPi))
    throw ValidationError("view fov must lie strictly inside (0, pi)");
  if (!(std::fabs(view.pitch) <= kPi / 2.0))
    throw ValidationError("view pitch must satisfy |pitch| <= pi/2");
  if (view.out_size < 1) throw ValidationError("view out_size must be >= 1");
}

SphereCoord perspective_ray(const ViewSpec& view, double a, double b) {
  require_view(view);
  const double t = std::tan(view.fov / 2.0);
  const double p = view.out_size;
  const Vec3 cam{(2.0 * a / p - 1.0) * t, (2.0 * b / p - 1.0) * t, 1.0};
  const Vec3 w = rotate_cam_to_world(cam, view.yaw, view.pitch);
  const double norm = std::sqrt(w.x * w.x + w.y * w.y + w.z * w.z);
  return {std::atan2(w.x, w.z), std::asin(w.y / norm)};
}

Image equirect_to_perspective(const Image& pano, const ViewSpec& view,
                              WrapMode wrap, SampleMode mode) {
  require_view(view);
  require_pano_dims(pano.width, pano.height);
  const int p = view.out_size;
  Image out(p, p, pano.channels);
  parallel_for(p, [&](int b) {
    for (int a = 0; a < p; ++a) {
      const SphereCoord s = perspective_ray(view, a, b);
      const double x = (s.azimuth / kPi + 1.0) * pano.width / 2.0;
      const double y = (s.elevation / (kPi / 2.0) + 1.0) * pano.height / 2.0;
      for (int c = 0; c < pano.channels; ++c)
        out.at(a, b, c) = sample_image(pano, x, y, c, wrap, mode);
    }
  });
  return out;
}

namespace {

// Shared frustum kernel. Yaw is removed in normalized azimuth units so that
// dyadic yaw multiples of a column stride stay bitwise-exact column shifts.
struct FrustumHit {
  bool inside;
  double a, b;  // continuous source position in [0, out_size]
};

FrustumHit project_pano_pixel(int i, int j, int width, int height, const ViewSpec& view) {
  const double t = std::tan(view.fov / 2.0);
  double u = 2.0 * i / width - 1.0 - view.yaw / kPi;
  while (u < -1.0) u += 2.0;
  while (u >= 1.0) u -= 2.0;
  const double az = kPi * u;
  const double el = (kPi / 2.0) * (2.0 * j / height - 1.0);
  const double ce = std::cos(el);
  const Vec3 d{ce * std::sin(az), std::sin(el), ce * std::cos(az)};
  const double cp = std::cos(view.pitch), sp = std::sin(view.pitch);
  const Vec3 cam{d.x, cp * d.y - sp * d.z, sp * d.y + cp * d.z};
  if (!(cam.z > 0.0)) return {false, 0.0, 0.0};
  const double px = cam.x / cam.z;
  const double py = cam.y / cam.z;
  if (std::fabs(px) > t || std::fabs(py) > t) return {false, 0.0, 0.0};
  const double half = view.out_size / 2.0;
  return {true, (px / t + 1.0) * half, (py / t + 1.0) * half};
}

}  // namespace

std::pair<Image, Mask> perspective_to_equirect(const Image& img, const ViewSpec& view,
                                               int width, int height, SampleMode mode) {
  require_view(view);
  require_pano_dims(width, height);
  if (img.width != view.out_size || img.height != view.out_size)
    throw ValidationError("perspective image does not match view out_size");
  Image pano(width, height, img.channels);
  Mask mask(width, height);
  parallel_for(height, [&](int j) {
    for (int i = 0; i < width; ++i) {
      const FrustumHit hit = project_pano_pixel(i, j, width, height, view);
      if (!hit.inside) continue;
      mask.set(i, j, true);
      for (int c = 0; c < img.channels; ++c)
        pano.at(i, j, c) = sample_image(img, hit.a, hit.b, c, WrapMode::Clamp, mode);
    }
  });
  return {std::move(pano), std::move(mask)};
}

Mask make_nfov_mask(const ViewSpec& view, int width, int height) {
  require_view(view);
  require_pano_dims(width, height);
  Mask mask(width, height);
  parallel_for(height, [&](int j) {
    for (int i = 0; i < width; ++i)
      if (project_pano_pixel(i, j, width, height, view).inside) mask.set(i, j, true);
  });
  return mask;
}

double mask_solid_angle_fraction(const Mask& mask) {
  double num = 0.0, den = 0.0;
  for (int j = 0; j < mask.height; ++j) {
    const double el = (kPi / 2.0) * (2.0 * j / mask.height - 1.0);
    const double w = std::cos(el);
    int row = 0;
    for (int i = 0; i < mask.width; ++i) row += mask.at(i, j) ? 1 : 0;
    num += w * row;
    den += w * mask.width;
  }
  return den > 0.0 ? num / den : 0.0;
}

}  // namespace panometric
