// SPDX-License-Identifier: Apache-2.0
#include "panometric/geometry.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "panometric/error.hpp"
#include "panometric/parallel.hpp"

namespace panometric {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kHalfPi = std::numbers::pi / 2.0;
}  // namespace

void require_pano_dims(int width, int height) {
  if (width < 2 || height < 1 || width != 2 * height) {
    throw ValidationError("panorama dimensions must satisfy W = 2H, W >= 2; got " +
                          std::to_string(width) + "x" + std::to_string(height));
  }
}

SphereCoord pixel_to_sphere(int i, int j, int width, int height) {
  require_pano_dims(width, height);
  if (i < 0 || i >= width || j < 0 || j >= height) {
    throw ValidationError("pixel (" + std::to_string(i) + "," + std::to_string(j) +
                          ") outside " + std::to_string(width) + "x" + std::to_string(height));
  }
  double u = 2.0 * i / width - 1.0;
  double v = 2.0 * j / height - 1.0;
  return {u * kPi, v * kHalfPi};
}

PixelPos sphere_to_pixel(const SphereCoord& c, int width, int height) {
  require_pano_dims(width, height);
  if (c.azimuth < -kPi || c.azimuth > kPi || c.elevation < -kHalfPi || c.elevation > kHalfPi) {
    throw ValidationError("sphere coordinate out of range");
  }
  double x = (c.azimuth / kPi + 1.0) * width / 2.0;
  double y = (c.elevation / kHalfPi + 1.0) * height / 2.0;
  // The contract is "exact inverse of pixel_to_sphere on its lattice", which
  // a divide cannot guarantee bitwise. If the input is exactly the image of a
  // lattice point, return that point.
  double xi = std::round(x);
  if (xi >= 0.0 && xi < width && (2.0 * xi / width - 1.0) * kPi == c.azimuth) x = xi;
  double yj = std::round(y);
  if (yj >= 0.0 && yj < height && (2.0 * yj / height - 1.0) * kHalfPi == c.elevation) y = yj;
  return {x, y};
}

DistortionMap build_distortion_map(int width, int height) {
  require_pano_dims(width, height);
  DistortionMap map;
  map.width = width;
  map.height = height;
  map.data.resize(static_cast<std::size_t>(width) * height * 4);
  parallel_for(static_cast<std::size_t>(height), [&](std::size_t j) {
    double v = 2.0 * static_cast<double>(j) / height - 1.0;
    double sv = std::sin(kPi * v);
    double cv = std::cos(kPi * v);
    for (int i = 0; i < width; ++i) {
      double u = 2.0 * i / width - 1.0;
      double* px = &map.data[(j * width + i) * 4];
      px[0] = std::sin(kPi * u);
      px[1] = std::cos(kPi * u);
      px[2] = sv;
      px[3] = cv;
    }
  });
  return map;
}

DistortionMap downsample_distortion_map(const DistortionMap& map, int factor) {
  if (factor < 1 || map.width % factor != 0 || map.height % factor != 0) {
    throw ValidationError("downsample factor must divide both map dimensions");
  }
  DistortionMap out;
  out.width = map.width / factor;
  out.height = map.height / factor;
  out.data.assign(static_cast<std::size_t>(out.width) * out.height * 4, 0.0);
  double inv = 1.0 / (static_cast<double>(factor) * factor);
  for (int j = 0; j < out.height; ++j) {
    for (int i = 0; i < out.width; ++i) {
      double acc[4] = {0, 0, 0, 0};
      for (int dj = 0; dj < factor; ++dj) {
        for (int di = 0; di < factor; ++di) {
          for (int c = 0; c < 4; ++c) acc[c] += map.at(i * factor + di, j * factor + dj, c);
        }
      }
      for (int c = 0; c < 4; ++c) acc[c] *= inv;
      // averaging shrinks (sin, cos) pairs below the unit circle; rescale
      for (int pair = 0; pair < 2; ++pair) {
        double s = acc[2 * pair], cc = acc[2 * pair + 1];
        double norm = std::sqrt(s * s + cc * cc);
        if (norm > 0.0) {
          acc[2 * pair] = s / norm;
          acc[2 * pair + 1] = cc / norm;
        } else {
          acc[2 * pair] = 0.0;
          acc[2 * pair + 1] = 1.0;
        }
      }
      for (int c = 0; c < 4; ++c) out.at(i, j, c) = acc[c];
    }
  }
  return out;
}

}  // namespace panometric
