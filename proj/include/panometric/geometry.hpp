// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

namespace panometric {

// Direction on the unit sphere. Azimuth in [-pi, pi] along the width axis of
// a 2:1 equirectangular image, elevation in [-pi/2, pi/2] along the height
// axis. Azimuth -pi and +pi name the same meridian.
struct SphereCoord {
  double azimuth = 0.0;
  double elevation = 0.0;
};

// Per-pixel positional field of a 2:1 panorama. Channels per pixel are
// (sin(pi*u), cos(pi*u), sin(pi*v), cos(pi*v)) with u = 2i/W - 1 and
// v = 2j/H - 1, so the horizontal seam is continuous and every (sin, cos)
// pair lies on the unit circle.
struct DistortionMap {
  int width = 0;
  int height = 0;
  std::vector<double> data;  // height * width * 4, interleaved per pixel

  double at(int i, int j, int c) const {
    return data[(static_cast<std::size_t>(j) * width + i) * 4 + c];
  }
  double& at(int i, int j, int c) {
    return data[(static_cast<std::size_t>(j) * width + i) * 4 + c];
  }
};

// Throws ValidationError unless W == 2*H and W >= 2.
void require_pano_dims(int width, int height);

// Corner-anchored pixel to sphere: azimuth = (2i/W - 1)*pi,
// elevation = (2j/H - 1)*pi/2. Requires 0 <= i < W, 0 <= j < H, W = 2H.
SphereCoord pixel_to_sphere(int i, int j, int width, int height);

// Continuous inverse of pixel_to_sphere. On the image of the pixel lattice it
// returns the integer position exactly; elsewhere the affine formula.
struct PixelPos {
  double x = 0.0;
  double y = 0.0;
};
PixelPos sphere_to_pixel(const SphereCoord& c, int width, int height);

// Builds the 4-channel positional field for a W x H (W = 2H) panorama.
DistortionMap build_distortion_map(int width, int height);

// Area-averages each channel over factor x factor cells, then renormalizes
// each (sin, cos) pair back to unit norm. factor must divide both dimensions.
DistortionMap downsample_distortion_map(const DistortionMap& map, int factor);

}  // namespace panometric
