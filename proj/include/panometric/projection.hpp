// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <utility>

#include "panometric/geometry.hpp"
#include "panometric/image.hpp"

namespace panometric {

// Perspective camera for equirect <-> perspective warps. Right-handed frame,
// z forward, x right, y toward increasing elevation (downward image rows);
// yaw rotates about y, then pitch about the camera x axis.
struct ViewSpec {
  double yaw = 0.0;     // radians
  double pitch = 0.0;   // radians, |pitch| <= pi/2
  double fov = 0.0;     // radians, strictly inside (0, pi)
  int out_size = 0;     // square output, pixels
};

void require_view(const ViewSpec& view);

// Sphere direction seen through continuous output position (a, b) in [0, P].
SphereCoord perspective_ray(const ViewSpec& view, double a, double b);

// Gnomonic projection of a 2:1 panorama to a square perspective image.
Image equirect_to_perspective(const Image& pano, const ViewSpec& view,
                              WrapMode wrap = WrapMode::Wrap,
                              SampleMode mode = SampleMode::Bilinear);

// Inverse warp: panorama pixels inside the view frustum sample the image and
// are marked known; everything else is zero-filled and unknown.
std::pair<Image, Mask> perspective_to_equirect(const Image& img, const ViewSpec& view,
                                               int width, int height,
                                               SampleMode mode = SampleMode::Bilinear);

// The known/unknown mask of perspective_to_equirect, without resampling.
Mask make_nfov_mask(const ViewSpec& view, int width, int height);

// Solid-angle weighted fraction of known mask pixels (row weight cos(elevation)).
double mask_solid_angle_fraction(const Mask& mask);

}  // namespace panometric
