// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "panometric/contrastive.hpp"
#include "panometric/image.hpp"
#include "panometric/projection.hpp"

namespace panometric {

// Procedural spherical scene: a pure function of direction. The light frame
// is anchored in normalized azimuth units so shifting light_azimuth_u by 1
// rotates the render by exactly half its width.
struct SceneSpec {
  std::uint64_t seed = 0;
  double horizon_lo[3] = {0.0, 0.0, 0.0};  // color toward the nadir
  double horizon_hi[3] = {1.0, 1.0, 1.0};  // color toward the zenith
  double checker_frequency = 3.0;          // 0 disables the checker layer
  double light_azimuth_u = 0.0;            // light azimuth / pi, in [-1, 1)
};

SceneSpec make_scene_spec(std::uint64_t seed);

// Scene color for a sphere direction; components clamped to [0, 1].
void scene_color(const SceneSpec& spec, double azimuth_u, double elevation, double rgb[3]);

// Equirect render: pixel (i, j) = scene(pixel_to_sphere(i, j)).
Image render_panorama(const SceneSpec& spec, int width, int height);

// Smooth seeded displacement warp; max displacement is 8% of the width times
// `amplitude`. amplitude = 0 reproduces the input bitwise.
Image random_warp(const Image& img, std::uint64_t seed, double amplitude = 1.0);

// Displacement (in pixels) of the warp field at continuous position (x, y).
// Exposed so field statistics can be checked against quadrature.
void warp_displacement(std::uint64_t seed, double amplitude, int width, int height,
                       double x, double y, double* dx, double* dy);

struct Triplet {
  Image panorama;     // W x H equirect render
  Image perspective;  // square gnomonic projection
  Image warped;       // displacement-warped panorama
};

// Same scene content in the three distortion classes.
Triplet make_class_triplet(const SceneSpec& spec, const ViewSpec& view,
                           std::uint64_t warp_seed, int width, int height);

// In-memory corpus: per_class images per class, all width x height RGB
// (perspective renders are resized to the common size).
std::vector<std::pair<Image, DistortionClass>> generate_corpus(std::uint64_t seed,
                                                               int per_class, int width,
                                                               int height);

// On-disk corpus: <dir>/{panorama,perspective,random}/NNNN.png + manifest.json.
void write_corpus(const std::string& dir, std::uint64_t seed, int per_class, int width,
                  int height);
std::vector<std::pair<Image, DistortionClass>> load_corpus(const std::string& dir);

}  // namespace panometric
