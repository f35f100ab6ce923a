// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

namespace panometric {

// Raster with samples in [0,1], row-major, channels interleaved.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 0;  // 1 or 3
  std::vector<double> data;

  Image() = default;
  Image(int w, int h, int c, double fill = 0.0)
      : width(w), height(h), channels(c),
        data(static_cast<std::size_t>(w) * h * c, fill) {}

  double at(int x, int y, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  double& at(int x, int y, int c) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
};

// Per-pixel known/unknown flags for a panorama.
struct Mask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> known;  // 1 = known, 0 = unknown

  Mask() = default;
  Mask(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), known(static_cast<std::size_t>(w) * h, fill) {}

  bool at(int x, int y) const { return known[static_cast<std::size_t>(y) * width + x] != 0; }
  void set(int x, int y, bool v) { known[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0; }
  std::size_t known_count() const {
    std::size_t n = 0;
    for (auto k : known) n += k;
    return n;
  }
};

enum class WrapMode { Wrap, Clamp };      // horizontal handling when sampling
enum class SampleMode { Bilinear, Nearest };

// Samples channel c at continuous (x, y). Horizontal coordinate wraps modulo
// width (or clamps), vertical always clamps to the pole rows.
double sample_image(const Image& img, double x, double y, int c,
                    WrapMode wrap = WrapMode::Wrap,
                    SampleMode mode = SampleMode::Bilinear);

// Bilinear resize to new dimensions (corner-anchored lattice).
Image resize_bilinear(const Image& img, int new_width, int new_height);

// Converts to single channel via the Rec.601 luma weights (identity for gray).
Image to_gray(const Image& img);

// Peak signal-to-noise ratio in dB over all samples; peak = 1.
double psnr(const Image& a, const Image& b);

}  // namespace panometric
