// SPDX-License-Identifier: Apache-2.0
#include "panometric/image.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "panometric/error.hpp"

namespace panometric {

namespace {

int wrap_index(int i, int n, WrapMode mode) {
  if (mode == WrapMode::Wrap) {
    i %= n;
    if (i < 0) i += n;
    return i;
  }
  return std::clamp(i, 0, n - 1);
}

}  // namespace

double sample_image(const Image& img, double x, double y, int c, WrapMode wrap,
                    SampleMode mode) {
  if (mode == SampleMode::Nearest) {
    int xi = wrap_index(static_cast<int>(std::lround(x)), img.width, wrap);
    int yi = std::clamp(static_cast<int>(std::lround(y)), 0, img.height - 1);
    return img.at(xi, yi, c);
  }
  double xf = std::floor(x);
  double yf = std::floor(y);
  double fx = x - xf;
  double fy = y - yf;
  int x0 = wrap_index(static_cast<int>(xf), img.width, wrap);
  int x1 = wrap_index(static_cast<int>(xf) + 1, img.width, wrap);
  int y0 = std::clamp(static_cast<int>(yf), 0, img.height - 1);
  int y1 = std::clamp(static_cast<int>(yf) + 1, 0, img.height - 1);
  double v00 = img.at(x0, y0, c);
  double v10 = img.at(x1, y0, c);
  double v01 = img.at(x0, y1, c);
  double v11 = img.at(x1, y1, c);
  double top = v00 + fx * (v10 - v00);
  double bot = v01 + fx * (v11 - v01);
  return top + fy * (bot - top);
}

Image resize_bilinear(const Image& img, int new_width, int new_height) {
  if (new_width < 1 || new_height < 1) throw ValidationError("resize target must be positive");
  Image out(new_width, new_height, img.channels);
  double sx = new_width > 1 ? static_cast<double>(img.width - 1) / (new_width - 1) : 0.0;
  double sy = new_height > 1 ? static_cast<double>(img.height - 1) / (new_height - 1) : 0.0;
  for (int y = 0; y < new_height; ++y) {
    for (int x = 0; x < new_width; ++x) {
      for (int c = 0; c < img.channels; ++c) {
        out.at(x, y, c) = sample_image(img, x * sx, y * sy, c, WrapMode::Clamp);
      }
    }
  }
  return out;
}

Image to_gray(const Image& img) {
  if (img.channels == 1) return img;
  Image out(img.width, img.height, 1);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      out.at(x, y, 0) =
          0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) + 0.114 * img.at(x, y, 2);
    }
  }
  return out;
}

double psnr(const Image& a, const Image& b) {
  if (a.width != b.width || a.height != b.height || a.channels != b.channels) {
    throw ValidationError("psnr: image dimensions differ");
  }
  double mse = 0.0;
  for (std::size_t k = 0; k < a.data.size(); ++k) {
    double d = a.data[k] - b.data[k];
    mse += d * d;
  }
  mse /= static_cast<double>(a.data.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return -10.0 * std::log10(mse);
}

}  // namespace panometric
