// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "panometric/image.hpp"

namespace panometric {

using Sha256 = std::array<unsigned char, 32>;

Sha256 sha256_bytes(const void* data, std::size_t size);
Sha256 sha256_string(const std::string& text);
std::string hex_digest(const Sha256& hash);

// 8-bit grayscale or RGB PNG. Palette and gray+alpha inputs are expanded,
// alpha is stripped; 16-bit files are rejected.
Image read_png(const std::string& path);
void write_png(const std::string& path, const Image& image);

// Flat n x d float32 feature matrix tagged with the hash of its extractor,
// so distances are only ever taken between features from the same extractor.
struct FeatureFile {
  Sha256 extractor_hash{};
  int n = 0;
  int d = 0;
  std::vector<float> data;  // row-major, n * d

  float at(int i, int j) const { return data[static_cast<std::size_t>(i) * d + j]; }
};

void write_feature_file(const std::string& path, const FeatureFile& features);
FeatureFile read_feature_file(const std::string& path);

// CSV with `# key=value` comment header lines, then a column row, then data.
// Output is deterministic: no timestamps, fixed number formatting.
void write_csv(const std::string& path, const std::vector<std::string>& config_lines,
               const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows);

// Minimal static bar chart, one bar per labeled value.
void write_svg_bar_chart(const std::string& path, const std::string& title,
                         const std::vector<std::string>& labels,
                         const std::vector<double>& values);

namespace detail {

void write_bytes(std::ostream& out, const void* data, std::size_t size);
void write_u16le(std::ostream& out, std::uint16_t value);
void write_u32le(std::ostream& out, std::uint32_t value);
void write_f32le(std::ostream& out, float value);

// Buffer cursor with truncation checks that report expected vs actual size.
struct ByteReader {
  const unsigned char* data;
  std::size_t size;
  std::size_t pos = 0;
  std::string what;  // used in error messages

  void need(std::size_t count) const;
  void read_bytes(void* dst, std::size_t count);
  std::uint16_t read_u16le();
  std::uint32_t read_u32le();
  float read_f32le();
};

std::vector<unsigned char> read_all_bytes(const std::string& path);

}  // namespace detail

}  // namespace panometric
