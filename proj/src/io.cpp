// SPDX-License-Identifier: Apache-2.0
#include "panometric/io.hpp"

#include <openssl/evp.h>
#include <png.h>

#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "panometric/error.hpp"

namespace panometric {

Sha256 sha256_bytes(const void* data, std::size_t size) {
  Sha256 out{};
  unsigned int len = 0;
  if (EVP_Digest(data, size, out.data(), &len, EVP_sha256(), nullptr) != 1 || len != out.size())
    throw ValidationError("sha256 digest failed");
  return out;
}

Sha256 sha256_string(const std::string& text) { return sha256_bytes(text.data(), text.size()); }

std::string hex_digest(const Sha256& hash) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(64);
  for (unsigned char b : hash) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 0xf]);
  }
  return out;
}

namespace {

struct PngReadCtx {
  std::FILE* fp = nullptr;
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngReadCtx() {
    if (png) png_destroy_read_struct(&png, &info, nullptr);
    if (fp) std::fclose(fp);
  }
};

struct PngWriteCtx {
  std::FILE* fp = nullptr;
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngWriteCtx() {
    if (png) png_destroy_write_struct(&png, &info);
    if (fp) std::fclose(fp);
  }
};

}  // namespace

Image read_png(const std::string& path) {
  PngReadCtx ctx;
  // Buffers live before setjmp so they unwind if decoding bails out.
  std::vector<unsigned char> raw;
  std::vector<png_bytep> rows;
  ctx.fp = std::fopen(path.c_str(), "rb");
  if (!ctx.fp) throw FileError("cannot open PNG for reading: " + path);
  ctx.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!ctx.png) throw ValidationError("png_create_read_struct failed");
  ctx.info = png_create_info_struct(ctx.png);
  if (!ctx.info) throw ValidationError("png_create_info_struct failed");
  if (setjmp(png_jmpbuf(ctx.png))) throw FileError("failed to decode PNG: " + path);

  png_init_io(ctx.png, ctx.fp);
  png_read_info(ctx.png, ctx.info);
  const png_uint_32 width = png_get_image_width(ctx.png, ctx.info);
  const png_uint_32 height = png_get_image_height(ctx.png, ctx.info);
  const int depth = png_get_bit_depth(ctx.png, ctx.info);
  const int color = png_get_color_type(ctx.png, ctx.info);
  if (depth == 16) throw ValidationError("16-bit PNG not supported: " + path);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(ctx.png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(ctx.png);
  if (png_get_valid(ctx.png, ctx.info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(ctx.png);
  png_set_strip_alpha(ctx.png);
  png_read_update_info(ctx.png, ctx.info);

  const int channels = png_get_channels(ctx.png, ctx.info);
  if (channels != 1 && channels != 3)
    throw ValidationError("PNG must decode to grayscale or RGB: " + path);
  const std::size_t stride = png_get_rowbytes(ctx.png, ctx.info);
  raw.resize(stride * height);
  rows.resize(height);
  for (png_uint_32 j = 0; j < height; ++j) rows[j] = raw.data() + stride * j;
  png_read_image(ctx.png, rows.data());
  png_read_end(ctx.png, nullptr);

  Image img(static_cast<int>(width), static_cast<int>(height), channels);
  for (png_uint_32 j = 0; j < height; ++j)
    for (png_uint_32 i = 0; i < width * static_cast<png_uint_32>(channels); ++i)
      img.data[static_cast<std::size_t>(j) * width * channels + i] = rows[j][i] / 255.0f;
  return img;
}

void write_png(const std::string& path, const Image& image) {
  if (image.width < 1 || image.height < 1) throw ValidationError("cannot write empty image");
  PngWriteCtx ctx;
  std::vector<unsigned char> raw;
  std::vector<png_bytep> rows;
  ctx.fp = std::fopen(path.c_str(), "wb");
  if (!ctx.fp) throw FileError("cannot open PNG for writing: " + path);
  ctx.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!ctx.png) throw ValidationError("png_create_write_struct failed");
  ctx.info = png_create_info_struct(ctx.png);
  if (!ctx.info) throw ValidationError("png_create_info_struct failed");
  if (setjmp(png_jmpbuf(ctx.png))) throw FileError("failed to encode PNG: " + path);

  const int color = image.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
  png_init_io(ctx.png, ctx.fp);
  png_set_IHDR(ctx.png, ctx.info, image.width, image.height, 8, color,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(ctx.png, ctx.info);

  const std::size_t stride = static_cast<std::size_t>(image.width) * image.channels;
  raw.resize(stride * image.height);
  for (std::size_t k = 0; k < raw.size(); ++k) {
    const float v = image.data[k];
    const float clamped = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
    raw[k] = static_cast<unsigned char>(std::lround(clamped * 255.0f));
  }
  rows.resize(image.height);
  for (int j = 0; j < image.height; ++j) rows[j] = raw.data() + stride * j;
  png_write_image(ctx.png, rows.data());
  png_write_end(ctx.png, nullptr);
}

namespace detail {

void write_bytes(std::ostream& out, const void* data, std::size_t size) {
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
}

void write_u16le(std::ostream& out, std::uint16_t value) {
  unsigned char b[2] = {static_cast<unsigned char>(value & 0xff),
                        static_cast<unsigned char>(value >> 8)};
  write_bytes(out, b, 2);
}

void write_u32le(std::ostream& out, std::uint32_t value) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((value >> (8 * i)) & 0xff);
  write_bytes(out, b, 4);
}

void write_f32le(std::ostream& out, float value) {
  std::uint32_t bits;
  std::memcpy(&bits, &value, 4);
  write_u32le(out, bits);
}

void ByteReader::need(std::size_t count) const {
  if (pos + count > size)
    throw FileError(what + " truncated: expected at least " +
                          std::to_string(pos + count) + " bytes, got " + std::to_string(size));
}

void ByteReader::read_bytes(void* dst, std::size_t count) {
  need(count);
  std::memcpy(dst, data + pos, count);
  pos += count;
}

std::uint16_t ByteReader::read_u16le() {
  unsigned char b[2];
  read_bytes(b, 2);
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

std::uint32_t ByteReader::read_u32le() {
  unsigned char b[4];
  read_bytes(b, 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

float ByteReader::read_f32le() {
  const std::uint32_t bits = read_u32le();
  float value;
  std::memcpy(&value, &bits, 4);
  return value;
}

std::vector<unsigned char> read_all_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError("cannot open file: " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return bytes;
}

}  // namespace detail

namespace {
constexpr char kFeatureMagic[4] = {'P', 'F', 'E', 'A'};
constexpr std::uint16_t kFeatureVersion = 1;
}  // namespace

void write_feature_file(const std::string& path, const FeatureFile& features) {
  if (features.n < 1 || features.d < 1)
    throw ValidationError("feature file needs n >= 1 and d >= 1");
  if (features.data.size() != static_cast<std::size_t>(features.n) * features.d)
    throw ValidationError("feature data size does not match n * d");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FileError("cannot open file for writing: " + path);
  detail::write_bytes(out, kFeatureMagic, 4);
  detail::write_u16le(out, kFeatureVersion);
  detail::write_bytes(out, features.extractor_hash.data(), features.extractor_hash.size());
  detail::write_u32le(out, static_cast<std::uint32_t>(features.n));
  detail::write_u32le(out, static_cast<std::uint32_t>(features.d));
  for (float v : features.data) detail::write_f32le(out, v);
  out.flush();
  if (!out) throw FileError("write failed: " + path);
}

FeatureFile read_feature_file(const std::string& path) {
  const std::vector<unsigned char> bytes = detail::read_all_bytes(path);
  detail::ByteReader r{bytes.data(), bytes.size(), 0, "feature file '" + path + "'"};
  char magic[4];
  r.read_bytes(magic, 4);
  if (std::memcmp(magic, kFeatureMagic, 4) != 0)
    throw FileError("not a feature file (bad magic): " + path);
  const std::uint16_t version = r.read_u16le();
  if (version != kFeatureVersion)
    throw FileError("unsupported feature file version " + std::to_string(version) +
                    ": " + path);
  FeatureFile ff;
  r.read_bytes(ff.extractor_hash.data(), ff.extractor_hash.size());
  const std::uint32_t n = r.read_u32le();
  const std::uint32_t d = r.read_u32le();
  if (n < 1 || d < 1) throw FileError("feature file needs n >= 1 and d >= 1: " + path);
  ff.n = static_cast<int>(n);
  ff.d = static_cast<int>(d);
  const std::size_t count = static_cast<std::size_t>(n) * d;
  r.need(count * 4);
  ff.data.resize(count);
  for (std::size_t i = 0; i < count; ++i) ff.data[i] = r.read_f32le();
  if (r.pos != r.size)
    throw FileError("feature file has " + std::to_string(r.size - r.pos) +
                    " trailing bytes: " + path);
  return ff;
}

namespace {

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '&') out += "&amp;";
    else if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else out.push_back(c);
  }
  return out;
}

}  // namespace

void write_csv(const std::string& path, const std::vector<std::string>& config_lines,
               const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path);
  if (!out) throw FileError("cannot open file for writing: " + path);
  for (const std::string& line : config_lines) out << "# " << line << "\n";
  for (std::size_t i = 0; i < columns.size(); ++i)
    out << (i ? "," : "") << columns[i];
  out << "\n";
  for (const std::vector<double>& row : rows) {
    if (row.size() != columns.size())
      throw ValidationError("csv row width does not match column count");
    for (std::size_t i = 0; i < row.size(); ++i)
      out << (i ? "," : "") << format_number(row[i]);
    out << "\n";
  }
  out.flush();
  if (!out) throw FileError("write failed: " + path);
}

void write_svg_bar_chart(const std::string& path, const std::string& title,
                         const std::vector<std::string>& labels,
                         const std::vector<double>& values) {
  if (labels.size() != values.size())
    throw ValidationError("bar chart needs one label per value");
  std::ofstream out(path);
  if (!out) throw FileError("cannot open file for writing: " + path);
  const int bar_h = 24, gap = 12, left = 200, top = 48;
  const int plot_w = 420;
  const int height = top + static_cast<int>(labels.size()) * (bar_h + gap) + gap;
  double peak = 1e-12;
  for (double v : values) peak = std::max(peak, std::fabs(v));
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << left + plot_w + 120
      << "\" height=\"" << height << "\" font-family=\"monospace\" font-size=\"13\">\n";
  out << "  <text x=\"16\" y=\"28\" font-size=\"16\">" << escape_xml(title) << "</text>\n";
  for (std::size_t k = 0; k < labels.size(); ++k) {
    const int y = top + static_cast<int>(k) * (bar_h + gap);
    const int w = static_cast<int>(std::lround(plot_w * std::fabs(values[k]) / peak));
    out << "  <text x=\"16\" y=\"" << y + 16 << "\">" << escape_xml(labels[k]) << "</text>\n";
    out << "  <rect x=\"" << left << "\" y=\"" << y << "\" width=\"" << w << "\" height=\""
        << bar_h << "\" fill=\"" << (values[k] < 0.0 ? "#c05040" : "#4078c0") << "\"/>\n";
    out << "  <text x=\"" << left + w + 8 << "\" y=\"" << y + 16 << "\">"
        << format_number(values[k]) << "</text>\n";
  }
  out << "</svg>\n";
  out.flush();
  if (!out) throw FileError("write failed: " + path);
}

}  // namespace panometric
