// SPDX-License-Identifier: Apache-2.0
#include "panometric/corpus.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "panometric/error.hpp"
#include "panometric/geometry.hpp"
#include "panometric/io.hpp"
#include "panometric/parallel.hpp"
#include "panometric/rng.hpp"

namespace panometric {

namespace {

constexpr double kPi = 3.14159265358979323846;

double wrap_unit(double u) {
  while (u < -1.0) u += 2.0;
  while (u >= 1.0) u -= 2.0;
  return u;
}

}  // namespace

SceneSpec make_scene_spec(std::uint64_t seed) {
  SceneSpec spec;
  spec.seed = seed;
  SplitMix64 rng(derive_seed(seed, 11));
  for (int c = 0; c < 3; ++c) spec.horizon_lo[c] = rng.uniform(0.05, 0.45);
  for (int c = 0; c < 3; ++c) spec.horizon_hi[c] = rng.uniform(0.55, 0.95);
  spec.checker_frequency = rng.uniform(2.0, 5.5);
  spec.light_azimuth_u = rng.uniform(-1.0, 1.0);
  return spec;
}

void scene_color(const SceneSpec& spec, double azimuth_u, double elevation, double rgb[3]) {
  const double u_rel = wrap_unit(azimuth_u - spec.light_azimuth_u);
  const double az = kPi * u_rel;
  const double se = std::sin(elevation), ce = std::cos(elevation);
  const double dx = ce * std::sin(az), dy = se, dz = ce * std::cos(az);

  const double g = 0.5 * (se + 1.0);
  for (int c = 0; c < 3; ++c)
    rgb[c] = spec.horizon_lo[c] + (spec.horizon_hi[c] - spec.horizon_lo[c]) * g;

  if (spec.checker_frequency > 0.0) {
    const double f = spec.checker_frequency * kPi;
    const double p = std::sin(f * dx) * std::sin(f * dy) * std::sin(f * dz);
    const double checker = 0.5 + 0.5 * std::tanh(p / 0.12);
    for (int c = 0; c < 3; ++c) rgb[c] *= 0.55 + 0.45 * checker;
  }

  const double shade = 0.7 + 0.3 * (dz > 0.0 ? dz : 0.0);
  for (int c = 0; c < 3; ++c) {
    rgb[c] *= shade;
    if (rgb[c] < 0.0) rgb[c] = 0.0;
    if (rgb[c] > 1.0) rgb[c] = 1.0;
  }
}

Image render_panorama(const SceneSpec& spec, int width, int height) {
  require_pano_dims(width, height);
  Image img(width, height, 3);
  parallel_for(height, [&](std::size_t j) {
    const double el = (2.0 * static_cast<double>(j) / height - 1.0) * (kPi / 2.0);
    for (int i = 0; i < width; ++i) {
      const double u = 2.0 * i / width - 1.0;
      double rgb[3];
      scene_color(spec, u, el, rgb);
      for (int c = 0; c < 3; ++c) img.at(i, static_cast<int>(j), c) = rgb[c];
    }
  });
  return img;
}

namespace {

// Band-limited field: per octave o, w_o sin(2 pi 2^o ux + phase) *
// sin(2 pi 2^o uy + phase'); weights sum to 1 so the bound is exact.
struct WarpField {
  double phase[2][3][2];  // [component][octave][axis]

  explicit WarpField(std::uint64_t seed) {
    for (int comp = 0; comp < 2; ++comp) {
      SplitMix64 rng(derive_seed(seed, 21 + comp));
      for (int o = 0; o < 3; ++o)
        for (int axis = 0; axis < 2; ++axis) phase[comp][o][axis] = rng.uniform(0.0, 2.0 * kPi);
    }
  }

  double eval(int comp, double ux, double uy) const {
    static const double weights[3] = {1.0 / 1.75, 0.5 / 1.75, 0.25 / 1.75};
    double acc = 0.0;
    for (int o = 0; o < 3; ++o) {
      const double f = 2.0 * kPi * static_cast<double>(1 << o);
      acc += weights[o] * std::sin(f * ux + phase[comp][o][0]) *
             std::sin(f * uy + phase[comp][o][1]);
    }
    return acc;
  }
};

}  // namespace

void warp_displacement(std::uint64_t seed, double amplitude, int width, int height,
                       double x, double y, double* dx, double* dy) {
  const WarpField field(seed);
  const double scale = 0.08 * width * amplitude;
  const double ux = x / width, uy = y / height;
  *dx = scale * field.eval(0, ux, uy);
  *dy = scale * field.eval(1, ux, uy);
}

Image random_warp(const Image& img, std::uint64_t seed, double amplitude) {
  const WarpField field(seed);
  const double scale = 0.08 * img.width * amplitude;
  Image out(img.width, img.height, img.channels);
  parallel_for(img.height, [&](std::size_t row) {
    const int y = static_cast<int>(row);
    const double uy = static_cast<double>(y) / img.height;
    for (int x = 0; x < img.width; ++x) {
      const double ux = static_cast<double>(x) / img.width;
      const double sx = x + scale * field.eval(0, ux, uy);
      const double sy = y + scale * field.eval(1, ux, uy);
      for (int c = 0; c < img.channels; ++c)
        out.at(x, y, c) = sample_image(img, sx, sy, c, WrapMode::Wrap, SampleMode::Bilinear);
    }
  });
  return out;
}

Triplet make_class_triplet(const SceneSpec& spec, const ViewSpec& view,
                           std::uint64_t warp_seed, int width, int height) {
  Triplet t;
  t.panorama = render_panorama(spec, width, height);
  t.perspective = equirect_to_perspective(t.panorama, view);
  t.warped = random_warp(t.panorama, warp_seed);
  return t;
}

namespace {

struct CorpusEntry {
  SceneSpec scene;
  ViewSpec view;
  std::uint64_t warp_seed;
};

std::vector<CorpusEntry> corpus_plan(std::uint64_t seed, int per_class, int height) {
  if (per_class < 1) throw ValidationError("corpus needs per_class >= 1");
  std::vector<CorpusEntry> plan(per_class);
  for (int k = 0; k < per_class; ++k) {
    CorpusEntry& e = plan[k];
    e.scene = make_scene_spec(derive_seed(seed, 3ULL * k));
    SplitMix64 rng(derive_seed(seed, 3ULL * k + 1));
    e.view.yaw = rng.uniform(-kPi, kPi);
    e.view.pitch = rng.uniform(-0.35, 0.35);
    e.view.fov = kPi / 2.0;
    e.view.out_size = height;
    e.warp_seed = derive_seed(seed, 3ULL * k + 2);
  }
  return plan;
}

}  // namespace

std::vector<std::pair<Image, DistortionClass>> generate_corpus(std::uint64_t seed,
                                                               int per_class, int width,
                                                               int height) {
  require_pano_dims(width, height);
  const std::vector<CorpusEntry> plan = corpus_plan(seed, per_class, height);
  std::vector<std::pair<Image, DistortionClass>> corpus;
  corpus.reserve(3 * static_cast<std::size_t>(per_class));
  for (const CorpusEntry& e : plan) {
    Triplet t = make_class_triplet(e.scene, e.view, e.warp_seed, width, height);
    corpus.emplace_back(std::move(t.panorama), DistortionClass::Panorama);
    corpus.emplace_back(resize_bilinear(t.perspective, width, height),
                        DistortionClass::Perspective);
    corpus.emplace_back(std::move(t.warped), DistortionClass::Random);
  }
  return corpus;
}

void write_corpus(const std::string& dir, std::uint64_t seed, int per_class, int width,
                  int height) {
  require_pano_dims(width, height);
  namespace fs = std::filesystem;
  const std::vector<CorpusEntry> plan = corpus_plan(seed, per_class, height);
  for (const char* sub : {"panorama", "perspective", "random"})
    fs::create_directories(fs::path(dir) / sub);

  nlohmann::json manifest;
  manifest["format"] = "panometric-corpus";
  manifest["version"] = 1;
  manifest["seed"] = seed;
  manifest["per_class"] = per_class;
  manifest["width"] = width;
  manifest["height"] = height;
  manifest["items"] = nlohmann::json::array();

  char name[32];
  for (int k = 0; k < per_class; ++k) {
    const CorpusEntry& e = plan[k];
    Triplet t = make_class_triplet(e.scene, e.view, e.warp_seed, width, height);
    std::snprintf(name, sizeof(name), "%04d.png", k);
    const Image* images[3] = {&t.panorama, nullptr, &t.warped};
    Image persp = resize_bilinear(t.perspective, width, height);
    images[1] = &persp;
    const char* subs[3] = {"panorama", "perspective", "random"};
    for (int cls = 0; cls < 3; ++cls) {
      const std::string rel = std::string(subs[cls]) + "/" + name;
      write_png((fs::path(dir) / rel).string(), *images[cls]);
      nlohmann::json item;
      item["file"] = rel;
      item["class"] = subs[cls];
      item["scene_seed"] = e.scene.seed;
      item["warp_seed"] = e.warp_seed;
      item["view"] = {{"yaw", e.view.yaw},
                      {"pitch", e.view.pitch},
                      {"fov", e.view.fov},
                      {"out_size", e.view.out_size}};
      manifest["items"].push_back(item);
    }
  }

  std::ofstream out((fs::path(dir) / "manifest.json").string());
  if (!out) throw FileError("cannot write corpus manifest in " + dir);
  out << manifest.dump(2) << "\n";
  out.flush();
  if (!out) throw FileError("manifest write failed in " + dir);
}

std::vector<std::pair<Image, DistortionClass>> load_corpus(const std::string& dir) {
  namespace fs = std::filesystem;
  const std::string manifest_path = (fs::path(dir) / "manifest.json").string();
  std::ifstream in(manifest_path);
  if (!in) throw FileError("cannot open corpus manifest: " + manifest_path);
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("corpus manifest is not valid JSON: " + std::string(e.what()));
  }
  if (manifest.value("format", "") != "panometric-corpus")
    throw ValidationError("not a corpus manifest: " + manifest_path);

  std::vector<std::pair<Image, DistortionClass>> corpus;
  for (const auto& item : manifest.at("items")) {
    const std::string cls = item.at("class").get<std::string>();
    DistortionClass c;
    if (cls == "panorama") c = DistortionClass::Panorama;
    else if (cls == "perspective") c = DistortionClass::Perspective;
    else if (cls == "random") c = DistortionClass::Random;
    else throw ValidationError("corpus manifest has unknown class: " + cls);
    const std::string path = (fs::path(dir) / item.at("file").get<std::string>()).string();
    corpus.emplace_back(read_png(path), c);
  }
  return corpus;
}

}  // namespace panometric
