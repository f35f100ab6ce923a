// SPDX-License-Identifier: Apache-2.0
//
// Single entry point for the toolkit. One subcommand per process; every
// artifact body is a pure function of the arguments (no timestamps), so the
// same invocation always produces byte-identical files.
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "panometric/contrastive.hpp"
#include "panometric/corpus.hpp"
#include "panometric/decoupled_net.hpp"
#include "panometric/diffusion.hpp"
#include "panometric/error.hpp"
#include "panometric/geometry.hpp"
#include "panometric/image.hpp"
#include "panometric/io.hpp"
#include "panometric/metrics.hpp"
#include "panometric/numerics.hpp"
#include "panometric/projection.hpp"
#include "panometric/rng.hpp"
#include "panometric/tape.hpp"
#include "panometric/version.hpp"

namespace {

using namespace panometric;

constexpr double kPi = 3.14159265358979323846;
constexpr double kDeg = kPi / 180.0;

struct SizeArg {
  int width = 0;
  int height = 0;
};

SizeArg parse_size(const std::string& text) {
  SizeArg s;
  char extra;
  if (std::sscanf(text.c_str(), "%dx%d%c", &s.width, &s.height, &extra) != 2 ||
      s.width < 1 || s.height < 1)
    throw CLI::ValidationError("--size", "expected WxH with positive integers, got " + text);
  return s;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::vector<std::string> config_header(const std::string& subcommand,
                                       const std::vector<std::pair<std::string, std::string>>& kv) {
  std::vector<std::string> lines;
  lines.push_back(std::string("tool=panometric ") + kVersion);
  lines.push_back("subcommand=" + subcommand);
  for (const auto& [k, v] : kv) lines.push_back(k + "=" + v);
  return lines;
}

std::vector<std::string> list_pngs(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw FileError("not a directory: " + dir);
  std::vector<std::string> paths;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".png")
      paths.push_back(entry.path().string());
  std::sort(paths.begin(), paths.end());
  if (paths.empty()) throw FileError("no .png files in " + dir);
  return paths;
}

// ---------------------------------------------------------------------------
// distort-map

int cmd_distort_map(const std::string& size_text, const std::string& out,
                    const std::string& preview) {
  const SizeArg size = parse_size(size_text);
  const DistortionMap map = build_distortion_map(size.width, size.height);

  FeatureFile file;
  file.n = size.height;          // one row per panorama row
  file.d = 4 * size.width;       // 4 interleaved channels per pixel
  file.data.assign(map.data.begin(), map.data.end());
  const std::string tag = "panometric distortion-map " + std::to_string(size.width) + "x" +
                          std::to_string(size.height);
  file.extractor_hash = sha256_string(tag);
  write_feature_file(out, file);

  if (!preview.empty()) {
    // 4 planes stacked vertically, each affinely mapped from [-1,1] to [0,1].
    Image img(size.width, 4 * size.height, 1);
    for (int c = 0; c < 4; ++c)
      for (int j = 0; j < size.height; ++j)
        for (int i = 0; i < size.width; ++i)
          img.at(i, c * size.height + j, 0) = 0.5 * (map.at(i, j, c) + 1.0);
    write_png(preview, img);
  }
  std::cout << "wrote " << out << " (" << file.n << " rows, d=" << file.d << ")\n";
  return 0;
}

// ---------------------------------------------------------------------------
// project / unproject / mask

ViewSpec view_from_degrees(double yaw_deg, double pitch_deg, double fov_deg, int out_size) {
  ViewSpec view;
  view.yaw = yaw_deg * kDeg;
  view.pitch = pitch_deg * kDeg;
  view.fov = fov_deg * kDeg;
  view.out_size = out_size;
  return view;
}

int cmd_project(const std::string& in, const std::string& out, double yaw, double pitch,
                double fov, int size, const std::string& wrap, bool nearest) {
  const Image pano = read_png(in);
  const ViewSpec view = view_from_degrees(yaw, pitch, fov, size);
  const WrapMode wrap_mode = wrap == "clamp" ? WrapMode::Clamp : WrapMode::Wrap;
  const SampleMode mode = nearest ? SampleMode::Nearest : SampleMode::Bilinear;
  write_png(out, equirect_to_perspective(pano, view, wrap_mode, mode));
  std::cout << "wrote " << out << "\n";
  return 0;
}

int cmd_unproject(const std::string& in, const std::string& out, const std::string& mask_out,
                  double yaw, double pitch, double fov, const std::string& size_text,
                  bool nearest) {
  const Image img = read_png(in);
  if (img.width != img.height)
    throw ValidationError("perspective input must be square, got " +
                          std::to_string(img.width) + "x" + std::to_string(img.height));
  const SizeArg size = parse_size(size_text);
  const ViewSpec view = view_from_degrees(yaw, pitch, fov, img.width);
  const SampleMode mode = nearest ? SampleMode::Nearest : SampleMode::Bilinear;
  auto [pano, mask] = perspective_to_equirect(img, view, size.width, size.height, mode);
  write_png(out, pano);
  if (!mask_out.empty()) {
    Image m(mask.width, mask.height, 1);
    for (int y = 0; y < mask.height; ++y)
      for (int x = 0; x < mask.width; ++x) m.at(x, y, 0) = mask.at(x, y) ? 1.0 : 0.0;
    write_png(mask_out, m);
  }
  std::cout << "wrote " << out << " (known fraction "
            << format_double(mask_solid_angle_fraction(mask)) << ")\n";
  return 0;
}

int cmd_mask(const std::string& out, double yaw, double pitch, double fov, int view_size,
             const std::string& size_text) {
  const SizeArg size = parse_size(size_text);
  const ViewSpec view = view_from_degrees(yaw, pitch, fov, view_size);
  const Mask mask = make_nfov_mask(view, size.width, size.height);
  Image m(mask.width, mask.height, 1);
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x) m.at(x, y, 0) = mask.at(x, y) ? 1.0 : 0.0;
  write_png(out, m);
  std::cout << "wrote " << out << " (known pixels " << mask.known_count()
            << ", solid-angle fraction " << format_double(mask_solid_angle_fraction(mask))
            << ")\n";
  return 0;
}

// ---------------------------------------------------------------------------
// corpus gen

int cmd_corpus_gen(int classes, int per_class, const std::string& size_text,
                   std::uint64_t seed, const std::string& out) {
  if (classes != 3)
    throw ValidationError("corpus gen supports exactly 3 classes, got " +
                          std::to_string(classes));
  if (per_class < 1) throw ValidationError("--per-class must be positive");
  const SizeArg size = parse_size(size_text);
  write_corpus(out, seed, per_class, size.width, size.height);
  std::cout << "wrote " << out << " (" << classes << " classes x " << per_class
            << " images, " << size.width << "x" << size.height << ")\n";
  return 0;
}

// ---------------------------------------------------------------------------
// train-encoder / extract-features

int cmd_train_encoder(const std::string& corpus_dir, std::uint64_t seed, int steps, double lr,
                      bool three_prompts, const std::string& out, const std::string& report) {
  const auto corpus = load_corpus(corpus_dir);
  TrainEncoderConfig config;
  config.seed = seed;
  config.steps = steps;
  config.lr = lr;
  config.te_three_prompts = three_prompts;
  auto [params, sim] = train_distort_encoder(corpus, config);
  save_encoder(out, params);
  if (!report.empty()) {
    write_csv(report,
              config_header("train-encoder", {{"corpus", corpus_dir},
                                              {"seed", std::to_string(seed)},
                                              {"steps", std::to_string(steps)},
                                              {"lr", format_double(lr)},
                                              {"three_prompts", three_prompts ? "1" : "0"}}),
              {"intra", "inter", "final_loss"}, {{sim.intra, sim.inter, sim.final_loss}});
  }
  std::cout << "wrote " << out << " (hash " << hex_digest(encoder_content_hash(params))
            << ")\nintra=" << format_double(sim.intra) << " inter=" << format_double(sim.inter)
            << " final_loss=" << format_double(sim.final_loss) << "\n";
  return 0;
}

int cmd_extract_features(const std::string& encoder_path, const std::string& images_dir,
                         const std::string& out, bool probs) {
  const EncoderParams params = load_encoder(encoder_path);
  const auto paths = list_pngs(images_dir);

  FeatureFile file;
  file.extractor_hash = encoder_content_hash(params);
  file.n = static_cast<int>(paths.size());
  file.d = probs ? 3 : params.dim;
  file.data.reserve(static_cast<std::size_t>(file.n) * file.d);
  for (const auto& path : paths) {
    Image img = read_png(path);
    if (img.width != params.in_w || img.height != params.in_h)
      img = resize_bilinear(img, params.in_w, params.in_h);
    const std::vector<double> row =
        probs ? distortion_probs(params, img) : embed_image(params, img);
    for (double v : row) file.data.push_back(static_cast<float>(v));
  }
  write_feature_file(out, file);
  std::cout << "wrote " << out << " (" << file.n << " rows, d=" << file.d << ")\n";
  return 0;
}

// ---------------------------------------------------------------------------
// metrics

int cmd_metrics_fid(const std::string& gen, const std::string& ref, bool check_extractor,
                    const std::string& csv, const std::string& plot) {
  const FeatureFile g = read_feature_file(gen);
  const FeatureFile r = read_feature_file(ref);
  const double value = check_extractor
                           ? distort_fid(g, r)
                           : frechet_distance(gaussian_stats(g), gaussian_stats(r));
  const char* metric = check_extractor ? "distort-fid" : "fid";
  std::printf("%f\n", value);
  if (!csv.empty())
    write_csv(csv, config_header(std::string("metrics ") + metric, {{"gen", gen}, {"ref", ref}}),
              {"value"}, {{value}});
  if (!plot.empty()) write_svg_bar_chart(plot, metric, {metric}, {value});
  return 0;
}

int cmd_metrics_is(const std::string& gen, int splits, const std::string& csv,
                   const std::string& plot) {
  const FeatureFile g = read_feature_file(gen);
  std::vector<double> probs(g.data.begin(), g.data.end());
  const auto [mean, stddev] = inception_score(probs, g.n, g.d, splits);
  std::printf("%f %f\n", mean, stddev);
  if (!csv.empty())
    write_csv(csv,
              config_header("metrics is", {{"gen", gen}, {"splits", std::to_string(splits)}}),
              {"mean", "std"}, {{mean, stddev}});
  if (!plot.empty()) write_svg_bar_chart(plot, "inception score", {"mean", "std"}, {mean, stddev});
  return 0;
}

// ---------------------------------------------------------------------------
// diffusion demo / toynet ablate

void write_loss_csv(const std::string& path, const std::string& subcommand,
                    const std::vector<std::pair<std::string, std::string>>& kv,
                    const AblateResult& result) {
  std::vector<std::vector<double>> rows;
  rows.reserve(result.loss_total.size());
  for (std::size_t i = 0; i < result.loss_total.size(); ++i)
    rows.push_back({static_cast<double>(i), result.loss_total[i], result.loss_rec[i]});
  write_csv(path, config_header(subcommand, kv), {"step", "loss_total", "loss_rec"}, rows);
}

int cmd_diffusion_demo(std::uint64_t seed, int steps, const std::string& out) {
  ToyTrainConfig config;
  config.seed = seed;
  config.steps = steps;
  config.probe_samples = 0;  // loss curve only
  const AblateResult result = run_toynet_ablate(config);
  write_loss_csv(out, "diffusion demo",
                 {{"seed", std::to_string(seed)}, {"steps", std::to_string(steps)}}, result);
  std::cout << "wrote " << out << " (initial window " << format_double(result.initial_window)
            << ", final window " << format_double(result.final_window) << ")\n";
  return 0;
}

int cmd_toynet_ablate(const std::string& mode_text, std::uint64_t seed, int steps,
                      const std::string& out_prefix) {
  ToyTrainConfig config;
  config.seed = seed;
  config.steps = steps;
  config.mode = mode_text == "first-block" ? RegistrationMode::FirstBlock
                                           : RegistrationMode::AllBlocks;
  const AblateResult result = run_toynet_ablate(config);

  const std::string prefix = out_prefix.empty() ? "toynet_" + mode_text : out_prefix;
  const std::vector<std::pair<std::string, std::string>> kv = {
      {"mode", mode_text}, {"seed", std::to_string(seed)}, {"steps", std::to_string(steps)}};
  write_loss_csv(prefix + "_loss.csv", "toynet ablate", kv, result);
  write_csv(prefix + "_probe.csv", config_header("toynet ablate", kv),
            {"probe_score", "initial_window", "final_window"},
            {{result.probe_score, result.initial_window, result.final_window}});
  std::cout << "wrote " << prefix << "_loss.csv and " << prefix << "_probe.csv\n"
            << "probe_score=" << format_double(result.probe_score)
            << " initial_window=" << format_double(result.initial_window)
            << " final_window=" << format_double(result.final_window) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// selfcheck

int cmd_selfcheck() {
  int failures = 0;
  auto check = [&failures](const char* name, bool ok) {
    std::cout << (ok ? "PASS" : "FAIL") << " " << name << "\n";
    if (!ok) ++failures;
  };

  {
    const DistortionMap map = build_distortion_map(256, 128);
    double seam = 0.0, circle = 0.0;
    // one column past the right edge is u = +1, which must match the left
    // edge at u = -1
    for (int j = 0; j < map.height; ++j) {
      seam = std::max(seam, std::fabs(std::sin(kPi) - map.at(0, j, 0)));
      seam = std::max(seam, std::fabs(std::cos(kPi) - map.at(0, j, 1)));
    }
    for (int j = 0; j < map.height; ++j)
      for (int i = 0; i < map.width; ++i) {
        const double h = map.at(i, j, 0) * map.at(i, j, 0) + map.at(i, j, 1) * map.at(i, j, 1);
        const double v = map.at(i, j, 2) * map.at(i, j, 2) + map.at(i, j, 3) * map.at(i, j, 3);
        circle = std::max(circle, std::fabs(h - 1.0));
        circle = std::max(circle, std::fabs(v - 1.0));
      }
    check("distortion-map unit circles", circle < 1e-12);
    check("distortion-map seam continuity", seam < 1e-12);
  }
  {
    bool exact = true;
    for (int j = 0; j < 64 && exact; ++j)
      for (int i = 0; i < 128 && exact; ++i) {
        const PixelPos p = sphere_to_pixel(pixel_to_sphere(i, j, 128, 64), 128, 64);
        exact = p.x == static_cast<double>(i) && p.y == static_cast<double>(j);
      }
    check("pixel-sphere lattice round trip exact", exact);
  }
  {
    const ViewSpec a{0.0, 0.2, kPi / 2, 64};
    const ViewSpec b{kPi, 0.2, kPi / 2, 64};
    const Mask ma = make_nfov_mask(a, 128, 64);
    const Mask mb = make_nfov_mask(b, 128, 64);
    bool shifted = true;
    for (int y = 0; y < 64 && shifted; ++y)
      for (int x = 0; x < 128 && shifted; ++x)
        shifted = ma.at(x, y) == mb.at((x + 64) % 128, y);
    check("nfov mask yaw=pi column shift", shifted);
  }
  {
    const NoiseSchedule sched = make_schedule();
    SplitMix64 rng(7);
    std::vector<double> z0(32), eps(32);
    for (auto& v : z0) v = rng.normal();
    for (auto& v : eps) v = rng.normal();
    double worst = 0.0;
    for (int t : {0, 250, 999}) {
      const auto z0_hat = recover_z0(add_noise(z0, eps, t, sched), eps, t, sched);
      for (std::size_t i = 0; i < z0.size(); ++i)
        worst = std::max(worst, std::fabs(z0_hat[i] - z0[i]));
    }
    check("diffusion noise round trip", worst < 1e-10);
  }
  {
    SplitMix64 rng(11);
    std::vector<double> rows(40 * 4);
    for (auto& v : rows) v = rng.normal();
    const GaussianStats s = gaussian_stats(rows, 40, 4);
    check("frechet distance of identical stats", frechet_distance(s, s) < 1e-10);
  }
  {
    SplitMix64 rng(13);
    std::vector<double> x(5 * 8);
    for (auto& v : x) v = rng.normal();
    for (int i = 0; i < 5; ++i) {
      double norm = 0.0;
      for (int j = 0; j < 8; ++j) norm += x[i * 8 + j] * x[i * 8 + j];
      norm = std::sqrt(norm);
      for (int j = 0; j < 8; ++j) x[i * 8 + j] /= norm;
    }
    const auto sim = similarity_matrix(x, 5, x, 5, 8);
    double worst = 0.0;
    for (int i = 0; i < 5; ++i) worst = std::max(worst, std::fabs(sim[i * 5 + i] - 1.0));
    check("similarity matrix unit diagonal", worst < 1e-9);
  }
  {
    ToyNetConfig config;
    const DecoupledModel model = init_decoupled(config, 5);
    DecoupledModel cut = model;
    for (auto& blk : cut.content) {
      std::fill(blk.w.begin(), blk.w.end(), 0.0);
      std::fill(blk.cw.begin(), blk.cw.end(), 0.0);
    }
    SplitMix64 rng(17);
    std::vector<double> z(config.latent_flat());
    for (auto& v : z) v = rng.normal();
    const NoiseSchedule sched = make_schedule(10);
    ConditioningBundle bundle;
    bundle.c_p = Image(config.latent_w, config.latent_h, 1, 0.25);
    bundle.m = Mask(config.latent_w, config.latent_h, 1);
    bundle.c_d = build_distortion_map(config.latent_w, config.latent_h);
    bundle.c_n = Image(16, 16, 3, 0.5);
    bundle.c_t.assign(config.cond_dim, 0.1);
    const auto a = forward_fused(z, 3, sched, bundle, model);
    const auto b = forward_fused(z, 3, sched, bundle, cut);
    bool identical = a.size() == b.size();
    for (std::size_t i = 0; identical && i < a.size(); ++i) identical = a[i] == b[i];
    check("zero-init branches leave output bitwise unchanged", identical);
  }
  {
    SplitMix64 rng(19);
    std::vector<double> theta(24);
    for (auto& v : theta) v = rng.normal();
    auto f = [](const std::vector<double>& p, std::vector<double>* grad_out) {
      Tape tape;
      const Tape::NodeId x = tape.leaf(p, true);
      const Tape::NodeId loss = tape.mean(tape.square(tape.leaky_relu(x)));
      const double value = tape.value(loss)[0];
      if (grad_out) {
        tape.backward(loss);
        *grad_out = tape.grad(x);
      }
      return value;
    };
    check("gradient check on a composite loss", grad_check(f, theta) < 1e-4);
  }
  {
    const SceneSpec spec = make_scene_spec(23);
    const Image a = render_panorama(spec, 64, 32);
    const Image b = render_panorama(spec, 64, 32);
    check("same-seed render bitwise identical", a.data == b.data);
  }
  std::cout << (failures == 0 ? "all checks passed" : "checks failed") << "\n";
  return failures == 0 ? 0 : 4;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"panometric: panorama geometry and generative-evaluation toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("panometric ") + kVersion);

  // distort-map
  std::string dm_size = "512x256", dm_out, dm_preview;
  auto* dm = app.add_subcommand("distort-map", "write the 4-plane positional field");
  dm->add_option("--size", dm_size, "panorama size WxH (W = 2H)");
  dm->add_option("--out", dm_out, "output feature file")->required();
  dm->add_option("--preview", dm_preview, "optional 8-bit preview PNG (planes stacked)");

  // project
  std::string pr_in, pr_out, pr_wrap = "wrap";
  double pr_yaw = 0, pr_pitch = 0, pr_fov = 90;
  int pr_size = 256;
  bool pr_nearest = false;
  auto* pr = app.add_subcommand("project", "panorama to perspective view");
  pr->add_option("--in", pr_in, "input panorama PNG")->required();
  pr->add_option("--out", pr_out, "output PNG")->required();
  pr->add_option("--yaw", pr_yaw, "camera yaw, degrees");
  pr->add_option("--pitch", pr_pitch, "camera pitch, degrees");
  pr->add_option("--fov", pr_fov, "field of view, degrees");
  pr->add_option("--size", pr_size, "square output size, pixels");
  pr->add_option("--wrap", pr_wrap, "horizontal sampling: wrap|clamp")
      ->check(CLI::IsMember({"wrap", "clamp"}));
  pr->add_flag("--nearest", pr_nearest, "nearest-neighbor sampling");

  // unproject
  std::string up_in, up_out, up_mask, up_size = "1024x512";
  double up_yaw = 0, up_pitch = 0, up_fov = 90;
  bool up_nearest = false;
  auto* up = app.add_subcommand("unproject", "perspective view back to panorama");
  up->add_option("--in", up_in, "input perspective PNG (square)")->required();
  up->add_option("--out", up_out, "output panorama PNG")->required();
  up->add_option("--mask", up_mask, "optional known-region mask PNG");
  up->add_option("--yaw", up_yaw, "camera yaw, degrees");
  up->add_option("--pitch", up_pitch, "camera pitch, degrees");
  up->add_option("--fov", up_fov, "field of view, degrees");
  up->add_option("--size", up_size, "panorama size WxH");
  up->add_flag("--nearest", up_nearest, "nearest-neighbor sampling");

  // mask
  std::string mk_out, mk_size = "1024x512";
  double mk_yaw = 0, mk_pitch = 0, mk_fov = 90;
  int mk_view_size = 256;
  auto* mk = app.add_subcommand("mask", "known-region mask of a view");
  mk->add_option("--out", mk_out, "output mask PNG")->required();
  mk->add_option("--yaw", mk_yaw, "camera yaw, degrees");
  mk->add_option("--pitch", mk_pitch, "camera pitch, degrees");
  mk->add_option("--fov", mk_fov, "field of view, degrees");
  mk->add_option("--view-size", mk_view_size, "perspective image size, pixels");
  mk->add_option("--size", mk_size, "panorama size WxH");

  // corpus gen
  auto* corpus = app.add_subcommand("corpus", "procedural corpus commands");
  corpus->require_subcommand(1);
  int cg_classes = 3, cg_per_class = 30;
  std::string cg_size = "64x32", cg_out;
  std::uint64_t cg_seed = 1;
  auto* cg = corpus->add_subcommand("gen", "generate the 3-class corpus");
  cg->add_option("--classes", cg_classes, "number of classes (must be 3)");
  cg->add_option("--per-class", cg_per_class, "images per class");
  cg->add_option("--size", cg_size, "image size WxH");
  cg->add_option("--seed", cg_seed, "corpus seed");
  cg->add_option("--out", cg_out, "output directory")->required();

  // train-encoder
  std::string te_corpus, te_out, te_report;
  std::uint64_t te_seed = 1;
  int te_steps = 2000;
  double te_lr = 0.05;
  bool te_three = false;
  auto* te = app.add_subcommand("train-encoder", "train the contrastive encoder");
  te->add_option("--corpus", te_corpus, "corpus directory")->required();
  te->add_option("--seed", te_seed, "training seed");
  te->add_option("--steps", te_steps, "gradient steps");
  te->add_option("--lr", te_lr, "learning rate");
  te->add_flag("--three-prompts", te_three, "image-text loss over 3 prompt columns");
  te->add_option("--out", te_out, "output parameter file")->required();
  te->add_option("--report", te_report, "optional similarity-report CSV");

  // extract-features
  std::string xf_encoder, xf_images, xf_out;
  bool xf_probs = false;
  auto* xf = app.add_subcommand("extract-features", "embed a directory of images");
  xf->add_option("--encoder", xf_encoder, "encoder parameter file")->required();
  xf->add_option("--images", xf_images, "directory of PNG images")->required();
  xf->add_option("--out", xf_out, "output feature file")->required();
  xf->add_flag("--probs", xf_probs, "write 3-class posteriors instead of embeddings");

  // metrics
  auto* metrics = app.add_subcommand("metrics", "distribution metrics");
  metrics->require_subcommand(1);
  std::string fid_gen, fid_ref, fid_csv, fid_plot;
  auto* fid = metrics->add_subcommand("fid", "Frechet distance between feature files");
  fid->add_option("--gen", fid_gen, "generated features")->required();
  fid->add_option("--ref", fid_ref, "reference features")->required();
  fid->add_option("--csv", fid_csv, "optional CSV output");
  fid->add_option("--plot", fid_plot, "optional SVG bar chart");
  std::string dfid_gen, dfid_ref, dfid_csv, dfid_plot;
  auto* dfid = metrics->add_subcommand(
      "distort-fid", "Frechet distance with extractor-identity check");
  dfid->add_option("--gen", dfid_gen, "generated features")->required();
  dfid->add_option("--ref", dfid_ref, "reference features")->required();
  dfid->add_option("--csv", dfid_csv, "optional CSV output");
  dfid->add_option("--plot", dfid_plot, "optional SVG bar chart");
  std::string is_gen, is_csv, is_plot;
  int is_splits = 1;
  auto* isc = metrics->add_subcommand("is", "inception score over class posteriors");
  isc->add_option("--gen", is_gen, "posterior feature file (rows sum to 1)")->required();
  isc->add_option("--splits", is_splits, "number of splits");
  isc->add_option("--csv", is_csv, "optional CSV output");
  isc->add_option("--plot", is_plot, "optional SVG bar chart");

  // diffusion demo
  auto* diffusion = app.add_subcommand("diffusion", "diffusion commands");
  diffusion->require_subcommand(1);
  std::uint64_t dd_seed = 1;
  int dd_steps = 200;
  std::string dd_out = "diffusion_demo.csv";
  auto* dd = diffusion->add_subcommand("demo", "toy denoiser training loop");
  dd->add_option("--seed", dd_seed, "run seed");
  dd->add_option("--steps", dd_steps, "training steps");
  dd->add_option("--out", dd_out, "loss-curve CSV path");

  // toynet ablate
  auto* toynet = app.add_subcommand("toynet", "decoupled denoiser commands");
  toynet->require_subcommand(1);
  std::string ta_mode = "all-block", ta_prefix;
  std::uint64_t ta_seed = 1;
  int ta_steps = 200;
  auto* ta = toynet->add_subcommand("ablate", "registration-mode ablation run");
  ta->add_option("--mode", ta_mode, "first-block|all-block")
      ->check(CLI::IsMember({"first-block", "all-block"}));
  ta->add_option("--seed", ta_seed, "run seed");
  ta->add_option("--steps", ta_steps, "training steps");
  ta->add_option("--out-prefix", ta_prefix, "artifact name prefix");

  // selfcheck
  auto* sc = app.add_subcommand("selfcheck", "run the built-in invariant suite");

  try {
    app.parse(argc, argv);
    if (dm->parsed()) return cmd_distort_map(dm_size, dm_out, dm_preview);
    if (pr->parsed()) return cmd_project(pr_in, pr_out, pr_yaw, pr_pitch, pr_fov, pr_size,
                                         pr_wrap, pr_nearest);
    if (up->parsed()) return cmd_unproject(up_in, up_out, up_mask, up_yaw, up_pitch, up_fov,
                                           up_size, up_nearest);
    if (mk->parsed()) return cmd_mask(mk_out, mk_yaw, mk_pitch, mk_fov, mk_view_size, mk_size);
    if (cg->parsed()) return cmd_corpus_gen(cg_classes, cg_per_class, cg_size, cg_seed, cg_out);
    if (te->parsed()) return cmd_train_encoder(te_corpus, te_seed, te_steps, te_lr, te_three,
                                               te_out, te_report);
    if (xf->parsed()) return cmd_extract_features(xf_encoder, xf_images, xf_out, xf_probs);
    if (fid->parsed()) return cmd_metrics_fid(fid_gen, fid_ref, false, fid_csv, fid_plot);
    if (dfid->parsed()) return cmd_metrics_fid(dfid_gen, dfid_ref, true, dfid_csv, dfid_plot);
    if (isc->parsed()) return cmd_metrics_is(is_gen, is_splits, is_csv, is_plot);
    if (dd->parsed()) return cmd_diffusion_demo(dd_seed, dd_steps, dd_out);
    if (ta->parsed()) return cmd_toynet_ablate(ta_mode, ta_seed, ta_steps, ta_prefix);
    if (sc->parsed()) return cmd_selfcheck();
    std::cerr << "no subcommand\n";
    return 2;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const panometric::FileError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const panometric::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const panometric::TrainingDiverged& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
