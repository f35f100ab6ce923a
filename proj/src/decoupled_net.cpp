// SPDX-License-Identifier: Apache-2.0
#include "panometric/decoupled_net.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "panometric/corpus.hpp"
#include "panometric/error.hpp"
#include "panometric/projection.hpp"
#include "panometric/rng.hpp"

namespace panometric {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr int kPoolEdge = 8;  // perspective_embed pools c_n to 8x8 gray
}  // namespace

void require_toynet_config(const ToyNetConfig& config) {
  if (config.blocks() < 2) throw ValidationError("toy net needs at least 2 blocks");
  if (config.latent_w != 2 * config.latent_h)
    throw ValidationError("latent dimensions must have a 1:2 aspect");
  if (config.latent_c < 1) throw ValidationError("latent needs at least one channel");
  int h = config.latent_h;
  for (int b = 0; b < config.blocks(); ++b) {
    if (h % 2 != 0) throw ValidationError("latent height not divisible by 2^blocks");
    h /= 2;
    if (config.widths[b] < 1) throw ValidationError("block widths must be positive");
  }
  if (config.cond_dim < 1) throw ValidationError("cond_dim must be positive");
}

std::vector<BlockDims> block_dims(const ToyNetConfig& config) {
  require_toynet_config(config);
  std::vector<BlockDims> dims(config.blocks());
  int h = config.latent_h, w = config.latent_w, c = config.latent_c;
  for (int b = 0; b < config.blocks(); ++b) {
    dims[b] = BlockDims{h, w, c, h / 2, w / 2, config.widths[b]};
    h /= 2;
    w /= 2;
    c = config.widths[b];
  }
  return dims;
}

namespace {

// 2x2 stride-2 window gather: output patch (py, px) reads the four input
// pixels it covers, channels innermost, so block outputs stay row-major.
std::vector<int> stride2_map(const BlockDims& d) {
  std::vector<int> map;
  map.reserve(static_cast<std::size_t>(d.patches()) * d.patch_in());
  for (int py = 0; py < d.out_h; ++py)
    for (int px = 0; px < d.out_w; ++px)
      for (int dy = 0; dy < 2; ++dy)
        for (int dx = 0; dx < 2; ++dx)
          for (int ch = 0; ch < d.in_c; ++ch)
            map.push_back(((2 * py + dy) * d.in_w + (2 * px + dx)) * d.in_c + ch);
  return map;
}

void fill_normal(std::vector<double>& v, SplitMix64& rng, double scale) {
  for (double& x : v) x = scale * rng.normal();
}

BranchBlock init_block(const BlockDims& d, int cond_dim, SplitMix64& rng) {
  BranchBlock blk;
  blk.w.resize(static_cast<std::size_t>(d.out_c) * d.patch_in());
  blk.b.assign(d.out_c, 0.0);
  blk.cw.resize(static_cast<std::size_t>(d.flat_out()) * cond_dim);
  blk.cb.assign(d.flat_out(), 0.0);
  fill_normal(blk.w, rng, 1.0 / std::sqrt(static_cast<double>(d.patch_in())));
  fill_normal(blk.cw, rng, 0.2 / std::sqrt(static_cast<double>(cond_dim)));
  return blk;
}

}  // namespace

DecoupledModel init_decoupled(const ToyNetConfig& config, std::uint64_t seed) {
  require_toynet_config(config);
  DecoupledModel m;
  m.config = config;
  const std::vector<BlockDims> dims = block_dims(config);
  const int B = config.blocks();

  SplitMix64 rng(derive_seed(seed, 301));
  for (int b = 0; b < B; ++b) m.backbone.push_back(init_block(dims[b], 2, rng));

  int concat_size = 0;
  for (int b = 0; b < B; ++b) concat_size += dims[b].flat_out();
  m.head_w.resize(static_cast<std::size_t>(config.latent_flat()) * concat_size);
  m.head_b.assign(config.latent_flat(), 0.0);
  fill_normal(m.head_w, rng, 1.0 / std::sqrt(static_cast<double>(concat_size)));

  // Side branches start as copies of the backbone blocks; their conditioning
  // projections are their own (different conditioning dimension).
  SplitMix64 rng_cn(derive_seed(seed, 302));
  SplitMix64 rng_dn(derive_seed(seed, 303));
  for (int b = 0; b < B; ++b) {
    BranchBlock cn = init_block(dims[b], config.cond_dim, rng_cn);
    cn.w = m.backbone[b].w;
    cn.b = m.backbone[b].b;
    m.content.push_back(std::move(cn));
    BranchBlock dn = init_block(dims[b], config.cond_dim, rng_dn);
    dn.w = m.backbone[b].w;
    dn.b = m.backbone[b].b;
    m.distort.push_back(std::move(dn));
  }

  SplitMix64 rng_aux(derive_seed(seed, 304));
  const int latent_flat = config.latent_flat();
  m.ce_w.resize(static_cast<std::size_t>(dims[0].flat_out()) * 2 * latent_flat);
  m.ce_b.assign(dims[0].flat_out(), 0.0);
  fill_normal(m.ce_w, rng_aux, 0.2 / std::sqrt(static_cast<double>(2 * latent_flat)));

  const int de_in = 4 * config.latent_h * config.latent_w;
  m.de_w.resize(static_cast<std::size_t>(config.cond_dim) * de_in);
  m.de_b.assign(config.cond_dim, 0.0);
  fill_normal(m.de_w, rng_aux, 1.0 / std::sqrt(static_cast<double>(de_in)));

  m.proj_w.resize(B);
  m.proj_b.resize(B);
  for (int b = 0; b < B; ++b) {
    m.proj_w[b].resize(static_cast<std::size_t>(dims[b].flat_out()) * config.cond_dim);
    m.proj_b[b].assign(dims[b].flat_out(), 0.0);
    fill_normal(m.proj_w[b], rng_aux, 1.0 / std::sqrt(static_cast<double>(config.cond_dim)));
  }

  m.gate_de.assign(B, 0.0);
  m.gate_content.assign(B, 0.0);
  m.gate_distort.assign(B, 0.0);
  m.gate_skip.assign(1, 0.0);

  m.pe_w.resize(static_cast<std::size_t>(config.cond_dim) * kPoolEdge * kPoolEdge);
  m.pe_b.assign(config.cond_dim, 0.0);
  fill_normal(m.pe_w, rng_aux, 1.0 / static_cast<double>(kPoolEdge));
  return m;
}

namespace {

std::vector<double> pool_perspective(const Image& c_n) {
  if (c_n.width != c_n.height) throw ValidationError("perspective input must be square");
  const Image small = resize_bilinear(to_gray(c_n), kPoolEdge, kPoolEdge);
  return small.data;
}

void require_bundle(const ConditioningBundle& bundle, const ToyNetConfig& config) {
  if (bundle.c_p.width != config.latent_w || bundle.c_p.height != config.latent_h ||
      bundle.c_p.channels != config.latent_c)
    throw ValidationError("bundle c_p must match the latent dimensions");
  if (bundle.m.width != bundle.c_p.width || bundle.m.height != bundle.c_p.height)
    throw ValidationError("bundle mask must match c_p");
  if (bundle.c_d.width != config.latent_w || bundle.c_d.height != config.latent_h)
    throw ValidationError("bundle distortion map must match the latent dimensions");
  if (bundle.c_n.width != bundle.c_n.height)
    throw ValidationError("bundle c_n must be square");
  if (static_cast<int>(bundle.c_t.size()) != config.cond_dim)
    throw ValidationError("bundle c_t must have cond_dim entries");
}

enum class Branch { Content, Distort };

struct BranchNodes {
  std::vector<Tape::NodeId> outputs;
  std::vector<std::pair<std::vector<double>*, Tape::NodeId>> trainable;
};

// One side branch: backbone-copy blocks plus conditioning projection, CE into
// block 0 (content) or gated distortion injections (distort).
BranchNodes build_branch(Tape& tape, DecoupledModel& model, Branch which, Tape::NodeId z,
                         Tape::NodeId cond, const ConditioningBundle& bundle) {
  const ToyNetConfig& config = model.config;
  const std::vector<BlockDims> dims = block_dims(config);
  const int B = config.blocks();
  std::vector<BranchBlock>& blocks = which == Branch::Content ? model.content : model.distort;

  BranchNodes out;
  Tape::NodeId ce_out = -1;
  Tape::NodeId de = -1;
  Tape::NodeId gate_leaf = -1;
  if (which == Branch::Content) {
    std::vector<double> ce_in;
    ce_in.reserve(2 * static_cast<std::size_t>(config.latent_flat()));
    ce_in.insert(ce_in.end(), bundle.c_p.data.begin(), bundle.c_p.data.end());
    for (auto k : bundle.m.known) ce_in.push_back(static_cast<double>(k));
    Tape::NodeId ce_in_node = tape.leaf(std::move(ce_in), false);
    Tape::NodeId ce_w = tape.leaf(model.ce_w, true);
    Tape::NodeId ce_b = tape.leaf(model.ce_b, true);
    ce_out = tape.affine(ce_w, ce_b, ce_in_node, dims[0].flat_out(),
                         2 * config.latent_flat());
    out.trainable.push_back({&model.ce_w, ce_w});
    out.trainable.push_back({&model.ce_b, ce_b});
  } else {
    Tape::NodeId de_in = tape.leaf(bundle.c_d.data, false);
    Tape::NodeId de_w = tape.leaf(model.de_w, true);
    Tape::NodeId de_b = tape.leaf(model.de_b, true);
    de = tape.affine(de_w, de_b, de_in, config.cond_dim,
                     4 * config.latent_h * config.latent_w);
    gate_leaf = tape.leaf(model.gate_de, true);
    out.trainable.push_back({&model.de_w, de_w});
    out.trainable.push_back({&model.de_b, de_b});
    out.trainable.push_back({&model.gate_de, gate_leaf});
  }

  Tape::NodeId x = z;
  for (int b = 0; b < B; ++b) {
    BranchBlock& blk = blocks[b];
    Tape::NodeId w = tape.leaf(blk.w, true);
    Tape::NodeId bias = tape.leaf(blk.b, true);
    Tape::NodeId cw = tape.leaf(blk.cw, true);
    Tape::NodeId cb = tape.leaf(blk.cb, true);
    out.trainable.push_back({&blk.w, w});
    out.trainable.push_back({&blk.b, bias});
    out.trainable.push_back({&blk.cw, cw});
    out.trainable.push_back({&blk.cb, cb});

    Tape::NodeId windows = tape.gather(x, stride2_map(dims[b]));
    Tape::NodeId h = tape.patch_affine(w, bias, windows, dims[b].patches(), dims[b].out_c,
                                       dims[b].patch_in());
    h = tape.add(h, tape.affine(cw, cb, cond, dims[b].flat_out(), config.cond_dim));
    h = tape.leaky_relu(h);

    if (which == Branch::Content && b == 0) h = tape.add(h, ce_out);
    if (which == Branch::Distort &&
        (config.distort_mode == RegistrationMode::AllBlocks || b == 0)) {
      Tape::NodeId pw = tape.leaf(model.proj_w[b], true);
      Tape::NodeId pb = tape.leaf(model.proj_b[b], true);
      out.trainable.push_back({&model.proj_w[b], pw});
      out.trainable.push_back({&model.proj_b[b], pb});
      Tape::NodeId site = tape.gather(gate_leaf, {b});
      h = tape.add(h, tape.gate(site, tape.affine(pw, pb, de, dims[b].flat_out(),
                                                  config.cond_dim)));
    }
    out.outputs.push_back(h);
    x = h;
  }
  return out;
}

}  // namespace

std::vector<double> perspective_embed(const Image& c_n, const DecoupledModel& model) {
  const std::vector<double> pooled = pool_perspective(c_n);
  const int n_in = kPoolEdge * kPoolEdge;
  std::vector<double> out(model.config.cond_dim);
  for (int o = 0; o < model.config.cond_dim; ++o) {
    double s = model.pe_b[o];
    for (int i = 0; i < n_in; ++i) s += model.pe_w[static_cast<std::size_t>(o) * n_in + i] * pooled[i];
    out[o] = s;
  }
  return out;
}

FusedForward build_fused_forward(Tape& tape, DecoupledModel& model,
                                 const std::vector<double>& z_t, int t,
                                 const NoiseSchedule& sched, const ConditioningBundle& bundle) {
  const ToyNetConfig& config = model.config;
  require_bundle(bundle, config);
  if (static_cast<int>(z_t.size()) != config.latent_flat())
    throw ValidationError("z_t does not match the latent dimensions");
  if (t < 0 || t >= sched.T) throw ValidationError("timestep out of range");
  const std::vector<BlockDims> dims = block_dims(config);
  const int B = config.blocks();

  FusedForward ff;
  Tape::NodeId z = tape.leaf(z_t, false);
  Tape::NodeId tf = tape.leaf(
      {static_cast<double>(t) / sched.T, std::sqrt(1.0 - sched.alpha_bar[t])}, false);

  // Perspective embedding feeds the content branch as its conditioning.
  Tape::NodeId pooled = tape.leaf(pool_perspective(bundle.c_n), false);
  Tape::NodeId pe_w = tape.leaf(model.pe_w, true);
  Tape::NodeId pe_b = tape.leaf(model.pe_b, true);
  Tape::NodeId cn_cond = tape.affine(pe_w, pe_b, pooled, config.cond_dim,
                                     kPoolEdge * kPoolEdge);
  ff.trainable.push_back({&model.pe_w, pe_w});
  ff.trainable.push_back({&model.pe_b, pe_b});
  Tape::NodeId dn_cond = tape.leaf(bundle.c_t, false);

  BranchNodes cn = build_branch(tape, model, Branch::Content, z, cn_cond, bundle);
  BranchNodes dn = build_branch(tape, model, Branch::Distort, z, dn_cond, bundle);
  for (auto& p : cn.trainable) ff.trainable.push_back(p);
  for (auto& p : dn.trainable) ff.trainable.push_back(p);

  Tape::NodeId gc_leaf = tape.leaf(model.gate_content, true);
  Tape::NodeId gd_leaf = tape.leaf(model.gate_distort, true);
  ff.trainable.push_back({&model.gate_content, gc_leaf});
  ff.trainable.push_back({&model.gate_distort, gd_leaf});

  Tape::NodeId x = z;
  for (int b = 0; b < B; ++b) {
    const BranchBlock& blk = model.backbone[b];
    Tape::NodeId w = tape.leaf(blk.w, false);
    Tape::NodeId bias = tape.leaf(blk.b, false);
    Tape::NodeId cw = tape.leaf(blk.cw, false);
    Tape::NodeId cb = tape.leaf(blk.cb, false);
    Tape::NodeId windows = tape.gather(x, stride2_map(dims[b]));
    Tape::NodeId h = tape.patch_affine(w, bias, windows, dims[b].patches(), dims[b].out_c,
                                       dims[b].patch_in());
    h = tape.add(h, tape.affine(cw, cb, tf, dims[b].flat_out(), 2));
    h = tape.leaky_relu(h);
    h = tape.add(h, tape.gate(tape.gather(gc_leaf, {b}), cn.outputs[b]));
    h = tape.add(h, tape.gate(tape.gather(gd_leaf, {b}), dn.outputs[b]));
    ff.fused.push_back(h);
    x = h;
  }

  int concat_size = 0;
  for (int b = 0; b < B; ++b) concat_size += dims[b].flat_out();
  Tape::NodeId head_w = tape.leaf(model.head_w, false);
  Tape::NodeId head_b = tape.leaf(model.head_b, false);
  ff.eps = tape.affine(head_w, head_b, tape.concat(ff.fused), config.latent_flat(),
                       concat_size);
  // Gated identity path: eps is largely z_t at high t, and the frozen random
  // head cannot learn that route on its own.
  Tape::NodeId skip_leaf = tape.leaf(model.gate_skip, true);
  ff.trainable.push_back({&model.gate_skip, skip_leaf});
  ff.eps = tape.add(ff.eps, tape.gate(skip_leaf, z));
  return ff;
}

std::vector<double> forward_fused(const std::vector<double>& z_t, int t,
                                  const NoiseSchedule& sched, const ConditioningBundle& bundle,
                                  const DecoupledModel& model) {
  Tape tape;
  DecoupledModel& mutable_model = const_cast<DecoupledModel&>(model);
  FusedForward ff = build_fused_forward(tape, mutable_model, z_t, t, sched, bundle);
  return tape.value(ff.eps);
}

namespace {

std::vector<std::vector<double>> branch_values(const std::vector<double>& z,
                                               const ConditioningBundle& bundle,
                                               const DecoupledModel& model, Branch which) {
  require_bundle(bundle, model.config);
  if (static_cast<int>(z.size()) != model.config.latent_flat())
    throw ValidationError("z does not match the latent dimensions");
  Tape tape;
  DecoupledModel& mutable_model = const_cast<DecoupledModel&>(model);
  Tape::NodeId zn = tape.leaf(z, false);
  Tape::NodeId cond;
  if (which == Branch::Content) {
    Tape::NodeId pooled = tape.leaf(pool_perspective(bundle.c_n), false);
    Tape::NodeId pe_w = tape.leaf(model.pe_w, false);
    Tape::NodeId pe_b = tape.leaf(model.pe_b, false);
    cond = tape.affine(pe_w, pe_b, pooled, model.config.cond_dim, kPoolEdge * kPoolEdge);
  } else {
    cond = tape.leaf(bundle.c_t, false);
  }
  BranchNodes nodes = build_branch(tape, mutable_model, which, zn, cond, bundle);
  std::vector<std::vector<double>> out;
  out.reserve(nodes.outputs.size());
  for (Tape::NodeId id : nodes.outputs) out.push_back(tape.value(id));
  return out;
}

}  // namespace

std::vector<std::vector<double>> content_branch(const std::vector<double>& z,
                                                const ConditioningBundle& bundle,
                                                const DecoupledModel& model) {
  return branch_values(z, bundle, model, Branch::Content);
}

std::vector<std::vector<double>> distort_branch(const std::vector<double>& z,
                                                const ConditioningBundle& bundle,
                                                const DecoupledModel& model) {
  return branch_values(z, bundle, model, Branch::Distort);
}

namespace {

ConditioningBundle probe_bundle(const ToyNetConfig& config, std::uint64_t seed) {
  ConditioningBundle bundle;
  const SceneSpec scene = make_scene_spec(derive_seed(seed, 401));
  const Image pano = render_panorama(scene, config.latent_w, config.latent_h);
  const Image gray = to_gray(pano);
  ViewSpec view{0.0, 0.0, kPi / 2.0, config.latent_h};
  bundle.m = make_nfov_mask(view, config.latent_w, config.latent_h);
  bundle.c_p = Image(config.latent_w, config.latent_h, 1);
  for (int y = 0; y < config.latent_h; ++y)
    for (int x = 0; x < config.latent_w; ++x)
      bundle.c_p.at(x, y, 0) = bundle.m.at(x, y) ? gray.at(x, y, 0) : 0.0;
  bundle.c_d = build_distortion_map(config.latent_w, config.latent_h);
  bundle.c_n = equirect_to_perspective(pano, view);
  SplitMix64 rng(derive_seed(seed, 402));
  bundle.c_t.resize(config.cond_dim);
  for (double& v : bundle.c_t) v = rng.normal();
  return bundle;
}

}  // namespace

int count_active_injection_sites(const DecoupledModel& model, std::uint64_t probe_seed) {
  const ToyNetConfig& config = model.config;
  const ConditioningBundle bundle = probe_bundle(config, probe_seed);
  SplitMix64 rng(derive_seed(probe_seed, 403));
  std::vector<double> z(config.latent_flat());
  for (double& v : z) v = rng.normal();
  const NoiseSchedule sched = make_schedule(10, 1e-4, 0.02);

  // Fusion gates open so injection effects can reach the output; the
  // injection gates themselves stay at their trained values for the baseline.
  DecoupledModel opened = model;
  for (double& g : opened.gate_content) g = 0.5;
  for (double& g : opened.gate_distort) g = 0.5;

  const std::vector<double> baseline = forward_fused(z, 5, sched, bundle, opened);
  int active = 0;
  for (int b = 0; b < config.blocks(); ++b) {
    DecoupledModel probe = opened;
    probe.gate_de[b] += 0.25;
    const std::vector<double> out = forward_fused(z, 5, sched, bundle, probe);
    double diff = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) diff = std::max(diff, std::fabs(out[i] - baseline[i]));
    if (diff > 1e-12) ++active;
  }
  return active;
}

namespace {

// Fixed decoder stand-in: corner-anchored bilinear upsample of the latent to
// the encoder raster, then an affine map from [-1, 1] to [0, 1] and channel
// replication. Linear, so it tapes as a fixed_blend plus scale/shift.
struct DecoderMaps {
  std::vector<int> blend_index;
  std::vector<double> blend_weights;
  std::vector<int> replicate;
  int out_w, out_h;
};

DecoderMaps make_decoder_maps(const ToyNetConfig& config, const EncoderParams& enc) {
  DecoderMaps maps;
  maps.out_w = enc.in_w;
  maps.out_h = enc.in_h;
  const int in_w = config.latent_w, in_h = config.latent_h;
  for (int y = 0; y < maps.out_h; ++y) {
    const double sy = maps.out_h == 1 ? 0.0
                                      : static_cast<double>(y) * (in_h - 1) / (maps.out_h - 1);
    const int y0 = static_cast<int>(sy);
    const int y1 = y0 + 1 < in_h ? y0 + 1 : in_h - 1;
    const double fy = sy - y0;
    for (int x = 0; x < maps.out_w; ++x) {
      const double sx = maps.out_w == 1 ? 0.0
                                        : static_cast<double>(x) * (in_w - 1) / (maps.out_w - 1);
      const int x0 = static_cast<int>(sx);
      const int x1 = x0 + 1 < in_w ? x0 + 1 : in_w - 1;
      const double fx = sx - x0;
      maps.blend_index.insert(maps.blend_index.end(),
                              {y0 * in_w + x0, y0 * in_w + x1, y1 * in_w + x0, y1 * in_w + x1});
      maps.blend_weights.insert(maps.blend_weights.end(),
                                {(1 - fy) * (1 - fx), (1 - fy) * fx, fy * (1 - fx), fy * fx});
    }
  }
  maps.replicate.reserve(static_cast<std::size_t>(maps.out_w) * maps.out_h * enc.in_c);
  for (int p = 0; p < maps.out_w * maps.out_h; ++p)
    for (int c = 0; c < enc.in_c; ++c) maps.replicate.push_back(p);
  return maps;
}

Image decode_latent(const std::vector<double>& z0, const ToyNetConfig& config,
                    const DecoderMaps& maps) {
  Image latent(config.latent_w, config.latent_h, 1);
  latent.data = z0;
  Image up = resize_bilinear(latent, maps.out_w, maps.out_h);
  Image out(maps.out_w, maps.out_h, 3);
  for (int y = 0; y < maps.out_h; ++y)
    for (int x = 0; x < maps.out_w; ++x) {
      double v = 0.5 * (up.at(x, y, 0) + 1.0);
      if (v < 0.0) v = 0.0;
      if (v > 1.0) v = 1.0;
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = v;
    }
  return out;
}

struct ToySample {
  std::vector<double> z0;
  ConditioningBundle bundle;
};

ToySample make_toy_sample(const ToyNetConfig& config, const SceneSpec& scene,
                          const std::vector<double>& c_t) {
  ToySample s;
  const Image pano = render_panorama(scene, config.latent_w, config.latent_h);
  const Image gray = to_gray(pano);
  s.z0.resize(config.latent_flat());
  for (int i = 0; i < config.latent_flat(); ++i) s.z0[i] = 2.0 * gray.data[i] - 1.0;

  ViewSpec view{0.0, 0.0, kPi / 2.0, config.latent_h};
  s.bundle.m = make_nfov_mask(view, config.latent_w, config.latent_h);
  s.bundle.c_p = Image(config.latent_w, config.latent_h, 1);
  for (int y = 0; y < config.latent_h; ++y)
    for (int x = 0; x < config.latent_w; ++x)
      s.bundle.c_p.at(x, y, 0) = s.bundle.m.at(x, y) ? gray.at(x, y, 0) : 0.0;
  s.bundle.c_d = build_distortion_map(config.latent_w, config.latent_h);
  s.bundle.c_n = equirect_to_perspective(pano, view);
  s.bundle.c_t = c_t;
  return s;
}

}  // namespace

AblateResult run_toynet_ablate(const ToyTrainConfig& config) {
  if (config.steps < 1) throw ValidationError("toynet ablate needs steps >= 1");
  ToyNetConfig net_config;
  net_config.distort_mode = config.mode;
  const NoiseSchedule sched = make_schedule(config.schedule_T);

  // Probe encoder: trained on a triplet corpus derived from the seed alone,
  // so both registration modes are scored by the identical classifier.
  const auto encoder_corpus = generate_corpus(derive_seed(config.seed, 501),
                                              std::max(config.corpus_per_class, 30), 64, 32);
  TrainEncoderConfig enc_config;
  enc_config.seed = derive_seed(config.seed, 502);
  enc_config.steps = config.encoder_steps;
  enc_config.lr = config.encoder_lr;
  auto [encoder, enc_report] = train_distort_encoder(encoder_corpus, enc_config);
  (void)enc_report;
  std::array<std::vector<double>, 3> text_rows;
  for (int k = 0; k < 3; ++k)
    text_rows[k].assign(encoder.text.begin() + static_cast<std::size_t>(k) * encoder.dim,
                        encoder.text.begin() + static_cast<std::size_t>(k + 1) * encoder.dim);

  DecoupledModel model = init_decoupled(net_config, derive_seed(config.seed, 503));
  const DecoderMaps maps = make_decoder_maps(net_config, encoder);

  SplitMix64 ct_rng(derive_seed(config.seed, 504));
  std::vector<double> c_t(net_config.cond_dim);
  for (double& v : c_t) v = ct_rng.normal();

  std::vector<ToySample> samples;
  for (int k = 0; k < config.corpus_per_class; ++k)
    samples.push_back(make_toy_sample(
        net_config, make_scene_spec(derive_seed(config.seed, 1000 + k)), c_t));

  AblateResult result;
  SplitMix64 step_rng(derive_seed(config.seed, 505));
  for (int step = 0; step < config.steps; ++step) {
    const ToySample& sample = samples[static_cast<std::size_t>(step) % samples.size()];
    const int t = static_cast<int>(step_rng.uniform_int(sched.T));
    std::vector<double> eps(sample.z0.size());
    for (double& v : eps) v = step_rng.normal();
    const std::vector<double> z_t = add_noise(sample.z0, eps, t, sched);

    Tape tape;
    FusedForward ff = build_fused_forward(tape, model, z_t, t, sched, sample.bundle);
    Tape::NodeId eps_leaf = tape.leaf(eps, false);
    Tape::NodeId rec = tape.mean(tape.square(tape.sub(eps_leaf, ff.eps)));

    // Predicted clean latent, decoded and scored against the text rows.
    const double a = std::sqrt(sched.alpha_bar[t]);
    const double b = std::sqrt(1.0 - sched.alpha_bar[t]);
    Tape::NodeId zt_leaf = tape.leaf(z_t, false);
    Tape::NodeId z0_hat =
        tape.scale(tape.sub(zt_leaf, tape.scale(ff.eps, b)), 1.0 / a);
    Tape::NodeId up = tape.fixed_blend(z0_hat, maps.blend_index, maps.blend_weights, 4);
    Tape::NodeId pixels = tape.add(tape.scale(up, 0.5),
                                   tape.leaf(std::vector<double>(tape.size(up), 0.5), false));
    Tape::NodeId rgb = tape.gather(pixels, maps.replicate);
    TapedEncoder enc_nodes = tape_encoder_params(tape, encoder);  // frozen: never updated
    Tape::NodeId feat = tape_embed_node(tape, enc_nodes, encoder, rgb);
    Tape::NodeId zp = tape.leaf(text_rows[0], false);
    Tape::NodeId zn = tape.leaf(text_rows[1], false);
    Tape::NodeId zr = tape.leaf(text_rows[2], false);
    Tape::NodeId dist =
        tape.sub(tape.sub(tape.dot(feat, zp), tape.dot(feat, zn)), tape.dot(feat, zr));
    Tape::NodeId loss = tape.sub(rec, tape.scale(dist, config.lambda));

    const double loss_value = tape.value(loss)[0];
    if (!std::isfinite(loss_value))
      throw TrainingDiverged("toy denoiser loss became non-finite", step);
    result.loss_total.push_back(loss_value);
    result.loss_rec.push_back(tape.value(rec)[0]);

    tape.backward(loss);
    for (auto& [tensor, node] : ff.trainable)
      sgd_step(*tensor, tape.grad(node), config.lr);
  }

  const std::size_t window = std::min<std::size_t>(10, result.loss_total.size());
  double init_acc = 0.0, final_acc = 0.0;
  for (std::size_t i = 0; i < window; ++i) {
    init_acc += result.loss_total[i];
    final_acc += result.loss_total[result.loss_total.size() - 1 - i];
  }
  result.initial_window = init_acc / static_cast<double>(window);
  result.final_window = final_acc / static_cast<double>(window);

  if (config.probe_samples < 1) return result;

  // Probe: denoise held-out latents one step and classify the decoded image.
  SplitMix64 probe_rng(derive_seed(config.seed, 506));
  int pano_votes = 0;
  for (int j = 0; j < config.probe_samples; ++j) {
    const ToySample sample = make_toy_sample(
        net_config, make_scene_spec(derive_seed(config.seed, 5000 + j)), c_t);
    std::vector<double> eps(sample.z0.size());
    for (double& v : eps) v = probe_rng.normal();
    const std::vector<double> z_t = add_noise(sample.z0, eps, config.probe_t, sched);
    const std::vector<double> eps_hat =
        forward_fused(z_t, config.probe_t, sched, sample.bundle, model);
    const std::vector<double> z0_hat = recover_z0(z_t, eps_hat, config.probe_t, sched);
    const Image decoded = decode_latent(z0_hat, net_config, maps);
    const std::vector<double> probs = distortion_probs(encoder, decoded);
    const int cls = static_cast<int>(std::max_element(probs.begin(), probs.end()) -
                                     probs.begin());
    if (cls == static_cast<int>(DistortionClass::Panorama)) ++pano_votes;
  }
  result.probe_score = static_cast<double>(pano_votes) / config.probe_samples;
  return result;
}

}  // namespace panometric
