// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "panometric/contrastive.hpp"
#include "panometric/diffusion.hpp"
#include "panometric/geometry.hpp"
#include "panometric/image.hpp"
#include "panometric/tape.hpp"

namespace panometric {

// Where along the block stack a conditioning signal is injected.
enum class RegistrationMode { FirstBlock, AllBlocks };

struct ToyNetConfig {
  int latent_h = 16;
  int latent_w = 32;
  int latent_c = 1;
  std::vector<int> widths = {8, 16, 32};  // channels per block, stride-2 each
  int cond_dim = 8;
  RegistrationMode distort_mode = RegistrationMode::AllBlocks;

  int blocks() const { return static_cast<int>(widths.size()); }
  int latent_flat() const { return latent_h * latent_w * latent_c; }
};

void require_toynet_config(const ToyNetConfig& config);

// Spatial dimensions entering and leaving each block.
struct BlockDims {
  int in_h, in_w, in_c;
  int out_h, out_w, out_c;
  int patches() const { return out_h * out_w; }
  int patch_in() const { return 4 * in_c; }  // 2x2 stride-2 window
  int flat_out() const { return out_h * out_w * out_c; }
};

std::vector<BlockDims> block_dims(const ToyNetConfig& config);

// Inputs conditioning one denoising step.
struct ConditioningBundle {
  Image c_p;                 // partial panorama at latent resolution, 1 channel
  Mask m;                    // known-region mask of c_p
  DistortionMap c_d;         // distortion map at latent resolution
  Image c_n;                 // square perspective image
  std::vector<double> c_t;   // generic conditioning vector (text stand-in)
};

// One block: shared 2x2 patch affine plus a conditioning projection added
// before the nonlinearity. The backbone conditions on 2 time features; the
// side branches condition on their cond_dim-sized vectors.
struct BranchBlock {
  std::vector<double> w, b;    // patch affine
  std::vector<double> cw, cb;  // conditioning projection to the block output
};

struct DecoupledModel {
  ToyNetConfig config;
  std::vector<BranchBlock> backbone;  // frozen after init
  std::vector<double> head_w, head_b; // frozen; concat of fused blocks -> eps
  std::vector<BranchBlock> content;
  std::vector<double> ce_w, ce_b;     // content encoder: (c_p || M) -> block-0 output
  std::vector<BranchBlock> distort;
  std::vector<double> de_w, de_b;     // distort encoder: flat c_d -> cond_dim
  std::vector<std::vector<double>> proj_w, proj_b;  // per block: cond_dim -> block output
  std::vector<double> gate_de;        // per-block injection gates, exactly 0 at init
  std::vector<double> gate_content;   // per-block fusion gates, 0 at init
  std::vector<double> gate_distort;   // per-block fusion gates, 0 at init
  std::vector<double> gate_skip;      // gate on the z_t identity path into eps, 0 at init
  std::vector<double> pe_w, pe_b;     // perspective embedding projection
};

DecoupledModel init_decoupled(const ToyNetConfig& config, std::uint64_t seed);

// c_n' = Proj(pool(c_n)): fixed 8x8 gray pooling, then the learned affine.
std::vector<double> perspective_embed(const Image& c_n, const DecoupledModel& model);

// Per-block outputs of each side branch (content: CE enters block 0 only;
// distort: gated injections per the registration mode).
std::vector<std::vector<double>> content_branch(const std::vector<double>& z,
                                                const ConditioningBundle& bundle,
                                                const DecoupledModel& model);
std::vector<std::vector<double>> distort_branch(const std::vector<double>& z,
                                                const ConditioningBundle& bundle,
                                                const DecoupledModel& model);

// Predicted eps: frozen backbone stream plus both branches' gated residuals
// and a gated z_t identity path (the long skip of the usual eps nets).
std::vector<double> forward_fused(const std::vector<double>& z_t, int t,
                                  const NoiseSchedule& sched, const ConditioningBundle& bundle,
                                  const DecoupledModel& model);

// Taped fused forward exposing one node per trainable tensor.
struct FusedForward {
  Tape::NodeId eps;
  std::vector<Tape::NodeId> fused;  // per-block stream outputs
  std::vector<std::pair<std::vector<double>*, Tape::NodeId>> trainable;
};

FusedForward build_fused_forward(Tape& tape, DecoupledModel& model,
                                 const std::vector<double>& z_t, int t,
                                 const NoiseSchedule& sched, const ConditioningBundle& bundle);

// Functional census of distortion-injection sites: perturbs each per-block
// injection gate in turn (on a copy with fusion gates opened) and counts the
// sites whose perturbation changes the output.
int count_active_injection_sites(const DecoupledModel& model, std::uint64_t probe_seed = 7);

struct ToyTrainConfig {
  std::uint64_t seed = 1;
  int steps = 200;
  double lr = 0.02;
  double lambda = 0.05;
  RegistrationMode mode = RegistrationMode::AllBlocks;
  int corpus_per_class = 24;  // training scenes
  int probe_samples = 48;     // held-out scenes scored by the probe
  int probe_t = 250;          // timestep used when probing
  int encoder_steps = 600;    // probe-encoder pre-training
  double encoder_lr = 0.05;
  int schedule_T = 1000;
};

struct AblateResult {
  std::vector<double> loss_total;  // per training step
  std::vector<double> loss_rec;
  double probe_score = 0.0;        // fraction of probes classified as panorama
  double initial_window = 0.0;     // mean total loss, first 10 steps
  double final_window = 0.0;       // mean total loss, last 10 steps
};

// Trains the decoupled denoiser on a procedural corpus and scores generated
// samples with a seed-derived (mode-independent) contrastive encoder.
AblateResult run_toynet_ablate(const ToyTrainConfig& config);

}  // namespace panometric
