// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "panometric/image.hpp"
#include "panometric/io.hpp"
#include "panometric/tape.hpp"

namespace panometric {

// The three distortion types, one per text prompt.
enum class DistortionClass : int { Panorama = 0, Perspective = 1, Random = 2 };

const char* class_name(DistortionClass c);

// Pairwise type-match table: l[i*cols+j] = 1 iff class(i) == class(j).
// counted[.] = 0 marks entries excluded from losses (the self-similarity
// diagonal when requested).
struct LabelMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> l;
  std::vector<std::uint8_t> counted;
};

LabelMatrix label_matrix(const std::vector<DistortionClass>& a,
                         const std::vector<DistortionClass>& b, bool exclude_diagonal);

// Toy image encoder: 8x8 patch-affine -> leaky rectifier -> affine -> L2
// normalize, plus the 3-row text embedding table. Small enough to
// finite-difference every parameter class.
struct EncoderParams {
  int in_w = 64;
  int in_h = 32;
  int in_c = 3;
  int patch = 8;
  int hidden = 16;  // per-patch channels after the first map
  int dim = 16;     // embedding dimension
  std::vector<double> w1, b1;   // hidden x (patch*patch*in_c)
  std::vector<double> w2, b2;   // dim x (patches*hidden)
  std::vector<double> text;     // 3 x dim, rows kept unit-norm

  int patches() const { return (in_w / patch) * (in_h / patch); }
  int patch_in() const { return patch * patch * in_c; }
};

EncoderParams init_encoder(std::uint64_t seed);

// Unit-norm embedding of an image with the encoder's exact input dimensions.
std::vector<double> embed_image(const EncoderParams& params, const Image& img);

// Hash of the serialized parameter blob; names the extractor in feature files.
Sha256 encoder_content_hash(const EncoderParams& params);

void save_encoder(const std::string& path, const EncoderParams& params);
EncoderParams load_encoder(const std::string& path);

// Image-image loss: mean over ordered pairs i != j of (x_i.x_j - l_ij)^2
// with divisor n(n-1); the self-similarity diagonal is discarded.
double loss_ie(const std::vector<std::vector<double>>& embeddings,
               const std::vector<DistortionClass>& types);

// Image-text loss: mean over all n*n pairs of (x_i.z_j - l_ij)^2 where z_j is
// the text embedding of sample j's class.
double loss_te(const std::vector<std::vector<double>>& img_emb,
               const std::vector<std::vector<double>>& txt_emb,
               const std::vector<DistortionClass>& types);

// Variant reading of the image-text loss with exactly the 3 prompt columns
// instead of n per-sample columns; divisor 3n.
double loss_te_prompts(const std::vector<std::vector<double>>& img_emb,
                       const std::vector<std::vector<double>>& prompt_rows,
                       const std::vector<DistortionClass>& types);

struct TrainEncoderConfig {
  std::uint64_t seed = 1;
  int steps = 2000;
  double lr = 0.05;
  bool te_three_prompts = false;  // use the 3-column image-text loss reading
};

// Mean cosine similarity within classes and across classes.
struct SimilarityReport {
  double intra = 0.0;
  double inter = 0.0;
  double final_loss = 0.0;
};

// Gradient descent on L = L_te + L_ie with the image embeddings passed
// through stop_gradient inside L_te, so L_te trains the text table only.
std::pair<EncoderParams, SimilarityReport> train_distort_encoder(
    const std::vector<std::pair<Image, DistortionClass>>& corpus,
    const TrainEncoderConfig& config);

SimilarityReport similarity_report(const EncoderParams& params,
                                   const std::vector<std::pair<Image, DistortionClass>>& corpus);

// Taped embedding builder shared by the trainer and the diffusion objective.
// Parameter order in `param_nodes`: w1, b1, w2, b2 (text rows are separate).
struct TapedEncoder {
  std::vector<Tape::NodeId> param_nodes;
  Tape::NodeId w1, b1, w2, b2;
};

TapedEncoder tape_encoder_params(Tape& tape, const EncoderParams& params);
Tape::NodeId tape_embed_image(Tape& tape, const TapedEncoder& enc, const EncoderParams& params,
                              const Image& img);
// Same forward on an already-taped flat image node (values in [0,1],
// row-major interleaved, encoder input dimensions).
Tape::NodeId tape_embed_node(Tape& tape, const TapedEncoder& enc, const EncoderParams& params,
                             Tape::NodeId image_node);

// Class posterior from text-row similarities: softmax(temperature * x.z_k).
std::vector<double> distortion_probs(const EncoderParams& params, const Image& img,
                                     double temperature = 10.0);

}  // namespace panometric
