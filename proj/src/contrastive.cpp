// SPDX-License-Identifier: Apache-2.0
#include "panometric/contrastive.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "panometric/error.hpp"
#include "panometric/rng.hpp"

namespace panometric {

const char* class_name(DistortionClass c) {
  switch (c) {
    case DistortionClass::Panorama: return "panorama";
    case DistortionClass::Perspective: return "perspective";
    case DistortionClass::Random: return "random";
  }
  throw ValidationError("unknown distortion class");
}

LabelMatrix label_matrix(const std::vector<DistortionClass>& a,
                         const std::vector<DistortionClass>& b, bool exclude_diagonal) {
  if (a.empty() || b.empty()) throw ValidationError("label_matrix: empty type list");
  LabelMatrix m;
  m.rows = static_cast<int>(a.size());
  m.cols = static_cast<int>(b.size());
  m.l.resize(a.size() * b.size());
  m.counted.assign(a.size() * b.size(), 1);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) {
      m.l[i * b.size() + j] = a[i] == b[j] ? 1.0 : 0.0;
      if (exclude_diagonal && i == j) m.counted[i * b.size() + j] = 0;
    }
  return m;
}

namespace {

std::vector<int> patch_index_map(int w, int h, int c, int patch) {
  if (w % patch != 0 || h % patch != 0)
    throw ValidationError("image dimensions must be a multiple of the patch size");
  std::vector<int> map;
  map.reserve(static_cast<std::size_t>(w) * h * c);
  for (int py = 0; py < h / patch; ++py)
    for (int px = 0; px < w / patch; ++px)
      for (int dy = 0; dy < patch; ++dy)
        for (int dx = 0; dx < patch; ++dx)
          for (int ch = 0; ch < c; ++ch)
            map.push_back(((py * patch + dy) * w + (px * patch + dx)) * c + ch);
  return map;
}

void require_unit_rows(const std::vector<std::vector<double>>& rows, const char* what) {
  for (const auto& r : rows) {
    double n2 = 0.0;
    for (double v : r) n2 += v * v;
    if (std::fabs(std::sqrt(n2) - 1.0) > 1e-6)
      throw ValidationError(std::string(what) + ": rows must be unit-normalized");
  }
}

double pair_loss(const std::vector<std::vector<double>>& xs,
                 const std::vector<std::vector<double>>& ys, const LabelMatrix& lm,
                 double normalizer) {
  double acc = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = 0; j < ys.size(); ++j) {
      if (!lm.counted[i * ys.size() + j]) continue;
      double s = 0.0;
      for (std::size_t k = 0; k < xs[i].size(); ++k) s += xs[i][k] * ys[j][k];
      const double r = s - lm.l[i * ys.size() + j];
      acc += r * r;
    }
  return acc / normalizer;
}

}  // namespace

EncoderParams init_encoder(std::uint64_t seed) {
  EncoderParams p;
  SplitMix64 rng(derive_seed(seed, 101));
  const int pin = p.patch_in();
  const int mid = p.patches() * p.hidden;
  p.w1.resize(static_cast<std::size_t>(p.hidden) * pin);
  p.b1.assign(p.hidden, 0.0);
  p.w2.resize(static_cast<std::size_t>(p.dim) * mid);
  p.b2.assign(p.dim, 0.0);
  const double s1 = 1.0 / std::sqrt(static_cast<double>(pin));
  const double s2 = 1.0 / std::sqrt(static_cast<double>(mid));
  for (double& v : p.w1) v = s1 * rng.normal();
  for (double& v : p.w2) v = s2 * rng.normal();
  p.text.resize(3 * static_cast<std::size_t>(p.dim));
  for (int r = 0; r < 3; ++r) {
    double n2 = 0.0;
    for (int k = 0; k < p.dim; ++k) {
      double v = rng.normal();
      p.text[static_cast<std::size_t>(r) * p.dim + k] = v;
      n2 += v * v;
    }
    const double inv = 1.0 / std::sqrt(n2);
    for (int k = 0; k < p.dim; ++k) p.text[static_cast<std::size_t>(r) * p.dim + k] *= inv;
  }
  return p;
}

TapedEncoder tape_encoder_params(Tape& tape, const EncoderParams& params) {
  TapedEncoder enc;
  enc.w1 = tape.leaf(params.w1, true);
  enc.b1 = tape.leaf(params.b1, true);
  enc.w2 = tape.leaf(params.w2, true);
  enc.b2 = tape.leaf(params.b2, true);
  enc.param_nodes = {enc.w1, enc.b1, enc.w2, enc.b2};
  return enc;
}

Tape::NodeId tape_embed_node(Tape& tape, const TapedEncoder& enc, const EncoderParams& params,
                             Tape::NodeId image_node) {
  if (tape.size(image_node) !=
      static_cast<std::size_t>(params.in_w) * params.in_h * params.in_c)
    throw ValidationError("encoder input size mismatch");
  const std::vector<int> map =
      patch_index_map(params.in_w, params.in_h, params.in_c, params.patch);
  Tape::NodeId patches = tape.gather(image_node, map);
  Tape::NodeId h = tape.patch_affine(enc.w1, enc.b1, patches, params.patches(), params.hidden,
                                     params.patch_in());
  h = tape.leaky_relu(h);
  Tape::NodeId e = tape.affine(enc.w2, enc.b2, h, params.dim, params.patches() * params.hidden);
  return tape.l2_normalize(e);
}

Tape::NodeId tape_embed_image(Tape& tape, const TapedEncoder& enc, const EncoderParams& params,
                              const Image& img) {
  if (img.width != params.in_w || img.height != params.in_h || img.channels != params.in_c)
    throw ValidationError("encoder input dimensions mismatch");
  Tape::NodeId leaf = tape.leaf(img.data, false);
  return tape_embed_node(tape, enc, params, leaf);
}

std::vector<double> embed_image(const EncoderParams& params, const Image& img) {
  Tape tape;
  TapedEncoder enc = tape_encoder_params(tape, params);
  return tape.value(tape_embed_image(tape, enc, params, img));
}

namespace {

std::vector<unsigned char> encoder_payload(const EncoderParams& p) {
  std::ostringstream out(std::ios::binary);
  for (int v : {p.in_w, p.in_h, p.in_c, p.patch, p.hidden, p.dim})
    detail::write_u32le(out, static_cast<std::uint32_t>(v));
  for (const std::vector<double>* t : {&p.w1, &p.b1, &p.w2, &p.b2, &p.text})
    for (double v : *t) detail::write_f32le(out, static_cast<float>(v));
  const std::string s = out.str();
  return std::vector<unsigned char>(s.begin(), s.end());
}

constexpr char kEncoderMagic[4] = {'P', 'E', 'N', 'C'};
constexpr std::uint16_t kEncoderVersion = 1;

}  // namespace

Sha256 encoder_content_hash(const EncoderParams& params) {
  const std::vector<unsigned char> payload = encoder_payload(params);
  return sha256_bytes(payload.data(), payload.size());
}

void save_encoder(const std::string& path, const EncoderParams& params) {
  const std::vector<unsigned char> payload = encoder_payload(params);
  const Sha256 hash = sha256_bytes(payload.data(), payload.size());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FileError("cannot open file for writing: " + path);
  detail::write_bytes(out, kEncoderMagic, 4);
  detail::write_u16le(out, kEncoderVersion);
  detail::write_bytes(out, hash.data(), hash.size());
  detail::write_bytes(out, payload.data(), payload.size());
  out.flush();
  if (!out) throw FileError("write failed: " + path);
}

EncoderParams load_encoder(const std::string& path) {
  const std::vector<unsigned char> bytes = detail::read_all_bytes(path);
  detail::ByteReader r{bytes.data(), bytes.size(), 0, "encoder file '" + path + "'"};
  char magic[4];
  r.read_bytes(magic, 4);
  if (std::memcmp(magic, kEncoderMagic, 4) != 0)
    throw ValidationError("not an encoder file (bad magic): " + path);
  if (r.read_u16le() != kEncoderVersion)
    throw ValidationError("unsupported encoder file version: " + path);
  Sha256 stored;
  r.read_bytes(stored.data(), stored.size());
  const Sha256 actual = sha256_bytes(bytes.data() + r.pos, bytes.size() - r.pos);
  if (stored != actual)
    throw ValidationError("encoder file content hash mismatch (corrupt file): " + path);

  EncoderParams p;
  p.in_w = static_cast<int>(r.read_u32le());
  p.in_h = static_cast<int>(r.read_u32le());
  p.in_c = static_cast<int>(r.read_u32le());
  p.patch = static_cast<int>(r.read_u32le());
  p.hidden = static_cast<int>(r.read_u32le());
  p.dim = static_cast<int>(r.read_u32le());
  if (p.in_w < 1 || p.in_h < 1 || p.patch < 1 || p.hidden < 1 || p.dim < 1 ||
      (p.in_c != 1 && p.in_c != 3) || p.in_w % p.patch != 0 || p.in_h % p.patch != 0)
    throw ValidationError("encoder file has invalid dimensions: " + path);
  auto read_tensor = [&r](std::vector<double>& t, std::size_t count) {
    t.resize(count);
    for (std::size_t i = 0; i < count; ++i) t[i] = r.read_f32le();
  };
  read_tensor(p.w1, static_cast<std::size_t>(p.hidden) * p.patch_in());
  read_tensor(p.b1, p.hidden);
  read_tensor(p.w2, static_cast<std::size_t>(p.dim) * p.patches() * p.hidden);
  read_tensor(p.b2, p.dim);
  read_tensor(p.text, 3 * static_cast<std::size_t>(p.dim));
  if (r.pos != r.size)
    throw ValidationError("encoder file has trailing bytes: " + path);
  return p;
}

double loss_ie(const std::vector<std::vector<double>>& embeddings,
               const std::vector<DistortionClass>& types) {
  if (embeddings.size() < 2) throw ValidationError("loss_ie needs n >= 2");
  if (embeddings.size() != types.size()) throw ValidationError("loss_ie: types size mismatch");
  require_unit_rows(embeddings, "loss_ie");
  const LabelMatrix lm = label_matrix(types, types, true);
  const double n = static_cast<double>(embeddings.size());
  return pair_loss(embeddings, embeddings, lm, n * (n - 1.0));
}

double loss_te(const std::vector<std::vector<double>>& img_emb,
               const std::vector<std::vector<double>>& txt_emb,
               const std::vector<DistortionClass>& types) {
  if (img_emb.empty()) throw ValidationError("loss_te: empty batch");
  if (img_emb.size() != txt_emb.size() || img_emb.size() != types.size())
    throw ValidationError("loss_te: batch sizes mismatch");
  require_unit_rows(img_emb, "loss_te");
  require_unit_rows(txt_emb, "loss_te");
  const LabelMatrix lm = label_matrix(types, types, false);
  const double n = static_cast<double>(img_emb.size());
  return pair_loss(img_emb, txt_emb, lm, n * n);
}

double loss_te_prompts(const std::vector<std::vector<double>>& img_emb,
                       const std::vector<std::vector<double>>& prompt_rows,
                       const std::vector<DistortionClass>& types) {
  if (img_emb.empty()) throw ValidationError("loss_te_prompts: empty batch");
  if (prompt_rows.size() != 3) throw ValidationError("loss_te_prompts needs 3 prompt rows");
  if (img_emb.size() != types.size())
    throw ValidationError("loss_te_prompts: types size mismatch");
  require_unit_rows(img_emb, "loss_te_prompts");
  require_unit_rows(prompt_rows, "loss_te_prompts");
  LabelMatrix lm;
  lm.rows = static_cast<int>(img_emb.size());
  lm.cols = 3;
  lm.l.resize(img_emb.size() * 3);
  lm.counted.assign(img_emb.size() * 3, 1);
  for (std::size_t i = 0; i < img_emb.size(); ++i)
    for (int k = 0; k < 3; ++k)
      lm.l[i * 3 + k] = static_cast<int>(types[i]) == k ? 1.0 : 0.0;
  return pair_loss(img_emb, prompt_rows, lm, 3.0 * static_cast<double>(img_emb.size()));
}

namespace {

SimilarityReport report_from_embeddings(const std::vector<std::vector<double>>& emb,
                                        const std::vector<DistortionClass>& types) {
  double intra = 0.0, inter = 0.0;
  std::size_t n_intra = 0, n_inter = 0;
  for (std::size_t i = 0; i < emb.size(); ++i)
    for (std::size_t j = 0; j < emb.size(); ++j) {
      if (i == j) continue;
      double s = 0.0;
      for (std::size_t k = 0; k < emb[i].size(); ++k) s += emb[i][k] * emb[j][k];
      if (types[i] == types[j]) {
        intra += s;
        ++n_intra;
      } else {
        inter += s;
        ++n_inter;
      }
    }
  SimilarityReport rep;
  rep.intra = n_intra ? intra / static_cast<double>(n_intra) : 0.0;
  rep.inter = n_inter ? inter / static_cast<double>(n_inter) : 0.0;
  return rep;
}

}  // namespace

SimilarityReport similarity_report(const EncoderParams& params,
                                   const std::vector<std::pair<Image, DistortionClass>>& corpus) {
  std::vector<std::vector<double>> emb;
  std::vector<DistortionClass> types;
  emb.reserve(corpus.size());
  for (const auto& [img, cls] : corpus) {
    emb.push_back(embed_image(params, img));
    types.push_back(cls);
  }
  return report_from_embeddings(emb, types);
}

std::pair<EncoderParams, SimilarityReport> train_distort_encoder(
    const std::vector<std::pair<Image, DistortionClass>>& corpus,
    const TrainEncoderConfig& config) {
  int per_class[3] = {0, 0, 0};
  for (const auto& [img, cls] : corpus) per_class[static_cast<int>(cls)] += 1;
  for (int k = 0; k < 3; ++k)
    if (per_class[k] < 30)
      throw ValidationError(std::string("train_distort_encoder needs >= 30 images of class ") +
                            class_name(static_cast<DistortionClass>(k)));

  EncoderParams params = init_encoder(config.seed);
  const std::size_t n = corpus.size();
  std::vector<DistortionClass> types(n);
  // Patch-major image vectors, computed once; the per-step tape leaves copy
  // these instead of re-gathering pixels.
  const std::vector<int> map =
      patch_index_map(params.in_w, params.in_h, params.in_c, params.patch);
  std::vector<std::vector<double>> inputs(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Image& img = corpus[i].first;
    if (img.width != params.in_w || img.height != params.in_h || img.channels != params.in_c)
      throw ValidationError("corpus image dimensions do not match the encoder input");
    types[i] = corpus[i].second;
    inputs[i].resize(map.size());
    for (std::size_t k = 0; k < map.size(); ++k) inputs[i][k] = img.data[map[k]];
  }

  const LabelMatrix lm_ie = label_matrix(types, types, true);
  const LabelMatrix lm_te = label_matrix(types, types, false);
  LabelMatrix lm_prompts;
  if (config.te_three_prompts) {
    lm_prompts.rows = static_cast<int>(n);
    lm_prompts.cols = 3;
    lm_prompts.l.resize(n * 3);
    lm_prompts.counted.assign(n * 3, 1);
    for (std::size_t i = 0; i < n; ++i)
      for (int k = 0; k < 3; ++k)
        lm_prompts.l[i * 3 + k] = static_cast<int>(types[i]) == k ? 1.0 : 0.0;
  }

  SimilarityReport report;
  const double nd = static_cast<double>(n);
  for (int step = 0; step < config.steps; ++step) {
    Tape tape;
    Tape::NodeId w1 = tape.leaf(params.w1, true);
    Tape::NodeId b1 = tape.leaf(params.b1, true);
    Tape::NodeId w2 = tape.leaf(params.w2, true);
    Tape::NodeId b2 = tape.leaf(params.b2, true);
    std::vector<Tape::NodeId> text_rows(3);
    for (int r = 0; r < 3; ++r)
      text_rows[r] = tape.leaf(std::vector<double>(
          params.text.begin() + static_cast<std::size_t>(r) * params.dim,
          params.text.begin() + static_cast<std::size_t>(r + 1) * params.dim), true);

    std::vector<Tape::NodeId> xs(n), xs_sg(n);
    for (std::size_t i = 0; i < n; ++i) {
      Tape::NodeId input = tape.leaf(inputs[i], false);
      Tape::NodeId h = tape.patch_affine(w1, b1, input, params.patches(), params.hidden,
                                         params.patch_in());
      h = tape.leaky_relu(h);
      Tape::NodeId e = tape.affine(w2, b2, h, params.dim, params.patches() * params.hidden);
      xs[i] = tape.l2_normalize(e);
      xs_sg[i] = tape.stop_gradient(xs[i]);
    }

    Tape::NodeId l_te;
    if (config.te_three_prompts) {
      l_te = tape.similarity_mse(xs_sg, text_rows, lm_prompts.l, lm_prompts.counted, 3.0 * nd);
    } else {
      std::vector<Tape::NodeId> ys(n);
      for (std::size_t j = 0; j < n; ++j) ys[j] = text_rows[static_cast<int>(types[j])];
      l_te = tape.similarity_mse(xs_sg, ys, lm_te.l, lm_te.counted, nd * nd);
    }
    Tape::NodeId l_ie = tape.similarity_mse(xs, xs, lm_ie.l, lm_ie.counted, nd * (nd - 1.0));
    Tape::NodeId loss = tape.add(l_te, l_ie);

    const double loss_value = tape.value(loss)[0];
    if (!std::isfinite(loss_value))
      throw TrainingDiverged("contrastive loss became non-finite", step);
    report.final_loss = loss_value;

    tape.backward(loss);
    sgd_step(params.w1, tape.grad(w1), config.lr);
    sgd_step(params.b1, tape.grad(b1), config.lr);
    sgd_step(params.w2, tape.grad(w2), config.lr);
    sgd_step(params.b2, tape.grad(b2), config.lr);
    for (int r = 0; r < 3; ++r) {
      double* row = params.text.data() + static_cast<std::size_t>(r) * params.dim;
      const std::vector<double>& g = tape.grad(text_rows[r]);
      double n2 = 0.0;
      for (int k = 0; k < params.dim; ++k) {
        row[k] -= config.lr * g[k];
        n2 += row[k] * row[k];
      }
      if (!(n2 > 0.0)) throw TrainingDiverged("text row collapsed to zero", step);
      const double inv = 1.0 / std::sqrt(n2);
      for (int k = 0; k < params.dim; ++k) row[k] *= inv;
    }
  }

  SimilarityReport final_report = similarity_report(params, corpus);
  final_report.final_loss = report.final_loss;
  return {params, final_report};
}

std::vector<double> distortion_probs(const EncoderParams& params, const Image& img,
                                     double temperature) {
  const std::vector<double> x = embed_image(params, img);
  std::vector<double> s(3);
  for (int k = 0; k < 3; ++k) {
    double acc = 0.0;
    for (int d = 0; d < params.dim; ++d)
      acc += x[d] * params.text[static_cast<std::size_t>(k) * params.dim + d];
    s[k] = temperature * acc;
  }
  const double peak = std::max({s[0], s[1], s[2]});
  double z = 0.0;
  for (int k = 0; k < 3; ++k) {
    s[k] = std::exp(s[k] - peak);
    z += s[k];
  }
  for (int k = 0; k < 3; ++k) s[k] /= z;
  return s;
}

}  // namespace panometric
