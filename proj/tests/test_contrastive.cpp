// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <doctest.h>

#include "panometric/contrastive.hpp"
#include "panometric/error.hpp"
#include "panometric/rng.hpp"

using namespace panometric;

namespace {

using Rows = std::vector<std::vector<double>>;

std::vector<double> unit(std::vector<double> v) {
  double n2 = 0.0;
  for (double x : v) n2 += x * x;
  const double inv = 1.0 / std::sqrt(n2);
  for (double& x : v) x *= inv;
  return v;
}

Rows random_unit_rows(std::size_t n, std::size_t d, std::uint64_t seed) {
  SplitMix64 rng(seed);
  Rows rows(n);
  for (auto& r : rows) {
    r.resize(d);
    for (double& x : r) x = rng.normal();
    r = unit(r);
  }
  return rows;
}

std::vector<double> basis(std::size_t d, std::size_t k) {
  std::vector<double> v(d, 0.0);
  v[k] = 1.0;
  return v;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

Image noise_image(int w, int h, int c, std::uint64_t seed) {
  Image img(w, h, c);
  SplitMix64 rng(seed);
  for (double& v : img.data) v = rng.uniform();
  return img;
}

constexpr DistortionClass kPano = DistortionClass::Panorama;
constexpr DistortionClass kPersp = DistortionClass::Perspective;
constexpr DistortionClass kRand = DistortionClass::Random;

}  // namespace

TEST_CASE("label_matrix marks type matches and the excluded diagonal") {
  const LabelMatrix self = label_matrix({kPano, kPersp, kRand}, {kPano, kPersp, kRand}, true);
  REQUIRE(self.rows == 3);
  REQUIRE(self.cols == 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      CHECK(self.l[i * 3 + j] == (i == j ? 1.0 : 0.0));
      CHECK(self.counted[i * 3 + j] == (i == j ? 0 : 1));
    }

  const LabelMatrix same = label_matrix({kPano, kPano}, {kPano, kPano}, false);
  for (double v : same.l) CHECK(v == 1.0);
  for (auto c : same.counted) CHECK(c == 1);

  const std::vector<DistortionClass> mixed = {kPano, kRand, kPersp, kPano, kRand, kPersp};
  const LabelMatrix lm = label_matrix(mixed, mixed, false);
  for (std::size_t i = 0; i < mixed.size(); ++i)
    for (std::size_t j = 0; j < mixed.size(); ++j)
      CHECK(lm.l[i * mixed.size() + j] == (mixed[i] == mixed[j] ? 1.0 : 0.0));

  CHECK_THROWS_AS(label_matrix({}, {kPano}, false), ValidationError);
}

TEST_CASE("loss_ie is zero exactly when similarities meet the labels") {
  const std::size_t d = 8;
  // distinct classes with orthogonal embeddings: every off-diagonal wants 0
  CHECK(loss_ie({basis(d, 0), basis(d, 1), basis(d, 2)}, {kPano, kPersp, kRand}) ==
        doctest::Approx(0.0));
  // one class, identical embeddings: every off-diagonal wants 1
  CHECK(loss_ie({basis(d, 3), basis(d, 3)}, {kPano, kPano}) == doctest::Approx(0.0));
  // one class, orthogonal embeddings: every pair misses by exactly 1
  CHECK(loss_ie({basis(d, 0), basis(d, 1)}, {kPano, kPano}) == doctest::Approx(1.0));
}

TEST_CASE("loss_ie matches its double-loop definition and ignores sample order") {
  const std::size_t n = 7, d = 16;
  const Rows emb = random_unit_rows(n, d, 11);
  const std::vector<DistortionClass> types = {kPano, kPersp, kRand, kPano,
                                              kRand, kPersp, kPano};
  double expected = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double r = dot(emb[i], emb[j]) - (types[i] == types[j] ? 1.0 : 0.0);
      expected += r * r;
    }
  expected /= static_cast<double>(n * (n - 1));
  const double got = loss_ie(emb, types);
  CHECK(got == doctest::Approx(expected).epsilon(1e-12));

  SplitMix64 rng(5);
  const std::vector<std::size_t> perm = rng.permutation(n);
  Rows emb_p(n);
  std::vector<DistortionClass> types_p(n);
  for (std::size_t i = 0; i < n; ++i) {
    emb_p[i] = emb[perm[i]];
    types_p[i] = types[perm[i]];
  }
  CHECK(loss_ie(emb_p, types_p) == doctest::Approx(got).epsilon(1e-12));
}

TEST_CASE("loss_te counts all pairs including the diagonal") {
  const std::size_t d = 8;
  // image rows equal to one shared text row, one class: perfect alignment
  const Rows aligned = {basis(d, 2), basis(d, 2)};
  CHECK(loss_te(aligned, aligned, {kPano, kPano}) == doctest::Approx(0.0));
  // orthogonal image and text rows, one class: every pair misses by 1
  CHECK(loss_te({basis(d, 0), basis(d, 1)}, {basis(d, 2), basis(d, 3)}, {kPano, kPano}) ==
        doctest::Approx(1.0));

  const std::size_t n = 6;
  const Rows img = random_unit_rows(n, d, 21);
  Rows txt(n);
  const Rows prompts = random_unit_rows(3, d, 22);
  const std::vector<DistortionClass> types = {kPano, kPersp, kRand, kRand, kPano, kPersp};
  for (std::size_t j = 0; j < n; ++j) txt[j] = prompts[static_cast<int>(types[j])];
  double expected = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double r = dot(img[i], txt[j]) - (types[i] == types[j] ? 1.0 : 0.0);
      expected += r * r;
    }
  expected /= static_cast<double>(n * n);
  CHECK(loss_te(img, txt, types) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("loss_te_prompts reads one column per prompt with divisor 3n") {
  const std::size_t d = 8;
  const Rows prompts = {basis(d, 0), basis(d, 1), basis(d, 2)};
  // each image sits exactly on its class prompt
  CHECK(loss_te_prompts({basis(d, 0), basis(d, 1), basis(d, 2)}, prompts,
                        {kPano, kPersp, kRand}) == doctest::Approx(0.0));

  const std::size_t n = 5;
  const Rows img = random_unit_rows(n, d, 31);
  const Rows pr = random_unit_rows(3, d, 32);
  const std::vector<DistortionClass> types = {kRand, kPano, kPersp, kPano, kRand};
  double expected = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (int k = 0; k < 3; ++k) {
      const double r = dot(img[i], pr[k]) - (static_cast<int>(types[i]) == k ? 1.0 : 0.0);
      expected += r * r;
    }
  expected /= 3.0 * static_cast<double>(n);
  CHECK(loss_te_prompts(img, pr, types) == doctest::Approx(expected).epsilon(1e-12));

  CHECK_THROWS_AS(loss_te_prompts(img, random_unit_rows(2, d, 33), types), ValidationError);
}

TEST_CASE("losses reject unnormalized rows and mismatched batches") {
  const Rows bad = {{0.5, 0.5}, {1.0, 0.0}};
  const Rows good = {{1.0, 0.0}, {0.0, 1.0}};
  CHECK_THROWS_AS(loss_ie(bad, {kPano, kPersp}), ValidationError);
  CHECK_THROWS_AS(loss_ie({good[0]}, {kPano}), ValidationError);
  CHECK_THROWS_AS(loss_ie(good, {kPano}), ValidationError);
  CHECK_THROWS_AS(loss_te(bad, good, {kPano, kPersp}), ValidationError);
  CHECK_THROWS_AS(loss_te(good, bad, {kPano, kPersp}), ValidationError);
  CHECK_THROWS_AS(loss_te(good, good, {kPano}), ValidationError);
}

TEST_CASE("embed_image returns a unit vector and class posteriors sum to one") {
  const EncoderParams params = init_encoder(7);
  const Image img = noise_image(params.in_w, params.in_h, params.in_c, 40);
  const std::vector<double> e = embed_image(params, img);
  REQUIRE(static_cast<int>(e.size()) == params.dim);
  CHECK(std::fabs(std::sqrt(dot(e, e)) - 1.0) < 1e-12);

  const std::vector<double> p = distortion_probs(params, img);
  REQUIRE(p.size() == 3);
  double total = 0.0;
  for (double v : p) {
    CHECK(v > 0.0);
    total += v;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(embed_image(params, Image(8, 8, 3)), ValidationError);
}

TEST_CASE("image-text loss trains only the text table") {
  const EncoderParams params = init_encoder(3);
  const std::vector<Image> imgs = {noise_image(params.in_w, params.in_h, params.in_c, 50),
                                   noise_image(params.in_w, params.in_h, params.in_c, 51)};
  const std::vector<DistortionClass> types = {kPano, kPersp};
  const LabelMatrix lm = label_matrix(types, types, false);

  for (bool cut : {true, false}) {
    Tape tape;
    TapedEncoder enc = tape_encoder_params(tape, params);
    std::vector<Tape::NodeId> text_rows(3);
    for (int r = 0; r < 3; ++r)
      text_rows[r] = tape.leaf(std::vector<double>(
          params.text.begin() + static_cast<std::size_t>(r) * params.dim,
          params.text.begin() + static_cast<std::size_t>(r + 1) * params.dim), true);
    std::vector<Tape::NodeId> xs, ys;
    for (std::size_t i = 0; i < imgs.size(); ++i) {
      Tape::NodeId e = tape_embed_image(tape, enc, params, imgs[i]);
      xs.push_back(cut ? tape.stop_gradient(e) : e);
      ys.push_back(text_rows[static_cast<int>(types[i])]);
    }
    const Tape::NodeId loss = tape.similarity_mse(xs, ys, lm.l, lm.counted, 4.0);
    tape.backward(loss);

    double image_side = 0.0, text_side = 0.0;
    for (Tape::NodeId p : enc.param_nodes)
      for (double g : tape.grad(p)) image_side += std::fabs(g);
    for (Tape::NodeId t : text_rows)
      for (double g : tape.grad(t)) text_side += std::fabs(g);
    CHECK(text_side > 0.0);
    if (cut) {
      // stop_gradient severs the image branch: every weight gradient is 0.0
      for (Tape::NodeId p : enc.param_nodes)
        for (double g : tape.grad(p)) REQUIRE(g == 0.0);
    } else {
      CHECK(image_side > 0.0);
    }
  }
}

TEST_CASE("zero training steps leave the freshly seeded encoder untouched") {
  std::vector<std::pair<Image, DistortionClass>> corpus;
  for (int k = 0; k < 3; ++k)
    for (int i = 0; i < 30; ++i)
      corpus.emplace_back(noise_image(64, 32, 3, 1000 + k * 100 + i),
                          static_cast<DistortionClass>(k));
  TrainEncoderConfig config;
  config.seed = 9;
  config.steps = 0;
  const auto [trained, report] = train_distort_encoder(corpus, config);
  const EncoderParams fresh = init_encoder(9);
  CHECK(trained.w1 == fresh.w1);
  CHECK(trained.b1 == fresh.b1);
  CHECK(trained.w2 == fresh.w2);
  CHECK(trained.b2 == fresh.b2);
  CHECK(trained.text == fresh.text);

  const SimilarityReport baseline = similarity_report(fresh, corpus);
  CHECK(report.intra == baseline.intra);
  CHECK(report.inter == baseline.inter);

  corpus.resize(60);  // drops every sample of the last class
  CHECK_THROWS_AS(train_distort_encoder(corpus, config), ValidationError);
}

TEST_CASE("encoder files round trip and reject corruption") {
  const EncoderParams params = init_encoder(12);
  const std::string path = "test_encoder_roundtrip.penc";
  save_encoder(path, params);
  const EncoderParams loaded = load_encoder(path);
  CHECK(loaded.in_w == params.in_w);
  CHECK(loaded.in_h == params.in_h);
  CHECK(loaded.dim == params.dim);
  REQUIRE(loaded.w1.size() == params.w1.size());
  // storage is 32-bit; the round trip is exact at that precision
  for (std::size_t i = 0; i < params.w1.size(); ++i)
    CHECK(static_cast<float>(loaded.w1[i]) == static_cast<float>(params.w1[i]));
  CHECK(encoder_content_hash(loaded) == encoder_content_hash(params));

  // flip one payload byte: the stored content hash must catch it
  std::ifstream in(path, std::ios::binary);
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();
  REQUIRE(bytes.size() > 64);
  bytes[60] = static_cast<char>(bytes[60] ^ 0x01);
  const std::string corrupt = "test_encoder_corrupt.penc";
  std::ofstream out(corrupt, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.close();
  CHECK_THROWS_WITH_AS(load_encoder(corrupt), doctest::Contains("hash mismatch"),
                       ValidationError);

  CHECK_THROWS_AS(load_encoder("no_such_encoder.penc"), FileError);
  std::remove(path.c_str());
  std::remove(corrupt.c_str());
}
