// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <vector>

#include <doctest.h>

#include "panometric/error.hpp"
#include "panometric/rng.hpp"
#include "panometric/tape.hpp"

using namespace panometric;

namespace {

std::vector<double> random_vec(std::size_t n, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

}  // namespace

TEST_CASE("norm squared has the textbook gradient") {
  auto f = [](const std::vector<double>& p, std::vector<double>* grad) {
    Tape tape;
    const Tape::NodeId x = tape.leaf(p, true);
    const Tape::NodeId loss = tape.sum(tape.square(x));
    if (grad) {
      tape.backward(loss);
      *grad = tape.grad(x);
    }
    return tape.value(loss)[0];
  };
  const std::vector<double> x = {1.0, 2.0};
  std::vector<double> grad;
  const double value = f(x, &grad);
  CHECK(value == doctest::Approx(5.0));
  CHECK(grad[0] == doctest::Approx(2.0));
  CHECK(grad[1] == doctest::Approx(4.0));
  CHECK(grad_check(f, x) < 1e-6);
}

TEST_CASE("dot of two normalized vectors passes the finite-difference check") {
  auto f = [](const std::vector<double>& p, std::vector<double>* grad) {
    Tape tape;
    const Tape::NodeId a = tape.leaf({p.begin(), p.begin() + 4}, true);
    const Tape::NodeId b = tape.leaf({p.begin() + 4, p.end()}, true);
    const Tape::NodeId loss = tape.dot(tape.l2_normalize(a), tape.l2_normalize(b));
    if (grad) {
      tape.backward(loss);
      *grad = tape.grad(a);
      const auto& gb = tape.grad(b);
      grad->insert(grad->end(), gb.begin(), gb.end());
    }
    return tape.value(loss)[0];
  };
  CHECK(grad_check(f, random_vec(8, 2)) < 1e-4);
}

TEST_CASE("every elementwise primitive passes the finite-difference check") {
  auto f = [](const std::vector<double>& p, std::vector<double>* grad) {
    Tape tape;
    const Tape::NodeId x = tape.leaf({p.begin(), p.begin() + 6}, true);
    const Tape::NodeId y = tape.leaf({p.begin() + 6, p.begin() + 12}, true);
    const Tape::NodeId s = tape.leaf({p[12]}, true);
    const Tape::NodeId mixed = tape.gate(
        s, tape.add(tape.scale(tape.leaky_relu(x), 1.5), tape.sub(tape.square(y), x)));
    const Tape::NodeId loss = tape.mean(tape.concat({mixed, tape.scale(y, 0.25)}));
    if (grad) {
      tape.backward(loss);
      *grad = tape.grad(x);
      const auto& gy = tape.grad(y);
      grad->insert(grad->end(), gy.begin(), gy.end());
      grad->push_back(tape.grad(s)[0]);
    }
    return tape.value(loss)[0];
  };
  CHECK(grad_check(f, random_vec(13, 3)) < 1e-4);
}

TEST_CASE("affine and patch_affine pass the finite-difference check") {
  const int out_dim = 3, in_dim = 4, patches = 2;
  auto f = [&](const std::vector<double>& p, std::vector<double>* grad) {
    Tape tape;
    std::size_t off = 0;
    auto take = [&](std::size_t count) {
      const Tape::NodeId id = tape.leaf({p.begin() + off, p.begin() + off + count}, true);
      off += count;
      return id;
    };
    const Tape::NodeId w = take(out_dim * in_dim);
    const Tape::NodeId b = take(out_dim);
    const Tape::NodeId x = take(in_dim);
    const Tape::NodeId px = take(patches * in_dim);
    const Tape::NodeId h1 = tape.affine(w, b, x, out_dim, in_dim);
    const Tape::NodeId h2 = tape.patch_affine(w, b, px, patches, out_dim, in_dim);
    const Tape::NodeId loss = tape.mean(tape.square(tape.concat({h1, h2})));
    if (grad) {
      tape.backward(loss);
      grad->clear();
      for (const Tape::NodeId id : {w, b, x, px}) {
        const auto& g = tape.grad(id);
        grad->insert(grad->end(), g.begin(), g.end());
      }
    }
    return tape.value(loss)[0];
  };
  CHECK(grad_check(f, random_vec(12 + 3 + 4 + 8, 4)) < 1e-4);
}

TEST_CASE("gather and fixed_blend pass the finite-difference check") {
  const std::vector<int> gidx = {3, 0, 0, 2};
  const std::vector<int> bidx = {0, 1, 2, 3, 1, 1};
  const std::vector<double> bw = {0.25, 0.25, 0.25, 0.25, 0.5, 0.5};
  auto f = [&](const std::vector<double>& p, std::vector<double>* grad) {
    Tape tape;
    const Tape::NodeId x = tape.leaf(p, true);
    const Tape::NodeId g = tape.gather(x, gidx);
    const Tape::NodeId blend = tape.fixed_blend(x, bidx, bw, 3);
    const Tape::NodeId loss = tape.sum(tape.square(tape.concat({g, blend})));
    if (grad) {
      tape.backward(loss);
      *grad = tape.grad(x);
    }
    return tape.value(loss)[0];
  };
  CHECK(grad_check(f, random_vec(4, 5)) < 1e-4);

  // value oracle for fixed_blend: two outputs, three taps each
  Tape tape;
  const std::vector<double> x = {1.0, 2.0, 3.0, 4.0};
  const Tape::NodeId n = tape.leaf(x, false);
  const auto& v = tape.value(tape.fixed_blend(n, bidx, bw, 3));
  CHECK(v[0] == doctest::Approx(0.25 * 1 + 0.25 * 2 + 0.25 * 3));
  CHECK(v[1] == doctest::Approx(0.25 * 4 + 0.5 * 2 + 0.5 * 2));
}

TEST_CASE("similarity_mse matches a double-loop oracle and its gradient checks out") {
  const std::size_t n = 3, d = 4;
  const std::vector<double> labels = {1, 0, 0, 0, 1, 1, 0, 1, 1};
  std::vector<std::uint8_t> counted(n * n, 1);
  for (std::size_t i = 0; i < n; ++i) counted[i * n + i] = 0;  // discard diagonal
  const double normalizer = static_cast<double>(n * (n - 1));

  const std::vector<double> theta = random_vec(n * d, 6);

  // double-loop oracle on plain arrays
  double expected = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) s += theta[i * d + k] * theta[j * d + k];
      expected += (s - labels[i * n + j]) * (s - labels[i * n + j]);
    }
  expected /= normalizer;

  auto f = [&](const std::vector<double>& p, std::vector<double>* grad) {
    Tape tape;
    std::vector<Tape::NodeId> xs;
    for (std::size_t i = 0; i < n; ++i)
      xs.push_back(tape.leaf({p.begin() + i * d, p.begin() + (i + 1) * d}, true));
    const Tape::NodeId loss = tape.similarity_mse(xs, xs, labels, counted, normalizer);
    if (grad) {
      tape.backward(loss);
      grad->clear();
      for (const Tape::NodeId id : xs) {
        const auto& g = tape.grad(id);
        grad->insert(grad->end(), g.begin(), g.end());
      }
    }
    return tape.value(loss)[0];
  };
  std::vector<double> grad;
  CHECK(f(theta, &grad) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(grad_check(f, theta) < 1e-4);
}

TEST_CASE("stop_gradient blocks the upstream gradient bitwise") {
  Tape tape;
  const Tape::NodeId x = tape.leaf({0.3, -0.7, 1.1}, true);
  const Tape::NodeId cut = tape.stop_gradient(x);
  const Tape::NodeId loss = tape.sum(tape.square(cut));
  tape.backward(loss);
  for (double g : tape.grad(x)) REQUIRE(g == 0.0);
  // forward value passes through unchanged
  CHECK(tape.value(cut) == tape.value(x));
}

TEST_CASE("l2_normalize rejects the zero vector") {
  Tape tape;
  const Tape::NodeId x = tape.leaf({0.0, 0.0}, true);
  CHECK_THROWS_AS(tape.l2_normalize(x), ValidationError);
}

TEST_CASE("grad_check validates eps and reports NaN gradients") {
  auto f = [](const std::vector<double>& p, std::vector<double>* grad) {
    if (grad) grad->assign(p.size(), 0.0);
    return 0.0;
  };
  CHECK_THROWS_AS(grad_check(f, {1.0}, 1e-7), ValidationError);
  CHECK_THROWS_AS(grad_check(f, {1.0}, 1e-2), ValidationError);

  auto bad = [](const std::vector<double>& p, std::vector<double>* grad) {
    if (grad) grad->assign(p.size(), std::nan(""));
    return p[0];
  };
  CHECK_THROWS_AS(grad_check(bad, {1.0}), ValidationError);
}

TEST_CASE("sgd_step moves parameters against the gradient") {
  std::vector<double> params = {1.0, 2.0};
  sgd_step(params, {0.5, -1.0}, 0.1);
  CHECK(params[0] == doctest::Approx(0.95));
  CHECK(params[1] == doctest::Approx(2.1));
}
