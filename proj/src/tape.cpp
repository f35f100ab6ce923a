// SPDX-License-Identifier: Apache-2.0
#include "panometric/tape.hpp"

#include <algorithm>
#include <cmath>

#include "panometric/error.hpp"
#include "panometric/rng.hpp"

namespace panometric {

Tape::NodeId Tape::push(std::vector<double> value, std::function<void()> backward) {
  nodes_.push_back(Node{std::move(value), {}, std::move(backward)});
  return static_cast<NodeId>(nodes_.size()) - 1;
}

void Tape::check_same_size(NodeId a, NodeId b, const char* op) const {
  if (nodes_[a].value.size() != nodes_[b].value.size())
    throw ValidationError(std::string(op) + ": operand sizes differ");
}

Tape::NodeId Tape::leaf(std::vector<double> value, bool requires_grad) {
  (void)requires_grad;  // grads accumulate for every node; leaves just have no backward
  return push(std::move(value), {});
}

Tape::NodeId Tape::leaf(const double* value, std::size_t size, bool requires_grad) {
  return leaf(std::vector<double>(value, value + size), requires_grad);
}

Tape::NodeId Tape::add(NodeId a, NodeId b) {
  check_same_size(a, b, "add");
  std::vector<double> v = nodes_[a].value;
  const std::vector<double>& bv = nodes_[b].value;
  for (std::size_t i = 0; i < v.size(); ++i) v[i] += bv[i];
  NodeId out = push(std::move(v), {});
  nodes_[out].backward = [this, a, b, out] {
    const std::vector<double>& g = nodes_[out].grad;
    for (std::size_t i = 0; i < g.size(); ++i) {
      nodes_[a].grad[i] += g[i];
      nodes_[b].grad[i] += g[i];
    }
  };
  return out;
}

Tape::NodeId Tape::sub(NodeId a, NodeId b) {
  check_same_size(a, b, "sub");
  std::vector<double> v = nodes_[a].value;
  const std::vector<double>& bv = nodes_[b].value;
  for (std::size_t i = 0; i < v.size(); ++i) v[i] -= bv[i];
  NodeId out = push(std::move(v), {});
  nodes_[out].backward = [this, a, b, out] {
    const std::vector<double>& g = nodes_[out].grad;
    for (std::size_t i = 0; i < g.size(); ++i) {
      nodes_[a].grad[i] += g[i];
      nodes_[b].grad[i] -= g[i];
    }
  };
  return out;
}

Tape::NodeId Tape::scale(NodeId a, double factor) {
  std::vector<double> v = nodes_[a].value;
  for (double& x : v) x *= factor;
  NodeId out = push(std::move(v), {});
  nodes_[out].backward = [this, a, out, factor] {
    const std::vector<double>& g = nodes_[out].grad;
    for (std::size_t i = 0; i < g.size(); ++i) nodes_[a].grad[i] += factor * g[i];
  };
  return out;
}

Tape::NodeId Tape::gate(NodeId scalar, NodeId tensor) {
  if (nodes_[scalar].value.size() != 1) throw ValidationError("gate: scalar operand must have size 1");
  const double s = nodes_[scalar].value[0];
  std::vector<double> v = nodes_[tensor].value;
  for (double& x : v) x *= s;
  NodeId out = push(std::move(v), {});
  nodes_[out].backward = [this, scalar, tensor, out, s] {
    const std::vector<double>& g = nodes_[out].grad;
    const std::vector<double>& tv = nodes_[tensor].value;
    double ds = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      ds += g[i] * tv[i];
      nodes_[tensor].grad[i] += s * g[i];
    }
    nodes_[scalar].grad[0] += ds;
  };
  return out;
}

Tape::NodeId Tape::square(NodeId a) {
  std::vector<double> v = nodes_[a].value;
  for (double& x : v) x *= x;
  NodeId out = push(std::move(v), {});
  nodes_[out].backward = [this, a, out] {
    const std::vector<double>& g = nodes_[out].grad;
    const std::vector<double>& av = nodes_[a].value;
    for (std::size_t i = 0; i < g.size(); ++i) nodes_[a].grad[i] += 2.0 * av[i] * g[i];
  };
  return out;
}

Tape::NodeId Tape::sum(NodeId a) {
  double s = 0.0;
  for (double x : nodes_[a].value) s += x;
  NodeId out = push({s}, {});
  nodes_[out].backward = [this, a, out] {
    const double g = nodes_[out].grad[0];
    for (double& d : nodes_[a].grad) d += g;
  };
  return out;
}

Tape::NodeId Tape::mean(NodeId a) {
  const std::size_t n = nodes_[a].value.size();
  if (n == 0) throw ValidationError("mean of empty tensor");
  double s = 0.0;
  for (double x : nodes_[a].value) s += x;
  NodeId out = push({s / static_cast<double>(n)}, {});
  nodes_[out].backward = [this, a, out, n] {
    const double g = nodes_[out].grad[0] / static_cast<double>(n);
    for (double& d : nodes_[a].grad) d += g;
  };
  return out;
}

Tape::NodeId Tape::dot(NodeId a, NodeId b) {
  check_same_size(a, b, "dot");
  const std::vector<double>& av = nodes_[a].value;
  const std::vector<double>& bv = nodes_[b].value;
  double s = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) s += av[i] * bv[i];
  NodeId out = push({s}, {});
  nodes_[out].backward = [this, a, b, out] {
    const double g = nodes_[out].grad[0];
    const std::vector<double>& av = nodes_[a].value;
    const std::vector<double>& bv = nodes_[b].value;
    for (std::size_t i = 0; i < av.size(); ++i) {
      nodes_[a].grad[i] += g * bv[i];
      nodes_[b].grad[i] += g * av[i];
    }
  };
  return out;
}

Tape::NodeId Tape::leaky_relu(NodeId a, double slope) {
  std::vector<double> v = nodes_[a].value;
  for (double& x : v) x = x >= 0.0 ? x : slope * x;
  NodeId out = push(std::move(v), {});
  nodes_[out].backward = [this, a, out, slope] {
    const std::vector<double>& g = nodes_[out].grad;
    const std::vector<double>& av = nodes_[a].value;
    for (std::size_t i = 0; i < g.size(); ++i)
      nodes_[a].grad[i] += (av[i] >= 0.0 ? 1.0 : slope) * g[i];
  };
  return out;
}

Tape::NodeId Tape::l2_normalize(NodeId a) {
  const std::vector<double>& av = nodes_[a].value;
  double norm2 = 0.0;
  for (double x : av) norm2 += x * x;
  const double norm = std::sqrt(norm2);
  if (!(norm > 0.0)) throw ValidationError("l2_normalize of zero vector");
  std::vector<double> v = av;
  for (double& x : v) x /= norm;
  NodeId out = push(std::move(v), {});
  nodes_[out].backward = [this, a, out, norm] {
    const std::vector<double>& g = nodes_[out].grad;
    const std::vector<double>& yv = nodes_[out].value;
    double gy = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) gy += g[i] * yv[i];
    for (std::size_t i = 0; i < g.size(); ++i)
      nodes_[a].grad[i] += (g[i] - gy * yv[i]) / norm;
  };
  return out;
}

Tape::NodeId Tape::concat(const std::vector<NodeId>& parts) {
  if (parts.empty()) throw ValidationError("concat of no tensors");
  std::vector<double> v;
  for (NodeId p : parts) v.insert(v.end(), nodes_[p].value.begin(), nodes_[p].value.end());
  NodeId out = push(std::move(v), {});
  std::vector<NodeId> copy = parts;
  nodes_[out].backward = [this, copy, out] {
    const std::vector<double>& g = nodes_[out].grad;
    std::size_t off = 0;
    for (NodeId p : copy) {
      std::vector<double>& pg = nodes_[p].grad;
      for (std::size_t i = 0; i < pg.size(); ++i) pg[i] += g[off + i];
      off += pg.size();
    }
  };
  return out;
}

Tape::NodeId Tape::stop_gradient(NodeId a) {
  return push(nodes_[a].value, {});
}

Tape::NodeId Tape::affine(NodeId w, NodeId b, NodeId x, int out_dim, int in_dim) {
  if (nodes_[w].value.size() != static_cast<std::size_t>(out_dim) * in_dim)
    throw ValidationError("affine: weight size mismatch");
  if (nodes_[b].value.size() != static_cast<std::size_t>(out_dim))
    throw ValidationError("affine: bias size mismatch");
  if (nodes_[x].value.size() != static_cast<std::size_t>(in_dim))
    throw ValidationError("affine: input size mismatch");
  const std::vector<double>& wv = nodes_[w].value;
  const std::vector<double>& bv = nodes_[b].value;
  const std::vector<double>& xv = nodes_[x].value;
  std::vector<double> v(out_dim);
  for (int o = 0; o < out_dim; ++o) {
    double s = bv[o];
    const double* row = wv.data() + static_cast<std::size_t>(o) * in_dim;
    for (int i = 0; i < in_dim; ++i) s += row[i] * xv[i];
    v[o] = s;
  }
  NodeId out = push(std::move(v), {});
  nodes_[out].backward = [this, w, b, x, out, out_dim, in_dim] {
    const std::vector<double>& g = nodes_[out].grad;
    const std::vector<double>& wv = nodes_[w].value;
    const std::vector<double>& xv = nodes_[x].value;
    std::vector<double>& wg = nodes_[w].grad;
    std::vector<double>& bg = nodes_[b].grad;
    std::vector<double>& xg = nodes_[x].grad;
    for (int o = 0; o < out_dim; ++o) {
      const double go = g[o];
      if (go == 0.0) continue;
      bg[o] += go;
      const std::size_t base = static_cast<std::size_t>(o) * in_dim;
      for (int i = 0; i < in_dim; ++i) {
        wg[base + i] += go * xv[i];
        xg[i] += go * wv[base + i];
      }
    }
  };
  return out;
}

Tape::NodeId Tape::patch_affine(NodeId w, NodeId b, NodeId x, int patches, int out_dim,
                                int in_dim) {
  if (nodes_[w].value.size() != static_cast<std::size_t>(out_dim) * in_dim)
    throw ValidationError("patch_affine: weight size mismatch");
  if (nodes_[b].value.size() != static_cast<std::size_t>(out_dim))
    throw ValidationError("patch_affine: bias size mismatch");
  if (nodes_[x].value.size() != static_cast<std::size_t>(patches) * in_dim)
    throw ValidationError("patch_affine: input size mismatch");
  const std::vector<double>& wv = nodes_[w].value;
  const std::vector<double>& bv = nodes_[b].value;
  const std::vector<double>& xv = nodes_[x].value;
  std::vector<double> v(static_cast<std::size_t>(patches) * out_dim);
  for (int p = 0; p < patches; ++p) {
    const double* xp = xv.data() + static_cast<std::size_t>(p) * in_dim;
    double* vp = v.data() + static_cast<std::size_t>(p) * out_dim;
    for (int o = 0; o < out_dim; ++o) {
      double s = bv[o];
      const double* row = wv.data() + static_cast<std::size_t>(o) * in_dim;
      for (int i = 0; i < in_dim; ++i) s += row[i] * xp[i];
      vp[o] = s;
    }
  }
  NodeId out = push(std::move(v), {});
  nodes_[out].backward = [this, w, b, x, out, patches, out_dim, in_dim] {
    const std::vector<double>& g = nodes_[out].grad;
    const std::vector<double>& wv = nodes_[w].value;
    const std::vector<double>& xv = nodes_[x].value;
    std::vector<double>& wg = nodes_[w].grad;
    std::vector<double>& bg = nodes_[b].grad;
    std::vector<double>& xg = nodes_[x].grad;
    for (int p = 0; p < patches; ++p) {
      const double* gp = g.data() + static_cast<std::size_t>(p) * out_dim;
      const double* xp = xv.data() + static_cast<std::size_t>(p) * in_dim;
      double* xgp = xg.data() + static_cast<std::size_t>(p) * in_dim;
      for (int o = 0; o < out_dim; ++o) {
        const double go = gp[o];
        if (go == 0.0) continue;
        bg[o] += go;
        const std::size_t base = static_cast<std::size_t>(o) * in_dim;
        for (int i = 0; i < in_dim; ++i) {
          wg[base + i] += go * xp[i];
          xgp[i] += go * wv[base + i];
        }
      }
    }
  };
  return out;
}

Tape::NodeId Tape::gather(NodeId x, const std::vector<int>& index) {
  const std::vector<double>& xv = nodes_[x].value;
  std::vector<double> v(index.size());
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] < 0 || static_cast<std::size_t>(index[i]) >= xv.size())
      throw ValidationError("gather: index out of range");
    v[i] = xv[index[i]];
  }
  NodeId out = push(std::move(v), {});
  std::vector<int> map = index;
  nodes_[out].backward = [this, x, out, map] {
    const std::vector<double>& g = nodes_[out].grad;
    std::vector<double>& xg = nodes_[x].grad;
    for (std::size_t i = 0; i < map.size(); ++i) xg[map[i]] += g[i];
  };
  return out;
}

Tape::NodeId Tape::fixed_blend(NodeId x, const std::vector<int>& index,
                               const std::vector<double>& weights, int taps) {
  if (taps < 1 || index.size() != weights.size() || index.size() % taps != 0)
    throw ValidationError("fixed_blend: bad tap layout");
  const std::vector<double>& xv = nodes_[x].value;
  const std::size_t out_size = index.size() / taps;
  std::vector<double> v(out_size, 0.0);
  for (std::size_t i = 0; i < out_size; ++i)
    for (int k = 0; k < taps; ++k) {
      const std::size_t slot = i * taps + k;
      if (index[slot] < 0 || static_cast<std::size_t>(index[slot]) >= xv.size())
        throw ValidationError("fixed_blend: index out of range");
      v[i] += weights[slot] * xv[index[slot]];
    }
  NodeId out = push(std::move(v), {});
  std::vector<int> map = index;
  std::vector<double> wts = weights;
  nodes_[out].backward = [this, x, out, map, wts, taps] {
    const std::vector<double>& g = nodes_[out].grad;
    std::vector<double>& xg = nodes_[x].grad;
    for (std::size_t i = 0; i < g.size(); ++i)
      for (int k = 0; k < taps; ++k) {
        const std::size_t slot = i * static_cast<std::size_t>(taps) + k;
        xg[map[slot]] += wts[slot] * g[i];
      }
  };
  return out;
}

Tape::NodeId Tape::similarity_mse(const std::vector<NodeId>& xs, const std::vector<NodeId>& ys,
                                  const std::vector<double>& labels,
                                  const std::vector<std::uint8_t>& counted, double normalizer) {
  const std::size_t n = xs.size(), m = ys.size();
  if (n == 0 || m == 0) throw ValidationError("similarity_mse: empty batch");
  if (labels.size() != n * m || counted.size() != n * m)
    throw ValidationError("similarity_mse: label table size mismatch");
  if (!(normalizer > 0.0)) throw ValidationError("similarity_mse: normalizer must be positive");
  const std::size_t d = nodes_[xs[0]].value.size();
  for (NodeId id : xs)
    if (nodes_[id].value.size() != d) throw ValidationError("similarity_mse: ragged rows");
  for (NodeId id : ys)
    if (nodes_[id].value.size() != d) throw ValidationError("similarity_mse: ragged rows");

  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      if (!counted[i * m + j]) continue;
      const std::vector<double>& xi = nodes_[xs[i]].value;
      const std::vector<double>& yj = nodes_[ys[j]].value;
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) s += xi[k] * yj[k];
      const double r = s - labels[i * m + j];
      acc += r * r;
    }
  NodeId out = push({acc / normalizer}, {});
  std::vector<NodeId> xs_copy = xs, ys_copy = ys;
  std::vector<double> lab = labels;
  std::vector<std::uint8_t> cnt = counted;
  nodes_[out].backward = [this, xs_copy, ys_copy, lab, cnt, normalizer, out, d] {
    const double g = nodes_[out].grad[0] * 2.0 / normalizer;
    const std::size_t n = xs_copy.size(), m = ys_copy.size();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) {
        if (!cnt[i * m + j]) continue;
        const std::vector<double>& xi = nodes_[xs_copy[i]].value;
        const std::vector<double>& yj = nodes_[ys_copy[j]].value;
        double s = 0.0;
        for (std::size_t k = 0; k < d; ++k) s += xi[k] * yj[k];
        const double coeff = g * (s - lab[i * m + j]);
        std::vector<double>& xg = nodes_[xs_copy[i]].grad;
        std::vector<double>& yg = nodes_[ys_copy[j]].grad;
        for (std::size_t k = 0; k < d; ++k) {
          xg[k] += coeff * yj[k];
          yg[k] += coeff * xi[k];
        }
      }
  };
  return out;
}

void Tape::backward(NodeId root) {
  if (nodes_[root].value.size() != 1)
    throw ValidationError("backward root must be a scalar");
  for (Node& n : nodes_) n.grad.assign(n.value.size(), 0.0);
  nodes_[root].grad[0] = 1.0;
  for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i)
    if (nodes_[i].backward) nodes_[i].backward();
}

double grad_check(
    const std::function<double(const std::vector<double>&, std::vector<double>*)>& f,
    const std::vector<double>& theta, double eps, int probes, std::uint64_t seed) {
  if (!(eps >= 1e-6 && eps <= 1e-3))
    throw ValidationError("grad_check: eps must lie in [1e-6, 1e-3]");
  std::vector<double> analytic;
  f(theta, &analytic);
  if (analytic.size() != theta.size())
    throw ValidationError("grad_check: gradient size does not match parameter size");
  for (double g : analytic)
    if (std::isnan(g)) throw ValidationError("grad_check: NaN in analytic gradient");

  std::vector<std::size_t> coords;
  if (probes <= 0 || static_cast<std::size_t>(probes) >= theta.size()) {
    coords.resize(theta.size());
    for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
  } else {
    SplitMix64 rng(seed);
    std::vector<std::size_t> perm = rng.permutation(theta.size());
    coords.assign(perm.begin(), perm.begin() + probes);
  }

  double worst = 0.0;
  std::vector<double> probe = theta;
  for (std::size_t idx : coords) {
    const double saved = probe[idx];
    probe[idx] = saved + eps;
    const double hi = f(probe, nullptr);
    probe[idx] = saved - eps;
    const double lo = f(probe, nullptr);
    probe[idx] = saved;
    const double fd = (hi - lo) / (2.0 * eps);
    if (std::isnan(fd)) throw ValidationError("grad_check: NaN in finite-difference gradient");
    const double a = analytic[idx];
    const double rel = std::fabs(a - fd) / std::max({std::fabs(a), std::fabs(fd), 1e-3});
    worst = std::max(worst, rel);
  }
  return worst;
}

void sgd_step(std::vector<double>& params, const std::vector<double>& grads, double lr) {
  if (params.size() != grads.size()) throw ValidationError("sgd_step size mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr * grads[i];
}

}  // namespace panometric
