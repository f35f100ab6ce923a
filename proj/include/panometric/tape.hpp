// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

namespace panometric {

// Reverse-mode autodiff over flat double tensors. A Tape is rebuilt for every
// forward pass; node creation order doubles as the topological order, so
// backward() is a single reverse sweep. No graph reuse, no broadcasting.
class Tape {
 public:
  using NodeId = int;

  NodeId leaf(std::vector<double> value, bool requires_grad);
  NodeId leaf(const double* value, std::size_t size, bool requires_grad);

  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId scale(NodeId a, double factor);
  // Scalar learnable gate times a tensor; the ControlNet-style zero switch.
  NodeId gate(NodeId scalar, NodeId tensor);
  NodeId square(NodeId a);
  NodeId sum(NodeId a);
  NodeId mean(NodeId a);
  NodeId dot(NodeId a, NodeId b);
  NodeId leaky_relu(NodeId a, double slope = 0.01);
  NodeId l2_normalize(NodeId a);
  NodeId concat(const std::vector<NodeId>& parts);
  NodeId stop_gradient(NodeId a);
  // y = W x + b with W flattened row-major (out x in).
  NodeId affine(NodeId w, NodeId b, NodeId x, int out_dim, int in_dim);
  // Shared affine applied to each consecutive in_dim-sized patch of x.
  NodeId patch_affine(NodeId w, NodeId b, NodeId x, int patches, int out_dim, int in_dim);
  // y[i] = x[index[i]]; a fixed reindexing (patch extraction and the like).
  NodeId gather(NodeId x, const std::vector<int>& index);
  // y[i] = sum_k weights[i*taps+k] * x[index[i*taps+k]]; a fixed sparse linear
  // map (bilinear upsampling of latents).
  NodeId fixed_blend(NodeId x, const std::vector<int>& index,
                     const std::vector<double>& weights, int taps);
  // Mean of (xs[i] . ys[j] - labels[i*m+j])^2 over entries with counted != 0,
  // divided by `normalizer`. Fused so contrastive batches stay O(n^2 d)
  // without n^2 graph nodes.
  NodeId similarity_mse(const std::vector<NodeId>& xs, const std::vector<NodeId>& ys,
                        const std::vector<double>& labels,
                        const std::vector<std::uint8_t>& counted, double normalizer);

  void backward(NodeId root);

  const std::vector<double>& value(NodeId id) const { return nodes_[id].value; }
  const std::vector<double>& grad(NodeId id) const { return nodes_[id].grad; }
  std::size_t size(NodeId id) const { return nodes_[id].value.size(); }
  int node_count() const { return static_cast<int>(nodes_.size()); }

 private:
  struct Node {
    std::vector<double> value;
    std::vector<double> grad;
    std::function<void()> backward;  // empty for leaves and stop_gradient
  };

  NodeId push(std::vector<double> value, std::function<void()> backward);
  void check_same_size(NodeId a, NodeId b, const char* op) const;

  std::vector<Node> nodes_;
};

// Max relative error between analytic gradients and central differences over
// `probes` randomly chosen coordinates of theta (all coordinates if probes<=0).
// f returns the loss and fills the gradient when the out pointer is non-null.
double grad_check(
    const std::function<double(const std::vector<double>&, std::vector<double>*)>& f,
    const std::vector<double>& theta, double eps = 1e-5, int probes = 0,
    std::uint64_t seed = 0x9d5c);

void sgd_step(std::vector<double>& params, const std::vector<double>& grads, double lr);

}  // namespace panometric
