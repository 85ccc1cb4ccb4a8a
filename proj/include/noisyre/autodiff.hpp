#pragma once

#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "noisyre/tensor.hpp"

namespace noisyre::ad {

class Node;
using NodePtr = std::shared_ptr<Node>;

// One value in the computation graph. Interior nodes carry a closure that
// scatters this node's gradient into its inputs.
class Node {
public:
  Tensor value;
  Tensor grad;
  bool requires_grad = false;
  std::string label;
  std::function<void(const Node&)> backprop;  // empty for leaves

  explicit Node(Tensor v, bool req = false, std::string name = {});
  void zero_grad();
};

// Leaf holding a constant; gradients are never read back from it.
NodePtr constant(Tensor v);
// Leaf holding a trainable value; gradients accumulate across backward passes
// until zero_grad.
NodePtr leaf(Tensor v, std::string label);

// Records interior nodes in construction order; backward() walks them in
// reverse, a valid topological order for a sequentially built graph.
class Tape {
public:
  NodePtr record(NodePtr n);
  void backward(const NodePtr& loss);
  std::size_t node_count() const { return nodes_.size(); }

private:
  std::vector<NodePtr> nodes_;
};

using SegmentList = std::vector<std::pair<std::size_t, std::size_t>>;

// -------- primitives --------
// All ops validate input shapes at construction and throw
// std::invalid_argument naming the offending shapes.

// table: R x d, out: rows.size() x d
NodePtr gather_rows(Tape& t, NodePtr table, std::vector<std::size_t> rows);
// all parts n x d_i, out: n x sum(d_i)
NodePtr concat_cols(Tape& t, std::vector<NodePtr> parts);
// x: n x d, filters: m x (window*d), bias: m, out: m x (n-window+1)
NodePtr conv1d(Tape& t, NodePtr x, NodePtr filters, NodePtr bias, std::size_t window);
// features: m x T; segments are half-open column ranges; out: m x segments.size().
// Empty segments pool to 0; gradient routes to the lowest-index maximum.
NodePtr segmented_max(Tape& t, NodePtr features, SegmentList segments);
NodePtr tanh(Tape& t, NodePtr x);
// elementwise multiply by a constant mask (inverted-dropout scaling lives in the mask)
NodePtr mask_mul(Tape& t, NodePtr x, std::vector<double> mask);
// w: K x n, x: any tensor with n values (read flat), b: K, out: K
NodePtr affine(Tape& t, NodePtr w, NodePtr x, NodePtr b);
// first_column: K, h: K, out_k = col_k * h_0 + h_k * [k != 0]
NodePtr structured_apply(Tape& t, NodePtr first_column, NodePtr h);
NodePtr log_sum_exp(Tape& t, NodePtr x);
NodePtr pick(Tape& t, NodePtr x, std::size_t index);
NodePtr add(Tape& t, NodePtr a, NodePtr b);
NodePtr sub(Tape& t, NodePtr a, NodePtr b);
NodePtr mul(Tape& t, NodePtr a, NodePtr b);
NodePtr scale(Tape& t, NodePtr x, double c);
NodePtr sum(Tape& t, NodePtr x);
// weighted sum of scalar nodes; the workhorse for assembling bag losses
NodePtr weighted_sum(Tape& t, std::vector<NodePtr> scalars, std::vector<double> weights);

}  // namespace noisyre::ad
