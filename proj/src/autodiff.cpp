#include "noisyre/autodiff.hpp"

#include <cmath>
#include <stdexcept>

#include "noisyre/numeric.hpp"

namespace noisyre::ad {

namespace {

[[noreturn]] void shape_error(const std::string& op, const std::string& detail) {
  throw std::invalid_argument(op + ": " + detail);
}

bool any_requires(const std::vector<NodePtr>& inputs) {
  for (const auto& n : inputs) {
    if (n->requires_grad) return true;
  }
  return false;
}

NodePtr make_interior(Tape& t, Tensor value, std::vector<NodePtr> inputs,
                      std::function<void(const Node&)> backprop) {
  auto n = std::make_shared<Node>(std::move(value), any_requires(inputs));
  if (n->requires_grad) n->backprop = std::move(backprop);
  return t.record(std::move(n));
}

}  // namespace

Node::Node(Tensor v, bool req, std::string name)
    : value(std::move(v)), grad(Tensor::zeros(value.shape)), requires_grad(req), label(std::move(name)) {}

void Node::zero_grad() { grad.fill(0.0); }

NodePtr constant(Tensor v) { return std::make_shared<Node>(std::move(v), false); }

NodePtr leaf(Tensor v, std::string label) {
  return std::make_shared<Node>(std::move(v), true, std::move(label));
}

NodePtr Tape::record(NodePtr n) {
  nodes_.push_back(n);
  return n;
}

void Tape::backward(const NodePtr& loss) {
  if (loss->value.size() != 1) {
    shape_error("backward", "loss must be scalar, got shape " + shape_str(loss->value.shape));
  }
  loss->grad.values[0] = 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    const Node& n = **it;
    if (n.requires_grad && n.backprop) n.backprop(n);
  }
}

NodePtr gather_rows(Tape& t, NodePtr table, std::vector<std::size_t> rows) {
  if (table->value.rank() != 2) {
    shape_error("gather_rows", "table must be rank 2, got " + shape_str(table->value.shape));
  }
  const std::size_t r = table->value.rows();
  const std::size_t d = table->value.cols();
  for (std::size_t idx : rows) {
    if (idx >= r) {
      shape_error("gather_rows", "row index " + std::to_string(idx) + " out of range for table " +
                                     shape_str(table->value.shape));
    }
  }
  Tensor out = Tensor::zeros({rows.size(), d});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < d; ++j) out.at2(i, j) = table->value.at2(rows[i], j);
  }
  return make_interior(t, std::move(out), {table},
                       [table, rows = std::move(rows), d](const Node& self) {
                         for (std::size_t i = 0; i < rows.size(); ++i) {
                           for (std::size_t j = 0; j < d; ++j) {
                             table->grad.at2(rows[i], j) += self.grad.at2(i, j);
                           }
                         }
                       });
}

NodePtr concat_cols(Tape& t, std::vector<NodePtr> parts) {
  if (parts.empty()) shape_error("concat_cols", "no parts given");
  const std::size_t n = parts[0]->value.rows();
  std::size_t total = 0;
  for (const auto& p : parts) {
    if (p->value.rank() != 2 || p->value.rows() != n) {
      shape_error("concat_cols", "part shape " + shape_str(p->value.shape) +
                                     " incompatible with row count " + std::to_string(n));
    }
    total += p->value.cols();
  }
  Tensor out = Tensor::zeros({n, total});
  std::size_t off = 0;
  for (const auto& p : parts) {
    const std::size_t d = p->value.cols();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < d; ++j) out.at2(i, off + j) = p->value.at2(i, j);
    }
    off += d;
  }
  return make_interior(t, std::move(out), parts, [parts, n](const Node& self) {
    std::size_t off = 0;
    for (const auto& p : parts) {
      const std::size_t d = p->value.cols();
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) p->grad.at2(i, j) += self.grad.at2(i, off + j);
      }
      off += d;
    }
  });
}

NodePtr conv1d(Tape& t, NodePtr x, NodePtr filters, NodePtr bias, std::size_t window) {
  if (x->value.rank() != 2) shape_error("conv1d", "input must be rank 2, got " + shape_str(x->value.shape));
  const std::size_t n = x->value.rows();
  const std::size_t d = x->value.cols();
  if (n < window) {
    shape_error("conv1d", "input " + shape_str(x->value.shape) + " shorter than window " +
                              std::to_string(window));
  }
  if (filters->value.rank() != 2 || filters->value.cols() != window * d) {
    shape_error("conv1d", "filters " + shape_str(filters->value.shape) + " do not match window*d = " +
                              std::to_string(window * d) + " for input " + shape_str(x->value.shape));
  }
  const std::size_t m = filters->value.rows();
  if (bias->value.shape != std::vector<std::size_t>{m}) {
    shape_error("conv1d", "bias " + shape_str(bias->value.shape) + " does not match filter count " +
                              std::to_string(m));
  }
  const std::size_t steps = n - window + 1;
  Tensor out = Tensor::zeros({m, steps});
  for (std::size_t f = 0; f < m; ++f) {
    const double* w = &filters->value.values[f * window * d];
    for (std::size_t i = 0; i < steps; ++i) {
      double s = 0.0;
      const double* xi = &x->value.values[i * d];
      for (std::size_t k = 0; k < window * d; ++k) s += w[k] * xi[k];
      out.at2(f, i) = s + bias->value.at(f);
    }
  }
  return make_interior(t, std::move(out), {x, filters, bias},
                       [x, filters, bias, window, d, m, steps](const Node& self) {
                         for (std::size_t f = 0; f < m; ++f) {
                           const double* w = &filters->value.values[f * window * d];
                           double* wg = &filters->grad.values[f * window * d];
                           for (std::size_t i = 0; i < steps; ++i) {
                             const double g = self.grad.at2(f, i);
                             if (g == 0.0) continue;
                             const double* xi = &x->value.values[i * d];
                             double* xg = &x->grad.values[i * d];
                             for (std::size_t k = 0; k < window * d; ++k) {
                               wg[k] += g * xi[k];
                               xg[k] += g * w[k];
                             }
                             bias->grad.at(f) += g;
                           }
                         }
                       });
}

NodePtr segmented_max(Tape& t, NodePtr features, SegmentList segments) {
  if (features->value.rank() != 2) {
    shape_error("segmented_max", "features must be rank 2, got " + shape_str(features->value.shape));
  }
  const std::size_t m = features->value.rows();
  const std::size_t cols = features->value.cols();
  for (const auto& [b, e] : segments) {
    if (b > e || e > cols) {
      shape_error("segmented_max", "segment [" + std::to_string(b) + ", " + std::to_string(e) +
                                       ") out of range for " + shape_str(features->value.shape));
    }
  }
  const std::size_t s = segments.size();
  Tensor out = Tensor::zeros({m, s});
  // argmax per (filter, segment); SIZE_MAX marks an empty segment
  std::vector<std::size_t> arg(m * s, SIZE_MAX);
  for (std::size_t f = 0; f < m; ++f) {
    for (std::size_t q = 0; q < s; ++q) {
      const auto [b, e] = segments[q];
      if (b == e) continue;  // empty segment pools to 0
      std::size_t best = b;
      for (std::size_t i = b + 1; i < e; ++i) {
        if (features->value.at2(f, i) > features->value.at2(f, best)) best = i;
      }
      arg[f * s + q] = best;
      out.at2(f, q) = features->value.at2(f, best);
    }
  }
  return make_interior(t, std::move(out), {features},
                       [features, arg = std::move(arg), m, s](const Node& self) {
                         for (std::size_t f = 0; f < m; ++f) {
                           for (std::size_t q = 0; q < s; ++q) {
                             const std::size_t best = arg[f * s + q];
                             if (best == SIZE_MAX) continue;
                             features->grad.at2(f, best) += self.grad.at2(f, q);
                           }
                         }
                       });
}

NodePtr tanh(Tape& t, NodePtr x) {
  Tensor out = x->value;
  for (double& v : out.values) v = std::tanh(v);
  return make_interior(t, std::move(out), {x}, [x](const Node& self) {
    for (std::size_t i = 0; i < x->grad.size(); ++i) {
      const double y = self.value.at(i);
      x->grad.at(i) += self.grad.at(i) * (1.0 - y * y);
    }
  });
}

NodePtr mask_mul(Tape& t, NodePtr x, std::vector<double> mask) {
  if (mask.size() != x->value.size()) {
    shape_error("mask_mul", "mask of " + std::to_string(mask.size()) + " values does not match input " +
                                shape_str(x->value.shape));
  }
  Tensor out = x->value;
  for (std::size_t i = 0; i < mask.size(); ++i) out.at(i) *= mask[i];
  return make_interior(t, std::move(out), {x}, [x, mask = std::move(mask)](const Node& self) {
    for (std::size_t i = 0; i < mask.size(); ++i) x->grad.at(i) += self.grad.at(i) * mask[i];
  });
}

NodePtr affine(Tape& t, NodePtr w, NodePtr x, NodePtr b) {
  if (w->value.rank() != 2) shape_error("affine", "weight must be rank 2, got " + shape_str(w->value.shape));
  const std::size_t k = w->value.rows();
  const std::size_t n = w->value.cols();
  if (x->value.size() != n) {
    shape_error("affine", "input " + shape_str(x->value.shape) + " does not match weight " +
                              shape_str(w->value.shape));
  }
  if (b->value.shape != std::vector<std::size_t>{k}) {
    shape_error("affine", "bias " + shape_str(b->value.shape) + " does not match weight rows " +
                              std::to_string(k));
  }
  Tensor out = Tensor::zeros({k});
  for (std::size_t r = 0; r < k; ++r) {
    double s = 0.0;
    const double* wr = &w->value.values[r * n];
    for (std::size_t j = 0; j < n; ++j) s += wr[j] * x->value.at(j);
    out.at(r) = s + b->value.at(r);
  }
  return make_interior(t, std::move(out), {w, x, b}, [w, x, b, k, n](const Node& self) {
    for (std::size_t r = 0; r < k; ++r) {
      const double g = self.grad.at(r);
      if (g == 0.0) continue;
      const double* wr = &w->value.values[r * n];
      double* wg = &w->grad.values[r * n];
      for (std::size_t j = 0; j < n; ++j) {
        wg[j] += g * x->value.at(j);
        x->grad.at(j) += g * wr[j];
      }
      b->grad.at(r) += g;
    }
  });
}

NodePtr structured_apply(Tape& t, NodePtr first_column, NodePtr h) {
  const std::size_t k = h->value.size();
  if (first_column->value.size() != k) {
    shape_error("structured_apply", "first column " + shape_str(first_column->value.shape) +
                                        " does not match logits " + shape_str(h->value.shape));
  }
  Tensor out = Tensor::zeros({k});
  const double h0 = h->value.at(0);
  for (std::size_t i = 0; i < k; ++i) {
    out.at(i) = first_column->value.at(i) * h0 + (i != 0 ? h->value.at(i) : 0.0);
  }
  return make_interior(t, std::move(out), {first_column, h}, [first_column, h, k](const Node& self) {
    const double h0 = h->value.at(0);
    double h0_grad = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      const double g = self.grad.at(i);
      first_column->grad.at(i) += g * h0;
      h0_grad += g * first_column->value.at(i);
      if (i != 0) h->grad.at(i) += g;
    }
    h->grad.at(0) += h0_grad;
  });
}

NodePtr log_sum_exp(Tape& t, NodePtr x) {
  if (x->value.size() == 0) shape_error("log_sum_exp", "empty input");
  const double lse = noisyre::log_sum_exp(x->value.values);
  return make_interior(t, Tensor::scalar(lse), {x}, [x](const Node& self) {
    const double g = self.grad.at(0);
    const double lse = self.value.at(0);
    for (std::size_t i = 0; i < x->grad.size(); ++i) {
      x->grad.at(i) += g * std::exp(x->value.at(i) - lse);
    }
  });
}

NodePtr pick(Tape& t, NodePtr x, std::size_t index) {
  if (index >= x->value.size()) {
    shape_error("pick", "index " + std::to_string(index) + " out of range for " +
                            shape_str(x->value.shape));
  }
  return make_interior(t, Tensor::scalar(x->value.at(index)), {x}, [x, index](const Node& self) {
    x->grad.at(index) += self.grad.at(0);
  });
}

namespace {

void check_same_shape(const char* op, const NodePtr& a, const NodePtr& b) {
  if (a->value.shape != b->value.shape) {
    shape_error(op, "shapes " + shape_str(a->value.shape) + " and " + shape_str(b->value.shape) +
                        " differ");
  }
}

}  // namespace

NodePtr add(Tape& t, NodePtr a, NodePtr b) {
  check_same_shape("add", a, b);
  Tensor out = a->value;
  for (std::size_t i = 0; i < out.size(); ++i) out.at(i) += b->value.at(i);
  return make_interior(t, std::move(out), {a, b}, [a, b](const Node& self) {
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      a->grad.at(i) += self.grad.at(i);
      b->grad.at(i) += self.grad.at(i);
    }
  });
}

NodePtr sub(Tape& t, NodePtr a, NodePtr b) {
  check_same_shape("sub", a, b);
  Tensor out = a->value;
  for (std::size_t i = 0; i < out.size(); ++i) out.at(i) -= b->value.at(i);
  return make_interior(t, std::move(out), {a, b}, [a, b](const Node& self) {
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      a->grad.at(i) += self.grad.at(i);
      b->grad.at(i) -= self.grad.at(i);
    }
  });
}

NodePtr mul(Tape& t, NodePtr a, NodePtr b) {
  check_same_shape("mul", a, b);
  Tensor out = a->value;
  for (std::size_t i = 0; i < out.size(); ++i) out.at(i) *= b->value.at(i);
  return make_interior(t, std::move(out), {a, b}, [a, b](const Node& self) {
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      a->grad.at(i) += self.grad.at(i) * b->value.at(i);
      b->grad.at(i) += self.grad.at(i) * a->value.at(i);
    }
  });
}

NodePtr scale(Tape& t, NodePtr x, double c) {
  Tensor out = x->value;
  for (double& v : out.values) v *= c;
  return make_interior(t, std::move(out), {x}, [x, c](const Node& self) {
    for (std::size_t i = 0; i < self.grad.size(); ++i) x->grad.at(i) += self.grad.at(i) * c;
  });
}

NodePtr sum(Tape& t, NodePtr x) {
  double s = 0.0;
  for (double v : x->value.values) s += v;
  return make_interior(t, Tensor::scalar(s), {x}, [x](const Node& self) {
    const double g = self.grad.at(0);
    for (std::size_t i = 0; i < x->grad.size(); ++i) x->grad.at(i) += g;
  });
}

NodePtr weighted_sum(Tape& t, std::vector<NodePtr> scalars, std::vector<double> weights) {
  if (scalars.size() != weights.size()) {
    shape_error("weighted_sum", std::to_string(scalars.size()) + " terms vs " +
                                    std::to_string(weights.size()) + " weights");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < scalars.size(); ++i) {
    if (scalars[i]->value.size() != 1) {
      shape_error("weighted_sum", "term " + std::to_string(i) + " has shape " +
                                      shape_str(scalars[i]->value.shape) + ", expected scalar");
    }
    s += weights[i] * scalars[i]->value.at(0);
  }
  std::vector<NodePtr> inputs = scalars;
  return make_interior(t, Tensor::scalar(s), std::move(inputs),
                       [scalars = std::move(scalars), weights = std::move(weights)](const Node& self) {
                         const double g = self.grad.at(0);
                         for (std::size_t i = 0; i < scalars.size(); ++i) {
                           scalars[i]->grad.at(0) += g * weights[i];
                         }
                       });
}

}  // namespace noisyre::ad
