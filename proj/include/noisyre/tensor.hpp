#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace noisyre::ad {

// Dense row-major tensor of 64-bit reals. Rank 0 is a scalar holding one value.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> values;

  Tensor() = default;
  Tensor(std::vector<std::size_t> s, std::vector<double> v);

  static Tensor zeros(std::vector<std::size_t> shape);
  static Tensor scalar(double v);
  static Tensor vec(std::vector<double> v);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> v);

  std::size_t size() const { return values.size(); }
  std::size_t rank() const { return shape.size(); }
  std::size_t rows() const;
  std::size_t cols() const;

  double& at(std::size_t i) { return values[i]; }
  double at(std::size_t i) const { return values[i]; }
  double& at2(std::size_t r, std::size_t c) { return values[r * cols() + c]; }
  double at2(std::size_t r, std::size_t c) const { return values[r * cols() + c]; }

  // requires size() == 1
  double scalar_value() const;

  void fill(double v);
  bool all_finite() const;
};

std::size_t shape_size(const std::vector<std::size_t>& shape);
std::string shape_str(const std::vector<std::size_t>& shape);

}  // namespace noisyre::ad
