#pragma once

#include <cmath>
#include <initializer_list>
#include <cstddef>
#include <string>
#include <vector>

namespace modnet {

// Dense row-major tensor of doubles, rank 0 (scalar), 1 (vector) or 2
// (matrix). Everything in this project is small enough that a flat
// std::vector is the right representation.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> v;

  Tensor() = default;

  static Tensor scalar(double x) {
    Tensor t;
    t.v.assign(1, x);
    return t;
  }
  static Tensor vec(int n, double fill = 0.0) {
    Tensor t;
    t.shape = {n};
    t.v.assign(static_cast<std::size_t>(n), fill);
    return t;
  }
  static Tensor vec(std::vector<double> values) {
    Tensor t;
    t.shape = {static_cast<int>(values.size())};
    t.v = std::move(values);
    return t;
  }
  // Braced lists always mean element values, never a length.
  static Tensor vec(std::initializer_list<double> values) {
    return vec(std::vector<double>(values));
  }
  static Tensor mat(int rows, int cols, double fill = 0.0) {
    Tensor t;
    t.shape = {rows, cols};
    t.v.assign(static_cast<std::size_t>(rows) * cols, fill);
    return t;
  }
  static Tensor mat(int rows, int cols, std::vector<double> values) {
    Tensor t;
    t.shape = {rows, cols};
    t.v = std::move(values);  // row-major; caller supplies rows*cols entries
    return t;
  }
  static Tensor mat(int rows, int cols, std::initializer_list<double> values) {
    return mat(rows, cols, std::vector<double>(values));
  }
  static Tensor zeros_like(const Tensor& other) {
    Tensor t;
    t.shape = other.shape;
    t.v.assign(other.v.size(), 0.0);
    return t;
  }

  int rank() const { return static_cast<int>(shape.size()); }
  bool is_scalar() const { return shape.empty(); }
  int rows() const { return shape[0]; }
  int cols() const { return shape[1]; }
  std::size_t size() const { return v.size(); }

  double item() const { return v[0]; }
  double& at(int i) { return v[static_cast<std::size_t>(i)]; }
  double at(int i) const { return v[static_cast<std::size_t>(i)]; }
  double& at(int i, int j) { return v[static_cast<std::size_t>(i) * cols() + j]; }
  double at(int i, int j) const { return v[static_cast<std::size_t>(i) * cols() + j]; }

  bool same_shape(const Tensor& other) const { return shape == other.shape; }

  bool all_finite() const {
    for (double x : v)
      if (!std::isfinite(x)) return false;
    return true;
  }

  std::string shape_str() const {
    if (shape.empty()) return "[scalar]";
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
      if (i) s += "x";
      s += std::to_string(shape[i]);
    }
    return s + "]";
  }

  bool operator==(const Tensor& other) const {
    return shape == other.shape && v == other.v;
  }
};

}  // namespace modnet
