#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "rwenas/errors.hpp"

namespace rwenas {

struct Shape4 {
  int batch = 1;
  int channels = 1;
  int height = 1;
  int width = 1;

  std::size_t size() const {
    return static_cast<std::size_t>(batch) * channels * height * width;
  }
  std::size_t plane() const { return static_cast<std::size_t>(height) * width; }
  std::string str() const {
    return "(" + std::to_string(batch) + ", " + std::to_string(channels) + ", " +
           std::to_string(height) + ", " + std::to_string(width) + ")";
  }

  friend bool operator==(const Shape4&, const Shape4&) = default;
};

// Dense NCHW float32 tensor.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape4 shape) : shape_(shape), data_(checked_size(shape), 0.0f) {}
  Tensor(Shape4 shape, std::vector<float> data) : shape_(shape), data_(std::move(data)) {
    if (data_.size() != checked_size(shape)) {
      throw ShapeMismatch("data length " + std::to_string(data_.size()) +
                          " does not match shape " + shape.str());
    }
  }

  const Shape4& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }

  float* plane(int n, int c) { return data_.data() + offset(n, c); }
  const float* plane(int n, int c) const { return data_.data() + offset(n, c); }

  float& at(int n, int c, int h, int w) {
    return data_[offset(n, c) + static_cast<std::size_t>(h) * shape_.width + w];
  }
  float at(int n, int c, int h, int w) const {
    return data_[offset(n, c) + static_cast<std::size_t>(h) * shape_.width + w];
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  static std::size_t checked_size(const Shape4& s) {
    if (s.batch < 1 || s.channels < 1 || s.height < 1 || s.width < 1) {
      throw ShapeMismatch("tensor dimensions must be >= 1, got " + s.str());
    }
    return s.size();
  }
  std::size_t offset(int n, int c) const {
    return (static_cast<std::size_t>(n) * shape_.channels + c) * shape_.plane();
  }

  Shape4 shape_{};
  std::vector<float> data_;
};

// Row-major dense matrix used for features and classifier weights.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<float> values;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), values(static_cast<std::size_t>(r) * c, 0.0f) {}

  float& operator()(int r, int c) { return values[static_cast<std::size_t>(r) * cols + c]; }
  float operator()(int r, int c) const { return values[static_cast<std::size_t>(r) * cols + c]; }
  std::span<const float> row(int r) const {
    return {values.data() + static_cast<std::size_t>(r) * cols, static_cast<std::size_t>(cols)};
  }
  std::span<float> row(int r) {
    return {values.data() + static_cast<std::size_t>(r) * cols, static_cast<std::size_t>(cols)};
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

}  // namespace rwenas
