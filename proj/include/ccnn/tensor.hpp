#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "ccnn/error.hpp"

namespace ccnn {

// Dimensions of a 4-D (batch, channels, height, width) array.
struct Shape {
  std::size_t n = 1;
  std::size_t c = 1;
  std::size_t h = 1;
  std::size_t w = 1;

  std::size_t size() const { return n * c * h * w; }
  std::size_t plane() const { return h * w; }
  bool same_spatial(const Shape& o) const { return h == o.h && w == o.w; }
  friend bool operator==(const Shape&, const Shape&) = default;

  std::string str() const {
    std::ostringstream os;
    os << '(' << n << ',' << c << ',' << h << ',' << w << ')';
    return os.str();
  }
};

// Dense row-major (n, c, h, w) array. All dims are at least one.
template <typename T>
class Tensor {
public:
  using value_type = T;

  Tensor() : shape_{}, data_(1, T(0)) {}

  explicit Tensor(Shape s, T fill = T(0)) : shape_(check(s)), data_(s.size(), fill) {}

  Tensor(std::size_t n, std::size_t c, std::size_t h, std::size_t w, T fill = T(0))
      : Tensor(Shape{n, c, h, w}, fill) {}

  Tensor(Shape s, std::vector<T> data) : shape_(check(s)), data_(std::move(data)) {
    if (data_.size() != shape_.size()) {
      throw ConfigError("tensor data length " + std::to_string(data_.size()) +
                        " does not match shape " + shape_.str());
    }
  }

  const Shape& shape() const { return shape_; }
  std::size_t n() const { return shape_.n; }
  std::size_t c() const { return shape_.c; }
  std::size_t h() const { return shape_.h; }
  std::size_t w() const { return shape_.w; }
  std::size_t size() const { return data_.size(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> flat() { return data_; }
  std::span<const T> flat() const { return data_; }
  std::vector<T>& vec() { return data_; }
  const std::vector<T>& vec() const { return data_; }

  std::size_t index(std::size_t i, std::size_t ch, std::size_t y, std::size_t x) const {
    return ((i * shape_.c + ch) * shape_.h + y) * shape_.w + x;
  }
  T& operator()(std::size_t i, std::size_t ch, std::size_t y, std::size_t x) {
    return data_[index(i, ch, y, x)];
  }
  const T& operator()(std::size_t i, std::size_t ch, std::size_t y, std::size_t x) const {
    return data_[index(i, ch, y, x)];
  }
  T& operator[](std::size_t k) { return data_[k]; }
  const T& operator[](std::size_t k) const { return data_[k]; }

  // One (h, w) plane of sample i, channel ch.
  std::span<T> plane(std::size_t i, std::size_t ch) {
    return {data_.data() + index(i, ch, 0, 0), shape_.plane()};
  }
  std::span<const T> plane(std::size_t i, std::size_t ch) const {
    return {data_.data() + index(i, ch, 0, 0), shape_.plane()};
  }

  // All channels of sample i as one contiguous block.
  std::span<T> sample_span(std::size_t i) {
    return {data_.data() + index(i, 0, 0, 0), shape_.c * shape_.plane()};
  }
  std::span<const T> sample_span(std::size_t i) const {
    return {data_.data() + index(i, 0, 0, 0), shape_.c * shape_.plane()};
  }

  Tensor sample(std::size_t i) const {
    auto s = sample_span(i);
    return Tensor(Shape{1, shape_.c, shape_.h, shape_.w}, std::vector<T>(s.begin(), s.end()));
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  template <typename U>
  Tensor<U> cast() const {
    std::vector<U> out(data_.size());
    std::transform(data_.begin(), data_.end(), out.begin(), [](T v) { return static_cast<U>(v); });
    return Tensor<U>(shape_, std::move(out));
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;

private:
  static Shape check(Shape s) {
    if (s.n == 0 || s.c == 0 || s.h == 0 || s.w == 0) {
      throw ConfigError("tensor dims must be >= 1, got " + s.str());
    }
    return s;
  }

  Shape shape_;
  std::vector<T> data_;
};

// Throws ConfigError naming both shapes when they differ.
inline void require_same_shape(const Shape& a, const Shape& b, const char* what) {
  if (!(a == b)) {
    throw ConfigError(std::string(what) + ": shape mismatch " + a.str() + " vs " + b.str());
  }
}

template <typename T>
Tensor<T> clip01(Tensor<T> t) {
  for (auto& v : t.vec()) v = std::clamp(v, T(0), T(1));
  return t;
}

}  // namespace ccnn
