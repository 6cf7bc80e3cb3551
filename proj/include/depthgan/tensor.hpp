#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "depthgan/common.hpp"

namespace depthgan {

// Dense row-major tensor. Shapes are small (rank <= 4, NCHW for images), so a
// plain vector<int> shape plus vector<T> storage is all we need.
template <typename T>
struct Tensor {
  std::vector<int> shape;
  std::vector<T> v;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    v.assign(static_cast<std::size_t>(numel_of(shape)), T(0));
  }
  Tensor(std::vector<int> s, T fill) : shape(std::move(s)) {
    v.assign(static_cast<std::size_t>(numel_of(shape)), fill);
  }

  static std::int64_t numel_of(const std::vector<int>& s) {
    std::int64_t n = 1;
    for (int d : s) {
      if (d <= 0) throw ShapeError("tensor dims must be positive, got " + shape_str(s));
      n *= d;
    }
    return n;
  }

  std::int64_t numel() const { return static_cast<std::int64_t>(v.size()); }
  int rank() const { return static_cast<int>(shape.size()); }
  int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }

  T* data() { return v.data(); }
  const T* data() const { return v.data(); }

  T& operator[](std::int64_t i) { return v[static_cast<std::size_t>(i)]; }
  const T& operator[](std::int64_t i) const { return v[static_cast<std::size_t>(i)]; }

  // NCHW accessor; shapes of rank < 4 are treated as left-padded with 1s,
  // so [C,H,W] tensors index as at(0, c, h, w).
  std::size_t nchw_index(int n, int c, int h, int w) const {
    int r = rank();
    std::size_t sw = static_cast<std::size_t>(shape[static_cast<std::size_t>(r - 1)]);
    std::size_t sh = r >= 2 ? static_cast<std::size_t>(shape[static_cast<std::size_t>(r - 2)]) : 1;
    std::size_t sc = r >= 3 ? static_cast<std::size_t>(shape[static_cast<std::size_t>(r - 3)]) : 1;
    return ((static_cast<std::size_t>(n) * sc + static_cast<std::size_t>(c)) * sh +
            static_cast<std::size_t>(h)) *
               sw +
           static_cast<std::size_t>(w);
  }
  T& at(int n, int c, int h, int w) { return v[nchw_index(n, c, h, w)]; }
  const T& at(int n, int c, int h, int w) const { return v[nchw_index(n, c, h, w)]; }

  void fill(T x) { std::fill(v.begin(), v.end(), x); }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  static std::string shape_str(const std::vector<int>& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i) out += ",";
      out += std::to_string(s[i]);
    }
    return out + "]";
  }
  std::string shape_str() const { return shape_str(shape); }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out(shape);
    for (std::size_t i = 0; i < v.size(); ++i) out.v[i] = static_cast<U>(v[i]);
    return out;
  }

  bool all_finite() const {
    for (T x : v)
      if (!std::isfinite(static_cast<double>(x))) return false;
    return true;
  }
};

template <typename T>
void require_shape(const Tensor<T>& t, const std::vector<int>& want, const std::string& who) {
  if (t.shape != want)
    throw ShapeError(who + ": expected shape " + Tensor<T>::shape_str(want) + ", got " + t.shape_str());
}

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const std::string& who) {
  if (!a.same_shape(b))
    throw ShapeError(who + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
}

}  // namespace depthgan
