#pragma once

// Batched quaternion algebra over structure-of-arrays storage.
//
// A batch holds `rows` embeddings, each made of `dim` quaternion coordinates.
// Component c of coordinate k of row i lives at component(c)[i * dim + k].

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace tquate {

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A single quaternion a + b i + c j + d k.
template <typename T>
struct BasicQuaternion {
  T a{0}, b{0}, c{0}, d{0};

  friend constexpr BasicQuaternion operator*(const BasicQuaternion& x, const BasicQuaternion& y) {
    return {x.a * y.a - x.b * y.b - x.c * y.c - x.d * y.d,
            x.a * y.b + x.b * y.a + x.c * y.d - x.d * y.c,
            x.a * y.c - x.b * y.d + x.c * y.a + x.d * y.b,
            x.a * y.d + x.b * y.c - x.c * y.b + x.d * y.a};
  }
  friend constexpr BasicQuaternion operator+(const BasicQuaternion& x, const BasicQuaternion& y) {
    return {x.a + y.a, x.b + y.b, x.c + y.c, x.d + y.d};
  }
  friend constexpr BasicQuaternion operator-(const BasicQuaternion& x, const BasicQuaternion& y) {
    return {x.a - y.a, x.b - y.b, x.c - y.c, x.d - y.d};
  }
  friend constexpr BasicQuaternion operator*(T s, const BasicQuaternion& x) {
    return {s * x.a, s * x.b, s * x.c, s * x.d};
  }
  friend constexpr bool operator==(const BasicQuaternion&, const BasicQuaternion&) = default;

  constexpr BasicQuaternion conj() const { return {a, -b, -c, -d}; }
  constexpr T dot(const BasicQuaternion& o) const { return a * o.a + b * o.b + c * o.c + d * o.d; }
  T norm() const { return std::sqrt(dot(*this)); }

  static constexpr BasicQuaternion identity() { return {T{1}, T{0}, T{0}, T{0}}; }
};

using Quaternion = BasicQuaternion<double>;

template <typename T>
class BasicQuaternionBatch {
 public:
  BasicQuaternionBatch() = default;
  BasicQuaternionBatch(std::size_t rows, std::size_t dim)
      : rows_(rows), dim_(dim), comp_{std::vector<T>(rows * dim), std::vector<T>(rows * dim),
                                      std::vector<T>(rows * dim), std::vector<T>(rows * dim)} {}

  std::size_t rows() const { return rows_; }
  std::size_t dim() const { return dim_; }
  /// Number of quaternions (rows * dim).
  std::size_t size() const { return rows_ * dim_; }

  std::span<T> component(int c) { return comp_[c]; }
  std::span<const T> component(int c) const { return comp_[c]; }
  std::span<T> a() { return comp_[0]; }
  std::span<T> b() { return comp_[1]; }
  std::span<T> c() { return comp_[2]; }
  std::span<T> d() { return comp_[3]; }
  std::span<const T> a() const { return comp_[0]; }
  std::span<const T> b() const { return comp_[1]; }
  std::span<const T> c() const { return comp_[2]; }
  std::span<const T> d() const { return comp_[3]; }

  BasicQuaternion<T> get(std::size_t row, std::size_t k) const {
    const std::size_t i = row * dim_ + k;
    return {comp_[0][i], comp_[1][i], comp_[2][i], comp_[3][i]};
  }
  void set(std::size_t row, std::size_t k, const BasicQuaternion<T>& q) {
    const std::size_t i = row * dim_ + k;
    comp_[0][i] = q.a;
    comp_[1][i] = q.b;
    comp_[2][i] = q.c;
    comp_[3][i] = q.d;
  }

  void fill(T value) {
    for (auto& v : comp_) std::fill(v.begin(), v.end(), value);
  }

  bool same_shape(const BasicQuaternionBatch& o) const { return rows_ == o.rows_ && dim_ == o.dim_; }

  bool all_finite() const {
    for (const auto& v : comp_)
      for (T x : v)
        if (!std::isfinite(x)) return false;
    return true;
  }

  friend bool operator==(const BasicQuaternionBatch&, const BasicQuaternionBatch&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t dim_ = 0;
  std::vector<T> comp_[4];
};

using QuaternionBatch = BasicQuaternionBatch<double>;
using QuaternionBatchF = BasicQuaternionBatch<float>;

namespace detail {
template <typename T>
void require_same_shape(const BasicQuaternionBatch<T>& x, const BasicQuaternionBatch<T>& y,
                        const char* op) {
  if (!x.same_shape(y)) {
    throw ShapeError(std::string(op) + ": shape mismatch (" + std::to_string(x.rows()) + "x" +
                     std::to_string(x.dim()) + " vs " + std::to_string(y.rows()) + "x" +
                     std::to_string(y.dim()) + ")");
  }
}
}  // namespace detail

template <typename T>
BasicQuaternionBatch<T> hamilton_product(const BasicQuaternionBatch<T>& x,
                                         const BasicQuaternionBatch<T>& y) {
  detail::require_same_shape(x, y, "hamilton_product");
  BasicQuaternionBatch<T> out(x.rows(), x.dim());
  const auto a1 = x.a(), b1 = x.b(), c1 = x.c(), d1 = x.d();
  const auto a2 = y.a(), b2 = y.b(), c2 = y.c(), d2 = y.d();
  auto oa = out.a(), ob = out.b(), oc = out.c(), od = out.d();
  for (std::size_t i = 0; i < x.size(); ++i) {
    oa[i] = a1[i] * a2[i] - b1[i] * b2[i] - c1[i] * c2[i] - d1[i] * d2[i];
    ob[i] = a1[i] * b2[i] + b1[i] * a2[i] + c1[i] * d2[i] - d1[i] * c2[i];
    oc[i] = a1[i] * c2[i] - b1[i] * d2[i] + c1[i] * a2[i] + d1[i] * b2[i];
    od[i] = a1[i] * d2[i] + b1[i] * c2[i] - c1[i] * b2[i] + d1[i] * a2[i];
  }
  return out;
}

/// Per-row sum over coordinates of a1a2 + b1b2 + c1c2 + d1d2.
template <typename T>
std::vector<T> inner_product(const BasicQuaternionBatch<T>& x, const BasicQuaternionBatch<T>& y) {
  detail::require_same_shape(x, y, "inner_product");
  std::vector<T> out(x.rows(), T{0});
  const std::size_t dim = x.dim();
  for (std::size_t r = 0; r < x.rows(); ++r) {
    T acc{0};
    for (int c = 0; c < 4; ++c) {
      const T* xs = x.component(c).data() + r * dim;
      const T* ys = y.component(c).data() + r * dim;
      for (std::size_t k = 0; k < dim; ++k) acc += xs[k] * ys[k];
    }
    out[r] = acc;
  }
  return out;
}

template <typename T>
BasicQuaternionBatch<T> conjugate(const BasicQuaternionBatch<T>& x) {
  BasicQuaternionBatch<T> out = x;
  for (int c = 1; c < 4; ++c)
    for (T& v : out.component(c)) v = -v;
  return out;
}

/// Unit-normalizes every coordinate. Zero-norm coordinates become (1, 0, 0, 0).
template <typename T>
BasicQuaternionBatch<T> normalize(const BasicQuaternionBatch<T>& x) {
  BasicQuaternionBatch<T> out(x.rows(), x.dim());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const T a = x.a()[i], b = x.b()[i], c = x.c()[i], d = x.d()[i];
    const T n = std::sqrt(a * a + b * b + c * c + d * d);
    if (n > T{0}) {
      out.a()[i] = a / n;
      out.b()[i] = b / n;
      out.c()[i] = c / n;
      out.d()[i] = d / n;
    } else {
      out.a()[i] = T{1};
    }
  }
  return out;
}

template <typename T>
BasicQuaternionBatch<T> elementwise_sine(const BasicQuaternionBatch<T>& x) {
  BasicQuaternionBatch<T> out = x;
  for (int c = 0; c < 4; ++c)
    for (T& v : out.component(c)) v = std::sin(v);
  return out;
}

template <typename T>
BasicQuaternionBatch<T> add(const BasicQuaternionBatch<T>& x, const BasicQuaternionBatch<T>& y) {
  detail::require_same_shape(x, y, "add");
  BasicQuaternionBatch<T> out = x;
  for (int c = 0; c < 4; ++c) {
    auto o = out.component(c);
    auto yc = y.component(c);
    for (std::size_t i = 0; i < o.size(); ++i) o[i] += yc[i];
  }
  return out;
}

template <typename T>
BasicQuaternionBatch<T> scale(const BasicQuaternionBatch<T>& x, std::type_identity_t<T> s) {
  BasicQuaternionBatch<T> out = x;
  for (int c = 0; c < 4; ++c)
    for (T& v : out.component(c)) v *= s;
  return out;
}

/// Per-coordinate quaternion norms, row-major [rows * dim].
template <typename T>
std::vector<T> coordinate_norms(const BasicQuaternionBatch<T>& x) {
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const T a = x.a()[i], b = x.b()[i], c = x.c()[i], d = x.d()[i];
    out[i] = std::sqrt(a * a + b * b + c * c + d * d);
  }
  return out;
}

}  // namespace tquate
