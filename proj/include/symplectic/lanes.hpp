#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstring>
#include <initializer_list>
#include <limits>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace symplectic {

namespace detail {
template <std::size_t N>
struct NativeVector;
template <>
struct NativeVector<1> { typedef double type __attribute__((vector_size(8))); };
template <>
struct NativeVector<2> { typedef double type __attribute__((vector_size(16))); };
template <>
struct NativeVector<4> { typedef double type __attribute__((vector_size(32))); };
template <>
struct NativeVector<8> { typedef double type __attribute__((vector_size(64))); };
template <>
struct NativeVector<16> { typedef double type __attribute__((vector_size(128))); };
}  // namespace detail

// A fixed-width pack of N doubles, one lane per Runge-Kutta stage.
//
// Arithmetic is elementwise and maps onto the compiler's native vector
// extension, so a LaneVector<8> lives in one 512-bit register where the
// target has one. Element functions without a vector counterpart (sin, pow,
// ...) are applied lane by lane through the scalar C library, so every lane
// of a result is bitwise identical to the scalar computation provided the
// build does not contract a*b+c into fused operations (-ffp-contract=off).
template <std::size_t N>
class LaneVector {
  static_assert(N == 1 || N == 2 || N == 4 || N == 8 || N == 16,
                "lane count must be a power of two up to 16");

 public:
  using Native = typename detail::NativeVector<N>::type;
  static constexpr std::size_t lanes = N;

  constexpr LaneVector() : v_{} {}
  // Broadcast.
  LaneVector(double x) : v_{} { v_ += x; }  // NOLINT(google-explicit-constructor)
  LaneVector(std::initializer_list<double> values) : v_{} {
    if (values.size() != N) {
      throw std::invalid_argument("LaneVector: initializer has wrong length");
    }
    std::size_t i = 0;
    for (double x : values) v_[i++] = x;
  }
  static LaneVector from_native(Native v) {
    LaneVector r;
    r.v_ = v;
    return r;
  }
  static LaneVector load(const double* p) {
    LaneVector r;
    std::memcpy(&r.v_, p, sizeof(Native));
    return r;
  }
  void store(double* p) const { std::memcpy(p, &v_, sizeof(Native)); }

  double operator[](std::size_t i) const { return v_[i]; }
  void set(std::size_t i, double x) { v_[i] = x; }
  Native native() const { return v_; }

  LaneVector& operator+=(const LaneVector& o) { v_ += o.v_; return *this; }
  LaneVector& operator-=(const LaneVector& o) { v_ -= o.v_; return *this; }
  LaneVector& operator*=(const LaneVector& o) { v_ *= o.v_; return *this; }
  LaneVector& operator/=(const LaneVector& o) { v_ /= o.v_; return *this; }

  friend LaneVector operator+(LaneVector a, const LaneVector& b) { return a += b; }
  friend LaneVector operator-(LaneVector a, const LaneVector& b) { return a -= b; }
  friend LaneVector operator*(LaneVector a, const LaneVector& b) { return a *= b; }
  friend LaneVector operator/(LaneVector a, const LaneVector& b) { return a /= b; }
  friend LaneVector operator+(LaneVector a, double b) { a.v_ += b; return a; }
  friend LaneVector operator-(LaneVector a, double b) { a.v_ -= b; return a; }
  friend LaneVector operator*(LaneVector a, double b) { a.v_ *= b; return a; }
  friend LaneVector operator/(LaneVector a, double b) { a.v_ /= b; return a; }
  friend LaneVector operator+(double a, const LaneVector& b) { return from_native(a + b.v_); }
  friend LaneVector operator-(double a, const LaneVector& b) { return from_native(a - b.v_); }
  friend LaneVector operator*(double a, const LaneVector& b) { return from_native(a * b.v_); }
  friend LaneVector operator/(double a, const LaneVector& b) { return from_native(a / b.v_); }
  friend LaneVector operator-(const LaneVector& a) { return from_native(-a.v_); }
  friend LaneVector operator+(const LaneVector& a) { return a; }

  // Bitwise lane-by-lane comparison (distinguishes -0.0 and NaN payloads).
  friend bool bitwise_equal(const LaneVector& a, const LaneVector& b) {
    return std::memcmp(&a.v_, &b.v_, sizeof(Native)) == 0;
  }

  template <class F>
  LaneVector map(F f) const {
    LaneVector r;
    for (std::size_t i = 0; i < N; ++i) r.v_[i] = f(v_[i]);
    return r;
  }
  template <class F>
  friend LaneVector zip_map(const LaneVector& a, const LaneVector& b, F f) {
    LaneVector r;
    for (std::size_t i = 0; i < N; ++i) r.v_[i] = f(a.v_[i], b.v_[i]);
    return r;
  }

 private:
  Native v_;
};

template <std::size_t N>
LaneVector<N> lane_broadcast(double x) {
  return LaneVector<N>(x);
}

template <std::size_t N>
LaneVector<N> sin(const LaneVector<N>& x) { return x.map([](double v) { return std::sin(v); }); }
template <std::size_t N>
LaneVector<N> cos(const LaneVector<N>& x) { return x.map([](double v) { return std::cos(v); }); }
template <std::size_t N>
LaneVector<N> sqrt(const LaneVector<N>& x) { return x.map([](double v) { return std::sqrt(v); }); }
template <std::size_t N>
LaneVector<N> abs(const LaneVector<N>& x) { return x.map([](double v) { return std::fabs(v); }); }
template <std::size_t N>
LaneVector<N> cbrt(const LaneVector<N>& x) { return x.map([](double v) { return std::cbrt(v); }); }
template <std::size_t N>
LaneVector<N> exp(const LaneVector<N>& x) { return x.map([](double v) { return std::exp(v); }); }
template <std::size_t N>
LaneVector<N> log(const LaneVector<N>& x) { return x.map([](double v) { return std::log(v); }); }
template <std::size_t N>
LaneVector<N> pow(const LaneVector<N>& x, double e) {
  return x.map([e](double v) { return std::pow(v, e); });
}
template <std::size_t N>
LaneVector<N> pow(const LaneVector<N>& x, const LaneVector<N>& e) {
  return zip_map(x, e, [](double u, double v) { return std::pow(u, v); });
}
template <std::size_t N>
LaneVector<N> fma(const LaneVector<N>& a, const LaneVector<N>& b, const LaneVector<N>& c) {
  LaneVector<N> r;
  for (std::size_t i = 0; i < N; ++i) r.set(i, std::fma(a[i], b[i], c[i]));
  return r;
}

// v_1 + v_2 + ... + v_N, strictly left to right.
template <std::size_t N>
double lane_sum(const LaneVector<N>& v) {
  double s = v[0];
  for (std::size_t i = 1; i < N; ++i) s += v[i];
  return s;
}

// max_i |v_i|; NaN if any lane is NaN.
template <std::size_t N>
double lane_max_abs(const LaneVector<N>& v) {
  double m = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    const double a = std::fabs(v[i]);
    if (std::isnan(a)) return a;
    if (a > m) m = a;
  }
  return m;
}

// D lane vectors stored contiguously: the N stage values of component l
// occupy raw positions [l*N, (l+1)*N). An optional shape gives the flat
// component index a multi-dimensional view with the first index running
// fastest, flat = i0 + e0*(i1 + e1*(i2 + ...)).
template <std::size_t N>
class StateArray {
 public:
  using value_type = LaneVector<N>;

  StateArray() = default;
  explicit StateArray(std::size_t dim) : data_(dim), shape_{dim} {}
  explicit StateArray(std::vector<std::size_t> shape) : shape_(std::move(shape)) {
    std::size_t dim = 1;
    for (std::size_t e : shape_) {
      if (e == 0) throw std::invalid_argument("StateArray: zero extent in shape");
      dim *= e;
    }
    if (shape_.empty()) dim = 0;
    data_.resize(dim);
  }

  std::size_t size() const { return data_.size(); }
  const std::vector<std::size_t>& shape() const { return shape_; }

  // Unchecked access for kernels.
  LaneVector<N>& operator[](std::size_t l) { return data_[l]; }
  const LaneVector<N>& operator[](std::size_t l) const { return data_[l]; }

  const LaneVector<N>& get(std::size_t l) const { return data_.at(l); }
  void set(std::size_t l, const LaneVector<N>& v) { data_.at(l) = v; }
  const LaneVector<N>& get(std::span<const std::size_t> index) const { return data_[flat_index(index)]; }
  void set(std::span<const std::size_t> index, const LaneVector<N>& v) { data_[flat_index(index)] = v; }
  const LaneVector<N>& get(std::initializer_list<std::size_t> index) const {
    return get(std::span<const std::size_t>(index.begin(), index.size()));
  }
  void set(std::initializer_list<std::size_t> index, const LaneVector<N>& v) {
    set(std::span<const std::size_t>(index.begin(), index.size()), v);
  }

  std::size_t flat_index(std::span<const std::size_t> index) const {
    if (index.size() != shape_.size()) {
      throw std::out_of_range("StateArray: index rank does not match shape");
    }
    std::size_t flat = 0;
    for (std::size_t k = index.size(); k-- > 0;) {
      if (index[k] >= shape_[k]) throw std::out_of_range("StateArray: index out of range");
      flat = flat * shape_[k] + index[k];
    }
    return flat;
  }

  std::span<LaneVector<N>> components() { return data_; }
  std::span<const LaneVector<N>> components() const { return data_; }

  void fill(const LaneVector<N>& v) {
    for (auto& x : data_) x = v;
  }

  // Raw serialization in storage order (component-major, lanes contiguous).
  std::vector<double> to_raw() const {
    std::vector<double> out(data_.size() * N);
    for (std::size_t l = 0; l < data_.size(); ++l) data_[l].store(out.data() + l * N);
    return out;
  }
  static StateArray from_raw(std::span<const double> raw, std::vector<std::size_t> shape) {
    StateArray a(std::move(shape));
    if (raw.size() != a.size() * N) throw std::invalid_argument("StateArray: raw size mismatch");
    for (std::size_t l = 0; l < a.size(); ++l) a.data_[l] = LaneVector<N>::load(raw.data() + l * N);
    return a;
  }

 private:
  std::vector<LaneVector<N>> data_;
  std::vector<std::size_t> shape_;
};

}  // namespace symplectic
