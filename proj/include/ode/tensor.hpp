#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace ode {

// Error taxonomy mirrored by the CLI exit codes (2 / 3 / 4).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Shape = std::vector<int>;

inline std::size_t shape_numel(const Shape& s) {
  std::size_t n = 1;
  for (int d : s) n *= static_cast<std::size_t>(d);
  return n;
}

inline void validate_shape(const Shape& s) {
  if (s.empty()) throw ConfigError("tensor shape must be non-empty");
  for (int d : s)
    if (d < 1) throw ConfigError("tensor dimension must be >= 1, got " + std::to_string(d));
}

inline std::string shape_str(const Shape& s) {
  std::string r = "[";
  for (std::size_t i = 0; i < s.size(); ++i) r += (i ? "," : "") + std::to_string(s[i]);
  return r + "]";
}

/// Dense row-major tensor with an optional same-shape gradient buffer.
/// 4-D feature maps follow the (batch, channels, height, width) convention.
template <typename T>
struct Tensor {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;  // empty until ensure_grad()

  Tensor() = default;
  explicit Tensor(Shape s) : shape(std::move(s)) {
    validate_shape(shape);
    data.assign(shape_numel(shape), T(0));
  }
  Tensor(Shape s, std::vector<T> d) : shape(std::move(s)), data(std::move(d)) {
    validate_shape(shape);
    if (data.size() != shape_numel(shape))
      throw ConfigError("tensor data length does not match shape " + shape_str(shape));
  }

  std::size_t numel() const { return data.size(); }
  int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }
  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  T& operator[](std::size_t i) { return data[i]; }
  const T& operator[](std::size_t i) const { return data[i]; }

  // 4-D accessors (n, c, i, j).
  std::size_t idx4(int n, int c, int i, int j) const {
    return ((static_cast<std::size_t>(n) * dim(1) + c) * dim(2) + i) * dim(3) + j;
  }
  T& at(int n, int c, int i, int j) { return data[idx4(n, c, i, j)]; }
  const T& at(int n, int c, int i, int j) const { return data[idx4(n, c, i, j)]; }

  bool has_grad() const { return !grad.empty(); }
  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), T(0));
  }
  void zero_grad() {
    if (has_grad()) std::fill(grad.begin(), grad.end(), T(0));
  }

  void fill(T v) { std::fill(data.begin(), data.end(), v); }

  /// NaN/Inf anywhere is a contract violation.
  void check_finite(const char* what) const {
    for (const T& v : data)
      if (!std::isfinite(static_cast<double>(v)))
        throw NumericError(std::string("non-finite value in ") + what);
  }
};

template <typename T>
Tensor<T> zeros(Shape s) {
  return Tensor<T>(std::move(s));
}

template <typename T>
Tensor<T> ones(Shape s) {
  Tensor<T> t(std::move(s));
  t.fill(T(1));
  return t;
}

template <typename T>
Tensor<T> full(Shape s, T v) {
  Tensor<T> t(std::move(s));
  t.fill(v);
  return t;
}

/// Seeded generator: std::mt19937_64 for the bit stream, uniform doubles via
/// the 53-bit mantissa trick, normals via the Marsaglia polar method. All
/// three are pinned algorithms, so streams reproduce bit-exactly everywhere.
struct Rng {
  std::mt19937_64 eng;
  double spare = 0.0;
  bool has_spare = false;

  explicit Rng(std::uint64_t seed) : eng(seed) {}

  std::uint64_t next_u64() { return eng(); }

  double uniform() { return static_cast<double>(eng() >> 11) * 0x1.0p-53; }  // [0,1)

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // Rejection keeps the draw unbiased and the stream deterministic.
    std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t v;
    do {
      v = eng();
    } while (v >= limit);
    return v % n;
  }

  double normal() {
    if (has_spare) {
      has_spare = false;
      return spare;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    double m = std::sqrt(-2.0 * std::log(s) / s);
    spare = v * m;
    has_spare = true;
    return u * m;
  }

  std::string save_state() const;
  void load_state(const std::string& blob);
};

template <typename T>
Tensor<T> randn(Shape s, Rng& rng) {
  Tensor<T> t(std::move(s));
  for (auto& v : t.data) v = static_cast<T>(rng.normal());
  return t;
}

template <typename T>
Tensor<T> randn(Shape s, std::uint64_t seed) {
  Rng rng(seed);
  return randn<T>(std::move(s), rng);
}

// Elementwise ops. No broadcasting except scalar right-hand sides; the
// backward rules accumulate into the inputs' grad buffers.
template <typename T>
Tensor<T> ew_add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> ew_add(const Tensor<T>& a, T b);
template <typename T>
void ew_add_backward(const Tensor<T>& dy, Tensor<T>& a, Tensor<T>& b);

template <typename T>
Tensor<T> ew_mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> ew_mul(const Tensor<T>& a, T b);
template <typename T>
void ew_mul_backward(const Tensor<T>& dy, Tensor<T>& a, Tensor<T>& b);

template <typename T>
Tensor<T> ew_map(const Tensor<T>& a, const std::function<T(T)>& f);
template <typename T>
void ew_map_backward(const Tensor<T>& dy, Tensor<T>& a, const std::function<T(T)>& df);

/// Concatenate two 4-D tensors along the channel dimension.
template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
void concat_channels_backward(const Tensor<T>& dy, Tensor<T>& a, Tensor<T>& b);

/// Channel slice [c0, c1) of a 4-D tensor.
template <typename T>
Tensor<T> slice_channels(const Tensor<T>& x, int c0, int c1);

/// Named trainable value with gradient and Adam moment buffers, all one shape.
template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
  Tensor<T> adam_m;
  Tensor<T> adam_v;

  Parameter() = default;
  Parameter(std::string n, Tensor<T> v)
      : name(std::move(n)),
        value(std::move(v)),
        grad(value.shape),
        adam_m(value.shape),
        adam_v(value.shape) {}

  std::size_t numel() const { return value.numel(); }
  void zero_grad() { grad.fill(T(0)); }
};

/// Worker cap shared by every parallel kernel: ODE_THREADS when set, else the
/// OpenMP default.
int num_threads();

}  // namespace ode
