#include "ode/tensor.hpp"

#include <omp.h>

#include <cstdlib>
#include <sstream>

namespace ode {

int num_threads() {
  static int n = [] {
    if (const char* env = std::getenv("ODE_THREADS")) {
      int v = std::atoi(env);
      if (v >= 1) return v;
    }
    return omp_get_max_threads();
  }();
  return n;
}

std::string Rng::save_state() const {
  std::ostringstream os;
  os << eng << ' ' << has_spare << ' ';
  os.precision(17);
  os << spare;
  return os.str();
}

void Rng::load_state(const std::string& blob) {
  std::istringstream is(blob);
  is >> eng >> has_spare >> spare;
  if (is.fail()) throw IoError("corrupt PRNG state blob");
}

namespace {

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (!a.same_shape(b))
    throw ConfigError(std::string(op) + ": shape mismatch " + shape_str(a.shape) + " vs " +
                      shape_str(b.shape));
}

}  // namespace

template <typename T>
Tensor<T> ew_add(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "ew_add");
  Tensor<T> out(a.shape);
  for (std::size_t i = 0; i < a.numel(); ++i) out.data[i] = a.data[i] + b.data[i];
  out.check_finite("ew_add");
  return out;
}

template <typename T>
Tensor<T> ew_add(const Tensor<T>& a, T b) {
  Tensor<T> out(a.shape);
  for (std::size_t i = 0; i < a.numel(); ++i) out.data[i] = a.data[i] + b;
  out.check_finite("ew_add");
  return out;
}

template <typename T>
void ew_add_backward(const Tensor<T>& dy, Tensor<T>& a, Tensor<T>& b) {
  require_same_shape(dy, a, "ew_add_backward");
  require_same_shape(dy, b, "ew_add_backward");
  a.ensure_grad();
  b.ensure_grad();
  for (std::size_t i = 0; i < dy.numel(); ++i) {
    a.grad[i] += dy.data[i];
    b.grad[i] += dy.data[i];
  }
}

template <typename T>
Tensor<T> ew_mul(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "ew_mul");
  Tensor<T> out(a.shape);
  for (std::size_t i = 0; i < a.numel(); ++i) out.data[i] = a.data[i] * b.data[i];
  out.check_finite("ew_mul");
  return out;
}

template <typename T>
Tensor<T> ew_mul(const Tensor<T>& a, T b) {
  Tensor<T> out(a.shape);
  for (std::size_t i = 0; i < a.numel(); ++i) out.data[i] = a.data[i] * b;
  out.check_finite("ew_mul");
  return out;
}

template <typename T>
void ew_mul_backward(const Tensor<T>& dy, Tensor<T>& a, Tensor<T>& b) {
  require_same_shape(dy, a, "ew_mul_backward");
  require_same_shape(dy, b, "ew_mul_backward");
  a.ensure_grad();
  b.ensure_grad();
  for (std::size_t i = 0; i < dy.numel(); ++i) {
    a.grad[i] += dy.data[i] * b.data[i];
    b.grad[i] += dy.data[i] * a.data[i];
  }
}

template <typename T>
Tensor<T> ew_map(const Tensor<T>& a, const std::function<T(T)>& f) {
  Tensor<T> out(a.shape);
  for (std::size_t i = 0; i < a.numel(); ++i) out.data[i] = f(a.data[i]);
  out.check_finite("ew_map");
  return out;
}

template <typename T>
void ew_map_backward(const Tensor<T>& dy, Tensor<T>& a, const std::function<T(T)>& df) {
  require_same_shape(dy, a, "ew_map_backward");
  a.ensure_grad();
  for (std::size_t i = 0; i < dy.numel(); ++i) a.grad[i] += dy.data[i] * df(a.data[i]);
}

template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape.size() != 4 || b.shape.size() != 4)
    throw ConfigError("concat_channels: expects 4-D tensors");
  if (a.dim(0) != b.dim(0) || a.dim(2) != b.dim(2) || a.dim(3) != b.dim(3))
    throw ConfigError("concat_channels: batch/spatial mismatch " + shape_str(a.shape) + " vs " +
                      shape_str(b.shape));
  const int n = a.dim(0), ca = a.dim(1), cb = b.dim(1), h = a.dim(2), w = a.dim(3);
  Tensor<T> out({n, ca + cb, h, w});
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  for (int bi = 0; bi < n; ++bi) {
    T* dst = out.data.data() + static_cast<std::size_t>(bi) * (ca + cb) * plane;
    std::copy_n(a.data.data() + static_cast<std::size_t>(bi) * ca * plane, ca * plane, dst);
    std::copy_n(b.data.data() + static_cast<std::size_t>(bi) * cb * plane, cb * plane,
                dst + ca * plane);
  }
  return out;
}

template <typename T>
void concat_channels_backward(const Tensor<T>& dy, Tensor<T>& a, Tensor<T>& b) {
  const int n = a.dim(0), ca = a.dim(1), cb = b.dim(1), h = a.dim(2), w = a.dim(3);
  if (dy.dim(1) != ca + cb) throw ConfigError("concat_channels_backward: channel mismatch");
  a.ensure_grad();
  b.ensure_grad();
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  for (int bi = 0; bi < n; ++bi) {
    const T* src = dy.data.data() + static_cast<std::size_t>(bi) * (ca + cb) * plane;
    T* ga = a.grad.data() + static_cast<std::size_t>(bi) * ca * plane;
    T* gb = b.grad.data() + static_cast<std::size_t>(bi) * cb * plane;
    for (std::size_t i = 0; i < ca * plane; ++i) ga[i] += src[i];
    for (std::size_t i = 0; i < cb * plane; ++i) gb[i] += src[ca * plane + i];
  }
}

template <typename T>
Tensor<T> slice_channels(const Tensor<T>& x, int c0, int c1) {
  if (x.shape.size() != 4) throw ConfigError("slice_channels: expects a 4-D tensor");
  if (c0 < 0 || c1 <= c0 || c1 > x.dim(1)) throw ConfigError("slice_channels: bad channel range");
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  Tensor<T> out({n, c1 - c0, h, w});
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  for (int bi = 0; bi < n; ++bi)
    std::copy_n(x.data.data() + (static_cast<std::size_t>(bi) * c + c0) * plane,
                static_cast<std::size_t>(c1 - c0) * plane,
                out.data.data() + static_cast<std::size_t>(bi) * (c1 - c0) * plane);
  return out;
}

#define ODE_INSTANTIATE(T)                                                                   \
  template Tensor<T> ew_add<T>(const Tensor<T>&, const Tensor<T>&);                          \
  template Tensor<T> ew_add<T>(const Tensor<T>&, T);                                         \
  template void ew_add_backward<T>(const Tensor<T>&, Tensor<T>&, Tensor<T>&);                \
  template Tensor<T> ew_mul<T>(const Tensor<T>&, const Tensor<T>&);                          \
  template Tensor<T> ew_mul<T>(const Tensor<T>&, T);                                         \
  template void ew_mul_backward<T>(const Tensor<T>&, Tensor<T>&, Tensor<T>&);                \
  template Tensor<T> ew_map<T>(const Tensor<T>&, const std::function<T(T)>&);                \
  template void ew_map_backward<T>(const Tensor<T>&, Tensor<T>&, const std::function<T(T)>&); \
  template Tensor<T> concat_channels<T>(const Tensor<T>&, const Tensor<T>&);                 \
  template void concat_channels_backward<T>(const Tensor<T>&, Tensor<T>&, Tensor<T>&);       \
  template Tensor<T> slice_channels<T>(const Tensor<T>&, int, int);

ODE_INSTANTIATE(float)
ODE_INSTANTIATE(double)
#undef ODE_INSTANTIATE

}  // namespace ode
