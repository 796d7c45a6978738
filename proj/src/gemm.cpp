#include "ode/gemm.hpp"

#include <algorithm>
#include <cstring>
#include <vector>

#include "ode/tensor.hpp"

namespace ode {

namespace {

// 4-row micro tile over a column block: one streamed B row feeds four C-row
// FMA accumulations, which is what the inner j loop vectorizes to.
template <typename T>
void mm_block(const T* a, const T* b, T* c, int m, int k, int n, int j0, int j1) {
  int i = 0;
  for (; i + 4 <= m; i += 4) {
    T* c0 = c + static_cast<std::size_t>(i) * n;
    T* c1 = c0 + n;
    T* c2 = c1 + n;
    T* c3 = c2 + n;
    for (int kk = 0; kk < k; ++kk) {
      const T a0 = a[static_cast<std::size_t>(i) * k + kk];
      const T a1 = a[static_cast<std::size_t>(i + 1) * k + kk];
      const T a2 = a[static_cast<std::size_t>(i + 2) * k + kk];
      const T a3 = a[static_cast<std::size_t>(i + 3) * k + kk];
      const T* br = b + static_cast<std::size_t>(kk) * n;
      for (int j = j0; j < j1; ++j) {
        const T bv = br[j];
        c0[j] += a0 * bv;
        c1[j] += a1 * bv;
        c2[j] += a2 * bv;
        c3[j] += a3 * bv;
      }
    }
  }
  for (; i < m; ++i) {
    T* cr = c + static_cast<std::size_t>(i) * n;
    for (int kk = 0; kk < k; ++kk) {
      const T av = a[static_cast<std::size_t>(i) * k + kk];
      const T* br = b + static_cast<std::size_t>(kk) * n;
      for (int j = j0; j < j1; ++j) cr[j] += av * br[j];
    }
  }
}

}  // namespace

template <typename T>
void matmul(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate) {
  if (!accumulate)
    std::memset(c, 0, static_cast<std::size_t>(m) * n * sizeof(T));
  constexpr int kBlock = 256;
  if (n >= 2 * kBlock) {
    const int nblocks = (n + kBlock - 1) / kBlock;
#pragma omp parallel for schedule(static) num_threads(num_threads())
    for (int bi = 0; bi < nblocks; ++bi) {
      const int j0 = bi * kBlock;
      mm_block(a, b, c, m, k, n, j0, std::min(j0 + kBlock, n));
    }
  } else {
    // Narrow output: split rows instead, in groups of 4 to keep the tile.
    const int ngroups = (m + 3) / 4;
#pragma omp parallel for schedule(static) num_threads(num_threads())
    for (int gi = 0; gi < ngroups; ++gi) {
      const int i0 = gi * 4;
      mm_block(a + static_cast<std::size_t>(i0) * k, b, c + static_cast<std::size_t>(i0) * n,
               std::min(4, m - i0), k, n, 0, n);
    }
  }
}

template <typename T>
void matmul_nt(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate) {
#pragma omp parallel for schedule(static) num_threads(num_threads())
  for (int i = 0; i < m; ++i) {
    const T* ar = a + static_cast<std::size_t>(i) * k;
    T* cr = c + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      const T* br = b + static_cast<std::size_t>(j) * k;
      T acc = 0;
      for (int kk = 0; kk < k; ++kk) acc += ar[kk] * br[kk];
      if (accumulate)
        cr[j] += acc;
      else
        cr[j] = acc;
    }
  }
}

template <typename T>
void matmul_tn(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate) {
  std::vector<T> at(static_cast<std::size_t>(m) * k);
#pragma omp parallel for schedule(static) num_threads(num_threads())
  for (int i = 0; i < m; ++i)
    for (int kk = 0; kk < k; ++kk)
      at[static_cast<std::size_t>(i) * k + kk] = a[static_cast<std::size_t>(kk) * m + i];
  matmul(at.data(), b, c, m, k, n, accumulate);
}

template void matmul<float>(const float*, const float*, float*, int, int, int, bool);
template void matmul<double>(const double*, const double*, double*, int, int, int, bool);
template void matmul_nt<float>(const float*, const float*, float*, int, int, int, bool);
template void matmul_nt<double>(const double*, const double*, double*, int, int, int, bool);
template void matmul_tn<float>(const float*, const float*, float*, int, int, int, bool);
template void matmul_tn<double>(const double*, const double*, double*, int, int, int, bool);

}  // namespace ode
