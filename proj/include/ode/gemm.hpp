#pragma once

#include <cstddef>

namespace ode {

// Row-major matrix products. Every variant keeps a fixed per-element
// summation order (k ascending), so results are bit-identical for any worker
// count; threads only ever split output rows or columns.

/// C (MxN) = A (MxK) * B (KxN); accumulates into C when accumulate is set.
template <typename T>
void matmul(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate = false);

/// C (MxN) = A (MxK) * B^T (B is NxK). Dot-product kernel; both operands are
/// read contiguously.
template <typename T>
void matmul_nt(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate = false);

/// C (MxN) = A^T (A is KxM) * B (KxN). Transposes A into scratch, then matmul.
template <typename T>
void matmul_tn(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate = false);

}  // namespace ode
