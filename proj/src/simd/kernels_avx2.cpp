// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
#include "pixdiff/simd/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>

#include <cmath>

namespace pixdiff::simd::detail {
namespace {

template <typename T>
struct Vec;

template <>
struct Vec<float> {
  using type = __m256;
  static constexpr std::size_t lanes = 8;
  static type load(const float* p) { return _mm256_loadu_ps(p); }
  static void store(float* p, type v) { _mm256_storeu_ps(p, v); }
  static type splat(float a) { return _mm256_set1_ps(a); }
  static type fma(type a, type b, type c) { return _mm256_fmadd_ps(a, b, c); }
  static type sub(type a, type b) { return _mm256_sub_ps(a, b); }
};

template <>
struct Vec<double> {
  using type = __m256d;
  static constexpr std::size_t lanes = 4;
  static type load(const double* p) { return _mm256_loadu_pd(p); }
  static void store(double* p, type v) { _mm256_storeu_pd(p, v); }
  static type splat(double a) { return _mm256_set1_pd(a); }
  static type fma(type a, type b, type c) { return _mm256_fmadd_pd(a, b, c); }
  static type sub(type a, type b) { return _mm256_sub_pd(a, b); }
};

template <typename T>
void axpy(T* y, T a, const T* x, std::size_t n) {
  using V = Vec<T>;
  const auto av = V::splat(a);
  std::size_t j = 0;
  for (; j + 2 * V::lanes <= n; j += 2 * V::lanes) {
    V::store(y + j, V::fma(av, V::load(x + j), V::load(y + j)));
    V::store(y + j + V::lanes, V::fma(av, V::load(x + j + V::lanes), V::load(y + j + V::lanes)));
  }
  for (; j + V::lanes <= n; j += V::lanes) V::store(y + j, V::fma(av, V::load(x + j), V::load(y + j)));
  for (; j < n; ++j) y[j] = std::fma(a, x[j], y[j]);
}

template <typename T>
void sub_strided(T* out, const T* a, const T* b, std::size_t n, std::size_t stride) {
  using V = Vec<T>;
  std::size_t j = 0;
  if (stride == 1) {
    for (; j + V::lanes <= n; j += V::lanes) V::store(out + j, V::sub(V::load(a + j), V::load(b + j)));
  }
  for (; j < n; ++j) out[j] = a[j * stride] - b[j * stride];
}

template <typename T>
void conv_row(T* out, const T* const* src, const T* w, std::size_t taps, std::size_t n,
              std::size_t stride) {
  using V = Vec<T>;
  constexpr std::size_t L = V::lanes;
  std::size_t j = 0;
  if (stride == 1) {
    // Four independent accumulator chains per block hide FMA latency.
    for (; j + 4 * L <= n; j += 4 * L) {
      auto a0 = V::load(out + j);
      auto a1 = V::load(out + j + L);
      auto a2 = V::load(out + j + 2 * L);
      auto a3 = V::load(out + j + 3 * L);
      for (std::size_t t = 0; t < taps; ++t) {
        const auto wv = V::splat(w[t]);
        const T* p = src[t] + j;
        a0 = V::fma(wv, V::load(p), a0);
        a1 = V::fma(wv, V::load(p + L), a1);
        a2 = V::fma(wv, V::load(p + 2 * L), a2);
        a3 = V::fma(wv, V::load(p + 3 * L), a3);
      }
      V::store(out + j, a0);
      V::store(out + j + L, a1);
      V::store(out + j + 2 * L, a2);
      V::store(out + j + 3 * L, a3);
    }
    for (; j + L <= n; j += L) {
      auto a0 = V::load(out + j);
      for (std::size_t t = 0; t < taps; ++t) a0 = V::fma(V::splat(w[t]), V::load(src[t] + j), a0);
      V::store(out + j, a0);
    }
  }
  for (; j < n; ++j) {
    T acc = out[j];
    const std::size_t off = j * stride;
    for (std::size_t t = 0; t < taps; ++t) acc = std::fma(w[t], src[t][off], acc);
    out[j] = acc;
  }
}

template <typename T>
constexpr KernelTable<T> kAvx2{&axpy<T>, &sub_strided<T>, &conv_row<T>};

}  // namespace

const KernelTable<float>* avx2_f32() noexcept { return &kAvx2<float>; }
const KernelTable<double>* avx2_f64() noexcept { return &kAvx2<double>; }

}  // namespace pixdiff::simd::detail

#else

namespace pixdiff::simd::detail {
const KernelTable<float>* avx2_f32() noexcept { return nullptr; }
const KernelTable<double>* avx2_f64() noexcept { return nullptr; }
}  // namespace pixdiff::simd::detail

#endif
