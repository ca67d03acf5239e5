#include "pixdiff/simd/kernels.hpp"

#if defined(__aarch64__)
#include <arm_neon.h>

#include <cmath>

namespace pixdiff::simd::detail {
namespace {

template <typename T>
struct Vec;

template <>
struct Vec<float> {
  using type = float32x4_t;
  static constexpr std::size_t lanes = 4;
  static type load(const float* p) { return vld1q_f32(p); }
  static void store(float* p, type v) { vst1q_f32(p, v); }
  static type splat(float a) { return vdupq_n_f32(a); }
  // vfmaq(c, a, b) = c + a * b
  static type fma(type a, type b, type c) { return vfmaq_f32(c, a, b); }
  static type sub(type a, type b) { return vsubq_f32(a, b); }
};

template <>
struct Vec<double> {
  using type = float64x2_t;
  static constexpr std::size_t lanes = 2;
  static type load(const double* p) { return vld1q_f64(p); }
  static void store(double* p, type v) { vst1q_f64(p, v); }
  static type splat(double a) { return vdupq_n_f64(a); }
  static type fma(type a, type b, type c) { return vfmaq_f64(c, a, b); }
  static type sub(type a, type b) { return vsubq_f64(a, b); }
};

template <typename T>
void axpy(T* y, T a, const T* x, std::size_t n) {
  using V = Vec<T>;
  const auto av = V::splat(a);
  std::size_t j = 0;
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
    for (; j + 2 * L <= n; j += 2 * L) {
      auto a0 = V::load(out + j);
      auto a1 = V::load(out + j + L);
      for (std::size_t t = 0; t < taps; ++t) {
        const auto wv = V::splat(w[t]);
        a0 = V::fma(wv, V::load(src[t] + j), a0);
        a1 = V::fma(wv, V::load(src[t] + j + L), a1);
      }
      V::store(out + j, a0);
      V::store(out + j + L, a1);
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
constexpr KernelTable<T> kNeon{&axpy<T>, &sub_strided<T>, &conv_row<T>};

}  // namespace

const KernelTable<float>* neon_f32() noexcept { return &kNeon<float>; }
const KernelTable<double>* neon_f64() noexcept { return &kNeon<double>; }

}  // namespace pixdiff::simd::detail

#else

namespace pixdiff::simd::detail {
const KernelTable<float>* neon_f32() noexcept { return nullptr; }
const KernelTable<double>* neon_f64() noexcept { return nullptr; }
}  // namespace pixdiff::simd::detail

#endif
