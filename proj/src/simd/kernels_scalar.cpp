#include "pixdiff/simd/kernels.hpp"

namespace pixdiff::simd::detail {
namespace {

template <typename T>
void axpy(T* y, T a, const T* x, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) y[j] += a * x[j];
}

template <typename T>
void sub_strided(T* out, const T* a, const T* b, std::size_t n, std::size_t stride) {
  for (std::size_t j = 0; j < n; ++j) out[j] = a[j * stride] - b[j * stride];
}

template <typename T>
void conv_row(T* out, const T* const* src, const T* w, std::size_t taps, std::size_t n,
              std::size_t stride) {
  for (std::size_t j = 0; j < n; ++j) {
    T acc = out[j];
    const std::size_t off = j * stride;
    for (std::size_t t = 0; t < taps; ++t) acc += w[t] * src[t][off];
    out[j] = acc;
  }
}

template <typename T>
constexpr KernelTable<T> kScalar{&axpy<T>, &sub_strided<T>, &conv_row<T>};

}  // namespace

const KernelTable<float>& scalar_f32() noexcept { return kScalar<float>; }
const KernelTable<double>& scalar_f64() noexcept { return kScalar<double>; }

}  // namespace pixdiff::simd::detail
