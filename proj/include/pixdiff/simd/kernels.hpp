#pragma once

// Row kernels behind every convolution and pixel-difference loop.
//
// Each instruction set provides the same three primitives. The scalar table
// is the reference; vector tables must agree with it up to FMA rounding and
// are checked against it in tests/test_simd.cpp. The active table is picked
// once at startup from the CPU's capabilities and can be overridden with
// PIXDIFF_SIMD=scalar|avx2|neon or set_isa().

#include <cstddef>
#include <string_view>

namespace pixdiff::simd {

enum class Isa { scalar, avx2, neon };

template <typename T>
struct KernelTable {
  /// y[j] += a * x[j]
  void (*axpy)(T* y, T a, const T* x, std::size_t n);
  /// out[j] = a[j * stride] - b[j * stride]
  void (*sub_strided)(T* out, const T* a, const T* b, std::size_t n, std::size_t stride);
  /// out[j] += sum_t w[t] * src[t][j * stride], taps accumulated in order.
  void (*conv_row)(T* out, const T* const* src, const T* w, std::size_t taps, std::size_t n,
                   std::size_t stride);
};

bool isa_supported(Isa isa) noexcept;
Isa active_isa() noexcept;
/// Switches the process-wide table. Throws InvalidArgument when the CPU
/// lacks the instruction set.
void set_isa(Isa isa);
/// Best instruction set the running CPU supports.
Isa detect_isa() noexcept;

std::string_view isa_name(Isa isa) noexcept;
Isa parse_isa(std::string_view name);

template <typename T>
const KernelTable<T>& kernels() noexcept;

template <typename T>
const KernelTable<T>& kernels_for(Isa isa);

namespace detail {
const KernelTable<float>& scalar_f32() noexcept;
const KernelTable<double>& scalar_f64() noexcept;
const KernelTable<float>* avx2_f32() noexcept;
const KernelTable<double>* avx2_f64() noexcept;
const KernelTable<float>* neon_f32() noexcept;
const KernelTable<double>* neon_f64() noexcept;
}  // namespace detail

}  // namespace pixdiff::simd
