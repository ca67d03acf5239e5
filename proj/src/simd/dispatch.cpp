#include <atomic>
#include <cstdlib>
#include <string>

#include "pixdiff/error.hpp"
#include "pixdiff/simd/kernels.hpp"

namespace pixdiff::simd {
namespace {

Isa initial_isa() noexcept {
  Isa isa = detect_isa();
  if (const char* env = std::getenv("PIXDIFF_SIMD")) {
    try {
      const Isa requested = parse_isa(env);
      if (isa_supported(requested)) isa = requested;
    } catch (const InvalidArgument&) {
      // unknown name: keep the detected set
    }
  }
  return isa;
}

std::atomic<Isa>& active() noexcept {
  static std::atomic<Isa> isa{initial_isa()};
  return isa;
}

}  // namespace

bool isa_supported(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(__x86_64__) || defined(_M_X64)
      return detail::avx2_f32() != nullptr && __builtin_cpu_supports("avx2") &&
             __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::neon:
      return detail::neon_f32() != nullptr;
  }
  return false;
}

Isa detect_isa() noexcept {
  if (isa_supported(Isa::avx2)) return Isa::avx2;
  if (isa_supported(Isa::neon)) return Isa::neon;
  return Isa::scalar;
}

Isa active_isa() noexcept { return active().load(std::memory_order_relaxed); }

void set_isa(Isa isa) {
  if (!isa_supported(isa)) {
    throw InvalidArgument("instruction set '" + std::string(isa_name(isa)) +
                          "' not supported on this CPU");
  }
  active().store(isa, std::memory_order_relaxed);
}

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    case Isa::neon: return "neon";
  }
  return "unknown";
}

Isa parse_isa(std::string_view name) {
  if (name == "scalar") return Isa::scalar;
  if (name == "avx2") return Isa::avx2;
  if (name == "neon") return Isa::neon;
  throw InvalidArgument("unknown instruction set '" + std::string(name) + "'");
}

template <>
const KernelTable<float>& kernels_for<float>(Isa isa) {
  if (!isa_supported(isa)) throw InvalidArgument("instruction set not supported");
  switch (isa) {
    case Isa::avx2: return *detail::avx2_f32();
    case Isa::neon: return *detail::neon_f32();
    case Isa::scalar: break;
  }
  return detail::scalar_f32();
}

template <>
const KernelTable<double>& kernels_for<double>(Isa isa) {
  if (!isa_supported(isa)) throw InvalidArgument("instruction set not supported");
  switch (isa) {
    case Isa::avx2: return *detail::avx2_f64();
    case Isa::neon: return *detail::neon_f64();
    case Isa::scalar: break;
  }
  return detail::scalar_f64();
}

template <>
const KernelTable<float>& kernels<float>() noexcept {
  switch (active_isa()) {
    case Isa::avx2: return *detail::avx2_f32();
    case Isa::neon: return *detail::neon_f32();
    case Isa::scalar: break;
  }
  return detail::scalar_f32();
}

template <>
const KernelTable<double>& kernels<double>() noexcept {
  switch (active_isa()) {
    case Isa::avx2: return *detail::avx2_f64();
    case Isa::neon: return *detail::neon_f64();
    case Isa::scalar: break;
  }
  return detail::scalar_f64();
}

}  // namespace pixdiff::simd
