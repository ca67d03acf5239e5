#pragma once

// 2D difference convolutions. All operators take N x C x H x W (or C x H x W)
// input and produce one output map per output channel; weights are kept per
// (output channel, input channel) and summed over input channels, exactly
// like dense convolution kernels.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "pixdiff/pairset.hpp"
#include "pixdiff/rng.hpp"
#include "pixdiff/tensor.hpp"

namespace pixdiff {

/// Learnable weights of a difference operator: one weight per pair for every
/// (c_out, c_in), an optional center weight w_c per (c_out, c_in), and the
/// intensity/gradient mix theta used by the generalized operators.
template <typename T>
struct KernelWeights {
  std::size_t out_channels = 1;
  std::size_t in_channels = 1;
  std::size_t taps = 0;   // m, the number of pairs
  std::vector<T> w;       // out x in x taps
  std::vector<T> center;  // out x in, or empty (treated as zeros)
  double theta = 1.0;

  KernelWeights() = default;
  KernelWeights(std::size_t c_out, std::size_t c_in, std::size_t m, bool with_center = false)
      : out_channels(c_out), in_channels(c_in), taps(m), w(c_out * c_in * m, T{}) {
    if (with_center) center.assign(c_out * c_in, T{});
  }

  /// Uniform weights in [lo, hi) drawn in the order w, then center.
  static KernelWeights random(std::size_t c_out, std::size_t c_in, std::size_t m, bool with_center,
                              Rng& rng, double lo = -1.0, double hi = 1.0) {
    KernelWeights k(c_out, c_in, m, with_center);
    for (auto& v : k.w) v = static_cast<T>(rng.uniform(lo, hi));
    for (auto& v : k.center) v = static_cast<T>(rng.uniform(lo, hi));
    return k;
  }

  T& at(std::size_t co, std::size_t ci, std::size_t i) { return w[(co * in_channels + ci) * taps + i]; }
  T at(std::size_t co, std::size_t ci, std::size_t i) const { return w[(co * in_channels + ci) * taps + i]; }
  T center_at(std::size_t co, std::size_t ci) const {
    return center.empty() ? T{} : center[co * in_channels + ci];
  }
  bool has_center() const noexcept { return !center.empty(); }

  /// Throws InvalidArgument on size mismatches or theta outside [0, 1].
  void validate(std::size_t expected_taps, std::size_t c_in) const;
};

/// Padding and stride for the 2D operators. Without an explicit pad the
/// operators zero-pad to "same" size for their window.
struct Conv2dOptions {
  std::optional<PadSpec> pad;
  std::size_t stride = 1;

  PadSpec pad_for(std::size_t window) const { return pad ? *pad : PadSpec::same(2, window); }
};

/// Pixel difference convolution, evaluated as written: every pair's
/// difference map is materialized per input channel and then accumulated
/// with its weight. This is the reference ("naive") path that reparam
/// compares against.
///   y = sum_{(a, b) in ps} w_i * (x[a] - x[b])
template <typename T>
Tensor<T> pdc_forward(const Tensor<T>& x, const PairSet& ps, const KernelWeights<T>& w,
                      const Conv2dOptions& opts = {});

/// Central difference convolution: pdc_forward with the central pair set.
template <typename T>
Tensor<T> cdc_forward(const Tensor<T>& x, const KernelWeights<T>& w, const Conv2dOptions& opts = {});

/// Dense k x k kernel holding w_i at each pair's minuend and w_c at the
/// window center: the intensity term sum w_i x_i + w_c x_c. Requires a
/// center-referenced pair set.
template <typename T>
Tensor<T> intensity_kernel(const PairSet& ps, const KernelWeights<T>& w);

/// Generalized CDC over the central pair set:
///   y = theta * sum w_i (x_i - x_c) + (1 - theta) * (sum w_i x_i + w_c x_c)
template <typename T>
Tensor<T> gcdc_forward(const Tensor<T>& x, const KernelWeights<T>& w, const Conv2dOptions& opts = {});

enum class CrossDirection { hv, dg };

/// Cross CDC: the generalized CDC restricted to the 4 horizontal/vertical
/// or 4 diagonal neighbours.
template <typename T>
Tensor<T> ccdc_forward(const Tensor<T>& x, const KernelWeights<T>& w, CrossDirection dir,
                       const Conv2dOptions& opts = {});

/// theta-mix of a center-referenced pair set; gcdc and ccdc are instances.
template <typename T>
Tensor<T> mixed_forward(const Tensor<T>& x, const PairSet& ps, const KernelWeights<T>& w,
                        const Conv2dOptions& opts = {});

/// Median-referenced difference convolution over all k^2 window positions:
///   y = sum_i w_i (x_i - x_m),  x_m = median of the k x k window.
/// Weights are indexed row-major over the window (taps = k^2).
template <typename T>
Tensor<T> mediconv_forward(const Tensor<T>& x, const KernelWeights<T>& w, std::size_t window = 3,
                           const Conv2dOptions& opts = {});

enum class Nonlinearity { sigmoid, relu };

struct LbcSpec {
  std::size_t maps = 8;  // m intermediate difference maps
  std::size_t window = 3;
  double sparsity = 0.5;  // probability that an entry is non-zero
  Nonlinearity nonlinearity = Nonlinearity::sigmoid;
  std::uint64_t seed = 0;
};

/// Fixed sparse binary kernels of a local binary convolution. They are not
/// learnable, so the stack is only readable after construction.
template <typename T>
class LbcKernels {
 public:
  explicit LbcKernels(Tensor<T> stack) : stack_(std::move(stack)) {}
  const Tensor<T>& stack() const noexcept { return stack_; }
  std::size_t maps() const { return stack_.extent(0); }
  std::size_t in_channels() const { return stack_.extent(1); }
  std::size_t window() const { return stack_.extent(2); }

 private:
  Tensor<T> stack_;
};

/// Draws m kernels of shape c_in x k x k. Each entry is non-zero with
/// probability `sparsity` and then +1 or -1 with equal probability. A kernel
/// without at least one +1 and one -1 is redrawn (up to 1000 times); if that
/// fails InvalidArgument is raised.
template <typename T>
LbcKernels<T> lbc_make_kernels(const LbcSpec& spec, std::size_t in_channels);

template <typename T>
Tensor<T> apply_nonlinearity(const Tensor<T>& x, Nonlinearity f);

/// pooling (1x1, c_out x m) o nonlinearity o binary conv.
template <typename T>
Tensor<T> lbc_forward(const Tensor<T>& x, const LbcKernels<T>& kernels, Nonlinearity f,
                      const Tensor<T>& pooling, const Conv2dOptions& opts = {});

enum class LayerKind { dense, pdc, lbc };

struct LayerDescription {
  LayerKind kind = LayerKind::dense;
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  std::size_t window = 3;
  std::size_t pairs = 8;  // pdc: weights per (c_out, c_in)
  std::size_t maps = 0;   // lbc: intermediate maps m
};

struct ParamCount {
  std::size_t learnable = 0;
  std::size_t fixed = 0;
  friend bool operator==(const ParamCount&, const ParamCount&) = default;
};

/// dense: k^2 c_in c_out learnable. pdc: m c_in c_out learnable.
/// lbc: m c_out learnable pooling weights, m c_in k^2 fixed binary entries.
ParamCount param_count(const LayerDescription& layer);

}  // namespace pixdiff
