#include "pixdiff/diff_conv.hpp"

#include <algorithm>
#include <cmath>

#include "pixdiff/conv.hpp"
#include "pixdiff/parallel.hpp"
#include "pixdiff/simd/kernels.hpp"

namespace pixdiff {

template <typename T>
void KernelWeights<T>::validate(std::size_t expected_taps, std::size_t c_in) const {
  detail::require(taps == expected_taps, "weight vector has " + std::to_string(taps) +
                                             " entries per channel pair, operator needs " +
                                             std::to_string(expected_taps));
  detail::require(in_channels == c_in, "weights expect " + std::to_string(in_channels) +
                                           " input channels, input has " + std::to_string(c_in));
  detail::require(out_channels >= 1, "weights need at least one output channel");
  detail::require(w.size() == out_channels * in_channels * taps, "weight buffer size mismatch");
  detail::require(center.empty() || center.size() == out_channels * in_channels,
                  "center weight buffer size mismatch");
  detail::require(theta >= 0.0 && theta <= 1.0, "theta must lie in [0, 1]");
}

namespace {

struct Geometry {
  bool batched;
  std::size_t n, c, h, w;
};

Geometry geometry_of(const Shape& s, const char* op) {
  detail::require(s.size() == 3 || s.size() == 4,
                  std::string(op) + ": expected C x H x W or N x C x H x W input");
  if (s.size() == 3) return {false, 1, s[0], s[1], s[2]};
  return {true, s[0], s[1], s[2], s[3]};
}

Shape out_shape(const Geometry& g, std::size_t c_out, std::size_t ho, std::size_t wo) {
  if (g.batched) return {g.n, c_out, ho, wo};
  return {c_out, ho, wo};
}

}  // namespace

template <typename T>
Tensor<T> pdc_forward(const Tensor<T>& x, const PairSet& ps, const KernelWeights<T>& w,
                      const Conv2dOptions& opts) {
  const Geometry g = geometry_of(x.shape(), "pdc_forward");
  w.validate(ps.size(), g.c);
  const std::size_t k = ps.window();
  const PadSpec padding = opts.pad_for(k);
  detail::require(padding.amount.size() == 2, "pdc_forward: pad spec needs 2 axes");
  const std::size_t s = opts.stride;
  const std::size_t ho = conv_out_extent(g.h, padding.amount[0], k, s);
  const std::size_t wo = conv_out_extent(g.w, padding.amount[1], k, s);
  const Tensor<T> xp = pad(x, padding);
  const std::size_t hp = g.h + 2 * padding.amount[0], wp = g.w + 2 * padding.amount[1];
  const std::size_t m = ps.size(), plane_out = ho * wo, c_out = w.out_channels;
  const int r = ps.half();

  Tensor<T> y(out_shape(g, c_out, ho, wo));
  std::vector<T> diffs(m * plane_out);
  const auto& kern = simd::kernels<T>();

  for (std::size_t n = 0; n < g.n; ++n) {
    for (std::size_t ci = 0; ci < g.c; ++ci) {
      const T* plane = xp.raw() + (n * g.c + ci) * hp * wp;
      parallel::for_each_index(m, [&](std::size_t i) {
        const auto& p = ps[i];
        for (std::size_t oi = 0; oi < ho; ++oi) {
          const std::size_t base = oi * s;
          const T* a = plane + (base + static_cast<std::size_t>(r + p.minuend.du)) * wp +
                       static_cast<std::size_t>(r + p.minuend.dv);
          const T* b = plane + (base + static_cast<std::size_t>(r + p.subtrahend.du)) * wp +
                       static_cast<std::size_t>(r + p.subtrahend.dv);
          kern.sub_strided(diffs.data() + (i * ho + oi) * wo, a, b, wo, s);
        }
      });
      parallel::for_each_index(c_out, [&](std::size_t co) {
        T* out = y.raw() + (n * c_out + co) * plane_out;
        for (std::size_t i = 0; i < m; ++i) {
          kern.axpy(out, w.at(co, ci, i), diffs.data() + i * plane_out, plane_out);
        }
      });
    }
  }
  return y;
}

template <typename T>
Tensor<T> cdc_forward(const Tensor<T>& x, const KernelWeights<T>& w, const Conv2dOptions& opts) {
  static const PairSet central = make_pairset(PairSetKind::central);
  return pdc_forward(x, central, w, opts);
}

template <typename T>
Tensor<T> intensity_kernel(const PairSet& ps, const KernelWeights<T>& w) {
  detail::require(ps.center_referenced(), "intensity term needs a center-referenced pair set");
  detail::require(w.taps == ps.size(), "weight count does not match the pair set");
  const std::size_t k = ps.window();
  const int r = ps.half();
  Tensor<T> kernel({w.out_channels, w.in_channels, k, k});
  for (std::size_t co = 0; co < w.out_channels; ++co) {
    for (std::size_t ci = 0; ci < w.in_channels; ++ci) {
      T* kk = kernel.raw() + (co * w.in_channels + ci) * k * k;
      for (std::size_t i = 0; i < ps.size(); ++i) {
        const auto& o = ps[i].minuend;
        kk[static_cast<std::size_t>(r + o.du) * k + static_cast<std::size_t>(r + o.dv)] += w.at(co, ci, i);
      }
      kk[static_cast<std::size_t>(r) * k + static_cast<std::size_t>(r)] += w.center_at(co, ci);
    }
  }
  return kernel;
}

template <typename T>
Tensor<T> mixed_forward(const Tensor<T>& x, const PairSet& ps, const KernelWeights<T>& w,
                        const Conv2dOptions& opts) {
  const Geometry g = geometry_of(x.shape(), "mixed_forward");
  w.validate(ps.size(), g.c);
  detail::require(ps.center_referenced(), "theta-mixed operators need a center-referenced pair set");
  if (w.theta == 1.0) return pdc_forward(x, ps, w, opts);
  Tensor<T> intensity = conv2d(x, intensity_kernel(ps, w), opts.pad_for(ps.window()), opts.stride);
  if (w.theta == 0.0) return intensity;
  const Tensor<T> gradient = pdc_forward(x, ps, w, opts);
  const T th = static_cast<T>(w.theta);
  const T rest = static_cast<T>(1.0 - w.theta);
  for (std::size_t i = 0; i < intensity.size(); ++i) {
    intensity[i] = th * gradient[i] + rest * intensity[i];
  }
  return intensity;
}

template <typename T>
Tensor<T> gcdc_forward(const Tensor<T>& x, const KernelWeights<T>& w, const Conv2dOptions& opts) {
  static const PairSet central = make_pairset(PairSetKind::central);
  return mixed_forward(x, central, w, opts);
}

template <typename T>
Tensor<T> ccdc_forward(const Tensor<T>& x, const KernelWeights<T>& w, CrossDirection dir,
                       const Conv2dOptions& opts) {
  static const PairSet hv = make_pairset(PairSetKind::cross_hv);
  static const PairSet dg = make_pairset(PairSetKind::cross_dg);
  return mixed_forward(x, dir == CrossDirection::hv ? hv : dg, w, opts);
}

template <typename T>
Tensor<T> mediconv_forward(const Tensor<T>& x, const KernelWeights<T>& w, std::size_t window,
                           const Conv2dOptions& opts) {
  detail::require(window % 2 == 1, "mediconv: window must be odd, got " + std::to_string(window));
  const Geometry g = geometry_of(x.shape(), "mediconv_forward");
  w.validate(window * window, g.c);
  const PadSpec padding = opts.pad_for(window);
  const std::size_t c_out = w.out_channels;

  const Tensor<T> xp = pad(x, padding);
  const std::size_t hp = xp.extent(xp.rank() - 2), wp = xp.extent(xp.rank() - 1);
  const Tensor<T> median = window_median(x, window, padding, opts.stride);
  const std::size_t ho = median.extent(median.rank() - 2), wo = median.extent(median.rank() - 1);
  const std::size_t plane_out = ho * wo, taps = window * window, s = opts.stride;
  Tensor<T> y(out_shape(g, c_out, ho, wo));
  std::vector<T> diffs(taps * plane_out);
  const auto& kern = simd::kernels<T>();

  // Differences against the median are formed first, so flat regions give
  // exact zeros.
  for (std::size_t n = 0; n < g.n; ++n) {
    for (std::size_t ci = 0; ci < g.c; ++ci) {
      const T* plane = xp.raw() + (n * g.c + ci) * hp * wp;
      const T* med = median.raw() + (n * g.c + ci) * plane_out;
      parallel::for_each_index(taps, [&](std::size_t t) {
        const std::size_t u = t / window, v = t % window;
        T* d = diffs.data() + t * plane_out;
        for (std::size_t oi = 0; oi < ho; ++oi) {
          const T* row = plane + (oi * s + u) * wp + v;
          for (std::size_t oj = 0; oj < wo; ++oj) d[oi * wo + oj] = row[oj * s] - med[oi * wo + oj];
        }
      });
      parallel::for_each_index(c_out, [&](std::size_t co) {
        T* out = y.raw() + (n * c_out + co) * plane_out;
        for (std::size_t t = 0; t < taps; ++t) {
          kern.axpy(out, w.at(co, ci, t), diffs.data() + t * plane_out, plane_out);
        }
      });
    }
  }
  return y;
}

template <typename T>
LbcKernels<T> lbc_make_kernels(const LbcSpec& spec, std::size_t in_channels) {
  detail::require(spec.maps >= 1, "LBC needs at least one kernel");
  detail::require(spec.window % 2 == 1, "LBC window must be odd");
  detail::require(in_channels >= 1, "LBC needs at least one input channel");
  detail::require(spec.sparsity > 0.0 && spec.sparsity <= 1.0, "LBC sparsity must lie in (0, 1]");
  const std::size_t per_kernel = in_channels * spec.window * spec.window;
  detail::require(per_kernel >= 2, "LBC kernels need room for both a +1 and a -1");
  constexpr int kMaxAttempts = 1000;

  Rng rng(spec.seed);
  Tensor<T> stack({spec.maps, in_channels, spec.window, spec.window});
  for (std::size_t km = 0; km < spec.maps; ++km) {
    T* kernel = stack.raw() + km * per_kernel;
    bool ok = false;
    for (int attempt = 0; attempt < kMaxAttempts && !ok; ++attempt) {
      bool pos = false, neg = false;
      for (std::size_t e = 0; e < per_kernel; ++e) {
        T v{};
        if (rng.uniform01() < spec.sparsity) {
          v = (rng.next() >> 63) ? T{1} : T{-1};
          (v > 0 ? pos : neg) = true;
        }
        kernel[e] = v;
      }
      ok = pos && neg;
    }
    if (!ok) {
      throw InvalidArgument("LBC sparsity " + std::to_string(spec.sparsity) +
                            " too low to draw kernels with both signs");
    }
  }
  return LbcKernels<T>(std::move(stack));
}

template <typename T>
Tensor<T> apply_nonlinearity(const Tensor<T>& x, Nonlinearity f) {
  Tensor<T> y = x;
  for (auto& v : y.data()) {
    v = f == Nonlinearity::sigmoid ? T{1} / (T{1} + std::exp(-v)) : std::max(v, T{});
  }
  return y;
}

template <typename T>
Tensor<T> lbc_forward(const Tensor<T>& x, const LbcKernels<T>& kernels, Nonlinearity f,
                      const Tensor<T>& pooling, const Conv2dOptions& opts) {
  detail::require(pooling.rank() == 2 && pooling.extent(1) == kernels.maps(),
                  "LBC pooling weights must be c_out x " + std::to_string(kernels.maps()));
  const Tensor<T> maps = conv2d(x, kernels.stack(), opts.pad_for(kernels.window()), opts.stride);
  const Tensor<T> activated = apply_nonlinearity(maps, f);
  const Tensor<T> pool = pooling.reshaped({pooling.extent(0), pooling.extent(1), 1, 1});
  return conv2d(activated, pool, PadSpec::none(2), 1);
}

ParamCount param_count(const LayerDescription& layer) {
  const std::size_t k2 = layer.window * layer.window;
  switch (layer.kind) {
    case LayerKind::dense:
      return {k2 * layer.in_channels * layer.out_channels, 0};
    case LayerKind::pdc:
      return {layer.pairs * layer.in_channels * layer.out_channels, 0};
    case LayerKind::lbc:
      return {layer.maps * layer.out_channels, layer.maps * layer.in_channels * k2};
  }
  return {};
}

#define PIXDIFF_INSTANTIATE(T)                                                                     \
  template struct KernelWeights<T>;                                                                \
  template Tensor<T> pdc_forward(const Tensor<T>&, const PairSet&, const KernelWeights<T>&,        \
                                 const Conv2dOptions&);                                            \
  template Tensor<T> cdc_forward(const Tensor<T>&, const KernelWeights<T>&, const Conv2dOptions&); \
  template Tensor<T> intensity_kernel(const PairSet&, const KernelWeights<T>&);                    \
  template Tensor<T> mixed_forward(const Tensor<T>&, const PairSet&, const KernelWeights<T>&,      \
                                   const Conv2dOptions&);                                          \
  template Tensor<T> gcdc_forward(const Tensor<T>&, const KernelWeights<T>&, const Conv2dOptions&);\
  template Tensor<T> ccdc_forward(const Tensor<T>&, const KernelWeights<T>&, CrossDirection,       \
                                  const Conv2dOptions&);                                           \
  template Tensor<T> mediconv_forward(const Tensor<T>&, const KernelWeights<T>&, std::size_t,      \
                                      const Conv2dOptions&);                                       \
  template LbcKernels<T> lbc_make_kernels(const LbcSpec&, std::size_t);                           \
  template Tensor<T> apply_nonlinearity(const Tensor<T>&, Nonlinearity);                          \
  template Tensor<T> lbc_forward(const Tensor<T>&, const LbcKernels<T>&, Nonlinearity,            \
                                 const Tensor<T>&, const Conv2dOptions&);

PIXDIFF_INSTANTIATE(float)
PIXDIFF_INSTANTIATE(double)

#undef PIXDIFF_INSTANTIATE

}  // namespace pixdiff
