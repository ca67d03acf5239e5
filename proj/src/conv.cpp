#include "pixdiff/conv.hpp"

#include <algorithm>
#include <vector>

#include "pixdiff/parallel.hpp"
#include "pixdiff/simd/kernels.hpp"

namespace pixdiff {
namespace {

struct Batched {
  std::size_t n;
  std::size_t c;
  Shape spatial;
};

// Splits x into batch, channel and `spatial_rank` trailing axes; the batch
// axis is optional.
Batched split_batched(const Shape& s, std::size_t spatial_rank, const char* op) {
  detail::require(s.size() == spatial_rank + 1 || s.size() == spatial_rank + 2,
                  std::string(op) + ": input rank " + std::to_string(s.size()) +
                      " unsupported (expected " + std::to_string(spatial_rank + 1) + " or " +
                      std::to_string(spatial_rank + 2) + ")");
  const bool has_batch = s.size() == spatial_rank + 2;
  const std::size_t n = has_batch ? s[0] : 1;
  const std::size_t c = has_batch ? s[1] : s[0];
  return {n, c, Shape(s.end() - static_cast<std::ptrdiff_t>(spatial_rank), s.end())};
}

Shape join_shape(bool has_batch, std::size_t n, std::size_t c, const Shape& spatial) {
  Shape out;
  if (has_batch) out.push_back(n);
  out.push_back(c);
  out.insert(out.end(), spatial.begin(), spatial.end());
  return out;
}

void check_kernel(const Shape& ks, std::size_t spatial_rank, std::size_t c_in, const char* op) {
  detail::require(ks.size() == spatial_rank + 2,
                  std::string(op) + ": kernel must have rank " + std::to_string(spatial_rank + 2));
  detail::require(ks[1] == c_in, std::string(op) + ": kernel expects " + std::to_string(ks[1]) +
                                     " input channels, input has " + std::to_string(c_in));
  for (std::size_t i = 2; i < ks.size(); ++i) {
    detail::require(ks[i] % 2 == 1, std::string(op) + ": kernel spatial extents must be odd");
  }
}

}  // namespace

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& k, const PadSpec& pad_spec,
                 std::size_t stride) {
  const Batched b = split_batched(x.shape(), 2, "conv2d");
  check_kernel(k.shape(), 2, b.c, "conv2d");
  detail::require(pad_spec.amount.size() == 2, "conv2d: pad spec needs 2 axes");
  const std::size_t c_out = k.extent(0), kh = k.extent(2), kw = k.extent(3);
  const std::size_t ho = conv_out_extent(b.spatial[0], pad_spec.amount[0], kh, stride);
  const std::size_t wo = conv_out_extent(b.spatial[1], pad_spec.amount[1], kw, stride);

  const Tensor<T> xp = pad(x, pad_spec);
  const std::size_t hp = b.spatial[0] + 2 * pad_spec.amount[0];
  const std::size_t wp = b.spatial[1] + 2 * pad_spec.amount[1];
  const std::size_t taps = b.c * kh * kw;

  Tensor<T> y(join_shape(x.rank() == 4, b.n, c_out, {ho, wo}));
  const auto& kern = simd::kernels<T>();
  const T* xd = xp.raw();
  const T* kd = k.raw();
  T* yd = y.raw();

  parallel::for_each_index(b.n * ho, [&](std::size_t row) {
    const std::size_t n = row / ho, i = row % ho;
    std::vector<const T*> src(taps);
    for (std::size_t ci = 0; ci < b.c; ++ci)
      for (std::size_t u = 0; u < kh; ++u)
        for (std::size_t v = 0; v < kw; ++v)
          src[(ci * kh + u) * kw + v] = xd + ((n * b.c + ci) * hp + i * stride + u) * wp + v;
    for (std::size_t co = 0; co < c_out; ++co) {
      kern.conv_row(yd + ((n * c_out + co) * ho + i) * wo, src.data(), kd + co * taps, taps, wo,
                    stride);
    }
  });
  return y;
}

template <typename T>
Tensor<T> conv3d(const Tensor<T>& x, const Tensor<T>& k, const PadSpec& pad_spec,
                 std::size_t stride) {
  const Batched b = split_batched(x.shape(), 3, "conv3d");
  check_kernel(k.shape(), 3, b.c, "conv3d");
  detail::require(pad_spec.amount.size() == 3, "conv3d: pad spec needs 3 axes");
  const std::size_t c_out = k.extent(0), kt = k.extent(2), kh = k.extent(3), kw = k.extent(4);
  const std::size_t to = conv_out_extent(b.spatial[0], pad_spec.amount[0], kt, stride);
  const std::size_t ho = conv_out_extent(b.spatial[1], pad_spec.amount[1], kh, stride);
  const std::size_t wo = conv_out_extent(b.spatial[2], pad_spec.amount[2], kw, stride);

  const Tensor<T> xp = pad(x, pad_spec);
  const std::size_t tp = b.spatial[0] + 2 * pad_spec.amount[0];
  const std::size_t hp = b.spatial[1] + 2 * pad_spec.amount[1];
  const std::size_t wp = b.spatial[2] + 2 * pad_spec.amount[2];
  const std::size_t taps = b.c * kt * kh * kw;

  Tensor<T> y(join_shape(x.rank() == 5, b.n, c_out, {to, ho, wo}));
  const auto& kern = simd::kernels<T>();
  const T* xd = xp.raw();
  const T* kd = k.raw();
  T* yd = y.raw();

  parallel::for_each_index(b.n * to * ho, [&](std::size_t row) {
    const std::size_t n = row / (to * ho);
    const std::size_t t = (row / ho) % to;
    const std::size_t i = row % ho;
    std::vector<const T*> src(taps);
    std::size_t tap = 0;
    for (std::size_t ci = 0; ci < b.c; ++ci)
      for (std::size_t dt = 0; dt < kt; ++dt)
        for (std::size_t u = 0; u < kh; ++u)
          for (std::size_t v = 0; v < kw; ++v)
            src[tap++] =
                xd + (((n * b.c + ci) * tp + t * stride + dt) * hp + i * stride + u) * wp + v;
    for (std::size_t co = 0; co < c_out; ++co) {
      kern.conv_row(yd + (((n * c_out + co) * to + t) * ho + i) * wo, src.data(), kd + co * taps,
                    taps, wo, stride);
    }
  });
  return y;
}

template <typename T>
Tensor<T> window_median(const Tensor<T>& x, std::size_t k, const PadSpec& pad_spec,
                        std::size_t stride) {
  detail::require(k % 2 == 1, "window_median: window size must be odd, got " + std::to_string(k));
  detail::require(x.rank() >= 2, "window_median: input needs at least 2 axes");
  detail::require(pad_spec.amount.size() == 2, "window_median: pad spec needs 2 axes");
  const std::size_t h = x.extent(x.rank() - 2), w = x.extent(x.rank() - 1);
  const std::size_t ho = conv_out_extent(h, pad_spec.amount[0], k, stride);
  const std::size_t wo = conv_out_extent(w, pad_spec.amount[1], k, stride);
  const std::size_t planes = x.size() / (h * w);
  const Tensor<T> xp = pad(x, pad_spec);
  const std::size_t hp = h + 2 * pad_spec.amount[0], wp = w + 2 * pad_spec.amount[1];

  Shape out_shape = x.shape();
  out_shape[out_shape.size() - 2] = ho;
  out_shape[out_shape.size() - 1] = wo;
  Tensor<T> y(out_shape);
  const std::size_t mid = k * k / 2;

  parallel::for_each_index(planes * ho, [&](std::size_t row) {
    const std::size_t p = row / ho, i = row % ho;
    std::vector<T> window(k * k);
    const T* plane = xp.raw() + p * hp * wp;
    for (std::size_t j = 0; j < wo; ++j) {
      std::size_t q = 0;
      for (std::size_t u = 0; u < k; ++u) {
        const T* r = plane + (i * stride + u) * wp + j * stride;
        for (std::size_t v = 0; v < k; ++v) window[q++] = r[v];
      }
      std::nth_element(window.begin(), window.begin() + static_cast<std::ptrdiff_t>(mid),
                       window.end());
      y[(p * ho + i) * wo + j] = window[mid];
    }
  });
  return y;
}

template Tensor<float> conv2d(const Tensor<float>&, const Tensor<float>&, const PadSpec&, std::size_t);
template Tensor<double> conv2d(const Tensor<double>&, const Tensor<double>&, const PadSpec&, std::size_t);
template Tensor<float> conv3d(const Tensor<float>&, const Tensor<float>&, const PadSpec&, std::size_t);
template Tensor<double> conv3d(const Tensor<double>&, const Tensor<double>&, const PadSpec&, std::size_t);
template Tensor<float> window_median(const Tensor<float>&, std::size_t, const PadSpec&, std::size_t);
template Tensor<double> window_median(const Tensor<double>&, std::size_t, const PadSpec&, std::size_t);

}  // namespace pixdiff
