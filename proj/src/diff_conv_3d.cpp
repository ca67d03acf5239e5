#include "pixdiff/diff_conv_3d.hpp"

#include "pixdiff/conv.hpp"
#include "pixdiff/parallel.hpp"

namespace pixdiff {

std::string_view cdc3d_kind_name(Cdc3dKind kind) noexcept {
  switch (kind) {
    case Cdc3dKind::st: return "st";
    case Cdc3dKind::t: return "t";
    case Cdc3dKind::tr: return "tr";
  }
  return "unknown";
}

bool cdc3d_in_gradient_support(Cdc3dKind kind, std::size_t dt, std::size_t u, std::size_t v) noexcept {
  if (kind == Cdc3dKind::st) return !(dt == 1 && u == 1 && v == 1);
  return dt != 1;
}

namespace {

void check_kernel(const Shape& ks) {
  detail::require(ks.size() == 5 && ks[2] == 3 && ks[3] == 3 && ks[4] == 3,
                  "3D CDC kernels must be C_out x C_in x 3 x 3 x 3");
}

void check_theta(double theta) {
  detail::require(theta >= 0.0 && theta <= 1.0, "theta must lie in [0, 1]");
}

}  // namespace

template <typename T>
Tensor<T> cdc3d_forward(const Tensor<T>& x, const Tensor<T>& kernel, double theta, Cdc3dKind kind,
                        const Conv3dOptions& opts) {
  check_theta(theta);
  check_kernel(kernel.shape());
  detail::require(x.rank() == 4 || x.rank() == 5, "cdc3d: expected C x T x H x W or N x C x T x H x W");
  const bool batched = x.rank() == 5;
  const std::size_t n_batch = batched ? x.extent(0) : 1;
  const std::size_t c = x.extent(batched ? 1 : 0);
  const std::size_t frames = x.extent(x.rank() - 3);
  if (kind == Cdc3dKind::t) {
    detail::require(frames >= 3, "3D CDC-T needs at least 3 frames, got " + std::to_string(frames));
  }
  detail::require(kernel.extent(1) == c, "cdc3d: kernel input channels differ from input");

  const PadSpec padding = opts.pad_or_same();
  if (theta == 0.0) return conv3d(x, kernel, padding, opts.stride);

  Tensor<T> y = theta == 1.0 ? Tensor<T>() : conv3d(x, kernel, padding, opts.stride);
  const Tensor<T> xp = pad(x, padding);
  const std::size_t tp = xp.extent(xp.rank() - 3), hp = xp.extent(xp.rank() - 2),
                    wp = xp.extent(xp.rank() - 1);
  const std::size_t s = opts.stride;
  const std::size_t to = conv_out_extent(frames, padding.amount.at(0), 3, s);
  const std::size_t ho = conv_out_extent(x.extent(x.rank() - 2), padding.amount.at(1), 3, s);
  const std::size_t wo = conv_out_extent(x.extent(x.rank() - 1), padding.amount.at(2), 3, s);
  const std::size_t c_out = kernel.extent(0);

  Shape shape = batched ? Shape{n_batch, c_out, to, ho, wo} : Shape{c_out, to, ho, wo};
  Tensor<T> gradient(shape);
  const T third = T{1} / T{3};

  parallel::for_each_index(n_batch * c_out * to, [&](std::size_t job) {
    const std::size_t n = job / (c_out * to);
    const std::size_t co = (job / to) % c_out;
    const std::size_t ot = job % to;
    T* out = gradient.raw() + job * ho * wo;
    for (std::size_t oi = 0; oi < ho; ++oi) {
      for (std::size_t oj = 0; oj < wo; ++oj) {
        T acc{};
        for (std::size_t ci = 0; ci < c; ++ci) {
          const T* base = xp.raw() + (n * c + ci) * tp * hp * wp;
          const T* wk = kernel.raw() + (co * c + ci) * 27;
          auto at = [&](std::size_t dt, std::size_t u, std::size_t v) {
            return base[((ot * s + dt) * hp + oi * s + u) * wp + oj * s + v];
          };
          // Mean of the slice centers, written around the current center so
          // that equal centers give exactly that value.
          const T xc = at(1, 1, 1);
          const T ref = kind == Cdc3dKind::tr ? xc + ((at(0, 1, 1) - xc) + (at(2, 1, 1) - xc)) * third : xc;
          for (std::size_t dt = 0; dt < 3; ++dt)
            for (std::size_t u = 0; u < 3; ++u)
              for (std::size_t v = 0; v < 3; ++v)
                if (cdc3d_in_gradient_support(kind, dt, u, v))
                  acc += wk[(dt * 3 + u) * 3 + v] * (at(dt, u, v) - ref);
        }
        out[oi * wo + oj] = acc;
      }
    }
  });

  if (theta == 1.0) return gradient;
  const T th = static_cast<T>(theta), rest = static_cast<T>(1.0 - theta);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = th * gradient[i] + rest * y[i];
  return y;
}

template <typename T>
Tensor<T> cdc3d_reparam(const Tensor<T>& kernel, double theta, Cdc3dKind kind) {
  check_theta(theta);
  check_kernel(kernel.shape());
  Tensor<T> out = kernel;
  const T th = static_cast<T>(theta), rest = static_cast<T>(1.0 - theta);
  const std::size_t pairs = kernel.extent(0) * kernel.extent(1);
  for (std::size_t p = 0; p < pairs; ++p) {
    const T* w = kernel.raw() + p * 27;
    T* o = out.raw() + p * 27;
    T support{};
    for (std::size_t dt = 0; dt < 3; ++dt)
      for (std::size_t u = 0; u < 3; ++u)
        for (std::size_t v = 0; v < 3; ++v) {
          const std::size_t idx = (dt * 3 + u) * 3 + v;
          if (cdc3d_in_gradient_support(kind, dt, u, v)) {
            support += w[idx];
          } else {
            o[idx] = rest * w[idx];
          }
        }
    const std::size_t center = 13;  // (1, 1, 1)
    if (kind == Cdc3dKind::tr) {
      const T share = th * support / T{3};
      o[4] -= share;  // (0, 1, 1)
      o[center] -= share;
      o[22] -= share;  // (2, 1, 1)
    } else {
      o[center] -= th * support;
    }
  }
  return out;
}

template Tensor<float> cdc3d_forward(const Tensor<float>&, const Tensor<float>&, double, Cdc3dKind,
                                     const Conv3dOptions&);
template Tensor<double> cdc3d_forward(const Tensor<double>&, const Tensor<double>&, double, Cdc3dKind,
                                      const Conv3dOptions&);
template Tensor<float> cdc3d_reparam(const Tensor<float>&, double, Cdc3dKind);
template Tensor<double> cdc3d_reparam(const Tensor<double>&, double, Cdc3dKind);

}  // namespace pixdiff
