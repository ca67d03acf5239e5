#include "pixdiff/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "pixdiff/conv.hpp"
#include "pixdiff/reparam.hpp"
#include "pixdiff/rng.hpp"

namespace pixdiff {

namespace {

struct Planes {
  bool batched;
  std::size_t n, c, h, w;
};

Planes planes_of(const Shape& s, const char* op) {
  detail::require(s.size() == 3 || s.size() == 4,
                  std::string(op) + ": expected C x H x W or N x C x H x W input");
  if (s.size() == 3) return {false, 1, s[0], s[1], s[2]};
  return {true, s[0], s[1], s[2], s[3]};
}

Shape planes_shape(const Planes& p, std::size_t c, std::size_t h, std::size_t w) {
  if (p.batched) return {p.n, c, h, w};
  return {c, h, w};
}

template <typename T>
void require_upstream(const Tensor<T>& u, const Shape& expected, const char* op) {
  detail::require(u.shape() == expected, std::string(op) + ": upstream shape " + shape_to_string(u.shape()) +
                                             " does not match output shape " + shape_to_string(expected));
}

// Inserts a unit axis at position `axis`.
Shape with_unit_axis(const Shape& s, std::size_t axis) {
  Shape out = s;
  out.insert(out.begin() + static_cast<std::ptrdiff_t>(axis), 1);
  return out;
}

}  // namespace

template <typename T>
ConvGrads<T> conv3d_backward(const Tensor<T>& x, const Tensor<T>& k, const PadSpec& pad_spec, std::size_t stride,
                             const Tensor<T>& upstream) {
  detail::require(x.rank() == 4 || x.rank() == 5, "conv3d_backward: expected C x T x H x W or N x C x T x H x W");
  detail::require(k.rank() == 5, "conv3d_backward: kernel must be C_out x C_in x k_t x k_h x k_w");
  detail::require(pad_spec.amount.size() == 3, "conv3d_backward: pad spec needs 3 axes");
  detail::require(stride >= 1, "stride must be at least 1");
  const bool batched = x.rank() == 5;
  const std::size_t nb = batched ? x.extent(0) : 1;
  const std::size_t c = x.extent(batched ? 1 : 0);
  detail::require(k.extent(1) == c, "conv3d_backward: kernel input channels differ from input");
  const std::size_t co_n = k.extent(0), kt = k.extent(2), kh = k.extent(3), kw = k.extent(4);
  const std::size_t r = x.rank();
  const std::size_t to = conv_out_extent(x.extent(r - 3), pad_spec.amount[0], kt, stride);
  const std::size_t ho = conv_out_extent(x.extent(r - 2), pad_spec.amount[1], kh, stride);
  const std::size_t wo = conv_out_extent(x.extent(r - 1), pad_spec.amount[2], kw, stride);
  require_upstream(upstream, batched ? Shape{nb, co_n, to, ho, wo} : Shape{co_n, to, ho, wo}, "conv3d_backward");

  const Tensor<T> xp = pad(x, pad_spec);
  const std::size_t tp = xp.extent(r - 3), hp = xp.extent(r - 2), wp = xp.extent(r - 1);
  Tensor<T> gxp(xp.shape());
  Tensor<T> gk(k.shape());
  const T* u = upstream.raw();
  for (std::size_t n = 0; n < nb; ++n) {
    for (std::size_t co = 0; co < co_n; ++co) {
      for (std::size_t ot = 0; ot < to; ++ot) {
        for (std::size_t oi = 0; oi < ho; ++oi) {
          for (std::size_t oj = 0; oj < wo; ++oj) {
            const T g = *u++;
            if (g == T{}) continue;
            for (std::size_t ci = 0; ci < c; ++ci) {
              const std::size_t plane = (n * c + ci) * tp * hp * wp;
              const T* kk = k.raw() + (co * c + ci) * kt * kh * kw;
              T* gkk = gk.raw() + (co * c + ci) * kt * kh * kw;
              for (std::size_t dt = 0; dt < kt; ++dt) {
                for (std::size_t du = 0; du < kh; ++du) {
                  const std::size_t row = plane + ((ot * stride + dt) * hp + oi * stride + du) * wp + oj * stride;
                  for (std::size_t dv = 0; dv < kw; ++dv) {
                    const std::size_t t = (dt * kh + du) * kw + dv;
                    gkk[t] += g * xp.raw()[row + dv];
                    gxp.raw()[row + dv] += g * kk[t];
                  }
                }
              }
            }
          }
        }
      }
    }
  }
  return {pad_adjoint(gxp, x.shape(), pad_spec), std::move(gk)};
}

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& x, const Tensor<T>& k, const PadSpec& pad_spec, std::size_t stride,
                             const Tensor<T>& upstream) {
  detail::require(x.rank() == 3 || x.rank() == 4, "conv2d_backward: expected C x H x W or N x C x H x W");
  detail::require(k.rank() == 4, "conv2d_backward: kernel must be C_out x C_in x k_h x k_w");
  detail::require(pad_spec.amount.size() == 2, "conv2d_backward: pad spec needs 2 axes");
  detail::require(upstream.rank() == x.rank(), "conv2d_backward: upstream rank differs from input rank");
  // A plane is a one-frame video.
  const std::size_t t_axis = x.rank() - 2;
  const PadSpec pad3{pad_spec.mode, {0, pad_spec.amount[0], pad_spec.amount[1]}};
  auto g = conv3d_backward(x.reshaped(with_unit_axis(x.shape(), t_axis)), k.reshaped(with_unit_axis(k.shape(), 2)),
                           pad3, stride, upstream.reshaped(with_unit_axis(upstream.shape(), t_axis)));
  return {g.grad_input.reshaped(x.shape()), g.grad_kernel.reshaped(k.shape())};
}

template <typename T>
GradBundle<T> pdc_backward(const Tensor<T>& x, const PairSet& ps, const KernelWeights<T>& w,
                           const Tensor<T>& upstream, const Conv2dOptions& opts) {
  const Planes p = planes_of(x.shape(), "pdc_backward");
  w.validate(ps.size(), p.c);
  const std::size_t k = ps.window();
  const PadSpec padding = opts.pad_for(k);
  const std::size_t s = opts.stride;
  const std::size_t ho = conv_out_extent(p.h, padding.amount.at(0), k, s);
  const std::size_t wo = conv_out_extent(p.w, padding.amount.at(1), k, s);
  require_upstream(upstream, planes_shape(p, w.out_channels, ho, wo), "pdc_backward");

  const Tensor<T> xp = pad(x, padding);
  const std::size_t hp = xp.extent(xp.rank() - 2), wp = xp.extent(xp.rank() - 1);
  Tensor<T> gxp(xp.shape());
  GradBundle<T> out;
  out.grad_weights.assign(w.w.size(), T{});
  const int r = ps.half();
  std::vector<std::ptrdiff_t> a(ps.size()), b(ps.size());
  for (std::size_t i = 0; i < ps.size(); ++i) {
    a[i] = static_cast<std::ptrdiff_t>(ps[i].minuend.du + r) * static_cast<std::ptrdiff_t>(wp) + ps[i].minuend.dv + r;
    b[i] = static_cast<std::ptrdiff_t>(ps[i].subtrahend.du + r) * static_cast<std::ptrdiff_t>(wp) +
           ps[i].subtrahend.dv + r;
  }
  const T* u = upstream.raw();
  for (std::size_t n = 0; n < p.n; ++n) {
    for (std::size_t co = 0; co < w.out_channels; ++co) {
      for (std::size_t oi = 0; oi < ho; ++oi) {
        for (std::size_t oj = 0; oj < wo; ++oj) {
          const T g = *u++;
          for (std::size_t ci = 0; ci < p.c; ++ci) {
            const std::size_t origin = (n * p.c + ci) * hp * wp + oi * s * wp + oj * s;
            const T* xv = xp.raw() + origin;
            T* gx = gxp.raw() + origin;
            for (std::size_t i = 0; i < ps.size(); ++i) {
              const T wi = w.at(co, ci, i);
              out.grad_weights[(co * p.c + ci) * ps.size() + i] += g * (xv[a[i]] - xv[b[i]]);
              gx[a[i]] += g * wi;
              gx[b[i]] -= g * wi;
            }
          }
        }
      }
    }
  }
  out.grad_input = pad_adjoint(gxp, x.shape(), padding);
  return out;
}

template <typename T>
GradBundle<T> mixed_backward(const Tensor<T>& x, const PairSet& ps, const KernelWeights<T>& w,
                             const Tensor<T>& upstream, const Conv2dOptions& opts) {
  const Planes p = planes_of(x.shape(), "mixed_backward");
  w.validate(ps.size(), p.c);
  detail::require(ps.center_referenced(), "theta-mixed operators need a center-referenced pair set");
  const std::size_t k = ps.window();
  const PadSpec padding = opts.pad_for(k);
  const std::size_t s = opts.stride;
  const std::size_t ho = conv_out_extent(p.h, padding.amount.at(0), k, s);
  const std::size_t wo = conv_out_extent(p.w, padding.amount.at(1), k, s);
  require_upstream(upstream, planes_shape(p, w.out_channels, ho, wo), "mixed_backward");

  const Tensor<T> xp = pad(x, padding);
  const std::size_t hp = xp.extent(xp.rank() - 2), wp = xp.extent(xp.rank() - 1);
  Tensor<T> gxp(xp.shape());
  GradBundle<T> out;
  out.grad_weights.assign(w.w.size(), T{});
  out.grad_center.assign(w.out_channels * p.c, T{});
  const int r = ps.half();
  const std::ptrdiff_t c_off = static_cast<std::ptrdiff_t>(r) * static_cast<std::ptrdiff_t>(wp) + r;
  std::vector<std::ptrdiff_t> a(ps.size());
  for (std::size_t i = 0; i < ps.size(); ++i) {
    a[i] = static_cast<std::ptrdiff_t>(ps[i].minuend.du + r) * static_cast<std::ptrdiff_t>(wp) + ps[i].minuend.dv + r;
  }
  const T th = static_cast<T>(w.theta), rest = static_cast<T>(1.0 - w.theta);
  double g_theta = 0.0;
  const T* u = upstream.raw();
  for (std::size_t n = 0; n < p.n; ++n) {
    for (std::size_t co = 0; co < w.out_channels; ++co) {
      for (std::size_t oi = 0; oi < ho; ++oi) {
        for (std::size_t oj = 0; oj < wo; ++oj) {
          const T g = *u++;
          for (std::size_t ci = 0; ci < p.c; ++ci) {
            const std::size_t origin = (n * p.c + ci) * hp * wp + oi * s * wp + oj * s;
            const T* xv = xp.raw() + origin;
            T* gx = gxp.raw() + origin;
            const T xc = xv[c_off];
            const T wc = w.center_at(co, ci);
            T diff_sum{}, intensity = wc * xc, w_sum{};
            for (std::size_t i = 0; i < ps.size(); ++i) {
              const T wi = w.at(co, ci, i);
              const T xa = xv[a[i]];
              out.grad_weights[(co * p.c + ci) * ps.size() + i] += g * (th * (xa - xc) + rest * xa);
              gx[a[i]] += g * wi;
              diff_sum += wi * (xa - xc);
              intensity += wi * xa;
              w_sum += wi;
            }
            gx[c_off] += g * (rest * wc - th * w_sum);
            out.grad_center[co * p.c + ci] += g * rest * xc;
            g_theta += static_cast<double>(g * (diff_sum - intensity));
          }
        }
      }
    }
  }
  out.grad_input = pad_adjoint(gxp, x.shape(), padding);
  out.grad_theta = g_theta;
  return out;
}

template <typename T>
GradBundle<T> mediconv_backward(const Tensor<T>& x, const KernelWeights<T>& w, const Tensor<T>& upstream,
                                std::size_t window, const Conv2dOptions& opts) {
  detail::require(window % 2 == 1, "mediconv: window must be odd, got " + std::to_string(window));
  const Planes p = planes_of(x.shape(), "mediconv_backward");
  const std::size_t taps = window * window;
  w.validate(taps, p.c);
  const PadSpec padding = opts.pad_for(window);
  const std::size_t s = opts.stride;
  const std::size_t ho = conv_out_extent(p.h, padding.amount.at(0), window, s);
  const std::size_t wo = conv_out_extent(p.w, padding.amount.at(1), window, s);
  require_upstream(upstream, planes_shape(p, w.out_channels, ho, wo), "mediconv_backward");

  const Tensor<T> xp = pad(x, padding);
  const std::size_t hp = xp.extent(xp.rank() - 2), wp = xp.extent(xp.rank() - 1);
  Tensor<T> gxp(xp.shape());
  GradBundle<T> out;
  out.grad_weights.assign(w.w.size(), T{});

  std::vector<T> w_sum(w.out_channels * p.c, T{});
  for (std::size_t co = 0; co < w.out_channels; ++co)
    for (std::size_t ci = 0; ci < p.c; ++ci)
      for (std::size_t i = 0; i < taps; ++i) w_sum[co * p.c + ci] += w.at(co, ci, i);

  std::vector<std::ptrdiff_t> off(taps);
  for (std::size_t u = 0; u < window; ++u)
    for (std::size_t v = 0; v < window; ++v) off[u * window + v] = static_cast<std::ptrdiff_t>(u * wp + v);

  std::vector<T> vals(taps), sorted(taps);
  const std::size_t plane_out = ho * wo;
  for (std::size_t n = 0; n < p.n; ++n) {
    for (std::size_t ci = 0; ci < p.c; ++ci) {
      for (std::size_t oi = 0; oi < ho; ++oi) {
        for (std::size_t oj = 0; oj < wo; ++oj) {
          const std::size_t origin = (n * p.c + ci) * hp * wp + oi * s * wp + oj * s;
          const T* xv = xp.raw() + origin;
          T* gx = gxp.raw() + origin;
          for (std::size_t i = 0; i < taps; ++i) vals[i] = xv[off[i]];
          sorted = vals;
          std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(taps / 2), sorted.end());
          const T med = sorted[taps / 2];
          const auto hits = std::count(vals.begin(), vals.end(), med);
          if (hits > 1) ++out.median_ties;
          const std::size_t arg =
              static_cast<std::size_t>(std::find(vals.begin(), vals.end(), med) - vals.begin());
          for (std::size_t co = 0; co < w.out_channels; ++co) {
            const T g = upstream.raw()[(n * w.out_channels + co) * plane_out + oi * wo + oj];
            T* gw = out.grad_weights.data() + (co * p.c + ci) * taps;
            for (std::size_t i = 0; i < taps; ++i) {
              gw[i] += g * (vals[i] - med);
              gx[off[i]] += g * w.at(co, ci, i);
            }
            gx[off[arg]] -= g * w_sum[co * p.c + ci];
          }
        }
      }
    }
  }
  out.grad_input = pad_adjoint(gxp, x.shape(), padding);
  return out;
}

template <typename T>
GradBundle<T> lbc_backward(const Tensor<T>& x, const LbcKernels<T>& kernels, Nonlinearity f,
                           const Tensor<T>& pooling, const Tensor<T>& upstream, const Conv2dOptions& opts) {
  detail::require(pooling.rank() == 2 && pooling.extent(1) == kernels.maps(),
                  "LBC pooling weights must be c_out x " + std::to_string(kernels.maps()));
  const PadSpec padding = opts.pad_for(kernels.window());
  const Tensor<T> maps = conv2d(x, kernels.stack(), padding, opts.stride);
  const Tensor<T> activated = apply_nonlinearity(maps, f);
  const Tensor<T> pool = pooling.reshaped({pooling.extent(0), pooling.extent(1), 1, 1});
  auto pooled = conv2d_backward(activated, pool, PadSpec::none(2), 1, upstream);

  Tensor<T> g_maps = std::move(pooled.grad_input);
  for (std::size_t i = 0; i < g_maps.size(); ++i) {
    const T d = f == Nonlinearity::sigmoid ? activated[i] * (T{1} - activated[i]) : (maps[i] > T{} ? T{1} : T{});
    g_maps[i] *= d;
  }
  GradBundle<T> out;
  out.grad_input = conv2d_backward(x, kernels.stack(), padding, opts.stride, g_maps).grad_input;
  out.grad_weights = pooled.grad_kernel.values();
  return out;
}

template <typename T>
GradBundle<T> cdc3d_backward(const Tensor<T>& x, const Tensor<T>& kernel, double theta, Cdc3dKind kind,
                             const Tensor<T>& upstream, const Conv3dOptions& opts) {
  if (kind == Cdc3dKind::t) {
    detail::require(x.rank() >= 4 && x.extent(x.rank() - 3) >= 3, "3D CDC-T needs at least 3 frames");
  }
  const Tensor<T> fused = cdc3d_reparam(kernel, theta, kind);
  auto g = conv3d_backward(x, fused, opts.pad_or_same(), opts.stride, upstream);

  GradBundle<T> out;
  out.grad_input = std::move(g.grad_input);
  out.grad_weights.assign(kernel.size(), T{});
  const T th = static_cast<T>(theta), rest = static_cast<T>(1.0 - theta);
  double g_theta = 0.0;
  const std::size_t pairs = kernel.extent(0) * kernel.extent(1);
  for (std::size_t pi = 0; pi < pairs; ++pi) {
    const T* w = kernel.raw() + pi * 27;
    const T* gk = g.grad_kernel.raw() + pi * 27;
    T* gw = out.grad_weights.data() + pi * 27;
    const T g_ref = kind == Cdc3dKind::tr ? (gk[4] + gk[13] + gk[22]) / T{3} : gk[13];
    T support{};
    for (std::size_t dt = 0; dt < 3; ++dt)
      for (std::size_t u = 0; u < 3; ++u)
        for (std::size_t v = 0; v < 3; ++v) {
          const std::size_t idx = (dt * 3 + u) * 3 + v;
          if (cdc3d_in_gradient_support(kind, dt, u, v)) {
            gw[idx] = gk[idx] - th * g_ref;
            support += w[idx];
          } else {
            gw[idx] = rest * gk[idx];
            g_theta -= static_cast<double>(w[idx] * gk[idx]);
          }
        }
    g_theta -= static_cast<double>(support * g_ref);
  }
  out.grad_theta = g_theta;
  return out;
}

std::vector<double> finite_diff_grad(const std::function<double(const std::vector<double>&)>& f,
                                     const std::vector<double>& p, double h) {
  detail::require(h > 0.0, "finite difference step must be positive");
  std::vector<double> grad(p.size());
  std::vector<double> q = p;
  for (std::size_t i = 0; i < p.size(); ++i) {
    q[i] = p[i] + h;
    const double up = f(q);
    q[i] = p[i] - h;
    const double down = f(q);
    q[i] = p[i];
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

double max_relative_error(const std::vector<double>& analytic, const std::vector<double>& numeric) {
  detail::require(analytic.size() == numeric.size(), "gradient vectors differ in length");
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double a = analytic[i], n = numeric[i];
    worst = std::max(worst, std::abs(a - n) / std::max({1.0, std::abs(a), std::abs(n)}));
  }
  return worst;
}

const std::vector<std::string>& gradcheck_ops() {
  static const std::vector<std::string> ops = {"cpdc",     "apdc",        "rpdc",     "cdc",      "random",
                                               "gcdc",     "ccdc-hv",     "ccdc-dg",  "mediconv", "lbc-sigmoid",
                                               "lbc-relu", "cdc3d-st",    "cdc3d-t",  "cdc3d-tr"};
  return ops;
}

namespace {

using Vec = std::vector<double>;
using Functional = std::function<double(const Vec&)>;

double inner(const TensorD& a, const TensorD& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

class GroupTable {
 public:
  void record(const std::string& group, double err) {
    for (auto& [name, worst] : rows_) {
      if (name == group) {
        worst = std::max(worst, err);
        return;
      }
    }
    rows_.emplace_back(group, err);
  }
  const std::vector<std::pair<std::string, double>>& rows() const { return rows_; }

 private:
  std::vector<std::pair<std::string, double>> rows_;
};

// Distinct values 0.01 apart and at least 0.005 away from zero, so a step of
// 1e-3 never reorders a window.
TensorD tie_free_tensor(const Shape& shape, Rng& rng) {
  const std::size_t n = shape_size(shape);
  std::vector<double> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = 0.01 * (static_cast<double>(i) - static_cast<double>(n) / 2) + 0.005;
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  return TensorD(shape, std::move(order));
}

struct Checker {
  double h;
  GroupTable& table;

  void group(const std::string& name, const Vec& primal, const Vec& analytic, const Functional& f) const {
    table.record(name, max_relative_error(analytic, finite_diff_grad(f, primal, h)));
  }
};

template <typename V>
Vec as_double(const V& v) {
  return Vec(v.begin(), v.end());
}

void check_pdc(const std::string& op, Rng& rng, std::uint64_t instance, const Checker& chk) {
  OpConfig cfg;
  cfg.kind = parse_op(op);
  cfg.pair_seed = instance;
  const PairSet ps = op_pairset(cfg);
  const TensorD x = random_tensor<double>({1, 2, 6, 6}, rng);
  const auto w = KernelWeights<double>::random(2, 2, ps.size(), false, rng);
  const TensorD u = random_tensor<double>({1, 2, 6, 6}, rng);
  const auto b = pdc_backward(x, ps, w, u);
  chk.group("input", x.values(), b.grad_input.values(),
            [&](const Vec& p) { return inner(pdc_forward(TensorD(x.shape(), p), ps, w), u); });
  chk.group("weights", w.w, b.grad_weights, [&](const Vec& p) {
    auto v = w;
    v.w = p;
    return inner(pdc_forward(x, ps, v), u);
  });
}

void check_mixed(const std::string& op, Rng& rng, const Checker& chk) {
  OpConfig cfg;
  cfg.kind = parse_op(op);
  const PairSet ps = op_pairset(cfg);
  const TensorD x = random_tensor<double>({1, 2, 6, 6}, rng);
  auto w = KernelWeights<double>::random(2, 2, ps.size(), true, rng);
  w.theta = rng.uniform(0.1, 0.9);
  const TensorD u = random_tensor<double>({1, 2, 6, 6}, rng);
  const auto b = mixed_backward(x, ps, w, u);
  chk.group("input", x.values(), b.grad_input.values(),
            [&](const Vec& p) { return inner(mixed_forward(TensorD(x.shape(), p), ps, w), u); });
  chk.group("weights", w.w, b.grad_weights, [&](const Vec& p) {
    auto v = w;
    v.w = p;
    return inner(mixed_forward(x, ps, v), u);
  });
  chk.group("center", w.center, b.grad_center, [&](const Vec& p) {
    auto v = w;
    v.center = p;
    return inner(mixed_forward(x, ps, v), u);
  });
  chk.group("theta", {w.theta}, {*b.grad_theta}, [&](const Vec& p) {
    auto v = w;
    v.theta = p[0];
    return inner(mixed_forward(x, ps, v), u);
  });
}

void check_mediconv(Rng& rng, const Checker& chk) {
  Conv2dOptions opts;
  opts.pad = PadSpec::none(2);
  const TensorD x = tie_free_tensor({1, 2, 7, 7}, rng);
  const auto w = KernelWeights<double>::random(2, 2, 9, false, rng);
  const TensorD u = random_tensor<double>({1, 2, 5, 5}, rng);
  const auto b = mediconv_backward(x, w, u, 3, opts);
  if (b.median_ties != 0) throw InternalError("gradcheck: tie-free mediconv input produced median ties");
  chk.group("input", x.values(), b.grad_input.values(),
            [&](const Vec& p) { return inner(mediconv_forward(TensorD(x.shape(), p), w, 3, opts), u); });
  chk.group("weights", w.w, b.grad_weights, [&](const Vec& p) {
    auto v = w;
    v.w = p;
    return inner(mediconv_forward(x, v, 3, opts), u);
  });
}

void check_lbc(Nonlinearity f, Rng& rng, std::uint64_t instance, const Checker& chk) {
  LbcSpec spec;
  spec.maps = 4;
  spec.nonlinearity = f;
  spec.seed = instance;
  const auto kernels = lbc_make_kernels<double>(spec, 2);
  const Conv2dOptions opts;
  TensorD x = random_tensor<double>({1, 2, 6, 6}, rng);
  if (f == Nonlinearity::relu) {
    // Keep every pre-activation away from the kink.
    constexpr int kMaxDraws = 10000;
    int draws = 0;
    for (;;) {
      const TensorD z = conv2d(x, kernels.stack(), opts.pad_for(kernels.window()));
      const auto raw = z.values();
      if (std::all_of(raw.begin(), raw.end(), [](double v) { return std::abs(v) >= 1e-3; })) break;
      if (++draws == kMaxDraws) throw InternalError("gradcheck: no kink-free LBC input found");
      x = random_tensor<double>({1, 2, 6, 6}, rng);
    }
  }
  const TensorD pooling = random_tensor<double>({2, spec.maps}, rng);
  const TensorD u = random_tensor<double>({1, 2, 6, 6}, rng);
  const auto b = lbc_backward(x, kernels, f, pooling, u, opts);
  chk.group("input", x.values(), b.grad_input.values(),
            [&](const Vec& p) { return inner(lbc_forward(TensorD(x.shape(), p), kernels, f, pooling, opts), u); });
  chk.group("pooling", pooling.values(), b.grad_weights,
            [&](const Vec& p) { return inner(lbc_forward(x, kernels, f, TensorD(pooling.shape(), p), opts), u); });
}

void check_cdc3d(Cdc3dKind kind, Rng& rng, const Checker& chk) {
  const TensorD x = random_tensor<double>({1, 2, 4, 5, 5}, rng);
  const TensorD kernel = random_tensor<double>({2, 2, 3, 3, 3}, rng);
  const double theta = rng.uniform(0.1, 0.9);
  const TensorD u = random_tensor<double>({1, 2, 4, 5, 5}, rng);
  const auto b = cdc3d_backward(x, kernel, theta, kind, u);
  chk.group("input", x.values(), b.grad_input.values(),
            [&](const Vec& p) { return inner(cdc3d_forward(TensorD(x.shape(), p), kernel, theta, kind), u); });
  chk.group("weights", kernel.values(), b.grad_weights,
            [&](const Vec& p) { return inner(cdc3d_forward(x, TensorD(kernel.shape(), p), theta, kind), u); });
  chk.group("theta", {theta}, {*b.grad_theta},
            [&](const Vec& p) { return inner(cdc3d_forward(x, kernel, p[0], kind), u); });
}

}  // namespace

std::vector<GradCheckResult> grad_check(const GradCheckConfig& cfg) {
  detail::require(cfg.tolerance > 0.0, "gradcheck tolerance must be positive");
  detail::require(cfg.step > 0.0, "finite difference step must be positive");
  detail::require(cfg.seeds >= 1, "gradcheck needs at least one seed");
  const auto& ops = gradcheck_ops();
  detail::require(std::find(ops.begin(), ops.end(), cfg.op) != ops.end(),
                  "gradcheck: unknown operator '" + cfg.op + "'");

  GroupTable table;
  const Checker chk{cfg.step, table};
  for (std::size_t s = 0; s < cfg.seeds; ++s) {
    const std::uint64_t instance = cfg.seed * 1000003ULL + s;
    Rng rng(instance);
    const std::string& op = cfg.op;
    if (op == "gcdc" || op == "ccdc-hv" || op == "ccdc-dg") {
      check_mixed(op, rng, chk);
    } else if (op == "mediconv") {
      check_mediconv(rng, chk);
    } else if (op == "lbc-sigmoid") {
      check_lbc(Nonlinearity::sigmoid, rng, instance, chk);
    } else if (op == "lbc-relu") {
      check_lbc(Nonlinearity::relu, rng, instance, chk);
    } else if (op == "cdc3d-st") {
      check_cdc3d(Cdc3dKind::st, rng, chk);
    } else if (op == "cdc3d-t") {
      check_cdc3d(Cdc3dKind::t, rng, chk);
    } else if (op == "cdc3d-tr") {
      check_cdc3d(Cdc3dKind::tr, rng, chk);
    } else {
      check_pdc(op, rng, instance, chk);
    }
  }

  std::vector<GradCheckResult> results;
  for (const auto& [group, worst] : table.rows()) {
    results.push_back({cfg.op, group, worst, cfg.tolerance, worst <= cfg.tolerance, cfg.seeds});
  }
  return results;
}

std::string gradcheck_to_json(const std::vector<GradCheckResult>& results) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : results) {
    arr.push_back({{"op", r.op},
                   {"group", r.group},
                   {"max_rel_err", r.max_rel_err},
                   {"tol", r.tol},
                   {"pass", r.pass},
                   {"instances", r.instances}});
  }
  return arr.dump(2) + "\n";
}

#define PIXDIFF_INSTANTIATE(T)                                                                                   \
  template ConvGrads<T> conv2d_backward(const Tensor<T>&, const Tensor<T>&, const PadSpec&, std::size_t,         \
                                        const Tensor<T>&);                                                       \
  template ConvGrads<T> conv3d_backward(const Tensor<T>&, const Tensor<T>&, const PadSpec&, std::size_t,         \
                                        const Tensor<T>&);                                                       \
  template GradBundle<T> pdc_backward(const Tensor<T>&, const PairSet&, const KernelWeights<T>&,                 \
                                      const Tensor<T>&, const Conv2dOptions&);                                   \
  template GradBundle<T> mixed_backward(const Tensor<T>&, const PairSet&, const KernelWeights<T>&,               \
                                        const Tensor<T>&, const Conv2dOptions&);                                 \
  template GradBundle<T> mediconv_backward(const Tensor<T>&, const KernelWeights<T>&, const Tensor<T>&,          \
                                           std::size_t, const Conv2dOptions&);                                   \
  template GradBundle<T> lbc_backward(const Tensor<T>&, const LbcKernels<T>&, Nonlinearity, const Tensor<T>&,    \
                                      const Tensor<T>&, const Conv2dOptions&);                                   \
  template GradBundle<T> cdc3d_backward(const Tensor<T>&, const Tensor<T>&, double, Cdc3dKind, const Tensor<T>&, \
                                        const Conv3dOptions&);

PIXDIFF_INSTANTIATE(float)
PIXDIFF_INSTANTIATE(double)

#undef PIXDIFF_INSTANTIATE

}  // namespace pixdiff
