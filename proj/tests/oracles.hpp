#pragma once

// Brute-force reference implementations used only by the tests. They are
// written straight from the operator definitions, index by index, and share
// no code with the library beyond the Tensor container.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "pixdiff/tensor.hpp"

namespace oracle {

using pixdiff::TensorD;

// Value of x[n, c, i, j] with i, j possibly outside the plane.
// replicate = false: zero outside; true: clamp to the border.
inline double pixel(const TensorD& x, std::size_t n, std::size_t c, long i, long j, bool replicate) {
  const long h = static_cast<long>(x.extent(2)), w = static_cast<long>(x.extent(3));
  if (i < 0 || j < 0 || i >= h || j >= w) {
    if (!replicate) return 0.0;
    i = std::clamp(i, 0L, h - 1);
    j = std::clamp(j, 0L, w - 1);
  }
  return x.at(n, c, i, j);
}

inline double voxel(const TensorD& x, std::size_t n, std::size_t c, long t, long i, long j) {
  if (t < 0 || i < 0 || j < 0 || t >= static_cast<long>(x.extent(2)) || i >= static_cast<long>(x.extent(3)) ||
      j >= static_cast<long>(x.extent(4))) {
    return 0.0;
  }
  return x.at(n, c, t, i, j);
}

// x: N x C x H x W, k: Co x C x kh x kw, symmetric zero/replicate padding p.
inline TensorD conv2d(const TensorD& x, const TensorD& k, long p, long s = 1, bool replicate = false) {
  const long kh = static_cast<long>(k.extent(2)), kw = static_cast<long>(k.extent(3));
  const long ho = (static_cast<long>(x.extent(2)) + 2 * p - kh) / s + 1;
  const long wo = (static_cast<long>(x.extent(3)) + 2 * p - kw) / s + 1;
  TensorD y({x.extent(0), k.extent(0), static_cast<std::size_t>(ho), static_cast<std::size_t>(wo)});
  for (std::size_t n = 0; n < x.extent(0); ++n)
    for (std::size_t co = 0; co < k.extent(0); ++co)
      for (long i = 0; i < ho; ++i)
        for (long j = 0; j < wo; ++j) {
          double acc = 0.0;
          for (std::size_t ci = 0; ci < x.extent(1); ++ci)
            for (long u = 0; u < kh; ++u)
              for (long v = 0; v < kw; ++v)
                acc += k.at(co, ci, u, v) * pixel(x, n, ci, i * s + u - p, j * s + v - p, replicate);
          y.at(n, co, i, j) = acc;
        }
  return y;
}

// x: N x C x T x H x W, k: Co x C x 3 x 3 x 3, zero padding p on all axes.
inline TensorD conv3d(const TensorD& x, const TensorD& k, long p, long s = 1) {
  const long kt = static_cast<long>(k.extent(2)), kh = static_cast<long>(k.extent(3)),
             kw = static_cast<long>(k.extent(4));
  const long to = (static_cast<long>(x.extent(2)) + 2 * p - kt) / s + 1;
  const long ho = (static_cast<long>(x.extent(3)) + 2 * p - kh) / s + 1;
  const long wo = (static_cast<long>(x.extent(4)) + 2 * p - kw) / s + 1;
  TensorD y({x.extent(0), k.extent(0), static_cast<std::size_t>(to), static_cast<std::size_t>(ho),
             static_cast<std::size_t>(wo)});
  for (std::size_t n = 0; n < x.extent(0); ++n)
    for (std::size_t co = 0; co < k.extent(0); ++co)
      for (long t = 0; t < to; ++t)
        for (long i = 0; i < ho; ++i)
          for (long j = 0; j < wo; ++j) {
            double acc = 0.0;
            for (std::size_t ci = 0; ci < x.extent(1); ++ci)
              for (long a = 0; a < kt; ++a)
                for (long u = 0; u < kh; ++u)
                  for (long v = 0; v < kw; ++v)
                    acc += k.at(co, ci, a, u, v) * voxel(x, n, ci, t * s + a - p, i * s + u - p, j * s + v - p);
            y.at(n, co, t, i, j) = acc;
          }
  return y;
}

// Pair given as (du, dv, du', dv').
using Pair = std::array<int, 4>;

// y[n, co, i, j] = sum_ci sum_q w[co][ci][q] * (x[a_q] - x[b_q]), same-size
// output, zero padding (window/2) unless replicate.
inline TensorD pdc(const TensorD& x, const std::vector<Pair>& pairs, const std::vector<double>& w,
                   std::size_t c_out, bool replicate = false) {
  const std::size_t c = x.extent(1), m = pairs.size();
  TensorD y({x.extent(0), c_out, x.extent(2), x.extent(3)});
  for (std::size_t n = 0; n < x.extent(0); ++n)
    for (std::size_t co = 0; co < c_out; ++co)
      for (long i = 0; i < static_cast<long>(x.extent(2)); ++i)
        for (long j = 0; j < static_cast<long>(x.extent(3)); ++j) {
          double acc = 0.0;
          for (std::size_t ci = 0; ci < c; ++ci)
            for (std::size_t q = 0; q < m; ++q) {
              const auto& p = pairs[q];
              const double a = pixel(x, n, ci, i + p[0], j + p[1], replicate);
              const double b = pixel(x, n, ci, i + p[2], j + p[3], replicate);
              acc += w[(co * c + ci) * m + q] * (a - b);
            }
          y.at(n, co, i, j) = acc;
        }
  return y;
}

// theta * sum w_i (x_i - x_c) + (1 - theta) (sum w_i x_i + w_c x_c), the
// two terms evaluated separately; neighbours are given as offsets.
inline TensorD mixed(const TensorD& x, const std::vector<std::array<int, 2>>& nbrs, const std::vector<double>& w,
                     const std::vector<double>& wc, double theta, std::size_t c_out) {
  const std::size_t c = x.extent(1), m = nbrs.size();
  TensorD y({x.extent(0), c_out, x.extent(2), x.extent(3)});
  for (std::size_t n = 0; n < x.extent(0); ++n)
    for (std::size_t co = 0; co < c_out; ++co)
      for (long i = 0; i < static_cast<long>(x.extent(2)); ++i)
        for (long j = 0; j < static_cast<long>(x.extent(3)); ++j) {
          double gradient = 0.0, intensity = 0.0;
          for (std::size_t ci = 0; ci < c; ++ci) {
            const double xc = pixel(x, n, ci, i, j, false);
            for (std::size_t q = 0; q < m; ++q) {
              const double xi = pixel(x, n, ci, i + nbrs[q][0], j + nbrs[q][1], false);
              gradient += w[(co * c + ci) * m + q] * (xi - xc);
              intensity += w[(co * c + ci) * m + q] * xi;
            }
            intensity += wc[co * c + ci] * xc;
          }
          y.at(n, co, i, j) = theta * gradient + (1.0 - theta) * intensity;
        }
  return y;
}

// Median of the k x k window by full sort, zero padding k/2.
inline TensorD window_median(const TensorD& x, long k) {
  TensorD y(x.shape());
  const long r = k / 2;
  std::vector<double> v;
  for (std::size_t n = 0; n < x.extent(0); ++n)
    for (std::size_t c = 0; c < x.extent(1); ++c)
      for (long i = 0; i < static_cast<long>(x.extent(2)); ++i)
        for (long j = 0; j < static_cast<long>(x.extent(3)); ++j) {
          v.clear();
          for (long u = -r; u <= r; ++u)
            for (long w = -r; w <= r; ++w) v.push_back(pixel(x, n, c, i + u, j + w, false));
          std::sort(v.begin(), v.end());
          y.at(n, c, i, j) = v[v.size() / 2];
        }
  return y;
}

// sum_i w_i (x_i - median) over the 3x3 window, zero padding.
inline TensorD mediconv(const TensorD& x, const std::vector<double>& w, std::size_t c_out) {
  const TensorD med = window_median(x, 3);
  const std::size_t c = x.extent(1);
  TensorD y({x.extent(0), c_out, x.extent(2), x.extent(3)});
  for (std::size_t n = 0; n < x.extent(0); ++n)
    for (std::size_t co = 0; co < c_out; ++co)
      for (long i = 0; i < static_cast<long>(x.extent(2)); ++i)
        for (long j = 0; j < static_cast<long>(x.extent(3)); ++j) {
          double acc = 0.0;
          for (std::size_t ci = 0; ci < c; ++ci)
            for (long u = 0; u < 3; ++u)
              for (long v = 0; v < 3; ++v)
                acc += w[(co * c + ci) * 9 + static_cast<std::size_t>(u * 3 + v)] *
                       (pixel(x, n, ci, i + u - 1, j + v - 1, false) - med.at(n, ci, i, j));
          y.at(n, co, i, j) = acc;
        }
  return y;
}

// 3D CDC from the definition: theta * gradient + (1 - theta) * conv3d.
// kind 0 = ST, 1 = T, 2 = TR. Zero padding 1.
inline TensorD cdc3d(const TensorD& x, const TensorD& k, double theta, int kind) {
  const TensorD vanilla = conv3d(x, k, 1);
  TensorD y(vanilla.shape());
  for (std::size_t n = 0; n < x.extent(0); ++n)
    for (std::size_t co = 0; co < k.extent(0); ++co)
      for (long t = 0; t < static_cast<long>(x.extent(2)); ++t)
        for (long i = 0; i < static_cast<long>(x.extent(3)); ++i)
          for (long j = 0; j < static_cast<long>(x.extent(4)); ++j) {
            double g = 0.0;
            for (std::size_t ci = 0; ci < x.extent(1); ++ci) {
              double ref = voxel(x, n, ci, t, i, j);
              if (kind == 2) {
                ref = (voxel(x, n, ci, t - 1, i, j) + ref + voxel(x, n, ci, t + 1, i, j)) / 3.0;
              }
              for (long a = -1; a <= 1; ++a)
                for (long u = -1; u <= 1; ++u)
                  for (long v = -1; v <= 1; ++v) {
                    const bool center = a == 0 && u == 0 && v == 0;
                    const bool in_support = kind == 0 ? !center : a != 0;
                    if (!in_support) continue;
                    g += k.at(co, ci, a + 1, u + 1, v + 1) * (voxel(x, n, ci, t + a, i + u, j + v) - ref);
                  }
            }
            y.at(n, co, t, i, j) = theta * g + (1.0 - theta) * vanilla.at(n, co, t, i, j);
          }
  return y;
}

// ---- LBP ------------------------------------------------------------------

// Integer neighbours in E, NE, N, NW, W, SW, S, SE order as (drow, dcol).
inline constexpr std::array<std::array<int, 2>, 8> kNeighbours{
    {{0, 1}, {-1, 1}, {-1, 0}, {-1, -1}, {0, -1}, {1, -1}, {1, 0}, {1, 1}}};

// r = 1, p = 8 code at (i, j) of an H x W plane, replicate border.
inline std::uint32_t lbp8(const TensorD& plane, long i, long j) {
  const long h = static_cast<long>(plane.extent(0)), w = static_cast<long>(plane.extent(1));
  auto at = [&](long a, long b) { return plane.at(std::clamp(a, 0L, h - 1), std::clamp(b, 0L, w - 1)); };
  std::uint32_t code = 0;
  for (std::size_t q = 0; q < 8; ++q) {
    if (at(i + kNeighbours[q][0], j + kNeighbours[q][1]) >= at(i, j)) code |= 1u << q;
  }
  return code;
}

inline unsigned circular_transitions(std::uint32_t code, unsigned p) {
  unsigned t = 0;
  for (unsigned i = 0; i < p; ++i) {
    const unsigned a = (code >> i) & 1u, b = (code >> ((i + 1) % p)) & 1u;
    t += a != b;
  }
  return t;
}

inline std::uint32_t rotate_right(std::uint32_t code, unsigned p, unsigned by) {
  const std::uint32_t mask = (p == 32) ? ~0u : ((1u << p) - 1u);
  by %= p;
  if (by == 0) return code & mask;
  return ((code >> by) | (code << (p - by))) & mask;
}

inline std::uint32_t min_over_rotations(std::uint32_t code, unsigned p) {
  std::uint32_t best = code;
  for (unsigned r = 1; r < p; ++r) best = std::min(best, rotate_right(code, p, r));
  return best;
}

}  // namespace oracle
